#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mobgap/feeds.h"
#include "mobgap/geo.h"
#include "mobgap/pipeline.h"
#include "mobgap/tripinfer.h"

namespace mobgap::testing {

// Synthetic 3 x 3 mile city: two rail lines, two bus lines, twelve bike
// stations and a scripted two-hour one-minute GBFS stream.
inline constexpr GeoPoint kCityCenter{38.9, -77.03};
inline constexpr char const* kCityZone = "America/New_York";
inline constexpr double kHalfWidthMi = 1.5;
inline constexpr int kCycles = 120;
inline constexpr char const* kLinkedVendor = "spin";
inline constexpr char const* kDynamicVendor = "bird";

struct MiniCityOptions {
  Date date{std::chrono::year{2019}, std::chrono::month{7}, std::chrono::day{10}};
  std::uint64_t seed{1};
  bool colocated{false};  // stations at the scooter cluster centres
  int n_trips{40};
  int n_relocations{2};
};

struct MiniCity {
  MiniCityOptions options;
  LocalProjection projection;
  Polygon boundary;
  Polygon mall;  // leisure exclusion zone
  TransitNetwork network;
  std::vector<BikeStationStatus> stations;  // one row per station every 10 min
  std::vector<VehicleSnapshot> linked_stream;
  std::vector<VehicleSnapshot> dynamic_stream;
  std::vector<InferredTrip> planted;
  std::vector<InferredTrip> relocations;
  std::vector<GeoPoint> cluster_centers;
  Timestamp first_cycle{0};

  GeoPoint at(double x_mi, double y_mi) const {
    return projection.inverse({x_mi, y_mi});
  }
};

TransitNetwork minicity_network(LocalProjection const&);
MiniCity build_minicity(MiniCityOptions const& = {});

// Writes boundary.geojson, mall.geojson, gtfs.zip, stations.csv, archive/
// and config.yaml (one period per city, labels "pre", "during", ...).
AnalysisConfig write_minicity_fixture(std::filesystem::path const& dir,
                                      std::vector<MiniCity> const& periods);

// The config the fixture writer produces, before path resolution.
std::string minicity_config_yaml(std::vector<MiniCity> const& periods);

std::vector<std::string> period_labels();

// Period p uses seed p + 1 and the base date plus p weeks.
std::vector<MiniCity> minicity_periods(int n, bool colocated = false);

}  // namespace mobgap::testing
