#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobgap/feeds.h"
#include "mobgap/geo.h"
#include "mobgap/ingest.h"
#include "mobgap/time_util.h"

namespace mobgap {

constexpr int kRailVehicleWeight = 5;

// Weighted scheduled visits at `stop_id` departing in
// [window_start, window_start + window_s). Rail visits count 5, bus visits 1.
// Trips of the preceding service day running past midnight are included.
// Throws UnknownStop.
double transit_stop_frequency(TransitNetwork const&, std::string_view stop_id,
                              Date, int window_start_s, int window_s = 3600);

// Same count for every stop (indexed like network.stops), window given in UTC.
std::vector<double> transit_stop_frequencies(TransitNetwork const&,
                                             Timestamp window_start,
                                             int window_s = 3600);

struct SupplyFeature {
  GeoPoint point;
  double weight{1.0};
  double radius_mi{0.0625};
};

struct ModeRadii {
  double transit{0.25};
  double bikeshare{0.125};
  double escooter{0.0625};

  void validate() const;
};

enum class Kernel { quartic, uniform };

std::string_view to_string(Kernel);
Kernel parse_kernel(std::string_view);

// Contribution of a unit-weight feature at distance d, per square mile.
double kernel_value(Kernel, double d_mi, double radius_mi);

// Regular square grid in a local planar projection. Row 0 is the southern
// row, column 0 the western column.
struct GridSpec {
  LocalProjection projection;
  PlanarPoint origin;  // south-west corner
  double cell_mi{0.25};
  std::size_t ncols{0};
  std::size_t nrows{0};
  std::vector<bool> mask;  // cells included in statistics; empty = all

  std::size_t size() const { return ncols * nrows; }
  PlanarPoint center(std::size_t row, std::size_t col) const;
  GeoPoint center_geo(std::size_t row, std::size_t col) const;
  GeoPoint origin_geo() const { return projection.inverse(origin); }
  bool included(std::size_t i) const { return mask.empty() || mask[i]; }

  // Cells covering the polygon's bounding box; cells whose centres lie
  // outside the polygon are masked out.
  static GridSpec covering(Polygon const& boundary, double cell_mi);

  // Same extent subdivided `factor` times per axis, mask cleared.
  GridSpec refined(std::size_t factor) const;

  bool same_geometry(GridSpec const&) const;
};

struct SupplyGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, features per square mile

  double at(std::size_t row, std::size_t col) const {
    return values[row * spec.ncols + col];
  }
};

// Kernel evaluated at every cell centre. Throws DegenerateGrid.
SupplyGrid kernel_density(std::span<SupplyFeature const>, GridSpec const&,
                          Kernel = Kernel::quartic);

// Mean of each block of fine cells; `coarse` must be an exact integer
// subdivision of `fine`.
SupplyGrid zonal_mean(SupplyGrid const& fine, GridSpec const& coarse);

struct SupplyOptions {
  Kernel kernel{Kernel::quartic};
  double fine_cell_mi{0.05};
  int staleness_horizon_s{600};
  int transit_window_s{3600};
};

struct SupplyInputs {
  SnapshotArchive const* archive{nullptr};
  VendorFilter vendors;
  TransitNetwork const* network{nullptr};
  std::span<BikeStationStatus const> stations;
};

struct SupplySnapshot {
  SupplyGrid escooter;
  SupplyGrid bikeshare;
  SupplyGrid transit;
};

std::vector<SupplyFeature> escooter_features(
    std::span<VehicleSnapshot const> available, double radius_mi);
std::vector<SupplyFeature> bikeshare_features(
    std::span<BikeStationStatus const>, double radius_mi);
std::vector<SupplyFeature> transit_features(TransitNetwork const&,
                                            std::span<double const> frequency,
                                            double radius_mi);

// Fine-raster KDE of the three modes followed by zonal means on `grid`.
SupplySnapshot supply_snapshot(SupplyInputs const&, Timestamp instant,
                               ModeRadii const&, GridSpec const& grid,
                               SupplyOptions const& = {});

// Pearson correlation over the cells included by the (shared) mask. Throws
// GridMismatch or ZeroVariance.
double grid_correlation(SupplyGrid const&, SupplyGrid const&);

std::string grid_csv(SupplyGrid const&, std::string_view metadata = {});
std::string grid_geojson(SupplyGrid const&);

}  // namespace mobgap
