#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mobgap {

constexpr double kEarthRadiusMi = 3958.8;
constexpr double kFeetPerMile = 5280.0;

struct GeoPoint {
  double lat{0.0};
  double lon{0.0};

  bool valid() const {
    return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }

  friend bool operator==(GeoPoint const&, GeoPoint const&) = default;
};

constexpr double feet_to_miles(double const ft) { return ft / kFeetPerMile; }

// Great-circle distance in miles (haversine).
double haversine_mi(GeoPoint const& a, GeoPoint const& b);

struct PlanarPoint {
  double x{0.0};  // miles east
  double y{0.0};  // miles north
};

// Azimuthal-equidistant projection centred on a study area. Distances and
// azimuths from the centre are exact; elsewhere distortion is negligible at
// city scale.
class LocalProjection {
public:
  LocalProjection() = default;
  explicit LocalProjection(GeoPoint center);

  PlanarPoint forward(GeoPoint const&) const;
  GeoPoint inverse(PlanarPoint const&) const;
  GeoPoint center() const { return center_; }

private:
  GeoPoint center_{};
  double sin_lat0_{0.0}, cos_lat0_{1.0};
};

// Simple polygon ring in lon/lat. The ring is stored closed.
class Polygon {
public:
  Polygon() = default;
  // Throws invalid_argument if the ring has fewer than 3 distinct vertices or
  // self-intersects.
  explicit Polygon(std::vector<GeoPoint> ring);

  bool contains(GeoPoint const&) const;
  std::vector<GeoPoint> const& ring() const { return ring_; }
  bool empty() const { return ring_.empty(); }

  GeoPoint min_corner() const;
  GeoPoint max_corner() const;

private:
  std::vector<GeoPoint> ring_;
};

bool polygon_self_intersects(std::span<GeoPoint const> closed_ring);

// Reads a polygon from GeoJSON (Polygon, Feature or FeatureCollection whose
// first feature is a Polygon; the outer ring is used) or from a CSV with
// `lat,lon` rows.
Polygon load_polygon(std::string const& path);
Polygon parse_polygon_geojson(std::string_view text);

// Fixed-cell bucket index over points, answering radius queries with exact
// great-circle distance.
class SpatialIndex {
public:
  SpatialIndex() = default;
  SpatialIndex(std::vector<GeoPoint> points, double cell_mi);

  // Indices of points with haversine distance <= radius_mi, ascending.
  std::vector<std::size_t> within(GeoPoint const& p, double radius_mi) const;

  // Distance to the nearest point, +inf when the index is empty.
  double nearest_mi(GeoPoint const& p, double search_radius_mi) const;

  std::size_t size() const { return points_.size(); }
  GeoPoint const& point(std::size_t i) const { return points_[i]; }

private:
  std::int64_t key(std::int64_t row, std::int64_t col) const {
    return row * 4'000'003LL + col;
  }

  std::vector<GeoPoint> points_;
  double cell_lat_deg_{1.0};
  double cell_lon_deg_{1.0};
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace mobgap
