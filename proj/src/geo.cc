#include "mobgap/geo.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "nlohmann/json.hpp"

#include "mobgap/csv.h"
#include "mobgap/error.h"

namespace mobgap {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMilesPerDegLat = kEarthRadiusMi * kDegToRad;

double orient(GeoPoint const& a, GeoPoint const& b, GeoPoint const& c) {
  return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
}

bool on_segment(GeoPoint const& a, GeoPoint const& b, GeoPoint const& p) {
  return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
         std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat);
}

bool segments_intersect(GeoPoint const& p1, GeoPoint const& p2,
                        GeoPoint const& q1, GeoPoint const& q2) {
  auto const d1 = orient(q1, q2, p1);
  auto const d2 = orient(q1, q2, p2);
  auto const d3 = orient(p1, p2, q1);
  auto const d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && on_segment(q1, q2, p1)) ||
         (d2 == 0 && on_segment(q1, q2, p2)) ||
         (d3 == 0 && on_segment(p1, p2, q1)) ||
         (d4 == 0 && on_segment(p1, p2, q2));
}

}  // namespace

double haversine_mi(GeoPoint const& a, GeoPoint const& b) {
  auto const lat1 = a.lat * kDegToRad;
  auto const lat2 = b.lat * kDegToRad;
  auto const dlat = lat2 - lat1;
  auto const dlon = (b.lon - a.lon) * kDegToRad;
  auto const s = std::sin(dlat / 2.0);
  auto const t = std::sin(dlon / 2.0);
  auto const h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2.0 * kEarthRadiusMi * std::asin(std::min(1.0, std::sqrt(h)));
}

LocalProjection::LocalProjection(GeoPoint const center)
    : center_{center},
      sin_lat0_{std::sin(center.lat * kDegToRad)},
      cos_lat0_{std::cos(center.lat * kDegToRad)} {}

PlanarPoint LocalProjection::forward(GeoPoint const& p) const {
  auto const lat = p.lat * kDegToRad;
  auto const dlon = (p.lon - center_.lon) * kDegToRad;
  auto const sin_lat = std::sin(lat);
  auto const cos_lat = std::cos(lat);
  auto const cos_c =
      std::clamp(sin_lat0_ * sin_lat + cos_lat0_ * cos_lat * std::cos(dlon),
                 -1.0, 1.0);
  auto const c = std::acos(cos_c);
  if (c < 1e-15) {
    return {0.0, 0.0};
  }
  auto const k = c / std::sin(c);
  return {kEarthRadiusMi * k * cos_lat * std::sin(dlon),
          kEarthRadiusMi * k *
              (cos_lat0_ * sin_lat - sin_lat0_ * cos_lat * std::cos(dlon))};
}

GeoPoint LocalProjection::inverse(PlanarPoint const& q) const {
  auto const rho = std::hypot(q.x, q.y);
  if (rho < 1e-15) {
    return center_;
  }
  auto const c = rho / kEarthRadiusMi;
  auto const sin_c = std::sin(c);
  auto const cos_c = std::cos(c);
  auto const lat =
      std::asin(cos_c * sin_lat0_ + q.y * sin_c * cos_lat0_ / rho);
  auto const lon =
      center_.lon * kDegToRad +
      std::atan2(q.x * sin_c, rho * cos_lat0_ * cos_c - q.y * sin_lat0_ * sin_c);
  return {lat / kDegToRad, lon / kDegToRad};
}

bool polygon_self_intersects(std::span<GeoPoint const> ring) {
  auto const n = ring.size() - 1;  // number of edges in a closed ring
  for (auto i = 0U; i < n; ++i) {
    for (auto j = i + 1; j < n; ++j) {
      auto const adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        continue;
      }
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) {
        return true;
      }
    }
  }
  return false;
}

Polygon::Polygon(std::vector<GeoPoint> ring) : ring_{std::move(ring)} {
  if (!ring_.empty() && ring_.front() != ring_.back()) {
    ring_.push_back(ring_.front());
  }
  if (ring_.size() < 4) {
    fail(errc::invalid_argument, "polygon needs at least 3 distinct vertices");
  }
  for (auto const& p : ring_) {
    if (!p.valid()) {
      fail(errc::invalid_argument, "polygon vertex out of range");
    }
  }
  if (polygon_self_intersects(ring_)) {
    fail(errc::invalid_argument, "polygon ring self-intersects");
  }
}

bool Polygon::contains(GeoPoint const& p) const {
  auto inside = false;
  for (auto i = 0U, j = static_cast<unsigned>(ring_.size() - 2);
       i + 1 < ring_.size(); j = i++) {
    auto const& a = ring_[i];
    auto const& b = ring_[j];
    if (((a.lat > p.lat) != (b.lat > p.lat)) &&
        (p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon)) {
      inside = !inside;
    }
  }
  return inside;
}

GeoPoint Polygon::min_corner() const {
  GeoPoint m{90.0, 180.0};
  for (auto const& p : ring_) {
    m.lat = std::min(m.lat, p.lat);
    m.lon = std::min(m.lon, p.lon);
  }
  return m;
}

GeoPoint Polygon::max_corner() const {
  GeoPoint m{-90.0, -180.0};
  for (auto const& p : ring_) {
    m.lat = std::max(m.lat, p.lat);
    m.lon = std::max(m.lon, p.lon);
  }
  return m;
}

Polygon parse_polygon_geojson(std::string_view const text) {
  auto const doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    fail(errc::malformed_document, "polygon GeoJSON does not parse");
  }
  auto const* geom = &doc;
  if (doc.value("type", "") == "FeatureCollection") {
    if (!doc.contains("features") || doc["features"].empty()) {
      fail(errc::malformed_document, "polygon FeatureCollection is empty");
    }
    geom = &doc["features"][0]["geometry"];
  } else if (doc.value("type", "") == "Feature") {
    geom = &doc["geometry"];
  }
  if (!geom->is_object() || geom->value("type", "") != "Polygon" ||
      !geom->contains("coordinates") || (*geom)["coordinates"].empty()) {
    fail(errc::malformed_document, "expected a GeoJSON Polygon");
  }
  std::vector<GeoPoint> ring;
  for (auto const& c : (*geom)["coordinates"][0]) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() ||
        !c[1].is_number()) {
      fail(errc::malformed_document, "bad polygon coordinate");
    }
    ring.push_back({c[1].get<double>(), c[0].get<double>()});
  }
  return Polygon{std::move(ring)};
}

Polygon load_polygon(std::string const& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    fail(errc::io_error, "cannot open polygon file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  auto const text = ss.str();
  auto const first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return parse_polygon_geojson(text);
  }
  auto const table = parse_csv(text);
  auto const lat = table.column("lat");
  auto const lon = table.column("lon");
  if (!lat || !lon) {
    fail(errc::malformed_document, "polygon CSV needs lat,lon columns");
  }
  std::vector<GeoPoint> ring;
  for (auto const& row : table.rows) {
    ring.push_back({parse_double(row.at(*lat), "lat"),
                    parse_double(row.at(*lon), "lon")});
  }
  return Polygon{std::move(ring)};
}

SpatialIndex::SpatialIndex(std::vector<GeoPoint> points, double const cell_mi)
    : points_{std::move(points)} {
  auto max_abs_lat = 0.0;
  for (auto const& p : points_) {
    max_abs_lat = std::max(max_abs_lat, std::abs(p.lat));
  }
  cell_lat_deg_ = cell_mi / kMilesPerDegLat;
  cell_lon_deg_ =
      cell_mi / (kMilesPerDegLat *
                 std::max(0.01, std::cos(std::min(89.0, max_abs_lat) *
                                         kDegToRad)));
  for (auto i = 0U; i < points_.size(); ++i) {
    auto const row =
        static_cast<std::int64_t>(std::floor(points_[i].lat / cell_lat_deg_));
    auto const col =
        static_cast<std::int64_t>(std::floor(points_[i].lon / cell_lon_deg_));
    buckets_[key(row, col)].push_back(i);
  }
}

std::vector<std::size_t> SpatialIndex::within(GeoPoint const& p,
                                              double const radius_mi) const {
  std::vector<std::size_t> out;
  if (points_.empty()) {
    return out;
  }
  auto const dlat = radius_mi / kMilesPerDegLat * 1.01 + 1e-12;
  auto const lat_hi = std::min(89.0, std::abs(p.lat) + dlat);
  auto const dlon =
      radius_mi /
          (kMilesPerDegLat * std::max(0.01, std::cos(lat_hi * kDegToRad))) *
          1.01 +
      1e-12;
  auto const r0 = static_cast<std::int64_t>(std::floor((p.lat - dlat) / cell_lat_deg_));
  auto const r1 = static_cast<std::int64_t>(std::floor((p.lat + dlat) / cell_lat_deg_));
  auto const c0 = static_cast<std::int64_t>(std::floor((p.lon - dlon) / cell_lon_deg_));
  auto const c1 = static_cast<std::int64_t>(std::floor((p.lon + dlon) / cell_lon_deg_));
  for (auto r = r0; r <= r1; ++r) {
    for (auto c = c0; c <= c1; ++c) {
      auto const it = buckets_.find(key(r, c));
      if (it == end(buckets_)) {
        continue;
      }
      for (auto const i : it->second) {
        if (haversine_mi(p, points_[i]) <= radius_mi) {
          out.push_back(i);
        }
      }
    }
  }
  std::sort(begin(out), end(out));
  return out;
}

double SpatialIndex::nearest_mi(GeoPoint const& p,
                                double const search_radius_mi) const {
  auto best = std::numeric_limits<double>::infinity();
  for (auto const i : within(p, search_radius_mi)) {
    best = std::min(best, haversine_mi(p, points_[i]));
  }
  return best;
}

}  // namespace mobgap
