#include "mobgap/supply.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fmt/format.h"
#include "nlohmann/json.hpp"

#include "mobgap/csv.h"
#include "mobgap/error.h"

namespace mobgap {

std::vector<double> transit_stop_frequencies(TransitNetwork const& n,
                                             Timestamp const window_start,
                                             int const window_s) {
  std::vector<double> freq(n.stops.size(), 0.0);
  auto const& zone = n.zone();
  auto const local = zone.to_local(window_start).date;
  auto const window_end = window_start + window_s;
  for (auto const offset : {-1, 0, 1}) {
    auto const day = add_days(local, offset);
    auto const origin = zone.service_day_origin(day);
    for (auto t = 0U; t < n.trips.size(); ++t) {
      if (!n.runs_on(t, day)) {
        continue;
      }
      auto const weight =
          n.mode_of_trip(t) == RouteMode::rail ? kRailVehicleWeight : 1;
      for (auto const& e : n.events_of(t)) {
        auto const dep = origin + e.departure;
        if (dep >= window_start && dep < window_end) {
          freq[*n.stop_index(e.stop_id)] += weight;
        }
      }
    }
  }
  return freq;
}

double transit_stop_frequency(TransitNetwork const& n,
                              std::string_view const stop_id, Date const day,
                              int const window_start_s, int const window_s) {
  auto const idx = n.stop_index(stop_id);
  if (!idx) {
    fail(errc::unknown_stop, std::string{stop_id});
  }
  auto const start = n.zone().to_utc(day, window_start_s);
  return transit_stop_frequencies(n, start, window_s)[*idx];
}

void ModeRadii::validate() const {
  if (!(transit > 0.0 && bikeshare > 0.0 && escooter > 0.0)) {
    fail(errc::invalid_argument, "radii must be positive");
  }
}

std::string_view to_string(Kernel const k) {
  return k == Kernel::quartic ? "quartic" : "uniform";
}

Kernel parse_kernel(std::string_view const s) {
  if (s == "quartic") {
    return Kernel::quartic;
  }
  if (s == "uniform") {
    return Kernel::uniform;
  }
  fail(errc::invalid_argument, fmt::format("unknown kernel '{}'", s));
}

double kernel_value(Kernel const k, double const d, double const r) {
  if (d >= r) {
    return 0.0;
  }
  if (k == Kernel::uniform) {
    return 1.0 / (std::numbers::pi * r * r);
  }
  auto const u = 1.0 - (d / r) * (d / r);
  return 3.0 / std::numbers::pi * u * u / (r * r);
}

PlanarPoint GridSpec::center(std::size_t const row,
                             std::size_t const col) const {
  return {origin.x + (static_cast<double>(col) + 0.5) * cell_mi,
          origin.y + (static_cast<double>(row) + 0.5) * cell_mi};
}

GeoPoint GridSpec::center_geo(std::size_t const row,
                              std::size_t const col) const {
  return projection.inverse(center(row, col));
}

GridSpec GridSpec::covering(Polygon const& boundary, double const cell_mi) {
  if (!(cell_mi > 0.0)) {
    fail(errc::degenerate_grid, "cell size must be positive");
  }
  auto const lo = boundary.min_corner();
  auto const hi = boundary.max_corner();
  GridSpec g;
  g.projection = LocalProjection{{(lo.lat + hi.lat) / 2.0,
                                  (lo.lon + hi.lon) / 2.0}};
  auto min_x = std::numeric_limits<double>::infinity();
  auto min_y = min_x;
  auto max_x = -min_x;
  auto max_y = -min_x;
  for (auto const& p : boundary.ring()) {
    auto const q = g.projection.forward(p);
    min_x = std::min(min_x, q.x);
    min_y = std::min(min_y, q.y);
    max_x = std::max(max_x, q.x);
    max_y = std::max(max_y, q.y);
  }
  g.cell_mi = cell_mi;
  g.origin = {min_x, min_y};
  g.ncols = static_cast<std::size_t>(std::ceil((max_x - min_x) / cell_mi - 1e-9));
  g.nrows = static_cast<std::size_t>(std::ceil((max_y - min_y) / cell_mi - 1e-9));
  g.mask.resize(g.size());
  for (auto r = 0U; r < g.nrows; ++r) {
    for (auto c = 0U; c < g.ncols; ++c) {
      g.mask[r * g.ncols + c] = boundary.contains(g.center_geo(r, c));
    }
  }
  return g;
}

GridSpec GridSpec::refined(std::size_t const factor) const {
  auto g = *this;
  g.cell_mi = cell_mi / static_cast<double>(factor);
  g.ncols = ncols * factor;
  g.nrows = nrows * factor;
  g.mask.clear();
  return g;
}

bool GridSpec::same_geometry(GridSpec const& o) const {
  return projection.center() == o.projection.center() &&
         origin.x == o.origin.x && origin.y == o.origin.y &&
         cell_mi == o.cell_mi && ncols == o.ncols && nrows == o.nrows &&
         mask == o.mask;
}

SupplyGrid kernel_density(std::span<SupplyFeature const> const features,
                          GridSpec const& spec, Kernel const kernel) {
  if (spec.size() == 0) {
    fail(errc::degenerate_grid, "grid has zero cells");
  }
  SupplyGrid g{spec, std::vector<double>(spec.size(), 0.0)};
  auto const c = spec.cell_mi;
  auto const last_col = static_cast<double>(spec.ncols) - 1.0;
  auto const last_row = static_cast<double>(spec.nrows) - 1.0;
  for (auto const& f : features) {
    if (f.weight <= 0.0) {
      continue;
    }
    auto const p = spec.projection.forward(f.point);
    auto const r = f.radius_mi;
    auto const c0 = std::max(0.0, std::ceil((p.x - r - spec.origin.x) / c - 0.5));
    auto const c1 =
        std::min(last_col, std::floor((p.x + r - spec.origin.x) / c - 0.5));
    auto const r0 = std::max(0.0, std::ceil((p.y - r - spec.origin.y) / c - 0.5));
    auto const r1 =
        std::min(last_row, std::floor((p.y + r - spec.origin.y) / c - 0.5));
    for (auto row = r0; row <= r1; ++row) {
      for (auto col = c0; col <= c1; ++col) {
        auto const ri = static_cast<std::size_t>(row);
        auto const ci = static_cast<std::size_t>(col);
        auto const q = spec.center(ri, ci);
        auto const d = std::hypot(q.x - p.x, q.y - p.y);
        g.values[ri * spec.ncols + ci] += f.weight * kernel_value(kernel, d, r);
      }
    }
  }
  return g;
}

SupplyGrid zonal_mean(SupplyGrid const& fine, GridSpec const& coarse) {
  if (coarse.ncols == 0 || fine.spec.ncols % coarse.ncols != 0 ||
      fine.spec.nrows % coarse.nrows != 0 ||
      fine.spec.ncols / coarse.ncols != fine.spec.nrows / coarse.nrows) {
    fail(errc::grid_mismatch, "fine grid is not a subdivision of the coarse grid");
  }
  auto const k = fine.spec.ncols / coarse.ncols;
  SupplyGrid out{coarse, std::vector<double>(coarse.size(), 0.0)};
  for (auto r = 0U; r < fine.spec.nrows; ++r) {
    for (auto c = 0U; c < fine.spec.ncols; ++c) {
      out.values[(r / k) * coarse.ncols + c / k] += fine.at(r, c);
    }
  }
  auto const n = static_cast<double>(k * k);
  for (auto& v : out.values) {
    v /= n;
  }
  return out;
}

std::vector<SupplyFeature> escooter_features(
    std::span<VehicleSnapshot const> const available, double const radius_mi) {
  std::vector<SupplyFeature> out;
  out.reserve(available.size());
  for (auto const& v : available) {
    out.push_back({v.point, 1.0, radius_mi});
  }
  return out;
}

std::vector<SupplyFeature> bikeshare_features(
    std::span<BikeStationStatus const> const stations, double const radius_mi) {
  std::vector<SupplyFeature> out;
  out.reserve(stations.size());
  for (auto const& s : stations) {
    out.push_back({s.point, static_cast<double>(s.bikes_available), radius_mi});
  }
  return out;
}

std::vector<SupplyFeature> transit_features(TransitNetwork const& n,
                                            std::span<double const> const freq,
                                            double const radius_mi) {
  std::vector<SupplyFeature> out;
  for (auto i = 0U; i < n.stops.size(); ++i) {
    if (n.stops[i].location_type == LocationType::stop && freq[i] > 0.0) {
      out.push_back({n.stops[i].point, freq[i], radius_mi});
    }
  }
  return out;
}

SupplySnapshot supply_snapshot(SupplyInputs const& in, Timestamp const instant,
                               ModeRadii const& radii, GridSpec const& grid,
                               SupplyOptions const& opt) {
  radii.validate();
  auto const factor = static_cast<std::size_t>(
      std::max(1.0, std::round(grid.cell_mi / opt.fine_cell_mi)));
  auto const fine = grid.refined(factor);
  auto const render = [&](std::vector<SupplyFeature> const& f) {
    return zonal_mean(kernel_density(f, fine, opt.kernel), grid);
  };

  SupplySnapshot s;
  if (in.archive == nullptr) {
    s.escooter = render({});
  } else {
    auto const available = availability_at(*in.archive, instant,
                                           opt.staleness_horizon_s, in.vendors);
    s.escooter = render(escooter_features(available, radii.escooter));
  }
  auto const stations =
      stations_at(in.stations, instant, opt.staleness_horizon_s);
  s.bikeshare = render(bikeshare_features(stations, radii.bikeshare));
  if (in.network == nullptr) {
    s.transit = render({});
  } else {
    auto const freq =
        transit_stop_frequencies(*in.network, instant, opt.transit_window_s);
    s.transit = render(transit_features(*in.network, freq, radii.transit));
  }
  return s;
}

double grid_correlation(SupplyGrid const& a, SupplyGrid const& b) {
  if (!a.spec.same_geometry(b.spec) || a.values.size() != b.values.size()) {
    fail(errc::grid_mismatch, "grids differ in geometry");
  }
  // Single pass (Welford) over co-moments.
  auto n = 0.0;
  auto mean_a = 0.0;
  auto mean_b = 0.0;
  auto m2_a = 0.0;
  auto m2_b = 0.0;
  auto co = 0.0;
  for (auto i = 0U; i < a.values.size(); ++i) {
    if (!a.spec.included(i)) {
      continue;
    }
    n += 1.0;
    auto const da = a.values[i] - mean_a;
    mean_a += da / n;
    auto const db = b.values[i] - mean_b;
    mean_b += db / n;
    m2_a += da * (a.values[i] - mean_a);
    m2_b += db * (b.values[i] - mean_b);
    co += da * (b.values[i] - mean_b);
  }
  if (n < 2.0 || m2_a <= 0.0 || m2_b <= 0.0) {
    fail(errc::zero_variance, "a grid is constant over the included cells");
  }
  return std::clamp(co / std::sqrt(m2_a * m2_b), -1.0, 1.0);
}

std::string grid_csv(SupplyGrid const& g, std::string_view const metadata) {
  std::ostringstream out;
  out << metadata << "row,col,lat,lon,value,in_boundary\n";
  for (auto r = 0U; r < g.spec.nrows; ++r) {
    for (auto c = 0U; c < g.spec.ncols; ++c) {
      auto const p = g.spec.center_geo(r, c);
      write_csv_row(out, {std::to_string(r), std::to_string(c),
                          fmt::format("{:.7f}", p.lat),
                          fmt::format("{:.7f}", p.lon), format_double(g.at(r, c)),
                          g.spec.included(r * g.spec.ncols + c) ? "1" : "0"});
    }
  }
  return out.str();
}

std::string grid_geojson(SupplyGrid const& g) {
  auto const round7 = [](double const v) {
    return std::round(v * 1e7) / 1e7;
  };
  auto features = nlohmann::json::array();
  auto const h = g.spec.cell_mi / 2.0;
  for (auto r = 0U; r < g.spec.nrows; ++r) {
    for (auto c = 0U; c < g.spec.ncols; ++c) {
      auto const q = g.spec.center(r, c);
      auto ring = nlohmann::json::array();
      for (auto const& [dx, dy] : {std::pair{-h, -h}, std::pair{h, -h},
                                  std::pair{h, h}, std::pair{-h, h},
                                  std::pair{-h, -h}}) {
        auto const p = g.spec.projection.inverse({q.x + dx, q.y + dy});
        ring.push_back({round7(p.lon), round7(p.lat)});
      }
      features.push_back(
          {{"type", "Feature"},
           {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
           {"properties",
            {{"row", r},
             {"col", c},
             {"value", g.at(r, c)},
             {"in_boundary", g.spec.included(r * g.spec.ncols + c)}}}});
    }
  }
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}
             .dump() +
         "\n";
}

}  // namespace mobgap
