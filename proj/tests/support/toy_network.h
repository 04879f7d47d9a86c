#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mobgap/feeds.h"
#include "mobgap/geo.h"
#include "mobgap/time_util.h"

namespace mobgap::testing {

// Hand-built schedules with a single every-day service.
class ToyNetwork {
public:
  explicit ToyNetwork(std::string zone = "America/New_York") {
    n_.timezone = std::move(zone);
    Service s;
    s.service_id = "ALL";
    s.has_calendar = true;
    s.day_mask = 0x7f;
    s.start_date = parse_date("2019-01-01");
    s.end_date = parse_date("2020-12-31");
    n_.services.push_back(s);
  }

  // A service running on `day` only.
  ToyNetwork& service_on(std::string id, Date const day) {
    Service s;
    s.service_id = std::move(id);
    s.added.push_back(day);
    n_.services.push_back(s);
    return *this;
  }

  ToyNetwork& stop(std::string id, GeoPoint p,
                   LocationType t = LocationType::stop) {
    n_.stops.push_back({std::move(id), p, t});
    return *this;
  }

  ToyNetwork& route(std::string id, int route_type = 3) {
    n_.routes.push_back({std::move(id), route_mode_for_type(route_type),
                         route_type});
    return *this;
  }

  // Times are service-day arrival seconds; intermediate stops depart
  // `dwell_s` later.
  ToyNetwork& trip(std::string route, std::string id,
                   std::vector<std::pair<std::string, int>> const& calls,
                   int const dwell_s = 0, std::string service = "ALL") {
    n_.trips.push_back({id, std::move(route), std::move(service), 0x7f});
    auto seq = 1;
    for (auto i = 0U; i < calls.size(); ++i) {
      auto const& [stop, t] = calls[i];
      auto const dwell = i == 0 || i + 1 == calls.size() ? 0 : dwell_s;
      n_.stop_times.push_back({id, stop, t, t + dwell, seq++});
    }
    return *this;
  }

  TransitNetwork build() {
    auto n = n_;
    n.finalize();
    return n;
  }

private:
  TransitNetwork n_;
};

// Up to `max_stops` stops scattered over a 1.6 x 1.6 mile square around
// `center`, up to `max_routes` routes with fixed segment times (so no
// overtaking) and departures between 06:30 and 10:30.
inline TransitNetwork random_toy_network(std::mt19937_64& rng,
                                         GeoPoint const center,
                                         int const max_stops = 8,
                                         int const max_routes = 4) {
  std::uniform_real_distribution<double> pos{-0.8, 0.8};
  std::uniform_int_distribution<int> n_stops_d{3, max_stops};
  std::uniform_int_distribution<int> n_routes_d{1, max_routes};
  std::uniform_int_distribution<int> seg_d{60, 480};
  std::uniform_int_distribution<int> headway_d{300, 1500};
  std::uniform_int_distribution<int> offset_d{0, 900};
  std::bernoulli_distribution rail{0.3};

  LocalProjection const proj{center};
  ToyNetwork t;
  auto const n_stops = n_stops_d(rng);
  std::vector<std::string> ids;
  for (int i = 0; i < n_stops; ++i) {
    ids.push_back("S" + std::to_string(i));
    t.stop(ids.back(), proj.inverse({pos(rng), pos(rng)}));
  }
  auto const n_routes = n_routes_d(rng);
  for (int r = 0; r < n_routes; ++r) {
    auto const rid = "R" + std::to_string(r);
    t.route(rid, rail(rng) ? 1 : 3);
    auto order = ids;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> len_d{2, n_stops};
    order.resize(static_cast<std::size_t>(len_d(rng)));
    std::vector<int> segs;
    for (std::size_t i = 1; i < order.size(); ++i) {
      segs.push_back(seg_d(rng));
    }
    auto const headway = headway_d(rng);
    auto const dwell = rail(rng) ? 30 : 0;
    for (int dep = 6 * 3600 + 1800 + offset_d(rng), k = 0; dep < 10 * 3600 + 1800;
         dep += headway, ++k) {
      std::vector<std::pair<std::string, int>> calls;
      auto at = dep;
      for (std::size_t i = 0; i < order.size(); ++i) {
        calls.emplace_back(order[i], at);
        if (i < segs.size()) {
          at += segs[i] + (i == 0 ? 0 : dwell);
        }
      }
      t.trip(rid, rid + "_" + std::to_string(k), calls, dwell);
    }
  }
  return t.build();
}

}  // namespace mobgap::testing
