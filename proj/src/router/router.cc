#include "mobgap/router.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fmt/format.h"

#include "mobgap/error.h"

namespace mobgap {

namespace {

constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
constexpr auto kInf = std::numeric_limits<double>::infinity();

}  // namespace

void RouterConfig::validate() const {
  if (!(walk_speed_mph > 0.0) || !(max_access_walk_mi > 0.0) ||
      !(max_transfer_walk_mi > 0.0) || max_transfers < 0 ||
      !(boarding_alighting_min >= 0.0)) {
    fail(errc::invalid_argument, "router: parameters must be positive");
  }
  if (departure_window_min < 1 || window_step_min < 1) {
    fail(errc::invalid_argument,
         "router: departure_window_min and window_step_min must be >= 1");
  }
}

std::size_t Journey::n_rides() const {
  return static_cast<std::size_t>(
      std::count_if(begin(legs), end(legs),
                    [](Leg const& l) { return l.kind == LegKind::ride; }));
}

std::optional<RouteMode> Journey::first_ride_mode() const {
  for (auto const& l : legs) {
    if (l.kind == LegKind::ride) {
      return l.mode;
    }
  }
  return std::nullopt;
}

Timetable::Timetable(TransitNetwork const& n, Date const local_date,
                     RouterConfig const& config)
    : network_{&n}, date_{local_date}, config_{config} {
  config_.validate();
  for (auto const offset : {-1, 0, 1}) {
    auto const day = add_days(local_date, offset);
    auto const origin = n.zone().service_day_origin(day);
    for (auto t = 0U; t < n.trips.size(); ++t) {
      if (!n.runs_on(t, day)) {
        continue;
      }
      auto const events = n.events_of(t);
      if (events.size() < 2) {
        continue;
      }
      auto const inst = static_cast<std::uint32_t>(instances_.size());
      instances_.push_back({t, day});
      for (auto i = 0U; i + 1 < events.size(); ++i) {
        connections_.push_back(
            {static_cast<std::uint32_t>(*n.stop_index(events[i].stop_id)),
             static_cast<std::uint32_t>(*n.stop_index(events[i + 1].stop_id)),
             origin + events[i].departure, origin + events[i + 1].arrival,
             inst});
      }
    }
  }
  std::stable_sort(begin(connections_), end(connections_),
                   [](Connection const& a, Connection const& b) {
                     return std::tie(a.dep, a.arr) < std::tie(b.dep, b.arr);
                   });

  std::vector<GeoPoint> points;
  for (auto i = 0U; i < n.stops.size(); ++i) {
    if (n.stops[i].location_type == LocationType::stop) {
      boardable_.push_back(i);
      points.push_back(n.stops[i].point);
    }
  }
  index_ = SpatialIndex{std::move(points), 0.25};

  footpath_begin_.assign(n.stops.size() + 1, 0);
  for (auto i = 0U; i < n.stops.size(); ++i) {
    footpath_begin_[i] = footpaths_.size();
    if (n.stops[i].location_type != LocationType::stop) {
      continue;
    }
    for (auto const& f :
         stops_near(n.stops[i].point, config_.max_transfer_walk_mi)) {
      footpaths_.push_back(f);
    }
  }
  footpath_begin_[n.stops.size()] = footpaths_.size();
}

std::span<Timetable::Footpath const> Timetable::footpaths(
    std::uint32_t const stop) const {
  return std::span{footpaths_}.subspan(
      footpath_begin_[stop], footpath_begin_[stop + 1] - footpath_begin_[stop]);
}

std::vector<Timetable::Footpath> Timetable::stops_near(
    GeoPoint const& p, double const radius_mi) const {
  std::vector<Footpath> out;
  for (auto const i : index_.within(p, radius_mi)) {
    out.push_back({boardable_[i],
                   config_.walk_s(haversine_mi(p, index_.point(i)))});
  }
  return out;
}

namespace {

struct Best {
  double total_s{kInf};
  std::uint32_t rides{0};
  Timestamp final_walk_start{std::numeric_limits<Timestamp>::max()};
  std::uint32_t alight_conn{kNone};
  std::uint32_t stop{kNone};
  double egress_s{0.0};

  bool improved_by(double const t, std::uint32_t const r,
                   Timestamp const walk_start) const {
    if (t != total_s) {
      return t < total_s;
    }
    if (r != rides) {
      return r < rides;
    }
    return walk_start < final_walk_start;
  }
};

struct ReadyParent {
  std::uint32_t stop{kNone};  // kNone: access walk from the origin
  double walk_s{0.0};
};

}  // namespace

std::optional<Journey> earliest_arrival(Timetable const& tt,
                                        GeoPoint const origin,
                                        GeoPoint const destination,
                                        Timestamp const depart_at) {
  auto const& cfg = tt.config();
  auto const& net = tt.network();
  auto const n_stops = net.stops.size();
  auto const k_max = static_cast<std::size_t>(cfg.max_transfers) + 1;
  auto const pen_s = 2.0 * cfg.boarding_alighting_min * 60.0;

  auto const access = tt.stops_near(origin, cfg.max_access_walk_mi);
  auto const egress = tt.stops_near(destination, cfg.max_access_walk_mi);
  if (access.empty() || egress.empty()) {
    return std::nullopt;
  }

  std::vector<double> egress_s(n_stops, kInf);
  for (auto const& e : egress) {
    egress_s[e.to] = e.walk_s;
  }

  // Seconds after depart_at.
  std::vector<std::vector<double>> ready(k_max,
                                         std::vector<double>(n_stops, kInf));
  std::vector<std::vector<ReadyParent>> ready_parent(
      k_max, std::vector<ReadyParent>(n_stops));
  std::vector<std::vector<Timestamp>> arr(
      k_max,
      std::vector<Timestamp>(n_stops, std::numeric_limits<Timestamp>::max()));
  std::vector<std::vector<std::uint32_t>> arr_conn(
      k_max, std::vector<std::uint32_t>(n_stops, kNone));
  std::vector<std::vector<std::uint32_t>> boarded(
      k_max, std::vector<std::uint32_t>(tt.n_instances(), kNone));

  for (auto const& a : access) {
    ready[0][a.to] = a.walk_s;
  }

  auto const conns = tt.connections();
  auto const first = std::lower_bound(
      begin(conns), end(conns), depart_at,
      [](Timetable::Connection const& c, Timestamp const t) { return c.dep < t; });

  Best best;
  for (auto it = first; it != end(conns); ++it) {
    auto const& c = *it;
    if (static_cast<double>(c.dep - depart_at) + pen_s > best.total_s) {
      break;
    }
    auto const ci = static_cast<std::uint32_t>(it - begin(conns));
    for (auto k = 0U; k < k_max; ++k) {
      auto& b = boarded[k][c.trip_instance];
      if (b == kNone) {
        if (!(ready[k][c.from] <= static_cast<double>(c.dep - depart_at))) {
          continue;
        }
        b = ci;
      }
      if (c.arr >= arr[k][c.to]) {
        continue;
      }
      arr[k][c.to] = c.arr;
      arr_conn[k][c.to] = ci;

      if (egress_s[c.to] != kInf) {
        auto const total = static_cast<double>(c.arr - depart_at) +
                           egress_s[c.to] + static_cast<double>(k + 1) * pen_s;
        if (best.improved_by(total, k + 1, c.arr)) {
          best = {total, k + 1, c.arr, ci, c.to, egress_s[c.to]};
        }
      }
      if (k + 1 < k_max) {
        for (auto const& f : tt.footpaths(c.to)) {
          auto const t = static_cast<double>(c.arr - depart_at) + f.walk_s;
          if (t < ready[k + 1][f.to]) {
            ready[k + 1][f.to] = t;
            ready_parent[k + 1][f.to] = {c.to, f.walk_s};
          }
        }
      }
    }
  }

  if (best.alight_conn == kNone) {
    return std::nullopt;
  }

  // Walk the parent chain back from the final alighting.
  struct Ride {
    std::uint32_t board;
    std::uint32_t alight;
    double walk_before_s;  // access or transfer walk preceding the ride
  };
  std::vector<Ride> rides;
  auto alight = best.alight_conn;
  for (auto k = static_cast<int>(best.rides) - 1; k >= 0; --k) {
    auto const& a = conns[alight];
    auto const board = boarded[k][a.trip_instance];
    auto const board_stop = conns[board].from;
    auto const& parent = ready_parent[k][board_stop];
    if (k == 0) {
      rides.push_back({board, alight, ready[0][board_stop]});
    } else {
      rides.push_back({board, alight, parent.walk_s});
      alight = arr_conn[k - 1][parent.stop];
    }
  }
  std::reverse(begin(rides), end(rides));

  Journey j;
  j.depart_at = depart_at;
  auto& comp = j.components;
  auto at = 0.0;
  for (auto i = 0U; i < rides.size(); ++i) {
    auto const& b = conns[rides[i].board];
    auto const& a = conns[rides[i].alight];
    auto const& trip = net.trips[tt.instance(b.trip_instance).trip];
    auto const walk_min = rides[i].walk_before_s / 60.0;

    Leg walk;
    walk.kind = LegKind::walk;
    walk.walk_minutes = walk_min;
    if (i != 0) {
      walk.from_stop = net.stops[conns[rides[i - 1].alight].to].stop_id;
    }
    walk.to_stop = net.stops[b.from].stop_id;
    j.legs.push_back(std::move(walk));
    (i == 0 ? comp.access_walk_min : comp.transfer_min) += walk_min;
    at += rides[i].walk_before_s;

    comp.wait_min += (static_cast<double>(b.dep - depart_at) - at) / 60.0;
    comp.ride_min += static_cast<double>(a.arr - b.dep) / 60.0;
    comp.boarding_alighting_min += 2.0 * cfg.boarding_alighting_min;
    at = static_cast<double>(a.arr - depart_at);

    Leg ride;
    ride.kind = LegKind::ride;
    ride.from_stop = net.stops[b.from].stop_id;
    ride.to_stop = net.stops[a.to].stop_id;
    ride.route_id = trip.route_id;
    ride.trip_id = trip.trip_id;
    ride.mode = net.mode_of_trip(tt.instance(b.trip_instance).trip);
    ride.board_time = b.dep;
    ride.alight_time = a.arr;
    j.legs.push_back(std::move(ride));
  }
  Leg walk;
  walk.kind = LegKind::walk;
  walk.from_stop = net.stops[best.stop].stop_id;
  walk.walk_minutes = best.egress_s / 60.0;
  j.legs.push_back(std::move(walk));
  comp.egress_walk_min = best.egress_s / 60.0;

  j.total_min = comp.sum();
  j.n_transfers = static_cast<int>(rides.size()) - 1;
  return j;
}

double median(std::vector<double> v) {
  if (v.empty()) {
    fail(errc::empty_input, "median of an empty sample");
  }
  std::sort(begin(v), end(v));
  auto const n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

WindowedResult windowed_transit_time(Timetable const& tt, GeoPoint const origin,
                                     GeoPoint const destination,
                                     Timestamp const trip_start) {
  auto const& cfg = tt.config();
  auto const steps = cfg.departure_window_min / cfg.window_step_min;
  WindowedResult r;
  for (auto k = -steps; k <= steps; ++k) {
    r.samples.push_back(earliest_arrival(
        tt, origin, destination,
        trip_start + static_cast<Timestamp>(k) * cfg.window_step_min * 60));
  }

  std::vector<Journey const*> ok;
  for (auto const& s : r.samples) {
    if (s) {
      ok.push_back(&*s);
    }
  }
  r.n_reachable = ok.size();
  if (2 * (r.samples.size() - ok.size()) > r.samples.size() || ok.empty()) {
    return r;
  }

  std::vector<double> totals;
  for (auto const* j : ok) {
    totals.push_back(j->total_min);
  }
  r.median_min = median(totals);

  auto sorted = ok;
  std::stable_sort(begin(sorted), end(sorted), [](auto const* a, auto const* b) {
    return a->total_min < b->total_min;
  });
  r.median_journey = *sorted[(sorted.size() - 1) / 2];
  auto const fastest = std::min_element(
      begin(ok), end(ok), [](auto const* a, auto const* b) {
        return std::tie(a->total_min, a->n_transfers) <
               std::tie(b->total_min, b->n_transfers);
      });
  r.best_n_transfers = (*fastest)->n_transfers;
  return r;
}

}  // namespace mobgap
