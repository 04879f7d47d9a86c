#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobgap/feeds.h"
#include "mobgap/geo.h"
#include "mobgap/time_util.h"

namespace mobgap {

struct RouterConfig {
  double walk_speed_mph{3.0};
  double max_access_walk_mi{0.5};
  double max_transfer_walk_mi{0.25};
  int max_transfers{3};
  double boarding_alighting_min{0.5};
  int departure_window_min{10};
  int window_step_min{1};

  void validate() const;
  double walk_s(double mi) const { return mi / walk_speed_mph * 3600.0; }
};

enum class LegKind { walk, ride };

struct Leg {
  LegKind kind{LegKind::walk};
  std::optional<std::string> from_stop;
  std::optional<std::string> to_stop;
  std::optional<std::string> route_id;
  std::optional<std::string> trip_id;
  std::optional<RouteMode> mode;
  std::optional<Timestamp> board_time;
  std::optional<Timestamp> alight_time;
  double walk_minutes{0.0};
};

struct JourneyComponents {
  double access_walk_min{0.0};
  double wait_min{0.0};
  double ride_min{0.0};
  double transfer_min{0.0};
  double egress_walk_min{0.0};
  double boarding_alighting_min{0.0};

  double sum() const {
    return access_walk_min + wait_min + ride_min + transfer_min +
           egress_walk_min + boarding_alighting_min;
  }
};

struct Journey {
  Timestamp depart_at{0};
  std::vector<Leg> legs;  // walk, ride, walk, ..., ride, walk
  JourneyComponents components;
  double total_min{0.0};  // == components.sum()
  int n_transfers{0};

  std::size_t n_rides() const;
  std::optional<RouteMode> first_ride_mode() const;
};

// Time-expanded connections of one local date and its neighbours, in
// absolute UTC seconds, plus stop-level walking transfers.
class Timetable {
public:
  struct Connection {
    std::uint32_t from;  // index into network.stops
    std::uint32_t to;
    Timestamp dep;
    Timestamp arr;
    std::uint32_t trip_instance;
  };

  struct TripInstance {
    std::uint32_t trip;  // index into network.trips
    Date service_date;
  };

  struct Footpath {
    std::uint32_t to;
    double walk_s;
  };

  Timetable(TransitNetwork const&, Date local_date, RouterConfig const&);

  TransitNetwork const& network() const { return *network_; }
  Date date() const { return date_; }
  RouterConfig const& config() const { return config_; }

  std::span<Connection const> connections() const { return connections_; }
  TripInstance const& instance(std::uint32_t i) const { return instances_[i]; }
  std::size_t n_instances() const { return instances_.size(); }
  std::span<Footpath const> footpaths(std::uint32_t stop) const;

  // Boardable stops (location_type Stop) within `radius_mi`, with walk time.
  std::vector<Footpath> stops_near(GeoPoint const&, double radius_mi) const;

private:
  TransitNetwork const* network_;
  Date date_;
  RouterConfig config_;
  std::vector<Connection> connections_;
  std::vector<TripInstance> instances_;
  std::vector<std::size_t> footpath_begin_;
  std::vector<Footpath> footpaths_;
  std::vector<std::uint32_t> boardable_;
  SpatialIndex index_;
};

// Fastest door-to-door transit journey leaving `origin` at `depart_at`, with
// at least one ride and at most max_transfers + 1. Boarding and alighting add
// a fixed penalty per ride without moving the schedule. Ties go to fewer
// transfers, then to the earlier start of the final walk. Returns nullopt
// when unreachable.
std::optional<Journey> earliest_arrival(Timetable const&, GeoPoint origin,
                                        GeoPoint destination,
                                        Timestamp depart_at);

struct WindowedResult {
  std::vector<std::optional<Journey>> samples;  // depart offsets ascending
  std::size_t n_reachable{0};
  std::optional<double> median_min;
  std::optional<Journey> median_journey;  // lower middle sample
  std::optional<int> best_n_transfers;    // of the fastest sample

  bool reachable() const { return median_min.has_value(); }
};

// Evaluates departures trip_start + k * step for k in [-w, w]. Unreachable
// samples are excluded from the median; more than half unreachable makes the
// whole result unreachable.
WindowedResult windowed_transit_time(Timetable const&, GeoPoint origin,
                                     GeoPoint destination,
                                     Timestamp trip_start);

// Median of values; even counts average the two middle values.
double median(std::vector<double> values);

}  // namespace mobgap
