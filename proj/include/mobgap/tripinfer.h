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

struct InferredTrip {
  std::string vendor_id;
  std::string vehicle_id;
  GeoPoint origin;
  GeoPoint destination;
  Timestamp start_time{0};
  Timestamp end_time{0};
  double distance_mi{0.0};
  double duration_min{0.0};
  bool linked{true};

  double speed_mph() const { return distance_mi / (duration_min / 60.0); }

  friend bool operator==(InferredTrip const&, InferredTrip const&) = default;
};

// Builds a trip with great-circle distance and duration derived from the
// endpoints and times.
InferredTrip make_trip(std::string vendor_id, std::string vehicle_id,
                       GeoPoint origin, GeoPoint destination, Timestamp start,
                       Timestamp end);

enum class EventKind { appearance, disappearance };

struct UnlinkedEvent {
  EventKind kind{EventKind::appearance};
  GeoPoint point;
  Timestamp time{0};

  friend bool operator==(UnlinkedEvent const&, UnlinkedEvent const&) = default;
};

struct InferenceOptions {
  bool suppress_relocations{true};
  double relocation_battery_jump{0.15};  // fraction of full charge
  int max_gap_s{6 * 3600};
};

struct SuppressedMove {
  std::string vehicle_id;
  GeoPoint from;
  GeoPoint to;
  Timestamp start_time{0};
  Timestamp end_time{0};
  bool battery_jump{false};
};

struct InferenceResult {
  std::vector<InferredTrip> trips;  // ordered by (start_time, vehicle_id)
  std::vector<UnlinkedEvent> events;
  std::vector<SuppressedMove> suppressed;
};

// A vehicle leaves availability at the first polling cycle in which it is
// missing, reserved or disabled, and the trip ends at the first cycle in which
// it is available again. The first cycle of the stream only establishes the
// baseline. Throws UnsortedStream or MixedVendors.
InferenceResult infer_trips(std::span<VehicleSnapshot const> stream,
                            VendorProfile const& vendor,
                            InferenceOptions const& = {});

struct FilterPolicy {
  double min_distance_mi{0.02};
  double max_distance_mi{10.0};
  double min_duration_min{5.0};
  double max_duration_min{90.0};
  double max_speed_mph{20.0};

  void validate() const;
};

enum class RejectReason {
  below_min_distance,
  above_max_distance,
  below_min_duration,
  above_max_duration,
  above_max_speed,
};

std::string_view to_string(RejectReason);

struct RejectedTrip {
  InferredTrip trip;
  RejectReason reason;
};

struct FilterResult {
  std::vector<InferredTrip> kept;
  std::vector<RejectedTrip> rejected;
};

// First violated rule, checked in the order of RejectReason.
std::optional<RejectReason> check_filters(InferredTrip const&,
                                          FilterPolicy const&);
FilterResult apply_filters(std::span<InferredTrip const>, FilterPolicy const&);

struct LeisurePolicy {
  double min_speed_mph{8.0};
  double min_distance_mi{0.25};
  std::vector<Polygon> exclusion_zones;

  void validate() const;
};

struct LeisureResult {
  std::vector<InferredTrip> utilitarian;
  std::vector<InferredTrip> leisure;
};

bool is_leisure(InferredTrip const&, LeisurePolicy const&);
LeisureResult exclude_leisure(std::span<InferredTrip const>,
                              LeisurePolicy const&);

// vendor,vehicle,olat,olon,dlat,dlon,start_utc,end_utc,dist_mi,dur_min,linked
std::string write_trip_csv(std::span<InferredTrip const>,
                           std::string_view metadata = {});
std::vector<InferredTrip> parse_trip_csv(std::string_view);

}  // namespace mobgap
