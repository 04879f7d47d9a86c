#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobgap/geo.h"
#include "mobgap/time_util.h"

namespace mobgap {

// ---------------------------------------------------------------------------
// GBFS vehicle and station status
// ---------------------------------------------------------------------------

enum class IdMode { consistent, dynamic };
enum class BatteryUnit { automatic, percent, fraction };

std::string_view to_string(IdMode);
IdMode parse_id_mode(std::string_view);
BatteryUnit parse_battery_unit(std::string_view);

struct VendorProfile {
  std::string vendor_id;
  IdMode id_mode{IdMode::consistent};
  int poll_interval_s{60};
  BatteryUnit battery_unit{BatteryUnit::automatic};

  // Throws invalid_argument when the id is empty or the interval < 60 s.
  void validate() const;
};

struct VehicleSnapshot {
  std::string vendor_id;
  std::string vehicle_id;
  GeoPoint point;
  Timestamp observed_at{0};
  bool is_reserved{false};
  bool is_disabled{false};
  std::optional<double> battery;  // fraction in [0, 1]

  bool available() const { return !is_reserved && !is_disabled; }

  friend bool operator==(VehicleSnapshot const&,
                         VehicleSnapshot const&) = default;
};

struct GbfsParseResult {
  std::vector<VehicleSnapshot> snapshots;
  std::size_t records{0};
  std::size_t dropped_out_of_range{0};
  std::size_t missing_field{0};
  std::size_t battery_discarded{0};
  // Set when the battery unit was detected automatically and no value in the
  // payload disambiguated percent from fraction.
  bool battery_unit_ambiguous{false};
  BatteryUnit battery_unit_used{BatteryUnit::fraction};

  std::size_t dropped() const { return dropped_out_of_range + missing_field; }
};

// Parses a free-bike-status document (optionally gzip-compressed). Accepts
// `bikes` or `vehicles` arrays and `bike_id` or `vehicle_id` keys. Throws
// MalformedDocument when the payload does not parse; bad records are skipped
// and tallied.
GbfsParseResult parse_gbfs_status(std::string_view document,
                                  VendorProfile const& vendor,
                                  Timestamp observed_at);

struct BikeStationStatus {
  std::string station_id;
  GeoPoint point;
  int bikes_available{0};
  Timestamp observed_at{0};

  friend bool operator==(BikeStationStatus const&,
                         BikeStationStatus const&) = default;
};

// Joins GBFS station_information and station_status documents.
std::vector<BikeStationStatus> parse_gbfs_stations(std::string_view information,
                                                   std::string_view status,
                                                   Timestamp observed_at);

// Station time series CSV: station_id,lat,lon,bikes_available,observed_at
std::vector<BikeStationStatus> parse_station_csv(std::string_view);
std::string write_station_csv(std::span<BikeStationStatus const>);

// Latest status per station with observed_at in [instant - horizon, instant],
// ordered by station_id.
std::vector<BikeStationStatus> stations_at(
    std::span<BikeStationStatus const>, Timestamp instant, int horizon_s);

// ---------------------------------------------------------------------------
// GTFS
// ---------------------------------------------------------------------------

enum class LocationType { stop, entrance };
enum class RouteMode { bus, rail };

std::string_view to_string(RouteMode);
RouteMode route_mode_for_type(int route_type);

struct Stop {
  std::string stop_id;
  GeoPoint point;
  LocationType location_type{LocationType::stop};

  friend bool operator==(Stop const&, Stop const&) = default;
};

struct Route {
  std::string route_id;
  RouteMode mode{RouteMode::bus};
  int route_type{3};

  friend bool operator==(Route const&, Route const&) = default;
};

struct Service {
  std::string service_id;
  bool has_calendar{false};
  std::uint8_t day_mask{0};  // bit 0 = Monday ... bit 6 = Sunday
  Date start_date{};
  Date end_date{};
  std::vector<Date> added;    // sorted
  std::vector<Date> removed;  // sorted

  bool active_on(Date) const;

  friend bool operator==(Service const&, Service const&) = default;
};

struct ScheduledTrip {
  std::string trip_id;
  std::string route_id;
  std::string service_id;
  std::uint8_t service_day_mask{0};

  friend bool operator==(ScheduledTrip const&, ScheduledTrip const&) = default;
};

struct StopTimeEvent {
  std::string trip_id;
  std::string stop_id;
  int arrival{0};    // seconds from the service day origin
  int departure{0};  // seconds from the service day origin
  int sequence{0};

  friend bool operator==(StopTimeEvent const&, StopTimeEvent const&) = default;
};

struct GtfsLoadStats {
  std::vector<std::string> rejected_trips;  // non-monotonic stop times
  std::size_t untimed_events_dropped{0};
  std::size_t ignored_locations{0};  // stations, generic nodes, boarding areas
  std::size_t trips_without_service{0};
};

// Canonically ordered: stops by stop_id, routes by route_id, trips by
// trip_id, stop-time events by (trip_id, sequence).
class TransitNetwork {
public:
  std::string timezone{"UTC"};
  std::vector<Stop> stops;
  std::vector<Route> routes;
  std::vector<ScheduledTrip> trips;
  std::vector<StopTimeEvent> stop_times;
  std::vector<Service> services;
  GtfsLoadStats stats;

  // Sorts canonically, validates references and builds lookup offsets.
  // Throws DanglingReference.
  void finalize();

  std::optional<std::size_t> stop_index(std::string_view id) const;
  std::optional<std::size_t> route_index(std::string_view id) const;
  std::optional<std::size_t> trip_index(std::string_view id) const;

  std::span<StopTimeEvent const> events_of(std::size_t trip) const;
  RouteMode mode_of_trip(std::size_t trip) const;
  bool runs_on(std::size_t trip, Date) const;

  TimeZone const& zone() const { return zone_; }

  // Field-by-field equality of the loaded data (load statistics excluded).
  friend bool operator==(TransitNetwork const& a, TransitNetwork const& b) {
    return a.timezone == b.timezone && a.stops == b.stops &&
           a.routes == b.routes && a.trips == b.trips &&
           a.stop_times == b.stop_times && a.services == b.services;
  }

private:
  std::vector<std::size_t> trip_event_begin_;  // size trips + 1
  std::vector<std::size_t> trip_route_;
  std::vector<std::optional<std::size_t>> trip_service_;
  TimeZone zone_;
};

// Parses GTFS tables keyed by file name (directories inside the archive are
// ignored). Throws MissingTable or DanglingReference; trips with
// non-monotonic stop times are rejected and listed in stats.
TransitNetwork parse_gtfs_tables(std::map<std::string, std::string> const&);

// Parses a zip archive of GTFS tables.
TransitNetwork parse_gtfs(std::string_view archive);

// Loads a GTFS zip file or a directory of .txt tables.
TransitNetwork load_gtfs(std::string const& path);

// Serializes to GTFS tables; parse_gtfs_tables(write_gtfs_tables(n)) == n.
std::vector<std::pair<std::string, std::string>> write_gtfs_tables(
    TransitNetwork const&);
std::string write_gtfs_zip(TransitNetwork const&);

// ---------------------------------------------------------------------------
// Rail entrances
// ---------------------------------------------------------------------------

struct RailEntrance {
  std::string entrance_id;
  GeoPoint point;

  friend bool operator==(RailEntrance const&, RailEntrance const&) = default;
};

struct EntranceParseResult {
  std::vector<RailEntrance> entrances;
  std::vector<std::string> warnings;
};

// CSV with header entrance_id,lat,lon. Duplicate ids keep the first row.
EntranceParseResult parse_rail_entrances(std::string_view document);

// Entrance records (location_type 2) of a network.
std::vector<RailEntrance> entrances_from_network(TransitNetwork const&);

std::string read_file(std::string const& path);

}  // namespace mobgap
