#include "mobgap/tripinfer.h"

#include <algorithm>
#include <map>
#include <sstream>

#include "fmt/format.h"

#include "mobgap/csv.h"
#include "mobgap/error.h"

namespace mobgap {

InferredTrip make_trip(std::string vendor_id, std::string vehicle_id,
                       GeoPoint const origin, GeoPoint const destination,
                       Timestamp const start, Timestamp const end) {
  return InferredTrip{.vendor_id = std::move(vendor_id),
                      .vehicle_id = std::move(vehicle_id),
                      .origin = origin,
                      .destination = destination,
                      .start_time = start,
                      .end_time = end,
                      .distance_mi = haversine_mi(origin, destination),
                      .duration_min = static_cast<double>(end - start) / 60.0,
                      .linked = true};
}

namespace {

struct VehicleState {
  bool present{false};
  GeoPoint last;
  std::optional<double> battery;

  bool has_origin{false};
  Timestamp absent_since{0};
  GeoPoint origin;
  std::optional<double> origin_battery;
};

}  // namespace

InferenceResult infer_trips(std::span<VehicleSnapshot const> const stream,
                            VendorProfile const& vendor,
                            InferenceOptions const& opt) {
  for (auto i = 0U; i < stream.size(); ++i) {
    if (stream[i].vendor_id != vendor.vendor_id) {
      fail(errc::mixed_vendors,
           fmt::format("snapshot of vendor '{}' in a '{}' stream",
                       stream[i].vendor_id, vendor.vendor_id));
    }
    if (i != 0 && stream[i].observed_at < stream[i - 1].observed_at) {
      fail(errc::unsorted_stream,
           fmt::format("observed_at {} follows {}", stream[i].observed_at,
                       stream[i - 1].observed_at));
    }
  }

  auto const dynamic = vendor.id_mode == IdMode::dynamic;
  InferenceResult result;
  std::map<std::string, VehicleState> state;
  std::map<std::string, VehicleSnapshot const*> cycle;

  auto first_cycle = true;
  for (auto begin = 0U; begin < stream.size();) {
    auto const t = stream[begin].observed_at;
    auto end = begin;
    cycle.clear();
    for (; end < stream.size() && stream[end].observed_at == t; ++end) {
      if (stream[end].available()) {
        cycle[stream[end].vehicle_id] = &stream[end];
      }
    }

    if (first_cycle) {
      for (auto const& [id, s] : cycle) {
        auto& v = state[id];
        v.present = true;
        v.last = s->point;
        v.battery = s->battery;
      }
      first_cycle = false;
      begin = end;
      continue;
    }

    for (auto& [id, v] : state) {
      if (!v.present || cycle.contains(id)) {
        continue;
      }
      v.present = false;
      v.has_origin = true;
      v.absent_since = t;
      v.origin = v.last;
      v.origin_battery = v.battery;
      if (dynamic) {
        result.events.push_back({EventKind::disappearance, v.last, t});
      }
    }

    for (auto const& [id, s] : cycle) {
      auto& v = state[id];
      if (!v.present) {
        if (dynamic) {
          result.events.push_back({EventKind::appearance, s->point, t});
        } else if (v.has_origin) {
          auto const jump = v.origin_battery && s->battery &&
                            *s->battery - *v.origin_battery >
                                opt.relocation_battery_jump;
          auto const long_gap = t - v.absent_since > opt.max_gap_s;
          if (opt.suppress_relocations && (jump || long_gap)) {
            result.suppressed.push_back({id, v.origin, s->point,
                                         v.absent_since, t, jump});
          } else {
            result.trips.push_back(make_trip(vendor.vendor_id, id, v.origin,
                                             s->point, v.absent_since, t));
          }
        }
      }
      v.present = true;
      v.has_origin = false;
      v.last = s->point;
      v.battery = s->battery;
    }
    begin = end;
  }

  std::stable_sort(begin(result.trips), end(result.trips),
                   [](auto const& a, auto const& b) {
                     return std::tie(a.start_time, a.vehicle_id) <
                            std::tie(b.start_time, b.vehicle_id);
                   });
  return result;
}

void FilterPolicy::validate() const {
  if (!(min_distance_mi < max_distance_mi)) {
    fail(errc::invalid_argument, "filter: min_distance_mi >= max_distance_mi");
  }
  if (!(min_duration_min < max_duration_min)) {
    fail(errc::invalid_argument, "filter: min_duration_min >= max_duration_min");
  }
  if (!(max_speed_mph > 0.0)) {
    fail(errc::invalid_argument, "filter: max_speed_mph must be > 0");
  }
}

std::string_view to_string(RejectReason const r) {
  switch (r) {
    case RejectReason::below_min_distance: return "below_min_distance";
    case RejectReason::above_max_distance: return "above_max_distance";
    case RejectReason::below_min_duration: return "below_min_duration";
    case RejectReason::above_max_duration: return "above_max_duration";
    case RejectReason::above_max_speed: return "above_max_speed";
  }
  return "?";
}

std::optional<RejectReason> check_filters(InferredTrip const& t,
                                          FilterPolicy const& p) {
  if (t.distance_mi < p.min_distance_mi) {
    return RejectReason::below_min_distance;
  }
  if (t.distance_mi > p.max_distance_mi) {
    return RejectReason::above_max_distance;
  }
  if (t.duration_min < p.min_duration_min) {
    return RejectReason::below_min_duration;
  }
  if (t.duration_min > p.max_duration_min) {
    return RejectReason::above_max_duration;
  }
  if (t.speed_mph() > p.max_speed_mph) {
    return RejectReason::above_max_speed;
  }
  return std::nullopt;
}

FilterResult apply_filters(std::span<InferredTrip const> const trips,
                           FilterPolicy const& p) {
  FilterResult r;
  for (auto const& t : trips) {
    if (auto const reason = check_filters(t, p)) {
      r.rejected.push_back({t, *reason});
    } else {
      r.kept.push_back(t);
    }
  }
  return r;
}

void LeisurePolicy::validate() const {
  if (min_speed_mph < 0.0 || min_distance_mi < 0.0) {
    fail(errc::invalid_argument, "leisure: thresholds must be >= 0");
  }
  for (auto const& z : exclusion_zones) {
    if (z.empty()) {
      fail(errc::invalid_argument, "leisure: empty exclusion zone");
    }
  }
}

bool is_leisure(InferredTrip const& t, LeisurePolicy const& p) {
  if (t.speed_mph() < p.min_speed_mph || t.distance_mi < p.min_distance_mi) {
    return true;
  }
  return std::any_of(begin(p.exclusion_zones), end(p.exclusion_zones),
                     [&](Polygon const& z) {
                       return z.contains(t.origin) || z.contains(t.destination);
                     });
}

LeisureResult exclude_leisure(std::span<InferredTrip const> const trips,
                              LeisurePolicy const& p) {
  LeisureResult r;
  for (auto const& t : trips) {
    (is_leisure(t, p) ? r.leisure : r.utilitarian).push_back(t);
  }
  return r;
}

std::string write_trip_csv(std::span<InferredTrip const> const trips,
                           std::string_view const metadata) {
  std::ostringstream out;
  out << metadata;
  out << "vendor,vehicle,olat,olon,dlat,dlon,start_utc,end_utc,dist_mi,dur_min,"
         "linked\n";
  for (auto const& t : trips) {
    write_csv_row(out, {t.vendor_id, t.vehicle_id, format_double(t.origin.lat),
                        format_double(t.origin.lon),
                        format_double(t.destination.lat),
                        format_double(t.destination.lon),
                        std::to_string(t.start_time),
                        std::to_string(t.end_time),
                        format_double(t.distance_mi),
                        format_double(t.duration_min),
                        t.linked ? "true" : "false"});
  }
  return out.str();
}

std::vector<InferredTrip> parse_trip_csv(std::string_view const text) {
  auto const t = parse_csv(text);
  auto const col = [&](char const* name) {
    auto const c = t.column(name);
    if (!c) {
      fail(errc::malformed_document,
           fmt::format("trip CSV: missing column {}", name));
    }
    return *c;
  };
  auto const vendor = col("vendor");
  auto const vehicle = col("vehicle");
  auto const olat = col("olat");
  auto const olon = col("olon");
  auto const dlat = col("dlat");
  auto const dlon = col("dlon");
  auto const start = col("start_utc");
  auto const end = col("end_utc");
  auto const linked = t.column("linked");

  std::vector<InferredTrip> out;
  out.reserve(t.rows.size());
  for (auto const& row : t.rows) {
    auto trip = make_trip(
        row[vendor], row[vehicle],
        {parse_double(row[olat], "olat"), parse_double(row[olon], "olon")},
        {parse_double(row[dlat], "dlat"), parse_double(row[dlon], "dlon")},
        parse_timestamp(row[start]), parse_timestamp(row[end]));
    if (!trip.origin.valid() || !trip.destination.valid() ||
        trip.end_time <= trip.start_time) {
      fail(errc::malformed_document,
           fmt::format("trip CSV: invalid trip for vehicle {}", row[vehicle]));
    }
    trip.linked = !linked || row[*linked] != "false";
    out.push_back(std::move(trip));
  }
  return out;
}

}  // namespace mobgap
