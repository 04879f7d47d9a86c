#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "fmt/format.h"
#include "nlohmann/json.hpp"

#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/feeds.h"
#include "mobgap/zip.h"

using json = nlohmann::json;

namespace mobgap {

std::string_view to_string(IdMode const m) {
  return m == IdMode::consistent ? "consistent" : "dynamic";
}

IdMode parse_id_mode(std::string_view const s) {
  if (s == "consistent" || s == "Consistent") {
    return IdMode::consistent;
  }
  if (s == "dynamic" || s == "Dynamic") {
    return IdMode::dynamic;
  }
  fail(errc::invalid_argument, fmt::format("unknown id_mode '{}'", s));
}

BatteryUnit parse_battery_unit(std::string_view const s) {
  if (s == "auto" || s == "automatic") {
    return BatteryUnit::automatic;
  }
  if (s == "percent") {
    return BatteryUnit::percent;
  }
  if (s == "fraction") {
    return BatteryUnit::fraction;
  }
  fail(errc::invalid_argument, fmt::format("unknown battery_unit '{}'", s));
}

void VendorProfile::validate() const {
  if (vendor_id.empty()) {
    fail(errc::invalid_argument, "vendor_id must be nonempty");
  }
  if (poll_interval_s < 60) {
    fail(errc::invalid_argument,
         fmt::format("vendor {}: poll_interval must be >= 60 s", vendor_id));
  }
}

namespace {

std::string decompress_if_needed(std::string_view const doc) {
  return is_gzip(doc) ? gunzip(doc) : std::string{doc};
}

json parse_json(std::string_view const doc, std::string_view const what) {
  auto const text = decompress_if_needed(doc);
  auto parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    fail(errc::malformed_document, fmt::format("{}: not a JSON object", what));
  }
  return parsed;
}

std::optional<std::string> get_id(json const& rec,
                                  std::initializer_list<char const*> keys) {
  for (auto const* k : keys) {
    auto const it = rec.find(k);
    if (it == rec.end()) {
      continue;
    }
    if (it->is_string() && !it->get<std::string>().empty()) {
      return it->get<std::string>();
    }
    if (it->is_number_integer()) {
      return std::to_string(it->get<std::int64_t>());
    }
  }
  return std::nullopt;
}

std::optional<double> get_number(json const& rec, char const* key) {
  auto const it = rec.find(key);
  if (it == rec.end()) {
    return std::nullopt;
  }
  if (it->is_number()) {
    return it->get<double>();
  }
  if (it->is_string()) {
    auto const& s = it->get_ref<std::string const&>();
    auto v = 0.0;
    auto const [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && p == s.data() + s.size()) {
      return v;
    }
  }
  return std::nullopt;
}

bool get_flag(json const& rec, char const* key) {
  auto const it = rec.find(key);
  if (it == rec.end() || it->is_null()) {
    return false;
  }
  if (it->is_boolean()) {
    return it->get<bool>();
  }
  if (it->is_number()) {
    return it->get<double>() != 0.0;
  }
  if (it->is_string()) {
    auto const& s = it->get_ref<std::string const&>();
    return s == "true" || s == "1" || s == "True";
  }
  return false;
}

struct RawBattery {
  double value;
  bool explicit_percent;
};

std::optional<RawBattery> get_battery(json const& rec) {
  for (auto const* k : {"battery_pct", "battery_level", "current_fuel_percent",
                        "battery", "jump_ebike_battery_level"}) {
    auto const it = rec.find(k);
    if (it == rec.end() || it->is_null()) {
      continue;
    }
    if (it->is_number()) {
      return RawBattery{it->get<double>(), false};
    }
    if (it->is_string()) {
      auto s = it->get<std::string>();
      auto const pct = !s.empty() && s.back() == '%';
      if (pct) {
        s.pop_back();
      }
      auto v = 0.0;
      auto const [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec == std::errc{} && p == s.data() + s.size()) {
        return RawBattery{v, pct};
      }
    }
  }
  return std::nullopt;
}

json const* find_vehicle_array(json const& doc) {
  for (auto const* scope : {&doc, doc.contains("data") ? &doc["data"] : nullptr}) {
    if (scope == nullptr || !scope->is_object()) {
      continue;
    }
    for (auto const* name : {"bikes", "vehicles"}) {
      auto const it = scope->find(name);
      if (it != scope->end() && it->is_array()) {
        return &*it;
      }
    }
  }
  return nullptr;
}

}  // namespace

GbfsParseResult parse_gbfs_status(std::string_view const document,
                                  VendorProfile const& vendor,
                                  Timestamp const observed_at) {
  auto const doc = parse_json(document, "GBFS status");
  auto const* vehicles = find_vehicle_array(doc);
  if (vehicles == nullptr) {
    fail(errc::malformed_document,
         "GBFS status: no bikes or vehicles array");
  }

  GbfsParseResult result;
  result.records = vehicles->size();

  struct Pending {
    VehicleSnapshot snapshot;
    std::optional<RawBattery> battery;
  };
  std::vector<Pending> pending;
  pending.reserve(vehicles->size());

  auto any_above_one = false;
  auto any_explicit_percent = false;
  auto any_battery = false;

  for (auto const& rec : *vehicles) {
    if (!rec.is_object()) {
      ++result.missing_field;
      continue;
    }
    auto const id = get_id(rec, {"bike_id", "vehicle_id", "id"});
    auto const lat = get_number(rec, "lat");
    auto const lon = get_number(rec, "lon");
    if (!id || !lat || !lon) {
      ++result.missing_field;
      continue;
    }
    auto const point = GeoPoint{*lat, *lon};
    if (!point.valid()) {
      ++result.dropped_out_of_range;
      continue;
    }
    auto battery = get_battery(rec);
    if (battery) {
      any_battery = true;
      any_above_one = any_above_one || battery->value > 1.0;
      any_explicit_percent = any_explicit_percent || battery->explicit_percent;
    }
    pending.push_back(
        {VehicleSnapshot{.vendor_id = vendor.vendor_id,
                         .vehicle_id = *id,
                         .point = point,
                         .observed_at = observed_at,
                         .is_reserved = get_flag(rec, "is_reserved"),
                         .is_disabled = get_flag(rec, "is_disabled"),
                         .battery = std::nullopt},
         battery});
  }

  auto unit = vendor.battery_unit;
  if (unit == BatteryUnit::automatic) {
    unit = (any_above_one || any_explicit_percent) ? BatteryUnit::percent
                                                   : BatteryUnit::fraction;
    result.battery_unit_ambiguous =
        any_battery && !any_above_one && !any_explicit_percent;
  }
  result.battery_unit_used = unit;

  result.snapshots.reserve(pending.size());
  for (auto& p : pending) {
    if (p.battery) {
      auto const scale =
          (unit == BatteryUnit::percent || p.battery->explicit_percent) ? 0.01
                                                                        : 1.0;
      auto const v = p.battery->value * scale;
      if (v >= 0.0 && v <= 1.0) {
        p.snapshot.battery = v;
      } else {
        ++result.battery_discarded;
      }
    }
    result.snapshots.push_back(std::move(p.snapshot));
  }
  return result;
}

std::vector<BikeStationStatus> parse_gbfs_stations(
    std::string_view const information, std::string_view const status,
    Timestamp const observed_at) {
  auto const info = parse_json(information, "GBFS station_information");
  auto const stat = parse_json(status, "GBFS station_status");
  auto const stations_of = [](json const& d, char const* what) -> json const& {
    if (!d.contains("data") || !d["data"].contains("stations") ||
        !d["data"]["stations"].is_array()) {
      fail(errc::malformed_document,
           fmt::format("{}: missing data.stations", what));
    }
    return d["data"]["stations"];
  };

  std::map<std::string, GeoPoint> where;
  for (auto const& s : stations_of(info, "station_information")) {
    auto const id = get_id(s, {"station_id"});
    auto const lat = get_number(s, "lat");
    auto const lon = get_number(s, "lon");
    if (id && lat && lon && GeoPoint{*lat, *lon}.valid()) {
      where.emplace(*id, GeoPoint{*lat, *lon});
    }
  }

  std::vector<BikeStationStatus> out;
  for (auto const& s : stations_of(stat, "station_status")) {
    auto const id = get_id(s, {"station_id"});
    auto const n = get_number(s, "num_bikes_available");
    if (!id || !n) {
      continue;
    }
    auto const it = where.find(*id);
    if (it == end(where)) {
      continue;
    }
    out.push_back({*id, it->second, std::max(0, static_cast<int>(*n)),
                   observed_at});
  }
  std::sort(begin(out), end(out), [](auto const& a, auto const& b) {
    return a.station_id < b.station_id;
  });
  return out;
}

std::vector<BikeStationStatus> parse_station_csv(std::string_view const text) {
  auto const t = parse_csv(text);
  auto const col = [&](char const* name) {
    auto const c = t.column(name);
    if (!c) {
      fail(errc::malformed_document,
           fmt::format("station CSV: missing column {}", name));
    }
    return *c;
  };
  auto const id = col("station_id");
  auto const lat = col("lat");
  auto const lon = col("lon");
  auto const bikes = col("bikes_available");
  auto const at = col("observed_at");

  std::vector<BikeStationStatus> out;
  out.reserve(t.rows.size());
  for (auto const& row : t.rows) {
    auto s = BikeStationStatus{
        row[id],
        {parse_double(row[lat], "lat"), parse_double(row[lon], "lon")},
        static_cast<int>(parse_int(row[bikes], "bikes_available")),
        parse_timestamp(row[at])};
    if (!s.point.valid() || s.bikes_available < 0) {
      fail(errc::malformed_document,
           "station CSV: invalid row for station " + s.station_id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string write_station_csv(std::span<BikeStationStatus const> const rows) {
  std::ostringstream out;
  out << "station_id,lat,lon,bikes_available,observed_at\n";
  for (auto const& s : rows) {
    write_csv_row(out, {s.station_id, format_double(s.point.lat),
                        format_double(s.point.lon),
                        std::to_string(s.bikes_available),
                        std::to_string(s.observed_at)});
  }
  return out.str();
}

std::vector<BikeStationStatus> stations_at(
    std::span<BikeStationStatus const> const series, Timestamp const instant,
    int const horizon_s) {
  std::map<std::string, BikeStationStatus const*> latest;
  for (auto const& s : series) {
    if (s.observed_at > instant || s.observed_at < instant - horizon_s) {
      continue;
    }
    auto& slot = latest[s.station_id];
    if (slot == nullptr || slot->observed_at <= s.observed_at) {
      slot = &s;
    }
  }
  std::vector<BikeStationStatus> out;
  out.reserve(latest.size());
  for (auto const& [id, s] : latest) {
    out.push_back(*s);
  }
  return out;
}

std::string read_file(std::string const& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    fail(errc::io_error, "cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mobgap
