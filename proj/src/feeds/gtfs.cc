#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fmt/format.h"

#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/feeds.h"
#include "mobgap/zip.h"

namespace fs = std::filesystem;

namespace mobgap {

std::string_view to_string(RouteMode const m) {
  return m == RouteMode::rail ? "rail" : "bus";
}

RouteMode route_mode_for_type(int const t) {
  switch (t) {
    case 0:
    case 1:
    case 2:
    case 5:
    case 12: return RouteMode::rail;
    default: break;
  }
  // Extended route types: railway, urban rail and tram services.
  if ((t >= 100 && t < 200) || (t >= 400 && t < 500) ||
      (t >= 900 && t < 1000)) {
    return RouteMode::rail;
  }
  return RouteMode::bus;
}

bool Service::active_on(Date const d) const {
  if (std::binary_search(begin(removed), end(removed), d)) {
    return false;
  }
  if (std::binary_search(begin(added), end(added), d)) {
    return true;
  }
  return has_calendar && start_date <= d && d <= end_date &&
         (day_mask & (1U << weekday_monday0(d))) != 0;
}

namespace {

template <typename T>
std::optional<std::size_t> find_by_id(std::vector<T> const& v,
                                      std::string_view const id,
                                      std::string T::*field) {
  auto const it = std::lower_bound(
      begin(v), end(v), id,
      [&](T const& x, std::string_view const k) { return x.*field < k; });
  if (it == end(v) || (*it).*field != id) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - begin(v));
}

}  // namespace

void TransitNetwork::finalize() {
  std::sort(begin(stops), end(stops),
            [](auto const& a, auto const& b) { return a.stop_id < b.stop_id; });
  std::sort(begin(routes), end(routes), [](auto const& a, auto const& b) {
    return a.route_id < b.route_id;
  });
  std::sort(begin(trips), end(trips),
            [](auto const& a, auto const& b) { return a.trip_id < b.trip_id; });
  std::sort(begin(stop_times), end(stop_times),
            [](auto const& a, auto const& b) {
              return std::tie(a.trip_id, a.sequence) <
                     std::tie(b.trip_id, b.sequence);
            });
  std::sort(begin(services), end(services), [](auto const& a, auto const& b) {
    return a.service_id < b.service_id;
  });
  zone_ = TimeZone{timezone};

  trip_route_.clear();
  trip_service_.clear();
  for (auto const& t : trips) {
    auto const r = route_index(t.route_id);
    if (!r) {
      fail(errc::dangling_reference,
           fmt::format("trip {} references unknown route {}", t.trip_id,
                       t.route_id));
    }
    trip_route_.push_back(*r);
    trip_service_.push_back(
        find_by_id(services, t.service_id, &Service::service_id));
  }

  trip_event_begin_.assign(trips.size() + 1, 0);
  auto ti = std::size_t{0};
  for (auto i = 0U; i < stop_times.size(); ++i) {
    auto const& e = stop_times[i];
    while (ti < trips.size() && trips[ti].trip_id < e.trip_id) {
      trip_event_begin_[++ti] = i;
    }
    if (ti == trips.size() || trips[ti].trip_id != e.trip_id) {
      fail(errc::dangling_reference,
           fmt::format("stop time references unknown trip {}", e.trip_id));
    }
    if (!stop_index(e.stop_id)) {
      fail(errc::dangling_reference,
           fmt::format("trip {} references unknown stop {}", e.trip_id,
                       e.stop_id));
    }
  }
  while (ti < trips.size()) {
    trip_event_begin_[++ti] = stop_times.size();
  }
}

std::optional<std::size_t> TransitNetwork::stop_index(
    std::string_view const id) const {
  return find_by_id(stops, id, &Stop::stop_id);
}

std::optional<std::size_t> TransitNetwork::route_index(
    std::string_view const id) const {
  return find_by_id(routes, id, &Route::route_id);
}

std::optional<std::size_t> TransitNetwork::trip_index(
    std::string_view const id) const {
  return find_by_id(trips, id, &ScheduledTrip::trip_id);
}

std::span<StopTimeEvent const> TransitNetwork::events_of(
    std::size_t const trip) const {
  return std::span{stop_times}.subspan(
      trip_event_begin_[trip],
      trip_event_begin_[trip + 1] - trip_event_begin_[trip]);
}

RouteMode TransitNetwork::mode_of_trip(std::size_t const trip) const {
  return routes[trip_route_[trip]].mode;
}

bool TransitNetwork::runs_on(std::size_t const trip, Date const d) const {
  auto const& s = trip_service_[trip];
  return s.has_value() && services[*s].active_on(d);
}

namespace {

struct Table {
  CsvTable csv;
  std::string name;

  std::size_t required(std::string_view const col) const {
    auto const c = csv.column(col);
    if (!c) {
      fail(errc::malformed_document,
           fmt::format("{}: missing column {}", name, col));
    }
    return *c;
  }

  std::optional<std::size_t> optional(std::string_view const col) const {
    return csv.column(col);
  }
};

std::optional<Table> find_table(
    std::map<std::string, std::string> const& tables,
    std::string const& name) {
  for (auto const& [path, content] : tables) {
    if (fs::path{path}.filename() == name) {
      return Table{parse_csv(content), name};
    }
  }
  return std::nullopt;
}

Table require_table(std::map<std::string, std::string> const& tables,
                    std::string const& name) {
  auto t = find_table(tables, name);
  if (!t) {
    fail(errc::missing_table, name);
  }
  return std::move(*t);
}

std::string_view cell(std::vector<std::string> const& row,
                      std::optional<std::size_t> const col) {
  return col ? std::string_view{row[*col]} : std::string_view{};
}

}  // namespace

TransitNetwork parse_gtfs_tables(
    std::map<std::string, std::string> const& tables) {
  auto const stops_t = require_table(tables, "stops.txt");
  auto const routes_t = require_table(tables, "routes.txt");
  auto const trips_t = require_table(tables, "trips.txt");
  auto const stop_times_t = require_table(tables, "stop_times.txt");
  auto const calendar_t = require_table(tables, "calendar.txt");
  auto const calendar_dates_t = find_table(tables, "calendar_dates.txt");
  auto const agency_t = find_table(tables, "agency.txt");

  TransitNetwork n;

  if (agency_t && !agency_t->csv.rows.empty()) {
    auto const tz = agency_t->optional("agency_timezone");
    if (tz && !agency_t->csv.rows.front()[*tz].empty()) {
      n.timezone = agency_t->csv.rows.front()[*tz];
    }
  }

  {
    auto const id = stops_t.required("stop_id");
    auto const lat = stops_t.optional("stop_lat");
    auto const lon = stops_t.optional("stop_lon");
    auto const type = stops_t.optional("location_type");
    for (auto const& row : stops_t.csv.rows) {
      auto const t = cell(row, type);
      auto location = LocationType::stop;
      if (t.empty() || t == "0") {
        location = LocationType::stop;
      } else if (t == "2") {
        location = LocationType::entrance;
      } else {
        ++n.stats.ignored_locations;
        continue;
      }
      auto const p = GeoPoint{parse_double(cell(row, lat), "stop_lat"),
                              parse_double(cell(row, lon), "stop_lon")};
      if (!p.valid()) {
        fail(errc::malformed_document,
             fmt::format("stops.txt: stop {} out of range", row[id]));
      }
      n.stops.push_back({row[id], p, location});
    }
  }

  {
    auto const id = routes_t.required("route_id");
    auto const type = routes_t.required("route_type");
    for (auto const& row : routes_t.csv.rows) {
      auto const t = static_cast<int>(parse_int(row[type], "route_type"));
      n.routes.push_back({row[id], route_mode_for_type(t), t});
    }
  }

  {
    auto const id = calendar_t.required("service_id");
    auto const start = calendar_t.required("start_date");
    auto const end = calendar_t.required("end_date");
    static constexpr char const* kDays[] = {"monday", "tuesday", "wednesday",
                                            "thursday", "friday", "saturday",
                                            "sunday"};
    std::size_t day_cols[7];
    for (auto d = 0; d < 7; ++d) {
      day_cols[d] = calendar_t.required(kDays[d]);
    }
    for (auto const& row : calendar_t.csv.rows) {
      Service s;
      s.service_id = row[id];
      s.has_calendar = true;
      s.start_date = parse_date(row[start]);
      s.end_date = parse_date(row[end]);
      for (auto d = 0; d < 7; ++d) {
        if (row[day_cols[d]] == "1") {
          s.day_mask |= static_cast<std::uint8_t>(1U << d);
        }
      }
      n.services.push_back(std::move(s));
    }
  }

  if (calendar_dates_t) {
    auto const id = calendar_dates_t->required("service_id");
    auto const date = calendar_dates_t->required("date");
    auto const type = calendar_dates_t->required("exception_type");
    std::map<std::string, std::size_t> by_id;
    for (auto i = 0U; i < n.services.size(); ++i) {
      by_id[n.services[i].service_id] = i;
    }
    for (auto const& row : calendar_dates_t->csv.rows) {
      auto [it, inserted] = by_id.emplace(row[id], n.services.size());
      if (inserted) {
        Service s;
        s.service_id = row[id];
        n.services.push_back(std::move(s));
      }
      auto& s = n.services[it->second];
      auto const d = parse_date(row[date]);
      if (row[type] == "1") {
        s.added.push_back(d);
      } else if (row[type] == "2") {
        s.removed.push_back(d);
      } else {
        fail(errc::malformed_document,
             "calendar_dates.txt: bad exception_type " + row[type]);
      }
    }
    for (auto& s : n.services) {
      std::sort(begin(s.added), end(s.added));
      s.added.erase(std::unique(begin(s.added), end(s.added)), end(s.added));
      std::sort(begin(s.removed), end(s.removed));
      s.removed.erase(std::unique(begin(s.removed), end(s.removed)),
                      end(s.removed));
    }
  }

  {
    std::unordered_map<std::string, std::uint8_t> masks;
    for (auto const& s : n.services) {
      masks[s.service_id] = s.day_mask;
    }
    auto const id = trips_t.required("trip_id");
    auto const route = trips_t.required("route_id");
    auto const service = trips_t.required("service_id");
    for (auto const& row : trips_t.csv.rows) {
      auto const m = masks.find(row[service]);
      if (m == end(masks)) {
        ++n.stats.trips_without_service;
      }
      n.trips.push_back({row[id], row[route], row[service],
                         m == end(masks) ? std::uint8_t{0} : m->second});
    }
  }

  {
    auto const trip = stop_times_t.required("trip_id");
    auto const arr = stop_times_t.required("arrival_time");
    auto const dep = stop_times_t.required("departure_time");
    auto const stop = stop_times_t.required("stop_id");
    auto const seq = stop_times_t.required("stop_sequence");

    // File order is kept per trip; stop_sequence must increase along it.
    std::unordered_map<std::string, std::vector<StopTimeEvent>> by_trip;
    std::vector<std::string> trip_order;
    for (auto const& row : stop_times_t.csv.rows) {
      auto const& a = row[arr];
      auto const& d = row[dep];
      if (a.empty() && d.empty()) {
        ++n.stats.untimed_events_dropped;
        continue;
      }
      auto const at = parse_hms(a.empty() ? d : a);
      auto const dt = parse_hms(d.empty() ? a : d);
      auto [it, inserted] = by_trip.try_emplace(row[trip]);
      if (inserted) {
        trip_order.push_back(row[trip]);
      }
      it->second.push_back(
          {row[trip], row[stop], at, dt,
           static_cast<int>(parse_int(row[seq], "stop_sequence"))});
    }

    std::set<std::string> rejected;
    for (auto const& t : trip_order) {
      auto const& events = by_trip[t];
      auto ok = true;
      for (auto i = 0U; i < events.size() && ok; ++i) {
        ok = events[i].departure >= events[i].arrival;
        if (i > 0) {
          ok = ok && events[i].sequence > events[i - 1].sequence &&
               events[i].arrival >= events[i - 1].departure;
        }
      }
      if (!ok) {
        rejected.insert(t);
        continue;
      }
      for (auto const& e : events) {
        n.stop_times.push_back(e);
      }
    }
    n.stats.rejected_trips.assign(begin(rejected), end(rejected));
    std::erase_if(n.trips, [&](ScheduledTrip const& st) {
      return rejected.contains(st.trip_id);
    });
  }

  n.finalize();
  return n;
}

TransitNetwork parse_gtfs(std::string_view const archive) {
  if (!is_zip(archive)) {
    fail(errc::malformed_document, "GTFS archive is not a zip file");
  }
  return parse_gtfs_tables(read_zip(archive));
}

TransitNetwork load_gtfs(std::string const& path) {
  if (fs::is_directory(path)) {
    std::map<std::string, std::string> tables;
    for (auto const& entry : fs::directory_iterator{path}) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        tables.emplace(entry.path().filename().string(),
                       read_file(entry.path().string()));
      }
    }
    return parse_gtfs_tables(tables);
  }
  return parse_gtfs(read_file(path));
}

std::vector<std::pair<std::string, std::string>> write_gtfs_tables(
    TransitNetwork const& n) {
  std::vector<std::pair<std::string, std::string>> out;

  {
    std::ostringstream s;
    s << "agency_id,agency_name,agency_url,agency_timezone\n";
    write_csv_row(s, {"agency", "agency", "http://localhost/", n.timezone});
    out.emplace_back("agency.txt", s.str());
  }
  {
    std::ostringstream s;
    s << "stop_id,stop_lat,stop_lon,location_type\n";
    for (auto const& st : n.stops) {
      write_csv_row(s, {st.stop_id, format_double(st.point.lat),
                        format_double(st.point.lon),
                        st.location_type == LocationType::entrance ? "2" : "0"});
    }
    out.emplace_back("stops.txt", s.str());
  }
  {
    std::ostringstream s;
    s << "route_id,route_type\n";
    for (auto const& r : n.routes) {
      write_csv_row(s, {r.route_id, std::to_string(r.route_type)});
    }
    out.emplace_back("routes.txt", s.str());
  }
  {
    std::ostringstream s;
    s << "route_id,service_id,trip_id\n";
    for (auto const& t : n.trips) {
      write_csv_row(s, {t.route_id, t.service_id, t.trip_id});
    }
    out.emplace_back("trips.txt", s.str());
  }
  {
    std::ostringstream s;
    s << "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n";
    for (auto const& e : n.stop_times) {
      write_csv_row(s, {e.trip_id, format_hms(e.arrival),
                        format_hms(e.departure), e.stop_id,
                        std::to_string(e.sequence)});
    }
    out.emplace_back("stop_times.txt", s.str());
  }
  {
    std::ostringstream cal;
    std::ostringstream dates;
    cal << "service_id,monday,tuesday,wednesday,thursday,friday,saturday,"
           "sunday,start_date,end_date\n";
    dates << "service_id,date,exception_type\n";
    for (auto const& sv : n.services) {
      if (sv.has_calendar) {
        std::vector<std::string> row{sv.service_id};
        for (auto d = 0; d < 7; ++d) {
          row.push_back((sv.day_mask & (1U << d)) != 0 ? "1" : "0");
        }
        row.push_back(format_date_compact(sv.start_date));
        row.push_back(format_date_compact(sv.end_date));
        write_csv_row(cal, row);
      }
      for (auto const& d : sv.added) {
        write_csv_row(dates, {sv.service_id, format_date_compact(d), "1"});
      }
      for (auto const& d : sv.removed) {
        write_csv_row(dates, {sv.service_id, format_date_compact(d), "2"});
      }
    }
    out.emplace_back("calendar.txt", cal.str());
    out.emplace_back("calendar_dates.txt", dates.str());
  }
  return out;
}

std::string write_gtfs_zip(TransitNetwork const& n) {
  return write_zip(write_gtfs_tables(n));
}

EntranceParseResult parse_rail_entrances(std::string_view const document) {
  EntranceParseResult result;
  auto const t = parse_csv(document);
  if (t.header.empty()) {
    return result;
  }
  auto const id = t.column("entrance_id");
  auto const lat = t.column("lat");
  auto const lon = t.column("lon");
  if (!id || !lat || !lon) {
    fail(errc::malformed_document,
         "entrance CSV: header must be entrance_id,lat,lon");
  }
  std::set<std::string> seen;
  for (auto const& row : t.rows) {
    auto const p = GeoPoint{parse_double(row[*lat], "lat"),
                            parse_double(row[*lon], "lon")};
    if (!p.valid()) {
      fail(errc::malformed_document,
           "entrance CSV: coordinates out of range for " + row[*id]);
    }
    if (!seen.insert(row[*id]).second) {
      result.warnings.push_back("duplicate entrance_id " + row[*id] +
                                " ignored");
      continue;
    }
    result.entrances.push_back({row[*id], p});
  }
  return result;
}

std::vector<RailEntrance> entrances_from_network(TransitNetwork const& n) {
  std::vector<RailEntrance> out;
  for (auto const& s : n.stops) {
    if (s.location_type == LocationType::entrance) {
      out.push_back({s.stop_id, s.point});
    }
  }
  return out;
}

}  // namespace mobgap
