#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "mobgap/error.h"
#include "mobgap/feeds.h"
#include "mobgap/zip.h"
#include "minicity.h"

namespace fs = std::filesystem;
using namespace mobgap;

namespace {

fs::path const kFixtures{MOBGAP_FIXTURES};

VendorProfile spin() { return {.vendor_id = "spin"}; }

std::map<std::string, std::string> mini_gtfs_tables() {
  std::map<std::string, std::string> tables;
  for (auto const& e : fs::directory_iterator{kFixtures / "mini_gtfs"}) {
    tables[e.path().filename().string()] = read_file(e.path().string());
  }
  return tables;
}

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (error const& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return errc::internal_error;
}

std::string const kTwoBikes = R"({"data":{"bikes":[
  {"bike_id":"a","lat":38.9,"lon":-77.0,"is_reserved":false,"is_disabled":false},
  {"bike_id":"b","lat":38.91,"lon":-77.01,"is_reserved":false,"is_disabled":false}]}})";

}  // namespace

TEST(Gbfs, TwoValidVehicles) {
  auto const r = parse_gbfs_status(kTwoBikes, spin(), 1000);
  EXPECT_EQ(r.snapshots.size(), 2U);
  EXPECT_EQ(r.dropped(), 0U);
  EXPECT_EQ(r.snapshots[0].vendor_id, "spin");
  EXPECT_EQ(r.snapshots[1].observed_at, 1000);
}

TEST(Gbfs, OutOfRangeLatitudeIsDropped) {
  auto const doc = R"({"data":{"bikes":[
    {"bike_id":"a","lat":38.9,"lon":-77.0},
    {"bike_id":"b","lat":91.0,"lon":-77.0}]}})";
  auto const r = parse_gbfs_status(doc, spin(), 1000);
  ASSERT_EQ(r.snapshots.size(), 1U);
  EXPECT_EQ(r.snapshots[0].vehicle_id, "a");
  EXPECT_EQ(r.dropped(), 1U);
  EXPECT_EQ(r.snapshots.size() + r.dropped(), r.records);
}

TEST(Gbfs, SampleFixture) {
  auto const doc = read_file((kFixtures / "gbfs_spin_sample.json").string());
  auto const r = parse_gbfs_status(doc, spin(), 1562756400);
  ASSERT_EQ(r.snapshots.size(), 12U);
  auto const disabled = std::count_if(
      r.snapshots.begin(), r.snapshots.end(),
      [](auto const& s) { return s.is_disabled; });
  EXPECT_EQ(disabled, 1);
  EXPECT_TRUE(r.snapshots[7].is_disabled);
  EXPECT_EQ(r.snapshots[7].vehicle_id, "spin-0008");
  for (auto const& s : r.snapshots) {
    EXPECT_TRUE(s.point.valid());
    ASSERT_TRUE(s.battery.has_value());
    EXPECT_GE(*s.battery, 0.0);
    EXPECT_LE(*s.battery, 1.0);
  }
}

TEST(Gbfs, VehiclesArrayAndGzip) {
  auto const doc = R"({"data":{"vehicles":[
    {"vehicle_id":"v1","lat":38.9,"lon":-77.0,"current_range_meters":100}]}})";
  auto const r = parse_gbfs_status(gzip(doc), spin(), 5);
  ASSERT_EQ(r.snapshots.size(), 1U);
  EXPECT_EQ(r.snapshots[0].vehicle_id, "v1");
}

TEST(Gbfs, MissingFieldsAreTallied) {
  auto const doc = R"({"data":{"bikes":[{"lat":38.9,"lon":-77.0},
    {"bike_id":"x","lon":-77.0},{"bike_id":"y","lat":38.9,"lon":-77.0}]}})";
  auto const r = parse_gbfs_status(doc, spin(), 5);
  EXPECT_EQ(r.snapshots.size(), 1U);
  EXPECT_EQ(r.missing_field, 2U);
  EXPECT_EQ(r.snapshots.size() + r.dropped(), r.records);
}

TEST(Gbfs, BatteryPercentIsNormalized) {
  auto const doc = R"({"data":{"bikes":[
    {"bike_id":"a","lat":38.9,"lon":-77.0,"battery_level":85},
    {"bike_id":"b","lat":38.9,"lon":-77.0,"battery_level":40}]}})";
  auto const r = parse_gbfs_status(doc, spin(), 5);
  ASSERT_EQ(r.snapshots.size(), 2U);
  EXPECT_DOUBLE_EQ(*r.snapshots[0].battery, 0.85);
  EXPECT_EQ(r.battery_unit_used, BatteryUnit::percent);
}

TEST(Gbfs, MalformedDocumentThrows) {
  EXPECT_EQ(code_of([] { parse_gbfs_status("{not json", spin(), 5); }),
            errc::malformed_document);
}

TEST(Gbfs, VendorProfileValidation) {
  VendorProfile p{.vendor_id = "x", .poll_interval_s = 30};
  EXPECT_EQ(code_of([&] { p.validate(); }), errc::invalid_argument);
  p.poll_interval_s = 60;
  EXPECT_NO_THROW(p.validate());
}

TEST(Gtfs, MiniFixtureCounts) {
  auto const n = load_gtfs((kFixtures / "mini_gtfs").string());
  EXPECT_EQ(n.stops.size(), 4U);
  EXPECT_EQ(n.routes.size(), 1U);
  EXPECT_EQ(n.trips.size(), 2U);
  EXPECT_EQ(n.stop_times.size(), 8U);
  EXPECT_EQ(n.timezone, "America/New_York");
  EXPECT_EQ(n.routes[0].mode, RouteMode::bus);
  EXPECT_TRUE(n.stats.rejected_trips.empty());
}

TEST(Gtfs, CalendarExceptions) {
  auto const n = load_gtfs((kFixtures / "mini_gtfs").string());
  auto const t = *n.trip_index("L1_0800");
  EXPECT_TRUE(n.runs_on(t, parse_date("2019-07-03")));
  EXPECT_FALSE(n.runs_on(t, parse_date("2019-07-04")));  // removed
  EXPECT_FALSE(n.runs_on(t, parse_date("2019-07-07")));  // Sunday
  EXPECT_TRUE(n.runs_on(t, parse_date("2019-07-06")));   // added Saturday
  EXPECT_FALSE(n.runs_on(t, parse_date("2021-01-04")));  // after end_date
}

TEST(Gtfs, MissingStopTimes) {
  auto tables = mini_gtfs_tables();
  tables.erase("stop_times.txt");
  EXPECT_EQ(code_of([&] { parse_gtfs_tables(tables); }), errc::missing_table);
}

TEST(Gtfs, NonMonotonicTripIsExcluded) {
  auto tables = mini_gtfs_tables();
  tables["stop_times.txt"] +=
      "L1_0900,09:00:00,09:00:00,A,1\n"
      "L1_0900,09:06:00,09:06:00,C,3\n"
      "L1_0900,09:03:00,09:03:00,B,2\n";
  tables["trips.txt"] += "L1,WK,L1_0900,0\n";
  auto const n = parse_gtfs_tables(tables);
  EXPECT_EQ(n.trips.size(), 2U);
  EXPECT_FALSE(n.trip_index("L1_0900").has_value());
  ASSERT_EQ(n.stats.rejected_trips.size(), 1U);
  EXPECT_EQ(n.stats.rejected_trips[0], "L1_0900");
}

TEST(Gtfs, DanglingStopRejectsArchive) {
  auto tables = mini_gtfs_tables();
  tables["stop_times.txt"] += "L1_0830,08:45:00,08:45:00,ZZ,5\n";
  EXPECT_EQ(code_of([&] { parse_gtfs_tables(tables); }),
            errc::dangling_reference);
}

TEST(Gtfs, DanglingRouteRejectsArchive) {
  auto tables = mini_gtfs_tables();
  tables["trips.txt"] += "L9,WK,L9_0800,0\n";
  EXPECT_EQ(code_of([&] { parse_gtfs_tables(tables); }),
            errc::dangling_reference);
}

TEST(Gtfs, RouteTypeMapping) {
  for (int const t : {0, 1, 2, 5, 12, 100, 400}) {
    EXPECT_EQ(route_mode_for_type(t), RouteMode::rail) << t;
  }
  for (int const t : {3, 11}) {
    EXPECT_EQ(route_mode_for_type(t), RouteMode::bus) << t;
  }
}

TEST(Gtfs, ZipArchiveMatchesDirectory) {
  auto const tables = mini_gtfs_tables();
  std::vector<std::pair<std::string, std::string>> entries(tables.begin(),
                                                         tables.end());
  auto const from_zip = parse_gtfs(write_zip(entries));
  EXPECT_EQ(from_zip, load_gtfs((kFixtures / "mini_gtfs").string()));
}

TEST(Gtfs, RoundTripMiniFixture) {
  auto const n = load_gtfs((kFixtures / "mini_gtfs").string());
  auto const tables = write_gtfs_tables(n);
  EXPECT_EQ(parse_gtfs_tables({tables.begin(), tables.end()}), n);
  EXPECT_EQ(parse_gtfs(write_gtfs_zip(n)), n);
}

TEST(Gtfs, RoundTripMiniCity) {
  auto const city = mobgap::testing::build_minicity();
  auto const again = parse_gtfs(write_gtfs_zip(city.network));
  EXPECT_EQ(again, city.network);
  EXPECT_EQ(again.stops.size(), city.network.stops.size());
}

TEST(Gtfs, RowOrderDoesNotMatter) {
  auto tables = mini_gtfs_tables();
  auto const ref = parse_gtfs_tables(tables);
  std::mt19937 rng{7};
  auto shuffle_rows = [&](std::string& text, bool keep_trip_runs) {
    auto const nl = text.find('\n');
    auto out = text.substr(0, nl + 1);
    std::vector<std::string> rows;
    for (std::size_t p = nl + 1; p < text.size();) {
      auto const q = text.find('\n', p);
      rows.push_back(text.substr(p, q - p + 1));
      p = q + 1;
    }
    if (keep_trip_runs) {
      std::reverse(rows.begin(), rows.end());
      std::stable_partition(rows.begin(), rows.end(), [](auto const& r) {
        return r.starts_with("L1_0830");
      });
      for (auto it = rows.begin(); it != rows.end();) {
        auto const id = it->substr(0, it->find(','));
        auto const run = std::find_if(it, rows.end(), [&](auto const& r) {
          return !r.starts_with(id);
        });
        std::reverse(it, run);
        it = run;
      }
    } else {
      std::shuffle(rows.begin(), rows.end(), rng);
    }
    for (auto const& r : rows) {
      out += r;
    }
    text = out;
  };
  shuffle_rows(tables["stops.txt"], false);
  shuffle_rows(tables["trips.txt"], false);
  shuffle_rows(tables["stop_times.txt"], true);
  ASSERT_TRUE(tables["stop_times.txt"].find("L1_0830") <
              tables["stop_times.txt"].find("L1_0800"));
  EXPECT_EQ(parse_gtfs_tables(tables), ref);
}

TEST(Gtfs, StopTimeInvariants) {
  auto const city = mobgap::testing::build_minicity();
  auto const& n = city.network;
  for (std::size_t t = 0; t < n.trips.size(); ++t) {
    auto const ev = n.events_of(t);
    for (std::size_t i = 1; i < ev.size(); ++i) {
      EXPECT_LT(ev[i - 1].sequence, ev[i].sequence);
      EXPECT_LE(ev[i - 1].departure, ev[i].arrival);
    }
    for (auto const& e : ev) {
      EXPECT_LE(e.arrival, e.departure);
      EXPECT_TRUE(n.stop_index(e.stop_id).has_value());
    }
  }
}

TEST(Entrances, ThreeRows) {
  auto const r =
      parse_rail_entrances(read_file((kFixtures / "entrances.csv").string()));
  ASSERT_EQ(r.entrances.size(), 3U);
  EXPECT_EQ(r.entrances[0].entrance_id, "E1");
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Entrances, DuplicateIdKeepsFirst) {
  auto const r = parse_rail_entrances(
      "entrance_id,lat,lon\nE1,38.9,-77.0\nE1,38.8,-77.1\n");
  ASSERT_EQ(r.entrances.size(), 1U);
  EXPECT_DOUBLE_EQ(r.entrances[0].point.lat, 38.9);
  EXPECT_EQ(r.warnings.size(), 1U);
}

TEST(Entrances, EmptyFile) {
  EXPECT_TRUE(parse_rail_entrances("").entrances.empty());
  EXPECT_TRUE(parse_rail_entrances("entrance_id,lat,lon\n").entrances.empty());
}

TEST(Entrances, BadCoordinates) {
  EXPECT_EQ(code_of([] { parse_rail_entrances("entrance_id,lat,lon\nE,x,1\n"); }),
            errc::malformed_document);
}

TEST(Entrances, FromNetwork) {
  auto const city = mobgap::testing::build_minicity();
  auto const e = entrances_from_network(city.network);
  EXPECT_EQ(e.size(), 10U);  // one per rail stop
  for (auto const& x : e) {
    EXPECT_TRUE(x.entrance_id.ends_with("_E"));
  }
}

TEST(Stations, CsvRoundTripAndLatest) {
  std::vector<BikeStationStatus> rows{
      {"s1", {38.9, -77.0}, 3, 100},
      {"s1", {38.9, -77.0}, 5, 400},
      {"s2", {38.91, -77.0}, 0, 100},
  };
  auto const again = parse_station_csv(write_station_csv(rows));
  EXPECT_EQ(again, rows);
  auto const at = stations_at(rows, 450, 600);
  ASSERT_EQ(at.size(), 2U);
  EXPECT_EQ(at[0].bikes_available, 5);
  EXPECT_EQ(stations_at(rows, 800, 600).size(), 1U);
}

TEST(Stations, GbfsJoin) {
  auto const info = R"({"data":{"stations":[
    {"station_id":"1","lat":38.9,"lon":-77.0},
    {"station_id":"2","lat":38.91,"lon":-77.01}]}})";
  auto const status = R"({"data":{"stations":[
    {"station_id":"1","num_bikes_available":4},
    {"station_id":"2","num_bikes_available":0}]}})";
  auto const s = parse_gbfs_stations(info, status, 77);
  ASSERT_EQ(s.size(), 2U);
  EXPECT_EQ(s[0].bikes_available, 4);
  EXPECT_EQ(s[1].observed_at, 77);
}
