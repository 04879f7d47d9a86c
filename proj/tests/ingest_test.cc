#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mobgap/error.h"
#include "mobgap/ingest.h"
#include "test_util.h"

namespace fs = std::filesystem;
using namespace mobgap;
using mobgap::testing::TempDir;

namespace {

constexpr Timestamp kT0 = 1562756400;  // 2019-07-10 11:00 UTC

VehicleSnapshot snap(std::string vendor, std::string id, Timestamp t,
                     double lat = 38.9, bool disabled = false) {
  return {.vendor_id = std::move(vendor),
          .vehicle_id = std::move(id),
          .point = {lat, -77.0},
          .observed_at = t,
          .is_disabled = disabled};
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

std::string bikes_doc(int n) {
  std::string s = R"({"data":{"bikes":[)";
  for (int i = 0; i < n; ++i) {
    s += (i ? "," : "") + std::string{R"({"bike_id":"b)"} + std::to_string(i) +
         R"(","lat":38.9,"lon":-77.0})";
  }
  return s + "]}}";
}

PollEndpoint endpoint(std::string vendor, int interval, std::string locator) {
  PollEndpoint e;
  e.vendor.vendor_id = std::move(vendor);
  e.vendor.poll_interval_s = interval;
  e.locator = std::move(locator);
  return e;
}

std::map<std::string, std::string> read_tree(fs::path const& root) {
  std::map<std::string, std::string> out;
  for (auto const& e : fs::recursive_directory_iterator{root}) {
    if (e.is_regular_file()) {
      out[fs::relative(e.path(), root).string()] =
          read_file(e.path().string());
    }
  }
  return out;
}

// Three cycles, two vendors, interleaved.
void fill_three_cycles(SnapshotArchive& a) {
  for (int c = 0; c < 3; ++c) {
    auto const t = kT0 + 60 * c;
    a.append(std::vector{snap("spin", "s1", t), snap("spin", "s2", t)});
    a.append(std::vector{snap("bird", "b1", t + 30)});
  }
}

}  // namespace

TEST(Archive, ReplayAllInTimeOrder) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  fill_three_cycles(a);
  auto const all = replay(a, {}, 0, kT0 + 3600);
  ASSERT_EQ(all.size(), 9U);
  for (std::size_t i = 1; i < all.size(); ++i) {
    EXPECT_LE(all[i - 1].observed_at, all[i].observed_at);
  }
  EXPECT_EQ(all[0].vehicle_id, "s1");
  EXPECT_EQ(all[2].vendor_id, "bird");
  EXPECT_EQ(all[8].observed_at, kT0 + 150);
}

TEST(Archive, ZeroLengthWindow) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  fill_three_cycles(a);
  EXPECT_TRUE(replay(a, {}, kT0, kT0).empty());
}

TEST(Archive, VendorFilter) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  fill_three_cycles(a);
  auto const spin = replay(a, std::set<std::string>{"spin"}, 0, kT0 + 3600);
  EXPECT_EQ(spin.size(), 6U);
  EXPECT_EQ(code_of([&] {
              replay(a, std::set<std::string>{"lime"}, 0, kT0 + 3600);
            }),
            errc::unknown_vendor);
}

TEST(Archive, DuplicatesSkipped) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  auto const batch = std::vector{snap("spin", "s1", kT0)};
  EXPECT_EQ(a.append(batch).appended, 1U);
  auto const again = a.append(batch);
  EXPECT_EQ(again.appended, 0U);
  EXPECT_EQ(again.duplicates, 1U);
  EXPECT_EQ(replay(a, {}, 0, kT0 + 1).size(), 1U);
}

TEST(Archive, BackwardsAppendFails) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  a.append(std::vector{snap("spin", "s1", kT0)});
  EXPECT_EQ(code_of([&] { a.append(std::vector{snap("spin", "s1", kT0 - 1)}); }),
            errc::archive_write_failure);
}

TEST(Archive, SegmentsPerVendorDay) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  a.append(std::vector{snap("spin", "s1", kT0), snap("spin", "s1", kT0 + 86400),
                       snap("bird", "b1", kT0)});
  EXPECT_EQ(a.segments().size(), 3U);
  EXPECT_EQ(a.vendors(), (std::set<std::string>{"bird", "spin"}));
}

TEST(Archive, PersistsAcrossReopen) {
  TempDir dir;
  std::vector<VehicleSnapshot> before;
  {
    SnapshotArchive a{dir.path()};
    fill_three_cycles(a);
    auto s = snap("spin", "s3", kT0 + 200);
    s.battery = 0.5;
    s.is_reserved = true;
    a.append(std::vector{s});
    before = replay(a, {}, 0, kT0 + 3600);
  }
  SnapshotArchive b{dir.path()};
  EXPECT_EQ(replay(b, {}, 0, kT0 + 3600), before);
  EXPECT_EQ(b.first_observed("spin"), kT0);
  b.append(std::vector{snap("spin", "s1", kT0 + 300)});
  EXPECT_EQ(replay(b, {}, 0, kT0 + 3600).size(), before.size() + 1);
}

TEST(Archive, ExportJsonl) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  fill_three_cycles(a);
  std::ostringstream out;
  export_jsonl(a, out, {}, 0, kT0 + 3600);
  auto const text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}

TEST(Availability, RecentVehicleIncluded) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  a.append(std::vector{snap("spin", "s1", kT0 - 30)});
  auto const av = availability_at(a, kT0);
  ASSERT_EQ(av.size(), 1U);
  EXPECT_EQ(av[0].vehicle_id, "s1");
}

TEST(Availability, StaleVehicleExcluded) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  a.append(std::vector{snap("spin", "s1", kT0 - 1800)});
  EXPECT_TRUE(availability_at(a, kT0, 600).empty());
}

TEST(Availability, DisabledExcluded) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  std::vector<VehicleSnapshot> cycle;
  for (int i = 0; i < 5; ++i) {
    cycle.push_back(snap("spin", "v" + std::to_string(i), kT0 - 60, 38.9,
                         i == 2));
  }
  a.append(cycle);
  auto const av = availability_at(a, kT0);
  EXPECT_EQ(av.size(), 4U);
  for (auto const& s : av) {
    EXPECT_NE(s.vehicle_id, "v2");
  }
}

TEST(Availability, LatestSnapshotWins) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  a.append(std::vector{snap("spin", "s1", kT0 - 120)});
  a.append(std::vector{snap("spin", "s1", kT0 - 60, 38.9, true)});
  EXPECT_TRUE(availability_at(a, kT0).empty());
  // A snapshot after the instant is not visible.
  a.append(std::vector{snap("spin", "s1", kT0 + 60)});
  EXPECT_TRUE(availability_at(a, kT0).empty());
}

TEST(Availability, NoCoverageBeforeFirstRecord) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  a.append(std::vector{snap("spin", "s1", kT0)});
  EXPECT_EQ(code_of([&] { availability_at(a, kT0 - 1); }), errc::no_coverage);
}

TEST(Availability, IdempotentAndBounded) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  fill_three_cycles(a);
  for (Timestamp t = kT0; t < kT0 + 400; t += 17) {
    auto const x = availability_at(a, t);
    EXPECT_EQ(availability_at(a, t), x);
    std::set<std::string> seen;
    for (auto const& s : replay(a, {}, 0, t + 1)) {
      seen.insert(s.vendor_id + "/" + s.vehicle_id);
    }
    EXPECT_LE(x.size(), seen.size());
  }
}

TEST(Poller, SingleEndpointCadence) {
  TempDir dir;
  SnapshotArchive a{dir.path() / "archive"};
  PollPlan plan{{endpoint("spin", 60, "feed")}};
  SimulatedClock clock{kT0};
  std::atomic<bool> stop{false};
  auto const stats =
      run_poller(plan, a, stop, clock, [](auto const&) { return bikes_doc(3); },
                 {.run_until = kT0 + 300});
  EXPECT_EQ(stats.of("spin").fetches, 5U);
  EXPECT_EQ(stats.of("spin").appended_cycles, 5U);
  EXPECT_EQ(stats.of("spin").snapshots_appended, 15U);
  EXPECT_EQ(replay(a, {}, 0, kT0 + 3600).size(), 15U);
}

TEST(Poller, MalformedCycleIsIsolated) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  PollPlan plan{{endpoint("spin", 60, "feed")}};
  SimulatedClock clock{kT0};
  std::atomic<bool> stop{false};
  int calls = 0;
  auto const stats = run_poller(
      plan, a, stop, clock,
      [&](auto const&) { return ++calls == 2 ? std::string{"{oops"} : bikes_doc(1); },
      {.run_until = kT0 + 180});
  auto const& s = stats.of("spin");
  EXPECT_EQ(s.fetches, 3U);
  EXPECT_EQ(s.parse_failures, 1U);
  EXPECT_EQ(s.appended_cycles, 2U);
}

TEST(Poller, TwoVendorsOwnCadence) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  PollPlan plan{{endpoint("spin", 60, "spin"), endpoint("bird", 120, "bird")}};
  SimulatedClock clock{kT0};
  std::atomic<bool> stop{false};
  auto const stats =
      run_poller(plan, a, stop, clock, [](auto const&) { return bikes_doc(2); },
                 {.run_until = kT0 + 240});
  EXPECT_EQ(stats.of("spin").appended_cycles, 4U);
  EXPECT_EQ(stats.of("bird").appended_cycles, 2U);
  EXPECT_EQ(stats.endpoints[0].vendor_id, "spin");
}

TEST(Poller, FetchFailuresBackOff) {
  TempDir dir;
  SnapshotArchive a{dir.path()};
  PollPlan plan{{endpoint("spin", 60, "feed")}};
  SimulatedClock clock{kT0};
  std::atomic<bool> stop{false};
  auto const stats = run_poller(
      plan, a, stop, clock,
      [](auto const&) -> std::string { fail(errc::io_error, "down"); },
      {.run_until = kT0 + 3600});
  auto const& s = stats.of("spin");
  EXPECT_EQ(s.fetch_failures, s.fetches);
  EXPECT_LT(s.fetches, 60U);
  EXPECT_EQ(s.appended_cycles, 0U);
}

TEST(Poller, RerunIsByteIdentical) {
  TempDir dir;
  auto run = [&](fs::path const& root) {
    SnapshotArchive a{root};
    PollPlan plan{{endpoint("spin", 60, "spin"), endpoint("bird", 120, "bird")}};
    SimulatedClock clock{kT0};
    std::atomic<bool> stop{false};
    run_poller(plan, a, stop, clock,
               [](auto const& l) { return bikes_doc(l == "spin" ? 4 : 2); },
               {.run_until = kT0 + 600});
    a.flush();
  };
  run(dir / "a");
  run(dir / "b");
  auto const ta = read_tree(dir / "a");
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, read_tree(dir / "b"));
}

TEST(Poller, LocalFileFetcher) {
  TempDir dir;
  mobgap::testing::write_file(dir / "feed.json", bikes_doc(2));
  auto const fetch = default_fetcher();
  EXPECT_EQ(fetch((dir / "feed.json").string()), bikes_doc(2));
  EXPECT_EQ(fetch("file://" + (dir / "feed.json").string()), bikes_doc(2));
  EXPECT_ANY_THROW(fetch((dir / "missing.json").string()));
}

TEST(PollPlan, ParseAndValidate) {
  auto const plan = parse_poll_plan(R"(
endpoints:
  - vendor: spin
    url: feeds/spin.json
    poll_interval_s: 60
  - vendor: bird
    id_mode: dynamic
    url: feeds/bird.json
    poll_interval_s: 120
)");
  ASSERT_EQ(plan.endpoints.size(), 2U);
  EXPECT_EQ(plan.endpoints[1].vendor.id_mode, IdMode::dynamic);
  EXPECT_EQ(plan.endpoints[1].vendor.poll_interval_s, 120);

  EXPECT_EQ(code_of([] {
              parse_poll_plan("endpoints:\n  - {vendor: a, url: x}\n"
                              "  - {vendor: a, url: y}\n");
            }),
            errc::config_error);
  EXPECT_EQ(code_of([] {
              parse_poll_plan(
                  "endpoints:\n  - {vendor: a, url: x, poll_interval_s: 30}\n");
            }),
            errc::config_error);
}
