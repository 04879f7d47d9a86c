// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <fmt/format.h>

#include "mobgap/classify.h"
#include "mobgap/pipeline.h"
#include "mobgap/router.h"
#include "mobgap/supply.h"
#include "mobgap/tripinfer.h"
#include "bundle_check.h"
#include "minicity.h"
#include "oracles.h"
#include "test_util.h"
#include "toy_network.h"

using namespace mobgap;
namespace mt = mobgap::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome trip_recovery() {
  auto const city = mt::build_minicity();
  auto const t0 = std::chrono::steady_clock::now();
  auto const r = infer_trips(city.linked_stream, {.vendor_id = mt::kLinkedVendor});
  auto const elapsed = seconds_since(t0);

  std::size_t hits = 0;
  for (auto const& t : r.trips) {
    hits += std::count(city.planted.begin(), city.planted.end(), t) > 0 ? 1U : 0U;
  }
  auto const precision = r.trips.empty() ? 0.0 : double(hits) / double(r.trips.size());
  auto const recall = double(hits) / double(city.planted.size());
  std::size_t caught = 0;
  for (auto const& m : city.relocations) {
    caught += std::any_of(r.suppressed.begin(), r.suppressed.end(),
                          [&](SuppressedMove const& s) {
                            return s.vehicle_id == m.vehicle_id &&
                                   s.start_time == m.start_time &&
                                   s.end_time == m.end_time;
                          })
                  ? 1U
                  : 0U;
  }
  return {precision == 1.0 && recall == 1.0 && city.relocations.size() == 2 &&
              caught == 2 && elapsed < 5.0,
          fmt::format("precision {} recall {} over {} planted, {}/{} relocations "
                      "suppressed, {:.3f} s",
                      precision, recall, city.planted.size(), caught,
                      city.relocations.size(), elapsed)};
}

Outcome filter_table() {
  constexpr double e = 1e-6;
  auto const trip = [](double dist, double dur) {
    InferredTrip t;
    t.vendor_id = "spin";
    t.vehicle_id = "v";
    t.distance_mi = dist;
    t.duration_min = dur;
    return t;
  };
  struct Case {
    double dist, dur;
    bool keep;
  };
  // distance 0.02 mi, duration 90 min, speed 20 mph; each probed just inside
  // and just outside, on a short and on a long trip.
  std::vector<Case> const cases{
      {0.02 + e, 10, true},   {0.02 - e, 10, false},
      {0.02 + e, 60, true},   {0.02 - e, 60, false},
      {1.0, 90 - e, true},    {1.0, 90 + e, false},
      {5.0, 90 - e, true},    {5.0, 90 + e, false},
      {2.0 - e, 6, true},     {2.0 + e, 6, false},
      {5.0, 15 + e, true},    {5.0, 15 - e, false},
  };
  FilterPolicy const p;
  auto ok = 0;
  std::string bad;
  for (auto const& c : cases) {
    auto const keep = !check_filters(trip(c.dist, c.dur), p).has_value();
    if (keep == c.keep) {
      ++ok;
    } else {
      bad += fmt::format(" ({} mi, {} min)", c.dist, c.dur);
    }
  }
  return {ok == int(cases.size()),
          fmt::format("{}/{} boundary cases decided as expected{}", ok,
                      cases.size(), bad)};
}

Outcome router_optimality() {
  GeoPoint const center{38.9, -77.03};
  Date const day = parse_date("2019-07-10");
  LocalProjection const proj{center};
  TimeZone const zone{"America/New_York"};
  auto const t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng{500};
  std::uniform_real_distribution<double> pos{-0.9, 0.9};
  std::uniform_int_distribution<int> when{6 * 3600 + 1800, 10 * 3600};
  std::uniform_real_distribution<double> jitter{-0.3, 0.3};
  std::bernoulli_distribution near_stop{0.5};
  RouterConfig const cfg;
  // Half of the endpoints are placed within walking range of a stop.
  auto const endpoint = [&](TransitNetwork const& n) {
    if (!near_stop(rng)) {
      return proj.inverse({pos(rng), pos(rng)});
    }
    std::uniform_int_distribution<std::size_t> i{0, n.stops.size() - 1};
    auto const c = proj.forward(n.stops[i(rng)].point);
    return proj.inverse({c.x + jitter(rng), c.y + jitter(rng)});
  };
  int agree = 0;
  int reachable = 0;
  double worst = 0.0;
  for (int q = 0; q < 500; ++q) {
    auto const n = mt::random_toy_network(rng, center, 8, 4);
    Timetable const tt{n, day, cfg};
    auto const o = endpoint(n);
    auto const d = endpoint(n);
    auto const dep = zone.to_utc(day, when(rng));
    auto const j = earliest_arrival(tt, o, d, dep);
    auto const want = mt::oracle_earliest_total(n, day, cfg, o, d, dep);
    if (j.has_value() != want.has_value()) {
      continue;
    }
    if (j) {
      ++reachable;
      auto const diff = std::abs(j->total_min - *want);
      worst = std::max(worst, diff);
      if (diff > 1e-9) {
        continue;
      }
    }
    ++agree;
  }

  int medians_ok = 0;
  int medians = 0;
  int median_reachable = 0;
  for (int q = 0; q < 100; ++q) {
    auto const n = mt::random_toy_network(rng, center, 8, 4);
    Timetable const tt{n, day, cfg};
    auto const o = endpoint(n);
    auto const d = endpoint(n);
    auto const start = zone.to_utc(day, when(rng));
    auto const w = windowed_transit_time(tt, o, d, start);
    auto const want = mt::oracle_windowed(n, day, cfg, o, d, start);
    ++medians;
    median_reachable += w.median_min ? 1 : 0;
    auto const same =
        w.samples.size() == 21 && w.median_min.has_value() == want.median.has_value() &&
        (!w.median_min || std::abs(*w.median_min - *want.median) <= 1e-9);
    medians_ok += same ? 1 : 0;
  }
  auto const elapsed = seconds_since(t0);
  return {agree == 500 && medians_ok == medians && elapsed < 60.0,
          fmt::format("{}/500 earliest-arrival queries agree ({} reachable, max "
                      "diff {:.2e} min), {}/{} windowed medians agree ({} reachable), {:.1f} s",
                      agree, reachable, worst, medians_ok, medians,
                      median_reachable, elapsed)};
}

Outcome kde_correctness() {
  mt::TempDir dir;
  auto const city = mt::build_minicity();
  auto const cfg = mt::write_minicity_fixture(dir.path(), {city});
  auto const supply = supply_period(cfg, cfg.periods[0], city.network);
  auto const grid = GridSpec::covering(city.boundary, cfg.grid.cell_mi);
  auto const k = static_cast<std::size_t>(std::lround(cfg.grid.cell_mi / cfg.grid.fine_cell_mi));
  auto const fine = grid.refined(k);
  auto const zone = TimeZone{mt::kCityZone};
  std::size_t cells = 0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < supply.size(); ++i) {
    auto const f = mt::oracle_features(city, cfg, zone.to_utc(city.options.date, cfg.instants[i]));
    auto const check = [&](SupplyGrid const& got, std::vector<SupplyFeature> const& feats) {
      auto const want = mt::oracle_block_mean(mt::oracle_kde(feats, fine), fine.ncols,
                                              k, grid.ncols, grid.nrows);
      for (std::size_t c = 0; c < want.size(); ++c) {
        ++cells;
        auto const v = c < got.values.size() ? got.values[c] : std::nan("");
        off += v == want[c] || close_rel(v, want[c], 1e-9) ? 0U : 1U;
      }
    };
    check(supply[i].grids.escooter, f.escooter);
    check(supply[i].grids.bikeshare, f.bikeshare);
    check(supply[i].grids.transit, f.transit);
  }

  GridSpec g;
  g.projection = LocalProjection{city.at(0, 0)};
  g.cell_mi = 0.01;
  g.ncols = g.nrows = 40;
  g.origin = {-0.2, -0.2};
  auto const single = kernel_density(std::vector<SupplyFeature>{{city.at(0, 0), 3.0, 0.125}}, g);
  auto mass = 0.0;
  for (auto const v : single.values) {
    mass += v * g.cell_mi * g.cell_mi;
  }
  auto const mass_err = std::abs(mass - 3.0) / 3.0;

  auto a = supply[0].grids.escooter;
  auto b = a;
  for (auto& v : b.values) {
    v *= 2.0;
  }
  auto const r = grid_correlation(a, b);
  return {off == 0 && mass_err <= 0.02 && std::abs(r - 1.0) <= 1e-12,
          fmt::format("{}/{} cells within 1e-9 of the oracle, mass error {:.3f}%, "
                      "corr(a, 2a) - 1 = {:.1e}",
                      cells - off, cells, 100 * mass_err, r - 1.0)};
}

Outcome classification_soundness() {
  auto const city = mt::build_minicity();
  auto const& n = city.network;
  auto const date = city.options.date;
  DirectLineIndex const direct{n};
  auto const area = ServiceArea::transit(n);
  auto const bikes = ServiceArea::bikeshare(city.stations);

  std::vector<GeoPoint> stops;
  std::vector<GeoPoint> entrances;
  for (auto const& s : n.stops) {
    (s.location_type == LocationType::entrance ? entrances : stops).push_back(s.point);
  }
  std::set<std::string> seen;
  std::vector<GeoPoint> stations;
  for (auto const& s : city.stations) {
    if (seen.insert(s.station_id).second) {
      stations.push_back(s.point);
    }
  }

  // Endpoints sit at a known distance and bearing from a stop, a station or
  // an entrance; the offsets straddle each radius and connect threshold.
  std::mt19937_64 rng{200};
  std::uniform_real_distribution<double> bearing{0.0, 2 * 3.141592653589793};
  std::vector<double> const offsets{0.0, 0.05, 0.1, feet_to_miles(20), feet_to_miles(60),
                                    0.2, 0.3, 0.4, 0.6};
  std::uniform_int_distribution<std::size_t> pick_offset{0, offsets.size() - 1};
  std::uniform_int_distribution<int> pick_kind{0, 2};
  auto const endpoint = [&] {
    auto const kind = pick_kind(rng);
    auto const& pool = kind == 0 ? stops : kind == 1 ? stations : entrances;
    std::uniform_int_distribution<std::size_t> i{0, pool.size() - 1};
    auto const c = city.projection.forward(pool[i(rng)]);
    auto const r = offsets[pick_offset(rng)];
    auto const th = bearing(rng);
    return city.projection.inverse({c.x + r * std::cos(th), c.y + r * std::sin(th)});
  };
  auto const start = TimeZone{mt::kCityZone}.to_utc(date, 8 * 3600);
  std::vector<InferredTrip> trips;
  for (int i = 0; i < 200; ++i) {
    trips.push_back(make_trip("spin", std::to_string(i), endpoint(), endpoint(), start,
                              start + 600));
  }

  int transit_ok = 0;
  int bike_ok = 0;
  int implication = 0;
  std::array<int, 4> types{};
  SpatialIndex const entrance_index{entrances, 0.05};
  for (auto const& t : trips) {
    auto const got = classify_vs_transit(t, area, direct, date);
    ++types[static_cast<std::size_t>(got)];
    transit_ok += got == mt::oracle_transit_type(n, t.origin, t.destination, date, 0.25);
    bike_ok += classify_vs_bikeshare(t, bikes) ==
               mt::oracle_bike_class(stations, t.origin, t.destination, 0.125);
    auto const c = detect_transit_connecting(t, entrance_index);
    implication += !c.lb || c.ub;
  }

  int monotone = 0;
  std::uniform_real_distribution<double> grow{0.02, 0.2};
  auto radius = 0.25;
  std::vector<TransitType> prev;
  for (auto const& t : trips) {
    prev.push_back(classify_vs_transit(t, area, direct, date));
  }
  for (int step = 0; step < 5; ++step) {
    radius += grow(rng);
    auto const wider = ServiceArea::transit(n, radius);
    auto holds = true;
    for (std::size_t i = 0; i < trips.size(); ++i) {
      auto const now = classify_vs_transit(trips[i], wider, direct, date);
      holds = holds && static_cast<int>(now) <= static_cast<int>(prev[i]);
      prev[i] = now;
    }
    monotone += holds ? 1 : 0;
  }
  return {transit_ok == 200 && bike_ok == 200 && monotone == 5 && implication == 200,
          fmt::format("transit {}/200, bikeshare {}/200 (T1..T4 = {}/{}/{}/{}), "
                      "monotone under {}/5 enlargements, lb => ub for {}/200",
                      transit_ok, bike_ok, types[0], types[1], types[2], types[3],
                      monotone, implication)};
}

Outcome weighting() {
  GeoPoint const p{38.9, -77.03};
  Date const day = parse_date("2019-07-10");
  mt::ToyNetwork t;
  t.stop("S", p).stop("T", LocalProjection{p}.inverse({0.5, 0.0})).route("RAIL", 1);
  t.trip("RAIL", "r0", {{"S", 8 * 3600}, {"T", 8 * 3600 + 120}});
  t.trip("RAIL", "r1", {{"S", 8 * 3600 + 1800}, {"T", 8 * 3600 + 1920}});
  auto const n = t.build();
  auto const f = transit_stop_frequency(n, "S", day, 8 * 3600);
  auto const want = mt::oracle_frequency(n, "S", n.zone().to_utc(day, 8 * 3600));
  return {f == 10.0 && want == 10.0,
          fmt::format("2 rail visits weigh {} (oracle {})", f, want)};
}

int run_cli(std::string const& args) {
  auto const cmd = std::string{MOBGAP_CLI} + " " + args + " 2>/dev/null";
  auto const rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome determinism() {
  mt::TempDir dir;
  auto const cities = mt::minicity_periods(2);
  auto const cfg = mt::write_minicity_fixture(dir / "in", cities);
  auto const config = (dir / "in" / "config.yaml").string();
  for (auto const* out : {"a", "b"}) {
    if (run_cli(fmt::format("run --config {} --out {} --generated-at 2020-01-01T00:00:00Z",
                            config, (dir / out).string())) != 0) {
      return {false, "run failed"};
    }
  }
  std::size_t files = 0;
  std::size_t differ = 0;
  for (auto const& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) {
      continue;
    }
    ++files;
    auto const rel = fs::relative(e.path(), dir / "a");
    differ += slurp(e.path()) == slurp(dir / "b" / rel) ? 0U : 1U;
  }
  std::size_t in_b = 0;
  for (auto const& e : fs::recursive_directory_iterator(dir / "b")) {
    in_b += e.is_regular_file() ? 1U : 0U;
  }
  auto const problems = mt::compare_bundle(dir / "a", mt::golden_report(cities, cfg));
  auto detail = fmt::format("{} files, {} differ, golden mismatches {}", files,
                            differ + (in_b != files ? 1 : 0), problems.size());
  if (!problems.empty()) {
    detail += " (first: " + problems.front() + ")";
  }
  return {files > 0 && differ == 0 && in_b == files && problems.empty(), detail};
}

Outcome colocated_ordering() {
  mt::TempDir dir;
  auto const cities = mt::minicity_periods(1, true);
  auto const cfg = mt::write_minicity_fixture(dir.path(), cities);
  auto const supply = supply_period(cfg, cfg.periods[0], cities[0].network);
  auto holds = true;
  std::string detail;
  for (auto const& s : supply) {
    auto const be = s.r[0];
    auto const te = s.r[1];
    holds = holds && be && te && *be > *te;
    detail += fmt::format(" {}: {:.3f} vs {:.3f};", format_hhmm(s.instant_s),
                          be.value_or(std::nan("")), te.value_or(std::nan("")));
  }
  detail.pop_back();
  return {holds && !supply.empty(), "bikeshare-escooter vs transit-escooter" + detail};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> const criteria{
      {"trip inference recovery", trip_recovery},
      {"filter fidelity", filter_table},
      {"router optimality", router_optimality},
      {"KDE correctness", kde_correctness},
      {"classification soundness", classification_soundness},
      {"weighting fidelity", weighting},
      {"end-to-end determinism", determinism},
      {"colocated supply ordering", colocated_ordering},
  };
  auto failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (std::exception const& e) {
      o = {false, std::string{"threw: "} + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << fmt::format("[{}] {} {}: {}", o.pass ? "PASS" : "FAIL", i + 1,
                             criteria[i].first, o.detail)
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
