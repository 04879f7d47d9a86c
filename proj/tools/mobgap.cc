#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fmt/format.h"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

#include "mobgap/classify.h"
#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/ingest.h"
#include "mobgap/pipeline.h"
#include "mobgap/router.h"
#include "mobgap/supply.h"
#include "mobgap/tripinfer.h"

namespace fs = std::filesystem;
using namespace mobgap;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void write_out(std::string const& path, std::string_view const text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  if (auto const parent = fs::path{path}.parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out{path, std::ios::binary};
  out << text;
  if (!out) {
    fail(errc::io_error, "cannot write " + path);
  }
}

PeriodConfig const& find_period(AnalysisConfig const& cfg,
                                std::string const& label) {
  for (auto const& p : cfg.periods) {
    if (p.label == label) {
      return p;
    }
  }
  fail(errc::config_error, fmt::format("periods: no period labelled '{}'", label));
}

int exit_code(errc const c) {
  switch (category_of(c)) {
    case error_category::config: return 2;
    case error_category::data: return 3;
    case error_category::internal: return 4;
  }
  return 4;
}

struct IngestArgs {
  std::string plan;
  std::string out;
  int duration_s{0};
  bool once{false};
  std::uint64_t seed{0};
};

int cmd_ingest(IngestArgs const& a) {
  auto const plan = load_poll_plan(a.plan);
  SnapshotArchive archive{a.out};
  SystemClock clock;
  PollerOptions opt;
  opt.seed = a.seed;
  auto const now = clock.now();
  if (a.once) {
    opt.start = now;
    opt.run_until = now + 1;
  } else if (a.duration_s > 0) {
    opt.run_until = now + a.duration_s;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  auto const stats = run_poller(plan, archive, g_stop, clock, default_fetcher(), opt);
  archive.flush();
  for (auto const& e : stats.endpoints) {
    spdlog::info(
        "{}: {} fetches, {} failed, {} parse failures, {} snapshots, {} "
        "duplicates, {} dropped records",
        e.vendor_id, e.fetches, e.fetch_failures, e.parse_failures,
        e.snapshots_appended, e.duplicates_skipped, e.records_dropped);
  }
  return 0;
}

struct ExportArgs {
  std::string archive;
  std::vector<std::string> vendors;
  std::string start{"0"};
  std::string end{"4102444800"};
  std::string out{"-"};
};

int cmd_export(ExportArgs const& a) {
  SnapshotArchive const archive{a.archive};
  VendorFilter filter;
  if (!a.vendors.empty()) {
    filter = std::set<std::string>(begin(a.vendors), end(a.vendors));
  }
  std::ostringstream o;
  export_jsonl(archive, o, filter, parse_timestamp(a.start),
               parse_timestamp(a.end));
  write_out(a.out, o.str());
  return 0;
}

struct InferArgs {
  std::string archive;
  std::string vendor;
  std::string id_mode{"consistent"};
  std::string start;
  std::string end;
  std::string out;
  std::string rejected;
  std::string config;
};

int cmd_infer(InferArgs const& a) {
  AnalysisConfig cfg;
  std::string meta;
  if (!a.config.empty()) {
    cfg = load_config(a.config);
    meta = metadata_header(cfg);
    for (auto const& v : cfg.vendors) {
      if (v.vendor_id == a.vendor) {
        cfg.vendors = {v};
        break;
      }
    }
  }
  VendorProfile profile{.vendor_id = a.vendor,
                        .id_mode = parse_id_mode(a.id_mode)};
  if (!a.config.empty() && cfg.vendors.size() == 1 &&
      cfg.vendors[0].vendor_id == a.vendor) {
    profile = cfg.vendors[0];
  }
  SnapshotArchive const archive{a.archive};
  auto const stream = replay(archive, std::set{a.vendor},
                             parse_timestamp(a.start), parse_timestamp(a.end));
  auto const r = infer_trips(stream, profile, cfg.inference);
  auto const f = apply_filters(r.trips, cfg.filter);
  write_out(a.out, write_trip_csv(f.kept, meta));
  if (!a.rejected.empty()) {
    std::ostringstream o;
    o << meta << "vendor,vehicle,start_utc,end_utc,dist_mi,dur_min,reason\n";
    for (auto const& t : f.rejected) {
      write_csv_row(o, {t.trip.vendor_id, t.trip.vehicle_id,
                        std::to_string(t.trip.start_time),
                        std::to_string(t.trip.end_time),
                        format_double(t.trip.distance_mi),
                        format_double(t.trip.duration_min),
                        std::string{to_string(t.reason)}});
    }
    write_out(a.rejected, o.str());
  }
  spdlog::info("{} trips inferred, {} kept, {} rejected, {} relocations "
               "suppressed, {} unlinked events",
               r.trips.size(), f.kept.size(), f.rejected.size(),
               r.suppressed.size(), r.events.size());
  return 0;
}

struct StageArgs {
  std::string config;
  std::string period;
  std::string trips;
  std::string out;
  unsigned jobs{1};
};

int cmd_supply(StageArgs const& a) {
  auto const cfg = load_config(a.config);
  auto const& p = find_period(cfg, a.period);
  auto const net = load_gtfs(cfg.resolve(p.gtfs).string());
  auto const supply = supply_period(cfg, p, net, a.jobs);
  auto const meta = metadata_header(cfg) + "# period: " + p.label + "\n";
  auto const dir = fs::path{a.out};
  write_out((dir / "correlations.csv").string(), correlations_csv(supply, meta));
  for (auto const& s : supply) {
    auto name = format_hhmm(s.instant_s);
    std::erase(name, ':');
    for (auto const& [mode, g] : {std::pair{"escooter", &s.grids.escooter},
                                  std::pair{"bikeshare", &s.grids.bikeshare},
                                  std::pair{"transit", &s.grids.transit}}) {
      auto const stem = (dir / "grids" / fmt::format("{}_{}", name, mode)).string();
      write_out(stem + ".csv", grid_csv(*g, meta));
      write_out(stem + ".geojson", grid_geojson(*g));
    }
  }
  return 0;
}

int cmd_classify(StageArgs const& a) {
  auto const cfg = load_config(a.config);
  auto const& p = find_period(cfg, a.period);
  auto const net = load_gtfs(cfg.resolve(p.gtfs).string());
  auto const trips = parse_trip_csv(read_file(a.trips));
  auto const ctx = assessment_context(cfg, p, net);
  auto const rows = assess_trips(trips, ctx, a.jobs);
  write_out(a.out, write_assessment_csv(
                       rows, metadata_header(cfg) + "# period: " + p.label + "\n"));
  return 0;
}

struct RouteArgs {
  std::string gtfs;
  std::string date;
  std::string in;
  std::string out{"-"};
  std::string config;
};

int cmd_route(RouteArgs const& a) {
  RouterConfig rc;
  if (!a.config.empty()) {
    rc = load_config(a.config).router;
  }
  rc.validate();
  auto const net = load_gtfs(a.gtfs);
  Timetable const tt{net, parse_date(a.date), rc};
  auto const t = parse_csv(read_file(a.in));
  auto const col = [&](char const* name) {
    auto const c = t.column(name);
    if (!c) {
      fail(errc::missing_field, fmt::format("queries: missing column {}", name));
    }
    return *c;
  };
  auto const id = t.column("id");
  auto const olat = col("olat");
  auto const olon = col("olon");
  auto const dlat = col("dlat");
  auto const dlon = col("dlon");
  auto const start = col("start_utc");

  std::ostringstream o;
  o << (id ? "id," : "") << "median_min,n_reachable,best_n_transfers\n";
  for (auto const& row : t.rows) {
    GeoPoint const from{parse_double(row[olat], "olat"),
                        parse_double(row[olon], "olon")};
    GeoPoint const to{parse_double(row[dlat], "dlat"),
                      parse_double(row[dlon], "dlon")};
    auto const w = windowed_transit_time(tt, from, to, parse_timestamp(row[start]));
    std::vector<std::string> f;
    if (id) {
      f.push_back(row[*id]);
    }
    f.push_back(w.median_min ? format_double(*w.median_min) : "");
    f.push_back(std::to_string(w.n_reachable));
    f.push_back(w.best_n_transfers ? std::to_string(*w.best_n_transfers) : "");
    write_csv_row(o, f);
  }
  write_out(a.out, o.str());
  return 0;
}

struct ReportArgs {
  std::string in;
  std::string in2;
  std::string out;
};

int cmd_report(ReportArgs const& a) {
  auto const label = [](std::string const& path) {
    return fs::path{path}.parent_path().filename().string().empty()
               ? fs::path{path}.stem().string()
               : fs::path{path}.parent_path().filename().string();
  };
  auto const rows_a = parse_assessment_csv(read_file(a.in));
  std::vector<PeriodSummary> summaries{summarize(rows_a, label(a.in))};
  auto const dir = fs::path{a.out};
  auto const per_period = [&](PeriodSummary const& s) {
    write_out((dir / s.label / "classification_by_hour.csv").string(),
              classification_by_hour_csv(s));
    write_out((dir / s.label / "connecting_by_hour.csv").string(),
              connecting_by_hour_csv(s));
  };
  if (!a.in2.empty()) {
    auto const rows_b = parse_assessment_csv(read_file(a.in2));
    summaries.push_back(summarize(rows_b, label(a.in2)));
    if (summaries[0].label == summaries[1].label) {
      summaries[0].label += "_a";
      summaries[1].label += "_b";
    }
    auto const cmp = compare_periods(rows_a, rows_b);
    write_out((dir / "comparison.csv").string(),
              comparison_csv(cmp, summaries[0].label, summaries[1].label));
  }
  for (auto const& s : summaries) {
    per_period(s);
  }
  write_out((dir / "summary.csv").string(), summary_csv(summaries));
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  unsigned jobs{1};
  std::string generated_at;
};

int cmd_run(RunArgs const& a) {
  auto const cfg = load_config(a.config);
  RunOptions opt;
  opt.jobs = a.jobs;
  if (!a.generated_at.empty()) {
    opt.generated_at = a.generated_at;
  }
  run_pipeline(cfg, a.out, opt);
  spdlog::info("bundle written to {}", a.out);
  return 0;
}

struct ConfigArgs {
  bool defaults{false};
  std::string validate;
};

int cmd_config(ConfigArgs const& a) {
  if (a.defaults) {
    std::cout << default_config_yaml();
    return 0;
  }
  auto const r = validate_config(a.validate);
  for (auto const& w : r.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  for (auto const& e : r.errors) {
    std::cerr << "error: " << e << "\n";
  }
  if (r.ok()) {
    std::cout << "ok\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("mobgap"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"Micromobility supply and transit-gap analysis"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  std::function<int()> action;

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Poll GBFS feeds into an archive");
  c_ingest->add_option("--plan", ingest.plan, "Poll plan (YAML)")->required();
  c_ingest->add_option("--out", ingest.out, "Archive directory")->required();
  auto* dur = c_ingest->add_option("--duration", ingest.duration_s,
                                   "Stop after this many seconds");
  c_ingest->add_flag("--once", ingest.once, "Poll every endpoint once")
      ->excludes(dur);
  c_ingest->add_option("--seed", ingest.seed, "Jitter seed");
  c_ingest->callback([&] { action = [&] { return cmd_ingest(ingest); }; });

  ExportArgs exp;
  auto* c_export = app.add_subcommand("export", "Dump archived snapshots as JSON lines");
  c_export->add_option("--archive", exp.archive)->required();
  c_export->add_option("--vendor", exp.vendors, "Vendor ids (repeatable)");
  c_export->add_option("--start", exp.start, "Inclusive start (epoch or ISO-8601)");
  c_export->add_option("--end", exp.end, "Exclusive end (epoch or ISO-8601)");
  c_export->add_option("--out", exp.out, "Output file, - for stdout");
  c_export->callback([&] { action = [&] { return cmd_export(exp); }; });

  InferArgs inf;
  auto* c_infer = app.add_subcommand("infer", "Infer and filter trips for one vendor");
  c_infer->add_option("--archive", inf.archive)->required();
  c_infer->add_option("--vendor", inf.vendor)->required();
  c_infer->add_option("--id-mode", inf.id_mode, "consistent or dynamic");
  c_infer->add_option("--start", inf.start)->required();
  c_infer->add_option("--end", inf.end)->required();
  c_infer->add_option("--out", inf.out, "Kept trips CSV")->required();
  c_infer->add_option("--rejected", inf.rejected, "Rejected trips CSV");
  c_infer->add_option("--config", inf.config, "Filter and inference settings");
  c_infer->callback([&] { action = [&] { return cmd_infer(inf); }; });

  StageArgs sup;
  auto* c_supply = app.add_subcommand("supply", "Supply grids and correlations");
  c_supply->add_option("--config", sup.config)->required();
  c_supply->add_option("--period", sup.period)->required();
  c_supply->add_option("--out", sup.out, "Output directory")->required();
  c_supply->add_option("--jobs", sup.jobs);
  c_supply->callback([&] { action = [&] { return cmd_supply(sup); }; });

  RouteArgs route;
  auto* c_route = app.add_subcommand("route", "Windowed transit travel times");
  c_route->add_option("--gtfs", route.gtfs)->required();
  c_route->add_option("--date", route.date, "Local service date")->required();
  c_route->add_option("--in", route.in,
                      "Queries CSV: olat,olon,dlat,dlon,start_utc")
      ->required();
  c_route->add_option("--out", route.out, "Output CSV, - for stdout");
  c_route->add_option("--config", route.config, "Router settings");
  c_route->callback([&] { action = [&] { return cmd_route(route); }; });

  StageArgs cls;
  auto* c_classify = app.add_subcommand("classify", "Assess trips against transit and bikeshare");
  c_classify->add_option("--config", cls.config)->required();
  c_classify->add_option("--period", cls.period)->required();
  c_classify->add_option("--trips", cls.trips, "Trip CSV")->required();
  c_classify->add_option("--out", cls.out, "Assessment CSV")->required();
  c_classify->add_option("--jobs", cls.jobs);
  c_classify->callback([&] { action = [&] { return cmd_classify(cls); }; });

  ReportArgs rep;
  auto* c_report = app.add_subcommand("report", "Summaries from assessment CSVs");
  c_report->add_option("--in", rep.in, "Assessment CSV")->required();
  c_report->add_option("--in2", rep.in2, "Second period for comparison");
  c_report->add_option("--out", rep.out, "Output directory")->required();
  c_report->callback([&] { action = [&] { return cmd_report(rep); }; });

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Full pipeline to a report bundle");
  c_run->add_option("--config", run.config)->required();
  c_run->add_option("--out", run.out, "Bundle directory")->required();
  c_run->add_option("--jobs", run.jobs, "Worker threads");
  c_run->add_option("--generated-at", run.generated_at,
                    "Timestamp recorded in the manifest");
  c_run->callback([&] { action = [&] { return cmd_run(run); }; });

  ConfigArgs conf;
  auto* c_config = app.add_subcommand("config", "Print defaults or validate a config");
  auto* o_def = c_config->add_flag("--defaults", conf.defaults);
  auto* o_val = c_config->add_option("--validate", conf.validate, "Config file");
  c_config->require_option(1);
  o_def->excludes(o_val);
  c_config->callback([&] { action = [&] { return cmd_config(conf); }; });

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    auto const rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (verbose) {
    spdlog::set_level(spdlog::level::debug);
  }

  try {
    return action();
  } catch (error const& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (fs::filesystem_error const& e) {
    spdlog::error("IoError: {}", e.what());
    return 3;
  } catch (std::exception const& e) {
    spdlog::error("InternalError: {}", e.what());
    return 4;
  }
}
