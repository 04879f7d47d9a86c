#include "mobgap/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "fmt/format.h"
#include "nlohmann/json.hpp"

#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/ingest.h"
#include "mobgap/parallel.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace mobgap {

namespace {

constexpr std::array<char const*, 3> kPairNames{
    "bikeshare-escooter", "transit-escooter", "bikeshare-transit"};

template <typename Fn>
auto stage(std::string_view const name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (error const& e) {
    fail(e.code(), fmt::format("{}: {}", name, e.message()));
  } catch (fs::filesystem_error const& e) {
    fail(errc::io_error, fmt::format("{}: {}", name, e.what()));
  } catch (std::exception const& e) {
    fail(errc::internal_error, fmt::format("{}: {}", name, e.what()));
  }
}

std::string archive_path(AnalysisConfig const& cfg, PeriodConfig const& p) {
  return cfg.resolve(p.archive.value_or(cfg.archive)).string();
}

std::string stations_path(AnalysisConfig const& cfg, PeriodConfig const& p) {
  return cfg.resolve(p.bikeshare_status.value_or(cfg.bikeshare_status)).string();
}

std::vector<VendorProfile> vendor_profiles(AnalysisConfig const& cfg,
                                           SnapshotArchive const& archive) {
  if (!cfg.vendors.empty()) {
    return cfg.vendors;
  }
  std::vector<VendorProfile> out;
  for (auto const& v : archive.vendors()) {
    out.push_back(VendorProfile{.vendor_id = v});
  }
  return out;
}

VendorFilter vendor_filter(AnalysisConfig const& cfg) {
  if (cfg.vendors.empty()) {
    return std::nullopt;
  }
  std::set<std::string> ids;
  for (auto const& v : cfg.vendors) {
    ids.insert(v.vendor_id);
  }
  return ids;
}

std::vector<BikeStationStatus> load_stations(AnalysisConfig const& cfg,
                                             PeriodConfig const& p) {
  return parse_station_csv(read_file(stations_path(cfg, p)));
}

void write_text(fs::path const& p, std::string_view const text) {
  fs::create_directories(p.parent_path());
  std::ofstream out{p, std::ios::binary};
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    fail(errc::io_error, "cannot write " + p.string());
  }
}

std::string hhmm_name(int const seconds) {
  auto s = format_hhmm(seconds);
  std::erase(s, ':');
  return s;
}

std::string opt_num(std::optional<double> const v) {
  return v ? format_double(*v) : std::string{""};
}

std::string pct(std::size_t const k, std::size_t const n) {
  return n == 0 ? std::string{""}
                : fmt::format("{:.1f}", 100.0 * static_cast<double>(k) /
                                            static_cast<double>(n));
}

std::string generation_time(RunOptions const& opts) {
  if (opts.generated_at) {
    return *opts.generated_at;
  }
  if (auto const* e = std::getenv("SOURCE_DATE_EPOCH"); e != nullptr && *e) {
    return format_utc(parse_timestamp(e));
  }
  auto const now = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::system_clock::now().time_since_epoch());
  return format_utc(now.count());
}

std::vector<fs::path> files_under(fs::path const& root) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(root)) {
    return {root};
  }
  if (!fs::is_directory(root)) {
    return out;
  }
  for (auto const& e : fs::recursive_directory_iterator{root}) {
    if (e.is_regular_file()) {
      out.push_back(e.path());
    }
  }
  std::sort(begin(out), end(out));
  return out;
}

std::string relative_name(fs::path const& p, fs::path const& base) {
  auto const rel = fs::relative(p, base);
  return rel.empty() ? p.generic_string() : rel.generic_string();
}

struct PeriodResult {
  PeriodConfig const* period{nullptr};
  InferenceOutput inference;
  std::vector<TripAssessment> assessments;
  PeriodSummary summary;
  std::vector<InstantSupply> supply;
};

std::string report_md(AnalysisConfig const& cfg,
                      std::span<PeriodResult const> periods,
                      std::span<MetricComparison const> comparison) {
  std::ostringstream o;
  o << "# Micromobility and transit report\n\n";
  for (auto const& r : periods) {
    auto const& s = r.summary;
    o << "## Period " << s.label << "\n\n"
      << "Dates " << format_date(r.period->start_date) << " to "
      << format_date(r.period->end_date) << ", supply snapshots on "
      << format_date(r.period->supply_day()) << ".\n\n";
    o << "| quantity | value |\n|---|---|\n"
      << "| inferred trips | " << r.inference.inferred.size() << " |\n"
      << "| rejected by filters | " << r.inference.filtered.rejected.size()
      << " |\n"
      << "| suppressed relocations | " << r.inference.suppressed << " |\n"
      << "| unlinked events | " << r.inference.unlinked_events << " |\n"
      << "| kept trips | " << s.n_trips << " |\n"
      << "| median length (mi) | " << format_double(s.median_length_mi)
      << " |\n"
      << "| median duration (min) | " << format_double(s.median_duration_min)
      << " |\n"
      << "| median scooter cost (USD) | "
      << format_double(s.median_scooter_cost_usd) << " |\n"
      << "| morning peak share | " << format_double(s.morning_peak_share)
      << " |\n"
      << "| trips with a transit alternative | " << s.n_with_alternative
      << " |\n"
      << "| median transit time (min) | " << opt_num(s.median_transit_min)
      << " |\n"
      << "| median time saved (min) | " << opt_num(s.median_time_saved_min)
      << " |\n"
      << "| median price premium (USD) | "
      << opt_num(s.median_price_premium_usd) << " |\n\n";

    auto const n = s.all.n;
    o << "| class | trips | share (%) |\n|---|---|---|\n";
    for (auto i = 0U; i < 4; ++i) {
      o << "| " << to_string(static_cast<TransitType>(i)) << " | "
        << s.all.transit[i] << " | " << pct(s.all.transit[i], n) << " |\n";
    }
    for (auto i = 0U; i < 3; ++i) {
      o << "| " << to_string(static_cast<BikeClass>(i)) << " | "
        << s.all.bike[i] << " | " << pct(s.all.bike[i], n) << " |\n";
    }
    o << "| connecting (" << format_double(cfg.connect_thresholds.lower_ft)
      << " ft) | " << s.all.connecting_lb << " | "
      << pct(s.all.connecting_lb, n) << " |\n"
      << "| connecting (" << format_double(cfg.connect_thresholds.upper_ft)
      << " ft) | " << s.all.connecting_ub << " | "
      << pct(s.all.connecting_ub, n) << " |\n\n";

    o << "| instant | " << kPairNames[0] << " | " << kPairNames[1] << " | "
      << kPairNames[2] << " |\n|---|---|---|---|\n";
    for (auto const& inst : r.supply) {
      o << "| " << format_hhmm(inst.instant_s);
      for (auto const& v : inst.r) {
        o << " | " << (v ? fmt::format("{:.3f}", *v) : "undefined");
      }
      o << " |\n";
    }
    o << "\n";
  }
  if (!comparison.empty()) {
    o << "## Comparison " << periods[0].summary.label << " vs "
      << periods[1].summary.label << "\n\n"
      << "| metric | " << periods[0].summary.label << " | "
      << periods[1].summary.label << " | p | |\n|---|---|---|---|---|\n";
    for (auto const& m : comparison) {
      o << "| " << m.metric << " | " << opt_num(m.a) << " | " << opt_num(m.b)
        << " | " << (m.p_value ? fmt::format("{:.4f}", *m.p_value) : "")
        << " | " << m.stars << " |\n";
    }
    o << "\nMarkers: *** p < 0.01, ** p < 0.05, * p < 0.1.\n";
  }
  return o.str();
}

}  // namespace

InferenceOutput infer_period(AnalysisConfig const& cfg, PeriodConfig const& p,
                             TimeZone const& zone) {
  SnapshotArchive const archive{archive_path(cfg, p)};
  auto const start = zone.to_utc(p.start_date, 0);
  auto const stop = zone.to_utc(add_days(p.end_date, 1), 0);

  InferenceOutput out;
  for (auto const& profile : vendor_profiles(cfg, archive)) {
    auto const stream = replay(archive, std::set{profile.vendor_id}, start, stop);
    auto r = infer_trips(stream, profile, cfg.inference);
    out.suppressed += r.suppressed.size();
    out.unlinked_events += r.events.size();
    std::move(begin(r.trips), end(r.trips), std::back_inserter(out.inferred));
  }
  std::stable_sort(begin(out.inferred), end(out.inferred),
                   [](InferredTrip const& a, InferredTrip const& b) {
                     return std::tie(a.start_time, a.vendor_id, a.vehicle_id) <
                            std::tie(b.start_time, b.vendor_id, b.vehicle_id);
                   });
  out.filtered = apply_filters(out.inferred, cfg.filter);
  return out;
}

std::vector<InstantSupply> supply_period(AnalysisConfig const& cfg,
                                         PeriodConfig const& p,
                                         TransitNetwork const& net,
                                         unsigned const jobs) {
  auto const boundary = load_polygon(cfg.resolve(cfg.study_boundary).string());
  auto const grid = GridSpec::covering(boundary, cfg.grid.cell_mi);
  SnapshotArchive const archive{archive_path(cfg, p)};
  auto const stations = load_stations(cfg, p);

  SupplyInputs in;
  in.archive = &archive;
  in.vendors = vendor_filter(cfg);
  in.network = &net;
  in.stations = stations;
  SupplyOptions opt;
  opt.kernel = cfg.grid.kernel;
  opt.fine_cell_mi = cfg.grid.fine_cell_mi;
  opt.staleness_horizon_s = cfg.staleness_horizon_s;

  std::vector<InstantSupply> out(cfg.instants.size());
  parallel_for(out.size(), jobs, [&](std::size_t const i) {
    auto& s = out[i];
    s.instant_s = cfg.instants[i];
    auto const instant = net.zone().to_utc(p.supply_day(), s.instant_s);
    s.grids = supply_snapshot(in, instant, cfg.radii, grid, opt);
    auto const corr = [](SupplyGrid const& a,
                         SupplyGrid const& b) -> std::optional<double> {
      try {
        return grid_correlation(a, b);
      } catch (error const& e) {
        if (e.code() != errc::zero_variance) {
          throw;
        }
        return std::nullopt;
      }
    };
    s.r[0] = corr(s.grids.bikeshare, s.grids.escooter);
    s.r[1] = corr(s.grids.transit, s.grids.escooter);
    s.r[2] = corr(s.grids.bikeshare, s.grids.transit);
  });
  return out;
}

AssessmentContext assessment_context(AnalysisConfig const& cfg,
                                     PeriodConfig const& p,
                                     TransitNetwork const& net) {
  AssessmentContext ctx;
  ctx.network = &net;
  ctx.transit_area = ServiceArea::transit(net, cfg.service_area.transit_mi);
  auto const stations = load_stations(cfg, p);
  ctx.bike_area = ServiceArea::bikeshare(stations, cfg.service_area.bikeshare_mi);

  auto const entrances =
      cfg.rail_entrances
          ? parse_rail_entrances(
                read_file(cfg.resolve(*cfg.rail_entrances).string()))
                .entrances
          : entrances_from_network(net);
  std::vector<GeoPoint> points;
  for (auto const& e : entrances) {
    points.push_back(e.point);
  }
  ctx.entrances = SpatialIndex{std::move(points), 0.05};
  ctx.thresholds = cfg.connect_thresholds;
  ctx.pricing = p.pricing;
  ctx.leisure = cfg.leisure;
  for (auto const& z : cfg.exclusion_zones) {
    ctx.leisure.exclusion_zones.push_back(load_polygon(cfg.resolve(z).string()));
  }
  ctx.router = cfg.router;
  return ctx;
}

std::string correlations_csv(std::span<InstantSupply const> const supply,
                             std::string_view const metadata) {
  std::ostringstream o;
  o << metadata << "instant,pair,r\n";
  for (auto const& s : supply) {
    for (auto i = 0U; i < kPairNames.size(); ++i) {
      write_csv_row(o, {format_hhmm(s.instant_s), kPairNames[i],
                        s.r[i] ? format_double(*s.r[i]) : "undefined"});
    }
  }
  return o.str();
}

std::string classification_by_hour_csv(PeriodSummary const& s,
                                       std::string_view const metadata) {
  std::ostringstream o;
  o << metadata
    << "hour,n,T1,T2,T3,T4,C1,C2,C3,pct_T1,pct_T2,pct_T3,pct_T4,pct_C1,pct_C2,"
       "pct_C3\n";
  auto const row = [&](std::string const& hour, HourBin const& b) {
    std::vector<std::string> f{hour, std::to_string(b.n)};
    for (auto const v : b.transit) {
      f.push_back(std::to_string(v));
    }
    for (auto const v : b.bike) {
      f.push_back(std::to_string(v));
    }
    for (auto const v : b.transit) {
      f.push_back(pct(v, b.n));
    }
    for (auto const v : b.bike) {
      f.push_back(pct(v, b.n));
    }
    write_csv_row(o, f);
  };
  for (auto h = 0U; h < 24; ++h) {
    row(std::to_string(h), s.hours[h]);
  }
  row("all", s.all);
  return o.str();
}

std::string connecting_by_hour_csv(PeriodSummary const& s,
                                   std::string_view const metadata) {
  std::ostringstream o;
  o << metadata << "hour,n,connecting_lb,connecting_ub\n";
  for (auto h = 0U; h < 24; ++h) {
    auto const& b = s.hours[h];
    write_csv_row(o, {std::to_string(h), std::to_string(b.n),
                      std::to_string(b.connecting_lb),
                      std::to_string(b.connecting_ub)});
  }
  write_csv_row(o, {"all", std::to_string(s.all.n),
                    std::to_string(s.all.connecting_lb),
                    std::to_string(s.all.connecting_ub)});
  return o.str();
}

std::string summary_csv(std::span<PeriodSummary const> const summaries,
                        std::string_view const metadata) {
  std::ostringstream o;
  o << metadata
    << "period,n_trips,median_length_mi,median_duration_min,"
       "median_scooter_cost_usd,morning_peak_share,n_with_alternative,"
       "median_transit_min,median_time_saved_min,median_price_premium_usd\n";
  for (auto const& s : summaries) {
    write_csv_row(o, {s.label, std::to_string(s.n_trips),
                      format_double(s.median_length_mi),
                      format_double(s.median_duration_min),
                      format_double(s.median_scooter_cost_usd),
                      format_double(s.morning_peak_share),
                      std::to_string(s.n_with_alternative),
                      opt_num(s.median_transit_min),
                      opt_num(s.median_time_saved_min),
                      opt_num(s.median_price_premium_usd)});
  }
  return o.str();
}

std::string comparison_csv(std::span<MetricComparison const> const cmp,
                           std::string_view const label_a,
                           std::string_view const label_b,
                           std::string_view const metadata) {
  std::ostringstream o;
  o << metadata
    << fmt::format("metric,{},{},p_value,significance\n", csv_escape(label_a),
                   csv_escape(label_b));
  for (auto const& m : cmp) {
    write_csv_row(o, {m.metric, opt_num(m.a), opt_num(m.b), opt_num(m.p_value),
                      m.stars});
  }
  return o.str();
}

std::string sha256_hex(std::string_view const data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    fail(errc::internal_error, "sha256 failed");
  }
  std::string out;
  for (auto i = 0U; i < len; ++i) {
    out += fmt::format("{:02x}", digest[i]);
  }
  return out;
}

void run_pipeline(AnalysisConfig const& cfg, fs::path const& out_dir,
                  RunOptions const& opts) {
  if (cfg.periods.empty()) {
    fail(errc::config_error, "config: periods: must be nonempty");
  }
  if (fs::exists(out_dir)) {
    auto const replaceable =
        fs::is_directory(out_dir) &&
        (fs::is_empty(out_dir) || fs::exists(out_dir / "manifest.json"));
    if (!replaceable) {
      fail(errc::config_error,
           fmt::format("output: {} exists and is not a previous bundle",
                       out_dir.string()));
    }
  }

  auto const staging = fs::path{out_dir.string() + ".staging"};
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    auto const meta = metadata_header(cfg);
    std::vector<PeriodResult> results(cfg.periods.size());
    std::set<fs::path> inputs{fs::absolute(cfg.resolve(cfg.study_boundary))};
    if (cfg.rail_entrances) {
      inputs.insert(fs::absolute(cfg.resolve(*cfg.rail_entrances)));
    }
    for (auto const& z : cfg.exclusion_zones) {
      inputs.insert(fs::absolute(cfg.resolve(z)));
    }

    for (auto i = 0U; i < cfg.periods.size(); ++i) {
      auto const& p = cfg.periods[i];
      auto& r = results[i];
      r.period = &p;
      auto const name = [&](std::string_view const s) {
        return fmt::format("{}[{}]", s, p.label);
      };
      inputs.insert(fs::absolute(cfg.resolve(p.gtfs)));
      inputs.insert(fs::absolute(archive_path(cfg, p)));
      inputs.insert(fs::absolute(stations_path(cfg, p)));

      auto const net = stage(name("gtfs"), [&] {
        return load_gtfs(cfg.resolve(p.gtfs).string());
      });
      r.inference = stage(name("inference"),
                          [&] { return infer_period(cfg, p, net.zone()); });
      r.assessments = stage(name("classification"), [&] {
        auto const ctx = assessment_context(cfg, p, net);
        return assess_trips(r.inference.filtered.kept, ctx, opts.jobs);
      });
      r.supply = stage(name("supply"),
                       [&] { return supply_period(cfg, p, net, opts.jobs); });
      stage(name("report"), [&] {
        if (r.assessments.empty()) {
          fail(errc::empty_input, "no trips survived the filters");
        }
        r.summary = summarize(r.assessments, p.label);
        auto const dir = staging / p.label;
        auto const pmeta = meta + "# period: " + p.label + "\n";
        write_text(dir / "trips.csv",
                   write_trip_csv(r.inference.filtered.kept, pmeta));
        std::ostringstream rejected;
        rejected << pmeta << "vendor,vehicle,start_utc,end_utc,dist_mi,dur_min,"
                             "reason\n";
        for (auto const& t : r.inference.filtered.rejected) {
          write_csv_row(rejected,
                        {t.trip.vendor_id, t.trip.vehicle_id,
                         std::to_string(t.trip.start_time),
                         std::to_string(t.trip.end_time),
                         format_double(t.trip.distance_mi),
                         format_double(t.trip.duration_min),
                         std::string{to_string(t.reason)}});
        }
        write_text(dir / "rejected.csv", rejected.str());
        write_text(dir / "assessments.csv",
                   write_assessment_csv(r.assessments, pmeta));
        write_text(dir / "classification_by_hour.csv",
                   classification_by_hour_csv(r.summary, pmeta));
        write_text(dir / "connecting_by_hour.csv",
                   connecting_by_hour_csv(r.summary, pmeta));
        write_text(dir / "correlations.csv", correlations_csv(r.supply, pmeta));
        for (auto const& s : r.supply) {
          auto const base = hhmm_name(s.instant_s);
          for (auto const& [mode, g] :
               {std::pair{"escooter", &s.grids.escooter},
                std::pair{"bikeshare", &s.grids.bikeshare},
                std::pair{"transit", &s.grids.transit}}) {
            auto const stem = dir / "grids" / fmt::format("{}_{}", base, mode);
            write_text(stem.string() + ".csv",
                       grid_csv(*g, pmeta + "# instant: " +
                                        format_hhmm(s.instant_s) + "\n"));
            write_text(stem.string() + ".geojson", grid_geojson(*g));
          }
        }
      });
    }

    stage("report", [&] {
      std::vector<PeriodSummary> summaries;
      for (auto const& r : results) {
        summaries.push_back(r.summary);
      }
      write_text(staging / "summary.csv", summary_csv(summaries, meta));
      std::vector<MetricComparison> cmp;
      if (results.size() >= 2) {
        cmp = compare_periods(results[0].assessments, results[1].assessments);
        write_text(staging / "comparison.csv",
                   comparison_csv(cmp, results[0].summary.label,
                                  results[1].summary.label, meta));
      }
      write_text(staging / "report.md", report_md(cfg, results, cmp));

      json manifest;
      manifest["tool"] = "mobgap";
      manifest["generated_at"] = generation_time(opts);
      manifest["config"] = config_to_yaml(cfg);
      auto const base = fs::absolute(cfg.base_dir);
      auto& in = manifest["inputs"] = json::array();
      for (auto const& root : inputs) {
        for (auto const& f : files_under(root)) {
          in.push_back({{"path", relative_name(f, base)},
                        {"sha256", sha256_hex(read_file(f.string()))}});
        }
      }
      auto& out = manifest["outputs"] = json::array();
      for (auto const& f : files_under(staging)) {
        out.push_back({{"path", relative_name(f, staging)},
                       {"sha256", sha256_hex(read_file(f.string()))}});
      }
      auto& per = manifest["periods"] = json::array();
      for (auto const& r : results) {
        per.push_back({{"label", r.summary.label},
                       {"inferred_trips", r.inference.inferred.size()},
                       {"kept_trips", r.inference.filtered.kept.size()},
                       {"rejected_trips", r.inference.filtered.rejected.size()},
                       {"suppressed_relocations", r.inference.suppressed},
                       {"unlinked_events", r.inference.unlinked_events}});
      }
      write_text(staging / "manifest.json", manifest.dump(2) + "\n");
    });

    fs::remove_all(out_dir);
    fs::rename(staging, out_dir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

}  // namespace mobgap
