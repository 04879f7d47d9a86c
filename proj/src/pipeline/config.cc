#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fmt/format.h"
#include "yaml-cpp/yaml.h"

#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/pipeline.h"

namespace fs = std::filesystem;

namespace mobgap {

fs::path AnalysisConfig::resolve(std::string const& p) const {
  auto const path = fs::path{p};
  return path.is_absolute() ? path : base_dir / path;
}

namespace {

struct Reader {
  std::vector<std::string>& errors;
  std::vector<std::string>& warnings;

  template <typename T>
  void get(YAML::Node const& parent, char const* key, std::string const& path,
           T& out) {
    if (!parent.IsMap()) {
      return;
    }
    auto const n = parent[key];
    if (!n.IsDefined() || n.IsNull()) {
      return;
    }
    try {
      out = n.as<T>();
    } catch (YAML::Exception const&) {
      errors.push_back(fmt::format("{}: expected {}", path, type_name<T>()));
    }
  }

  template <typename T>
  void get(YAML::Node const& parent, char const* key, std::string const& path,
           std::optional<T>& out) {
    T v{};
    auto const n = parent.IsMap() ? parent[key] : YAML::Node{};
    if (n.IsDefined() && !n.IsNull()) {
      get(parent, key, path, v);
      out = v;
    }
  }

  void date(YAML::Node const& parent, char const* key, std::string const& path,
            std::optional<Date>& out) {
    auto s = std::string{};
    get(parent, key, path, s);
    if (s.empty()) {
      return;
    }
    try {
      out = parse_date(s);
    } catch (error const&) {
      errors.push_back(fmt::format("{}: invalid date '{}'", path, s));
    }
  }

  void section(YAML::Node const& root, char const* key) {
    auto const n = root[key];
    if (n.IsDefined() && !n.IsNull() && !n.IsMap()) {
      errors.push_back(fmt::format("{}: expected a mapping", key));
    }
  }

  template <typename T>
  static char const* type_name() {
    if constexpr (std::is_same_v<T, bool>) {
      return "a boolean";
    } else if constexpr (std::is_integral_v<T>) {
      return "an integer";
    } else if constexpr (std::is_floating_point_v<T>) {
      return "a number";
    } else {
      return "a string";
    }
  }
};

void unknown_keys(YAML::Node const& n, std::string const& path,
                  std::set<std::string> const& known,
                  std::vector<std::string>& warnings) {
  if (!n.IsMap()) {
    return;
  }
  for (auto const& kv : n) {
    auto const k = kv.first.as<std::string>();
    if (!known.contains(k)) {
      warnings.push_back(path.empty()
                             ? fmt::format("{}: unknown key ignored", k)
                             : fmt::format("{}.{}: unknown key ignored", path, k));
    }
  }
}

std::string quote(std::string_view const s) {
  std::string out = "\"";
  for (auto const c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace

ConfigReport parse_config(std::string const& yaml_text,
                          fs::path const& base_dir, bool const check_files) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (YAML::Exception const& e) {
    fail(errc::config_error, fmt::format("config does not parse: {}", e.what()));
  }
  if (!root.IsMap()) {
    fail(errc::config_error, "config must be a mapping");
  }

  ConfigReport report;
  auto& errors = report.errors;
  auto& warnings = report.warnings;
  Reader r{errors, warnings};
  AnalysisConfig c;
  c.base_dir = base_dir;

  unknown_keys(root, "",
               {"study_boundary", "archive", "vendors", "bikeshare_status",
                "rail_entrances", "periods", "instants", "radii", "grid",
                "staleness_horizon_s", "filter", "leisure", "inference",
                "router", "service_area", "connect_thresholds_ft"},
               warnings);
  for (auto const* s : {"radii", "grid", "filter", "leisure", "inference",
                        "router", "service_area"}) {
    r.section(root, s);
  }

  r.get(root, "study_boundary", "study_boundary", c.study_boundary);
  r.get(root, "archive", "archive", c.archive);
  r.get(root, "bikeshare_status", "bikeshare_status", c.bikeshare_status);
  r.get(root, "rail_entrances", "rail_entrances", c.rail_entrances);
  r.get(root, "staleness_horizon_s", "staleness_horizon_s",
        c.staleness_horizon_s);

  if (auto const v = root["vendors"]; v.IsDefined() && !v.IsNull()) {
    if (!v.IsSequence()) {
      errors.push_back("vendors: expected a list");
    } else {
      for (auto i = 0U; i < v.size(); ++i) {
        auto const path = fmt::format("vendors[{}]", i);
        VendorProfile p;
        auto mode = std::string{"consistent"};
        r.get(v[i], "vendor", path + ".vendor", p.vendor_id);
        r.get(v[i], "id_mode", path + ".id_mode", mode);
        r.get(v[i], "poll_interval_s", path + ".poll_interval_s",
              p.poll_interval_s);
        try {
          p.id_mode = parse_id_mode(mode);
        } catch (error const&) {
          errors.push_back(fmt::format("{}.id_mode: unknown mode '{}'", path, mode));
        }
        if (p.vendor_id.empty()) {
          errors.push_back(path + ".vendor: must be nonempty");
        }
        c.vendors.push_back(std::move(p));
      }
    }
  }

  if (auto const v = root["instants"]; v.IsDefined() && !v.IsNull()) {
    c.instants.clear();
    if (!v.IsSequence()) {
      errors.push_back("instants: expected a list of HH:MM times");
    } else {
      for (auto i = 0U; i < v.size(); ++i) {
        try {
          auto const s = parse_hms(v[i].as<std::string>());
          if (s < 0 || s >= 24 * 3600) {
            fail(errc::invalid_argument, "out of range");
          }
          c.instants.push_back(s);
        } catch (std::exception const&) {
          errors.push_back(fmt::format("instants[{}]: expected HH:MM", i));
        }
      }
      if (c.instants.empty()) {
        errors.push_back("instants: must be nonempty");
      }
      auto sorted = c.instants;
      std::sort(begin(sorted), end(sorted));
      if (std::adjacent_find(begin(sorted), end(sorted)) != end(sorted)) {
        errors.push_back("instants: must be distinct");
      }
    }
  }

  auto const radii = root["radii"];
  r.get(radii, "transit_mi", "radii.transit_mi", c.radii.transit);
  r.get(radii, "bikeshare_mi", "radii.bikeshare_mi", c.radii.bikeshare);
  r.get(radii, "escooter_mi", "radii.escooter_mi", c.radii.escooter);
  for (auto const& [name, v] :
       {std::pair{"radii.transit_mi", c.radii.transit},
        std::pair{"radii.bikeshare_mi", c.radii.bikeshare},
        std::pair{"radii.escooter_mi", c.radii.escooter}}) {
    if (!(v > 0.0)) {
      errors.push_back(fmt::format("{}: must be > 0", name));
    }
  }

  auto const grid = root["grid"];
  auto kernel = std::string{to_string(c.grid.kernel)};
  r.get(grid, "cell_mi", "grid.cell_mi", c.grid.cell_mi);
  r.get(grid, "fine_cell_mi", "grid.fine_cell_mi", c.grid.fine_cell_mi);
  r.get(grid, "kernel", "grid.kernel", kernel);
  try {
    c.grid.kernel = parse_kernel(kernel);
  } catch (error const&) {
    errors.push_back(
        fmt::format("grid.kernel: must be quartic or uniform, got '{}'", kernel));
  }
  if (!(c.grid.cell_mi > 0.0)) {
    errors.push_back("grid.cell_mi: must be > 0");
  } else if (!(c.grid.fine_cell_mi > 0.0) ||
             c.grid.fine_cell_mi > c.grid.cell_mi) {
    errors.push_back("grid.fine_cell_mi: must be in (0, cell_mi]");
  } else {
    auto const ratio = c.grid.cell_mi / c.grid.fine_cell_mi;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
      errors.push_back("grid.fine_cell_mi: must divide cell_mi evenly");
    }
  }
  if (c.staleness_horizon_s <= 0) {
    errors.push_back("staleness_horizon_s: must be > 0");
  }

  auto const filter = root["filter"];
  r.get(filter, "min_distance_mi", "filter.min_distance_mi",
        c.filter.min_distance_mi);
  r.get(filter, "max_distance_mi", "filter.max_distance_mi",
        c.filter.max_distance_mi);
  r.get(filter, "min_duration_min", "filter.min_duration_min",
        c.filter.min_duration_min);
  r.get(filter, "max_duration_min", "filter.max_duration_min",
        c.filter.max_duration_min);
  r.get(filter, "max_speed_mph", "filter.max_speed_mph", c.filter.max_speed_mph);
  if (!(c.filter.min_distance_mi < c.filter.max_distance_mi)) {
    errors.push_back("filter.min_distance_mi: must be below max_distance_mi");
  }
  if (!(c.filter.min_duration_min < c.filter.max_duration_min)) {
    errors.push_back("filter.min_duration_min: must be below max_duration_min");
  }
  if (!(c.filter.max_speed_mph > 0.0)) {
    errors.push_back("filter.max_speed_mph: must be > 0");
  }

  auto const leisure = root["leisure"];
  r.get(leisure, "min_speed_mph", "leisure.min_speed_mph",
        c.leisure.min_speed_mph);
  r.get(leisure, "min_distance_mi", "leisure.min_distance_mi",
        c.leisure.min_distance_mi);
  if (c.leisure.min_speed_mph < 0.0) {
    errors.push_back("leisure.min_speed_mph: must be >= 0");
  }
  if (c.leisure.min_distance_mi < 0.0) {
    errors.push_back("leisure.min_distance_mi: must be >= 0");
  }
  if (leisure.IsMap()) {
    if (auto const z = leisure["exclusion_zones"];
        z.IsDefined() && !z.IsNull()) {
      if (!z.IsSequence()) {
        errors.push_back("leisure.exclusion_zones: expected a list of files");
      } else {
        for (auto i = 0U; i < z.size(); ++i) {
          c.exclusion_zones.push_back(z[i].as<std::string>());
        }
      }
    }
  }

  auto const inference = root["inference"];
  auto jump_pct = c.inference.relocation_battery_jump * 100.0;
  auto max_gap_h = c.inference.max_gap_s / 3600.0;
  r.get(inference, "suppress_relocations", "inference.suppress_relocations",
        c.inference.suppress_relocations);
  r.get(inference, "relocation_battery_jump_pct",
        "inference.relocation_battery_jump_pct", jump_pct);
  r.get(inference, "max_gap_h", "inference.max_gap_h", max_gap_h);
  if (!(jump_pct >= 0.0 && jump_pct <= 100.0)) {
    errors.push_back("inference.relocation_battery_jump_pct: must be in [0, 100]");
  }
  if (!(max_gap_h > 0.0)) {
    errors.push_back("inference.max_gap_h: must be > 0");
  }
  c.inference.relocation_battery_jump = jump_pct / 100.0;
  c.inference.max_gap_s = static_cast<int>(std::lround(max_gap_h * 3600.0));

  auto const router = root["router"];
  auto& rc = c.router;
  r.get(router, "walk_speed_mph", "router.walk_speed_mph", rc.walk_speed_mph);
  r.get(router, "max_access_walk_mi", "router.max_access_walk_mi",
        rc.max_access_walk_mi);
  r.get(router, "max_transfer_walk_mi", "router.max_transfer_walk_mi",
        rc.max_transfer_walk_mi);
  r.get(router, "max_transfers", "router.max_transfers", rc.max_transfers);
  r.get(router, "boarding_alighting_min", "router.boarding_alighting_min",
        rc.boarding_alighting_min);
  r.get(router, "departure_window_min", "router.departure_window_min",
        rc.departure_window_min);
  r.get(router, "window_step_min", "router.window_step_min",
        rc.window_step_min);
  for (auto const& [name, ok] :
       {std::pair{"router.walk_speed_mph", rc.walk_speed_mph > 0.0},
        std::pair{"router.max_access_walk_mi", rc.max_access_walk_mi > 0.0},
        std::pair{"router.max_transfer_walk_mi", rc.max_transfer_walk_mi > 0.0},
        std::pair{"router.boarding_alighting_min",
                  rc.boarding_alighting_min > 0.0},
        std::pair{"router.departure_window_min", rc.departure_window_min >= 1},
        std::pair{"router.window_step_min", rc.window_step_min >= 1}}) {
    if (!ok) {
      errors.push_back(fmt::format("{}: must be positive", name));
    }
  }
  if (rc.max_transfers < 0) {
    errors.push_back("router.max_transfers: must be >= 0");
  }

  auto const area = root["service_area"];
  r.get(area, "transit_mi", "service_area.transit_mi", c.service_area.transit_mi);
  r.get(area, "bikeshare_mi", "service_area.bikeshare_mi",
        c.service_area.bikeshare_mi);
  if (!(c.service_area.transit_mi > 0.0)) {
    errors.push_back("service_area.transit_mi: must be > 0");
  }
  if (!(c.service_area.bikeshare_mi > 0.0)) {
    errors.push_back("service_area.bikeshare_mi: must be > 0");
  }

  if (auto const t = root["connect_thresholds_ft"]; t.IsDefined() && !t.IsNull()) {
    std::vector<double> v;
    try {
      v = t.as<std::vector<double>>();
    } catch (YAML::Exception const&) {
      errors.push_back("connect_thresholds_ft: expected two numbers");
    }
    if (v.size() == 2) {
      if (v[0] > v[1]) {
        warnings.push_back(fmt::format(
            "connect_thresholds_ft: [{}, {}] normalized to ascending [{}, {}]",
            format_double(v[0]), format_double(v[1]), format_double(v[1]),
            format_double(v[0])));
        std::swap(v[0], v[1]);
      }
      if (!(v[0] > 0.0)) {
        errors.push_back("connect_thresholds_ft: thresholds must be > 0");
      }
      c.connect_thresholds = {v[0], v[1]};
    } else if (!v.empty()) {
      errors.push_back("connect_thresholds_ft: expected exactly two numbers");
    }
  }

  auto const periods = root["periods"];
  if (periods.IsDefined() && !periods.IsNull() && !periods.IsSequence()) {
    errors.push_back("periods: expected a list");
  } else if (!periods.IsDefined() || periods.size() == 0) {
    errors.push_back("periods: must be nonempty");
  } else {
    std::set<std::string> labels;
    for (auto i = 0U; i < periods.size(); ++i) {
      auto const& pn = periods[i];
      auto const path = fmt::format("periods[{}]", i);
      unknown_keys(pn, path,
                   {"label", "start_date", "end_date", "supply_date", "gtfs",
                    "archive", "bikeshare_status", "pricing"},
                   warnings);
      PeriodConfig p;
      std::optional<Date> start;
      std::optional<Date> end;
      r.get(pn, "label", path + ".label", p.label);
      r.date(pn, "start_date", path + ".start_date", start);
      r.date(pn, "end_date", path + ".end_date", end);
      r.date(pn, "supply_date", path + ".supply_date", p.supply_date);
      r.get(pn, "gtfs", path + ".gtfs", p.gtfs);
      r.get(pn, "archive", path + ".archive", p.archive);
      r.get(pn, "bikeshare_status", path + ".bikeshare_status",
            p.bikeshare_status);
      auto const pricing = pn.IsMap() ? pn["pricing"] : YAML::Node{};
      r.get(pricing, "unlock_usd", path + ".pricing.unlock_usd",
            p.pricing.unlock_usd);
      r.get(pricing, "per_min_usd", path + ".pricing.per_min_usd",
            p.pricing.per_min_usd);
      r.get(pricing, "bus_fare_usd", path + ".pricing.bus_fare_usd",
            p.pricing.bus_fare_usd);
      r.get(pricing, "rail_fare_usd", path + ".pricing.rail_fare_usd",
            p.pricing.rail_fare_usd);

      auto const safe_label =
          !p.label.empty() &&
          std::all_of(p.label.begin(), p.label.end(), [](char const ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ||
                   ch == '_';
          });
      if (p.label.empty()) {
        errors.push_back(path + ".label: must be nonempty");
      } else if (!safe_label) {
        errors.push_back(
            path + ".label: only letters, digits, '-' and '_' are allowed");
      } else if (!labels.insert(p.label).second) {
        errors.push_back(path + ".label: duplicate label '" + p.label + "'");
      }
      if (!start) {
        errors.push_back(path + ".start_date: required");
      }
      if (!end) {
        errors.push_back(path + ".end_date: required");
      }
      if (start && end && *end < *start) {
        errors.push_back(path + ".end_date: precedes start_date");
      }
      if (start && p.supply_date &&
          (*p.supply_date < *start || (end && *end < *p.supply_date))) {
        errors.push_back(path + ".supply_date: outside the period");
      }
      if (p.gtfs.empty()) {
        errors.push_back(path + ".gtfs: required");
      }
      if (p.pricing.unlock_usd < 0.0 || p.pricing.per_min_usd < 0.0 ||
          p.pricing.bus_fare_usd < 0.0 || p.pricing.rail_fare_usd < 0.0) {
        errors.push_back(path + ".pricing: values must be >= 0");
      }
      if (i > 0 && start && !c.periods.empty() &&
          *start < c.periods.back().start_date) {
        errors.push_back(path + ".start_date: periods must be in date order");
      }
      p.start_date = start.value_or(Date{});
      p.end_date = end.value_or(Date{});
      c.periods.push_back(std::move(p));
    }
  }
  if (c.periods.size() > 2) {
    warnings.push_back(
        "periods: only the first two periods are compared for significance");
  }

  auto const need = [&](std::string const& field, std::string const& value,
                        bool const required) {
    if (value.empty()) {
      if (required) {
        errors.push_back(field + ": required");
      }
      return;
    }
    if (check_files && !fs::exists(c.resolve(value))) {
      errors.push_back(fmt::format("{}: file not found: {}", field, value));
    }
  };
  need("study_boundary", c.study_boundary, true);
  auto const every_period_has = [&](auto member) {
    return !c.periods.empty() &&
           std::all_of(begin(c.periods), end(c.periods),
                       [&](PeriodConfig const& p) { return (p.*member).has_value(); });
  };
  need("archive", c.archive, !every_period_has(&PeriodConfig::archive));
  need("bikeshare_status", c.bikeshare_status,
       !every_period_has(&PeriodConfig::bikeshare_status));
  if (c.rail_entrances) {
    need("rail_entrances", *c.rail_entrances, true);
  }
  for (auto i = 0U; i < c.exclusion_zones.size(); ++i) {
    need(fmt::format("leisure.exclusion_zones[{}]", i), c.exclusion_zones[i],
         true);
  }
  for (auto i = 0U; i < c.periods.size(); ++i) {
    auto const& p = c.periods[i];
    if (!p.gtfs.empty()) {
      need(fmt::format("periods[{}].gtfs", i), p.gtfs, true);
    }
    if (p.archive) {
      need(fmt::format("periods[{}].archive", i), *p.archive, true);
    }
    if (p.bikeshare_status) {
      need(fmt::format("periods[{}].bikeshare_status", i), *p.bikeshare_status,
           true);
    }
  }

  if (report.errors.empty()) {
    report.config = std::move(c);
  }
  return report;
}

ConfigReport validate_config(std::string const& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (error const& e) {
    fail(errc::config_error, e.message());
  }
  return parse_config(text, fs::path{path}.parent_path());
}

AnalysisConfig load_config(std::string const& path) {
  auto report = validate_config(path);
  if (!report.ok()) {
    std::string msg = "invalid config " + path;
    for (auto const& e : report.errors) {
      msg += "\n  " + e;
    }
    fail(errc::config_error, msg);
  }
  return std::move(*report.config);
}

std::string config_to_yaml(AnalysisConfig const& c) {
  auto const d = [](double const v) { return format_double(v); };
  std::ostringstream o;
  o << "study_boundary: " << quote(c.study_boundary) << "\n";
  o << "archive: " << quote(c.archive) << "\n";
  o << "bikeshare_status: " << quote(c.bikeshare_status) << "\n";
  if (c.rail_entrances) {
    o << "rail_entrances: " << quote(*c.rail_entrances) << "\n";
  }
  o << "vendors:" << (c.vendors.empty() ? " []" : "") << "\n";
  for (auto const& v : c.vendors) {
    o << "  - vendor: " << quote(v.vendor_id) << "\n"
      << "    id_mode: " << to_string(v.id_mode) << "\n";
  }
  o << "instants: [";
  for (auto i = 0U; i < c.instants.size(); ++i) {
    o << (i == 0 ? "" : ", ") << quote(format_hhmm(c.instants[i]));
  }
  o << "]\n";
  o << "radii:\n"
    << "  transit_mi: " << d(c.radii.transit) << "\n"
    << "  bikeshare_mi: " << d(c.radii.bikeshare) << "\n"
    << "  escooter_mi: " << d(c.radii.escooter) << "\n";
  o << "grid:\n"
    << "  cell_mi: " << d(c.grid.cell_mi) << "\n"
    << "  fine_cell_mi: " << d(c.grid.fine_cell_mi) << "\n"
    << "  kernel: " << to_string(c.grid.kernel) << "\n";
  o << "staleness_horizon_s: " << c.staleness_horizon_s << "\n";
  o << "filter:\n"
    << "  min_distance_mi: " << d(c.filter.min_distance_mi) << "\n"
    << "  max_distance_mi: " << d(c.filter.max_distance_mi) << "\n"
    << "  min_duration_min: " << d(c.filter.min_duration_min) << "\n"
    << "  max_duration_min: " << d(c.filter.max_duration_min) << "\n"
    << "  max_speed_mph: " << d(c.filter.max_speed_mph) << "\n";
  o << "leisure:\n"
    << "  min_speed_mph: " << d(c.leisure.min_speed_mph) << "\n"
    << "  min_distance_mi: " << d(c.leisure.min_distance_mi) << "\n"
    << "  exclusion_zones: [";
  for (auto i = 0U; i < c.exclusion_zones.size(); ++i) {
    o << (i == 0 ? "" : ", ") << quote(c.exclusion_zones[i]);
  }
  o << "]\n";
  o << "inference:\n"
    << "  suppress_relocations: "
    << (c.inference.suppress_relocations ? "true" : "false") << "\n"
    << "  relocation_battery_jump_pct: "
    << d(c.inference.relocation_battery_jump * 100.0) << "\n"
    << "  max_gap_h: " << d(c.inference.max_gap_s / 3600.0) << "\n";
  o << "router:\n"
    << "  walk_speed_mph: " << d(c.router.walk_speed_mph) << "\n"
    << "  max_access_walk_mi: " << d(c.router.max_access_walk_mi) << "\n"
    << "  max_transfer_walk_mi: " << d(c.router.max_transfer_walk_mi) << "\n"
    << "  max_transfers: " << c.router.max_transfers << "\n"
    << "  boarding_alighting_min: " << d(c.router.boarding_alighting_min) << "\n"
    << "  departure_window_min: " << c.router.departure_window_min << "\n"
    << "  window_step_min: " << c.router.window_step_min << "\n";
  o << "service_area:\n"
    << "  transit_mi: " << d(c.service_area.transit_mi) << "\n"
    << "  bikeshare_mi: " << d(c.service_area.bikeshare_mi) << "\n";
  o << "connect_thresholds_ft: [" << d(c.connect_thresholds.lower_ft) << ", "
    << d(c.connect_thresholds.upper_ft) << "]\n";
  o << "periods:" << (c.periods.empty() ? " []" : "") << "\n";
  for (auto const& p : c.periods) {
    o << "  - label: " << quote(p.label) << "\n"
      << "    start_date: " << format_date(p.start_date) << "\n"
      << "    end_date: " << format_date(p.end_date) << "\n";
    if (p.supply_date) {
      o << "    supply_date: " << format_date(*p.supply_date) << "\n";
    }
    o << "    gtfs: " << quote(p.gtfs) << "\n";
    if (p.archive) {
      o << "    archive: " << quote(*p.archive) << "\n";
    }
    if (p.bikeshare_status) {
      o << "    bikeshare_status: " << quote(*p.bikeshare_status) << "\n";
    }
    o << "    pricing:\n"
      << "      unlock_usd: " << d(p.pricing.unlock_usd) << "\n"
      << "      per_min_usd: " << d(p.pricing.per_min_usd) << "\n"
      << "      bus_fare_usd: " << d(p.pricing.bus_fare_usd) << "\n"
      << "      rail_fare_usd: " << d(p.pricing.rail_fare_usd) << "\n";
  }
  return o.str();
}

std::string default_config_yaml() {
  AnalysisConfig c;
  c.study_boundary = "boundary.geojson";
  c.archive = "archive";
  c.bikeshare_status = "stations.csv";
  auto pre = PeriodConfig{};
  pre.label = "pre";
  pre.start_date = parse_date("2019-07-15");
  pre.end_date = parse_date("2019-07-21");
  pre.gtfs = "gtfs-2019.zip";
  auto during = pre;
  during.label = "during";
  during.start_date = parse_date("2020-06-15");
  during.end_date = parse_date("2020-06-21");
  during.gtfs = "gtfs-2020.zip";
  during.pricing.per_min_usd = 0.25;
  c.periods = {pre, during};
  return config_to_yaml(c);
}

std::string metadata_header(AnalysisConfig const& c) {
  std::ostringstream o;
  o << "# mobgap analysis settings\n";
  std::istringstream in{config_to_yaml(c)};
  for (std::string line; std::getline(in, line);) {
    o << "# " << line << "\n";
  }
  o << "# distance_model: great-circle haversine, earth radius "
    << format_double(kEarthRadiusMi) << " mi\n"
    << "# grid_projection: local azimuthal equidistant at boundary bbox centre\n"
    << "# cell_value: fine-raster kernel at cell centres, zonal mean per cell\n"
    << "# coverage_model: straight-line distance, inclusive radius\n"
    << "# trip_start: first polling cycle the vehicle is unavailable\n"
    << "# transit_weight: rail visit " << kRailVehicleWeight
    << ", bus visit 1, departures in the following hour\n"
    << "# window_samples: "
    << 2 * (c.router.departure_window_min / c.router.window_step_min) + 1
    << ", median excludes unreachable, unreachable if more than half\n"
    << "# significance: two-sided Mann-Whitney U, normal approximation\n";
  return o.str();
}

}  // namespace mobgap
