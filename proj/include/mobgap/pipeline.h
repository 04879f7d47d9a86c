#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mobgap/classify.h"
#include "mobgap/feeds.h"
#include "mobgap/router.h"
#include "mobgap/supply.h"
#include "mobgap/tripinfer.h"

namespace mobgap {

struct PeriodConfig {
  std::string label;
  Date start_date{};
  Date end_date{};
  std::optional<Date> supply_date;  // defaults to start_date
  std::string gtfs;
  std::optional<std::string> archive;           // overrides the global one
  std::optional<std::string> bikeshare_status;  // overrides the global one
  PricingScheme pricing;

  Date supply_day() const { return supply_date.value_or(start_date); }
};

struct GridConfig {
  double cell_mi{0.25};
  double fine_cell_mi{0.05};
  Kernel kernel{Kernel::quartic};
};

struct ServiceRadii {
  double transit_mi{0.25};
  double bikeshare_mi{0.125};
};

struct AnalysisConfig {
  std::string study_boundary;
  std::string archive;
  std::vector<VendorProfile> vendors;  // empty: every archived vendor
  std::string bikeshare_status;
  std::optional<std::string> rail_entrances;  // else GTFS entrances
  std::vector<PeriodConfig> periods;
  std::vector<int> instants{7 * 3600, 12 * 3600, 17 * 3600, 20 * 3600};
  ModeRadii radii;
  GridConfig grid;
  int staleness_horizon_s{600};
  FilterPolicy filter;
  LeisurePolicy leisure;
  std::vector<std::string> exclusion_zones;  // polygon files
  InferenceOptions inference;
  RouterConfig router;
  ServiceRadii service_area;
  ConnectThresholds connect_thresholds;

  // Directory relative paths are resolved against.
  std::filesystem::path base_dir{"."};

  std::filesystem::path resolve(std::string const& p) const;
};

struct ConfigReport {
  std::optional<AnalysisConfig> config;  // set when there are no errors
  std::vector<std::string> errors;       // "field: violation"
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

// Throws ConfigError when the text is not parseable. Field-level problems are
// collected as diagnostics. With `check_files` every referenced file must
// exist.
ConfigReport parse_config(std::string const& yaml_text,
                          std::filesystem::path const& base_dir,
                          bool check_files = true);
ConfigReport validate_config(std::string const& path);

// Loads and validates, throwing ConfigError with all diagnostics.
AnalysisConfig load_config(std::string const& path);

std::string config_to_yaml(AnalysisConfig const&);
std::string default_config_yaml();

// "# "-prefixed lines recording every setting.
std::string metadata_header(AnalysisConfig const&);

struct InferenceOutput {
  std::vector<InferredTrip> inferred;
  FilterResult filtered;
  std::size_t suppressed{0};
  std::size_t unlinked_events{0};
};

// Replays the period's local dates [start_date, end_date] in `zone`.
InferenceOutput infer_period(AnalysisConfig const&, PeriodConfig const&,
                             TimeZone const& zone);

struct InstantSupply {
  int instant_s{0};
  SupplySnapshot grids;
  // bikeshare-escooter, transit-escooter, bikeshare-transit; nullopt when a
  // grid is constant.
  std::array<std::optional<double>, 3> r;
};

std::vector<InstantSupply> supply_period(AnalysisConfig const&,
                                         PeriodConfig const&,
                                         TransitNetwork const&,
                                         unsigned jobs = 1);

AssessmentContext assessment_context(AnalysisConfig const&, PeriodConfig const&,
                                     TransitNetwork const&);

struct RunOptions {
  unsigned jobs{1};
  std::optional<std::string> generated_at;  // defaults to the current time
};

// Writes the report bundle to `out_dir`. Outputs are staged next to the
// target and moved into place only on success. Errors carry the failing
// stage name.
void run_pipeline(AnalysisConfig const&, std::filesystem::path const& out_dir,
                  RunOptions const& = {});

std::string correlations_csv(std::span<InstantSupply const>,
                             std::string_view metadata = {});
std::string classification_by_hour_csv(PeriodSummary const&,
                                       std::string_view metadata = {});
std::string connecting_by_hour_csv(PeriodSummary const&,
                                   std::string_view metadata = {});
std::string summary_csv(std::span<PeriodSummary const>,
                        std::string_view metadata = {});
std::string comparison_csv(std::span<MetricComparison const>,
                           std::string_view label_a, std::string_view label_b,
                           std::string_view metadata = {});

std::string sha256_hex(std::string_view data);

}  // namespace mobgap
