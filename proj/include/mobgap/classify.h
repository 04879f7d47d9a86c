#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobgap/feeds.h"
#include "mobgap/geo.h"
#include "mobgap/router.h"
#include "mobgap/tripinfer.h"

namespace mobgap {

enum class ServiceMode { transit, bikeshare };

struct Site {
  std::string site_id;
  GeoPoint point;
};

class ServiceArea {
public:
  ServiceArea() = default;
  ServiceArea(ServiceMode, std::vector<Site>, double radius_mi);

  // Boardable stops of the network, radius 0.25 mi unless given.
  static ServiceArea transit(TransitNetwork const&, double radius_mi = 0.25);
  static ServiceArea bikeshare(std::span<BikeStationStatus const>,
                               double radius_mi = 0.125);

  ServiceMode mode() const { return mode_; }
  double radius_mi() const { return radius_mi_; }
  std::vector<Site> const& sites() const { return sites_; }

  // Sites with great-circle distance <= radius (inclusive).
  std::vector<std::size_t> covering(GeoPoint const&) const;
  bool covers(GeoPoint const& p) const { return !covering(p).empty(); }

private:
  ServiceMode mode_{ServiceMode::transit};
  std::vector<Site> sites_;
  double radius_mi_{0.25};
  SpatialIndex index_;
};

// Answers whether one scheduled trip serves some stop of O before some stop
// of D on a service date.
class DirectLineIndex {
public:
  explicit DirectLineIndex(TransitNetwork const&);

  bool connects(std::span<std::string const> from_stops,
                std::span<std::string const> to_stops, Date) const;

private:
  struct Visit {
    std::uint32_t trip;
    std::uint32_t position;
  };
  TransitNetwork const* network_;
  std::vector<std::vector<Visit>> visits_;  // per stop index
};

enum class TransitType { t1, t2, t3, t4 };
enum class BikeClass { c1, c2, c3 };

std::string_view to_string(TransitType);
std::string_view to_string(BikeClass);
TransitType parse_transit_type(std::string_view);
BikeClass parse_bike_class(std::string_view);

// `area` must be built from the same network as `direct`.
TransitType classify_vs_transit(InferredTrip const&, ServiceArea const& area,
                                DirectLineIndex const& direct,
                                Date service_date);
BikeClass classify_vs_bikeshare(InferredTrip const&, ServiceArea const& area);

struct ConnectThresholds {
  double lower_ft{30.0};
  double upper_ft{100.0};
};

struct Connecting {
  bool lb{false};
  bool ub{false};
};

Connecting detect_transit_connecting(InferredTrip const&,
                                     SpatialIndex const& entrances,
                                     ConnectThresholds const& = {});

struct PricingScheme {
  double unlock_usd{1.00};
  double per_min_usd{0.15};
  double bus_fare_usd{2.00};
  double rail_fare_usd{2.25};

  void validate() const;
};

double scooter_cost(InferredTrip const&, PricingScheme const&);

struct CostComparison {
  double scooter_cost_usd{0.0};
  double transit_cost_usd{0.0};
  double price_premium_usd{0.0};
  double time_saved_min{0.0};
};

// Throws NoAlternative when `alt` is unreachable.
CostComparison compare_costs(InferredTrip const&, PricingScheme const&,
                             WindowedResult const& alt);

struct TransitAlternative {
  double median_min{0.0};
  double cost_usd{0.0};
  RouteMode first_mode{RouteMode::bus};
  std::size_t n_reachable{0};
  int best_n_transfers{0};
};

struct TripAssessment {
  InferredTrip trip;
  TransitType transit_type{TransitType::t4};
  BikeClass bike_class{BikeClass::c3};
  bool connecting_lb{false};
  bool connecting_ub{false};
  bool utilitarian{false};
  int local_hour{0};
  std::optional<TransitAlternative> transit_alt;
  double scooter_cost_usd{0.0};
  std::optional<double> time_saved_min;
  std::optional<double> price_premium_usd;
};

struct AssessmentContext {
  TransitNetwork const* network{nullptr};
  ServiceArea transit_area;
  ServiceArea bike_area;
  SpatialIndex entrances;
  ConnectThresholds thresholds;
  PricingScheme pricing;
  LeisurePolicy leisure;
  RouterConfig router;
};

// Classifies every trip and, for utilitarian T1/T2 trips, computes the
// windowed transit alternative and the cost comparison. Output order follows
// the input.
std::vector<TripAssessment> assess_trips(std::span<InferredTrip const>,
                                         AssessmentContext const&,
                                         unsigned jobs = 1);

std::string write_assessment_csv(std::span<TripAssessment const>,
                                 std::string_view metadata = {});
std::vector<TripAssessment> parse_assessment_csv(std::string_view);

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

struct HourBin {
  std::size_t n{0};
  std::array<std::size_t, 4> transit{};  // T1..T4
  std::array<std::size_t, 3> bike{};     // C1..C3
  std::size_t connecting_lb{0};
  std::size_t connecting_ub{0};
};

struct PeriodSummary {
  std::string label;
  std::array<HourBin, 24> hours{};
  HourBin all;

  std::size_t n_trips{0};
  double median_length_mi{0.0};
  double median_duration_min{0.0};
  double median_scooter_cost_usd{0.0};
  double morning_peak_share{0.0};  // local start hour in [6, 9)
  std::size_t n_with_alternative{0};
  std::optional<double> median_transit_min;
  std::optional<double> median_time_saved_min;
  std::optional<double> median_price_premium_usd;
};

// Throws EmptyInput.
PeriodSummary summarize(std::span<TripAssessment const>, std::string label);

struct MetricComparison {
  std::string metric;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> p_value;
  std::string stars;
};

// Medians of both periods with two-sided Mann-Whitney markers.
std::vector<MetricComparison> compare_periods(
    std::span<TripAssessment const> a, std::span<TripAssessment const> b);

}  // namespace mobgap
