#include "mobgap/classify.h"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "fmt/format.h"

#include "mobgap/csv.h"
#include "mobgap/error.h"
#include "mobgap/parallel.h"
#include "mobgap/stats.h"

namespace mobgap {

ServiceArea::ServiceArea(ServiceMode const mode, std::vector<Site> sites,
                         double const radius_mi)
    : mode_{mode}, sites_{std::move(sites)}, radius_mi_{radius_mi} {
  if (!(radius_mi_ > 0.0)) {
    fail(errc::invalid_argument, "service radius must be positive");
  }
  std::vector<GeoPoint> points;
  points.reserve(sites_.size());
  for (auto const& s : sites_) {
    points.push_back(s.point);
  }
  index_ = SpatialIndex{std::move(points), std::max(radius_mi_, 0.05)};
}

ServiceArea ServiceArea::transit(TransitNetwork const& n,
                                 double const radius_mi) {
  std::vector<Site> sites;
  for (auto const& s : n.stops) {
    if (s.location_type == LocationType::stop) {
      sites.push_back({s.stop_id, s.point});
    }
  }
  return ServiceArea{ServiceMode::transit, std::move(sites), radius_mi};
}

ServiceArea ServiceArea::bikeshare(
    std::span<BikeStationStatus const> const stations, double const radius_mi) {
  std::map<std::string, GeoPoint> unique;
  for (auto const& s : stations) {
    unique.emplace(s.station_id, s.point);
  }
  std::vector<Site> sites;
  for (auto const& [id, p] : unique) {
    sites.push_back({id, p});
  }
  return ServiceArea{ServiceMode::bikeshare, std::move(sites), radius_mi};
}

std::vector<std::size_t> ServiceArea::covering(GeoPoint const& p) const {
  return index_.within(p, radius_mi_);
}

DirectLineIndex::DirectLineIndex(TransitNetwork const& n)
    : network_{&n}, visits_(n.stops.size()) {
  for (auto t = 0U; t < n.trips.size(); ++t) {
    auto const events = n.events_of(t);
    for (auto i = 0U; i < events.size(); ++i) {
      visits_[*n.stop_index(events[i].stop_id)].push_back({t, i});
    }
  }
}

bool DirectLineIndex::connects(std::span<std::string const> const from_stops,
                               std::span<std::string const> const to_stops,
                               Date const day) const {
  std::unordered_map<std::uint32_t, std::uint32_t> first_board;
  for (auto const& id : from_stops) {
    auto const s = network_->stop_index(id);
    if (!s) {
      continue;
    }
    for (auto const& v : visits_[*s]) {
      auto const [it, inserted] = first_board.emplace(v.trip, v.position);
      if (!inserted) {
        it->second = std::min(it->second, v.position);
      }
    }
  }
  for (auto const& id : to_stops) {
    auto const s = network_->stop_index(id);
    if (!s) {
      continue;
    }
    for (auto const& v : visits_[*s]) {
      auto const it = first_board.find(v.trip);
      if (it != end(first_board) && it->second < v.position &&
          network_->runs_on(v.trip, day)) {
        return true;
      }
    }
  }
  return false;
}

std::string_view to_string(TransitType const t) {
  switch (t) {
    case TransitType::t1: return "T1";
    case TransitType::t2: return "T2";
    case TransitType::t3: return "T3";
    case TransitType::t4: return "T4";
  }
  return "?";
}

std::string_view to_string(BikeClass const c) {
  switch (c) {
    case BikeClass::c1: return "C1";
    case BikeClass::c2: return "C2";
    case BikeClass::c3: return "C3";
  }
  return "?";
}

TransitType parse_transit_type(std::string_view const s) {
  for (auto const t :
       {TransitType::t1, TransitType::t2, TransitType::t3, TransitType::t4}) {
    if (to_string(t) == s) {
      return t;
    }
  }
  fail(errc::malformed_document, fmt::format("unknown transit type '{}'", s));
}

BikeClass parse_bike_class(std::string_view const s) {
  for (auto const c : {BikeClass::c1, BikeClass::c2, BikeClass::c3}) {
    if (to_string(c) == s) {
      return c;
    }
  }
  fail(errc::malformed_document, fmt::format("unknown bike class '{}'", s));
}

TransitType classify_vs_transit(InferredTrip const& trip,
                                ServiceArea const& area,
                                DirectLineIndex const& direct,
                                Date const service_date) {
  auto const o = area.covering(trip.origin);
  auto const d = area.covering(trip.destination);
  if (o.empty() && d.empty()) {
    return TransitType::t4;
  }
  if (o.empty() || d.empty()) {
    return TransitType::t3;
  }
  auto const ids = [&](std::vector<std::size_t> const& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto const i : idx) {
      out.push_back(area.sites()[i].site_id);
    }
    return out;
  };
  return direct.connects(ids(o), ids(d), service_date) ? TransitType::t1
                                                       : TransitType::t2;
}

BikeClass classify_vs_bikeshare(InferredTrip const& trip,
                                ServiceArea const& area) {
  auto const n = static_cast<int>(area.covers(trip.origin)) +
                 static_cast<int>(area.covers(trip.destination));
  return n == 2 ? BikeClass::c1 : n == 1 ? BikeClass::c2 : BikeClass::c3;
}

Connecting detect_transit_connecting(InferredTrip const& trip,
                                     SpatialIndex const& entrances,
                                     ConnectThresholds const& th) {
  auto const lo = feet_to_miles(std::min(th.lower_ft, th.upper_ft));
  auto const hi = feet_to_miles(std::max(th.lower_ft, th.upper_ft));
  auto const nearest = std::min(entrances.nearest_mi(trip.origin, hi),
                                entrances.nearest_mi(trip.destination, hi));
  return {nearest <= lo, nearest <= hi};
}

void PricingScheme::validate() const {
  if (unlock_usd < 0.0 || per_min_usd < 0.0 || bus_fare_usd < 0.0 ||
      rail_fare_usd < 0.0) {
    fail(errc::invalid_argument, "pricing values must be >= 0");
  }
}

double scooter_cost(InferredTrip const& t, PricingScheme const& p) {
  return p.unlock_usd + p.per_min_usd * t.duration_min;
}

CostComparison compare_costs(InferredTrip const& trip, PricingScheme const& p,
                             WindowedResult const& alt) {
  if (!alt.reachable() || !alt.median_journey) {
    fail(errc::no_alternative, "no transit alternative for trip of vehicle " +
                                   trip.vehicle_id);
  }
  CostComparison c;
  c.scooter_cost_usd = scooter_cost(trip, p);
  c.transit_cost_usd = alt.median_journey->first_ride_mode() == RouteMode::rail
                           ? p.rail_fare_usd
                           : p.bus_fare_usd;
  c.price_premium_usd = c.scooter_cost_usd - c.transit_cost_usd;
  c.time_saved_min = *alt.median_min - trip.duration_min;
  return c;
}

std::vector<TripAssessment> assess_trips(std::span<InferredTrip const> const trips,
                                         AssessmentContext const& ctx,
                                         unsigned const jobs) {
  if (ctx.network == nullptr) {
    fail(errc::invalid_argument, "assessment needs a transit network");
  }
  auto const& net = *ctx.network;
  DirectLineIndex const direct{net};

  std::vector<TripAssessment> out(trips.size());
  std::vector<Date> dates(trips.size());
  parallel_for(trips.size(), jobs, [&](std::size_t const i) {
    auto const& t = trips[i];
    auto const local = net.zone().to_local(t.start_time);
    dates[i] = local.date;
    auto& a = out[i];
    a.trip = t;
    a.local_hour = local.seconds_of_day / 3600;
    a.transit_type = classify_vs_transit(t, ctx.transit_area, direct, local.date);
    a.bike_class = classify_vs_bikeshare(t, ctx.bike_area);
    auto const conn = detect_transit_connecting(t, ctx.entrances, ctx.thresholds);
    a.connecting_lb = conn.lb;
    a.connecting_ub = conn.ub;
    a.utilitarian = !is_leisure(t, ctx.leisure);
    a.scooter_cost_usd = scooter_cost(t, ctx.pricing);
  });

  auto const needs_alt = [&](TripAssessment const& a) {
    return a.utilitarian && (a.transit_type == TransitType::t1 ||
                             a.transit_type == TransitType::t2);
  };
  std::map<std::int64_t, std::unique_ptr<Timetable>> timetables;
  for (auto i = 0U; i < out.size(); ++i) {
    if (needs_alt(out[i])) {
      auto& tt = timetables[days_since_epoch(dates[i])];
      if (!tt) {
        tt = std::make_unique<Timetable>(net, dates[i], ctx.router);
      }
    }
  }

  parallel_for(out.size(), jobs, [&](std::size_t const i) {
    auto& a = out[i];
    if (!needs_alt(a)) {
      return;
    }
    auto const& tt = *timetables.at(days_since_epoch(dates[i]));
    auto const alt = windowed_transit_time(tt, a.trip.origin,
                                           a.trip.destination, a.trip.start_time);
    if (!alt.reachable()) {
      return;
    }
    auto const cmp = compare_costs(a.trip, ctx.pricing, alt);
    a.transit_alt = TransitAlternative{
        .median_min = *alt.median_min,
        .cost_usd = cmp.transit_cost_usd,
        .first_mode = alt.median_journey->first_ride_mode().value_or(
            RouteMode::bus),
        .n_reachable = alt.n_reachable,
        .best_n_transfers = alt.best_n_transfers.value_or(0)};
    a.time_saved_min = cmp.time_saved_min;
    a.price_premium_usd = cmp.price_premium_usd;
  });
  return out;
}

namespace {

constexpr auto kAssessmentHeader =
    "vendor,vehicle,olat,olon,dlat,dlon,start_utc,end_utc,dist_mi,dur_min,"
    "linked,local_hour,utilitarian,transit_type,bike_class,connecting_lb,"
    "connecting_ub,transit_median_min,transit_cost_usd,transit_first_mode,"
    "n_reachable,best_n_transfers,scooter_cost_usd,time_saved_min,"
    "price_premium_usd\n";

std::string opt_double(std::optional<double> const v) {
  return v ? format_double(*v) : std::string{};
}

std::optional<double> parse_opt(std::string_view const s,
                                std::string_view const field) {
  if (s.empty()) {
    return std::nullopt;
  }
  return parse_double(s, field);
}

bool parse_bool(std::string_view const s) { return s == "true" || s == "1"; }

}  // namespace

std::string write_assessment_csv(std::span<TripAssessment const> const rows,
                                 std::string_view const metadata) {
  std::ostringstream out;
  out << metadata << kAssessmentHeader;
  auto const b = [](bool const v) { return v ? "true" : "false"; };
  for (auto const& a : rows) {
    auto const& t = a.trip;
    auto const& alt = a.transit_alt;
    write_csv_row(
        out,
        {t.vendor_id, t.vehicle_id, format_double(t.origin.lat),
         format_double(t.origin.lon), format_double(t.destination.lat),
         format_double(t.destination.lon), std::to_string(t.start_time),
         std::to_string(t.end_time), format_double(t.distance_mi),
         format_double(t.duration_min), b(t.linked),
         std::to_string(a.local_hour), b(a.utilitarian),
         std::string{to_string(a.transit_type)},
         std::string{to_string(a.bike_class)}, b(a.connecting_lb),
         b(a.connecting_ub), alt ? format_double(alt->median_min) : "",
         alt ? format_double(alt->cost_usd) : "",
         alt ? std::string{to_string(alt->first_mode)} : "",
         alt ? std::to_string(alt->n_reachable) : "",
         alt ? std::to_string(alt->best_n_transfers) : "",
         format_double(a.scooter_cost_usd), opt_double(a.time_saved_min),
         opt_double(a.price_premium_usd)});
  }
  return out.str();
}

std::vector<TripAssessment> parse_assessment_csv(std::string_view const text) {
  auto const t = parse_csv(text);
  auto const col = [&](char const* name) {
    auto const c = t.column(name);
    if (!c) {
      fail(errc::malformed_document,
           fmt::format("assessment CSV: missing column {}", name));
    }
    return *c;
  };
  auto const trips = parse_trip_csv(text);
  auto const hour = col("local_hour");
  auto const util = col("utilitarian");
  auto const ttype = col("transit_type");
  auto const bclass = col("bike_class");
  auto const lb = col("connecting_lb");
  auto const ub = col("connecting_ub");
  auto const med = col("transit_median_min");
  auto const cost = col("transit_cost_usd");
  auto const mode = col("transit_first_mode");
  auto const nreach = col("n_reachable");
  auto const best = col("best_n_transfers");
  auto const scost = col("scooter_cost_usd");
  auto const saved = col("time_saved_min");
  auto const premium = col("price_premium_usd");

  std::vector<TripAssessment> out;
  out.reserve(t.rows.size());
  for (auto i = 0U; i < t.rows.size(); ++i) {
    auto const& row = t.rows[i];
    TripAssessment a;
    a.trip = trips[i];
    a.local_hour = static_cast<int>(parse_int(row[hour], "local_hour"));
    a.utilitarian = parse_bool(row[util]);
    a.transit_type = parse_transit_type(row[ttype]);
    a.bike_class = parse_bike_class(row[bclass]);
    a.connecting_lb = parse_bool(row[lb]);
    a.connecting_ub = parse_bool(row[ub]);
    if (!row[med].empty()) {
      a.transit_alt = TransitAlternative{
          .median_min = parse_double(row[med], "transit_median_min"),
          .cost_usd = parse_double(row[cost], "transit_cost_usd"),
          .first_mode = row[mode] == "rail" ? RouteMode::rail : RouteMode::bus,
          .n_reachable =
              static_cast<std::size_t>(parse_int(row[nreach], "n_reachable")),
          .best_n_transfers =
              static_cast<int>(parse_int(row[best], "best_n_transfers"))};
    }
    a.scooter_cost_usd = parse_double(row[scost], "scooter_cost_usd");
    a.time_saved_min = parse_opt(row[saved], "time_saved_min");
    a.price_premium_usd = parse_opt(row[premium], "price_premium_usd");
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

void count(HourBin& bin, TripAssessment const& a) {
  ++bin.n;
  ++bin.transit[static_cast<std::size_t>(a.transit_type)];
  ++bin.bike[static_cast<std::size_t>(a.bike_class)];
  bin.connecting_lb += a.connecting_lb ? 1U : 0U;
  bin.connecting_ub += a.connecting_ub ? 1U : 0U;
}

struct Samples {
  std::vector<double> length, duration, cost, transit, saved, premium;
};

Samples samples_of(std::span<TripAssessment const> const rows) {
  Samples s;
  for (auto const& a : rows) {
    s.length.push_back(a.trip.distance_mi);
    s.duration.push_back(a.trip.duration_min);
    s.cost.push_back(a.scooter_cost_usd);
    if (a.transit_alt) {
      s.transit.push_back(a.transit_alt->median_min);
      s.saved.push_back(*a.time_saved_min);
      s.premium.push_back(*a.price_premium_usd);
    }
  }
  return s;
}

std::optional<double> median_or_none(std::vector<double> const& v) {
  return v.empty() ? std::nullopt : std::optional{median(v)};
}

}  // namespace

PeriodSummary summarize(std::span<TripAssessment const> const rows,
                        std::string label) {
  if (rows.empty()) {
    fail(errc::empty_input, "no assessments to summarize for " + label);
  }
  PeriodSummary s;
  s.label = std::move(label);
  auto morning = std::size_t{0};
  for (auto const& a : rows) {
    count(s.hours[static_cast<std::size_t>(std::clamp(a.local_hour, 0, 23))], a);
    count(s.all, a);
    morning += (a.local_hour >= 6 && a.local_hour < 9) ? 1U : 0U;
  }
  auto const x = samples_of(rows);
  s.n_trips = rows.size();
  s.median_length_mi = median(x.length);
  s.median_duration_min = median(x.duration);
  s.median_scooter_cost_usd = median(x.cost);
  s.morning_peak_share =
      static_cast<double>(morning) / static_cast<double>(rows.size());
  s.n_with_alternative = x.transit.size();
  s.median_transit_min = median_or_none(x.transit);
  s.median_time_saved_min = median_or_none(x.saved);
  s.median_price_premium_usd = median_or_none(x.premium);
  return s;
}

std::vector<MetricComparison> compare_periods(
    std::span<TripAssessment const> const a,
    std::span<TripAssessment const> const b) {
  auto const sa = samples_of(a);
  auto const sb = samples_of(b);
  std::vector<MetricComparison> out;
  auto const add = [&](char const* name, std::vector<double> const& x,
                       std::vector<double> const& y) {
    MetricComparison m{name, median_or_none(x), median_or_none(y), {}, ""};
    if (!x.empty() && !y.empty()) {
      m.p_value = mann_whitney_u(x, y).p_value;
      m.stars = significance_stars(*m.p_value);
    }
    out.push_back(std::move(m));
  };
  add("median_length_mi", sa.length, sb.length);
  add("median_duration_min", sa.duration, sb.duration);
  add("median_transit_min", sa.transit, sb.transit);
  add("median_time_saved_min", sa.saved, sb.saved);
  add("median_scooter_cost_usd", sa.cost, sb.cost);
  add("median_price_premium_usd", sa.premium, sb.premium);
  return out;
}

}  // namespace mobgap
