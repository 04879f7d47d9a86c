#include <chrono>
#include <cstdlib>
#include <random>
#include <set>
#include <thread>

#include "fmt/format.h"
#include "spdlog/spdlog.h"
#include "yaml-cpp/yaml.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "mobgap/error.h"
#include "mobgap/ingest.h"

namespace mobgap {

void PollPlan::validate() const {
  if (endpoints.empty()) {
    fail(errc::invalid_argument, "poll plan has no endpoints");
  }
  if (jitter_s < 0) {
    fail(errc::invalid_argument, "jitter must be >= 0");
  }
  std::set<std::string> seen;
  for (auto const& e : endpoints) {
    e.vendor.validate();
    if (!seen.insert(e.vendor.vendor_id).second) {
      fail(errc::invalid_argument,
           "duplicate vendor_id in poll plan: " + e.vendor.vendor_id);
    }
    if (e.locator.empty()) {
      fail(errc::invalid_argument,
           "endpoint for " + e.vendor.vendor_id + " has no url");
    }
    if (jitter_s >= e.vendor.poll_interval_s) {
      fail(errc::invalid_argument,
           "jitter must be smaller than every poll interval");
    }
  }
}

PollPlan parse_poll_plan(std::string const& yaml_text) {
  PollPlan plan;
  try {
    auto const root = YAML::Load(yaml_text);
    plan.jitter_s = root["jitter_s"].as<int>(0);
    for (auto const& e : root["endpoints"]) {
      PollEndpoint ep;
      ep.vendor.vendor_id = e["vendor"].as<std::string>();
      ep.vendor.id_mode =
          parse_id_mode(e["id_mode"].as<std::string>("consistent"));
      ep.vendor.poll_interval_s = e["poll_interval_s"].as<int>(60);
      ep.vendor.battery_unit =
          parse_battery_unit(e["battery_unit"].as<std::string>("auto"));
      ep.locator = e["url"].as<std::string>("");
      plan.endpoints.push_back(std::move(ep));
    }
  } catch (YAML::Exception const& e) {
    fail(errc::config_error, fmt::format("poll plan: {}", e.what()));
  } catch (error const& e) {
    fail(errc::config_error, fmt::format("poll plan: {}", e.what()));
  }
  try {
    plan.validate();
  } catch (error const& e) {
    fail(errc::config_error, fmt::format("poll plan: {}", e.what()));
  }
  return plan;
}

PollPlan load_poll_plan(std::string const& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (error const& e) {
    fail(errc::config_error, e.what());
  }
  return parse_poll_plan(text);
}

Timestamp SystemClock::now() const {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Timestamp SystemClock::sleep_until(Timestamp const t,
                                   StopPredicate const& should_stop) {
  while (!should_stop() && now() < t) {
    std::this_thread::sleep_for(std::chrono::milliseconds{200});
  }
  return now();
}

Timestamp SimulatedClock::sleep_until(Timestamp const t,
                                      StopPredicate const&) {
  auto cur = now_.load();
  while (cur < t && !now_.compare_exchange_weak(cur, t)) {
  }
  return t;
}

Fetcher default_fetcher(int timeout_s) {
  if (auto const* env = std::getenv("MOBGAP_HTTP_TIMEOUT")) {
    timeout_s = std::max(1, std::atoi(env));
  }
  return [timeout_s](std::string const& locator) -> std::string {
    auto const scheme_end = locator.find("://");
    if (scheme_end == std::string::npos || locator.starts_with("file://")) {
      return read_file(scheme_end == std::string::npos
                           ? locator
                           : locator.substr(scheme_end + 3));
    }
    auto const path_begin = locator.find('/', scheme_end + 3);
    auto const base = locator.substr(0, path_begin);
    auto const path =
        path_begin == std::string::npos ? "/" : locator.substr(path_begin);
    httplib::Client client{base};
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_follow_location(true);
    auto const res = client.Get(path);
    if (!res) {
      fail(errc::io_error, fmt::format("GET {}: {}", locator,
                                       httplib::to_string(res.error())));
    }
    if (res->status != 200) {
      fail(errc::io_error, fmt::format("GET {}: HTTP {}", locator, res->status));
    }
    return res->body;
  };
}

EndpointStats const& PollStats::of(std::string const& vendor) const {
  for (auto const& e : endpoints) {
    if (e.vendor_id == vendor) {
      return e;
    }
  }
  fail(errc::unknown_vendor, vendor);
}

namespace {

void poll_endpoint(PollEndpoint const& ep, int const jitter_s,
                   SnapshotArchive& archive, Clock::StopPredicate const& stop,
                   Clock& clock, Fetcher const& fetch,
                   PollerOptions const& opt, Timestamp const start,
                   std::uint64_t const seed, EndpointStats& stats) {
  std::mt19937_64 rng{seed};
  std::uniform_int_distribution<int> jitter{-jitter_s, jitter_s};
  auto const interval = ep.vendor.poll_interval_s;
  auto consecutive_failures = 0;

  for (auto due = start;;) {
    if (stop() || (opt.run_until && due >= *opt.run_until)) {
      break;
    }
    auto const at = clock.sleep_until(due, stop);
    if (stop()) {
      break;
    }

    ++stats.fetches;
    std::string payload;
    try {
      payload = fetch(ep.locator);
    } catch (std::exception const& e) {
      ++stats.fetch_failures;
      ++consecutive_failures;
      auto const backoff = std::min<std::int64_t>(
          static_cast<std::int64_t>(interval) << std::min(consecutive_failures, 20),
          std::max(interval, opt.max_backoff_s));
      spdlog::warn("{}: fetch failed ({}), retrying in {} s",
                   ep.vendor.vendor_id, e.what(), backoff);
      due += backoff;
      continue;
    }
    consecutive_failures = 0;

    try {
      auto const parsed = parse_gbfs_status(payload, ep.vendor, at);
      stats.records_dropped += parsed.dropped();
      if (parsed.battery_unit_ambiguous) {
        ++stats.battery_ambiguous_cycles;
      }
      auto const appended = archive.append(parsed.snapshots);
      stats.snapshots_appended += appended.appended;
      stats.duplicates_skipped += appended.duplicates;
      ++stats.appended_cycles;
    } catch (error const& e) {
      if (e.code() == errc::archive_write_failure) {
        throw;
      }
      ++stats.parse_failures;
      spdlog::warn("{}: payload rejected: {}", ep.vendor.vendor_id, e.what());
    }

    auto step = interval + (jitter_s > 0 ? jitter(rng) : 0);
    due += std::max(1, step);
  }
}

}  // namespace

PollStats run_poller(PollPlan const& plan, SnapshotArchive& archive,
                     std::atomic<bool> const& stop, Clock& clock,
                     Fetcher const& fetch, PollerOptions const& opt) {
  plan.validate();
  auto const start = opt.start.value_or(clock.now());

  PollStats stats;
  stats.endpoints.resize(plan.endpoints.size());
  std::vector<std::exception_ptr> errors(plan.endpoints.size());
  std::atomic<bool> failed{false};
  auto const should_stop = [&] { return stop.load() || failed.load(); };
  {
    std::vector<std::jthread> workers;
    for (auto i = 0U; i < plan.endpoints.size(); ++i) {
      stats.endpoints[i].vendor_id = plan.endpoints[i].vendor.vendor_id;
      workers.emplace_back([&, i] {
        try {
          poll_endpoint(plan.endpoints[i], plan.jitter_s, archive,
                        should_stop, clock, fetch, opt, start, opt.seed + i,
                        stats.endpoints[i]);
        } catch (...) {
          errors[i] = std::current_exception();
          failed = true;
        }
      });
    }
  }
  archive.flush();
  for (auto const& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return stats;
}

}  // namespace mobgap
