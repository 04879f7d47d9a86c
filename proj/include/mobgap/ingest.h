#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mobgap/feeds.h"
#include "mobgap/time_util.h"

namespace mobgap {

struct SegmentKey {
  std::string vendor_id;
  std::int64_t day{0};  // UTC days since epoch

  friend auto operator<=>(SegmentKey const&, SegmentKey const&) = default;
};

struct AppendResult {
  std::size_t appended{0};
  std::size_t duplicates{0};
};

// Append-only store of vehicle snapshots, one file per (vendor, UTC day).
//
// Segment layout: the 8-byte magic "MGSEG001" followed by records, each a
// little-endian u32 payload length and a payload of
//   i64 observed_at | f64 lat | f64 lon | u8 flags | f64 battery |
//   u16 id length | id bytes
// with flags bit 0 = reserved, bit 1 = disabled, bit 2 = battery present.
//
// Within a segment observed_at never decreases, and a
// (vendor, observed_at, vehicle_id) triple is stored at most once; repeated
// triples are skipped and counted. Appends to different segments proceed in
// parallel; appends to one segment are serialized.
class SnapshotArchive {
public:
  explicit SnapshotArchive(std::filesystem::path root);
  ~SnapshotArchive();

  SnapshotArchive(SnapshotArchive const&) = delete;
  SnapshotArchive& operator=(SnapshotArchive const&) = delete;

  // Throws ArchiveWriteFailure on I/O errors or when a record would move a
  // segment backwards in time.
  AppendResult append(std::span<VehicleSnapshot const>);

  std::filesystem::path const& root() const { return root_; }
  std::vector<SegmentKey> segments() const;
  std::set<std::string> vendors() const;

  std::vector<VehicleSnapshot> read_segment(SegmentKey const&) const;
  std::optional<Timestamp> first_observed(std::string const& vendor) const;

  // Closes open segment writers; later appends reopen them.
  void flush();

private:
  struct Segment;

  Segment& segment_for(SegmentKey const&);
  std::filesystem::path path_of(SegmentKey const&) const;

  std::filesystem::path root_;
  mutable std::mutex index_mutex_;
  std::map<SegmentKey, std::unique_ptr<Segment>> segments_;
};

using VendorFilter = std::optional<std::set<std::string>>;

// Snapshots with observed_at in [start, end), ordered by observed_at, ties by
// vendor then archive order. Throws UnknownVendor for filter entries absent
// from the archive.
std::vector<VehicleSnapshot> replay(SnapshotArchive const&,
                                    VendorFilter const& vendors,
                                    Timestamp start, Timestamp end);

// For every vehicle, its latest snapshot with observed_at in
// [instant - staleness_horizon_s, instant], keeping only available vehicles
// (not reserved, not disabled). Ordered by (vendor, vehicle_id). Throws
// NoCoverage when `instant` precedes the first archived record.
std::vector<VehicleSnapshot> availability_at(SnapshotArchive const&,
                                             Timestamp instant,
                                             int staleness_horizon_s = 600,
                                             VendorFilter const& vendors = {});

// JSON-lines export (one snapshot per line).
void export_jsonl(SnapshotArchive const&, std::ostream&,
                  VendorFilter const& vendors, Timestamp start, Timestamp end);

// ---------------------------------------------------------------------------
// Poller
// ---------------------------------------------------------------------------

struct PollEndpoint {
  VendorProfile vendor;
  std::string locator;  // http(s) URL, file:// URL or local path
};

struct PollPlan {
  std::vector<PollEndpoint> endpoints;
  int jitter_s{0};

  // Throws invalid_argument on duplicate vendor ids or bad profiles.
  void validate() const;
};

PollPlan load_poll_plan(std::string const& path);
PollPlan parse_poll_plan(std::string const& yaml_text);

class Clock {
public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
  using StopPredicate = std::function<bool()>;

  // Blocks until `t` or until `should_stop` returns true; returns the
  // wake-up time.
  virtual Timestamp sleep_until(Timestamp t,
                                StopPredicate const& should_stop) = 0;
};

class SystemClock final : public Clock {
public:
  Timestamp now() const override;
  Timestamp sleep_until(Timestamp, StopPredicate const&) override;
};

// Virtual time: sleeping returns immediately at the requested instant.
class SimulatedClock final : public Clock {
public:
  explicit SimulatedClock(Timestamp start) : now_{start} {}
  Timestamp now() const override { return now_.load(); }
  Timestamp sleep_until(Timestamp, StopPredicate const&) override;

private:
  std::atomic<Timestamp> now_;
};

// Returns the payload; throws on transport failure.
using Fetcher = std::function<std::string(std::string const& locator)>;

// Reads local paths and file:// URLs; fetches http(s) URLs with the given
// timeout (MOBGAP_HTTP_TIMEOUT overrides when set).
Fetcher default_fetcher(int timeout_s = 10);

struct EndpointStats {
  std::string vendor_id;
  std::size_t fetches{0};
  std::size_t fetch_failures{0};
  std::size_t parse_failures{0};
  std::size_t appended_cycles{0};
  std::size_t snapshots_appended{0};
  std::size_t duplicates_skipped{0};
  std::size_t records_dropped{0};
  std::size_t battery_ambiguous_cycles{0};
};

struct PollStats {
  std::vector<EndpointStats> endpoints;  // plan order

  EndpointStats const& of(std::string const& vendor) const;
};

struct PollerOptions {
  std::optional<Timestamp> start;      // defaults to clock.now()
  std::optional<Timestamp> run_until;  // exclusive; otherwise until stop
  std::uint64_t seed{0};
  int max_backoff_s{3600};
};

// Samples each endpoint on its own thread once per poll interval (+/- jitter)
// until `stop` is set or run_until is reached. Fetch and parse failures are
// tallied and never end the run; ArchiveWriteFailure propagates.
PollStats run_poller(PollPlan const&, SnapshotArchive&,
                     std::atomic<bool> const& stop, Clock&, Fetcher const&,
                     PollerOptions const& = {});

}  // namespace mobgap
