#include <algorithm>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "fmt/format.h"
#include "nlohmann/json.hpp"

#include "mobgap/error.h"
#include "mobgap/ingest.h"

namespace fs = std::filesystem;

namespace mobgap {

namespace {

constexpr char kMagic[] = "MGSEG001";
constexpr std::size_t kMagicLen = 8;

enum : std::uint8_t {
  kReserved = 1U,
  kDisabled = 2U,
  kHasBattery = 4U,
};

template <typename T>
void put(std::string& out, T const v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  out.append(reinterpret_cast<char const*>(bytes), sizeof(T));
}

template <typename T>
bool get(std::string_view& in, T& v) {
  if (in.size() < sizeof(T)) {
    return false;
  }
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, in.data(), sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  std::memcpy(&v, bytes, sizeof(T));
  in.remove_prefix(sizeof(T));
  return true;
}

std::string encode(VehicleSnapshot const& s) {
  std::string payload;
  put<std::int64_t>(payload, s.observed_at);
  put<double>(payload, s.point.lat);
  put<double>(payload, s.point.lon);
  auto flags = std::uint8_t{0};
  flags |= s.is_reserved ? kReserved : 0;
  flags |= s.is_disabled ? kDisabled : 0;
  flags |= s.battery ? kHasBattery : 0;
  put<std::uint8_t>(payload, flags);
  put<double>(payload, s.battery.value_or(0.0));
  put<std::uint16_t>(payload, static_cast<std::uint16_t>(s.vehicle_id.size()));
  payload += s.vehicle_id;

  std::string record;
  put<std::uint32_t>(record, static_cast<std::uint32_t>(payload.size()));
  record += payload;
  return record;
}

// Decodes records until the end or the first truncated record.
std::vector<VehicleSnapshot> decode_all(std::string_view data,
                                        std::string const& vendor,
                                        std::size_t limit = SIZE_MAX) {
  std::vector<VehicleSnapshot> out;
  if (data.size() < kMagicLen || data.substr(0, kMagicLen) != kMagic) {
    fail(errc::malformed_document, "archive segment has bad magic");
  }
  data.remove_prefix(kMagicLen);
  while (!data.empty() && out.size() < limit) {
    auto len = std::uint32_t{0};
    if (!get(data, len) || data.size() < len) {
      break;
    }
    auto payload = data.substr(0, len);
    data.remove_prefix(len);

    VehicleSnapshot s;
    s.vendor_id = vendor;
    auto flags = std::uint8_t{0};
    auto battery = 0.0;
    auto id_len = std::uint16_t{0};
    if (!get(payload, s.observed_at) || !get(payload, s.point.lat) ||
        !get(payload, s.point.lon) || !get(payload, flags) ||
        !get(payload, battery) || !get(payload, id_len) ||
        payload.size() != id_len) {
      fail(errc::malformed_document, "archive record is corrupt");
    }
    s.vehicle_id = std::string{payload};
    s.is_reserved = (flags & kReserved) != 0;
    s.is_disabled = (flags & kDisabled) != 0;
    if ((flags & kHasBattery) != 0) {
      s.battery = battery;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string read_all(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  if (!in) {
    fail(errc::io_error, "cannot read segment " + p.string());
  }
  return std::string{std::istreambuf_iterator<char>{in}, {}};
}

bool valid_vendor_id(std::string_view const id) {
  return !id.empty() && id != "." && id != ".." &&
         std::all_of(begin(id), end(id), [](char const c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                  c == '_' || c == '.';
         });
}

std::int64_t utc_day(Timestamp const t) {
  return t >= 0 ? t / 86400 : (t - 86399) / 86400;
}

}  // namespace

struct SnapshotArchive::Segment {
  std::mutex mutex;
  fs::path path;
  bool tail_loaded{false};
  Timestamp last_observed{std::numeric_limits<Timestamp>::min()};
  std::unordered_set<std::string> ids_at_last;
  std::ofstream out;
};

SnapshotArchive::SnapshotArchive(fs::path root) : root_{std::move(root)} {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) {
    fail(errc::archive_write_failure,
         fmt::format("cannot create archive root {}: {}", root_.string(),
                     ec.message()));
  }
  for (auto const& vendor_dir : fs::directory_iterator{root_}) {
    if (!vendor_dir.is_directory()) {
      continue;
    }
    for (auto const& f : fs::directory_iterator{vendor_dir.path()}) {
      if (f.path().extension() != ".seg") {
        continue;
      }
      auto const date = parse_date(f.path().stem().string());
      auto key = SegmentKey{vendor_dir.path().filename().string(),
                            days_since_epoch(date)};
      auto seg = std::make_unique<Segment>();
      seg->path = f.path();
      segments_.emplace(std::move(key), std::move(seg));
    }
  }
}

SnapshotArchive::~SnapshotArchive() = default;

fs::path SnapshotArchive::path_of(SegmentKey const& k) const {
  auto const date = Date{std::chrono::sys_days{std::chrono::days{k.day}}};
  return root_ / k.vendor_id / (format_date(date) + ".seg");
}

SnapshotArchive::Segment& SnapshotArchive::segment_for(SegmentKey const& k) {
  std::lock_guard const lock{index_mutex_};
  auto& slot = segments_[k];
  if (!slot) {
    slot = std::make_unique<Segment>();
    slot->path = path_of(k);
  }
  return *slot;
}

AppendResult SnapshotArchive::append(
    std::span<VehicleSnapshot const> const snapshots) {
  AppendResult result;

  std::map<SegmentKey, std::vector<VehicleSnapshot const*>> groups;
  for (auto const& s : snapshots) {
    if (!valid_vendor_id(s.vendor_id)) {
      fail(errc::archive_write_failure,
           fmt::format("vendor id '{}' is not usable as a path", s.vendor_id));
    }
    if (s.vehicle_id.size() > 0xffff) {
      fail(errc::archive_write_failure, "vehicle id too long");
    }
    groups[{s.vendor_id, utc_day(s.observed_at)}].push_back(&s);
  }

  for (auto& [key, group] : groups) {
    std::stable_sort(begin(group), end(group), [](auto const* a, auto const* b) {
      return a->observed_at < b->observed_at;
    });

    auto& seg = segment_for(key);
    std::lock_guard const lock{seg.mutex};

    if (!seg.tail_loaded) {
      if (fs::exists(seg.path)) {
        auto const existing = decode_all(read_all(seg.path), key.vendor_id);
        for (auto const& s : existing) {
          if (s.observed_at != seg.last_observed) {
            seg.ids_at_last.clear();
            seg.last_observed = s.observed_at;
          }
          seg.ids_at_last.insert(s.vehicle_id);
        }
      }
      seg.tail_loaded = true;
    }

    std::string buffer;
    for (auto const* s : group) {
      if (s->observed_at < seg.last_observed) {
        fail(errc::archive_write_failure,
             fmt::format("out-of-order append to {} ({} < {})",
                         seg.path.string(), s->observed_at,
                         seg.last_observed));
      }
      if (s->observed_at != seg.last_observed) {
        seg.ids_at_last.clear();
        seg.last_observed = s->observed_at;
      }
      if (!seg.ids_at_last.insert(s->vehicle_id).second) {
        ++result.duplicates;
        continue;
      }
      buffer += encode(*s);
      ++result.appended;
    }
    if (buffer.empty()) {
      continue;
    }

    if (!seg.out.is_open()) {
      std::error_code ec;
      fs::create_directories(seg.path.parent_path(), ec);
      auto const fresh = !fs::exists(seg.path);
      seg.out.open(seg.path, std::ios::binary | std::ios::app);
      if (!seg.out) {
        fail(errc::archive_write_failure,
             "cannot open segment " + seg.path.string());
      }
      if (fresh) {
        seg.out.write(kMagic, kMagicLen);
      }
    }
    seg.out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    seg.out.flush();
    if (!seg.out) {
      fail(errc::archive_write_failure,
           "write failed for segment " + seg.path.string());
    }
  }
  return result;
}

void SnapshotArchive::flush() {
  std::lock_guard const lock{index_mutex_};
  for (auto& [key, seg] : segments_) {
    std::lock_guard const seg_lock{seg->mutex};
    if (seg->out.is_open()) {
      seg->out.close();
    }
  }
}

std::vector<SegmentKey> SnapshotArchive::segments() const {
  std::lock_guard const lock{index_mutex_};
  std::vector<SegmentKey> out;
  for (auto const& [key, seg] : segments_) {
    if (fs::exists(seg->path)) {
      out.push_back(key);
    }
  }
  return out;
}

std::set<std::string> SnapshotArchive::vendors() const {
  std::set<std::string> out;
  for (auto const& k : segments()) {
    out.insert(k.vendor_id);
  }
  return out;
}

std::vector<VehicleSnapshot> SnapshotArchive::read_segment(
    SegmentKey const& k) const {
  auto const p = path_of(k);
  if (!fs::exists(p)) {
    return {};
  }
  return decode_all(read_all(p), k.vendor_id);
}

std::optional<Timestamp> SnapshotArchive::first_observed(
    std::string const& vendor) const {
  for (auto const& k : segments()) {
    if (k.vendor_id != vendor) {
      continue;
    }
    auto const first = decode_all(read_all(path_of(k)), vendor, 1);
    if (!first.empty()) {
      return first.front().observed_at;
    }
  }
  return std::nullopt;
}

namespace {

std::set<std::string> resolve_vendors(SnapshotArchive const& archive,
                                      VendorFilter const& filter) {
  auto const all = archive.vendors();
  if (!filter) {
    return all;
  }
  for (auto const& v : *filter) {
    if (!all.contains(v)) {
      fail(errc::unknown_vendor, v);
    }
  }
  return *filter;
}

}  // namespace

std::vector<VehicleSnapshot> replay(SnapshotArchive const& archive,
                                    VendorFilter const& vendors,
                                    Timestamp const start,
                                    Timestamp const end) {
  if (start > end) {
    fail(errc::invalid_argument, "replay window start after end");
  }
  auto const wanted = resolve_vendors(archive, vendors);
  std::vector<VehicleSnapshot> out;
  if (start == end) {
    return out;
  }
  auto const first_day = utc_day(start);
  auto const last_day = utc_day(end - 1);
  for (auto const& k : archive.segments()) {
    if (!wanted.contains(k.vendor_id) || k.day < first_day ||
        k.day > last_day) {
      continue;
    }
    for (auto& s : archive.read_segment(k)) {
      if (s.observed_at >= start && s.observed_at < end) {
        out.push_back(std::move(s));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](auto const& a, auto const& b) {
    return a.observed_at < b.observed_at;
  });
  return out;
}

std::vector<VehicleSnapshot> availability_at(SnapshotArchive const& archive,
                                             Timestamp const instant,
                                             int const staleness_horizon_s,
                                             VendorFilter const& vendors) {
  auto const wanted = resolve_vendors(archive, vendors);
  std::optional<Timestamp> first;
  for (auto const& v : wanted) {
    if (auto const f = archive.first_observed(v)) {
      first = first ? std::min(*first, *f) : *f;
    }
  }
  if (!first || instant < *first) {
    fail(errc::no_coverage,
         fmt::format("no archived snapshots at or before {}",
                     format_utc(instant)));
  }

  auto const window =
      replay(archive, VendorFilter{wanted}, instant - staleness_horizon_s,
             instant + 1);
  std::map<std::pair<std::string, std::string>, VehicleSnapshot const*> latest;
  for (auto const& s : window) {
    latest[{s.vendor_id, s.vehicle_id}] = &s;  // window is time ordered
  }
  std::vector<VehicleSnapshot> out;
  for (auto const& [key, s] : latest) {
    if (s->available()) {
      out.push_back(*s);
    }
  }
  return out;
}

void export_jsonl(SnapshotArchive const& archive, std::ostream& out,
                  VendorFilter const& vendors, Timestamp const start,
                  Timestamp const end) {
  for (auto const& s : replay(archive, vendors, start, end)) {
    nlohmann::json j{{"vendor_id", s.vendor_id},
                     {"vehicle_id", s.vehicle_id},
                     {"lat", s.point.lat},
                     {"lon", s.point.lon},
                     {"observed_at", s.observed_at},
                     {"is_reserved", s.is_reserved},
                     {"is_disabled", s.is_disabled}};
    j["battery"] = s.battery ? nlohmann::json(*s.battery) : nlohmann::json();
    out << j.dump() << '\n';
  }
}

}  // namespace mobgap
