#include "mobgap/error.h"

namespace mobgap {

std::string_view to_string(errc const c) {
  switch (c) {
    case errc::malformed_document: return "MalformedDocument";
    case errc::missing_field: return "MissingField";
    case errc::missing_table: return "MissingTable";
    case errc::dangling_reference: return "DanglingReference";
    case errc::non_monotonic_stop_times: return "NonMonotonicStopTimes";
    case errc::archive_write_failure: return "ArchiveWriteFailure";
    case errc::unknown_vendor: return "UnknownVendor";
    case errc::no_coverage: return "NoCoverage";
    case errc::unsorted_stream: return "UnsortedStream";
    case errc::mixed_vendors: return "MixedVendors";
    case errc::unknown_stop: return "UnknownStop";
    case errc::degenerate_grid: return "DegenerateGrid";
    case errc::grid_mismatch: return "GridMismatch";
    case errc::zero_variance: return "ZeroVariance";
    case errc::unreachable: return "Unreachable";
    case errc::no_alternative: return "NoAlternative";
    case errc::empty_input: return "EmptyInput";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::config_error: return "ConfigError";
    case errc::io_error: return "IoError";
    case errc::internal_error: return "InternalError";
  }
  return "Unknown";
}

error_category category_of(errc const c) {
  switch (c) {
    case errc::config_error:
    case errc::invalid_argument: return error_category::config;
    case errc::archive_write_failure:
    case errc::malformed_document:
    case errc::missing_field:
    case errc::missing_table:
    case errc::dangling_reference:
    case errc::non_monotonic_stop_times:
    case errc::unknown_vendor:
    case errc::no_coverage:
    case errc::unsorted_stream:
    case errc::mixed_vendors:
    case errc::unknown_stop:
    case errc::degenerate_grid:
    case errc::grid_mismatch:
    case errc::zero_variance:
    case errc::unreachable:
    case errc::no_alternative:
    case errc::empty_input:
    case errc::io_error: return error_category::data;
    case errc::internal_error: return error_category::internal;
  }
  return error_category::internal;
}

}  // namespace mobgap
