#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mobgap {

enum class errc {
  malformed_document,
  missing_field,
  missing_table,
  dangling_reference,
  non_monotonic_stop_times,
  archive_write_failure,
  unknown_vendor,
  no_coverage,
  unsorted_stream,
  mixed_vendors,
  unknown_stop,
  degenerate_grid,
  grid_mismatch,
  zero_variance,
  unreachable,
  no_alternative,
  empty_input,
  invalid_argument,
  config_error,
  io_error,
  internal_error,
};

std::string_view to_string(errc);

// Caller-facing exit classification used by the CLI.
enum class error_category { config, data, internal };

error_category category_of(errc);

class error : public std::runtime_error {
public:
  error(errc code, std::string const& what)
      : std::runtime_error{std::string{to_string(code)} + ": " + what},
        code_{code},
        message_{what} {}

  errc code() const noexcept { return code_; }
  std::string const& message() const noexcept { return message_; }

private:
  errc code_;
  std::string message_;
};

[[noreturn]] inline void fail(errc code, std::string const& what) {
  throw error{code, what};
}

}  // namespace mobgap
