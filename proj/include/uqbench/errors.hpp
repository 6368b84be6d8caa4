#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uqbench {

enum class Errc {
  length_mismatch,
  zero_sigma,
  negative_sigma,
  too_few_samples,
  too_few_members,
  single_class,
  constant_input,
  degenerate_fit,
  join_failure,
  uncalibrated_input,
  empty_train_set,
  dim_mismatch,
  invalid_config,
  invalid_argument,
  parse_error,
  duplicate_id,
  ragged_frames,
  bad_magic,
  version_unsupported,
  truncated_file,
  io_failure,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace uqbench
