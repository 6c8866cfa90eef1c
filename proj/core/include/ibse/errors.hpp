#pragma once

#include <stdexcept>
#include <string>

namespace ibse {

// Failure taxonomy shared across the toolkit. Each value maps onto one
// CLI exit-code class (see tools/).
enum class Errc {
  // encryption pipeline
  input_too_small,
  empty_identity,
  empty_source,
  index_out_of_range,
  cipher_error,
  bad_length,
  integrity_error,
  identity_mismatch,
  // data-map format
  malformed_map,
  unsupported_version,
  invalid_map,
  // storage and ledger
  not_found,
  file_not_found,
  corrupt_object,
  storage_failure,
  already_exists,
  empty_cids,
  // sandbox embedding
  out_of_memory,
  invalid_free,
  unknown_function,
  kind_mismatch,
  invocation_error,
  // benchmarking
  insufficient_data,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ibse
