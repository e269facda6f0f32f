#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dyapack {

// Failure taxonomy shared by the library and the command line tool.  Every
// library error carries one of these codes so callers (and the CLI exit-code
// mapping) can react without string matching.
enum class errc {
  range_error,              // argument outside its documented domain
  dimension_mismatch,       // operands sized inconsistently
  pattern_violation,        // value outside the admissible sparsity pattern
  definiteness,             // matrix not positive definite where required
  io_error,                 // file missing, unreadable, or malformed
  disconnected,             // neighborhood graph splits into components
  degenerate_configuration, // no one-dimensional layout exists locally
  alignment_impossible,     // local configurations share no anchor rows
  incomplete_configuration, // some rows never received a coordinate
  not_permutation_metric,   // distance matrix is not |p(i)-p(j)| for any p
  reconstruction_failed,    // point set inconsistent with a line layout
  internal_inconsistency,   // invariant the implementation relies on broke
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::range_error: return "range_error";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::pattern_violation: return "pattern_violation";
    case errc::definiteness: return "definiteness";
    case errc::io_error: return "io_error";
    case errc::disconnected: return "disconnected";
    case errc::degenerate_configuration: return "degenerate_configuration";
    case errc::alignment_impossible: return "alignment_impossible";
    case errc::incomplete_configuration: return "incomplete_configuration";
    case errc::not_permutation_metric: return "not_permutation_metric";
    case errc::reconstruction_failed: return "reconstruction_failed";
    case errc::internal_inconsistency: return "internal_inconsistency";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

// Raised when a connectivity requirement fails; carries the component
// decomposition so callers can report or recurse per component.
class disconnected_error : public error {
 public:
  disconnected_error(const std::string& message,
                     std::vector<std::vector<int>> components)
      : error(errc::disconnected, message),
        components_(std::move(components)) {}

  const std::vector<std::vector<int>>& components() const {
    return components_;
  }

 private:
  std::vector<std::vector<int>> components_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw error(code, message);
}

}  // namespace dyapack
