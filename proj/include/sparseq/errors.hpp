#pragma once

#include <stdexcept>
#include <string>

namespace sparseq {

// Error categories surfaced by the library. The CLI maps these onto exit
// codes (validation -> 2, assertion-class failures -> 3, resource guard -> 4).
enum class Errc {
  empty_database,
  parse_error,
  range_error,
  sparsity_exceeded,
  composition_undefined,
  budget_exceeded,
  infeasible,
  validation_error,
  query_limit_reached,
  update_budget_exhausted,
  smw_failure,
  index_overflow,
  unsupported_field_size,
  format_error,
  resource_estimate_exceeded,
  io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::empty_database: return "EmptyDatabase";
    case Errc::parse_error: return "ParseError";
    case Errc::range_error: return "RangeError";
    case Errc::sparsity_exceeded: return "SparsityExceeded";
    case Errc::composition_undefined: return "CompositionUndefined";
    case Errc::budget_exceeded: return "BudgetExceeded";
    case Errc::infeasible: return "Infeasible";
    case Errc::validation_error: return "ValidationError";
    case Errc::query_limit_reached: return "QueryLimitReached";
    case Errc::update_budget_exhausted: return "UpdateBudgetExhausted";
    case Errc::smw_failure: return "SmwFailure";
    case Errc::index_overflow: return "IndexOverflow";
    case Errc::unsupported_field_size: return "UnsupportedFieldSize";
    case Errc::format_error: return "FormatError";
    case Errc::resource_estimate_exceeded: return "ResourceEstimateExceeded";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace sparseq
