#ifndef TACFIT_ERRORS_HPP
#define TACFIT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tacfit {

/// Classification of every failure the library can raise. The CLI maps these
/// to exit statuses, so the set is part of the public contract.
enum class Errc {
  DuplicateTime,
  NonFinite,
  TooFew,
  DegenerateGram,
  CollinearPoints,
  NonMonotone,
  BudgetExceeded,
  ObjectiveError,
  DegenerateTarget,
  ParseError,
  InvalidSpec,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(Errc::ParseError, what), line_(line) {}

  /// 1-based line number of the offending row; 0 when not line-related.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tacfit

#endif  // TACFIT_ERRORS_HPP
