#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qrect {

enum class ErrorCode {
  ParallelOrDegenerate,
  DegenerateSimplex,
  RankDeficient,
  NonConvergence,
  DegenerateBox,
  EmptyIntersection,
  OutOfDomain,
  BudgetExhausted,
  Config,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParallelOrDegenerate: return "ParallelOrDegenerate";
    case ErrorCode::DegenerateSimplex: return "DegenerateSimplex";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

/// Base of every error raised by the library. Carries a machine-readable code
/// so callers (the CLI in particular) can map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qrect
