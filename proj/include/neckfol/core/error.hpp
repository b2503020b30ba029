#pragma once

#include <stdexcept>
#include <string>

namespace neckfol {

enum class ErrorCode {
  InvalidArgument,
  DomainViolation,
  NonPositiveDefinite,
  ScaleOutOfRange,
  GroupMismatch,
  CyclicTree,
  ResolutionTooLow,
  DegenerateMetric,
  NearSingular,
  DegenerateEmbedding,
  StepFailure,
  GraphCollision,
  NoIntersection,
  ContractFailure,
  NotCMC,
  FocalPoint,
  LeafCrossing,
  GridTooCoarse,
  FitDegenerate,
  ConfigError,
  IoError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace neckfol
