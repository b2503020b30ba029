#include "neckfol/core/error.hpp"
#include "neckfol/core/types.hpp"

#include <cmath>

namespace neckfol {

double sphere_volume(int n) { return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n); }

double ball_volume(int n) { return sphere_volume(n) / n; }

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorCode::ScaleOutOfRange: return "ScaleOutOfRange";
    case ErrorCode::GroupMismatch: return "GroupMismatch";
    case ErrorCode::CyclicTree: return "CyclicTree";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::DegenerateMetric: return "DegenerateMetric";
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::GraphCollision: return "GraphCollision";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::ContractFailure: return "ContractFailure";
    case ErrorCode::NotCMC: return "NotCMC";
    case ErrorCode::FocalPoint: return "FocalPoint";
    case ErrorCode::LeafCrossing: return "LeafCrossing";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::FitDegenerate: return "FitDegenerate";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace neckfol
