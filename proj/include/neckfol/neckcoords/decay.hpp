#pragma once

#include <vector>

namespace neckfol {

struct DecaySample {
  double rho = 0.0;
  double norm = 0.0;
};

// eta(rho) = eps [(rho1 / rho)^beta1 + (rho / rho2)^beta2].
struct DecayProfile {
  double rho1 = 0.0, rho2 = 0.0;
  double eps = 0.0, beta1 = 0.0, beta2 = 0.0;
  double rho_min = 0.0;    // argmin of the samples
  double residual = 0.0;   // RMS of (eta / norm - 1) over the samples
  double inner_slope = 0.0, outer_slope = 0.0;  // log-log slopes of the raw branches
  int inner_count = 0, outer_count = 0;
  int iterations = 0;
  std::vector<DecaySample> samples;

  double eta(double rho) const;
};

// Two-power least-squares fit in log space, each sample weighted by its share of
// the log-rho range. Starting values come from straight-line fits to the branches
// on either side of the sampled minimum. Throws FitDegenerate when a branch has
// fewer than 3 samples, a sample is not positive, or a branch slopes the wrong way.
DecayProfile decay_fit(const std::vector<DecaySample>& samples, double rho1, double rho2);

}  // namespace neckfol
