#include "neckfol/neckcoords/decay.hpp"

#include "neckfol/core/error.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace neckfol {

double DecayProfile::eta(double rho) const {
  return eps * (std::pow(rho1 / rho, beta1) + std::pow(rho / rho2, beta2));
}

namespace {

// Weighted log residuals, parameters (log eps, beta1, beta2).
struct LogResidual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<double> lr1, lr2, ln, w;  // log(rho1/rho), log(rho/rho2), log norm, sqrt weight

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(ln.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < ln.size(); ++i) {
      const double a = p(1) * lr1[i], b = p(2) * lr2[i];
      const double mx = std::max(a, b);
      const double model = p(0) + mx + std::log(std::exp(a - mx) + std::exp(b - mx));
      f(static_cast<Eigen::Index>(i)) = w[i] * (model - ln[i]);
    }
    return 0;
  }
};

// Least-squares slope of log norm against log rho.
double log_slope(const std::vector<DecaySample>& s, std::size_t b, std::size_t e) {
  double mx = 0, my = 0;
  const double k = static_cast<double>(e - b);
  for (std::size_t i = b; i < e; ++i) {
    mx += std::log(s[i].rho) / k;
    my += std::log(s[i].norm) / k;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = b; i < e; ++i) {
    const double dx = std::log(s[i].rho) - mx;
    sxy += dx * (std::log(s[i].norm) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace

DecayProfile decay_fit(const std::vector<DecaySample>& samples, double rho1, double rho2) {
  require(rho1 > 0 && rho2 > rho1, ErrorCode::InvalidArgument, "decay fit needs 0 < rho1 < rho2");
  DecayProfile out;
  out.rho1 = rho1;
  out.rho2 = rho2;
  out.samples = samples;
  std::sort(out.samples.begin(), out.samples.end(), [](const DecaySample& a, const DecaySample& b) { return a.rho < b.rho; });
  const auto& s = out.samples;
  const std::size_t K = s.size();
  for (const auto& x : s)
    if (!(x.norm > 0.0) || !std::isfinite(x.norm) || !(x.rho > 0.0))
      fail(ErrorCode::FitDegenerate, "decay samples must have positive rho and positive finite norms");
  require(K >= 6, ErrorCode::FitDegenerate, "decay fit needs at least six samples");

  std::size_t imin = 0;
  for (std::size_t i = 1; i < K; ++i)
    if (s[i].norm < s[imin].norm) imin = i;
  out.rho_min = s[imin].rho;
  out.inner_count = static_cast<int>(imin + 1);
  out.outer_count = static_cast<int>(K - imin);
  if (out.inner_count < 3 || out.outer_count < 3) {
    std::ostringstream os;
    os << "minimum at rho = " << out.rho_min << " leaves " << out.inner_count << " inner and " << out.outer_count
       << " outer samples; each branch needs 3";
    fail(ErrorCode::FitDegenerate, os.str());
  }
  out.inner_slope = log_slope(s, 0, imin + 1);
  out.outer_slope = log_slope(s, imin, K);
  if (!(out.inner_slope < 0.0) || !(out.outer_slope > 0.0)) {
    std::ostringstream os;
    os << "branches are not monotone toward the minimum (inner slope " << out.inner_slope << ", outer slope "
       << out.outer_slope << ")";
    fail(ErrorCode::FitDegenerate, os.str());
  }

  LogResidual fn;
  const double span = std::log(s.back().rho / s.front().rho);
  for (std::size_t i = 0; i < K; ++i) {
    const double lo = std::log(s[i > 0 ? i - 1 : 0].rho), hi = std::log(s[i + 1 < K ? i + 1 : K - 1].rho);
    fn.lr1.push_back(std::log(rho1 / s[i].rho));
    fn.lr2.push_back(std::log(s[i].rho / rho2));
    fn.ln.push_back(std::log(s[i].norm));
    fn.w.push_back(std::sqrt(0.5 * (hi - lo) / span * static_cast<double>(K)));
  }
  Eigen::VectorXd p(3);
  p(1) = -out.inner_slope;
  p(2) = out.outer_slope;
  p(0) = std::log(s[imin].norm) -
         std::log(std::pow(rho1 / s[imin].rho, p(1)) + std::pow(s[imin].rho / rho2, p(2)));
  Eigen::NumericalDiff<LogResidual> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LogResidual>> lm(nd);
  lm.parameters.maxfev = 2000;
  lm.minimize(p);
  out.iterations = static_cast<int>(lm.iter);
  out.eps = std::exp(p(0));
  out.beta1 = p(1);
  out.beta2 = p(2);
  double acc = 0.0;
  for (const auto& x : s) acc += std::pow(out.eta(x.rho) / x.norm - 1.0, 2);
  out.residual = std::sqrt(acc / static_cast<double>(K));
  if (!(out.beta1 > 0.0) || !(out.beta2 > 0.0) || !std::isfinite(out.eps)) {
    std::ostringstream os;
    os << "fit converged to non-positive exponents (" << out.beta1 << ", " << out.beta2 << ")";
    fail(ErrorCode::FitDegenerate, os.str());
  }
  return out;
}

}  // namespace neckfol
