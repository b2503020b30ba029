#include "neckfol/neckcoords/lapse.hpp"

#include "neckfol/core/error.hpp"

#include <cmath>
#include <sstream>

namespace neckfol {

LapseSolution solve_lapse(const EmbeddedLeaf& leaf, double s, const GroupAction& group) {
  require(s > 0, ErrorCode::InvalidArgument, "lapse needs a positive leaf parameter");
  const InvariantReduction red(*leaf.cloud(), group);
  const JacobiOperator J = jacobi_operator(leaf);
  const Mat Jred = red.reduce_rows(jacobi_apply_dense(J, red.extension_matrix()));
  const Eigen::PartialPivLU<Mat> lu(Jred);
  LapseSolution out;
  out.s = s;
  out.inverse_norm = lu.inverse().cwiseAbs().rowwise().sum().maxCoeff();
  const double norm = Jred.cwiseAbs().rowwise().sum().maxCoeff();
  if (!std::isfinite(out.inverse_norm) || out.inverse_norm * norm > 1e10) {
    std::ostringstream os;
    os << "lapse operator at s = " << s << " is not invertible on invariant functions";
    fail(ErrorCode::NearSingular, os.str());
  }
  const double rhs = leaf.m() / (s * s);
  out.u = red.extend(lu.solve(Vec::Constant(red.size(), rhs)));
  out.residual = (jacobi_apply(J, out.u).array() - rhs).abs().maxCoeff();
  out.deviation = (out.u.array() - 1.0).abs().maxCoeff();
  return out;
}

}  // namespace neckfol
