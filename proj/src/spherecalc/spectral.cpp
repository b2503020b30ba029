#include "neckfol/spherecalc/spectral.hpp"

#include "neckfol/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace neckfol {

namespace {

Vec symmetric_spectrum(const Mat& L, const Vec& w) {
  const Vec sw = w.cwiseSqrt();
  Mat A = sw.asDiagonal() * L * sw.cwiseInverse().asDiagonal();
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  Vec ev = es.eigenvalues();
  std::vector<double> v(ev.data(), ev.data() + ev.size());
  std::stable_sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void fix_sign(Eigen::Ref<Vec> v) {
  Eigen::Index best = 0;
  double mx = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > mx * (1.0 + 1e-12)) {
      mx = std::abs(v(i));
      best = i;
    }
  }
  if (v(best) < 0.0) v = -v;
}

}  // namespace

double SpectralBasis::gram_deviation() const {
  const Mat G = vectors.transpose() * cloud->weights().asDiagonal() * vectors;
  return (G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

Vec gamma_project(const NodeCloud& cloud, const Vec& f, const GroupAction& g) {
  CloudPtr ref(&cloud, [](const NodeCloud*) {});
  return group_average(SphereField::scalar(ref, f), g).scalar_values();
}

SpectralBasis build_spectral_basis(CloudPtr cloud, int degree, const GroupAction& group) {
  const NodeCloud& c = *cloud;
  if (degree < 0) fail(ErrorCode::InvalidArgument, "negative band degree");
  if (degree > c.params().band_degree)
    fail(ErrorCode::InvalidArgument, "band degree exceeds the cloud's exact band; rebuild the cloud with a larger band");
  if (group.dim() != c.n()) fail(ErrorCode::GroupMismatch, "group acts on a different dimension");
  const int m = c.m();
  Eigen::Index count = 0;
  for (int k = 0; k <= degree; ++k) count += harmonic_multiplicity(m, k);
  const Vec& lam = c.band_eigenvalues();
  const Mat& B = c.band_basis();
  const Vec& w = c.weights();

  SpectralBasis out;
  out.cloud = cloud;
  out.degree = degree;
  out.group = group;
  out.eigenvalues.resize(count);
  out.vectors.resize(c.size(), count);
  out.invariant.assign(static_cast<std::size_t>(count), true);
  out.harmonic_degree.assign(static_cast<std::size_t>(count), 0);

  // The band is sorted by descending eigenvalue; degree k occupies a block of its multiplicity.
  Eigen::Index start = 0;
  for (int k = 0; k <= degree; ++k) {
    const Eigen::Index mult = harmonic_multiplicity(m, k);
    const Mat Phi = B.middleCols(start, mult);
    // Invariance Gram matrix G = Phi^T W Pi Phi.
    Mat PiPhi(c.size(), mult);
    for (Eigen::Index j = 0; j < mult; ++j) PiPhi.col(j) = gamma_project(c, Phi.col(j), group);
    Mat G = Phi.transpose() * w.asDiagonal() * PiPhi;
    G = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> ge(G);
    const Mat U = ge.eigenvectors().rowwise().reverse();
    const Vec gval = ge.eigenvalues().reverse();
    const Mat A = lam.segment(start, mult).asDiagonal();
    Eigen::Index pos = start;
    for (int part = 0; part < 2; ++part) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < mult; ++j)
        if ((gval(j) > 0.5) == (part == 0)) idx.push_back(j);
      if (idx.empty()) continue;
      Mat Us(mult, static_cast<Eigen::Index>(idx.size()));
      for (std::size_t t = 0; t < idx.size(); ++t) Us.col(static_cast<Eigen::Index>(t)) = U.col(idx[t]);
      // Re-diagonalize the Laplacian inside the invariant (or anti-invariant) block.
      Mat As = Us.transpose() * A * Us;
      As = 0.5 * (As + As.transpose());
      Eigen::SelfAdjointEigenSolver<Mat> ae(As);
      const Mat V = Us * ae.eigenvectors().rowwise().reverse();
      const Vec av = ae.eigenvalues().reverse();
      for (Eigen::Index t = 0; t < V.cols(); ++t, ++pos) {
        Vec col = Phi * V.col(t);
        fix_sign(col);
        out.vectors.col(pos) = col;
        out.eigenvalues(pos) = av(t);
        out.invariant[static_cast<std::size_t>(pos)] = (part == 0);
        out.harmonic_degree[static_cast<std::size_t>(pos)] = k;
      }
    }
    start += mult;
  }
  return out;
}

HelmholtzSolution invert_helmholtz(const SpectralBasis& basis, const Vec& rhs, double shift, bool invariant_only,
                                   double singular_tol) {
  const NodeCloud& c = *basis.cloud;
  const Vec& w = c.weights();
  const double rnorm = std::sqrt(rhs.dot(w.asDiagonal() * rhs));
  HelmholtzSolution out;
  out.u = Vec::Zero(c.size());
  Vec projected = Vec::Zero(c.size());
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < basis.count(); ++k) {
    if (invariant_only && !basis.invariant[static_cast<std::size_t>(k)]) continue;
    const double d = basis.eigenvalues(k) + shift;
    gap = std::min(gap, std::abs(d));
    const double ck = basis.vectors.col(k).dot(w.asDiagonal() * rhs);
    projected += ck * basis.vectors.col(k);
    out.u += (ck / d) * basis.vectors.col(k);
    ++out.modes_used;
  }
  if (gap < singular_tol) fail(ErrorCode::NearSingular, "Laplacian + shift is singular on the requested subspace");
  out.inverse_norm = 1.0 / gap;
  if (rnorm > 0.0) {
    const Vec res = c.laplacian(out.u) + shift * out.u - projected;
    const Vec tail = rhs - projected;
    out.residual = std::sqrt(res.dot(w.asDiagonal() * res)) / rnorm;
    out.truncation_residual = std::sqrt(tail.dot(w.asDiagonal() * tail)) / rnorm;
  }
  return out;
}

Vec dense_spectrum(const NodeCloud& cloud) { return symmetric_spectrum(cloud.laplacian_dense(), cloud.weights()); }

Vec stencil_spectrum(const NodeCloud& cloud) { return symmetric_spectrum(cloud.stencil_laplacian_dense(), cloud.weights()); }

}  // namespace neckfol
