#include "neckfol/spherecalc/node_cloud.hpp"

#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"
#include "neckfol/simd/kernels.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>

namespace neckfol {

namespace {

using Exponents = std::vector<std::vector<int>>;

void enumerate_exact(int vars, int degree, std::vector<int>& cur, int pos, Exponents& out) {
  if (pos == vars - 1) {
    cur[static_cast<std::size_t>(pos)] = degree;
    out.push_back(cur);
    return;
  }
  for (int d = degree; d >= 0; --d) {
    cur[static_cast<std::size_t>(pos)] = d;
    enumerate_exact(vars, degree - d, cur, pos + 1, out);
  }
}

Exponents monomials_exact(int vars, int degree) {
  Exponents out;
  std::vector<int> cur(static_cast<std::size_t>(vars), 0);
  enumerate_exact(vars, degree, cur, 0, out);
  return out;
}

Exponents monomials_upto(int vars, int degree) {
  Exponents out;
  for (int d = 0; d <= degree; ++d) {
    auto e = monomials_exact(vars, d);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

// On the unit sphere, degrees q and q-1 together span all polynomials of degree <= q.
Exponents sphere_polynomial_basis(int vars, int degree) {
  Exponents out = monomials_exact(vars, degree);
  if (degree > 0) {
    auto lower = monomials_exact(vars, degree - 1);
    out.insert(out.end(), lower.begin(), lower.end());
  }
  return out;
}

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double monomial(const std::vector<int>& a, const double* x) {
  double v = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) v *= ipow(x[i], a[i]);
  return v;
}

// Ambient gradient and Hessian of x^a.
void monomial_derivs(const std::vector<int>& a, const double* x, SVec& grad, SMat& hess) {
  const int n = static_cast<int>(a.size());
  grad.setZero(n);
  hess.setZero(n, n);
  // Powers x_i^k for k <= a_i.
  double pw[kMaxDim][16];
  for (int i = 0; i < n; ++i) {
    pw[i][0] = 1.0;
    for (int k = 1; k <= a[static_cast<std::size_t>(i)]; ++k) pw[i][k] = pw[i][k - 1] * x[i];
  }
  auto term = [&](int di, int dj) {
    double v = 1.0;
    for (int k = 0; k < n; ++k) {
      const int e = a[static_cast<std::size_t>(k)] - (k == di) - (k == dj);
      if (e < 0) return 0.0;
      v *= pw[k][e];
    }
    return v;
  };
  for (int i = 0; i < n; ++i) {
    const int ai = a[static_cast<std::size_t>(i)];
    if (ai == 0) continue;
    grad(i) = ai * term(i, -1);
    for (int j = 0; j < n; ++j) {
      const int bj = a[static_cast<std::size_t>(j)] - (i == j);
      if (bj <= 0) continue;
      hess(i, j) = ai * bj * term(i, j);
    }
  }
}

void csr_mul(const CloudOperator& s, const Mat& x, Mat& y) {
  const Eigen::Index rows = static_cast<Eigen::Index>(s.rowptr.size() - 1);
  y.setZero(rows, x.cols());
  if (x.cols() == 1) {
    simd::csr_apply(s.rowptr.data(), s.cols.data(), s.vals.data(), x.data(), y.data(), static_cast<std::size_t>(rows));
    return;
  }
  RowMat xr = x;
  RowMat yr(rows, x.cols());
  simd::csr_apply_multi(s.rowptr.data(), s.cols.data(), s.vals.data(), xr.data(), yr.data(),
                        static_cast<std::size_t>(rows), static_cast<std::size_t>(x.cols()));
  y = yr;
}

// Spectral differentiation on the uniform periodic grid, first and second derivative.
void periodic_spectral(int N, Mat& d1, Mat& d2) {
  const double h = 2.0 * kPi / N;
  d1.setZero(N, N);
  d2.setZero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
      const double half = 0.5 * k * h;
      if (N % 2 == 0) {
        d1(i, j) = 0.5 * sgn / std::tan(half);
        d2(i, j) = -0.5 * sgn / (std::sin(half) * std::sin(half));
      } else {
        d1(i, j) = 0.5 * sgn / std::sin(half);
        d2(i, j) = -0.5 * sgn / (std::sin(half) * std::tan(half));
      }
    }
    d2(i, i) = (N % 2 == 0) ? -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0 : -kPi * kPi / (3.0 * h * h) + 1.0 / 12.0;
  }
}

CloudOperator dense_to_op(const Mat& d) {
  CloudOperator op;
  const Eigen::Index N = d.rows();
  op.rowptr.resize(static_cast<std::size_t>(N + 1));
  op.rowptr[0] = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      op.cols.push_back(static_cast<std::int32_t>(j));
      op.vals.push_back(d(i, j));
    }
    op.rowptr[static_cast<std::size_t>(i + 1)] = static_cast<std::int32_t>(op.cols.size());
  }
  return op;
}

SMat tangent_frame(const SVec& x) {
  const int n = static_cast<int>(x.size());
  if (n == 2) {
    SMat e(2, 1);
    e << -x(1), x(0);
    return e;
  }
  Mat xm = x;
  Eigen::HouseholderQR<Mat> qr(xm);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  return q.rightCols(n - 1);
}

Mat initial_nodes(int n, int reps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat x(reps, n);
  for (int i = 0; i < reps; ++i) {
    double nn = 0.0;
    do {
      for (int k = 0; k < n; ++k) x(i, k) = gauss(rng);
      nn = x.row(i).norm();
    } while (nn < 1e-8);
    x.row(i) /= nn;
  }
  return x;
}

Mat close_under(const Mat& reps, const GroupAction& g) {
  const Eigen::Index R = reps.rows();
  Mat full(R * g.order(), reps.cols());
  for (int e = 0; e < g.order(); ++e) {
    const SMat& ge = g.elements()[static_cast<std::size_t>(e)];
    for (Eigen::Index i = 0; i < R; ++i) {
      SVec v = ge * SVec(reps.row(i).transpose());
      full.row(e * R + i) = v.transpose();
    }
  }
  return full;
}

// Riesz-energy repulsion of the representatives against the full symmetric cloud.
Mat repel(Mat reps, const GroupAction& g, int iters) {
  const int n = static_cast<int>(reps.cols());
  const int m = n - 1;
  const Eigen::Index R = reps.rows();
  const double total = static_cast<double>(R) * g.order();
  const double h = std::pow(sphere_volume(n) / total, 1.0 / m);
  // Riesz exponent s = m + 1: force ~ d / |d|^(m+3).
  const int half_pow = (m + 3) / 2;
  const bool odd = (m + 3) % 2 != 0;
  for (int it = 0; it < iters; ++it) {
    const RowMat full = close_under(reps, g);
    const RowMat rr = reps;
    RowMat force = RowMat::Zero(R, n);
    const Eigen::Index F = full.rows();
    const double cut2 = 16.0 * h * h;
    parallel_for(static_cast<std::size_t>(R), [&](std::size_t b, std::size_t e) {
      for (std::size_t ii = b; ii < e; ++ii) {
        const auto i = static_cast<Eigen::Index>(ii);
        const double* xi = rr.row(i).data();
        double f[kMaxDim] = {0.0, 0.0, 0.0, 0.0};
        for (Eigen::Index j = 0; j < F; ++j) {
          if (j == i) continue;
          const double* xj = full.row(j).data();
          double d[kMaxDim];
          double r2 = 0.0;
          for (int k = 0; k < n; ++k) {
            d[k] = xi[k] - xj[k];
            r2 += d[k] * d[k];
          }
          if (r2 > cut2) continue;
          const double inv = 1.0 / r2;
          double w = odd ? std::sqrt(inv) : 1.0;
          for (int t = 0; t < half_pow; ++t) w *= inv;
          for (int k = 0; k < n; ++k) f[k] += w * d[k];
        }
        double radial = 0.0;
        for (int k = 0; k < n; ++k) radial += f[k] * xi[k];
        for (int k = 0; k < n; ++k) force(i, k) = f[k] - radial * xi[k];
      }
    });
    double fmax = 0.0;
    for (Eigen::Index i = 0; i < R; ++i) fmax = std::max(fmax, force.row(i).norm());
    if (fmax <= 0.0) break;
    const double tau = h * (0.25 * (1.0 - static_cast<double>(it) / iters) + 0.02);
    for (Eigen::Index i = 0; i < R; ++i) {
      reps.row(i) += (tau / fmax) * force.row(i);
      reps.row(i).normalize();
    }
  }
  return reps;
}

std::int64_t binomial(int a, int b) {
  if (b < 0 || b > a) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

}  // namespace

int harmonic_multiplicity(int m, int k) {
  if (k < 0) return 0;
  if (m == 1) return k == 0 ? 1 : 2;
  return static_cast<int>(binomial(k + m, m) - binomial(k + m - 2, m));
}

SphereQuadrature cloud_quadrature(const NodeCloud& cloud) {
  SphereQuadrature q;
  q.nodes = cloud.nodes();
  q.weights = cloud.weights();
  return q;
}

double sphere_monomial_integral(const std::vector<int>& alpha) {
  double lg = 0.0;
  double sum = 0.0;
  for (int a : alpha) {
    if (a % 2 != 0) return 0.0;
    const double b = 0.5 * (a + 1);
    lg += std::lgamma(b);
    sum += b;
  }
  return 2.0 * std::exp(lg - std::lgamma(sum));
}

int NodeCloud::hess_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  const int mm = m();
  return a * mm - a * (a - 1) / 2 + (b - a);
}

class CloudBuilder {
 public:
  static CloudPtr build(int n, const Mat& nodes, std::uint64_t seed, const GroupAction& sym, const StencilParams& p);

 private:
  static void permutations(NodeCloud& c);
  static void neighbor_lists(NodeCloud& c, int k);
  static void stencils(NodeCloud& c);
  static void spectral_stencils(NodeCloud& c);
  static void quadrature(NodeCloud& c);
  static void band(NodeCloud& c);
  static void symmetric_laplacian(NodeCloud& c);
  static void validate(const NodeCloud& c);
};

void CloudBuilder::permutations(NodeCloud& c) {
  auto perm = c.closure_permutations(c.symmetry_, 1e-10);
  if (!perm) fail(ErrorCode::InvalidArgument, "node cloud is not closed under its symmetry group");
  c.perm_ = std::move(*perm);
}

void CloudBuilder::neighbor_lists(NodeCloud& c, int k) {
  const Eigen::Index N = c.size();
  k = static_cast<int>(std::min<Eigen::Index>(k, N));
  c.nbr_rowptr_.assign(static_cast<std::size_t>(N + 1), 0);
  c.nbr_cols_.assign(static_cast<std::size_t>(N * k), 0);
  for (Eigen::Index i = 0; i <= N; ++i) c.nbr_rowptr_[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i * k);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    std::vector<std::pair<double, std::int32_t>> d(static_cast<std::size_t>(N));
    for (std::size_t ii = b; ii < e; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      for (Eigen::Index j = 0; j < N; ++j)
        d[static_cast<std::size_t>(j)] = {(c.nodes_.row(i) - c.nodes_.row(j)).squaredNorm(), static_cast<std::int32_t>(j)};
      std::partial_sort(d.begin(), d.begin() + k, d.end());
      for (int t = 0; t < k; ++t) c.nbr_cols_[ii * static_cast<std::size_t>(k) + static_cast<std::size_t>(t)] = d[static_cast<std::size_t>(t)].second;
    }
  });
  double sp = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto j = c.nbr_cols_[static_cast<std::size_t>(i * k + std::min(1, k - 1))];
    sp += (c.nodes_.row(i) - c.nodes_.row(j)).norm();
  }
  c.spacing_ = sp / static_cast<double>(N);
}

void CloudBuilder::stencils(NodeCloud& c) {
  const int m = c.m();
  const int nh = c.hess_count();
  const Eigen::Index N = c.size();
  const Exponents local = monomials_upto(m, c.params_.mls_degree);
  const int T = static_cast<int>(local.size());
  auto term = [&](const std::vector<int>& e) {
    return static_cast<int>(std::find(local.begin(), local.end(), e) - local.begin());
  };
  std::vector<int> grad_term(static_cast<std::size_t>(m));
  std::vector<int> hess_term(static_cast<std::size_t>(nh));
  std::vector<double> hess_scale(static_cast<std::size_t>(nh));
  for (int a = 0; a < m; ++a) {
    std::vector<int> e(static_cast<std::size_t>(m), 0);
    e[static_cast<std::size_t>(a)] = 1;
    grad_term[static_cast<std::size_t>(a)] = term(e);
    for (int b = a; b < m; ++b) {
      std::vector<int> f(static_cast<std::size_t>(m), 0);
      f[static_cast<std::size_t>(a)] += 1;
      f[static_cast<std::size_t>(b)] += 1;
      const int h = c.hess_index(a, b);
      hess_term[static_cast<std::size_t>(h)] = term(f);
      hess_scale[static_cast<std::size_t>(h)] = (a == b) ? 2.0 : 1.0;
    }
  }

  const int k = c.nbr_rowptr_[1];
  if (k < T) fail(ErrorCode::ResolutionTooLow, "stencil has fewer neighbors than local monomials");
  c.grad_.assign(static_cast<std::size_t>(m), {});
  c.hess_.assign(static_cast<std::size_t>(nh), {});
  for (auto* ops : {&c.grad_, &c.hess_}) {
    for (auto& op : *ops) {
      op.rowptr = c.nbr_rowptr_;
      op.cols = c.nbr_cols_;
      op.vals.assign(c.nbr_cols_.size(), 0.0);
    }
  }
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    Mat V(k, T);
    Vec sw(k);
    for (std::size_t ii = b; ii < e; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      const SMat& E = c.frames_[ii];
      const std::int32_t* nb = &c.nbr_cols_[ii * static_cast<std::size_t>(k)];
      Mat u(k, m);
      double delta = 0.0;
      for (int j = 0; j < k; ++j) {
        u.row(j) = (E.transpose() * SVec(c.nodes_.row(nb[j]).transpose())).transpose();
        delta = std::max(delta, u.row(j).norm());
      }
      (void)i;
      const double width = c.params_.weight_width * delta;
      for (int j = 0; j < k; ++j) {
        const double r = u.row(j).norm() / width;
        sw(j) = std::exp(-0.5 * r * r);
        Eigen::RowVectorXd v = u.row(j) / delta;
        for (int t = 0; t < T; ++t) V(j, t) = sw(j) * monomial(local[static_cast<std::size_t>(t)], v.data());
      }
      Eigen::HouseholderQR<Mat> qr(V);
      const Mat C = qr.solve(Mat(sw.asDiagonal()));
      const std::size_t off = ii * static_cast<std::size_t>(k);
      for (int a = 0; a < m; ++a) {
        auto& vals = c.grad_[static_cast<std::size_t>(a)].vals;
        for (int j = 0; j < k; ++j) vals[off + static_cast<std::size_t>(j)] = C(grad_term[static_cast<std::size_t>(a)], j) / delta;
      }
      for (int h = 0; h < nh; ++h) {
        auto& vals = c.hess_[static_cast<std::size_t>(h)].vals;
        const double s = hess_scale[static_cast<std::size_t>(h)] / (delta * delta);
        for (int j = 0; j < k; ++j) vals[off + static_cast<std::size_t>(j)] = s * C(hess_term[static_cast<std::size_t>(h)], j);
      }
    }
  });
}

void CloudBuilder::spectral_stencils(NodeCloud& c) {
  Mat d1, d2;
  periodic_spectral(static_cast<int>(c.size()), d1, d2);
  c.grad_.assign(1, dense_to_op(d1));
  c.hess_.assign(1, dense_to_op(d2));
}

void CloudBuilder::quadrature(NodeCloud& c) {
  const int n = c.n_;
  const Eigen::Index N = c.size();
  const double vol = sphere_volume(n);
  if (n == 2) {
    c.weights_ = Vec::Constant(N, vol / static_cast<double>(N));
    c.quad_degree_ = static_cast<int>(N) - 1;
    return;
  }
  const Vec w0 = Vec::Constant(N, vol / static_cast<double>(N));
  for (int deg = c.params_.quadrature_degree; deg >= 2; deg -= 2) {
    const Exponents basis = sphere_polynomial_basis(n, deg);
    const Eigen::Index K = static_cast<Eigen::Index>(basis.size());
    if (K >= N) continue;
    Mat At(K, N);
    Vec mu(K);
    for (Eigen::Index t = 0; t < K; ++t) {
      const auto& a = basis[static_cast<std::size_t>(t)];
      mu(t) = sphere_monomial_integral(a);
      for (Eigen::Index i = 0; i < N; ++i) {
        SVec x = c.nodes_.row(i).transpose();
        At(t, i) = monomial(a, x.data());
      }
    }
    const Vec rhs = mu - At * w0;
    const Vec d = At.completeOrthogonalDecomposition().solve(rhs);
    const Vec w = w0 + d;
    if (w.minCoeff() > 0.0 && (At * w - mu).cwiseAbs().maxCoeff() < 1e-11) {
      c.weights_ = w;
      c.quad_degree_ = deg;
      return;
    }
  }
  fail(ErrorCode::ResolutionTooLow, "no positive moment-fitted quadrature on this cloud");
}

void CloudBuilder::band(NodeCloud& c) {
  const int n = c.n_;
  const int m = c.m();
  const int nh = c.hess_count();
  const Eigen::Index N = c.size();
  const int q = c.params_.band_degree;
  const Exponents basis = sphere_polynomial_basis(n, q);
  const Eigen::Index M = static_cast<Eigen::Index>(basis.size());
  Mat Bm(N, M);
  std::vector<Mat> dB(static_cast<std::size_t>(m), Mat(N, M));
  std::vector<Mat> hB(static_cast<std::size_t>(nh), Mat(N, M));
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t e) {
    SVec g;
    SMat H;
    for (std::size_t ii = b; ii < e; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      SVec x = c.nodes_.row(i).transpose();
      const SMat& E = c.frames_[ii];
      for (Eigen::Index t = 0; t < M; ++t) {
        const auto& a = basis[static_cast<std::size_t>(t)];
        Bm(i, t) = monomial(a, x.data());
        monomial_derivs(a, x.data(), g, H);
        const SVec tg = E.transpose() * g;
        const SMat th = E.transpose() * H * E;
        const double radial = x.dot(g);
        for (int p = 0; p < m; ++p) {
          dB[static_cast<std::size_t>(p)](i, t) = tg(p);
          for (int r = p; r < m; ++r)
            hB[static_cast<std::size_t>(c.hess_index(p, r))](i, t) = th(p, r) - (p == r ? radial : 0.0);
        }
      }
    }
  });
  // W-orthonormalize, then Rayleigh-Ritz for the exact Laplacian on the span.
  // K is symmetric up to the quadrature error on degree-2q products.
  const Vec sw = c.weights_.cwiseSqrt();
  Eigen::HouseholderQR<Mat> qr(sw.asDiagonal() * Bm);
  const Mat R = qr.matrixQR().topRows(M).triangularView<Eigen::Upper>();
  const Mat Rinv = R.triangularView<Eigen::Upper>().solve(Mat::Identity(M, M));
  Mat B = Bm * Rinv;
  Mat LB = Mat::Zero(N, M);
  for (int a = 0; a < m; ++a) LB += hB[static_cast<std::size_t>(c.hess_index(a, a))];
  LB = LB * Rinv;
  Mat K = B.transpose() * c.weights_.asDiagonal() * LB;
  c.band_asymmetry_ = (K - K.transpose()).cwiseAbs().maxCoeff();
  K = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(K);
  // Descending eigenvalues: degree 0 first.
  Mat U = es.eigenvectors().rowwise().reverse();
  c.band_lambda_ = es.eigenvalues().reverse();
  const Mat T = Rinv * U;
  c.band_ = Bm * T;
  // Re-orthonormalize against roundoff so the Gram deviation stays at machine level.
  {
    Eigen::HouseholderQR<Mat> q2(sw.asDiagonal() * c.band_);
    const Mat R2 = q2.matrixQR().topRows(M).triangularView<Eigen::Upper>();
    Mat D = R2.diagonal().cwiseSign().asDiagonal();
    const Mat fix = R2.triangularView<Eigen::Upper>().solve(D);
    c.band_ = c.band_ * fix;
    c.band_coef_ = T * fix;
  }
  c.band_exps_ = basis;
  c.proj_ = c.band_.transpose() * c.weights_.asDiagonal();
  c.tail_eigenvalue_ = sphere_eigenvalue(m, q + 1);

  for (int a = 0; a < m; ++a) {
    auto& op = c.grad_[static_cast<std::size_t>(a)];
    Mat SB;
    csr_mul(op, c.band_, SB);
    op.corr = dB[static_cast<std::size_t>(a)] * Rinv * U - SB;
  }
  for (int h = 0; h < nh; ++h) {
    auto& op = c.hess_[static_cast<std::size_t>(h)];
    Mat SB;
    csr_mul(op, c.band_, SB);
    op.corr = hB[static_cast<std::size_t>(h)] * Rinv * U - SB;
  }
}

void CloudBuilder::symmetric_laplacian(NodeCloud& c) {
  const Eigen::Index N = c.size();
  const int m = c.m();
  using Sp = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int32_t>;
  std::vector<Eigen::Triplet<double, std::int32_t>> trip;
  for (int a = 0; a < m; ++a) {
    const auto& op = c.hess_op(a, a);
    for (Eigen::Index i = 0; i < N; ++i)
      for (auto p = op.rowptr[static_cast<std::size_t>(i)]; p < op.rowptr[static_cast<std::size_t>(i + 1)]; ++p)
        trip.emplace_back(static_cast<std::int32_t>(i), op.cols[static_cast<std::size_t>(p)], op.vals[static_cast<std::size_t>(p)]);
  }
  Sp L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  const Vec& w = c.weights_;
  const Vec winv = w.cwiseInverse();
  Sp Lt = Sp(L.transpose());
  Sp Ls = 0.5 * (L + Sp(winv.asDiagonal() * Lt * w.asDiagonal()));
  Ls.makeCompressed();
  CloudOperator op;
  op.rowptr.assign(Ls.outerIndexPtr(), Ls.outerIndexPtr() + N + 1);
  op.cols.assign(Ls.innerIndexPtr(), Ls.innerIndexPtr() + Ls.nonZeros());
  op.vals.assign(Ls.valuePtr(), Ls.valuePtr() + Ls.nonZeros());
  c.lap_mls_sym_ = std::move(op);
}

void CloudBuilder::validate(const NodeCloud& c) {
  const double vol = sphere_volume(c.n_);
  if (std::abs(c.weights_.sum() - vol) > 1e-9 * vol || c.weights_.minCoeff() <= 0.0)
    fail(ErrorCode::ResolutionTooLow, "quadrature weights failed validation");
  const Eigen::Index N = c.size();
  const Vec one = Vec::Ones(N);
  for (int a = 0; a < c.m(); ++a) {
    if (c.apply(c.grad_op(a), one).cwiseAbs().maxCoeff() > 1e-8)
      fail(ErrorCode::ResolutionTooLow, "gradient of a constant is not zero");
  }
  for (int k = 0; k < c.n_; ++k) {
    const Vec x = c.nodes_.col(k);
    const Vec lx = c.laplacian(x);
    if ((lx + c.m() * x).cwiseAbs().maxCoeff() > 1e-6)
      fail(ErrorCode::ResolutionTooLow, "Laplacian of a coordinate function is inaccurate");
  }
}

CloudPtr CloudBuilder::build(int n, const Mat& nodes, std::uint64_t seed, const GroupAction& sym,
                             const StencilParams& p) {
  auto c = std::make_shared<NodeCloud>();
  c->n_ = n;
  c->seed_ = seed;
  c->params_ = p;
  c->nodes_ = nodes;
  c->symmetry_ = sym;
  const Eigen::Index N = nodes.rows();
  c->frames_.resize(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) c->frames_[static_cast<std::size_t>(i)] = tangent_frame(nodes.row(i).transpose());
  permutations(*c);
  if (n == 2) {
    neighbor_lists(*c, 3);
    spectral_stencils(*c);
  } else {
    const int T = static_cast<int>(monomials_upto(n - 1, p.mls_degree).size());
    neighbor_lists(*c, p.neighbors > 0 ? p.neighbors : 2 * T);
    stencils(*c);
  }
  quadrature(*c);
  band(*c);
  symmetric_laplacian(*c);
  validate(*c);
  return c;
}

CloudPtr build_cloud_from_nodes(int n, const Mat& nodes, std::uint64_t seed, const GroupAction& symmetry,
                                const StencilParams& params) {
  return CloudBuilder::build(n, nodes, seed, symmetry, params);
}

CloudPtr build_cloud(int n, int node_count, std::uint64_t seed, const std::optional<GroupAction>& symmetry,
                     const StencilParams& params) {
  if (n < 2 || n > kMaxDim) fail(ErrorCode::InvalidArgument, "sphere clouds support n in [2, 4]");
  if (node_count < 200) fail(ErrorCode::ResolutionTooLow, "node count below 200");
  const GroupAction sym = symmetry ? *symmetry : GroupAction::trivial(n);
  if (sym.dim() != n) fail(ErrorCode::GroupMismatch, "symmetry group acts on a different dimension");
  const int reps = (node_count + sym.order() - 1) / sym.order();
  Mat nodes;
  if (n == 2) {
    const int N = reps * sym.order();
    nodes.resize(N, 2);
    for (int i = 0; i < N; ++i) {
      const double th = 2.0 * kPi * i / N;
      nodes(i, 0) = std::cos(th);
      nodes(i, 1) = std::sin(th);
    }
  } else {
    const Mat r0 = initial_nodes(n, reps, seed);
    nodes = close_under(repel(r0, sym, params.repulsion_iters), sym);
  }
  return CloudBuilder::build(n, nodes, seed, sym, params);
}

std::optional<std::vector<std::vector<std::int32_t>>> NodeCloud::closure_permutations(const GroupAction& g,
                                                                                     double tol) const {
  const Eigen::Index N = size();
  if (g.dim() != n_) return std::nullopt;
  std::vector<std::vector<std::int32_t>> perm(static_cast<std::size_t>(g.order()),
                                              std::vector<std::int32_t>(static_cast<std::size_t>(N), -1));
  bool ok = true;
  for (int e = 0; e < g.order() && ok; ++e) {
    const SMat& ge = g.elements()[static_cast<std::size_t>(e)];
    const Mat img = nodes_ * ge.transpose();
    auto& pe = perm[static_cast<std::size_t>(e)];
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t b, std::size_t end) {
      for (std::size_t ii = b; ii < end; ++ii) {
        const auto i = static_cast<Eigen::Index>(ii);
        Eigen::Index best = 0;
        const double d2 = (nodes_.rowwise() - img.row(i)).rowwise().squaredNorm().minCoeff(&best);
        if (d2 <= tol * tol) pe[ii] = static_cast<std::int32_t>(best);
      }
    });
    for (auto v : pe)
      if (v < 0) ok = false;
  }
  if (!ok) return std::nullopt;
  return perm;
}

std::vector<std::int32_t> NodeCloud::neighbors(Eigen::Index i) const {
  const auto b = nbr_rowptr_[static_cast<std::size_t>(i)];
  const auto e = nbr_rowptr_[static_cast<std::size_t>(i + 1)];
  return {nbr_cols_.begin() + b, nbr_cols_.begin() + e};
}

Mat NodeCloud::apply(const CloudOperator& op, const Mat& F) const {
  Mat Y;
  csr_mul(op, F, Y);
  if (op.corr.size() > 0) Y.noalias() += op.corr * (proj_ * F);
  return Y;
}

Mat NodeCloud::apply_stencil(const CloudOperator& op, const Mat& F) const {
  Mat Y;
  csr_mul(op, F, Y);
  return Y;
}

Vec NodeCloud::apply(const CloudOperator& op, const Vec& f) const {
  Mat F = f;
  return apply(op, F).col(0);
}

Mat NodeCloud::dense(const CloudOperator& op) const {
  const Eigen::Index N = size();
  Mat D = Mat::Zero(op.rows(), N);
  for (Eigen::Index i = 0; i < op.rows(); ++i)
    for (auto p = op.rowptr[static_cast<std::size_t>(i)]; p < op.rowptr[static_cast<std::size_t>(i + 1)]; ++p)
      D(i, op.cols[static_cast<std::size_t>(p)]) += op.vals[static_cast<std::size_t>(p)];
  if (op.corr.size() > 0) D.noalias() += op.corr * proj_;
  return D;
}

Mat NodeCloud::band_values_at(const Mat& points) const {
  const Eigen::Index K = points.rows();
  const Eigen::Index M = static_cast<Eigen::Index>(band_exps_.size());
  Mat V(K, M);
  for (Eigen::Index i = 0; i < K; ++i) {
    SVec x = points.row(i).transpose();
    for (Eigen::Index t = 0; t < M; ++t) V(i, t) = monomial(band_exps_[static_cast<std::size_t>(t)], x.data());
  }
  return V * band_coef_;
}

Eigen::Index NodeCloud::nearest_node(const SVec& y) const {
  Eigen::Index best = 0;
  (nodes_ * y).maxCoeff(&best);
  return best;
}

Mat NodeCloud::laplacian(const Mat& F) const {
  // On the uniform circle grid the spectral second derivative is exact and symmetric.
  if (n_ == 2) return apply(hess_[0], F);
  const Mat c = proj_ * F;
  return band_ * ((band_lambda_.array() - tail_eigenvalue_).matrix().asDiagonal() * c) + tail_eigenvalue_ * F;
}

Vec NodeCloud::laplacian(const Vec& f) const {
  Mat F = f;
  return laplacian(F).col(0);
}

const Mat& NodeCloud::laplacian_dense() const {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (!lap_dense_ && n_ == 2) lap_dense_ = std::make_shared<Mat>(dense(hess_[0]));
  if (!lap_dense_) {
    const Eigen::Index N = size();
    Mat L = tail_eigenvalue_ * Mat::Identity(N, N);
    L.noalias() += band_ * ((band_lambda_.array() - tail_eigenvalue_).matrix().asDiagonal() * proj_);
    lap_dense_ = std::make_shared<Mat>(std::move(L));
  }
  return *lap_dense_;
}

Mat NodeCloud::stencil_laplacian_dense() const {
  const Eigen::Index N = size();
  Mat Ls = Mat::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (auto p = lap_mls_sym_.rowptr[static_cast<std::size_t>(i)]; p < lap_mls_sym_.rowptr[static_cast<std::size_t>(i + 1)]; ++p)
      Ls(i, lap_mls_sym_.cols[static_cast<std::size_t>(p)]) += lap_mls_sym_.vals[static_cast<std::size_t>(p)];
  return Ls;
}

}  // namespace neckfol
