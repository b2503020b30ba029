#include "neckfol/spherecalc/tensor_calc.hpp"

#include "neckfol/core/error.hpp"
#include "neckfol/core/parallel.hpp"
#include "tensor_util.hpp"

#include <cmath>
#include <optional>
#include <random>

namespace neckfol {

using detail::apply_all_slots;
using detail::apply_slot;
using detail::ipow;

namespace {

SMat projector(const NodeCloud& c, Eigen::Index i) {
  const SVec x = c.node(i);
  return SMat::Identity(c.n(), c.n()) - x * x.transpose();
}

// Ambient difference tensor Chat(q, a, b) = E C^gamma_{alpha beta} E E, flat [(q*n + a)*n + b].
std::vector<double> ambient_difference(const NodeCloud& c, const FrameMetric& fm, Eigen::Index i) {
  const int n = c.n();
  const int m = c.m();
  const SMat& E = c.frame(i);
  const auto& C = fm.C[static_cast<std::size_t>(i)];
  std::vector<double> out(static_cast<std::size_t>(n * n * n), 0.0);
  for (int g = 0; g < m; ++g) {
    const SMat amb = E * C[static_cast<std::size_t>(g)] * E.transpose();
    for (int q = 0; q < n; ++q) {
      const double eq = E(q, g);
      if (eq == 0.0) continue;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out[static_cast<std::size_t>((q * n + a) * n + b)] += eq * amb(a, b);
    }
  }
  return out;
}

SphereField covariant_derivative_fm(const SphereField& T, const FrameMetric& fm) {
  const NodeCloud& c = *T.cloud();
  const int n = c.n();
  const int m = c.m();
  const int k = T.rank();
  const int comps = ipow(n, k);
  const auto D = frame_gradient(c, T.values());
  SphereField out(T.cloud(), k + 1);
  parallel_for(static_cast<std::size_t>(c.size()), [&](std::size_t b, std::size_t e) {
    std::vector<double> buf(static_cast<std::size_t>(comps * n)), scratch;
    for (std::size_t ii = b; ii < e; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      const SMat& E = c.frame(i);
      const SMat P = projector(c, i);
      for (int d = 0; d < n; ++d) {
        double* slot = &buf[static_cast<std::size_t>(d * comps)];
        for (int r = 0; r < comps; ++r) {
          double v = 0.0;
          for (int a = 0; a < m; ++a) v += E(d, a) * D[static_cast<std::size_t>(a)](i, r);
          slot[r] = v;
        }
      }
      // Tangential projection of the original slots (slot 0 is tangent already).
      std::vector<double> tmp(buf.size());
      for (int s = 1; s <= k; ++s) {
        apply_slot(P, n, k + 1, s, buf.data(), tmp.data());
        buf.swap(tmp);
      }
      if (!fm.round && k > 0) {
        const auto Ch = ambient_difference(c, fm, i);
        std::vector<double> trow(static_cast<std::size_t>(comps));
        for (int r = 0; r < comps; ++r) trow[static_cast<std::size_t>(r)] = T.values()(i, r);
        for (int d = 0; d < n; ++d) {
          for (int r = 0; r < comps; ++r) {
            double corr = 0.0;
            for (int s = 0; s < k; ++s) {
              const int stride = ipow(n, k - 1 - s);
              const int is = (r / stride) % n;
              const int base = r - is * stride;
              for (int q = 0; q < n; ++q)
                corr += Ch[static_cast<std::size_t>((q * n + d) * n + is)] * trow[static_cast<std::size_t>(base + q * stride)];
            }
            buf[static_cast<std::size_t>(d * comps + r)] -= corr;
          }
        }
      }
      for (int r = 0; r < comps * n; ++r) out.values()(i, r) = buf[static_cast<std::size_t>(r)];
    }
  });
  return out;
}

// -sum over the first two slots of nabla T contracted with h^{-1}.
SphereField contract_first_two(const SphereField& nT, const FrameMetric& fm) {
  const NodeCloud& c = *nT.cloud();
  const int n = c.n();
  const int k = nT.rank() - 2;
  const int comps = ipow(n, k);
  SphereField out(nT.cloud(), k);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const SMat Hi = fm.ambient_inverse(c, i);
    for (int r = 0; r < comps; ++r) {
      double v = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) v += Hi(a, b) * nT.values()(i, (a * n + b) * comps + r);
      out.values()(i, r) = -v;
    }
  }
  return out;
}

double inner_fm(const SphereField& a, const SphereField& b, const FrameMetric& fm) {
  if (a.rank() != b.rank() || a.size() != b.size()) fail(ErrorCode::InvalidArgument, "inner product shape mismatch");
  const NodeCloud& c = *a.cloud();
  const int n = c.n();
  const int k = a.rank();
  const int comps = ipow(n, k);
  const Vec& w = c.weights();
  double total = 0.0;
  std::vector<double> row(static_cast<std::size_t>(comps)), scratch;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    for (int r = 0; r < comps; ++r) row[static_cast<std::size_t>(r)] = b.values()(i, r);
    if (!fm.round) apply_all_slots(fm.ambient_inverse(c, i), n, k, row.data(), scratch);
    double v = 0.0;
    for (int r = 0; r < comps; ++r) v += a.values()(i, r) * row[static_cast<std::size_t>(r)];
    total += w(i) * fm.density(i) * v;
  }
  return total;
}

}  // namespace

SphereField covariant_derivative(const SphereField& T, const SphereField* h) {
  if (T.rank() > 3) fail(ErrorCode::InvalidArgument, "covariant derivative supports rank <= 3");
  return covariant_derivative_fm(T, frame_metric_or_round(*T.cloud(), h));
}

SphereField exterior_covariant(const SphereField& u, const SphereField* h) {
  if (u.rank() != 2) fail(ErrorCode::InvalidArgument, "d^nabla expects a 2-tensor");
  const SphereField nu = covariant_derivative(u, h);
  const int n = u.dim();
  SphereField out(u.cloud(), 3);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d)
        out.values().col((a * n + b) * n + d) = nu.values().col((a * n + b) * n + d) - nu.values().col((b * n + a) * n + d);
  return out;
}

SphereField codifferential(const SphereField& T, const SphereField* h) {
  if (T.rank() != 2 && T.rank() != 3) fail(ErrorCode::InvalidArgument, "delta^nabla expects rank 2 or 3");
  const FrameMetric fm = frame_metric_or_round(*T.cloud(), h);
  return contract_first_two(covariant_derivative_fm(T, fm), fm);
}

double inner_product(const SphereField& a, const SphereField& b, const SphereField* h) {
  return inner_fm(a, b, frame_metric_or_round(*a.cloud(), h));
}

double form_inner_product(const SphereField& a, const SphereField& b, const SphereField* h) {
  return 0.5 * inner_product(a, b, h);
}

SphereField rough_laplacian(const SphereField& T) {
  const NodeCloud& c = *T.cloud();
  const int n = c.n();
  const int k = T.rank();
  SphereField out(T.cloud(), k, -c.laplacian(T.values()));
  if (k == 0) return out;
  std::vector<double> row(static_cast<std::size_t>(out.components())), scratch;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    for (int r = 0; r < out.components(); ++r) row[static_cast<std::size_t>(r)] = out.values()(i, r);
    apply_all_slots(projector(c, i), n, k, row.data(), scratch);
    for (int r = 0; r < out.components(); ++r) out.values()(i, r) = row[static_cast<std::size_t>(r)] - k * T.values()(i, r);
  }
  return out;
}

SphereField trace(const SphereField& u, const SphereField* h) {
  if (u.rank() != 2) fail(ErrorCode::InvalidArgument, "trace expects a 2-tensor");
  const NodeCloud& c = *u.cloud();
  const FrameMetric fm = frame_metric_or_round(c, h);
  Vec t(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) t(i) = (fm.hinv[static_cast<std::size_t>(i)] * u.frame_matrix(i)).trace();
  return SphereField::scalar(u.cloud(), t);
}

SphereField traceless_part(const SphereField& u, const SphereField* h) {
  const NodeCloud& c = *u.cloud();
  const Vec t = trace(u, h).scalar_values();
  const SphereField g = h ? *h : SphereField::round_metric(u.cloud());
  SphereField out = u;
  for (Eigen::Index i = 0; i < c.size(); ++i) out.values().row(i) -= (t(i) / c.m()) * g.values().row(i);
  return out;
}

LichnerowiczPair lichnerowicz_apply(const SphereField& h) {
  if (h.rank() != 2) fail(ErrorCode::InvalidArgument, "Lichnerowicz operator expects a 2-tensor");
  const NodeCloud& c = *h.cloud();
  const int m = c.m();
  SphereField composed = codifferential(exterior_covariant(h)) + covariant_derivative(codifferential(h));
  SphereField weitz = rough_laplacian(h);
  weitz += static_cast<double>(m) * h;
  const Vec tr = trace(h).scalar_values();
  const SphereField g = SphereField::round_metric(h.cloud());
  for (Eigen::Index i = 0; i < c.size(); ++i) weitz.values().row(i) -= tr(i) * g.values().row(i);
  return {std::move(composed), std::move(weitz)};
}

namespace {

// Random tangent symmetric 2-tensor with band-limited components of degree <= max_degree.
SphereField random_band_sym2(const CloudPtr& cloud, std::mt19937_64& rng, int max_degree) {
  const NodeCloud& c = *cloud;
  const int n = c.n();
  const double cut = -sphere_eigenvalue(c.m(), max_degree) + 1e-6;
  Eigen::Index K = 0;
  while (K < c.band_eigenvalues().size() && -c.band_eigenvalues()(K) <= cut) ++K;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat coef(K, n * n);
  for (Eigen::Index r = 0; r < K; ++r)
    for (int q = 0; q < n * n; ++q) coef(r, q) = gauss(rng);
  SphereField f(cloud, 2, c.band_basis().leftCols(K) * coef);
  return f.projected(true);
}

}  // namespace

LichnerowiczAgreement lichnerowicz_agreement(CloudPtr cloud, int dimension, std::uint64_t seed, int max_degree) {
  std::mt19937_64 rng(seed);
  std::vector<SphereField> V, A1, A2;
  for (int j = 0; j < dimension; ++j) {
    V.push_back(random_band_sym2(cloud, rng, max_degree));
    auto pair = lichnerowicz_apply(V.back());
    A1.push_back(std::move(pair.composed));
    A2.push_back(std::move(pair.weitzenbock));
  }
  // W-orthonormalize the test subspace before forming the Gram matrices.
  Mat G(dimension, dimension), M1(dimension, dimension), M2(dimension, dimension);
  for (int a = 0; a < dimension; ++a)
    for (int b = 0; b < dimension; ++b) {
      G(a, b) = inner_product(V[static_cast<std::size_t>(a)], V[static_cast<std::size_t>(b)]);
      M1(a, b) = inner_product(V[static_cast<std::size_t>(a)], A1[static_cast<std::size_t>(b)]);
      M2(a, b) = inner_product(V[static_cast<std::size_t>(a)], A2[static_cast<std::size_t>(b)]);
    }
  Eigen::LLT<Mat> llt(G);
  const Mat Linv = llt.matrixL().solve(Mat::Identity(dimension, dimension));
  const Mat B1 = Linv * M1 * Linv.transpose();
  const Mat B2 = Linv * M2 * Linv.transpose();
  Eigen::JacobiSVD<Mat> s2(B2), sd(B1 - B2);
  LichnerowiczAgreement out;
  out.dimension = dimension;
  out.operator_norm = s2.singularValues()(0);
  out.relative_difference = sd.singularValues()(0) / out.operator_norm;
  return out;
}

double traceless_rayleigh_min(CloudPtr cloud, int krylov_dim, std::uint64_t seed) {
  const NodeCloud& c = *cloud;
  const int m = c.m();
  auto project = [&](SphereField f) { return traceless_part(f.projected(true)); };
  auto op = [&](const SphereField& f) {
    SphereField r = rough_laplacian(f);
    r += static_cast<double>(m) * f;
    return project(r);
  };
  std::mt19937_64 rng(seed);
  std::vector<SphereField> Q, AQ;
  // Gram-Schmidt twice, re-projecting in between: once the Krylov space is
  // nearly exhausted the remainder is roundoff, which is not tangent.
  auto orthonormalize = [&](SphereField w, double ref) -> std::optional<SphereField> {
    for (int pass = 0; pass < 2; ++pass) {
      for (const SphereField& q : Q) w -= inner_product(q, w) * q;
      w = project(std::move(w));
    }
    const double nrm = std::sqrt(std::max(0.0, inner_product(w, w)));
    if (nrm <= 1e-8 * ref) return std::nullopt;
    w *= 1.0 / nrm;
    return w;
  };
  auto fresh = [&]() {
    for (int tries = 0; tries < 8; ++tries) {
      SphereField v = project(random_band_sym2(cloud, rng, c.params().band_degree));
      if (auto q = orthonormalize(v, std::sqrt(inner_product(v, v)))) return q;
    }
    return std::optional<SphereField>{};
  };
  auto next = fresh();
  while (next && static_cast<int>(Q.size()) < krylov_dim) {
    Q.push_back(std::move(*next));
    AQ.push_back(op(Q.back()));
    next = orthonormalize(AQ.back(), std::sqrt(inner_product(AQ.back(), AQ.back())));
    if (!next) next = fresh();  // invariant subspace found; restart
  }
  if (Q.empty()) fail(ErrorCode::InvalidArgument, "Rayleigh quotient: no admissible trial fields");
  const auto k = static_cast<Eigen::Index>(Q.size());
  Mat M(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      M(a, b) = inner_product(Q[static_cast<std::size_t>(a)], AQ[static_cast<std::size_t>(b)]);
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

SphereField ricci_tensor(const SphereField& g) {
  const NodeCloud& c = *g.cloud();
  const int n = c.n();
  const int m = c.m();
  const FrameMetric fm = frame_metric(g);
  // Ambient difference tensor as a rank-3 field, then its round covariant derivative.
  SphereField Ch(g.cloud(), 3);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto v = ambient_difference(c, fm, i);
    for (int r = 0; r < n * n * n; ++r) Ch.values()(i, r) = v[static_cast<std::size_t>(r)];
  }
  const SphereField dC = covariant_derivative(Ch);
  SphereField ric(g.cloud(), 2);
  auto C3 = [&](Eigen::Index i, int q, int a, int b) { return Ch.values()(i, (q * n + a) * n + b); };
  auto dC4 = [&](Eigen::Index i, int d, int q, int a, int b) { return dC.values()(i, ((d * n + q) * n + a) * n + b); };
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const SMat P = projector(c, i);
    SMat R = static_cast<double>(m - 1) * P;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double v = 0.0;
        for (int k = 0; k < n; ++k) {
          v += dC4(i, k, k, a, b) - dC4(i, b, k, k, a);
          for (int p = 0; p < n; ++p) v += C3(i, k, k, p) * C3(i, p, a, b) - C3(i, k, b, p) * C3(i, p, k, a);
        }
        R(a, b) += v;
      }
    R = 0.5 * (R + R.transpose());
    ric.set_matrix(i, P * R * P);
  }
  return ric;
}

SphereField scalar_curvature(const SphereField& g) { return trace(ricci_tensor(g), &g); }

GaugeResidual gauge_residual(const SphereField& g, const SphereField* g0) {
  const NodeCloud& c = *g.cloud();
  const int m = c.m();
  const double lambda = 0.5 * (m - 2) * (m - 1);
  const SphereField ric = ricci_tensor(g);
  const Vec R = trace(ric, &g).scalar_values();
  // delta_{g0} g = -tr_{g0} nabla^{g0} g, then the symmetrized g-covariant derivative.
  const FrameMetric fm0 = frame_metric_or_round(c, g0);
  const SphereField omega = contract_first_two(covariant_derivative_fm(g, fm0), fm0);
  const SphereField domega = covariant_derivative(omega, &g);
  GaugeResidual out;
  out.E = SphereField(g.cloud(), 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const SMat gi = g.matrix_at(i);
    const SMat Ri = ric.matrix_at(i);
    SMat dw = domega.matrix_at(i);
    const SMat Ei = Ri - 0.5 * R(i) * gi + lambda * gi + 0.5 * (dw + dw.transpose());
    out.E.set_matrix(i, Ei);
    const SMat& E = c.frame(i);
    const SMat def = E.transpose() * (Ri - static_cast<double>(m - 1) * gi) * E;
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (def + def.transpose())), Eigen::EigenvaluesOnly);
    out.ricci_deficit = std::max(out.ricci_deficit, es.eigenvalues().cwiseAbs().maxCoeff());
    out.sup_norm = std::max(out.sup_norm, Ei.cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace neckfol
