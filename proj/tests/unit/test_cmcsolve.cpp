#include "doctest.h"
#include "neckfol/chartgeom/gluing.hpp"
#include "neckfol/chartgeom/models.hpp"
#include "neckfol/cmcsolve/solver.hpp"
#include "neckfol/core/error.hpp"

#include <cmath>

using namespace neckfol;

namespace {

constexpr double kEhMeanCurvature2 = 1.5169184772645716134;  // tests/oracles/eh_oracle.py

CloudPtr s3() {
  static CloudPtr c = build_cloud(4, 2000, 3, GroupAction::antipodal(4));
  return c;
}

const GroupAction& z2() {
  static GroupAction g = GroupAction::antipodal(4);
  return g;
}

MetricPtr flat4() { return flat_cone(4, z2()); }

double sup(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

// Degree-2 harmonic x1 x2 + (x3^2 - x4^2) / 2, even under x -> -x.
Vec harmonic2(const NodeCloud& c) {
  Vec f(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto y = c.nodes().row(i);
    f(i) = y(0) * y(1) + 0.5 * (y(2) * y(2) - y(3) * y(3));
  }
  return f;
}

Mat radial_graph(const NodeCloud& c, double radius, const Vec& f) {
  Mat X = c.nodes();
  for (Eigen::Index i = 0; i < c.size(); ++i) X.row(i) *= radius * (1.0 + f(i));
  return X;
}

}  // namespace

TEST_CASE("Jacobi operator on the unit sphere of the flat cone") {
  const JacobiOperator J = jacobi_operator(coordinate_sphere(s3(), flat4(), 1.0));
  const Vec one = Vec::Ones(s3()->size());
  CHECK(sup(jacobi_apply(J, one) - 3.0 * one) < 1e-8);
  const Vec h = harmonic2(*s3());
  CHECK(sup(jacobi_apply(J, h) + 5.0 * h) < 0.02 * 5.0 * sup(h));
  // Dense assembly agrees with the action.
  const Mat E = Eigen::MatrixXd::Identity(s3()->size(), 3);
  const Mat JE = jacobi_apply_dense(J, E);
  for (int k = 0; k < 3; ++k) CHECK(sup(JE.col(k) - jacobi_apply(J, E.col(k))) < 1e-9);
}

TEST_CASE("Jacobi operator linearizes H(Sigma(w))") {
  const EmbeddedLeaf L = coordinate_sphere(s3(), eguchi_hanson(1.0), 2.0);
  const JacobiOperator J = jacobi_operator(L);
  const Vec w = (1.0 + 0.3 * harmonic2(*s3()).array()).matrix();
  const Vec Jw = jacobi_apply(J, w);
  auto defect = [&](double eps) {
    const EmbeddedLeaf Le = normal_graph(L, eps * w);
    return sup((Le.mean_curvature() - L.mean_curvature()) / eps + Jw);
  };
  const double d1 = defect(1e-4);
  CHECK(d1 < 1e-3 * sup(Jw));
  // Remainder is quadratic: halving eps halves the defect.
  const double a = defect(2e-3), b = defect(1e-3);
  MESSAGE("linearization defects " << d1 << " " << a << " " << b);
  CHECK(a / b == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("CMC solve") {
  SUBCASE("round sphere needs no update") {
    const CmcResult R = solve_cmc(coordinate_sphere(s3(), flat4(), 0.7), 3.0 / 0.7, z2());
    CHECK(R.report.iterations == 0);
    CHECK(sup(R.w) == 0.0);
    CHECK(R.report.converged);
  }
  SUBCASE("perturbed sphere in the flat cone becomes round") {
    const EmbeddedLeaf L = induced_geometry(s3(), flat4(), radial_graph(*s3(), 1.0, 0.01 * harmonic2(*s3())));
    const CmcResult R = solve_cmc(L, 3.0, z2());
    REQUIRE(R.report.converged);
    CHECK(sup((R.leaf.mean_curvature().array() - 3.0).matrix()) <= 3e-8);
    double dev = 0.0;
    for (Eigen::Index i = 0; i < R.leaf.size(); ++i)
      dev = std::max(dev, (R.leaf.second_form_frame(i) - R.leaf.metric_frame(i)).cwiseAbs().maxCoeff());
    MESSAGE("iterations " << R.report.iterations << " |A - g| " << dev << " q " << R.report.q << " c " << R.report.c);
    CHECK(dev < 1e-6);
    CHECK(sup((R.leaf.positions().rowwise().norm().array() - 1.0).matrix()) < 1e-6);
    CHECK(R.report.contract_holds);
    CHECK(R.report.contraction_certified);
  }
  SUBCASE("Newton and frozen-Jacobi iterations agree") {
    const EmbeddedLeaf L = induced_geometry(s3(), eguchi_hanson(1.0), radial_graph(*s3(), 2.0, 0.02 * harmonic2(*s3())));
    CmcConfig newton;
    newton.newton = true;
    newton.probe_remainder = false;
    const CmcResult P = solve_cmc(L, kEhMeanCurvature2, z2());
    const CmcResult N = solve_cmc(L, kEhMeanCurvature2, z2(), newton);
    MESSAGE("picard " << P.report.iterations << " newton " << N.report.iterations);
    CHECK(N.report.iterations <= P.report.iterations);
    CHECK(sup(N.w - P.w) < 1e-7);
  }
  SUBCASE("trivial group: translations make J singular") {
    CHECK_THROWS_WITH_AS(solve_cmc(coordinate_sphere(s3(), flat4(), 1.0), 3.1, GroupAction::trivial(4)),
                         doctest::Contains("NearSingular"), Error);
  }
  SUBCASE("scaling covariance") {
    const Vec f = 0.01 * harmonic2(*s3());
    const CmcResult A = solve_cmc(induced_geometry(s3(), flat4(), radial_graph(*s3(), 1.0, f)), 3.0, z2());
    const CmcResult B = solve_cmc(induced_geometry(s3(), flat4(), radial_graph(*s3(), 2.0, f)), 1.5, z2());
    CHECK(sup(B.w - 2.0 * A.w) < 1e-8);
  }
  SUBCASE("uniqueness in Eguchi-Hanson: any nearby start finds the level set r = 2") {
    const MetricPtr eh = eguchi_hanson(1.0);
    const Vec f = harmonic2(*s3());
    for (double eps : {0.01, -0.02}) {
      const CmcResult R = solve_cmc(induced_geometry(s3(), eh, radial_graph(*s3(), 2.0, eps * f)), kEhMeanCurvature2, z2());
      CHECK(sup((R.leaf.positions().rowwise().norm().array() - 2.0).matrix()) < 1e-6);
    }
  }
  SUBCASE("glued Eguchi-Hanson: self-consistent bound") {
    const double t = 1e-4, rho = 0.15;
    const MetricPtr g = naive_glue(flat4(), eguchi_hanson(1.0), t, SMat::Identity(4, 4));
    const EmbeddedLeaf L = coordinate_sphere(s3(), g, rho);
    const double dH = sup((L.mean_curvature().array() - 3.0 / rho).matrix());
    const CmcResult R = solve_cmc(L, 3.0 / rho, z2());
    MESSAGE("glued: |H - 3/rho| " << dH << " |w| " << sup(R.w) << " C " << R.report.bound_constant);
    CHECK(dH > 0);
    CHECK(sup(R.w) / rho <= 10.0 * dH * rho);
  }
}

TEST_CASE("a posteriori check") {
  SUBCASE("round sphere in the flat cone") {
    const CmcCheck c = cmc_posteriori_check(coordinate_sphere(s3(), flat4(), 1.0));
    CHECK(c.s == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c.a0_norm < 1e-8);
    CHECK(c.rm_sup == 0.0);
    CHECK(c.roundness < 1e-10);
    CHECK(c.einstein_deficit < 1e-6);
  }
  SUBCASE("geodesic sphere in the round S^4") {
    const CmcCheck c = cmc_posteriori_check(coordinate_sphere(s3(), round_sphere_chart(4, z2()), 1.0));
    CHECK(c.s == doctest::Approx(std::tan(1.0)).epsilon(1e-7));
    CHECK(c.a0_norm < 1e-6);
    CHECK(c.rm_sup == doctest::Approx(std::sqrt(24.0)).epsilon(1e-6));
  }
  SUBCASE("non-constant H") {
    const EmbeddedLeaf L = induced_geometry(s3(), flat4(), radial_graph(*s3(), 1.0, 0.01 * harmonic2(*s3())));
    CHECK_THROWS_WITH_AS(cmc_posteriori_check(L), doctest::Contains("NotCMC"), Error);
  }
}
