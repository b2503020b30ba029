#include "doctest.h"
#include "neckfol/chartgeom/curvature.hpp"
#include "neckfol/chartgeom/gluing.hpp"
#include "neckfol/chartgeom/integrals.hpp"
#include "neckfol/chartgeom/metric_spec.hpp"
#include "neckfol/chartgeom/models.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/spherecalc/node_cloud.hpp"

#include <cmath>
#include <random>

using namespace neckfol;

namespace {

// Reference values from tests/oracles/eh_oracle.py (sympy jets, 40 digits).
constexpr double kEhRm2AtR2 = 0.09375;                    // 384 / r^12
constexpr double kEhEnergy2to8 = 1.850522588039563514;   // int_[2,8] |Rm|^2 over R^4/Z2
constexpr double kEhDecay[3] = {1.0039215686274509804, 1.0002442002442002442, 1.0000152590218966964};
constexpr double kGluedDeviation = 1.0001000100010001e-4;  // EH at t^{-1/4} = 10

SVec point4(double a, double b, double c, double d) {
  SVec x(4);
  x << a, b, c, d;
  return x;
}

SVec random_point(std::mt19937_64& rng, int n, double r_lo, double r_hi) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(r_lo, r_hi);
  SVec x(n);
  for (int i = 0; i < n; ++i) x(i) = g(rng);
  return u(rng) * x / x.norm();
}

double bianchi_defect(const CurvatureBundle& B) {
  double worst = 0.0;
  const int n = B.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          worst = std::max(worst, std::abs(B.riemann(i, j, k, l) + B.riemann(j, i, k, l)));
          worst = std::max(worst, std::abs(B.riemann(i, j, k, l) + B.riemann(i, j, l, k)));
          worst = std::max(worst, std::abs(B.riemann(i, j, k, l) - B.riemann(k, l, i, j)));
          worst = std::max(worst, std::abs(B.riemann(i, j, k, l) + B.riemann(j, k, i, l) + B.riemann(k, i, j, l)));
        }
  return worst;
}

SphereQuadrature s3_quadrature() {
  static CloudPtr cloud = build_cloud(4, 2000, 11, GroupAction::antipodal(4));
  return cloud_quadrature(*cloud);
}

}  // namespace

TEST_CASE("group actions validate generators and freeness") {
  const auto z2 = GroupAction::antipodal(4);
  CHECK(z2.order() == 2);
  const auto z3 = GroupAction::cyclic(4, 3);
  CHECK(z3.order() == 3);
  CHECK(GroupAction::cyclic(2, 5).order() == 5);
  CHECK(GroupAction::parse(4, "Z2").same_as(z2));
  // A reflection is not orientation preserving.
  SMat refl = SMat::Identity(4, 4);
  refl(0, 0) = -1;
  CHECK_THROWS_AS(GroupAction(4, {refl}), Error);
  // A rotation in one plane fixes the orthogonal plane, so the action is not free.
  SMat rot = SMat::Identity(4, 4);
  rot(0, 0) = rot(1, 1) = 0.0;
  rot(0, 1) = -1.0;
  rot(1, 0) = 1.0;
  CHECK_THROWS_AS(GroupAction(4, {rot}), Error);
  CHECK_THROWS_AS(GroupAction::parse(4, "D7"), Error);
}

TEST_CASE("flat cone is flat") {
  auto g = flat_cone(4, GroupAction::antipodal(4));
  const auto B = curvature_at(*g, point4(0.3, -1.2, 0.5, 2.0));
  CHECK(B.rm_norm2() == doctest::Approx(0.0));
  CHECK(B.ric_norm() == doctest::Approx(0.0));
  CHECK(B.scalar == doctest::Approx(0.0));
  CHECK(curvature_operator_det(*g, point4(1, 0, 0, 0)) == doctest::Approx(0.0));
}

TEST_CASE("round sphere chart has identity curvature operator") {
  auto g = round_sphere_chart(4, GroupAction::antipodal(4));
  const auto B = curvature_at(*g, point4(0.4, 0.2, -0.7, 0.3));
  CHECK((B.op - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((B.ric - 3.0 * B.g).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(B.scalar == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(curvature_operator_det(*g, point4(1.1, 0, 0.2, 0)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Eguchi-Hanson curvature matches the symbolic oracle") {
  auto g = eguchi_hanson(1.0);
  const auto B = curvature_at(*g, point4(2, 0, 0, 0));
  CHECK(B.rm_norm2() == doctest::Approx(kEhRm2AtR2).epsilon(1e-10));
  CHECK(B.ric_norm() < 1e-8);
  // Self-dual with zero scalar curvature: the curvature operator has a kernel.
  CHECK(std::abs(curvature_operator_det(*g, point4(2, 0, 0, 0))) < 1e-10);
  // r^12 |Rm|^2 = 384 a^8 at a generic point.
  const SVec x = point4(1.5, 0.5, -1.0 / 3.0, 0.7);
  CHECK(std::pow(x.norm(), 12) * curvature_at(*g, x).rm_norm2() == doctest::Approx(384.0).epsilon(1e-9));
}

TEST_CASE("Riemann symmetries, Bianchi identity, Ricci flatness at random points") {
  std::mt19937_64 rng(7);
  auto eh = eguchi_hanson(1.0);
  auto sph = round_sphere_chart(4, GroupAction::antipodal(4));
  double worst_sym = 0.0, worst_ric = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto B = curvature_at(*eh, random_point(rng, 4, 1.2, 20.0));
    worst_sym = std::max(worst_sym, bianchi_defect(B));
    worst_ric = std::max(worst_ric, B.ric_norm());
    worst_sym = std::max(worst_sym, bianchi_defect(curvature_at(*sph, random_point(rng, 4, 0.1, 2.5))));
  }
  CHECK(worst_sym < 1e-9);
  CHECK(worst_ric < 1e-8);
}

TEST_CASE("finite-difference jets reproduce the analytic curvature") {
  auto eh = eguchi_hanson(1.0);
  auto fd = user_metric(4, GroupAction::antipodal(4), [eh](const SVec& x) { return eh->eval(x); }, 1.1, 100.0);
  const SVec x = point4(1.5, 0.5, -1.0 / 3.0, 0.7);
  const auto B = curvature_at(*fd, x);
  CHECK(std::pow(x.norm(), 12) * B.rm_norm2() == doctest::Approx(384.0).epsilon(1e-6));
  CHECK(B.ric_norm() < 1e-6);
  CHECK(bianchi_defect(B) < 1e-6);
}

TEST_CASE("builtin metrics are equivariant") {
  std::mt19937_64 rng(8);
  const auto z2 = GroupAction::antipodal(4);
  const auto z3 = GroupAction::cyclic(4, 3);
  std::vector<MetricPtr> metrics{eguchi_hanson(1.0), round_sphere_chart(4, z2), flat_cone(4, z3),
                                 round_sphere_chart(4, z3)};
  for (const auto& g : metrics) {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const SVec x = random_point(rng, 4, 1.2, 2.5);
      for (const SMat& gam : g->group().elements()) {
        const SVec y = gam * x;
        worst = std::max(worst, (g->eval(y) - gam * g->eval(x) * gam.transpose()).cwiseAbs().maxCoeff());
      }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("chart domain violations are reported") {
  auto eh = eguchi_hanson(1.0);
  CHECK_THROWS_AS(eh->jet(point4(1.0, 0, 0, 0), 0), Error);
  CHECK_THROWS_AS(curvature_at(*flat_cone(4, GroupAction::antipodal(4), 0.5, 2.0), point4(3, 0, 0, 0)), Error);
}

TEST_CASE("Eguchi-Hanson decays like r^-4 toward the flat cone") {
  auto eh = eguchi_hanson(1.0);
  double prev = 1e300;
  int i = 0;
  for (double r : {4.0, 8.0, 16.0}) {
    const SMat d = eh->eval(point4(r, 0, 0, 0)) - SMat::Identity(4, 4);
    const double v = std::pow(r, 4) * Eigen::SelfAdjointEigenSolver<SMat>(d).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(v == doctest::Approx(kEhDecay[i++]).epsilon(1e-8));
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("cutoff is smooth and supported on [0, 2]") {
  CHECK(cutoff_chi(0.5) == 1.0);
  CHECK(cutoff_chi(1.0) == 1.0);
  CHECK(cutoff_chi(2.0) == 0.0);
  CHECK(cutoff_chi(1.5) == doctest::Approx(0.5));
  double d1 = 0, d2 = 0;
  const double h = 1e-5, s = 1.3;
  cutoff_chi(s, &d1, &d2);
  CHECK(d1 == doctest::Approx((cutoff_chi(s + h) - cutoff_chi(s - h)) / (2 * h)).epsilon(1e-6));
  CHECK(d2 == doctest::Approx((cutoff_chi(s + h) - 2 * cutoff_chi(s) + cutoff_chi(s - h)) / (h * h)).epsilon(1e-4));
}

TEST_CASE("naive gluing") {
  const auto z2 = GroupAction::antipodal(4);
  auto cone = flat_cone(4, z2, 1e-4, 10.0);
  const double t = 1e-4;
  const double q = std::pow(t, 0.25);

  SUBCASE("two flat metrics glue to the flat metric") {
    auto g = naive_glue(cone, flat_cone(4, z2, 1e-6, 1e6), t, SMat());
    for (double r : {0.5 * q, 1.5 * q, 3 * q})
      CHECK((g->eval(point4(r, 0, 0, 0)) - SMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("Eguchi-Hanson glued into the cone") {
    auto eh = eguchi_hanson(1.0);
    auto g = naive_glue(cone, eh, t, SMat());
    // Outside 2 t^{1/4} the orbifold metric is reproduced exactly.
    CHECK((g->eval(point4(0, 2.01 * q, 0, 0)) - SMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
    // Inside t^{1/4} it is the rescaled EH metric.
    const SVec x = point4(0.3 * q, 0.1 * q, 0, 0.2 * q);
    CHECK((g->eval(x) - eh->eval(x / std::sqrt(t))).cwiseAbs().maxCoeff() < 1e-14);
    const SMat d = g->eval(point4(q, 0, 0, 0)) - SMat::Identity(4, 4);
    const double dev = Eigen::SelfAdjointEigenSolver<SMat>(d).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(dev == doctest::Approx(kGluedDeviation).epsilon(1e-8));
  }
  SUBCASE("scale and group preconditions") {
    CHECK_THROWS_AS(naive_glue(cone, eguchi_hanson(1.0), 0.0, SMat()), Error);
    CHECK_THROWS_AS(naive_glue(flat_cone(4, GroupAction::cyclic(4, 3), 1e-4, 10.0), eguchi_hanson(1.0), t, SMat()),
                    Error);
  }
}

TEST_CASE("gluing trees") {
  const auto z2 = GroupAction::antipodal(4);
  GluingTree tree;
  tree.orbifold.id = "orbifold";
  tree.orbifold.points = {{"p", flat_cone(4, z2, 1e-6, 10.0)}};

  SUBCASE("single block equals naive_glue") {
    tree.ale_blocks = {{"eh", {}, eguchi_hanson(1.0)}};
    tree.gluings = {{"eh", "p", 1e-4, SMat()}};
    const auto tm = build_tree_metric(tree);
    auto ref = naive_glue(tree.orbifold.points[0].chart, eguchi_hanson(1.0), 1e-4, SMat());
    for (double r : {0.05, 0.12, 0.17, 0.3}) {
      const SVec x = point4(r, 0.01, 0, 0);
      CHECK((tm.charts.at("p")->eval(x) - ref->eval(x)).cwiseAbs().maxCoeff() <= 1e-14);
    }
    CHECK(tm.absolute_scales.at("eh") == 1e-4);
  }
  SUBCASE("two levels multiply the relative scales") {
    tree.ale_blocks = {{"mid", {{"q", flat_cone(4, z2, 1e-6, 1e6)}}, flat_cone(4, z2, 1e-6, 1e6)},
                       {"deep", {}, eguchi_hanson(1.0)}};
    tree.gluings = {{"mid", "p", 1e-2, SMat()}, {"deep", "q", 1e-2, SMat()}};
    const auto tm = build_tree_metric(tree);
    CHECK(tm.absolute_scales.at("deep") == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(tm.depth.at("deep") == 2);
    // Deep inside, the metric is T * g_b in coordinates rescaled by sqrt(T).
    const double T = 1e-4;
    const SVec x = point4(1.5 * std::sqrt(T), 0, 0, 0);
    CHECK((tm.charts.at("p")->eval(x) - eguchi_hanson(1.0)->eval(x / std::sqrt(T))).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("a point hit twice is rejected") {
    tree.ale_blocks = {{"a", {}, eguchi_hanson(1.0)}, {"b", {}, eguchi_hanson(1.0)}};
    tree.gluings = {{"a", "p", 1e-4, SMat()}, {"b", "p", 1e-4, SMat()}};
    try {
      build_tree_metric(tree);
      FAIL("expected CyclicTree");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CyclicTree);
    }
  }
}

TEST_CASE("metric specs parse into builtin metrics") {
  auto g = make_metric("eguchi_hanson{a=1.0}");
  CHECK(g->dim() == 4);
  CHECK(g->group().order() == 2);
  auto c = make_metric("flat_cone{n=4,group=Z3}");
  CHECK(c->group().order() == 3);
  CHECK_THROWS_AS(make_metric("taub_nut{}"), Error);
}

TEST_CASE("curvature energy and volume ratios") {
  const auto quad = s3_quadrature();
  const auto z2 = GroupAction::antipodal(4);
  SUBCASE("flat cone") {
    auto cone = flat_cone(4, z2);
    CHECK(curvature_energy(*cone, 1.0, 2.0, quad).value == doctest::Approx(0.0));
    const auto vr = volume_ratio(*cone, 1.0, 2.0, quad);
    CHECK(vr.ratio == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(vr.vol_in == doctest::Approx(kPi * kPi / 4).epsilon(1e-12));
    CHECK(volume_ratio(*cone, 1.0, 1.0, quad).ratio == doctest::Approx(1.0));
  }
  SUBCASE("Eguchi-Hanson energy") {
    const auto E = curvature_energy(*eguchi_hanson(1.0), 2.0, 8.0, quad);
    CHECK(E.value == doctest::Approx(kEhEnergy2to8).epsilon(5e-3));
    CHECK(E.error_estimate < 1e-6);
  }
  SUBCASE("glued metric") {
    auto cone = flat_cone(4, z2, 1e-6, 10.0);
    auto g1 = naive_glue(cone, eguchi_hanson(1.0), 1e-4, SMat());
    auto g2 = naive_glue(cone, eguchi_hanson(1.0), 0.5e-4, SMat());
    const double e1 = curvature_energy(*g1, 0.05, 0.2, quad).value;
    const double e2 = curvature_energy(*g2, 0.05, 0.2, quad).value;
    CHECK(e2 < e1);
    const auto vr = volume_ratio(*g1, 0.05, 0.2, quad);
    CHECK(std::abs(vr.ratio - 256.0) <= 1e-2 * 256.0);
  }
}
