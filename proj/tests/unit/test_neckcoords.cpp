#include "doctest.h"
#include "neckfol/chartgeom/models.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/neckcoords/coordinates.hpp"
#include "neckfol/neckcoords/decay.hpp"

#include <cmath>
#include <random>

using namespace neckfol;

namespace {

CloudPtr s3() {
  static CloudPtr c = build_cloud(4, 1000, 5, GroupAction::antipodal(4));
  return c;
}

const GroupAction& z2() {
  static GroupAction g = GroupAction::antipodal(4);
  return g;
}

std::vector<LapseSolution> lapses(const Foliation& f) {
  std::vector<LapseSolution> out;
  for (const auto& L : f.leaves) out.push_back(solve_lapse(L.leaf, L.s, z2()));
  return out;
}

double vmax(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("finite-difference weights") {
  const std::vector<double> pts{-0.2, 0.1, 0.25, 0.5, 0.9};
  const auto w1 = fd_weights(0.3, pts, 1);
  const auto w2 = fd_weights(0.3, pts, 2);
  double d1 = 0, d2 = 0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double f = std::pow(pts[j], 4) - 2 * pts[j];
    d1 += w1[j] * f;
    d2 += w2[j] * f;
  }
  CHECK(d1 == doctest::Approx(4 * std::pow(0.3, 3) - 2).epsilon(1e-12));
  CHECK(d2 == doctest::Approx(12 * 0.09).epsilon(1e-12));
}

TEST_CASE("lapse") {
  SUBCASE("flat cone: u = 1") {
    const auto sol = solve_lapse(coordinate_sphere(s3(), flat_cone(4, z2()), 0.7), 0.7, z2());
    CHECK(sol.residual < 1e-10);
    CHECK(sol.deviation < 1e-10);
  }
  SUBCASE("round S^4: u = 1 / (1 + s^2)") {
    const double s = 0.5;
    const auto sol = solve_lapse(coordinate_sphere(s3(), round_sphere_chart(4, z2()), std::atan(s)), s, z2());
    CHECK(sol.residual < 1e-8);
    CHECK((sol.u.array() - 1.0 / (1.0 + s * s)).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("coordinates from a foliation") {
  FoliationConfig fc;
  fc.grid_ratio = 1.125;
  SUBCASE("flat cone: the identity") {
    const Foliation f = global_foliate(flat_cone(4, z2()), s3(), z2(), 0.5, 2.0, fc);
    const CoordinateMap map = integrate_radial_metric(f, lapses(f), f.leaves.size() / 2);
    CHECK(vmax(map.h_deviation) < 1e-8);
    CHECK(vmax(map.u_deviation) < 1e-10);
    CHECK(vmax(map.consistency) < 1e-8);
    CHECK(vmax(map.cross_term) < 1e-8);
    CHECK(vmax(map.est3_defect) < 1e-6);
    for (double rho : {0.5, 0.7, 1.0})
      for (int l = 0; l <= 2; ++l) CHECK(weighted_norm(map, rho, l) < 1e-8);
    CHECK_THROWS_AS(weighted_norm(map, 1.5, 0), Error);
    CHECK_THROWS_AS(weighted_norm(map, 0.5, 3), Error);
  }
  SUBCASE("round S^4: h_s = sin^2 r / s^2 round") {
    const Foliation f = global_foliate(round_sphere_chart(4, z2()), s3(), z2(), 0.3, 0.8, fc);
    const auto lap = lapses(f);
    for (const auto& l : lap) CHECK((l.u.array() - 1.0 / (1.0 + l.s * l.s)).abs().maxCoeff() < 1e-6);
    const CoordinateMap map = integrate_radial_metric(f, lap, 3);
    for (std::size_t k = 0; k < map.s.size(); ++k) {
      const double s = map.s[k];
      CHECK(map.h_deviation[k] == doctest::Approx(s * s / (1 + s * s)).epsilon(1e-6));
      CHECK(map.consistency[k] < 1e-4);
      CHECK(map.cross_term[k] < 1e-5);
      CHECK(map.speed_defect[k] < 1e-4);
      CHECK(map.est3_defect[k] < 0.01);
      // Phi lands on the leaf along the ray: |Phi| = atan s.
      CHECK((map.positions[k].rowwise().norm().array() - std::atan(s)).abs().maxCoeff() < 1e-6 * s);
    }
  }
}

TEST_CASE("decay fit") {
  const double rho1 = 0.005, rho2 = 2.0;
  DecayProfile truth;
  truth.rho1 = rho1;
  truth.rho2 = rho2;
  truth.eps = 0.01;
  truth.beta1 = 4;
  truth.beta2 = 2;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<DecaySample> samples;
  for (int i = 0; i < 24; ++i) {
    const double rho = 0.008 * std::pow(1.0 / 0.008, i / 23.0);
    samples.push_back({rho, truth.eta(rho) * (1 + noise(rng))});
  }
  SUBCASE("synthetic two-power profile") {
    const DecayProfile p = decay_fit(samples, rho1, rho2);
    CHECK(p.beta1 == doctest::Approx(4).epsilon(0.1));
    CHECK(p.beta2 == doctest::Approx(2).epsilon(0.1));
    CHECK(p.residual < 0.03);
    CHECK(p.eta(0.05) == doctest::Approx(truth.eta(0.05)).epsilon(0.05));
  }
  SUBCASE("no signal") {
    std::vector<DecaySample> zeros;
    for (const auto& x : samples) zeros.push_back({x.rho, 0.0});
    CHECK_THROWS_AS(decay_fit(zeros, rho1, rho2), Error);
  }
  SUBCASE("one-sided profile") {
    std::vector<DecaySample> down;
    for (const auto& x : samples) down.push_back({x.rho, std::pow(x.rho, -2.0)});
    try {
      decay_fit(down, rho1, rho2);
      FAIL("expected FitDegenerate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FitDegenerate);
    }
  }
}
