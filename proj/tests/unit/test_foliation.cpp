#include "doctest.h"
#include "neckfol/chartgeom/gluing.hpp"
#include "neckfol/chartgeom/models.hpp"
#include "neckfol/core/error.hpp"
#include "neckfol/foliation/foliation.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

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

MetricPtr flat4() { return flat_cone(4, z2()); }

double sup(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

Mat wobbly(const NodeCloud& c, double radius, double eps) {
  Mat X = c.nodes();
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto y = c.nodes().row(i);
    X.row(i) *= radius * (1.0 + eps * (y(0) * y(1) + 0.5 * (y(2) * y(2) - y(3) * y(3))));
  }
  return X;
}

}  // namespace

TEST_CASE("Riccati evolution of equidistants") {
  SUBCASE("flat cone: S = Id / s") {
    const auto eq = equidistant_evolve(coordinate_sphere(s3(), flat4(), 1.0), {0.0, 0.1, 0.2});
    REQUIRE(eq.size() == 3);
    for (const auto& L : eq) {
      const double s = 1.0 + L.offset;
      double dev = 0.0;
      for (const auto& S : L.riccati.S) dev = std::max(dev, (S - SMat::Identity(3, 3) / s).cwiseAbs().maxCoeff());
      CHECK(dev < 1e-9);
      CHECK(sup((L.riccati.H.array() - 3.0 / s).matrix()) < 1e-9);
      CHECK(L.trace_defect < 1e-6);
      CHECK(L.shape_defect < 1e-5);
    }
  }
  SUBCASE("round S^4: H = 3 cot r") {
    const auto eq = equidistant_evolve(coordinate_sphere(s3(), round_sphere_chart(4, z2()), 0.5), {0.2});
    CHECK(sup((eq[0].riccati.H.array() - 3.0 / std::tan(0.7)).matrix()) < 1e-6);
    CHECK(sup((eq[0].leaf.mean_curvature().array() - 3.0 / std::tan(0.7)).matrix()) < 1e-6);
    CHECK(sup((eq[0].riccati.K.array() - 3.0).matrix()) < 1e-6);
  }
  SUBCASE("inward past the apex") {
    bool thrown = false;
    try {
      equidistant_evolve(coordinate_sphere(s3(), flat4(), 1.0), {-3.0});
    } catch (const Error& e) {
      thrown = e.code() == ErrorCode::FocalPoint || e.code() == ErrorCode::DomainViolation;
    }
    CHECK(thrown);
  }
  SUBCASE("Riccati and direct geometry agree on a wobbly Eguchi-Hanson leaf; H' law") {
    const EmbeddedLeaf L = induced_geometry(s3(), eguchi_hanson(1.0), wobbly(*s3(), 2.0, 0.05));
    const double h = 1e-3;
    const auto eq = equidistant_evolve(L, {-h, h, 0.3});
    CHECK(eq[2].shape_defect < 1e-5);
    CHECK(eq[2].trace_defect < 1e-6 * 1.5);
    const Vec dH = (eq[1].leaf.mean_curvature() - eq[0].leaf.mean_curvature()) / (2 * h);
    const Vec law = -(L.second_form_norm2() + L.ricci_normal());
    CHECK(sup(dH - law) < 0.01 * sup(law));
  }
}

TEST_CASE("local foliation") {
  SUBCASE("flat cone: separations equal s' - s") {
    const Foliation f = local_foliate(coordinate_sphere(s3(), flat4(), 1.0), z2());
    REQUIRE(f.leaves.size() == 5);
    CHECK(f.s_min == doctest::Approx(1.0 / 1.25));
    CHECK(f.s_max == doctest::Approx(1.25));
    for (std::size_t k = 0; k < f.min_slope.size(); ++k) {
      CHECK(f.min_slope[k] == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(f.max_slope[k] == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  SUBCASE("glued Eguchi-Hanson center") {
    const double t = 1e-4, rho = 0.15;
    const MetricPtr g = naive_glue(flat4(), eguchi_hanson(1.0), t, SMat::Identity(4, 4));
    const CmcResult center = solve_cmc(coordinate_sphere(s3(), g, rho), 3.0 / rho, z2());
    const Foliation f = local_foliate(center.leaf, z2());
    for (std::size_t k = 0; k < f.min_slope.size(); ++k) CHECK(f.min_slope[k] > 0.5);
    for (const auto& L : f.leaves) CHECK(L.check.H_spread <= 1e-7 * L.check.mean_H);
  }
  SUBCASE("center must be CMC") {
    const EmbeddedLeaf L = induced_geometry(s3(), flat4(), wobbly(*s3(), 1.0, 0.01));
    CHECK_THROWS_WITH_AS(local_foliate(L, z2()), doctest::Contains("NotCMC"), Error);
  }
}

TEST_CASE("global foliation") {
  SUBCASE("flat cone [0.5, 2], ratio 9/8") {
    const std::string dir = std::string(NECKFOL_TEST_DATA) + "/fol_ckpt";
    std::filesystem::remove_all(dir);
    FoliationConfig cfg;
    cfg.grid_ratio = 9.0 / 8.0;
    cfg.checkpoint_dir = dir;
    const Foliation f = global_foliate(flat4(), s3(), z2(), 0.5, 2.0, cfg);
    CHECK(f.leaves.size() == 13);
    CHECK(f.leaves.back().s == 2.0);
    for (const auto& L : f.leaves) CHECK(L.check.a0_norm < 1e-8);
    for (double d : f.weld_defect) CHECK(d < 1e-8);
    for (std::size_t k = 0; k < f.min_slope.size(); ++k) CHECK(f.min_slope[k] == doctest::Approx(1.0).epsilon(1e-8));
    // Resuming from the checkpoint reproduces the stack.
    const Foliation g = global_foliate(flat4(), s3(), z2(), 0.5, 2.0, cfg);
    for (std::size_t k = 0; k < f.leaves.size(); ++k)
      CHECK((g.leaves[k].leaf.positions() - f.leaves[k].leaf.positions()).cwiseAbs().maxCoeff() == 0.0);
    save_foliation(dir + "/saved", f);
    const Foliation h = load_foliation(dir + "/saved", s3(), flat4());
    CHECK(h.leaves.size() == f.leaves.size());
    CHECK(h.leaves[3].s == f.leaves[3].s);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("empty annulus") {
    CHECK_THROWS_WITH_AS(global_foliate(flat4(), s3(), z2(), 2.0, 1.0), doctest::Contains("InvalidArgument"), Error);
  }
}
