#include "neckfol/chartgeom/models.hpp"
#include "neckfol/core/error.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <utility>
#include <vector>

namespace neckfol {

namespace {

// Scalar profile of p = |x|^2 with its first two p-derivatives.
using Profile = std::function<void(double p, double* v)>;

// g = c(p) Id + sum_t phi_t(p) (L_t x)(L_t x)^T. Covers every builtin model.
class RadialFormMetric : public ChartMetric {
 public:
  RadialFormMetric(int n, GroupAction group, double r_min, double r_max, std::string provenance, Profile c,
                   std::vector<std::pair<SMat, Profile>> terms)
      : ChartMetric(n, std::move(group), r_min, r_max, DerivMode::Analytic, std::move(provenance)),
        c_(std::move(c)), terms_(std::move(terms)) {}

 protected:
  void jet_impl(const SVec& x, int order, MetricJet& out) const override {
    const int n = dim();
    const double p = x.squaredNorm();
    double cv[3] = {1.0, 0.0, 0.0};
    if (c_) c_(p, cv);
    out.g = cv[0] * SMat::Identity(n, n);
    if (order >= 1)
      for (int k = 0; k < n; ++k) out.dg[k] = (2.0 * x[k] * cv[1]) * SMat::Identity(n, n);
    if (order >= 2)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out.ddg[k][l] = (4.0 * x[k] * x[l] * cv[2] + (k == l ? 2.0 * cv[1] : 0.0)) * SMat::Identity(n, n);
    for (const auto& [L, prof] : terms_) {
      double f[3];
      prof(p, f);
      const SVec y = L * x;
      const SMat yy = y * y.transpose();
      out.g += f[0] * yy;
      if (order < 1) continue;
      // d_k (y y^T) = L e_k y^T + y (L e_k)^T
      std::array<SMat, kMaxDim> dyy;
      for (int k = 0; k < n; ++k) {
        const SVec lk = L.col(k);
        dyy[k] = lk * y.transpose() + y * lk.transpose();
        out.dg[k] += 2.0 * x[k] * f[1] * yy + f[0] * dyy[k];
      }
      if (order < 2) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const SVec lk = L.col(k), ll = L.col(l);
          const SMat d2yy = lk * ll.transpose() + ll * lk.transpose();
          out.ddg[k][l] += (4.0 * x[k] * x[l] * f[2] + (k == l ? 2.0 * f[1] : 0.0)) * yy +
                           2.0 * x[k] * f[1] * dyy[l] + 2.0 * x[l] * f[1] * dyy[k] + f[0] * d2yy;
        }
    }
  }

 public:
  std::optional<double> core_volume(double radius) const override {
    if (core_) return core_(radius);
    return std::nullopt;
  }
  std::string describe() const override { return describe_; }

  std::function<double(double)> core_;
  std::string describe_;

 private:
  Profile c_;
  std::vector<std::pair<SMat, Profile>> terms_;
};

// sin^2(sqrt p)/p and (1 - sin^2(sqrt p)/p)/p with two p-derivatives.
// Power series for p < 1, closed forms beyond.
void round_profiles(double p, double* s, double* q) {
  if (p < 1.0) {
    // S = sum_j (-1)^j 2^{2j+1} p^j / (2j+2)!,  Q = sum_j (-1)^j 2^{2j+3} p^j / (2j+4)!
    double sa[3] = {0, 0, 0}, qa[3] = {0, 0, 0};
    for (int j = 0; j < 30; ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      const double cs = sign * std::ldexp(1.0, 2 * j + 1) / std::tgamma(2.0 * j + 3.0);
      const double cq = sign * std::ldexp(1.0, 2 * j + 3) / std::tgamma(2.0 * j + 5.0);
      const double pj = std::pow(p, j);
      sa[0] += cs * pj;
      qa[0] += cq * pj;
      if (j >= 1) {
        const double pj1 = std::pow(p, j - 1);
        sa[1] += cs * j * pj1;
        qa[1] += cq * j * pj1;
      }
      if (j >= 2) {
        const double pj2 = std::pow(p, j - 2);
        sa[2] += cs * j * (j - 1) * pj2;
        qa[2] += cq * j * (j - 1) * pj2;
      }
    }
    for (int i = 0; i < 3; ++i) {
      s[i] = sa[i];
      q[i] = qa[i];
    }
    return;
  }
  const double r = std::sqrt(p);
  const double sn = std::sin(r), s2r = std::sin(2 * r), c2r = std::cos(2 * r);
  const double G = sn * sn / p;
  const double G1 = s2r / p - 2 * sn * sn / (p * r);
  const double G2 = 2 * c2r / p - 4 * s2r / (p * r) + 6 * sn * sn / (p * p);
  s[0] = G;
  s[1] = G1 / (2 * r);
  s[2] = (G2 - G1 / r) / (4 * p);
  q[0] = (1 - s[0]) / p;
  q[1] = -s[1] / p - (1 - s[0]) / (p * p);
  q[2] = -s[2] / p + 2 * s[1] / (p * p) + 2 * (1 - s[0]) / (p * p * p);
}

class UserMetric : public ChartMetric {
 public:
  UserMetric(int n, GroupAction group, std::function<SMat(const SVec&)> fn, double r_min, double r_max,
             std::string name)
      : ChartMetric(n, std::move(group), r_min, r_max, DerivMode::FiniteDifference, std::move(name)),
        fn_(std::move(fn)) {}

  std::string describe() const override { return provenance(); }

 protected:
  void jet_impl(const SVec& x, int order, MetricJet& out) const override {
    const int n = dim();
    const double r = x.norm();
    out.g = fn_(x);
    if (order >= 1) {
      const double h = fd_step(r);
      for (int k = 0; k < n; ++k) {
        SVec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        out.dg[k] = (fn_(xp) - fn_(xm)) / (2 * h);
      }
    }
    if (order >= 2) {
      // Second differences at step 1e-5 r would be roundoff dominated; use a
      // coarser step and one Richardson extrapolation.
      const double h = 1e-3 * r;
      auto second = [&](int k, int l, double hh) -> SMat {
        if (k == l) {
          SVec xp = x, xm = x;
          xp[k] += hh;
          xm[k] -= hh;
          return (fn_(xp) - 2.0 * out.g + fn_(xm)) / (hh * hh);
        }
        SVec a = x, b = x, c = x, d = x;
        a[k] += hh; a[l] += hh;
        b[k] += hh; b[l] -= hh;
        c[k] -= hh; c[l] += hh;
        d[k] -= hh; d[l] -= hh;
        return (fn_(a) - fn_(b) - fn_(c) + fn_(d)) / (4 * hh * hh);
      };
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
          const SMat v = (4.0 * second(k, l, h / 2) - second(k, l, h)) / 3.0;
          out.ddg[k][l] = v;
          out.ddg[l][k] = v;
        }
    }
  }

 private:
  std::function<SMat(const SVec&)> fn_;
};

class AffinePullback : public ChartMetric {
 public:
  AffinePullback(MetricPtr base, const SMat& phi, double c)
      : ChartMetric(base->dim(), base->group(), base->r_min() * c, base->r_max() * c, base->mode(),
                    base->provenance()),
        base_(std::move(base)), phi_(phi), c_(c) {}

  std::optional<double> core_volume(double radius) const override {
    auto v = base_->core_volume(radius / c_);
    if (!v) return std::nullopt;
    return std::pow(c_, dim()) * *v;
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "pullback(" << base_->describe() << ", c=" << c_ << ")";
    return os.str();
  }

 protected:
  void jet_impl(const SVec& x, int order, MetricJet& out) const override {
    const int n = dim();
    const SVec y = phi_ * x / c_;
    const MetricJet b = base_->jet(y, order);
    out.g = phi_.transpose() * b.g * phi_;
    if (order >= 1) {
      std::array<SMat, kMaxDim> rot;
      for (int m = 0; m < n; ++m) rot[m] = phi_.transpose() * b.dg[m] * phi_;
      for (int k = 0; k < n; ++k) {
        out.dg[k].setZero(n, n);
        for (int m = 0; m < n; ++m) out.dg[k] += (phi_(m, k) / c_) * rot[m];
      }
    }
    if (order >= 2) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          SMat acc = SMat::Zero(n, n);
          for (int m = 0; m < n; ++m)
            for (int p = 0; p < n; ++p) {
              const double w = phi_(m, k) * phi_(p, l);
              if (w != 0.0) acc += w * b.ddg[m][p];
            }
          out.ddg[k][l] = phi_.transpose() * acc * phi_ / (c_ * c_);
        }
    }
  }

 private:
  MetricPtr base_;
  SMat phi_;
  double c_;
};

}  // namespace

SMat complex_structure_j() {
  SMat J = SMat::Zero(4, 4);
  J(0, 1) = -1;
  J(1, 0) = 1;
  J(2, 3) = -1;
  J(3, 2) = 1;
  return J;
}

MetricPtr flat_cone(int n, const GroupAction& group, double r_min, double r_max) {
  auto m = std::make_shared<RadialFormMetric>(n, group, r_min, r_max, "flat-cone", Profile{},
                                              std::vector<std::pair<SMat, Profile>>{});
  const double vol = ball_volume(n) / group.order();
  m->core_ = [vol, n](double r) { return vol * std::pow(r, n); };
  std::ostringstream os;
  os << "flat_cone{n=" << n << ",group=" << group.name() << "}";
  m->describe_ = os.str();
  return m;
}

MetricPtr round_sphere_chart(int n, const GroupAction& group, double r_min, double r_max) {
  require(r_max < kPi, ErrorCode::InvalidArgument, "geodesic polar chart must stay below the cut locus r = pi");
  Profile c = [](double p, double* v) {
    double q[3];
    round_profiles(p, v, q);
  };
  Profile t = [](double p, double* v) {
    double s[3];
    round_profiles(p, s, v);
  };
  std::vector<std::pair<SMat, Profile>> terms{{SMat::Identity(n, n), t}};
  auto m = std::make_shared<RadialFormMetric>(n, group, r_min, r_max, "round-sphere-chart", c, terms);
  const double svol = sphere_volume(n) / group.order();
  m->core_ = [svol, n](double R) {
    // int_0^R sin^{n-1}
    double I = 0;
    switch (n) {
      case 2: I = 1 - std::cos(R); break;
      case 3: I = 0.5 * (R - std::sin(R) * std::cos(R)); break;
      case 4: I = 2.0 / 3.0 - std::cos(R) + std::pow(std::cos(R), 3) / 3.0; break;
      default: fail(ErrorCode::InvalidArgument, "unsupported dimension");
    }
    return svol * I;
  };
  std::ostringstream os;
  os << "round_sphere_chart{n=" << n << ",group=" << group.name() << "}";
  m->describe_ = os.str();
  return m;
}

MetricPtr eguchi_hanson(double a, double r_min_factor, double r_max) {
  require(a > 0, ErrorCode::InvalidArgument, "Eguchi-Hanson parameter a must be positive");
  require(r_min_factor > 1.0, ErrorCode::InvalidArgument, "chart must exclude the bolt r = a");
  const double a4 = std::pow(a, 4);
  // x xhat^T part: (1/f^2 - 1)/r^2 = a^4 / (p (p^2 - a^4))
  Profile radial = [a4](double p, double* v) {
    const double D = p * (p * p - a4);
    const double D1 = 3 * p * p - a4;
    const double D2 = 6 * p;
    v[0] = a4 / D;
    v[1] = -a4 * D1 / (D * D);
    v[2] = a4 * (2 * D1 * D1 - D * D2) / (D * D * D);
  };
  // xi xi^T part: (f^2 - 1)/r^2 = -a^4 / p^3
  Profile fiber = [a4](double p, double* v) {
    v[0] = -a4 / (p * p * p);
    v[1] = 3 * a4 / (p * p * p * p);
    v[2] = -12 * a4 / (p * p * p * p * p);
  };
  std::vector<std::pair<SMat, Profile>> terms{{SMat::Identity(4, 4), radial}, {complex_structure_j(), fiber}};
  auto m = std::make_shared<RadialFormMetric>(4, GroupAction::antipodal(4), r_min_factor * a, r_max,
                                              "eguchi-hanson", Profile{}, terms);
  // The volume form is Euclidean, the bolt sits at r = a.
  m->core_ = [a4](double R) { return kPi * kPi / 4.0 * (std::pow(R, 4) - a4); };
  std::ostringstream os;
  os << "eguchi_hanson{a=" << a << "}";
  m->describe_ = os.str();
  return m;
}

MetricPtr user_metric(int n, const GroupAction& group, std::function<SMat(const SVec&)> g, double r_min,
                      double r_max, std::string name) {
  return std::make_shared<UserMetric>(n, group, std::move(g), r_min, r_max, std::move(name));
}

MetricPtr affine_pullback(MetricPtr base, const SMat& phi, double c) {
  require(c > 0, ErrorCode::InvalidArgument, "pullback scale must be positive");
  require(base->group().normalized_by(phi), ErrorCode::GroupMismatch,
          "gauge rotation does not descend to the quotient");
  return std::make_shared<AffinePullback>(std::move(base), phi, c);
}

}  // namespace neckfol
