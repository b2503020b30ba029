#include "neckfol/chartgeom/group_action.hpp"
#include "neckfol/core/error.hpp"

#include <cmath>
#include <string>

namespace neckfol {

namespace {
constexpr int kMaxOrder = 2048;

SMat identity(int n) { return SMat::Identity(n, n); }
}  // namespace

GroupAction::GroupAction(int n, const std::vector<SMat>& generators, std::string name)
    : n_(n), name_(std::move(name)), generators_(generators) {
  require(n >= 2 && n <= kMaxDim, ErrorCode::InvalidArgument, "group dimension must be in [2, 4]");
  for (const auto& g : generators_) {
    require(g.rows() == n && g.cols() == n, ErrorCode::InvalidArgument, "generator has wrong shape");
    require((g.transpose() * g - identity(n)).norm() <= 1e-12, ErrorCode::InvalidArgument,
            "generator is not orthogonal");
    require(std::abs(g.determinant() - 1.0) <= 1e-12, ErrorCode::InvalidArgument, "generator has det != +1");
  }
  elements_.push_back(identity(n));
  for (std::size_t head = 0; head < elements_.size(); ++head) {
    for (const auto& g : generators_) {
      SMat prod = g * elements_[head];
      if (find(prod) < 0) {
        require(static_cast<int>(elements_.size()) < kMaxOrder, ErrorCode::InvalidArgument,
                "generated group is not finite (closure exceeded " + std::to_string(kMaxOrder) + ")");
        elements_.push_back(prod);
      }
    }
  }
  // Free action: no non-identity element has eigenvalue 1.
  for (std::size_t k = 1; k < elements_.size(); ++k) {
    Eigen::JacobiSVD<Mat> svd(Mat(elements_[k] - identity(n)));
    require(svd.singularValues().minCoeff() > 1e-9, ErrorCode::InvalidArgument,
            "group element fixes a direction; action on the sphere is not free");
  }
  if (name_.empty()) name_ = elements_.size() == 1 ? "trivial" : "G" + std::to_string(elements_.size());
}

GroupAction GroupAction::trivial(int n) { return GroupAction(n, {}, "trivial"); }

GroupAction GroupAction::antipodal(int n) {
  require(n % 2 == 0, ErrorCode::InvalidArgument, "-Id lies in SO(n) only for even n");
  return GroupAction(n, {SMat(-identity(n))}, "Z2");
}

GroupAction GroupAction::cyclic(int n, int k) {
  require(k >= 1, ErrorCode::InvalidArgument, "cyclic order must be positive");
  if (k == 1) return trivial(n);
  const double th = 2.0 * kPi / k;
  SMat g = SMat::Zero(n, n);
  if (n == 2 || n == 4) {
    for (int b = 0; b < n; b += 2) {
      g(b, b) = std::cos(th);
      g(b, b + 1) = -std::sin(th);
      g(b + 1, b) = std::sin(th);
      g(b + 1, b + 1) = std::cos(th);
    }
  } else {
    fail(ErrorCode::InvalidArgument, "cyclic groups acting freely exist here only for n = 2, 4");
  }
  return GroupAction(n, {g}, "Z" + std::to_string(k));
}

GroupAction GroupAction::parse(int n, const std::string& spec) {
  if (spec.empty() || spec == "trivial" || spec == "e" || spec == "Z1") return trivial(n);
  if (spec == "Z2" && n % 2 == 0) return antipodal(n);
  if (spec.size() > 1 && spec[0] == 'Z') {
    const int k = std::stoi(spec.substr(1));
    return cyclic(n, k);
  }
  fail(ErrorCode::ConfigError, "unknown group '" + spec + "'");
}

int GroupAction::find(const SMat& g, double tol) const {
  for (std::size_t k = 0; k < elements_.size(); ++k)
    if ((elements_[k] - g).cwiseAbs().maxCoeff() <= tol) return static_cast<int>(k);
  return -1;
}

bool GroupAction::same_as(const GroupAction& other) const {
  if (other.n_ != n_ || other.order() != order()) return false;
  for (const auto& e : other.elements_)
    if (find(e) < 0) return false;
  return true;
}

bool GroupAction::normalized_by(const SMat& phi) const {
  if (phi.rows() != n_ || phi.cols() != n_) return false;
  if ((phi.transpose() * phi - identity(n_)).norm() > 1e-10) return false;
  for (const auto& e : elements_)
    if (find(phi * e * phi.transpose(), 1e-8) < 0) return false;
  return true;
}

bool GroupAction::fixes_any(const Mat& unit_rows, double tol) const {
  for (std::size_t k = 1; k < elements_.size(); ++k) {
    for (Eigen::Index i = 0; i < unit_rows.rows(); ++i) {
      const SVec x = unit_rows.row(i).transpose();
      if ((elements_[k] * x - x).norm() < tol) return true;
    }
  }
  return false;
}

}  // namespace neckfol
