#pragma once

#include "neckfol/core/types.hpp"

#include <string>
#include <vector>

namespace neckfol {

// Finite subgroup of SO(n) acting freely on S^{n-1}, generated by the given
// matrices. Construction closes the group under products and validates it.
class GroupAction {
 public:
  GroupAction() = default;
  GroupAction(int n, const std::vector<SMat>& generators, std::string name = "");

  static GroupAction trivial(int n);
  // {+Id, -Id}; free on S^{n-1} and orientation preserving for even n.
  static GroupAction antipodal(int n);
  // n = 2: rotations by 2*pi/k. n = 4: scalar multiplication by exp(2*pi*i/k) on C^2.
  static GroupAction cyclic(int n, int k);
  // "trivial" | "Z2" | "Z<k>"
  static GroupAction parse(int n, const std::string& spec);

  int dim() const { return n_; }
  int order() const { return static_cast<int>(elements_.size()); }
  const std::string& name() const { return name_; }
  const std::vector<SMat>& generators() const { return generators_; }
  // elements()[0] is the identity.
  const std::vector<SMat>& elements() const { return elements_; }

  // Index of g among the elements, or -1.
  int find(const SMat& g, double tol = 1e-9) const;
  bool same_as(const GroupAction& other) const;
  // True if phi is orthogonal and phi * G * phi^T = G, i.e. phi descends to an
  // isometry of R^n / G.
  bool normalized_by(const SMat& phi) const;
  // True if some non-identity element moves one of the given unit vectors
  // (rows) by less than tol.
  bool fixes_any(const Mat& unit_rows, double tol = 1e-9) const;

 private:
  int n_ = 0;
  std::string name_;
  std::vector<SMat> generators_;
  std::vector<SMat> elements_;
};

}  // namespace neckfol
