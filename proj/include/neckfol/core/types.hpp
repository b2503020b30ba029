#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace neckfol {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Chart-sized objects (n <= 4) live on the stack.
inline constexpr int kMaxDim = 4;
using SVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Volume of the unit sphere S^{n-1} in R^n.
double sphere_volume(int n);

// Volume of the unit ball in R^n.
double ball_volume(int n);

}  // namespace neckfol
