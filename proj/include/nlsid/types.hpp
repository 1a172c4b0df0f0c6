#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Core>

namespace nlsid {

using cplx = std::complex<double>;

using Vec  = Eigen::VectorXd;
using Mat  = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Bin indices into a one-sided DFT of length N/2+1.
using BinList = std::vector<int>;

inline constexpr double kPi = 3.14159265358979323846;

inline double db10(double power) { return 10.0 * std::log10(power); }

}  // namespace nlsid
