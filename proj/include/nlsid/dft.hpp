#pragma once

#include <span>

#include "nlsid/types.hpp"

namespace nlsid::dft {

/// One-sided DFT with 1/sqrt(N) scaling: X(k) = N^-1/2 sum_t x(t) exp(-j 2 pi k t / N),
/// for k = 0..N/2. Returns N/2+1 bins.
CVec forward(std::span<const double> x);

/// Column-wise forward transform of an N x m real matrix; returns (N/2+1) x m.
CMat forward_columns(const Mat& x);

/// Inverse of forward(): real signal of length n from its one-sided spectrum.
/// Imaginary parts of the DC and (for even n) Nyquist bins are ignored.
Vec inverse(const CVec& X, int n);

/// Time-domain energy sum_t x(t)^2 recovered from a one-sided spectrum of a length-n signal.
double one_sided_energy(const CVec& X, int n);

}  // namespace nlsid::dft
