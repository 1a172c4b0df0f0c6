#pragma once

#include <vector>

#include "nlsid/signals.hpp"
#include "nlsid/spectral.hpp"
#include "nlsid/types.hpp"

namespace nlsid {

/// minimize 1/2 ||y - m||^2 + lambda ||D m||_1, D the (n-2) x n second-difference matrix.
struct TrendProblem {
    Vec y;
    double lambda = 0.0;
};

struct TrendResult {
    Vec m;          ///< trend
    Vec detrended;  ///< y - m
    Vec nu;         ///< dual variable, |nu_i| <= lambda, m = y - D^T nu
    int kink_count   = 0;
    int iterations   = 0;
    double primal    = 0.0;
    double dual      = 0.0;
    double duality_gap = 0.0;
    double gap_scale   = 1.0;  ///< max(1, sum |nu_i (D y)_i|, ||D^T nu||^2 / 2)
    double lambda    = 0.0;
};

/// (D y)_i = y_i - 2 y_{i+1} + y_{i+2}
Vec second_difference(const Vec& y);
/// D^T v
Vec second_difference_adjoint(const Vec& v, Eigen::Index n);

/// Smallest lambda for which the trend is affine: ||(D D^T)^-1 D y||_inf.
double lambda_max(const Vec& y);

/// Kinks are second differences above 1e-6 max|y|.
int count_kinks(const Vec& m, const Vec& y);

/// Primal-dual interior-point solve of the dual box-constrained QP, to duality gap
/// <= tol * gap_scale.
TrendResult l1_trend(const TrendProblem& p, double tol = 1e-8);

/// How the regularization weight is chosen for each realization of a record.
struct TrendLambdaPolicy {
    enum class Kind { Absolute, RelativeToMax, SubbandNoise } kind = Kind::RelativeToMax;
    double value = 0.1;  ///< absolute lambda, or fraction of lambda_max
};

struct DetrendResult {
    TimeRecord record;                 ///< output channel replaced by y - m
    std::vector<Vec> trends;           ///< one per realization
    std::vector<double> lambdas;
    std::vector<TrendResult> details;
};

/// Remove an l1 trend from the output channel of every realization (whole-realization records).
/// SubbandNoise needs the grid: it walks a decade grid of lambda / lambda_max downward from 1 and
/// keeps the first (smoothest) trend whose detrended power below the first excited line drops
/// under the in-band noise floor.
DetrendResult detrend_record(const TimeRecord& rec, const TrendLambdaPolicy& policy = {}, double tol = 1e-8,
                             const HarmonicGrid* grid = nullptr);

/// Mean power of the long-record spectrum (length P*N) on bins strictly between DC and the
/// first excited line, for realization r of the output channel.
double low_frequency_power(const Vec& y_realization, int N, int first_excited_bin);

}  // namespace nlsid
