#include "nlsid/trend.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"

namespace nlsid {
namespace {

// Symmetric positive definite pentadiagonal matrix with constant off-diagonals of D D^T
// (-4 on the first, 1 on the second) plus a variable diagonal. Banded Cholesky, O(n).
class PentaSolver {
   public:
    explicit PentaSolver(const Vec& diag) : n_(diag.size()), l0_(n_), l1_(n_), l2_(n_) {
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double a2 = i >= 2 ? 1.0 : 0.0;
            const double a1 = i >= 1 ? -4.0 : 0.0;
            // L(i, i-2), L(i, i-1), L(i, i)
            const double c2 = i >= 2 ? a2 / l0_[i - 2] : 0.0;
            const double c1 = i >= 1 ? (a1 - (i >= 2 ? c2 * l1_[i - 1] : 0.0)) / l0_[i - 1] : 0.0;
            const double d  = diag[i] - c1 * c1 - c2 * c2;
            if (!(d > 0.0)) throw NumericalError("trend: Newton system lost positive definiteness");
            l2_[i] = c2;
            l1_[i] = c1;
            l0_[i] = std::sqrt(d);
        }
    }

    Vec solve(const Vec& b) const {
        Vec x = b;
        for (Eigen::Index i = 0; i < n_; ++i) {
            double s = x[i];
            if (i >= 1) s -= l1_[i] * x[i - 1];
            if (i >= 2) s -= l2_[i] * x[i - 2];
            x[i] = s / l0_[i];
        }
        for (Eigen::Index i = n_ - 1; i >= 0; --i) {
            double s = x[i];
            if (i + 1 < n_) s -= l1_[i + 1] * x[i + 1];
            if (i + 2 < n_) s -= l2_[i + 2] * x[i + 2];
            x[i] = s / l0_[i];
        }
        return x;
    }

   private:
    Eigen::Index n_;
    Vec l0_, l1_, l2_;
};

Vec apply_ddt(const Vec& z) {
    return second_difference(second_difference_adjoint(z, z.size() + 2));
}

double primal_objective(const Vec& y, const Vec& m, double lambda) {
    return 0.5 * (y - m).squaredNorm() + lambda * second_difference(m).lpNorm<1>();
}

double dual_objective(const Vec& z, const Vec& Dy, Eigen::Index n) {
    return -0.5 * second_difference_adjoint(z, n).squaredNorm() + z.dot(Dy);
}

// Magnitude of the terms entering the objectives; rounding in the gap scales with it.
double gap_scale(const Vec& y, const Vec& z, const Vec& Dy) {
    const double cross = z.cwiseAbs().dot(Dy.cwiseAbs());
    const double quad  = 0.5 * second_difference_adjoint(z, y.size()).squaredNorm();
    return std::max({1.0, cross, quad});
}

TrendResult finish(const Vec& y, const Vec& z, double lambda, int iterations) {
    TrendResult r;
    r.lambda     = lambda;
    r.nu         = z;
    r.m          = y - second_difference_adjoint(z, y.size());
    r.detrended  = y - r.m;
    r.iterations = iterations;
    r.primal     = primal_objective(y, r.m, lambda);
    r.dual       = dual_objective(z, second_difference(y), y.size());
    r.duality_gap = std::max(0.0, r.primal - r.dual);
    r.gap_scale   = gap_scale(y, z, second_difference(y));
    r.kink_count = count_kinks(r.m, y);
    return r;
}

}  // namespace

Vec second_difference(const Vec& y) {
    const Eigen::Index n = y.size();
    Vec d(std::max<Eigen::Index>(0, n - 2));
    for (Eigen::Index i = 0; i + 2 < n; ++i) d[i] = y[i] - 2.0 * y[i + 1] + y[i + 2];
    return d;
}

Vec second_difference_adjoint(const Vec& v, Eigen::Index n) {
    Vec x = Vec::Zero(n);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        x[i] += v[i];
        x[i + 1] -= 2.0 * v[i];
        x[i + 2] += v[i];
    }
    return x;
}

double lambda_max(const Vec& y) {
    if (y.size() < 3) throw ConfigError("trend: at least 3 samples required");
    const PentaSolver ddt(Vec::Constant(y.size() - 2, 6.0));
    return ddt.solve(second_difference(y)).lpNorm<Eigen::Infinity>();
}

int count_kinks(const Vec& m, const Vec& y) {
    const double tol = 1e-6 * y.cwiseAbs().maxCoeff();
    const Vec d      = second_difference(m);
    return static_cast<int>((d.array().abs() > tol).count());
}

TrendResult l1_trend(const TrendProblem& p, double tol) {
    const Vec& y         = p.y;
    const double lambda  = p.lambda;
    const Eigen::Index n = y.size();
    if (n < 3) throw ConfigError("trend: at least 3 samples required");
    if (!y.allFinite()) throw FormatError("trend: non-finite data");
    if (!(lambda >= 0.0)) throw ConfigError("trend: lambda must be >= 0");
    const Eigen::Index m = n - 2;
    const Vec Dy         = second_difference(y);

    if (lambda == 0.0) return finish(y, Vec::Zero(m), 0.0, 0);

    // Beyond lambda_max the unconstrained dual optimum is feasible and the trend is the
    // least-squares affine fit.
    const PentaSolver ddt(Vec::Constant(m, 6.0));
    const Vec z_free = ddt.solve(Dy);
    if (z_free.lpNorm<Eigen::Infinity>() <= lambda) {
        TrendResult r = finish(y, z_free, lambda, 0);
        Mat X(n, 2);
        X.col(0).setOnes();
        X.col(1) = Vec::LinSpaced(n, 0.0, double(n - 1));
        const Vec coef = X.colPivHouseholderQr().solve(y);
        r.m            = X * coef;
        r.detrended    = y - r.m;
        r.primal       = primal_objective(y, r.m, lambda);
        r.duality_gap  = std::max(0.0, r.primal - r.dual);
        r.kink_count   = count_kinks(r.m, y);
        return r;
    }

    auto gap_tol = [&](const Vec& zz) { return tol * gap_scale(y, zz, Dy); };

    constexpr double kAlpha    = 0.01;
    constexpr double kBeta     = 0.5;
    constexpr double kMu       = 2.0;
    constexpr int kMaxIter     = 200;
    constexpr int kMaxLineIter = 40;

    Vec z   = Vec::Zero(m);
    Vec mu1 = Vec::Ones(m);
    Vec mu2 = Vec::Ones(m);
    double t    = 1e-10;
    double step = std::numeric_limits<double>::infinity();

    auto residual_norm = [&](const Vec& zz, const Vec& m1, const Vec& m2, double tt) {
        const Vec rd = apply_ddt(zz) - Dy + m1 - m2;
        const Vec f1 = zz.array() - lambda;
        const Vec f2 = -zz.array() - lambda;
        const Vec c1 = -m1.cwiseProduct(f1).array() - 1.0 / tt;
        const Vec c2 = -m2.cwiseProduct(f2).array() - 1.0 / tt;
        return std::sqrt(rd.squaredNorm() + c1.squaredNorm() + c2.squaredNorm());
    };

    for (int iter = 1; iter <= kMaxIter; ++iter) {
        const Vec DDTz = apply_ddt(z);
        const Vec mtr  = y - second_difference_adjoint(z, n);
        const double pobj = primal_objective(y, mtr, lambda);
        const double dobj = dual_objective(z, Dy, n);
        const double gap  = pobj - dobj;
        if (gap <= gap_tol(z)) return finish(y, z, lambda, iter - 1);

        if (step >= 0.2) t = std::max(2.0 * m * kMu / gap, 1.2 * t);

        const Vec f1  = z.array() - lambda;
        const Vec f2  = -z.array() - lambda;
        const Vec dia = Vec::Constant(m, 6.0) - mu1.cwiseQuotient(f1) - mu2.cwiseQuotient(f2);
        const Vec rhs = -DDTz + Dy + (f1.cwiseInverse() - f2.cwiseInverse()) / t;
        const Vec dz  = PentaSolver(dia).solve(rhs);
        const Vec dmu1 = -mu1.array() - (1.0 / t + mu1.cwiseProduct(dz).array()) / f1.array();
        const Vec dmu2 = -mu2.array() - (1.0 / t - mu2.cwiseProduct(dz).array()) / f2.array();

        // Largest step keeping the multipliers positive and z strictly inside the box.
        double smax = 1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (dmu1[i] < 0.0) smax = std::min(smax, -mu1[i] / dmu1[i]);
            if (dmu2[i] < 0.0) smax = std::min(smax, -mu2[i] / dmu2[i]);
            if (dz[i] > 0.0) smax = std::min(smax, (lambda - z[i]) / dz[i]);
            if (dz[i] < 0.0) smax = std::min(smax, (-lambda - z[i]) / dz[i]);
        }
        step = 0.99 * smax;

        const double r0 = residual_norm(z, mu1, mu2, t);
        int ls          = 0;
        for (; ls < kMaxLineIter; ++ls) {
            const Vec zn  = z + step * dz;
            const Vec m1n = mu1 + step * dmu1;
            const Vec m2n = mu2 + step * dmu2;
            if (residual_norm(zn, m1n, m2n, t) <= (1.0 - kAlpha * step) * r0) {
                z   = zn;
                mu1 = m1n;
                mu2 = m2n;
                break;
            }
            step *= kBeta;
        }
        if (ls == kMaxLineIter) {
            const TrendResult r = finish(y, z, lambda, iter);
            if (r.duality_gap <= gap_tol(z)) return r;
            throw NumericalError("trend: line search failed with duality gap " + std::to_string(r.duality_gap));
        }
    }
    const TrendResult r = finish(y, z, lambda, kMaxIter);
    if (r.duality_gap <= gap_tol(z)) return r;
    throw NumericalError("trend: no convergence, duality gap " + std::to_string(r.duality_gap) + " > " + std::to_string(tol));
}

double low_frequency_power(const Vec& y_realization, int N, int first_excited_bin) {
    const auto len = y_realization.size();
    if (N <= 0 || len % N != 0) throw FormatError("low-frequency power: record is not a whole number of periods");
    const CVec Y    = dft::forward(std::span<const double>(y_realization.data(), static_cast<size_t>(len)));
    const auto P    = len / N;
    // Long-record bin P*k is period bin k.
    const auto last = static_cast<Eigen::Index>(P) * first_excited_bin - 1;
    if (last < 1) return 0.0;
    return Y.segment(1, last).cwiseAbs2().mean();
}

DetrendResult detrend_record(const TimeRecord& rec, const TrendLambdaPolicy& policy, double tol, const HarmonicGrid* grid) {
    rec.validate();
    DetrendResult out;
    out.record = rec;
    if (policy.kind == TrendLambdaPolicy::Kind::SubbandNoise && (grid == nullptr || grid->excited.empty() || rec.P < 2))
        throw ConfigError("trend: the sub-band noise lambda policy needs a grid and at least 2 periods");

    double noise_floor = 0.0;
    if (policy.kind == TrendLambdaPolicy::Kind::SubbandNoise) {
        // Period-to-period noise level of a single period, which matches the per-bin noise of the long record.
        const NoiseVariance nv = noise_variance(to_spectra(rec, *grid));
        double acc             = 0.0;
        const BinList band     = grid->band_bins();
        for (int k : band) acc += nv.per_period[k];
        noise_floor = acc / static_cast<double>(band.size());
    }

    for (int r = 0; r < rec.R; ++r) {
        const Vec y     = rec.y_realization(r);
        const double lm = lambda_max(y);
        double lambda   = policy.value;
        TrendResult res;
        if (policy.kind == TrendLambdaPolicy::Kind::RelativeToMax) lambda = policy.value * lm;
        if (policy.kind == TrendLambdaPolicy::Kind::SubbandNoise) {
            bool found = false;
            for (double frac : {1.0, 1e-1, 1e-2, 1e-3, 1e-4}) {
                res = l1_trend({y, frac * lm}, tol);
                if (low_frequency_power(res.detrended, rec.N, grid->excited.front()) <= noise_floor) {
                    found = true;
                    break;
                }
            }
            if (!found) res = l1_trend({y, 1e-4 * lm}, tol);
            lambda = res.lambda;
        } else {
            res = l1_trend({y, lambda}, tol);
        }
        out.record.y.segment(rec.offset(r, 0), y.size()) = res.detrended;
        out.trends.push_back(res.m);
        out.lambdas.push_back(lambda);
        out.details.push_back(std::move(res));
    }
    return out;
}

}  // namespace nlsid
