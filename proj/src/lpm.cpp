#include "nlsid/lpm.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlsid/error.hpp"

namespace nlsid {

void LpmConfig::validate() const {
    if (order < 0) throw ConfigError("lpm.order: must be >= 0");
    if (dof_extra < 0) throw ConfigError("lpm.dof_extra: must be >= 0");
    if (effective_half_width() < order + 1)
        throw ConfigError("lpm.half_width: must be >= order + 1 for a full-rank local regressor");
    if (max_widen < 0) throw ConfigError("lpm.max_widen: must be >= 0");
}

std::vector<size_t> BlaEstimate::usable() const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < bins.size(); ++i)
        if (estimable[i] && std::isfinite(G[static_cast<Eigen::Index>(i)].real()) && std::isfinite(var_total[static_cast<Eigen::Index>(i)]))
            idx.push_back(i);
    return idx;
}

namespace {

struct LocalSolution {
    bool ok        = false;
    cplx G         = {};
    cplx T         = {};
    double var_res = 0.0;  // residual-based variance of G
    double gain0   = 0.0;  // [(K^H K)^-1]_00, to propagate an external noise variance
    double noise   = 0.0;  // mean external noise variance over the window rows
};

// Rows [first, last] of the excited list, centred on `centre`.
LocalSolution solve_window(const CVec& U, const CVec& Y, const BinList& excited, int centre, int first, int last,
                           const LpmConfig& cfg, const Vec* noise_var) {
    LocalSolution sol;
    const int rows  = last - first + 1;
    const int terms = cfg.order + 1;
    const int cols  = 2 * terms;
    if (rows <= cols) return sol;

    const int k0 = excited[static_cast<size_t>(centre)];
    double span  = 1.0;
    double u_rms = 0.0;
    for (int i = first; i <= last; ++i) {
        span = std::max(span, std::abs(double(excited[static_cast<size_t>(i)] - k0)));
        u_rms += std::norm(U[excited[static_cast<size_t>(i)]]);
    }
    u_rms = std::sqrt(u_rms / rows);
    if (!(u_rms > 0.0)) return sol;

    // Columns: U(k+r) rho^s for the FRF, rho^s for the transient, rho = r / span.
    CMat K(rows, cols);
    CVec y(rows);
    double noise = 0.0;
    for (int i = 0; i < rows; ++i) {
        const int k      = excited[static_cast<size_t>(first + i)];
        const double rho = (k - k0) / span;
        double pw        = 1.0;
        for (int s = 0; s < terms; ++s) {
            K(i, s)         = U[k] / u_rms * pw;
            K(i, terms + s) = pw;
            pw *= rho;
        }
        y[i] = Y[k];
        if (noise_var) noise += (*noise_var)[k];
    }

    Eigen::JacobiSVD<CMat> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    if (sv[cols - 1] <= sv[0] * 1e-12) return sol;

    const CVec theta   = svd.solve(y);
    const CVec e       = y - K * theta;
    const int dof      = rows - cols;
    const double var_v = e.squaredNorm() / dof;
    // (K^H K)^-1 = V S^-2 V^H; entry (0, 0) rescaled by the input normalization.
    const CVec v0      = svd.matrixV().row(0).adjoint();
    const double g0    = (v0.array().abs2() / sv.array().square()).sum() / (u_rms * u_rms);

    sol.ok      = true;
    sol.G       = theta[0] / u_rms;
    sol.T       = theta[terms];
    sol.var_res = var_v * g0;
    sol.gain0   = g0;
    sol.noise   = noise / rows;
    return sol;
}

}  // namespace

BlaEstimate lpm_frf(const CVec& U, const CVec& Y, const BinList& excited, const LpmConfig& cfg, const Vec* noise_var) {
    cfg.validate();
    if (U.size() != Y.size()) throw FormatError("lpm: input and output spectra differ in length");
    const int nk = static_cast<int>(excited.size());
    BlaEstimate est;
    est.bins = excited;
    est.G    = CVec::Constant(nk, cplx(std::numeric_limits<double>::quiet_NaN(), 0.0));
    est.T    = CVec::Zero(nk);
    est.var_total = Vec::Constant(nk, std::numeric_limits<double>::quiet_NaN());
    est.var_noise = Vec::Zero(nk);
    est.estimable.assign(static_cast<size_t>(nk), 0);
    est.var_total_from_residual = true;
    est.has_noise_variance      = noise_var != nullptr;

    for (int c = 0; c < nk; ++c) {
        for (int widen = 0; widen <= cfg.max_widen; ++widen) {
            const int n    = cfg.effective_half_width() + widen;
            const int rows = std::min(nk, 2 * n + 1);
            // Shift the window inward at the band edges so every window has the same row count.
            int first = std::clamp(c - n, 0, std::max(0, nk - rows));
            int last  = first + rows - 1;
            LocalSolution sol = solve_window(U, Y, excited, c, first, last, cfg, noise_var);
            if (!sol.ok) continue;
            est.G[c]         = sol.G;
            est.T[c]         = sol.T;
            est.var_total[c] = sol.var_res;
            est.var_noise[c] = noise_var ? sol.noise * sol.gain0 : 0.0;
            est.estimable[static_cast<size_t>(c)] = 1;
            break;
        }
    }
    return est;
}

namespace {

struct PerRealization {
    std::vector<BlaEstimate> est;
    bool have_noise = false;
};

PerRealization per_realization(const SpectralRecord& spec, const LpmConfig& cfg) {
    PerRealization out;
    std::vector<Vec> noise;
    if (spec.P >= 2) {
        const NoiseVariance nv = noise_variance(spec);
        noise                  = nv.realization;
        out.have_noise         = true;
    }
    for (int r = 0; r < spec.R; ++r) {
        const CVec U = spec.mean_U(r);
        const CVec Y = spec.mean_Y(r);
        out.est.push_back(lpm_frf(U, Y, spec.grid.excited, cfg, out.have_noise ? &noise[static_cast<size_t>(r)] : nullptr));
    }
    return out;
}

BlaEstimate combine(const SpectralRecord& spec, const PerRealization& per, bool realization_variance) {
    const int R  = spec.R;
    BlaEstimate est = per.est.front();
    est.fs       = spec.fs;
    est.N        = spec.N;
    const auto n = static_cast<Eigen::Index>(est.bins.size());
    est.G.setZero(n);
    est.T.setZero(n);
    est.var_total.setZero(n);
    est.var_noise.setZero(n);
    for (const auto& e : per.est) {
        est.G += e.G;
        est.T += e.T;
        est.var_total += e.var_total;
        est.var_noise += e.var_noise;
        for (size_t i = 0; i < est.estimable.size(); ++i) est.estimable[i] = est.estimable[i] && e.estimable[i];
    }
    est.G /= R;
    est.T /= R;
    // Variance of the mean over R independent realizations.
    est.var_total /= double(R) * R;
    est.var_noise /= double(R) * R;
    est.has_noise_variance      = per.have_noise;
    est.var_total_from_residual = true;

    if (realization_variance && R >= 2) {
        Vec s2 = Vec::Zero(n);
        for (const auto& e : per.est) s2 += (e.G - est.G).cwiseAbs2();
        est.var_total               = s2 / (R - 1) / R;
        est.var_total_from_residual = false;
    }
    return est;
}

}  // namespace

BlaEstimate lpm_frf(const SpectralRecord& spec, const LpmConfig& cfg) {
    return combine(spec, per_realization(spec, cfg), false);
}

BlaEstimate bla_robust(const SpectralRecord& spec, const LpmConfig& cfg) {
    if (spec.P < 2) throw InsufficientDataError("robust BLA: at least 2 periods required, got " + std::to_string(spec.P));
    if (spec.R < 1) throw InsufficientDataError("robust BLA: at least one realization required");
    return combine(spec, per_realization(spec, cfg), true);
}

CVec ratio_frf(const CVec& U, const CVec& Y, const BinList& excited) {
    CVec G(static_cast<Eigen::Index>(excited.size()));
    for (size_t i = 0; i < excited.size(); ++i) G[static_cast<Eigen::Index>(i)] = Y[excited[i]] / U[excited[i]];
    return G;
}

}  // namespace nlsid
