#pragma once

#include <vector>

#include "nlsid/spectral.hpp"
#include "nlsid/types.hpp"

namespace nlsid {

/// Local Polynomial Method settings.
struct LpmConfig {
    int order      = 2;  ///< polynomial order of the local G and T models
    int half_width = 0;  ///< excited lines on each side of the centre; 0 -> order + 1 + dof_extra
    int dof_extra  = 1;  ///< extra lines per side beyond exact interpolation
    int max_widen  = 3;  ///< extra lines per side tried when the local regressor is rank deficient

    int effective_half_width() const { return half_width > 0 ? half_width : order + 1 + dof_extra; }
    int unknowns() const { return 2 * (order + 1); }
    void validate() const;
};

/// Nonparametric frequency response on the excited lines.
struct BlaEstimate {
    double fs = 1.0;
    int N     = 0;
    BinList bins;          ///< excited bins
    CVec G;                ///< FRF estimate
    Vec var_total;         ///< variance of G: noise + stochastic nonlinear distortion
    Vec var_noise;         ///< noise-only variance of G (zero when unavailable)
    CVec T;                ///< generalized transient estimate at the centre line
    std::vector<char> estimable;  ///< 0 where the local problem could not be solved
    bool var_total_from_residual = false;  ///< var_total is the LPM residual variance
    bool has_noise_variance      = false;

    double freq(size_t i) const { return bins[i] * fs / N; }
    /// Indices i with estimable[i] and finite values.
    std::vector<size_t> usable() const;
};

/// LPM on a single input/output spectrum pair. var_total is the residual-based
/// variance; var_noise is propagated from `noise_var` when given (per bin of Y).
BlaEstimate lpm_frf(const CVec& U, const CVec& Y, const BinList& excited, const LpmConfig& cfg,
                    const Vec* noise_var = nullptr);

/// LPM on period-averaged spectra of every realization; estimates averaged over realizations.
/// var_total is the residual-based variance.
BlaEstimate lpm_frf(const SpectralRecord& spec, const LpmConfig& cfg);

/// Robust BLA: period averaging per realization, LPM per realization, noise variance from
/// period-to-period variation and total variance from realization-to-realization variation.
/// With a single realization var_total falls back to the LPM residual variance.
BlaEstimate bla_robust(const SpectralRecord& spec, const LpmConfig& cfg);

/// Classical ratio estimate Y(k)/U(k) on the excited lines (no leakage suppression).
CVec ratio_frf(const CVec& U, const CVec& Y, const BinList& excited);

}  // namespace nlsid
