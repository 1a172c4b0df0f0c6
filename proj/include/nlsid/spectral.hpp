#pragma once

#include <string>
#include <vector>

#include "nlsid/signals.hpp"
#include "nlsid/types.hpp"

namespace nlsid {

/// Multi-realization, multi-period input/output record. Samples are stored
/// realization-major: index (r * P + p) * N + t.
struct TimeRecord {
    Vec u;
    Vec y;
    double fs = 1.0;
    int N     = 0;
    int P     = 0;
    int R     = 0;

    /// Builds a record from flat samples; P is inferred and must be an integer.
    static TimeRecord from_samples(Vec u, Vec y, double fs, int N, int R = 1);

    void validate() const;

    Eigen::Index offset(int r, int p) const { return (static_cast<Eigen::Index>(r) * P + p) * N; }
    auto u_period(int r, int p) const { return u.segment(offset(r, p), N); }
    auto y_period(int r, int p) const { return y.segment(offset(r, p), N); }
    auto u_realization(int r) const { return u.segment(offset(r, 0), static_cast<Eigen::Index>(P) * N); }
    auto y_realization(int r) const { return y.segment(offset(r, 0), static_cast<Eigen::Index>(P) * N); }
};

/// Drop the first `skip` periods of every realization.
TimeRecord drop_periods(const TimeRecord& rec, int skip);

/// Keep only periods [first, first + count) of every realization.
TimeRecord select_periods(const TimeRecord& rec, int first, int count);

/// Keep only the listed realizations.
TimeRecord select_realizations(const TimeRecord& rec, const std::vector<int>& realizations);

/// Per-realization period average; result has P = 1.
TimeRecord average_periods(const TimeRecord& rec);

/// One-sided spectra with 1/sqrt(N) scaling; column r * P + p holds (realization r, period p).
struct SpectralRecord {
    CMat U;
    CMat Y;
    HarmonicGrid grid;
    double fs = 1.0;
    int N     = 0;
    int P     = 0;
    int R     = 0;

    int bins() const { return N / 2 + 1; }
    Eigen::Index column(int r, int p) const { return static_cast<Eigen::Index>(r) * P + p; }

    /// Period-averaged spectra of realization r.
    CVec mean_U(int r) const;
    CVec mean_Y(int r) const;
};

SpectralRecord to_spectra(const TimeRecord& rec, const HarmonicGrid& grid);

/// Output noise variance estimated from period-to-period variation.
struct NoiseVariance {
    Vec per_period;                ///< pooled sample variance of Y(k) over periods
    Vec of_mean;                   ///< per_period / P: variance of the period average
    std::vector<Vec> realization;  ///< of_mean for each realization before pooling
};

NoiseVariance noise_variance(const SpectralRecord& spec);

struct BinLevel {
    int bin          = 0;
    double freq_hz   = 0.0;
    LineClass cls    = LineClass::OutOfBand;
    double power     = 0.0;  ///< |mean Y|^2, averaged over realizations
    double noise     = 0.0;  ///< variance of the period average, averaged over realizations
};

struct ClassSummary {
    int count          = 0;
    double mean_power  = 0.0;
    double mean_noise  = 0.0;
    double power_db    = 0.0;
    double noise_db    = 0.0;
    bool significant   = false;
};

struct ClassLevels {
    ClassSummary linear;
    ClassSummary even_nl;
    ClassSummary odd_nl;
};

struct DistortionReport {
    int transient_skip = 0;
    double margin_db   = 6.0;
    int periods        = 0;
    int realizations   = 0;
    CMat mean_output;             ///< period-averaged Y, one column per realization
    std::vector<BinLevel> bins;   ///< in-band bins, pooled over realizations
    ClassLevels pooled;
    std::vector<ClassLevels> per_realization;
    std::string verdict;          ///< "linear", "even", "odd", "even+odd, even dominant", ...
};

struct AnalysisOptions {
    int transient_skip = 1;
    double margin_db   = 6.0;
};

DistortionReport distortion_analysis(const SpectralRecord& spec, double margin_db = 6.0);

/// drop_periods -> to_spectra -> distortion_analysis.
DistortionReport analyze(const TimeRecord& rec, const HarmonicGrid& grid, const AnalysisOptions& opts = {});

}  // namespace nlsid
