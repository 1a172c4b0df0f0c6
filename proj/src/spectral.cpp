#include "nlsid/spectral.hpp"

#include <cmath>
#include <span>
#include <string>

#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"

namespace nlsid {

TimeRecord TimeRecord::from_samples(Vec u, Vec y, double fs, int N, int R) {
    if (N <= 0 || R <= 0) throw FormatError("record: N and R must be positive");
    if (u.size() != y.size()) throw FormatError("record: input and output lengths differ");
    const Eigen::Index per_real = u.size() / R;
    if (per_real * R != u.size()) throw FormatError("record: length is not a multiple of the realization count");
    if (per_real % N != 0)
        throw FormatError("record: " + std::to_string(per_real) + " samples per realization is not an integer number of periods of " +
                          std::to_string(N));
    TimeRecord rec;
    rec.u  = std::move(u);
    rec.y  = std::move(y);
    rec.fs = fs;
    rec.N  = N;
    rec.R  = R;
    rec.P  = static_cast<int>(per_real / N);
    rec.validate();
    return rec;
}

void TimeRecord::validate() const {
    if (!(fs > 0.0)) throw FormatError("record: fs must be positive");
    if (N <= 0 || P <= 0 || R <= 0) throw FormatError("record: N, P, R must be positive");
    const Eigen::Index expected = static_cast<Eigen::Index>(R) * P * N;
    if (u.size() != expected || y.size() != expected)
        throw FormatError("record: expected R*P*N = " + std::to_string(expected) + " samples per channel");
    if (!u.allFinite() || !y.allFinite()) throw FormatError("record: non-finite samples");
}

TimeRecord select_periods(const TimeRecord& rec, int first, int count) {
    rec.validate();
    if (first < 0 || count < 1 || first + count > rec.P)
        throw InsufficientDataError("record: period selection [" + std::to_string(first) + ", " + std::to_string(first + count) +
                                    ") outside the " + std::to_string(rec.P) + " available periods");
    TimeRecord out = rec;
    out.P          = count;
    out.u.resize(static_cast<Eigen::Index>(rec.R) * count * rec.N);
    out.y.resize(out.u.size());
    for (int r = 0; r < rec.R; ++r) {
        const Eigen::Index len = static_cast<Eigen::Index>(count) * rec.N;
        out.u.segment(out.offset(r, 0), len) = rec.u.segment(rec.offset(r, first), len);
        out.y.segment(out.offset(r, 0), len) = rec.y.segment(rec.offset(r, first), len);
    }
    return out;
}

TimeRecord drop_periods(const TimeRecord& rec, int skip) {
    if (skip < 0) throw ConfigError("transient_skip: must be >= 0");
    if (skip >= rec.P) throw InsufficientDataError("record: transient skip leaves no periods");
    return select_periods(rec, skip, rec.P - skip);
}

TimeRecord select_realizations(const TimeRecord& rec, const std::vector<int>& realizations) {
    rec.validate();
    TimeRecord out = rec;
    out.R          = static_cast<int>(realizations.size());
    if (out.R == 0) throw ConfigError("record: empty realization selection");
    const Eigen::Index len = static_cast<Eigen::Index>(rec.P) * rec.N;
    out.u.resize(len * out.R);
    out.y.resize(len * out.R);
    for (int i = 0; i < out.R; ++i) {
        const int r = realizations[static_cast<size_t>(i)];
        if (r < 0 || r >= rec.R) throw ConfigError("record: realization index out of range");
        out.u.segment(i * len, len) = rec.u_realization(r);
        out.y.segment(i * len, len) = rec.y_realization(r);
    }
    return out;
}

TimeRecord average_periods(const TimeRecord& rec) {
    rec.validate();
    TimeRecord out = rec;
    out.P          = 1;
    out.u          = Vec::Zero(static_cast<Eigen::Index>(rec.R) * rec.N);
    out.y          = Vec::Zero(out.u.size());
    for (int r = 0; r < rec.R; ++r) {
        for (int p = 0; p < rec.P; ++p) {
            out.u.segment(static_cast<Eigen::Index>(r) * rec.N, rec.N) += rec.u_period(r, p);
            out.y.segment(static_cast<Eigen::Index>(r) * rec.N, rec.N) += rec.y_period(r, p);
        }
    }
    out.u /= rec.P;
    out.y /= rec.P;
    return out;
}

CVec SpectralRecord::mean_U(int r) const { return U.middleCols(column(r, 0), P).rowwise().mean(); }
CVec SpectralRecord::mean_Y(int r) const { return Y.middleCols(column(r, 0), P).rowwise().mean(); }

SpectralRecord to_spectra(const TimeRecord& rec, const HarmonicGrid& grid) {
    rec.validate();
    if (grid.N != rec.N)
        throw FormatError("grid/data mismatch: grid period " + std::to_string(grid.N) + " vs record period " +
                          std::to_string(rec.N));
    SpectralRecord s;
    s.grid = grid;
    s.fs   = rec.fs;
    s.N    = rec.N;
    s.P    = rec.P;
    s.R    = rec.R;
    s.U.resize(s.bins(), static_cast<Eigen::Index>(rec.R) * rec.P);
    s.Y.resize(s.bins(), s.U.cols());
    for (int r = 0; r < rec.R; ++r) {
        for (int p = 0; p < rec.P; ++p) {
            const Eigen::Index off = rec.offset(r, p);
            s.U.col(s.column(r, p)) = dft::forward(std::span<const double>(rec.u.data() + off, static_cast<size_t>(rec.N)));
            s.Y.col(s.column(r, p)) = dft::forward(std::span<const double>(rec.y.data() + off, static_cast<size_t>(rec.N)));
        }
    }
    return s;
}

NoiseVariance noise_variance(const SpectralRecord& spec) {
    if (spec.P < 2) throw InsufficientDataError("noise variance: at least 2 periods required, got " + std::to_string(spec.P));
    NoiseVariance nv;
    nv.per_period = Vec::Zero(spec.bins());
    for (int r = 0; r < spec.R; ++r) {
        const CVec mean = spec.mean_Y(r);
        Vec s2          = Vec::Zero(spec.bins());
        for (int p = 0; p < spec.P; ++p) s2 += (spec.Y.col(spec.column(r, p)) - mean).cwiseAbs2();
        s2 /= (spec.P - 1);
        nv.realization.push_back(s2 / spec.P);
        nv.per_period += s2;
    }
    nv.per_period /= spec.R;
    nv.of_mean = nv.per_period / spec.P;
    return nv;
}

namespace {

ClassSummary summarize(const std::vector<double>& power, const std::vector<double>& noise, double margin_db) {
    ClassSummary s;
    s.count = static_cast<int>(power.size());
    if (s.count == 0) return s;
    for (size_t i = 0; i < power.size(); ++i) {
        s.mean_power += power[i];
        s.mean_noise += noise[i];
    }
    s.mean_power /= s.count;
    s.mean_noise /= s.count;
    s.power_db    = db10(s.mean_power);
    s.noise_db    = db10(s.mean_noise);
    s.significant = s.mean_power > s.mean_noise * std::pow(10.0, margin_db / 10.0);
    return s;
}

ClassLevels levels_for(const SpectralRecord& spec, const BinList& band, const Vec& power, const Vec& noise, double margin_db) {
    std::vector<double> p[3], n[3];
    for (int k : band) {
        int slot = -1;
        switch (spec.grid.classify(k)) {
            case LineClass::Excited: slot = 0; break;
            case LineClass::EvenDetect: slot = 1; break;
            case LineClass::OddDetect: slot = 2; break;
            default: break;
        }
        if (slot < 0) continue;
        p[slot].push_back(power[k]);
        n[slot].push_back(noise[k]);
    }
    return {summarize(p[0], n[0], margin_db), summarize(p[1], n[1], margin_db), summarize(p[2], n[2], margin_db)};
}

std::string verdict_for(const ClassLevels& lv) {
    const bool even = lv.even_nl.significant;
    const bool odd  = lv.odd_nl.significant;
    if (!even && !odd) return "linear";
    if (even && !odd) return "even";
    if (odd && !even) return "odd";
    const double even_excess = lv.even_nl.mean_power - lv.even_nl.mean_noise;
    const double odd_excess  = lv.odd_nl.mean_power - lv.odd_nl.mean_noise;
    return even_excess >= odd_excess ? "even+odd, even dominant" : "even+odd, odd dominant";
}

}  // namespace

DistortionReport distortion_analysis(const SpectralRecord& spec, double margin_db) {
    const NoiseVariance nv = noise_variance(spec);
    DistortionReport rep;
    rep.margin_db    = margin_db;
    rep.periods      = spec.P;
    rep.realizations = spec.R;
    rep.mean_output.resize(spec.bins(), spec.R);

    const BinList band = spec.grid.band_bins();
    Vec pooled_power   = Vec::Zero(spec.bins());
    for (int r = 0; r < spec.R; ++r) {
        rep.mean_output.col(r) = spec.mean_Y(r);
        const Vec power        = rep.mean_output.col(r).cwiseAbs2();
        pooled_power += power;
        rep.per_realization.push_back(levels_for(spec, band, power, nv.realization[static_cast<size_t>(r)], margin_db));
    }
    pooled_power /= spec.R;
    rep.pooled  = levels_for(spec, band, pooled_power, nv.of_mean, margin_db);
    rep.verdict = verdict_for(rep.pooled);

    rep.bins.reserve(band.size());
    for (int k : band)
        rep.bins.push_back({k, k * spec.fs / spec.N, spec.grid.classify(k), pooled_power[k], nv.of_mean[k]});
    return rep;
}

DistortionReport analyze(const TimeRecord& rec, const HarmonicGrid& grid, const AnalysisOptions& opts) {
    const TimeRecord steady = drop_periods(rec, opts.transient_skip);
    DistortionReport rep    = distortion_analysis(to_spectra(steady, grid), opts.margin_db);
    rep.transient_skip      = opts.transient_skip;
    return rep;
}

}  // namespace nlsid
