#include "nlsid/pipeline.hpp"

#include <cmath>
#include <span>

#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"

namespace nlsid {

BlaWeighting parse_weighting(const std::string& s) {
    if (s == "total") return BlaWeighting::Total;
    if (s == "residual") return BlaWeighting::Residual;
    if (s == "unit") return BlaWeighting::Unit;
    throw ConfigError("weighting: expected total, residual or unit, got '" + s + "'");
}

const char* to_string(BlaWeighting w) {
    switch (w) {
        case BlaWeighting::Total: return "total";
        case BlaWeighting::Residual: return "residual";
        case BlaWeighting::Unit: return "unit";
    }
    return "unknown";
}

FitLines parse_fit_lines(const std::string& s) {
    if (s == "inband") return FitLines::InBand;
    if (s == "excited") return FitLines::Excited;
    throw ConfigError("fit_lines: expected inband or excited, got '" + s + "'");
}

const char* to_string(FitLines f) { return f == FitLines::InBand ? "inband" : "excited"; }

void IdentifyOptions::validate() const {
    lpm.validate();
    if (transient_skip < 0) throw ConfigError("transient_skip must be >= 0");
    if (max_order < 1) throw ConfigError("max_order must be >= 1");
    if (trend.value < 0.0) throw ConfigError("trend lambda must be >= 0");
}

double IdentifyResult::improvement_db() const { return 20.0 * std::log10(rmse_linear / rmse_pnlss); }

double steady_state_rmse(const PnlssModel& model, const TimeRecord& rec, int r, int transient_periods, Vec* error) {
    const TimeRecord avg = average_periods(select_realizations(rec, {r}));
    Vec e                = avg.y_period(0, 0) - steady_state_output(model, avg.u_period(0, 0), transient_periods);
    e.array() -= e.mean();
    if (error) *error = e;
    return std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    const std::string p = std::string(name) + ": ";
    try {
        return f();
    } catch (const InstabilityError& e) {
        throw InstabilityError(p + e.what(), e.step());
    } catch (const NumericalError& e) {
        throw NumericalError(p + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(p + e.what());
    } catch (const FormatError& e) {
        throw FormatError(p + e.what());
    } catch (const InsufficientDataError& e) {
        throw InsufficientDataError(p + e.what());
    }
}

Vec spectrum_db(const Vec& e) {
    const CVec E = dft::forward(std::span<const double>(e.data(), static_cast<size_t>(e.size())));
    Vec out(E.size());
    for (Eigen::Index k = 0; k < E.size(); ++k) out[k] = db10(std::norm(E[k]));
    return out;
}

}  // namespace

DistortionReport analyze_record(const TimeRecord& raw, const HarmonicGrid& grid, bool detrend,
                                const TrendLambdaPolicy& trend, const AnalysisOptions& opts) {
    raw.validate();
    if (!detrend) return analyze(raw, grid, opts);
    const DetrendResult d = detrend_record(raw, trend, 1e-8, &grid);
    return analyze(d.record, grid, opts);
}

IdentifyResult identify(const TimeRecord& raw, const HarmonicGrid& grid, const IdentifyOptions& opts, const StageHook& hook) {
    opts.validate();
    raw.validate();
    if (grid.N != raw.N) throw FormatError("identify: grid N does not match the record");
    IdentifyResult res;
    auto done = [&](const char* name) {
        if (hook) hook(name, res);
    };

    TimeRecord rec = raw;
    if (opts.detrend) {
        res.detrended = stage("detrend", [&] { return detrend_record(raw, opts.trend, 1e-8, &grid); });
        rec           = res.detrended.record;
        done("detrend");
    }
    rec = stage("segment", [&] { return drop_periods(rec, opts.transient_skip); });

    res.bla = stage("bla", [&] {
        const SpectralRecord spec = to_spectra(rec, grid);
        BlaEstimate b             = spec.R >= 2 && spec.P >= 2 ? bla_robust(spec, opts.lpm) : lpm_frf(spec, opts.lpm);
        if (opts.weighting == BlaWeighting::Residual && !b.var_total_from_residual) {
            const BlaEstimate rb = lpm_frf(spec, opts.lpm);
            b.var_total          = rb.var_total;
        } else if (opts.weighting == BlaWeighting::Unit) {
            b.var_total.setOnes();
        }
        return b;
    });
    if (res.bla.var_total_from_residual && opts.weighting == BlaWeighting::Total)
        res.warnings.push_back("bla: one realization only; total variance taken from the LPM residual");
    done("bla");

    RationalFitOptions rfo;
    res.mdl = stage("mdl", [&] { return mdl_select(res.bla, opts.max_order, rfo); });
    for (const auto& w : res.mdl.fit.warnings) res.warnings.push_back(w);
    done("mdl");

    res.realization = stage("realization", [&] { return balanced_realization(res.mdl.fit.model, raw.fs); });
    for (const auto& w : res.realization.warnings) res.warnings.push_back(w);
    done("realization");

    res.ml = stage("ml_refine", [&] { return ml_refine(res.realization.model, res.bla, opts.ml); });
    done("ml_refine");

    const int test = opts.test_realization < 0 ? rec.R - 1 : opts.test_realization;
    if (opts.estimation_realization < 0 || opts.estimation_realization >= rec.R || test >= rec.R)
        throw ConfigError("identify: realization index out of range");
    if (test == opts.estimation_realization && rec.R > 1)
        throw ConfigError("identify: estimation and test realizations must differ");
    if (rec.R == 1) res.warnings.push_back("identify: one realization only; rms errors are in-sample");
    const TimeRecord est = select_realizations(rec, {opts.estimation_realization});

    FitOptions fo = opts.fit;
    fo.bins       = opts.fit_lines == FitLines::InBand ? grid.band_bins() : grid.excited;
    fo.validation = FitOptions::Validation::LastPeriods;

    res.linear = stage("pnlss_init", [&] {
        const TimeRecord avg = average_periods(est);
        return init_from_linear(res.ml.model, opts.structure, avg.u_period(0, 0), avg.y_period(0, 0));
    });
    done("pnlss_init");
    res.pnlss = stage("pnlss_fit", [&] { return fit(res.linear, est, fo); });
    for (const auto& w : res.pnlss.report.warnings) res.warnings.push_back(w);
    done("pnlss_fit");

    stage("compare", [&] {
        Vec e_lin, e_nl;
        res.rmse_linear = steady_state_rmse(res.linear, rec, test, fo.transient_periods, &e_lin);
        res.rmse_pnlss  = steady_state_rmse(res.pnlss.model, rec, test, fo.transient_periods, &e_nl);
        Vec y           = average_periods(select_realizations(rec, {test})).y_period(0, 0);
        y.array() -= y.mean();
        res.output_rms = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));

        auto& es        = res.error_spectrum;
        const Vec lin   = spectrum_db(e_lin);
        const Vec nl    = spectrum_db(e_nl);
        const Vec out   = spectrum_db(y);
        const auto bins = lin.size() - 1;
        es.bins.resize(static_cast<size_t>(bins));
        es.freq_hz.resize(bins);
        es.linear_db.resize(bins);
        es.pnlss_db.resize(bins);
        es.output_db.resize(bins);
        for (Eigen::Index k = 1; k <= bins; ++k) {
            es.bins[static_cast<size_t>(k - 1)] = static_cast<int>(k);
            es.freq_hz[k - 1]                   = static_cast<double>(k) * rec.fs / rec.N;
            es.linear_db[k - 1]                 = lin[k];
            es.pnlss_db[k - 1]                  = nl[k];
            es.output_db[k - 1]                 = out[k];
        }
        return 0;
    });
    done("compare");
    return res;
}

}  // namespace nlsid
