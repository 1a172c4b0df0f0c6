#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nlsid/lpm.hpp"
#include "nlsid/linmodel.hpp"
#include "nlsid/pnlss.hpp"
#include "nlsid/signals.hpp"
#include "nlsid/spectral.hpp"
#include "nlsid/trend.hpp"

namespace nlsid {

/// Which variance weights the parametric linear fits use.
enum class BlaWeighting { Total, Residual, Unit };

BlaWeighting parse_weighting(const std::string& s);
const char* to_string(BlaWeighting w);

/// Lines entering the nonlinear fit cost.
enum class FitLines { InBand, Excited };

FitLines parse_fit_lines(const std::string& s);
const char* to_string(FitLines f);

struct IdentifyOptions {
    bool detrend = true;
    TrendLambdaPolicy trend{};
    int transient_skip = 1;
    LpmConfig lpm{};
    BlaWeighting weighting = BlaWeighting::Total;
    int max_order = 4;
    lm::Options ml{};
    PnlssStructure structure{};
    FitLines fit_lines = FitLines::InBand;
    FitOptions fit{};            ///< bins and validation are filled in by identify
    int estimation_realization = 0;
    int test_realization       = -1;  ///< -1: last realization

    void validate() const;
};

struct ErrorSpectrum {
    BinList bins;
    Vec freq_hz;
    Vec linear_db;
    Vec pnlss_db;
    Vec output_db;
};

struct IdentifyResult {
    DetrendResult detrended;
    BlaEstimate bla;
    MdlSelection mdl;
    Realization realization;
    MlRefineResult ml;
    PnlssModel linear;       ///< PNLSS container with zero nonlinear coefficients
    FitResult pnlss;
    double rmse_linear = 0.0;
    double rmse_pnlss  = 0.0;
    double output_rms  = 0.0;
    ErrorSpectrum error_spectrum;
    std::vector<std::string> warnings;

    double rmse_ratio() const { return rmse_pnlss / rmse_linear; }
    double improvement_db() const;
};

/// Mean-free time-domain rms of the steady-state error of `model` on realization r of the
/// (period-averaged) record, plus the one-period error itself.
double steady_state_rmse(const PnlssModel& model, const TimeRecord& rec, int r, int transient_periods, Vec* error = nullptr);

/// Called after every completed stage with the partially filled result.
using StageHook = std::function<void(const std::string& stage, const IdentifyResult& partial)>;

/// detrend -> drop transient periods -> robust BLA -> MDL rational fit -> balanced realization
/// -> ML refinement -> PNLSS initialization and fit, tested on a held-out realization.
/// Failures are rethrown with the stage name prefixed.
IdentifyResult identify(const TimeRecord& raw, const HarmonicGrid& grid, const IdentifyOptions& opts,
                        const StageHook& hook = {});

/// Nonparametric distortion report after optional detrending.
DistortionReport analyze_record(const TimeRecord& raw, const HarmonicGrid& grid, bool detrend,
                                const TrendLambdaPolicy& trend, const AnalysisOptions& opts);

}  // namespace nlsid
