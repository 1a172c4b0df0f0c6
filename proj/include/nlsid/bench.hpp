#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlsid/linmodel.hpp"
#include "nlsid/signals.hpp"
#include "nlsid/spectral.hpp"

namespace nlsid {

/// Battery-like weakly nonlinear test system. The linear core maps current [A] to a voltage
/// deviation v [V]; the terminal output is
///   y = v + nl_even v^2 + nl_odd v^3 + drift_rate * t + noise.
struct SyntheticCell {
    StateSpaceModel linear;
    double nl_even    = 0.0;  ///< [1/V]
    double nl_odd     = 0.0;  ///< [1/V^2]
    double drift_rate = 0.0;  ///< [V/sample], restarted for every realization
    double noise_std  = 0.0;  ///< [V]
    std::string operating_point;
    std::uint64_t seed = 7;

    /// "soc90" (linear regime) or "soc10" (even-dominant mixed nonlinearity).
    static SyntheticCell preset(const std::string& name, double fs = 50.0);
    /// Second-order two-RC-branch core sampled at fs.
    static StateSpaceModel default_core(double fs = 50.0);

    void validate() const;
};

/// Simulate `periods` periods of every excitation realization from rest.
TimeRecord simulate_cell(const SyntheticCell& cell, const std::vector<ExcitationSignal>& excitation, int periods);

/// Noise-free output of the cell for an arbitrary input sequence.
Vec cell_response(const SyntheticCell& cell, const Vec& u);

struct CsvLayout {
    std::string time_column   = "t";
    std::string input_column  = "current";
    std::string output_column = "voltage";
    int N = 0;                  ///< samples per period; required
    int R = 1;                  ///< realizations stored back to back
    std::optional<double> fs;   ///< inferred from the time column when unset
};

struct RecordMetadata {
    std::string soc_label;
    std::optional<double> temperature_c;
    std::optional<double> rms_level;
};

struct MeasuredRecord {
    TimeRecord record;
    RecordMetadata metadata;
    std::vector<std::string> warnings;
};

/// Parse a `t,current,voltage` CSV. Non-uniform sampling (relative jitter above 1e-6) and
/// missing columns or fields are format errors; trailing samples that do not fill a whole
/// period in every realization are dropped with a warning.
MeasuredRecord ingest_csv(const std::filesystem::path& path, const CsvLayout& layout);

/// Write a record as `t,current,voltage` with shortest round-trip number formatting.
void export_csv(const TimeRecord& rec, const std::filesystem::path& path);

}  // namespace nlsid
