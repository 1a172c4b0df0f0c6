#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "nlsid/types.hpp"

namespace nlsid {

enum class GridKind { FullOdd, OddRandom };

enum class LineClass { DC, Excited, OddDetect, EvenDetect, OutOfBand };

const char* to_string(LineClass c);

/// Design parameters of a periodic odd multisine.
struct MultisineSpec {
    double fs   = 50.0;  ///< sample frequency [Hz]
    int N       = 5000;  ///< samples per period
    double f_lo = 1.0;   ///< lower band edge [Hz]
    double f_hi = 5.0;   ///< upper band edge [Hz]

    GridKind grid_kind = GridKind::OddRandom;
    int group_size     = 4;  ///< consecutive in-band odd lines per omission group
    int omit_per_group = 1;  ///< odd lines left unexcited in each group

    /// Per-line amplitude A(f) before rms scaling; flat when empty.
    std::function<double(double freq_hz)> amplitude;

    /// Time-domain rms after scaling; no scaling when unset.
    std::optional<double> target_rms = 20.0;

    std::uint64_t seed = 1;

    double resolution() const { return fs / N; }
    double bin_frequency(int k) const { return k * fs / N; }

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Classification of the in-band DFT lines of one period.
struct HarmonicGrid {
    int N = 0;
    BinList excited;      ///< sorted, all odd
    BinList odd_detect;   ///< in-band odd lines left unexcited
    BinList even_detect;  ///< in-band even lines (DC excluded)

    int n_k() const { return static_cast<int>(excited.size()); }
    int first_band_bin() const;
    int last_band_bin() const;

    LineClass classify(int bin) const;
    /// All in-band bins (excited, odd and even detection lines), sorted.
    BinList band_bins() const;
};

/// One realized period of the excitation.
struct ExcitationSignal {
    MultisineSpec spec;
    HarmonicGrid grid;
    Vec amplitudes;  ///< per excited line, after rms scaling
    Vec phases;      ///< per excited line, uniform on [0, 2 pi)
    Vec samples;     ///< one period, length N
    double realized_rms = 0.0;
};

/// Deterministic random stream derived from (seed, stream, index).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// Excited / detection line selection for the spec's band.
HarmonicGrid build_grid(const MultisineSpec& spec);

/// Sum of cosines on the excited lines with explicit phases and amplitudes,
/// optionally rescaled to spec.target_rms.
ExcitationSignal synthesize(const MultisineSpec& spec, const HarmonicGrid& grid, const Vec& phases,
                            const Vec& amplitudes);

/// Random-phase realization 0 of the spec.
ExcitationSignal synthesize(const MultisineSpec& spec, const HarmonicGrid& grid);

/// `count` random-phase realizations sharing one grid; realization r draws its
/// phases from a stream derived from (seed, r).
std::vector<ExcitationSignal> realizations(const MultisineSpec& spec, int count);

/// Repeat one period `periods` times.
Vec tile(const Vec& period, int periods);

}  // namespace nlsid
