#include "nlsid/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"

namespace nlsid {
namespace {

constexpr std::uint64_t kGridStream  = 0x6772696400000001ULL;
constexpr std::uint64_t kPhaseStream = 0x7068617300000002ULL;

}  // namespace

const char* to_string(LineClass c) {
    switch (c) {
        case LineClass::DC: return "dc";
        case LineClass::Excited: return "excited";
        case LineClass::OddDetect: return "odd_detect";
        case LineClass::EvenDetect: return "even_detect";
        case LineClass::OutOfBand: return "out_of_band";
    }
    return "unknown";
}

void MultisineSpec::validate() const {
    if (!(fs > 0.0)) throw ConfigError("fs: sample frequency must be positive");
    if (N < 4) throw ConfigError("N: at least 4 samples per period required");
    if (!(f_lo > 0.0)) throw ConfigError("band: f_lo must be > 0");
    if (!(f_hi < fs / 2.0)) throw ConfigError("band: f_hi must be below fs/2");
    if (!(f_lo <= f_hi)) throw ConfigError("band: f_lo must not exceed f_hi");
    if (grid_kind == GridKind::OddRandom) {
        if (group_size < 1) throw ConfigError("group_size: must be >= 1");
        if (omit_per_group < 0 || omit_per_group >= group_size)
            throw ConfigError("omit_per_group: must satisfy 0 <= omit_per_group < group_size");
    }
    if (target_rms && !(*target_rms > 0.0)) throw ConfigError("target_rms: must be positive");
}

int HarmonicGrid::first_band_bin() const {
    int lo = N;
    for (const BinList* l : {&excited, &odd_detect, &even_detect})
        if (!l->empty()) lo = std::min(lo, l->front());
    return lo;
}

int HarmonicGrid::last_band_bin() const {
    int hi = -1;
    for (const BinList* l : {&excited, &odd_detect, &even_detect})
        if (!l->empty()) hi = std::max(hi, l->back());
    return hi;
}

LineClass HarmonicGrid::classify(int bin) const {
    if (bin == 0) return LineClass::DC;
    if (std::binary_search(excited.begin(), excited.end(), bin)) return LineClass::Excited;
    if (std::binary_search(odd_detect.begin(), odd_detect.end(), bin)) return LineClass::OddDetect;
    if (std::binary_search(even_detect.begin(), even_detect.end(), bin)) return LineClass::EvenDetect;
    return LineClass::OutOfBand;
}

BinList HarmonicGrid::band_bins() const {
    BinList all;
    all.reserve(excited.size() + odd_detect.size() + even_detect.size());
    all.insert(all.end(), excited.begin(), excited.end());
    all.insert(all.end(), odd_detect.begin(), odd_detect.end());
    all.insert(all.end(), even_detect.begin(), even_detect.end());
    std::sort(all.begin(), all.end());
    return all;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

HarmonicGrid build_grid(const MultisineSpec& spec) {
    spec.validate();
    HarmonicGrid grid;
    grid.N = spec.N;

    // Bins whose frequency lies inside [f_lo, f_hi], with a relative slack so
    // that band edges landing exactly on a bin are included.
    const double df = spec.resolution();
    const int k_lo  = std::max(1, static_cast<int>(std::ceil(spec.f_lo / df - 1e-9)));
    const int k_hi  = std::min(spec.N / 2 - 1, static_cast<int>(std::floor(spec.f_hi / df + 1e-9)));

    BinList odd;
    for (int k = k_lo; k <= k_hi; ++k) {
        if (k % 2 == 1)
            odd.push_back(k);
        else
            grid.even_detect.push_back(k);
    }
    if (odd.empty())
        throw ConfigError("band: no odd DFT lines between f_lo and f_hi for the given fs and N");

    if (spec.grid_kind == GridKind::FullOdd || spec.omit_per_group == 0) {
        grid.excited = odd;
        return grid;
    }

    auto rng = make_rng(spec.seed, kGridStream);
    const size_t g = static_cast<size_t>(spec.group_size);
    std::vector<char> omit(odd.size(), 0);
    for (size_t start = 0; start < odd.size(); start += g) {
        const size_t len = std::min(g, odd.size() - start);
        // A trailing partial group keeps all its lines excited.
        if (len < g) break;
        std::vector<size_t> idx(len);
        std::iota(idx.begin(), idx.end(), start);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int j = 0; j < spec.omit_per_group; ++j) omit[idx[static_cast<size_t>(j)]] = 1;
    }
    for (size_t i = 0; i < odd.size(); ++i) (omit[i] ? grid.odd_detect : grid.excited).push_back(odd[i]);
    return grid;
}

ExcitationSignal synthesize(const MultisineSpec& spec, const HarmonicGrid& grid, const Vec& phases,
                            const Vec& amplitudes) {
    if (grid.N != spec.N) throw ConfigError("grid: period length does not match spec.N");
    if (phases.size() != grid.n_k() || amplitudes.size() != grid.n_k())
        throw ConfigError("phases/amplitudes: one entry per excited line required");

    // x(t) = sum A cos(2 pi k t/N + phi) is the inverse transform of the one-sided
    // spectrum X(k) = sqrt(N) A/2 exp(j phi).
    CVec X     = CVec::Zero(spec.N / 2 + 1);
    const double half_root_n = 0.5 * std::sqrt(static_cast<double>(spec.N));
    for (int i = 0; i < grid.n_k(); ++i) {
        const int k = grid.excited[static_cast<size_t>(i)];
        X[k]        = half_root_n * amplitudes[i] * std::polar(1.0, phases[i]);
    }

    ExcitationSignal sig;
    sig.spec       = spec;
    sig.grid       = grid;
    sig.phases     = phases;
    sig.amplitudes = amplitudes;
    sig.samples    = dft::inverse(X, spec.N);

    double rms = std::sqrt(sig.samples.squaredNorm() / spec.N);
    if (spec.target_rms && rms > 0.0) {
        const double scale = *spec.target_rms / rms;
        sig.samples *= scale;
        sig.amplitudes *= scale;
        rms = std::sqrt(sig.samples.squaredNorm() / spec.N);
    }
    sig.realized_rms = rms;
    return sig;
}

namespace {

ExcitationSignal synthesize_realization(const MultisineSpec& spec, const HarmonicGrid& grid, int r) {
    auto rng = make_rng(spec.seed, kPhaseStream, static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * kPi);
    Vec phases(grid.n_k());
    Vec amps(grid.n_k());
    for (int i = 0; i < grid.n_k(); ++i) {
        phases[i] = uniform(rng);
        amps[i]   = spec.amplitude ? spec.amplitude(spec.bin_frequency(grid.excited[static_cast<size_t>(i)])) : 1.0;
    }
    return synthesize(spec, grid, phases, amps);
}

}  // namespace

ExcitationSignal synthesize(const MultisineSpec& spec, const HarmonicGrid& grid) {
    return synthesize_realization(spec, grid, 0);
}

std::vector<ExcitationSignal> realizations(const MultisineSpec& spec, int count) {
    if (count < 1) throw ConfigError("realizations: count must be >= 1");
    const HarmonicGrid grid = build_grid(spec);
    std::vector<ExcitationSignal> out;
    out.reserve(static_cast<size_t>(count));
    for (int r = 0; r < count; ++r) out.push_back(synthesize_realization(spec, grid, r));
    return out;
}

Vec tile(const Vec& period, int periods) {
    Vec out(period.size() * periods);
    for (int p = 0; p < periods; ++p) out.segment(p * period.size(), period.size()) = period;
    return out;
}

}  // namespace nlsid
