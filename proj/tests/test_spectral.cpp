#include <doctest.h>

#include <random>

#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"
#include "nlsid/spectral.hpp"
#include "oracles.hpp"

using namespace nlsid;

namespace {

MultisineSpec small_spec() {
    MultisineSpec s;
    s.fs         = 10;
    s.N          = 1000;
    s.f_lo       = 0.5;
    s.f_hi       = 3.0;
    s.target_rms = 1.0;
    return s;
}

TimeRecord static_record(const MultisineSpec& s, int P, int R, double c1, double c2, double c3, double sigma, std::uint64_t seed) {
    const auto sigs = realizations(s, R);
    std::mt19937_64 rng(seed);
    Vec u(static_cast<Eigen::Index>(R) * P * s.N), y(u.size());
    for (int r = 0; r < R; ++r) {
        const Vec ur = tile(sigs[r].samples, P);
        const Vec n  = oracle::gaussian(ur.size(), sigma, rng);
        u.segment(r * ur.size(), ur.size()) = ur;
        y.segment(r * ur.size(), ur.size()) =
            (c1 * ur.array() + c2 * ur.array().square() + c3 * ur.array().cube()).matrix() + n;
    }
    return TimeRecord::from_samples(u, y, s.fs, s.N, R);
}

}  // namespace

TEST_CASE("to_spectra: constant record has energy only at DC, value c sqrt(N)") {
    const int N = 64;
    const TimeRecord rec = TimeRecord::from_samples(Vec::Constant(2 * N, 1.0), Vec::Constant(2 * N, 3.0), 1.0, N, 1);
    HarmonicGrid g;
    g.N        = N;
    g.excited  = {1};
    const auto sp = to_spectra(rec, g);
    REQUIRE(sp.Y.rows() == N / 2 + 1);
    REQUIRE(sp.Y.cols() == 2);
    CHECK(std::abs(sp.Y(0, 0) - 3.0 * std::sqrt(double(N))) < 1e-12);
    CHECK(sp.Y.bottomRows(N / 2).norm() < 1e-12);
}

TEST_CASE("to_spectra: single tone lands on its bin and matches the brute-force DFT") {
    const int N = 1000;
    Vec y(N);
    for (int t = 0; t < N; ++t) y[t] = std::cos(2 * kPi * 101 * t / N);
    const TimeRecord rec = TimeRecord::from_samples(y, y, 1.0, N, 1);
    HarmonicGrid g;
    g.N       = N;
    g.excited = {101};
    const auto sp  = to_spectra(rec, g);
    const CVec ref = oracle::naive_dft(y);
    CHECK((sp.Y.col(0) - ref).norm() < 1e-10);
    for (Eigen::Index k = 0; k < sp.Y.rows(); ++k)
        if (k != 101) CHECK(std::abs(sp.Y(k, 0)) < 1e-10);
    CHECK(std::abs(sp.Y(101, 0)) == doctest::Approx(std::sqrt(double(N)) / 2).epsilon(1e-12));
}

TEST_CASE("to_spectra: multisine input is nonzero exactly on excited bins") {
    const MultisineSpec s = small_spec();
    const TimeRecord rec  = static_record(s, 2, 1, 1.0, 0.0, 0.0, 0.0, 1);
    const auto g          = build_grid(s);
    const auto sp         = to_spectra(rec, g);
    for (Eigen::Index k = 0; k < sp.U.rows(); ++k) {
        const bool exc = std::binary_search(g.excited.begin(), g.excited.end(), static_cast<int>(k));
        if (exc) CHECK(std::abs(sp.U(k, 0)) > 1e-3);
        else CHECK(std::abs(sp.U(k, 0)) < 1e-12);
    }
}

TEST_CASE("to_spectra / records: format errors") {
    CHECK_THROWS_AS(TimeRecord::from_samples(Vec::Zero(150), Vec::Zero(150), 1.0, 100, 1), FormatError);
    CHECK_THROWS_AS(TimeRecord::from_samples(Vec::Zero(200), Vec::Zero(199), 1.0, 100, 1), FormatError);
    const TimeRecord rec = TimeRecord::from_samples(Vec::Zero(200), Vec::Zero(200), 1.0, 100, 1);
    HarmonicGrid g;
    g.N       = 50;
    g.excited = {1};
    CHECK_THROWS_AS(to_spectra(rec, g), FormatError);
}

TEST_CASE("noise_variance: identical periods give zero variance") {
    const MultisineSpec s = small_spec();
    const auto sp         = to_spectra(static_record(s, 4, 2, 1.0, 0.3, 0.1, 0.0, 1), build_grid(s));
    const NoiseVariance nv = noise_variance(sp);
    CHECK(nv.per_period.maxCoeff() < 1e-25);
}

TEST_CASE("noise_variance: white noise gives a flat sigma^2 per bin and 1/P for the mean") {
    const MultisineSpec s = small_spec();
    const double sigma    = 0.05;
    const auto sp         = to_spectra(static_record(s, 20, 1, 1.0, 0.0, 0.0, sigma, 7), build_grid(s));
    const NoiseVariance nv = noise_variance(sp);
    const double mean_pp   = nv.per_period.segment(1, sp.bins() - 2).mean();
    CHECK(mean_pp == doctest::Approx(sigma * sigma).epsilon(0.10));
    CHECK((nv.of_mean - nv.per_period / 20.0).norm() < 1e-15);

    const auto one = to_spectra(static_record(s, 1, 1, 1.0, 0.0, 0.0, 0.0, 7), build_grid(s));
    CHECK_THROWS_AS(noise_variance(one), InsufficientDataError);
}

TEST_CASE("distortion_analysis: static cubic raises odd lines, quadratic raises even lines") {
    const MultisineSpec s = small_spec();
    const auto g          = build_grid(s);
    const AnalysisOptions opts{0, 6.0};

    const DistortionReport cubic = analyze(static_record(s, 8, 2, 1.0, 0.0, 0.1, 1e-3, 3), g, opts);
    CHECK(cubic.pooled.odd_nl.significant);
    CHECK_FALSE(cubic.pooled.even_nl.significant);
    CHECK(cubic.verdict == "odd");

    const DistortionReport quad = analyze(static_record(s, 8, 2, 0.0, 1.0, 0.0, 1e-3, 3), g, opts);
    CHECK(quad.pooled.even_nl.significant);
    CHECK_FALSE(quad.pooled.odd_nl.significant);
    CHECK(quad.verdict == "even");

    const DistortionReport lin = analyze(static_record(s, 8, 2, 2.0, 0.0, 0.0, 1e-3, 3), g, opts);
    CHECK(lin.verdict == "linear");
    CHECK(std::abs(lin.pooled.even_nl.power_db - lin.pooled.even_nl.noise_db) < 3.0);
    CHECK(std::abs(lin.pooled.odd_nl.power_db - lin.pooled.odd_nl.noise_db) < 3.0);
}

TEST_CASE("distortion_analysis: report partitions the in-band grid, powers non-negative") {
    const MultisineSpec s = small_spec();
    const auto g          = build_grid(s);
    const auto rep        = analyze(static_record(s, 4, 2, 1.0, 0.2, 0.1, 1e-3, 5), g, {1, 6.0});
    CHECK(rep.bins.size() == g.band_bins().size());
    CHECK(rep.periods == 3);
    CHECK(rep.per_realization.size() == 2);
    for (const auto& b : rep.bins) {
        CHECK(b.power >= 0.0);
        CHECK(b.noise >= 0.0);
        CHECK(b.cls == g.classify(b.bin));
    }
}

TEST_CASE("property: Parseval per period") {
    const MultisineSpec s = small_spec();
    const TimeRecord rec  = static_record(s, 3, 2, 1.0, 0.5, 0.2, 0.1, 11);
    const auto sp         = to_spectra(rec, build_grid(s));
    for (int r = 0; r < rec.R; ++r)
        for (int p = 0; p < rec.P; ++p) {
            const double e_time = rec.y_period(r, p).squaredNorm();
            const double e_freq = dft::one_sided_energy(sp.Y.col(sp.column(r, p)), rec.N);
            CHECK(std::abs(e_freq - e_time) / e_time < 1e-10);
        }
}

TEST_CASE("property: line-class exclusivity for noiseless odd and even polynomials") {
    const MultisineSpec s = small_spec();
    const auto g          = build_grid(s);
    const auto odd_rep    = analyze(static_record(s, 2, 1, 1.0, 0.0, 0.3, 0.0, 1), g, {0, 6.0});
    CHECK(odd_rep.pooled.even_nl.power_db - odd_rep.pooled.linear.power_db < -200.0);
    const auto even_rep = analyze(static_record(s, 2, 1, 0.0, 1.0, 0.0, 0.0, 1), g, {0, 6.0});
    // y = u^2: the excited lines carry no linear term, so compare against the even lines.
    CHECK(even_rep.pooled.odd_nl.power_db - even_rep.pooled.even_nl.power_db < -200.0);
}

TEST_CASE("property: period averaging reduces detection-line noise power as 1/P") {
    const MultisineSpec s = small_spec();
    const auto g          = build_grid(s);
    double p4 = 0.0, p16 = 0.0;
    const int runs = 40;
    for (int i = 0; i < runs; ++i) {
        p4 += analyze(static_record(s, 4, 1, 1.0, 0.0, 0.0, 0.1, 100 + i), g, {0, 6.0}).pooled.even_nl.mean_power;
        p16 += analyze(static_record(s, 16, 1, 1.0, 0.0, 0.0, 0.1, 500 + i), g, {0, 6.0}).pooled.even_nl.mean_power;
    }
    CHECK(p4 / p16 == doctest::Approx(4.0).epsilon(0.20));
}
