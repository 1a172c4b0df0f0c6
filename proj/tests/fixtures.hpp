#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "nlsid/error.hpp"
#include "nlsid/linmodel.hpp"
#include "nlsid/lpm.hpp"
#include "nlsid/pnlss.hpp"
#include "nlsid/signals.hpp"
#include "nlsid/spectral.hpp"
#include "oracles.hpp"

// Generators and helpers shared by the unit tests and the acceptance binary.
namespace fixture {

using namespace nlsid;


inline BinList odd_bins(int N) {
    BinList b;
    for (int k = 1; k < N / 2; k += 2) b.push_back(k);
    return b;
}

// Builds a BLA estimate from an arbitrary FRF with per-bin variance.
template <class Frf>
inline BlaEstimate make_bla(Frf&& frf, const BinList& bins, int N, const Vec& var) {
    BlaEstimate e;
    e.fs   = 1.0;
    e.N    = N;
    e.bins = bins;
    e.G.resize(static_cast<Eigen::Index>(bins.size()));
    for (size_t i = 0; i < bins.size(); ++i) e.G[static_cast<Eigen::Index>(i)] = frf(oracle::z_of(bins[i], N));
    e.var_total = var;
    e.var_noise = Vec::Zero(var.size());
    e.T         = CVec::Zero(var.size());
    e.estimable.assign(bins.size(), 1);
    return e;
}

inline cplx rational_frf(const Vec& b, const Vec& a, cplx z) { return oracle::poly_inv(b, z) / oracle::poly_inv(a, z); }

// Monic polynomial coefficients in z^-1 from its roots (conjugate pairs give a real result).
inline Vec poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> c{1.0};
    for (cplx r : roots) {
        std::vector<cplx> next(c.size() + 1, 0.0);
        for (size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= r * c[i];
        }
        c = next;
    }
    Vec out(static_cast<Eigen::Index>(c.size()));
    for (size_t i = 0; i < c.size(); ++i) out[static_cast<Eigen::Index>(i)] = c[i].real();
    return out;
}

inline RationalModel random_stable_rational(int order, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> rad(0.2, 0.9), ang(0.1, 3.0);
    std::normal_distribution<double> g;
    std::vector<cplx> roots;
    while (static_cast<int>(roots.size()) + 2 <= order) {
        const cplx p = std::polar(rad(rng), ang(rng));
        roots.push_back(p);
        roots.push_back(std::conj(p));
    }
    if (static_cast<int>(roots.size()) < order) roots.push_back(rad(rng) * (g(rng) > 0 ? 1.0 : -1.0));
    RationalModel m;
    m.a = poly_from_roots(roots);
    m.b = Vec(order + 1);
    for (int i = 0; i <= order; ++i) m.b[i] = g(rng);
    return m;
}


inline double offdiag_norm(const Mat& M) { return (M - Mat(M.diagonal().asDiagonal())).norm(); }

// Long-double reference simulation of the PNLSS recursion, written from the model equations.
inline std::vector<long double> reference_output(const PnlssModel& m, const Vec& theta, const Vec& u) {
    const PnlssModel p = m.with_parameters(theta);
    const int nx = p.n_x();
    using LV     = std::vector<long double>;
    LV x(static_cast<size_t>(nx), 0.0L), y;
    auto monomials = [](const MonomialBasis& b, const LV& xs, long double un) {
        LV v;
        for (const auto& ex : b.exponents) {
            long double prod = 1.0L;
            for (int i = 0; i < b.n_x; ++i)
                for (int e = 0; e < ex[static_cast<size_t>(i)]; ++e) prod *= xs[static_cast<size_t>(i)];
            if (b.n_u > 0)
                for (int e = 0; e < ex[static_cast<size_t>(b.n_x)]; ++e) prod *= un;
            v.push_back(prod);
        }
        return v;
    };
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        const long double un = static_cast<long double>(u[t]) / p.u_scale[0];
        const LV zeta = monomials(p.state_basis, x, un), eta = monomials(p.output_basis, x, un);
        long double yn = p.D(0, 0) * un;
        for (int j = 0; j < nx; ++j) yn += p.C(0, j) * x[static_cast<size_t>(j)];
        for (size_t j = 0; j < eta.size(); ++j) yn += p.F(0, static_cast<Eigen::Index>(j)) * eta[j];
        y.push_back(yn * p.y_scale[0]);
        LV xn(static_cast<size_t>(nx), 0.0L);
        for (int i = 0; i < nx; ++i) {
            long double acc = p.B(i, 0) * un;
            for (int j = 0; j < nx; ++j) acc += p.A(i, j) * x[static_cast<size_t>(j)];
            for (size_t j = 0; j < zeta.size(); ++j) acc += p.E(i, static_cast<Eigen::Index>(j)) * zeta[j];
            xn[static_cast<size_t>(i)] = acc;
        }
        x = xn;
    }
    return y;
}

inline PnlssModel random_model(int nx, int P, std::mt19937_64& rng, double nl_scale, bool random_scales = false) {
    std::normal_distribution<double> g;
    StateSpaceModel ss;
    ss.A = oracle::random_stable(nx, 0.7, rng);
    ss.B = Mat(nx, 1);
    ss.C = Mat(1, nx);
    ss.D = Mat(1, 1);
    for (int i = 0; i < nx; ++i) {
        ss.B(i, 0) = 0.5 * g(rng);
        ss.C(0, i) = g(rng);
    }
    ss.D(0, 0) = g(rng);
    PnlssStructure st;
    st.state_degrees.clear();
    for (int d = 2; d <= P; ++d) st.state_degrees.push_back(d);
    st.output_degrees = st.state_degrees;
    PnlssModel m      = init_from_linear(ss, st);
    for (Eigen::Index i = 0; i < m.E.size(); ++i) m.E.data()[i] = nl_scale * g(rng);
    for (Eigen::Index i = 0; i < m.F.size(); ++i) m.F.data()[i] = nl_scale * g(rng);
    if (random_scales) {
        m.u_scale[0] = 0.5 + std::abs(g(rng));
        m.y_scale[0] = 0.5 + std::abs(g(rng));
    }
    return m;
}

// Draws random generators until the state stays below 5 when every period is driven at `margin`
// times its amplitude.
inline PnlssModel bounded_model(int nx, int P, std::mt19937_64& rng, double nl_scale, const std::vector<Vec>& periods,
                         bool random_scales = false, double margin = 1.0) {
    for (;;) {
        PnlssModel m = random_model(nx, P, rng, nl_scale, random_scales);
        try {
            for (const Vec& u : periods) simulate(m, Vec(margin * tile(u, 4)), Vec(), 5.0 * margin);
            return m;
        } catch (const InstabilityError&) {
        }
    }
}

inline std::vector<Vec> inputs(const MultisineSpec& s, int R) {
    std::vector<Vec> out;
    for (const auto& sig : realizations(s, R)) out.push_back(sig.samples);
    return out;
}

inline MultisineSpec unit_spec(int N = 512) {
    MultisineSpec s;
    s.fs         = 1.0;
    s.N          = N;
    s.f_lo       = 2.0 / N;
    s.f_hi       = 0.3;
    s.target_rms = 1.0;
    return s;
}

inline BinList all_lines(int N) {
    BinList b;
    for (int k = 1; k < N / 2; ++k) b.push_back(k);
    return b;
}

inline TimeRecord generate(const PnlssModel& gen, const MultisineSpec& s, int R, int P, double snr_db, std::mt19937_64& rng) {
    const auto sigs = realizations(s, R);
    Vec u(static_cast<Eigen::Index>(R) * P * s.N), y(u.size());
    double out_rms = 0.0;
    std::vector<Vec> clean;
    for (int r = 0; r < R; ++r) {
        const Vec ur = tile(sigs[static_cast<size_t>(r)].samples, P + 1);
        const Vec yr = simulate(gen, ur).y.row(0).transpose().tail(static_cast<Eigen::Index>(P) * s.N);
        u.segment(static_cast<Eigen::Index>(r) * P * s.N, P * s.N) = ur.tail(static_cast<Eigen::Index>(P) * s.N);
        clean.push_back(yr);
        out_rms += yr.squaredNorm();
    }
    out_rms         = std::sqrt(out_rms / static_cast<double>(u.size()));
    const double sd = out_rms * std::pow(10.0, -snr_db / 20.0);
    for (int r = 0; r < R; ++r)
        y.segment(static_cast<Eigen::Index>(r) * P * s.N, P * s.N) = clean[static_cast<size_t>(r)] + oracle::gaussian(P * s.N, sd, rng);
    return TimeRecord::from_samples(u, y, s.fs, s.N, R);
}

inline StateSpaceModel linear_part(const PnlssModel& m) {
    // Physical-unit linear model of the normalized generator.
    StateSpaceModel ss;
    ss.A = m.A;
    ss.B = m.B / m.u_scale[0];
    ss.C = m.C * m.y_scale[0];
    ss.D = m.D * (m.y_scale[0] / m.u_scale[0]);
    ss.fs = m.fs;
    return ss;
}

}  // namespace fixture
