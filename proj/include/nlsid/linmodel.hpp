#pragma once

#include <string>
#include <vector>

#include "nlsid/levmar.hpp"
#include "nlsid/lpm.hpp"
#include "nlsid/types.hpp"

namespace nlsid {

/// Discrete-time transfer function B(q^-1) / A(q^-1) with a(0) = 1.
struct RationalModel {
    Vec b;  ///< b_0 .. b_nb
    Vec a;  ///< a_0 .. a_na, a_0 == 1

    int nb() const { return static_cast<int>(b.size()) - 1; }
    int na() const { return static_cast<int>(a.size()) - 1; }
    int n_params() const { return nb() + na() + 1; }

    /// Evaluate at z (powers of z^-1).
    cplx eval(cplx z) const;
    /// Response on DFT lines z_k = exp(j 2 pi k / N).
    CVec frf(const BinList& bins, int N) const;
    /// Poles: roots of z^n_a A(z^-1).
    CVec poles() const;
};

/// Linear discrete-time state-space model x(t+1) = A x + B u, y = C x + D u.
struct StateSpaceModel {
    Mat A;
    Mat B;
    Mat C;
    Mat D;
    double fs = 1.0;

    int order() const { return static_cast<int>(A.rows()); }
    int n_inputs() const { return static_cast<int>(B.cols()); }
    int n_outputs() const { return static_cast<int>(C.rows()); }

    void validate() const;
    /// SISO transfer function C (zI - A)^-1 B + D.
    cplx eval(cplx z) const;
    CVec frf(const BinList& bins, int N) const;
    bool is_stable() const;
    /// Time-domain response from x0 (zero when empty) to the input sequence (SISO).
    Vec simulate(const Vec& u, const Vec& x0 = Vec()) const;
    /// Steady-state response to a periodic input: run `transient_periods` extra periods first.
    Vec simulate_periodic(const Vec& u_period, int transient_periods = 1) const;
};

struct RationalFitOptions {
    int sk_iterations  = 10;   ///< Sanathanan-Koerner reweighting passes after the linearized start
    lm::Options lm     = {};
    double cond_limit  = 1e12; ///< above this, regularize the linearized solve
};

struct RationalFit {
    RationalModel model;
    double cost = 0.0;  ///< sum_k |G_rat(z_k) - G(k)|^2 / var_total(k)
    int bins    = 0;    ///< F, fitted lines
    std::vector<std::string> warnings;
};

/// Weighted rational fit on the usable lines of the BLA.
RationalFit fit_rational(const BlaEstimate& bla, int nb, int na, const RationalFitOptions& opts = {});

struct MdlCandidate {
    int nb = 0;
    int na = 0;
    double cost = 0.0;
    double mdl  = 0.0;
};

struct MdlSelection {
    int nb = 0;
    int na = 0;
    RationalFit fit;
    std::vector<MdlCandidate> table;
};

/// Scan 0 <= nb, na <= max_order and pick the minimizer of F ln(V/F) + n_theta ln F.
MdlSelection mdl_select(const BlaEstimate& bla, int max_order, const RationalFitOptions& opts = {});

struct Realization {
    StateSpaceModel model;
    Vec hankel_singular_values;
    int discarded_unstable = 0;
    std::vector<std::string> warnings;
};

/// Balanced realization of the stable part of a rational model; unstable modes are
/// split off and discarded with a warning.
Realization balanced_realization(const RationalModel& rat, double fs = 1.0);

/// Balance an already stable state-space model (Laub's square-root algorithm).
Realization balance(const StateSpaceModel& ss);

/// Solve X = A X A^T + Q for stable A.
Mat discrete_lyapunov(const Mat& A, const Mat& Q);

struct Gramians {
    Mat controllability;
    Mat observability;
};
Gramians gramians(const StateSpaceModel& ss);

struct MlRefineResult {
    StateSpaceModel model;
    double initial_cost = 0.0;
    double cost         = 0.0;
    lm::Result lm;
    std::vector<double> accepted_costs;
};

/// Weighted FRF misfit sum_k |G(k) - G_ss(z_k)|^2 / var_total(k) over the usable lines.
double frf_cost(const StateSpaceModel& ss, const BlaEstimate& bla);

/// Maximum-likelihood refinement of (A, B, C, D) on the BLA with Levenberg-Marquardt.
MlRefineResult ml_refine(const StateSpaceModel& ss, const BlaEstimate& bla, const lm::Options& opts = {});

}  // namespace nlsid
