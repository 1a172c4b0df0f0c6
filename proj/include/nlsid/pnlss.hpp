#pragma once

#include <string>
#include <vector>

#include "nlsid/levmar.hpp"
#include "nlsid/linmodel.hpp"
#include "nlsid/signals.hpp"
#include "nlsid/spectral.hpp"
#include "nlsid/types.hpp"

namespace nlsid {

/// Monomials of total degree in `degrees` over the variables (x_1..x_nx, u_1..u_nu),
/// graded by degree and lexicographically descending within a degree.
struct MonomialBasis {
    int n_x = 0;
    int n_u = 0;
    std::vector<int> degrees;
    std::vector<std::vector<int>> exponents;
    std::vector<int> counts;  ///< monomials per entry of `degrees`

    int size() const { return static_cast<int>(exponents.size()); }
    int n_vars() const { return n_x + n_u; }

    Vec evaluate(const Vec& x, const Vec& u) const;
    /// Monomial values and their partial derivatives w.r.t. x (size() x n_x).
    void evaluate_with_dx(const Vec& x, const Vec& u, Vec& values, Mat& dx) const;
};

/// n_u = 0 gives a basis in the states only.
MonomialBasis build_basis(int n_x, int n_u, const std::vector<int>& degrees);

/// Polynomial nonlinear state-space model in normalized coordinates:
///   x(t+1) = A x + B u_n + E zeta(x, u_n),   y_n = C x + D u_n + F eta(x, u_n),
/// with u_n = u / u_scale and y = y_scale * y_n.
struct PnlssModel {
    Mat A, B, C, D, E, F;
    MonomialBasis state_basis;
    MonomialBasis output_basis;
    Vec x_scale;  ///< rms of the states of the initializing linear model (metadata)
    Vec u_scale;
    Vec y_scale;
    double fs = 1.0;

    int n_x() const { return static_cast<int>(A.rows()); }
    int n_u() const { return static_cast<int>(B.cols()); }
    int n_y() const { return static_cast<int>(C.rows()); }
    int n_params() const;

    void validate() const;
    /// theta = [vec A; vec B; vec C; vec D; vec E; vec F], column-major.
    Vec parameters() const;
    PnlssModel with_parameters(const Vec& theta) const;
};

struct Simulation {
    Mat y;  ///< n_y x T, physical units
    Mat x;  ///< n_x x (T + 1), normalized states including the final state
};

/// Exact recursion from x0 (zero when empty). Throws InstabilityError when ||x|| exceeds state_bound.
Simulation simulate(const PnlssModel& model, const Mat& u, const Vec& x0 = Vec(), double state_bound = 1e6);
Simulation simulate(const PnlssModel& model, const Vec& u, const Vec& x0 = Vec(), double state_bound = 1e6);

/// d y(t) / d theta for t >= first_sample, rows ordered (t, output) with the output index fastest,
/// in physical output units. `sim` must come from simulate() on the same model and input.
Mat jacobian(const PnlssModel& model, const Mat& u, const Simulation& sim, Eigen::Index first_sample = 0);

struct PnlssStructure {
    std::vector<int> state_degrees{2, 3};
    std::vector<int> output_degrees{2, 3};
    bool output_uses_input = true;
};

/// Linear model embedded with E = 0, F = 0; scales from the estimation input u and output y.
PnlssModel init_from_linear(const StateSpaceModel& ss, const PnlssStructure& structure, const Vec& u, const Vec& y);

/// Same as above with unit scales.
PnlssModel init_from_linear(const StateSpaceModel& ss, const PnlssStructure& structure = {});

/// Steady-state response of one period to a periodic input (transient periods are discarded).
Vec steady_state_output(const PnlssModel& model, const Vec& u_period, int transient_periods = 1,
                        double state_bound = 1e6);

struct FitOptions {
    enum class Validation { None, LastPeriods, Realization };

    BinList bins;             ///< selected lines; required
    std::vector<double> weights;  ///< W per selected line; empty -> 1
    int max_iterations  = 200;
    double lambda_init  = 1e-3;
    double lambda_up    = 10.0;
    double lambda_down  = 0.1;
    double lambda_max   = 1e12;
    double rel_tol      = 1e-7;
    int transient_periods = 1;
    double state_bound  = 1e6;
    Validation validation = Validation::LastPeriods;
    int validation_periods     = 2;
    int validation_realization = -1;  ///< -1: last realization

    void validate() const;
};

struct FitReport {
    double initial_cost     = 0.0;  ///< estimation cost of the initial model
    double final_cost       = 0.0;  ///< estimation cost of the returned model
    double initial_val_cost = std::numeric_limits<double>::quiet_NaN();
    double final_val_cost   = std::numeric_limits<double>::quiet_NaN();
    int chosen_iteration    = 0;
    lm::Result lm;
    std::vector<std::string> warnings;
};

struct FitResult {
    PnlssModel model;
    FitReport report;
};

/// Frequency-domain weighted least-squares cost sum |Y_mod(k) - Y(k)|^2 / W(k) of the model on
/// the period-averaged record (summed over realizations).
double wls_cost(const PnlssModel& model, const TimeRecord& data, const FitOptions& opts);

/// Levenberg-Marquardt estimation of all coefficients starting from `init`.
FitResult fit(const PnlssModel& init, const TimeRecord& data, const FitOptions& opts);

/// Time-domain rms of the steady-state output error, averaged over the periods of each
/// realization first.
double rmse(const PnlssModel& model, const TimeRecord& data, int transient_periods = 1);

/// Per-realization steady-state error (data - model) of one period, after period averaging.
std::vector<Vec> output_error(const PnlssModel& model, const TimeRecord& data, int transient_periods = 1);

}  // namespace nlsid
