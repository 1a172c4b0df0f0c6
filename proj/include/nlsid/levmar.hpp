#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nlsid/types.hpp"

namespace nlsid::lm {

struct Options {
    double lambda_init = 1e-3;  ///< relative to the column-normalized Jacobian
    double lambda_up   = 10.0;
    double lambda_down = 0.1;
    double lambda_max  = 1e12;  ///< divergence guard: stop with the best iterate beyond this
    int max_iterations = 200;
    double rel_tol     = 1e-10;  ///< stop when an accepted step changes the cost less than this (relative)
    double cost_floor  = 0.0;    ///< stop when the cost is at or below this value
};

/// Residual vector and (optionally) its Jacobian at a parameter vector.
struct Evaluation {
    Vec residual;
    Mat jacobian;
};

/// Returns std::nullopt when the parameters are infeasible (e.g. the model is unstable);
/// such trial steps are rejected like a cost increase.
using Problem = std::function<std::optional<Evaluation>(const Vec& theta, bool with_jacobian)>;

enum class Status { Converged, CostFloor, MaxIterations, LambdaCap, Infeasible };

const char* to_string(Status s);

struct IterationRecord {
    int iteration   = 0;
    double lambda   = 0.0;
    double cost     = 0.0;  ///< cost of the current (accepted) iterate
    bool accepted   = false;
    double val_cost = std::numeric_limits<double>::quiet_NaN();
};

struct Result {
    Vec theta;
    double initial_cost = 0.0;
    double cost         = 0.0;
    int iterations      = 0;
    int accepted_steps  = 0;
    Status status       = Status::Converged;
    std::vector<IterationRecord> log;
};

/// Called after every accepted step with the new iterate and cost; the returned value is
/// stored as the iteration's validation cost.
using AcceptCallback = std::function<double(const Vec& theta, double cost)>;

/// Levenberg-Marquardt minimization of ||r(theta)||^2 with Marquardt column scaling.
/// Accepted steps strictly decrease the cost.
Result minimize(const Problem& problem, const Vec& theta0, const Options& opts = {},
                const AcceptCallback& on_accept = {});

}  // namespace nlsid::lm
