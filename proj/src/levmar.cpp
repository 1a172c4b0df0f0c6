#include "nlsid/levmar.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "nlsid/error.hpp"

namespace nlsid::lm {

const char* to_string(Status s) {
    switch (s) {
        case Status::Converged: return "converged";
        case Status::CostFloor: return "cost_floor";
        case Status::MaxIterations: return "max_iterations";
        case Status::LambdaCap: return "lambda_cap";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

Result minimize(const Problem& problem, const Vec& theta0, const Options& opts, const AcceptCallback& on_accept) {
    Result res;
    res.theta = theta0;

    auto current = problem(theta0, true);
    if (!current) {
        res.status = Status::Infeasible;
        res.cost = res.initial_cost = std::numeric_limits<double>::infinity();
        return res;
    }
    double cost      = current->residual.squaredNorm();
    res.initial_cost = cost;
    res.cost         = cost;
    res.log.push_back({0, opts.lambda_init, cost, true, on_accept ? on_accept(res.theta, cost) : std::numeric_limits<double>::quiet_NaN()});

    if (cost <= opts.cost_floor) {
        res.status = Status::CostFloor;
        return res;
    }

    double lambda = opts.lambda_init;
    res.status    = Status::MaxIterations;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        res.iterations = it;
        const Mat& J   = current->jacobian;
        const Vec& r   = current->residual;

        // Marquardt scaling: solve in units where every Jacobian column has unit norm.
        Vec scale = J.colwise().norm().transpose();
        for (Eigen::Index j = 0; j < scale.size(); ++j)
            if (!(scale[j] > 0.0)) scale[j] = 1.0;
        const Mat Js = J * scale.cwiseInverse().asDiagonal();
        Eigen::BDCSVD<Mat> svd(Js, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec s   = svd.singularValues();
        const Vec utr = svd.matrixU().transpose() * r;

        bool accepted = false;
        while (true) {
            // delta_s = -V diag(s / (s^2 + lambda)) U^T r
            const Vec coef  = (s.array() / (s.array().square() + lambda)).matrix().cwiseProduct(utr);
            const Vec delta = -(svd.matrixV() * coef).cwiseQuotient(scale);
            const Vec trial = res.theta + delta;
            auto eval       = problem(trial, false);
            const double trial_cost = eval ? eval->residual.squaredNorm() : std::numeric_limits<double>::infinity();
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                const double rel = (cost - trial_cost) / cost;
                res.theta        = trial;
                cost             = trial_cost;
                res.cost         = cost;
                ++res.accepted_steps;
                lambda = std::max(lambda * opts.lambda_down, 1e-20);
                const double val = on_accept ? on_accept(res.theta, cost) : std::numeric_limits<double>::quiet_NaN();
                res.log.push_back({it, lambda, cost, true, val});
                accepted = true;
                if (cost <= opts.cost_floor) {
                    res.status = Status::CostFloor;
                    return res;
                }
                if (rel < opts.rel_tol) {
                    res.status = Status::Converged;
                    return res;
                }
                current = problem(res.theta, true);
                if (!current) throw NumericalError("levenberg-marquardt: accepted iterate became infeasible");
                break;
            }
            lambda *= opts.lambda_up;
            res.log.push_back({it, lambda, cost, false, std::numeric_limits<double>::quiet_NaN()});
            if (lambda > opts.lambda_max) {
                res.status = Status::LambdaCap;
                return res;
            }
        }
        if (!accepted) break;
    }
    return res;
}

}  // namespace nlsid::lm
