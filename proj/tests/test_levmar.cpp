#include <doctest.h>

#include <cmath>
#include <random>

#include "nlsid/levmar.hpp"
#include "oracles.hpp"

using namespace nlsid;

namespace {

Vec Vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

lm::Problem rosenbrock() {
    return [](const Vec& th, bool with_jac) -> std::optional<lm::Evaluation> {
        lm::Evaluation ev;
        ev.residual = Vec(2);
        ev.residual << 10.0 * (th[1] - th[0] * th[0]), 1.0 - th[0];
        if (with_jac) {
            ev.jacobian = Mat(2, 2);
            ev.jacobian << -20.0 * th[0], 10.0, -1.0, 0.0;
        }
        return ev;
    };
}

lm::Problem linear_problem(const Mat& A, const Vec& b) {
    return [A, b](const Vec& th, bool with_jac) -> std::optional<lm::Evaluation> {
        lm::Evaluation ev;
        ev.residual = A * th - b;
        if (with_jac) ev.jacobian = A;
        return ev;
    };
}

void check_monotone(const lm::Result& r) {
    double last = r.log.front().cost;
    for (const auto& rec : r.log) {
        if (!rec.accepted) continue;
        CHECK(rec.cost <= last);
        last = rec.cost;
    }
}

}  // namespace

TEST_CASE("levmar: Rosenbrock valley reaches the minimum with a monotone cost") {
    lm::Options o;
    o.rel_tol    = 0.0;
    o.cost_floor = 1e-24;
    const lm::Result r = lm::minimize(rosenbrock(), Vec2(-1.2, 1.0), o);
    CHECK(r.status == lm::Status::CostFloor);
    CHECK(std::abs(r.theta[0] - 1.0) < 1e-10);
    CHECK(std::abs(r.theta[1] - 1.0) < 1e-10);
    CHECK(r.initial_cost == doctest::Approx(24.2));
    check_monotone(r);
}

TEST_CASE("levmar: linear least squares matches the QR solution") {
    std::mt19937_64 rng(1);
    Mat A = Mat::Random(40, 5);
    A.col(3) *= 1e4;  // badly scaled column
    const Vec b    = oracle::gaussian(40, 1.0, rng);
    const Vec ref  = A.colPivHouseholderQr().solve(b);
    lm::Options o;
    o.rel_tol          = 1e-14;
    const lm::Result r = lm::minimize(linear_problem(A, b), Vec::Zero(5), o);
    CHECK(r.status == lm::Status::Converged);
    CHECK((A * r.theta - b).squaredNorm() == doctest::Approx((A * ref - b).squaredNorm()).epsilon(1e-12));
    CHECK((r.theta - ref).cwiseQuotient(ref.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-6);
    check_monotone(r);
}

TEST_CASE("levmar: infeasible trial points are rejected like cost increases") {
    // Minimum of (x - 3)^2 restricted to x < 2 lies on the boundary; x >= 2 is infeasible.
    int infeasible_calls = 0;
    lm::Problem p        = [&](const Vec& th, bool with_jac) -> std::optional<lm::Evaluation> {
        if (th[0] >= 2.0) {
            ++infeasible_calls;
            return std::nullopt;
        }
        lm::Evaluation ev;
        ev.residual = Vec::Constant(1, th[0] - 3.0);
        if (with_jac) ev.jacobian = Mat::Ones(1, 1);
        return ev;
    };
    const lm::Result r = lm::minimize(p, Vec::Zero(1), {});
    CHECK(infeasible_calls > 0);
    CHECK(r.theta[0] < 2.0);
    CHECK(r.theta[0] > 1.9);
    check_monotone(r);
}

TEST_CASE("levmar: infeasible start, lambda cap and iteration limit") {
    lm::Problem never = [](const Vec&, bool) -> std::optional<lm::Evaluation> { return std::nullopt; };
    const lm::Result a = lm::minimize(never, Vec::Zero(2), {});
    CHECK(a.status == lm::Status::Infeasible);
    CHECK(std::isinf(a.cost));

    // Stationary with a nonzero residual: no step can decrease the cost.
    lm::Problem flat = [](const Vec& th, bool with_jac) -> std::optional<lm::Evaluation> {
        lm::Evaluation ev;
        ev.residual = Vec2(th[0] * th[0], 1.0);
        if (with_jac) ev.jacobian = Vec2(2.0 * th[0], 0.0);
        return ev;
    };
    const lm::Result c = lm::minimize(flat, Vec::Zero(1), {});
    CHECK(c.status == lm::Status::LambdaCap);
    CHECK(c.theta[0] == 0.0);
    CHECK(c.accepted_steps == 0);

    lm::Options o;
    o.max_iterations   = 3;
    o.rel_tol          = 0.0;
    const lm::Result d = lm::minimize(rosenbrock(), Vec2(-1.2, 1.0), o);
    CHECK(d.status == lm::Status::MaxIterations);
    CHECK(d.iterations == 3);
}

TEST_CASE("levmar: the acceptance callback sees every accepted iterate") {
    int calls = 0;
    lm::AcceptCallback cb = [&](const Vec& th, double cost) {
        ++calls;
        return cost + th.norm();
    };
    const lm::Result r = lm::minimize(rosenbrock(), Vec2(-1.2, 1.0), {}, cb);
    CHECK(calls == r.accepted_steps + 1);
    CHECK(r.log.front().iteration == 0);
    CHECK(r.log.front().val_cost == doctest::Approx(24.2 + std::sqrt(1.44 + 1.0)));
    for (const auto& rec : r.log) CHECK(rec.accepted == !std::isnan(rec.val_cost));
}
