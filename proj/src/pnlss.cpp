#include "nlsid/pnlss.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>

#include "nlsid/dft.hpp"
#include "nlsid/error.hpp"

namespace nlsid {
namespace {

void generate(int var, int remaining, int n_vars, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (var == n_vars - 1) {
        cur[static_cast<size_t>(var)] = remaining;
        out.push_back(cur);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        cur[static_cast<size_t>(var)] = e;
        generate(var + 1, remaining - e, n_vars, cur, out);
    }
}

double rms(const Vec& v) { return v.size() ? std::sqrt(v.squaredNorm() / v.size()) : 0.0; }

double positive_or_one(double s) { return s > 0.0 && std::isfinite(s) ? s : 1.0; }

}  // namespace

MonomialBasis build_basis(int n_x, int n_u, const std::vector<int>& degrees) {
    if (n_x < 0 || n_u < 0) throw ConfigError("basis: dimensions must be >= 0");
    std::set<int> uniq(degrees.begin(), degrees.end());
    MonomialBasis b;
    b.n_x = n_x;
    b.n_u = n_u;
    for (int d : uniq) {
        if (d < 2) throw ConfigError("basis: nonlinear degrees start at 2, got " + std::to_string(d));
        b.degrees.push_back(d);
        const size_t before = b.exponents.size();
        if (n_x + n_u > 0) {
            std::vector<int> cur(static_cast<size_t>(n_x + n_u), 0);
            generate(0, d, n_x + n_u, cur, b.exponents);
        }
        b.counts.push_back(static_cast<int>(b.exponents.size() - before));
    }
    return b;
}

Vec MonomialBasis::evaluate(const Vec& x, const Vec& u) const {
    Vec values;
    Mat dx;
    evaluate_with_dx(x, u, values, dx);
    return values;
}

void MonomialBasis::evaluate_with_dx(const Vec& x, const Vec& u, Vec& values, Mat& dx) const {
    const int nv = n_vars();
    values.resize(size());
    dx.setZero(size(), n_x);
    if (size() == 0) return;
    const int pmax = degrees.empty() ? 0 : degrees.back();
    // powers(v, e) = var_v^e
    Mat powers(nv, pmax + 1);
    for (int v = 0; v < nv; ++v) {
        const double val = v < n_x ? x[v] : u[v - n_x];
        powers(v, 0)     = 1.0;
        for (int e = 1; e <= pmax; ++e) powers(v, e) = powers(v, e - 1) * val;
    }
    for (int m = 0; m < size(); ++m) {
        const auto& ex = exponents[static_cast<size_t>(m)];
        double prod    = 1.0;
        for (int v = 0; v < nv; ++v) prod *= powers(v, ex[static_cast<size_t>(v)]);
        values[m] = prod;
        for (int i = 0; i < n_x; ++i) {
            const int e = ex[static_cast<size_t>(i)];
            if (e == 0) continue;
            double d = e * powers(i, e - 1);
            for (int v = 0; v < nv; ++v)
                if (v != i) d *= powers(v, ex[static_cast<size_t>(v)]);
            dx(m, i) = d;
        }
    }
}

int PnlssModel::n_params() const {
    return static_cast<int>(A.size() + B.size() + C.size() + D.size() + E.size() + F.size());
}

void PnlssModel::validate() const {
    const auto nx = A.rows();
    if (A.cols() != nx || B.rows() != nx || C.cols() != nx || D.rows() != C.rows() || D.cols() != B.cols())
        throw ConfigError("pnlss: inconsistent linear matrix dimensions");
    if (E.rows() != nx || E.cols() != state_basis.size()) throw ConfigError("pnlss: E does not match the state basis");
    if (F.rows() != C.rows() || F.cols() != output_basis.size()) throw ConfigError("pnlss: F does not match the output basis");
    if (state_basis.size() > 0 && (state_basis.n_x != nx || state_basis.n_u != B.cols()))
        throw ConfigError("pnlss: state basis dimensions do not match the model");
    if (output_basis.size() > 0 && (output_basis.n_x != nx || (output_basis.n_u != 0 && output_basis.n_u != B.cols())))
        throw ConfigError("pnlss: output basis dimensions do not match the model");
    if (u_scale.size() != B.cols() || y_scale.size() != C.rows()) throw ConfigError("pnlss: scale vectors do not match the model");
    if ((u_scale.array() <= 0.0).any() || (y_scale.array() <= 0.0).any()) throw ConfigError("pnlss: scales must be positive");
}

Vec PnlssModel::parameters() const {
    Vec th(n_params());
    Eigen::Index o = 0;
    for (const Mat* M : {&A, &B, &C, &D, &E, &F}) {
        th.segment(o, M->size()) = Eigen::Map<const Vec>(M->data(), M->size());
        o += M->size();
    }
    return th;
}

PnlssModel PnlssModel::with_parameters(const Vec& theta) const {
    if (theta.size() != n_params()) throw ConfigError("pnlss: parameter vector has the wrong length");
    PnlssModel m   = *this;
    Eigen::Index o = 0;
    for (Mat* M : {&m.A, &m.B, &m.C, &m.D, &m.E, &m.F}) {
        *M = Eigen::Map<const Mat>(theta.data() + o, M->rows(), M->cols());
        o += M->size();
    }
    return m;
}

Simulation simulate(const PnlssModel& model, const Mat& u, const Vec& x0, double state_bound) {
    model.validate();
    if (u.rows() != model.n_u()) throw ConfigError("simulate: input has the wrong number of channels");
    if (!u.allFinite()) throw ConfigError("simulate: non-finite input");
    const Eigen::Index T = u.cols();
    const int nx         = model.n_x();
    Simulation sim;
    sim.x.resize(nx, T + 1);
    sim.y.resize(model.n_y(), T);
    sim.x.col(0) = x0.size() ? x0 : Vec::Zero(nx);
    const Vec u_inv = model.u_scale.cwiseInverse();
    for (Eigen::Index t = 0; t < T; ++t) {
        const Vec x  = sim.x.col(t);
        const Vec un = u.col(t).cwiseProduct(u_inv);
        Vec yn       = model.C * x + model.D * un;
        if (model.output_basis.size() > 0) yn += model.F * model.output_basis.evaluate(x, un);
        sim.y.col(t) = yn.cwiseProduct(model.y_scale);
        Vec xn = model.A * x + model.B * un;
        if (model.state_basis.size() > 0) xn += model.E * model.state_basis.evaluate(x, un);
        if (!xn.allFinite() || xn.norm() > state_bound)
            throw InstabilityError("simulate: state norm exceeded " + std::to_string(state_bound) + " at step " + std::to_string(t + 1),
                                   static_cast<long>(t + 1));
        sim.x.col(t + 1) = xn;
    }
    return sim;
}

Simulation simulate(const PnlssModel& model, const Vec& u, const Vec& x0, double state_bound) {
    return simulate(model, Mat(u.transpose()), x0, state_bound);
}

Mat jacobian(const PnlssModel& model, const Mat& u, const Simulation& sim, Eigen::Index first_sample) {
    const int nx = model.n_x(), nu = model.n_u(), ny = model.n_y();
    const int nz = model.state_basis.size(), ne = model.output_basis.size();
    const Eigen::Index T = u.cols();
    if (sim.x.cols() != T + 1) throw ConfigError("jacobian: trajectory does not match the input length");
    const Eigen::Index oB = static_cast<Eigen::Index>(nx) * nx;
    const Eigen::Index oC = oB + static_cast<Eigen::Index>(nx) * nu;
    const Eigen::Index oD = oC + static_cast<Eigen::Index>(ny) * nx;
    const Eigen::Index oE = oD + static_cast<Eigen::Index>(ny) * nu;
    const Eigen::Index oF = oE + static_cast<Eigen::Index>(nx) * nz;
    const Eigen::Index np = oF + static_cast<Eigen::Index>(ny) * ne;

    Mat J = Mat::Zero((T - first_sample) * ny, np);
    Mat S = Mat::Zero(nx, np);  // d x(t) / d theta
    const Vec u_inv = model.u_scale.cwiseInverse();
    Vec zeta, eta;
    Mat dzeta, deta;
    for (Eigen::Index t = 0; t < T; ++t) {
        const Vec x  = sim.x.col(t);
        const Vec un = u.col(t).cwiseProduct(u_inv);
        model.state_basis.evaluate_with_dx(x, un, zeta, dzeta);
        model.output_basis.evaluate_with_dx(x, un, eta, deta);

        if (t >= first_sample) {
            Mat Gy = model.C;
            if (ne > 0) Gy += model.F * deta;
            Mat dy = Gy * S;
            for (int i = 0; i < ny; ++i) {
                for (int j = 0; j < nx; ++j) dy(i, oC + i + j * ny) += x[j];
                for (int j = 0; j < nu; ++j) dy(i, oD + i + j * ny) += un[j];
                for (int j = 0; j < ne; ++j) dy(i, oF + i + static_cast<Eigen::Index>(j) * ny) += eta[j];
            }
            J.middleRows((t - first_sample) * ny, ny) = model.y_scale.asDiagonal() * dy;
        }

        Mat Jx = model.A;
        if (nz > 0) Jx += model.E * dzeta;
        Mat Sn = Jx * S;
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < nx; ++j) Sn(i, i + static_cast<Eigen::Index>(j) * nx) += x[j];
            for (int j = 0; j < nu; ++j) Sn(i, oB + i + static_cast<Eigen::Index>(j) * nx) += un[j];
            for (int j = 0; j < nz; ++j) Sn(i, oE + i + static_cast<Eigen::Index>(j) * nx) += zeta[j];
        }
        S = std::move(Sn);
    }
    return J;
}

PnlssModel init_from_linear(const StateSpaceModel& ss, const PnlssStructure& structure) {
    ss.validate();
    PnlssModel m;
    const int nx = ss.order(), nu = ss.n_inputs(), ny = ss.n_outputs();
    m.A  = ss.A;
    m.B  = ss.B;
    m.C  = ss.C;
    m.D  = ss.D;
    m.fs = ss.fs;
    m.state_basis  = build_basis(nx, nu, structure.state_degrees);
    m.output_basis = build_basis(nx, structure.output_uses_input ? nu : 0, structure.output_degrees);
    m.E       = Mat::Zero(nx, m.state_basis.size());
    m.F       = Mat::Zero(ny, m.output_basis.size());
    m.x_scale = Vec::Ones(nx);
    m.u_scale = Vec::Ones(nu);
    m.y_scale = Vec::Ones(ny);
    return m;
}

PnlssModel init_from_linear(const StateSpaceModel& ss, const PnlssStructure& structure, const Vec& u, const Vec& y) {
    if (ss.n_inputs() != 1 || ss.n_outputs() != 1) throw ConfigError("init_from_linear: SISO data expected");
    PnlssModel m = init_from_linear(ss, structure);
    const int nx = ss.order();

    // rms of the linear model states driven by the estimation input
    Mat X(nx, u.size());
    Vec x = Vec::Zero(nx);
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        X.col(t) = x;
        x        = ss.A * x + ss.B.col(0) * u[t];
    }
    Vec sx(nx);
    for (int i = 0; i < nx; ++i) sx[i] = positive_or_one(rms(X.row(i).transpose()));
    const double su = positive_or_one(rms(u));
    const double sy = positive_or_one(rms(y));

    m.A       = sx.cwiseInverse().asDiagonal() * ss.A * sx.asDiagonal();
    m.B       = sx.cwiseInverse().asDiagonal() * ss.B * su;
    m.C       = ss.C * sx.asDiagonal() / sy;
    m.D       = ss.D * (su / sy);
    m.x_scale = sx;
    m.u_scale = Vec::Constant(1, su);
    m.y_scale = Vec::Constant(1, sy);
    return m;
}

Vec steady_state_output(const PnlssModel& model, const Vec& u_period, int transient_periods, double state_bound) {
    const Vec u          = tile(u_period, transient_periods + 1);
    const Simulation sim = simulate(model, u, Vec(), state_bound);
    return sim.y.row(0).tail(u_period.size()).transpose();
}

void FitOptions::validate() const {
    if (bins.empty()) throw ConfigError("fit: no frequency lines selected");
    if (!weights.empty()) {
        if (weights.size() != bins.size()) throw ConfigError("fit: one weight per selected line required");
        for (double w : weights)
            if (!(w > 0.0)) throw ConfigError("fit: weights must be positive on selected lines");
    }
    if (max_iterations < 0) throw ConfigError("fit: max_iterations must be >= 0");
    if (transient_periods < 1) throw ConfigError("fit: at least one transient period is simulated");
    if (validation_periods < 1) throw ConfigError("fit: validation_periods must be >= 1");
}

namespace {

struct PeriodData {
    Vec u;  // one period of the input
    CVec Y;  // measured output on the selected lines
    Vec y;  // one period of the output
};

PeriodData make_period(const TimeRecord& rec, int r, const BinList& bins) {
    PeriodData d;
    d.u          = rec.u_period(r, 0);
    d.y          = rec.y_period(r, 0);
    const CVec Y = dft::forward(std::span<const double>(d.y.data(), static_cast<size_t>(d.y.size())));
    d.Y.resize(static_cast<Eigen::Index>(bins.size()));
    for (size_t i = 0; i < bins.size(); ++i) {
        if (bins[i] < 0 || bins[i] >= Y.size()) throw ConfigError("fit: selected line outside the spectrum");
        d.Y[static_cast<Eigen::Index>(i)] = Y[bins[i]];
    }
    return d;
}

struct DataSplit {
    std::vector<PeriodData> estimation;
    std::vector<PeriodData> validation;
    std::vector<std::string> warnings;
};

DataSplit split(const TimeRecord& data, const FitOptions& opts) {
    DataSplit s;
    auto add_all = [&](const TimeRecord& rec, std::vector<PeriodData>& dst) {
        const TimeRecord avg = average_periods(rec);
        for (int r = 0; r < avg.R; ++r) dst.push_back(make_period(avg, r, opts.bins));
    };
    switch (opts.validation) {
        case FitOptions::Validation::None: add_all(data, s.estimation); break;
        case FitOptions::Validation::LastPeriods: {
            const int k = opts.validation_periods;
            if (data.P <= k) {
                s.warnings.push_back("fit: " + std::to_string(data.P) + " period(s) cannot hold out " + std::to_string(k) +
                                     "; no validation split");
                add_all(data, s.estimation);
            } else {
                add_all(select_periods(data, 0, data.P - k), s.estimation);
                add_all(select_periods(data, data.P - k, k), s.validation);
            }
            break;
        }
        case FitOptions::Validation::Realization: {
            if (data.R < 2) {
                s.warnings.push_back("fit: a single realization cannot be held out; no validation split");
                add_all(data, s.estimation);
                break;
            }
            const int v = opts.validation_realization < 0 ? data.R - 1 : opts.validation_realization;
            if (v >= data.R) throw ConfigError("fit: validation realization out of range");
            std::vector<int> est;
            for (int r = 0; r < data.R; ++r)
                if (r != v) est.push_back(r);
            add_all(select_realizations(data, est), s.estimation);
            add_all(select_realizations(data, {v}), s.validation);
            break;
        }
    }
    return s;
}

Vec inverse_sqrt_weights(const FitOptions& opts) {
    Vec w = Vec::Ones(static_cast<Eigen::Index>(opts.bins.size()));
    for (size_t i = 0; i < opts.weights.size(); ++i) w[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(opts.weights[i]);
    return w;
}

// Stacked [Re; Im] of (Y_mod - Y) / sqrt(W) for every period set, with optional Jacobian.
std::optional<lm::Evaluation> evaluate(const PnlssModel& model, const std::vector<PeriodData>& sets, const FitOptions& opts,
                                       const Vec& isw, bool with_jac) {
    const auto nb = static_cast<Eigen::Index>(opts.bins.size());
    lm::Evaluation ev;
    ev.residual.resize(2 * nb * static_cast<Eigen::Index>(sets.size()));
    if (with_jac) ev.jacobian.resize(ev.residual.size(), model.n_params());
    Eigen::Index row = 0;
    for (const auto& d : sets) {
        const Eigen::Index N = d.u.size();
        const Mat u          = tile(d.u, opts.transient_periods + 1).transpose();
        Simulation sim;
        try {
            sim = simulate(model, u, Vec(), opts.state_bound);
        } catch (const InstabilityError&) {
            return std::nullopt;
        }
        const Vec y_last = sim.y.row(0).tail(N).transpose();
        const CVec Ym    = dft::forward(std::span<const double>(y_last.data(), static_cast<size_t>(N)));
        for (Eigen::Index i = 0; i < nb; ++i) {
            const cplx e          = (Ym[opts.bins[static_cast<size_t>(i)]] - d.Y[i]) * isw[i];
            ev.residual[row + i]      = e.real();
            ev.residual[row + nb + i] = e.imag();
        }
        if (with_jac) {
            const Mat Jt = jacobian(model, u, sim, static_cast<Eigen::Index>(opts.transient_periods) * N);
            const CMat Jf = dft::forward_columns(Jt);
            for (Eigen::Index i = 0; i < nb; ++i) {
                const auto k = opts.bins[static_cast<size_t>(i)];
                ev.jacobian.row(row + i)      = Jf.row(k).real() * isw[i];
                ev.jacobian.row(row + nb + i) = Jf.row(k).imag() * isw[i];
            }
        }
        row += 2 * nb;
    }
    if (!ev.residual.allFinite()) return std::nullopt;
    return ev;
}

double cost_on(const PnlssModel& model, const std::vector<PeriodData>& sets, const FitOptions& opts, const Vec& isw) {
    auto ev = evaluate(model, sets, opts, isw, false);
    return ev ? ev->residual.squaredNorm() : std::numeric_limits<double>::infinity();
}

}  // namespace

double wls_cost(const PnlssModel& model, const TimeRecord& data, const FitOptions& opts) {
    opts.validate();
    std::vector<PeriodData> sets;
    const TimeRecord avg = average_periods(data);
    for (int r = 0; r < avg.R; ++r) sets.push_back(make_period(avg, r, opts.bins));
    return cost_on(model, sets, opts, inverse_sqrt_weights(opts));
}

FitResult fit(const PnlssModel& init, const TimeRecord& data, const FitOptions& opts) {
    init.validate();
    data.validate();
    opts.validate();
    if (init.n_u() != 1 || init.n_y() != 1) throw ConfigError("fit: SISO models only");
    const DataSplit parts = split(data, opts);
    const Vec isw         = inverse_sqrt_weights(opts);

    FitResult out;
    out.report.warnings = parts.warnings;
    if (!evaluate(init, parts.estimation, opts, isw, false))
        throw NumericalError("fit: the initial model is unstable on the estimation input");

    const bool has_val = !parts.validation.empty();
    double best_val    = std::numeric_limits<double>::infinity();
    Vec best_theta     = init.parameters();
    int accept_index   = -1;
    int best_index     = 0;
    int infeasible     = 0;

    lm::Problem problem = [&](const Vec& th, bool with_jac) {
        auto ev = evaluate(init.with_parameters(th), parts.estimation, opts, isw, with_jac);
        if (!ev) ++infeasible;
        return ev;
    };
    lm::AcceptCallback on_accept = [&](const Vec& th, double) {
        ++accept_index;
        if (!has_val) return std::numeric_limits<double>::quiet_NaN();
        const double v = cost_on(init.with_parameters(th), parts.validation, opts, isw);
        if (v < best_val) {
            best_val   = v;
            best_theta = th;
            best_index = accept_index;
        }
        return v;
    };

    lm::Options lmo;
    lmo.lambda_init    = opts.lambda_init;
    lmo.lambda_up      = opts.lambda_up;
    lmo.lambda_down    = opts.lambda_down;
    lmo.lambda_max     = opts.lambda_max;
    lmo.max_iterations = opts.max_iterations;
    lmo.rel_tol        = opts.rel_tol;

    out.report.lm           = lm::minimize(problem, init.parameters(), lmo, on_accept);
    out.report.initial_cost = out.report.lm.initial_cost;

    const Vec theta = has_val ? best_theta : out.report.lm.theta;
    out.model       = init.with_parameters(theta);
    out.report.final_cost       = cost_on(out.model, parts.estimation, opts, isw);
    out.report.chosen_iteration = has_val ? best_index : accept_index;
    if (has_val) {
        out.report.initial_val_cost = out.report.lm.log.front().val_cost;
        out.report.final_val_cost   = best_val;
    }
    if (out.report.lm.status == lm::Status::LambdaCap && infeasible > 0 && out.report.lm.accepted_steps == 0)
        out.report.warnings.push_back("fit: every trial step was unstable; returning the initial model");
    else if (infeasible > 0)
        out.report.warnings.push_back("fit: " + std::to_string(infeasible) + " trial step(s) rejected for instability");
    return out;
}

std::vector<Vec> output_error(const PnlssModel& model, const TimeRecord& data, int transient_periods) {
    const TimeRecord avg = average_periods(data);
    std::vector<Vec> err;
    for (int r = 0; r < avg.R; ++r) {
        const Vec u = avg.u_period(r, 0);
        const Vec y = avg.y_period(r, 0);
        err.push_back(y - steady_state_output(model, u, transient_periods));
    }
    return err;
}

double rmse(const PnlssModel& model, const TimeRecord& data, int transient_periods) {
    double acc = 0.0;
    Eigen::Index n = 0;
    for (const Vec& e : output_error(model, data, transient_periods)) {
        acc += e.squaredNorm();
        n += e.size();
    }
    return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace nlsid
