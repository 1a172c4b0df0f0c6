#include "nlsid/linmodel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlsid/error.hpp"

namespace nlsid {
namespace {

cplx z_of(int k, int N) { return std::polar(1.0, 2.0 * kPi * k / N); }

cplx poly_inv(const Vec& c, cplx zinv) {
    // sum_i c_i zinv^i by Horner
    cplx acc = 0.0;
    for (Eigen::Index i = c.size() - 1; i >= 0; --i) acc = acc * zinv + c[i];
    return acc;
}

struct WeightedData {
    std::vector<int> bins;
    CVec G;
    Vec w;  // 1 / var_total
    int N = 0;
};

WeightedData weighted_data(const BlaEstimate& bla) {
    WeightedData d;
    d.N = bla.N;
    if (d.N <= 0) throw ConfigError("BLA estimate carries no period length N");
    const auto idx = bla.usable();
    d.G.resize(static_cast<Eigen::Index>(idx.size()));
    d.w.resize(d.G.size());
    double min_pos = std::numeric_limits<double>::infinity();
    for (size_t i : idx) {
        const double v = bla.var_total[static_cast<Eigen::Index>(i)];
        if (v > 0.0) min_pos = std::min(min_pos, v);
    }
    for (size_t j = 0; j < idx.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(idx[j]);
        d.bins.push_back(bla.bins[idx[j]]);
        d.G[static_cast<Eigen::Index>(j)] = bla.G[i];
        double v = bla.var_total[i];
        // Lines with a zero variance estimate get the smallest positive variance; with no
        // variance information at all the fit is unweighted.
        if (!(v > 0.0)) v = std::isfinite(min_pos) ? min_pos : 1.0;
        d.w[static_cast<Eigen::Index>(j)] = 1.0 / v;
    }
    return d;
}

// Linearized (Levi) problem  min sum w |B(z) - G A(z)|^2  with a_0 = 1.
// Unknowns: [b_0..b_nb, a_1..a_na].
Vec linearized_solve(const WeightedData& d, int nb, int na, const Vec& w, double cond_limit, bool& regularized) {
    const auto F   = static_cast<Eigen::Index>(d.bins.size());
    const int cols = nb + 1 + na;
    Mat M(2 * F, cols);
    Vec rhs(2 * F);
    for (Eigen::Index k = 0; k < F; ++k) {
        const double sw = std::sqrt(w[k]);
        const cplx zinv = std::conj(z_of(d.bins[static_cast<size_t>(k)], d.N));
        cplx p          = 1.0;
        for (int i = 0; i <= nb; ++i) {
            M(k, i)     = sw * p.real();
            M(F + k, i) = sw * p.imag();
            p *= zinv;
        }
        p = zinv;
        for (int i = 1; i <= na; ++i) {
            const cplx v        = -d.G[k] * p;
            M(k, nb + i)     = sw * v.real();
            M(F + k, nb + i) = sw * v.imag();
            p *= zinv;
        }
        rhs[k]     = sw * d.G[k].real();
        rhs[F + k] = sw * d.G[k].imag();
    }
    Vec scale = M.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (!(scale[j] > 0.0)) scale[j] = 1.0;
    const Mat Ms = M * scale.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<Mat> svd(Ms, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec s      = svd.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    const double smin = s.size() ? s[s.size() - 1] : 0.0;
    double delta      = 0.0;
    regularized       = false;
    if (smax > 0.0 && (smin <= 0.0 || smax / smin > cond_limit)) {
        delta       = std::pow(smax / cond_limit, 2);
        regularized = true;
    }
    const Vec utb  = svd.matrixU().transpose() * rhs;
    Vec coef(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) coef[i] = s[i] > 0.0 ? s[i] / (s[i] * s[i] + delta) * utb[i] : 0.0;
    return (svd.matrixV() * coef).cwiseQuotient(scale);
}

RationalModel unpack_rational(const Vec& theta, int nb, int na) {
    RationalModel m;
    m.b = theta.head(nb + 1);
    m.a.resize(na + 1);
    m.a[0] = 1.0;
    m.a.tail(na) = theta.segment(nb + 1, na);
    return m;
}

double rational_cost(const RationalModel& m, const WeightedData& d) {
    double c = 0.0;
    for (size_t k = 0; k < d.bins.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        c += d.w[kk] * std::norm(m.eval(z_of(d.bins[k], d.N)) - d.G[kk]);
    }
    return c;
}

Mat companion(const Vec& a) {
    // Roots of z^n + a_1 z^(n-1) + ... + a_n.
    const auto n = a.size() - 1;
    Mat A        = Mat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) A(0, j) = -a[j + 1];
    for (Eigen::Index i = 1; i < n; ++i) A(i, i - 1) = 1.0;
    return A;
}

Mat psd_sqrt_factor(const Mat& W) {
    // W = L L^T; Cholesky when positive definite, otherwise an eigenvalue factor with clipping.
    Eigen::LLT<Mat> llt(W);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Mat> es(W);
    const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

cplx RationalModel::eval(cplx z) const {
    const cplx zinv = 1.0 / z;
    return poly_inv(b, zinv) / poly_inv(a, zinv);
}

CVec RationalModel::frf(const BinList& bins, int N) const {
    CVec G(static_cast<Eigen::Index>(bins.size()));
    for (size_t i = 0; i < bins.size(); ++i) G[static_cast<Eigen::Index>(i)] = eval(z_of(bins[i], N));
    return G;
}

CVec RationalModel::poles() const {
    if (na() <= 0) return CVec();
    Vec an = a / a[0];
    return Eigen::EigenSolver<Mat>(companion(an), false).eigenvalues();
}

void StateSpaceModel::validate() const {
    const auto n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols())
        throw ConfigError("state-space: inconsistent matrix dimensions");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
        throw NumericalError("state-space: non-finite entries");
}

cplx StateSpaceModel::eval(cplx z) const {
    const auto n = A.rows();
    cplx g       = D(0, 0);
    if (n == 0) return g;
    const CMat zI_A = z * CMat::Identity(n, n) - A.cast<cplx>();
    const CVec x    = zI_A.partialPivLu().solve(B.col(0).cast<cplx>());
    return g + (C.row(0).cast<cplx>() * x)(0, 0);
}

CVec StateSpaceModel::frf(const BinList& bins, int N) const {
    CVec G(static_cast<Eigen::Index>(bins.size()));
    for (size_t i = 0; i < bins.size(); ++i) G[static_cast<Eigen::Index>(i)] = eval(z_of(bins[i], N));
    return G;
}

bool StateSpaceModel::is_stable() const {
    if (A.rows() == 0) return true;
    const CVec ev = Eigen::EigenSolver<Mat>(A, false).eigenvalues();
    return ev.cwiseAbs().maxCoeff() < 1.0;
}

Vec StateSpaceModel::simulate(const Vec& u, const Vec& x0) const {
    const auto n = A.rows();
    Vec x        = x0.size() ? x0 : Vec::Zero(n);
    Vec y(u.size());
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        y[t] = (C * x)(0) + D(0, 0) * u[t];
        x    = A * x + B.col(0) * u[t];
    }
    return y;
}

Vec StateSpaceModel::simulate_periodic(const Vec& u_period, int transient_periods) const {
    const auto N = u_period.size();
    Vec u(N * (transient_periods + 1));
    for (int p = 0; p <= transient_periods; ++p) u.segment(p * N, N) = u_period;
    return simulate(u).tail(N);
}

RationalFit fit_rational(const BlaEstimate& bla, int nb, int na, const RationalFitOptions& opts) {
    if (nb < 0 || na < 0) throw ConfigError("rational fit: orders must be >= 0");
    const WeightedData d = weighted_data(bla);
    const int n_theta    = nb + na + 1;
    if (static_cast<int>(d.bins.size()) < n_theta)
        throw InsufficientDataError("rational fit: " + std::to_string(d.bins.size()) + " usable lines for " +
                                    std::to_string(n_theta) + " parameters");

    RationalFit fit;
    fit.bins = static_cast<int>(d.bins.size());
    bool regularized = false;
    Vec theta        = linearized_solve(d, nb, na, d.w, opts.cond_limit, regularized);

    // Sanathanan-Koerner: divide out the previous denominator to approach the output-error weighting.
    for (int it = 0; it < opts.sk_iterations && na > 0; ++it) {
        const RationalModel prev = unpack_rational(theta, nb, na);
        Vec w(d.w.size());
        for (Eigen::Index k = 0; k < w.size(); ++k)
            w[k] = d.w[k] / std::norm(poly_inv(prev.a, std::conj(z_of(d.bins[static_cast<size_t>(k)], d.N))));
        bool reg = false;
        const Vec next = linearized_solve(d, nb, na, w, opts.cond_limit, reg);
        regularized = regularized || reg;
        if (!next.allFinite()) break;
        theta = next;
    }
    if (regularized) fit.warnings.push_back("rational fit (" + std::to_string(nb) + "," + std::to_string(na) +
                                            "): ill-conditioned linearized problem, regularized solve used");

    // Gauss-Newton / Levenberg-Marquardt on the true output-error residual.
    const auto F = static_cast<Eigen::Index>(d.bins.size());
    lm::Problem problem = [&](const Vec& th, bool with_jac) -> std::optional<lm::Evaluation> {
        const RationalModel m = unpack_rational(th, nb, na);
        lm::Evaluation ev;
        ev.residual.resize(2 * F);
        if (with_jac) ev.jacobian.resize(2 * F, n_theta);
        for (Eigen::Index k = 0; k < F; ++k) {
            const double sw = std::sqrt(d.w[k]);
            const cplx zinv = std::conj(z_of(d.bins[static_cast<size_t>(k)], d.N));
            const cplx Bz   = poly_inv(m.b, zinv);
            const cplx Az   = poly_inv(m.a, zinv);
            if (std::abs(Az) < 1e-300) return std::nullopt;
            const cplx e = sw * (Bz / Az - d.G[k]);
            ev.residual[k]     = e.real();
            ev.residual[F + k] = e.imag();
            if (!with_jac) continue;
            cplx p = 1.0;
            for (int i = 0; i <= nb; ++i) {
                const cplx v     = sw * p / Az;
                ev.jacobian(k, i)     = v.real();
                ev.jacobian(F + k, i) = v.imag();
                p *= zinv;
            }
            p = zinv;
            for (int i = 1; i <= na; ++i) {
                const cplx v = -sw * Bz * p / (Az * Az);
                ev.jacobian(k, nb + i)     = v.real();
                ev.jacobian(F + k, nb + i) = v.imag();
                p *= zinv;
            }
        }
        if (!ev.residual.allFinite()) return std::nullopt;
        return ev;
    };
    lm::Options lmo = opts.lm;
    if (lmo.cost_floor == 0.0) {
        double scale = 0.0;
        for (Eigen::Index k = 0; k < F; ++k) scale += d.w[k] * std::norm(d.G[k]);
        lmo.cost_floor = 1e4 * std::pow(std::numeric_limits<double>::epsilon(), 2) * scale;
    }
    const lm::Result res = minimize(problem, theta, lmo);
    if (res.theta.allFinite()) theta = res.theta;

    fit.model = unpack_rational(theta, nb, na);
    fit.cost  = rational_cost(fit.model, d);
    return fit;
}

MdlSelection mdl_select(const BlaEstimate& bla, int max_order, const RationalFitOptions& opts) {
    if (max_order < 1) throw ConfigError("mdl: max_order must be >= 1");
    MdlSelection sel;
    double best = std::numeric_limits<double>::infinity();
    for (int na = 0; na <= max_order; ++na) {
        for (int nb = 0; nb <= max_order; ++nb) {
            RationalFit fit;
            try {
                fit = fit_rational(bla, nb, na, opts);
            } catch (const InsufficientDataError&) {
                continue;
            }
            const double F   = fit.bins;
            const int ntheta = nb + na + 1;
            const double V   = std::max(fit.cost, F * 1e-300);
            const double mdl = F * std::log(V / F) + ntheta * std::log(F);
            sel.table.push_back({nb, na, fit.cost, mdl});
            // Strict improvement keeps the smaller model on ties.
            if (!std::isfinite(best) || mdl < best - 1e-9 * std::abs(best)) {
                best   = mdl;
                sel.nb = nb;
                sel.na = na;
                sel.fit = std::move(fit);
            }
        }
    }
    if (sel.table.empty()) throw InsufficientDataError("mdl: no order pair could be fitted");
    return sel;
}

Mat discrete_lyapunov(const Mat& A, const Mat& Q) {
    const auto n = A.rows();
    if (n == 0) return Mat(0, 0);
    // Complex Schur A = U T U^H turns X = A X A^T + Q into Y = T Y T^H + F, solved column-wise from the last.
    Eigen::ComplexSchur<Mat> schur(A, true);
    if (schur.info() != Eigen::Success) throw NumericalError("lyapunov: Schur decomposition failed");
    const CMat& T = schur.matrixT();
    const CMat& U = schur.matrixU();
    const CMat F  = U.adjoint() * Q.cast<cplx>() * U;
    CMat Y        = CMat::Zero(n, n);
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        CVec acc = CVec::Zero(n);
        for (Eigen::Index j = k + 1; j < n; ++j) acc += Y.col(j) * std::conj(T(k, j));
        const CVec rhs = F.col(k) + T * acc;
        CMat lhs       = CMat::Identity(n, n) - std::conj(T(k, k)) * T;
        Y.col(k)       = lhs.triangularView<Eigen::Upper>().solve(rhs);
    }
    Mat X = (U * Y * U.adjoint()).real();
    return 0.5 * (X + X.transpose());
}

Gramians gramians(const StateSpaceModel& ss) {
    return {discrete_lyapunov(ss.A, ss.B * ss.B.transpose()), discrete_lyapunov(ss.A.transpose(), ss.C.transpose() * ss.C)};
}

Realization balance(const StateSpaceModel& ss) {
    ss.validate();
    Realization out;
    out.model = ss;
    const auto n = ss.A.rows();
    if (n == 0) {
        out.hankel_singular_values = Vec();
        return out;
    }
    if (!ss.is_stable()) throw NumericalError("balance: model is not stable");
    const Gramians g = gramians(ss);
    const Mat Lc     = psd_sqrt_factor(g.controllability);
    const Mat Lo     = psd_sqrt_factor(g.observability);
    Eigen::JacobiSVD<Mat> svd(Lo.transpose() * Lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s[r] > 1e-12 * s[0]) ++r;
    if (r < n)
        out.warnings.push_back("balance: " + std::to_string(n - r) + " non-minimal state(s) removed (Hankel singular value below 1e-12 relative)");
    const Vec sr       = s.head(r);
    const Vec inv_sqrt = sr.cwiseSqrt().cwiseInverse();
    const Mat T        = Lc * svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
    const Mat Ti       = inv_sqrt.asDiagonal() * svd.matrixU().leftCols(r).transpose() * Lo.transpose();
    out.model.A = Ti * ss.A * T;
    out.model.B = Ti * ss.B;
    out.model.C = ss.C * T;
    out.model.D = ss.D;
    out.hankel_singular_values = sr;
    return out;
}

Realization balanced_realization(const RationalModel& rat, double fs) {
    if (rat.a.size() == 0 || rat.a[0] == 0.0) throw ConfigError("rational model: a_0 must be nonzero");
    const int n = std::max(rat.na(), rat.nb());
    Vec a       = Vec::Zero(n + 1);
    Vec b       = Vec::Zero(n + 1);
    a.head(rat.a.size()) = rat.a / rat.a[0];
    b.head(rat.b.size()) = rat.b / rat.a[0];

    // Controller form of (b_0 z^n + ... + b_n) / (z^n + a_1 z^(n-1) + ... + a_n).
    StateSpaceModel ss;
    ss.fs = fs;
    ss.A  = companion(a);
    ss.B  = Mat::Zero(n, 1);
    ss.C  = Mat::Zero(1, n);
    ss.D  = Mat::Constant(1, 1, b[0]);
    if (n > 0) ss.B(0, 0) = 1.0;
    for (int i = 1; i <= n; ++i) ss.C(0, i - 1) = b[i] - b[0] * a[i];

    std::vector<std::string> warnings;
    int discarded = 0;
    if (n > 0) {
        Eigen::EigenSolver<Mat> es(ss.A, true);
        const CVec ev = es.eigenvalues();
        const CMat V  = es.eigenvectors();
        std::vector<Vec> stable_basis, unstable_basis;
        int n_unstable = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool stable = std::abs(ev[i]) < 1.0;
            if (!stable) ++n_unstable;
            auto& basis = stable ? stable_basis : unstable_basis;
            if (std::abs(ev[i].imag()) <= 1e-12 * std::max(1.0, std::abs(ev[i]))) {
                basis.push_back(V.col(i).real());
            } else if (ev[i].imag() > 0.0) {
                basis.push_back(V.col(i).real());
                basis.push_back(V.col(i).imag());
            }
        }
        if (n_unstable == n) throw NumericalError("balanced realization: all " + std::to_string(n) + " modes are unstable");
        if (n_unstable > 0) {
            // Change to a basis adapted to the stable/unstable invariant subspaces and keep the stable block.
            Mat T(n, n);
            Eigen::Index c = 0;
            for (const auto& v : stable_basis) T.col(c++) = v;
            for (const auto& v : unstable_basis) T.col(c++) = v;
            Eigen::FullPivLU<Mat> lu(T);
            if (!lu.isInvertible() || lu.rcond() < 1e-12)
                throw NumericalError("balanced realization: cannot separate stable and unstable modes (defective pole set)");
            const Mat Ti    = lu.inverse();
            const auto ns   = static_cast<Eigen::Index>(stable_basis.size());
            const Mat At    = Ti * ss.A * T;
            StateSpaceModel st;
            st.fs = fs;
            st.A  = At.topLeftCorner(ns, ns);
            st.B  = (Ti * ss.B).topRows(ns);
            st.C  = (ss.C * T).leftCols(ns);
            st.D  = ss.D;
            ss    = st;
            discarded = n_unstable;
            warnings.push_back("balanced realization: discarded " + std::to_string(n_unstable) +
                               " unstable mode(s); only the stable part is realized");
        }
    }

    Realization out = balance(ss);
    out.model.fs    = fs;
    out.discarded_unstable = discarded;
    warnings.insert(warnings.end(), out.warnings.begin(), out.warnings.end());
    out.warnings = std::move(warnings);
    return out;
}

namespace {

struct SsLayout {
    Eigen::Index n, nu, ny;
    Eigen::Index size() const { return n * n + n * nu + ny * n + ny * nu; }
};

Vec pack_ss(const StateSpaceModel& m) {
    SsLayout L{m.A.rows(), m.B.cols(), m.C.rows()};
    Vec th(L.size());
    Eigen::Index o = 0;
    for (const Mat* M : {&m.A, &m.B, &m.C, &m.D}) {
        th.segment(o, M->size()) = Eigen::Map<const Vec>(M->data(), M->size());
        o += M->size();
    }
    return th;
}

StateSpaceModel unpack_ss(const Vec& th, const StateSpaceModel& shape) {
    StateSpaceModel m = shape;
    Eigen::Index o    = 0;
    for (Mat* M : {&m.A, &m.B, &m.C, &m.D}) {
        *M = Eigen::Map<const Mat>(th.data() + o, M->rows(), M->cols());
        o += M->size();
    }
    return m;
}

}  // namespace

double frf_cost(const StateSpaceModel& ss, const BlaEstimate& bla) {
    const WeightedData d = weighted_data(bla);
    double c             = 0.0;
    for (size_t k = 0; k < d.bins.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        c += d.w[kk] * std::norm(d.G[kk] - ss.eval(z_of(d.bins[k], d.N)));
    }
    return c;
}

MlRefineResult ml_refine(const StateSpaceModel& ss, const BlaEstimate& bla, const lm::Options& opts) {
    ss.validate();
    if (ss.n_inputs() != 1 || ss.n_outputs() != 1) throw ConfigError("ml_refine: SISO models only");
    for (size_t i : bla.usable())
        if (!(bla.var_total[static_cast<Eigen::Index>(i)] > 0.0))
            throw InsufficientDataError("ml_refine: var_total must be positive on every fitted line");
    const WeightedData d = weighted_data(bla);
    const auto F         = static_cast<Eigen::Index>(d.bins.size());
    const Eigen::Index n = ss.order();
    const Eigen::Index np = pack_ss(ss).size();

    lm::Problem problem = [&](const Vec& th, bool with_jac) -> std::optional<lm::Evaluation> {
        const StateSpaceModel m = unpack_ss(th, ss);
        lm::Evaluation ev;
        ev.residual.resize(2 * F);
        if (with_jac) ev.jacobian.resize(2 * F, np);
        for (Eigen::Index k = 0; k < F; ++k) {
            const double sw = std::sqrt(d.w[k]);
            const cplx z    = z_of(d.bins[static_cast<size_t>(k)], d.N);
            CVec RB, CR;
            cplx g = m.D(0, 0);
            if (n > 0) {
                const CMat zI_A = z * CMat::Identity(n, n) - m.A.cast<cplx>();
                Eigen::PartialPivLU<CMat> lu(zI_A);
                RB = lu.solve(m.B.col(0).cast<cplx>());
                CR = lu.transpose().solve(m.C.row(0).transpose().cast<cplx>());
                g += (m.C.row(0).cast<cplx>() * RB)(0, 0);
            }
            const cplx e       = sw * (g - d.G[k]);
            ev.residual[k]     = e.real();
            ev.residual[F + k] = e.imag();
            if (!with_jac) continue;
            Eigen::Index o = 0;
            // dG/dA_ij = (C R)_i (R B)_j, column-major vec(A)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i, ++o) {
                    const cplx v          = sw * CR[i] * RB[j];
                    ev.jacobian(k, o)     = v.real();
                    ev.jacobian(F + k, o) = v.imag();
                }
            for (Eigen::Index i = 0; i < n; ++i, ++o) {
                const cplx v          = sw * CR[i];
                ev.jacobian(k, o)     = v.real();
                ev.jacobian(F + k, o) = v.imag();
            }
            for (Eigen::Index j = 0; j < n; ++j, ++o) {
                const cplx v          = sw * RB[j];
                ev.jacobian(k, o)     = v.real();
                ev.jacobian(F + k, o) = v.imag();
            }
            ev.jacobian(k, o)     = sw;
            ev.jacobian(F + k, o) = 0.0;
        }
        if (!ev.residual.allFinite()) return std::nullopt;
        return ev;
    };

    lm::Options lmo = opts;
    if (lmo.cost_floor == 0.0) {
        double scale = 0.0;
        for (Eigen::Index k = 0; k < F; ++k) scale += d.w[k] * std::norm(d.G[k]);
        lmo.cost_floor = 1e4 * std::pow(std::numeric_limits<double>::epsilon(), 2) * scale;
    }

    MlRefineResult out;
    out.lm           = lm::minimize(problem, pack_ss(ss), lmo);
    out.model        = unpack_ss(out.lm.theta, ss);
    out.initial_cost = out.lm.initial_cost;
    out.cost         = out.lm.cost;
    for (const auto& rec : out.lm.log)
        if (rec.accepted) out.accepted_costs.push_back(rec.cost);
    return out;
}

}  // namespace nlsid
