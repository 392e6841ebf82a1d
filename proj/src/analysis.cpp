#include "mgilc/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <limits>

#include "mgilc/error.hpp"
#include "mgilc/parallel.hpp"

namespace mgilc {

namespace {

double condition_of(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin == 0 ? std::numeric_limits<double>::infinity() : s(0) / smin;
}

// Diagonal similarity by powers of two so that row and column norms of A are comparable.
LinearSystem balanced(const LinearSystem& lin) {
    LinearSystem out = lin;
    const Eigen::Index n = lin.a.rows();
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    bool changed = true;
    for (int sweep = 0; sweep < 100 && changed; ++sweep) {
        changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0, r = 0;
            for (Eigen::Index k = 0; k < n; ++k)
                if (k != i) {
                    c += std::abs(out.a(k, i));
                    r += std::abs(out.a(i, k));
                }
            if (c == 0 || r == 0) continue;
            double f = 1.0;
            const double s = c + r;
            while (c < r / 2) {
                c *= 2;
                r /= 2;
                f *= 2;
            }
            while (c >= r * 2) {
                c /= 2;
                r *= 2;
                f /= 2;
            }
            if ((c + r) < 0.95 * s) {
                changed = true;
                d(i) *= f;
                out.a.col(i) *= f;
                out.a.row(i) /= f;
            }
        }
    }
    out.b = d.asDiagonal().inverse() * lin.b;
    out.c = lin.c * d.asDiagonal();
    return out;
}

}  // namespace

LinearSystem linearize(const VecFn& f, const VecFn& g, std::span<const double> x0, std::span<const double> u0,
                       std::span<const double> x_scale, std::span<const double> u_scale, std::size_t n_out) {
    const std::size_t n = x0.size(), m = u0.size();
    LinearSystem lin;
    lin.a.resize(n, n);
    lin.b.resize(n, m);
    lin.c.resize(n_out, n);
    lin.d.resize(n_out, m);
    std::vector<double> x(x0.begin(), x0.end()), u(u0.begin(), u0.end());
    std::vector<double> fp(n), fm(n), gp(n_out), gm(n_out);
    auto column = [&](std::vector<double>& v, std::size_t i, double scale, Eigen::MatrixXd& fa, Eigen::MatrixXd& ga) {
        const double v0 = v[i];
        const double h = 1e-5 * std::max(std::abs(v0), scale);
        v[i] = v0 + h;
        f(x, u, fp);
        g(x, u, gp);
        v[i] = v0 - h;
        f(x, u, fm);
        g(x, u, gm);
        v[i] = v0;
        for (std::size_t k = 0; k < n; ++k) fa(k, i) = (fp[k] - fm[k]) / (2 * h);
        for (std::size_t k = 0; k < n_out; ++k) ga(k, i) = (gp[k] - gm[k]) / (2 * h);
    };
    for (std::size_t i = 0; i < n; ++i) column(x, i, x_scale[i], lin.a, lin.c);
    for (std::size_t i = 0; i < m; ++i) column(u, i, u_scale[i], lin.b, lin.d);
    if (!lin.a.allFinite() || !lin.b.allFinite() || !lin.c.allFinite() || !lin.d.allFinite())
        fail(ErrorKind::NonFiniteInput, "linearization produced non-finite entries");
    lin.condition_estimate = condition_of(balanced(lin).a);
    lin.ill_conditioned = !(lin.condition_estimate <= 1e12);
    return lin;
}

PortConvention native_convention(const IlcUnit& u) {
    return port_config(u.scheme) == PortConfig::GridForming ? PortConvention::GridForming
                                                            : PortConvention::GridFollowing;
}

LinearSystem linearize_ilc(const IlcUnit& u, const IlcOperatingPoint& op, PortConvention conv) {
    const auto names = ilc_state_names(u.scheme);
    if (op.state.size() != names.size())
        fail(ErrorKind::SchemeStateMismatch, "operating point has the wrong dimension");
    if (conv == PortConvention::GridFollowing) {
        std::vector<double> xs;
        for (auto& nm : names) xs.push_back(characteristic_scale(nm));
        const std::vector<double> u0{op.omega1, op.omega2}, us{1e-2, 1e-2};
        VecFn f = [&](std::span<const double> x, std::span<const double> w, std::span<double> out) {
            ilc_derivative(u, x, w[0], w[1], out);
        };
        VecFn g = [&](std::span<const double> x, std::span<const double>, std::span<double> out) {
            const auto y = ilc_output(u, x);
            out[0] = y[0];
            out[1] = y[1];
        };
        auto lin = linearize(f, g, op.state, u0, xs, us, 2);
        lin.state_labels = names;
        lin.input_labels = {"omega1 [rad/s]", "omega2 [rad/s]"};
        lin.output_labels = {"-p1 [W]", "-p2 [W]"};
        return lin;
    }
    if (port_config(u.scheme) != PortConfig::GridForming)
        fail(ErrorKind::PortMismatch, std::string(scheme_tag(u.scheme)) + " has no native grid-forming port");
    const auto p = ilc_port_powers(u, op.state);
    std::vector<double> core(op.state.begin() + 2, op.state.end());
    const auto core_names = gfm_core_state_names(u.scheme);
    std::vector<double> xs;
    for (auto& nm : core_names) xs.push_back(characteristic_scale(nm));
    const std::vector<double> u0{-p[0], -p[1]}, us{1e6, 1e6};
    VecFn f = [&](std::span<const double> x, std::span<const double> w, std::span<double> out) {
        gfm_derivative(u, x, -w[0], -w[1], out);
    };
    VecFn g = [&](std::span<const double> x, std::span<const double> w, std::span<double> out) {
        const auto y = gfm_output(u, x, -w[0], -w[1]);
        out[0] = y[0];
        out[1] = y[1];
    };
    auto lin = linearize(f, g, core, u0, xs, us, 2);
    lin.state_labels = core_names;
    lin.input_labels = {"-p1 [W]", "-p2 [W]"};
    lin.output_labels = {"omega_ref1 [rad/s]", "omega_ref2 [rad/s]"};
    return lin;
}

LinearSystem linearize_ilc(const IlcUnit& u, PortConvention conv) {
    IlcOperatingPoint op;
    op.state.assign(ilc_state_dim(u.scheme), 0.0);
    return linearize_ilc(u, op, conv);
}

IlcOperatingPoint ilc_operating_point(const OdeSystem& ode, const EquilibriumPoint& eq, std::size_t l) {
    IlcOperatingPoint op;
    const auto sl = ode.ilc_slice(l);
    op.state.assign(eq.state.begin() + static_cast<std::ptrdiff_t>(sl.offset),
                    eq.state.begin() + static_cast<std::ptrdiff_t>(sl.offset + sl.size));
    const auto& e = ode.network().endpoints(l);
    op.omega1 = ode.mg_omega(eq.state, e.mg_a);
    op.omega2 = ode.mg_omega(eq.state, e.mg_b);
    return op;
}

LinearSystem linearize_closed_loop(const OdeSystem& ode, const EquilibriumPoint& eq) {
    const auto scales = ode.state_scales();
    const std::vector<double> load = eq.p_load;
    VecFn f = [&](std::span<const double> x, std::span<const double>, std::span<double> out) {
        ode.derivative(x, load, out);
    };
    VecFn g = [](std::span<const double>, std::span<const double>, std::span<double>) {};
    auto lin = linearize(f, g, eq.state, {}, scales, {}, 0);
    lin.state_labels = ode.state_labels();
    return lin;
}

Eigen::MatrixXcd transfer_matrix(const LinearSystem& lin, double omega) {
    const Eigen::Index n = lin.a.rows();
    const std::complex<double> s(0.0, omega);
    if (n == 0) return lin.d.cast<std::complex<double>>();
    Eigen::MatrixXcd r = s * Eigen::MatrixXcd::Identity(n, n) - lin.a.cast<std::complex<double>>();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(r);
    if (!(lu.rcond() > 1e-14))
        fail(ErrorKind::SingularResolvent, "jw I - A is singular at w = " + std::to_string(omega) + " rad/s");
    return lin.c.cast<std::complex<double>>() * lu.solve(lin.b.cast<std::complex<double>>()) +
           lin.d.cast<std::complex<double>>();
}

double spectral_abscissa(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return -std::numeric_limits<double>::infinity();
    LinearSystem tmp;
    tmp.a = a;
    tmp.b = Eigen::MatrixXd::Zero(a.rows(), 0);
    tmp.c = Eigen::MatrixXd::Zero(0, a.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> es(balanced(tmp).a, false);
    return es.eigenvalues().real().maxCoeff();
}

int circulation_modes(const ValidatedNetwork& net) {
    return static_cast<int>(net.ilc_count()) - static_cast<int>(net.mg_count()) + 1;
}

double reduced_abscissa(const Eigen::MatrixXd& a, int ignored, double zero_tol) {
    if (ignored <= 0) return spectral_abscissa(a);
    LinearSystem tmp;
    tmp.a = a;
    tmp.b = Eigen::MatrixXd::Zero(a.rows(), 0);
    tmp.c = Eigen::MatrixXd::Zero(0, a.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> es(balanced(tmp).a, false);
    std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
    std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return std::abs(x) < std::abs(y); });
    const double radius = std::abs(ev.back());
    const auto k = static_cast<std::size_t>(std::min<int>(ignored, static_cast<int>(ev.size())));
    const bool structural = std::abs(ev[k - 1]) <= zero_tol * std::max(radius, 1.0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = structural ? k : 0; i < ev.size(); ++i) best = std::max(best, ev[i].real());
    return best;
}

double stability_eigs(const LinearSystem& lin) { return spectral_abscissa(lin.a); }

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0) || !(hi > lo) || n < 2) fail(ErrorKind::SchemaViolation, "invalid frequency grid");
    std::vector<double> g(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / (n - 1));
    return g;
}

const char* to_string(PassivityVerdict v) {
    switch (v) {
        case PassivityVerdict::Passive: return "passive";
        case PassivityVerdict::Marginal: return "marginal";
        case PassivityVerdict::NonPassive: return "non-passive";
    }
    return "unknown";
}

bool PassivityReport::negative_tail() const {
    return std::any_of(diag_negative_tail.begin(), diag_negative_tail.end(), [](bool b) { return b; });
}

bool PassivityReport::strictly_positive() const {
    if (points.empty()) return false;
    return std::all_of(points.begin(), points.end(),
                       [&](const PassivityPoint& p) { return p.min_eig > eps_rel * p.gain; });
}

PassivityReport passivity_sweep(const LinearSystem& lin_in, const std::vector<double>& grid, double eps_rel,
                                std::size_t workers) {
    if (lin_in.b.cols() != lin_in.c.rows())
        fail(ErrorKind::PortMismatch, "passivity needs a square transfer matrix");
    const LinearSystem lin = balanced(lin_in);
    const Eigen::Index m = lin.b.cols();
    PassivityReport rep;
    rep.eps_rel = eps_rel;
    std::vector<PassivityPoint> pts(grid.size());
    std::vector<char> ok(grid.size(), 0);
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        Eigen::MatrixXcd G;
        try {
            G = transfer_matrix(lin, grid[i]);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularResolvent) throw;
            return;
        }
        const Eigen::MatrixXcd H = G + G.adjoint();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ce(H, false);
        PassivityPoint p;
        p.omega = grid[i];
        p.min_eig = es.eigenvalues().minCoeff();
        p.gain = Eigen::JacobiSVD<Eigen::MatrixXcd>(G).singularValues()(0);
        const double hn = std::max(H.norm(), std::numeric_limits<double>::min());
        p.imag_residue = ce.eigenvalues().imag().cwiseAbs().maxCoeff() / hn;
        for (Eigen::Index k = 0; k < m; ++k) p.diag_re.push_back(G(k, k).real());
        pts[i] = std::move(p);
        ok[i] = 1;
    });
    bool any_marginal = false, any_negative = false;
    bool first = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!ok[i]) {
            rep.skipped.push_back(grid[i]);
            continue;
        }
        const auto& p = pts[i];
        const double rel = p.gain > 0 ? p.min_eig / p.gain : 0.0;
        if (p.min_eig < -eps_rel * p.gain) any_negative = true;
        else if (p.min_eig <= eps_rel * p.gain) any_marginal = true;
        if (first || rel < rep.worst_relative) {
            rep.worst_relative = rel;
            rep.worst_omega = p.omega;
            rep.worst_min_eig = p.min_eig;
            first = false;
        }
        rep.points.push_back(p);
    }
    if (rep.points.empty()) fail(ErrorKind::SingularResolvent, "every grid point hit a singular resolvent");
    rep.verdict = any_negative   ? PassivityVerdict::NonPassive
                  : any_marginal ? PassivityVerdict::Marginal
                                 : PassivityVerdict::Passive;

    // Diagonal asymptotes: first nonzero Markov parameter and the sign of Re G_ii beyond the grid.
    const double top = grid.empty() ? 1e4 : grid.back();
    const Eigen::Index n = lin.a.rows();
    const double anorm = std::max(lin.a.norm(), 1e-300);
    for (Eigen::Index k = 0; k < m; ++k) {
        int rd = -1;
        if (std::abs(lin.d(k, k)) > 1e-12 * (std::abs(lin.d(k, k)) + lin.c.row(k).norm() * lin.b.col(k).norm()))
            rd = 0;
        else {
            Eigen::VectorXd v = lin.b.col(k);
            double bound = lin.c.row(k).norm() * v.norm();
            for (Eigen::Index j = 1; j <= n && rd < 0; ++j) {
                const double mk = lin.c.row(k).dot(v);
                if (std::abs(mk) > 1e-9 * bound) rd = static_cast<int>(j);
                v = lin.a * v;
                bound *= anorm;
            }
        }
        rep.diag_relative_degree.push_back(rd);
        bool neg = false;
        for (int e = 1; e <= 16; ++e) {
            const double w = top * std::pow(10.0, e / 4.0);
            try {
                const auto G = transfer_matrix(lin, w);
                if (G(k, k).real() < -eps_rel * std::abs(G(k, k))) neg = true;
            } catch (const Error&) {
            }
        }
        rep.diag_negative_tail.push_back(neg);
    }
    return rep;
}

PassivityReport passivity_sweep(const LinearSystem& lin) { return passivity_sweep(lin, log_grid(1e-2, 1e4, 400)); }

void write_passivity_csv(const PassivityReport& rep, std::ostream& out) {
    out << "omega,min_eig";
    const std::size_t m = rep.points.empty() ? 0 : rep.points.front().diag_re.size();
    for (std::size_t k = 0; k < m; ++k) out << ",diag" << k + 1 << "_re";
    out << '\n';
    char buf[40];
    for (const auto& p : rep.points) {
        std::snprintf(buf, sizeof buf, "%.17g", p.omega);
        out << buf;
        std::snprintf(buf, sizeof buf, ",%.17g", p.min_eig);
        out << buf;
        for (double v : p.diag_re) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        out << '\n';
    }
}

bool ObservabilityReport::rosenbrock_full() const {
    return std::all_of(rosenbrock_ranks.begin(), rosenbrock_ranks.end(),
                       [&](int r) { return r == rosenbrock_cols; });
}

int numeric_rank(const Eigen::MatrixXcd& m, double rel_tol) {
    if (m.size() == 0) return 0;
    // Ruiz equilibration; diagonal scaling leaves the rank unchanged.
    Eigen::MatrixXcd s = m;
    for (int it = 0; it < 20; ++it) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const double nrm = s.row(i).cwiseAbs().maxCoeff();
            if (nrm > 0) s.row(i) /= std::sqrt(nrm);
        }
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            const double nrm = s.col(j).cwiseAbs().maxCoeff();
            if (nrm > 0) s.col(j) /= std::sqrt(nrm);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++r;
    return r;
}

ObservabilityReport observability_rank(const LinearSystem& lin_in, std::size_t samples, double w_lo, double w_hi) {
    const LinearSystem lin = balanced(lin_in);
    const Eigen::Index n = lin.a.rows(), p = lin.c.rows(), m = lin.b.cols();
    ObservabilityReport rep;
    rep.n = static_cast<int>(n);
    Eigen::MatrixXd obs(p * n, n);
    Eigen::MatrixXd blk = lin.c;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index r = 0; r < p; ++r) {
            const double nrm = blk.row(r).norm();
            obs.row(k * p + r) = nrm > 0 ? Eigen::RowVectorXd(blk.row(r) / nrm) : Eigen::RowVectorXd(blk.row(r));
        }
        blk = blk * lin.a;
    }
    rep.observability_rank = n == 0 ? 0 : numeric_rank(obs.cast<std::complex<double>>(), 1e-9);
    rep.rosenbrock_cols = static_cast<int>(n + m);
    rep.sample_omegas = log_grid(w_lo, w_hi, std::max<std::size_t>(samples, 2));
    for (double w : rep.sample_omegas) {
        Eigen::MatrixXcd P(n + p, n + m);
        P.topLeftCorner(n, n) = std::complex<double>(0, w) * Eigen::MatrixXcd::Identity(n, n) - lin.a.cast<std::complex<double>>();
        P.topRightCorner(n, m) = -lin.b.cast<std::complex<double>>();
        P.bottomLeftCorner(p, n) = lin.c.cast<std::complex<double>>();
        P.bottomRightCorner(p, m) = lin.d.cast<std::complex<double>>();
        rep.rosenbrock_ranks.push_back(numeric_rank(P, 1e-10));
    }
    return rep;
}

VscChain single_vsc_chain(const IlcUnit& u) {
    const auto& g = u.gains;
    const auto& ph = u.phys;
    const Polynomial s{0.0, 1.0};
    const Polynomial lag1{1.0, ph.tau1}, lag2{1.0, ph.tau2};
    const Polynomial bus{ph.V_dc_ref * ph.K_dc, ph.V_dc_ref * ph.C};  // Vref (C s + K_dc)
    const Polynomial pi_dc{g.K_idc, g.K_pdc};

    VscChain c;
    c.omega2_to_p1 = {-g.K_omega2 * Polynomial{g.K_i, 1.0}, s * lag1};
    c.p1_to_vdc = {Polynomial{-1.0}, bus};
    c.vdc_to_p2 = {pi_dc * bus, bus * s * lag2 + pi_dc};
    c.omega2_to_p2 = c.omega2_to_p1 * c.p1_to_vdc * c.vdc_to_p2;
    return c;
}

}  // namespace mgilc
