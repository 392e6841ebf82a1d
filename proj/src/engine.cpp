#include "mgilc/engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mgilc/error.hpp"

namespace mgilc {

namespace {

enum class Unit { Omega, Angle, Power, Voltage, VoltSeconds, Integrator };

Unit unit_of(const std::string& name) {
    if (name == "omega") return Unit::Omega;
    if (name == "eta1" || name == "eta2") return Unit::Angle;
    if (name == "vdc") return Unit::Voltage;
    if (name == "zeta") return Unit::VoltSeconds;
    if (name.rfind("xi", 0) == 0) return Unit::Integrator;
    return Unit::Power;
}

double scale_of(Unit u) {
    switch (u) {
        case Unit::Omega: return 1e-2;
        case Unit::Angle: return 1e-2;
        case Unit::Power: return 1e6;
        case Unit::Voltage: return 1.0;
        case Unit::VoltSeconds: return 1.0;
        case Unit::Integrator: return 1e5;
    }
    return 1.0;
}

double atol_of(Unit u) {
    switch (u) {
        case Unit::Omega:
        case Unit::Angle: return 1e-9;
        case Unit::Power: return 1e-3;
        case Unit::Voltage:
        case Unit::VoltSeconds: return 1e-6;
        case Unit::Integrator: return 1e-4;
    }
    return 1e-6;
}

}  // namespace

double characteristic_scale(const std::string& raw_name) { return scale_of(unit_of(raw_name)); }
double absolute_tolerance(const std::string& raw_name) { return atol_of(unit_of(raw_name)); }

namespace {

std::vector<std::string> raw_names(const OdeSystem& ode) {
    std::vector<std::string> names;
    for (const auto& m : ode.mgs()) {
        auto mn = mg_state_names(m);
        for (std::size_t k = 0; k < mg_state_dim(m); ++k) names.emplace_back(mn[k]);
    }
    for (const auto& u : ode.ilcs())
        for (auto& n : ilc_state_names(u.scheme)) names.push_back(n);
    return names;
}

bool recoverable(const Error& e) {
    return e.kind() == ErrorKind::AngleOutOfRange || e.kind() == ErrorKind::DcVoltageCollapse ||
           e.kind() == ErrorKind::NonFiniteInput;
}

}  // namespace

OdeSystem OdeSystem::assemble(const ValidatedNetwork& net, std::vector<MgModel> mgs, std::vector<IlcUnit> ilcs) {
    if (mgs.size() != net.mg_count())
        fail(ErrorKind::PortMismatch, "network has " + std::to_string(net.mg_count()) + " MGs but " +
                                          std::to_string(mgs.size()) + " MG models were given");
    if (ilcs.size() != net.ilc_count())
        fail(ErrorKind::PortMismatch, "network has " + std::to_string(net.ilc_count()) + " ILCs but " +
                                          std::to_string(ilcs.size()) + " ILC units were given");
    OdeSystem s;
    s.net_ = net;
    s.mgs_ = std::move(mgs);
    s.ilcs_ = std::move(ilcs);
    std::size_t off = 0;
    for (const auto& m : s.mgs_) {
        s.mg_slices_.push_back({off, mg_state_dim(m)});
        off += mg_state_dim(m);
    }
    for (const auto& u : s.ilcs_) {
        s.ilc_slices_.push_back({off, ilc_state_dim(u.scheme)});
        off += ilc_state_dim(u.scheme);
    }
    s.dim_ = off;
    return s;
}

std::vector<double> OdeSystem::mg_power_inputs(std::span<const double> x) const {
    std::vector<double> p_in(mgs_.size(), 0.0);
    for (std::size_t l = 0; l < ilcs_.size(); ++l) {
        const auto sl = ilc_slices_[l];
        const auto p = ilc_port_powers(ilcs_[l], x.subspan(sl.offset, sl.size));
        const auto& e = net_.endpoints(l);
        p_in[e.mg_a] += p[0];
        p_in[e.mg_b] += p[1];
    }
    return p_in;
}

void OdeSystem::derivative(std::span<const double> x, std::span<const double> p_load, std::span<double> dx) const {
    const auto p_in = mg_power_inputs(x);
    for (std::size_t j = 0; j < mgs_.size(); ++j) {
        const auto sl = mg_slices_[j];
        mg_derivative(mgs_[j], x.subspan(sl.offset, sl.size), p_in[j], p_load[j], dx.subspan(sl.offset, sl.size));
    }
    for (std::size_t l = 0; l < ilcs_.size(); ++l) {
        const auto sl = ilc_slices_[l];
        const auto& e = net_.endpoints(l);
        ilc_derivative(ilcs_[l], x.subspan(sl.offset, sl.size), x[mg_slices_[e.mg_a].offset],
                       x[mg_slices_[e.mg_b].offset], dx.subspan(sl.offset, sl.size));
    }
}

std::vector<std::string> OdeSystem::state_labels() const {
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < mgs_.size(); ++j) {
        auto mn = mg_state_names(mgs_[j]);
        for (std::size_t k = 0; k < mg_state_dim(mgs_[j]); ++k)
            labels.push_back("mg" + std::to_string(j + 1) + "." + mn[k]);
    }
    for (std::size_t l = 0; l < ilcs_.size(); ++l)
        for (auto& n : ilc_state_names(ilcs_[l].scheme)) labels.push_back("ilc" + std::to_string(l + 1) + "." + n);
    return labels;
}

std::vector<double> OdeSystem::state_scales() const {
    std::vector<double> s;
    for (auto& n : raw_names(*this)) s.push_back(scale_of(unit_of(n)));
    return s;
}

std::vector<double> OdeSystem::absolute_tolerances() const {
    std::vector<double> s;
    for (auto& n : raw_names(*this)) s.push_back(atol_of(unit_of(n)));
    return s;
}

std::vector<double> equilibrium_guess(const OdeSystem& ode, std::span<const double> p_load) {
    std::vector<double> x(ode.dimension(), 0.0);
    for (std::size_t j = 0; j < ode.mgs().size(); ++j) {
        const auto sl = ode.mg_slice(j);
        mg_steady_state(ode.mgs()[j], p_load[j], std::span<double>(x).subspan(sl.offset, sl.size));
    }
    return x;
}

double scaled_residual(const OdeSystem& ode, std::span<const double> x, std::span<const double> p_load) {
    std::vector<double> f(ode.dimension());
    ode.derivative(x, p_load, f);
    const auto sc = ode.state_scales();
    double r = 0;
    for (std::size_t i = 0; i < f.size(); ++i) r = std::max(r, std::abs(f[i]) / sc[i]);
    return r;
}

EquilibriumPoint find_equilibrium(const OdeSystem& ode, std::span<const double> p_load,
                                  std::span<const double> guess, const NewtonOptions& opts) {
    const std::size_t n = ode.dimension();
    if (guess.size() != n) fail(ErrorKind::PortMismatch, "equilibrium guess has the wrong dimension");
    for (double g : guess)
        if (!std::isfinite(g)) fail(ErrorKind::NonFiniteInput, "equilibrium guess is not finite");
    const auto sc = ode.state_scales();

    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = guess[i] / sc[i];
    std::vector<double> xbuf(n), fbuf(n);
    auto residual = [&](const Eigen::VectorXd& zz, Eigen::VectorXd& r) {
        for (std::size_t i = 0; i < n; ++i) xbuf[i] = zz[i] * sc[i];
        ode.derivative(xbuf, p_load, fbuf);
        r.resize(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = fbuf[i] / sc[i];
    };
    auto converged = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& r) {
        return r.lpNorm<Eigen::Infinity>() <= opts.tolerance * std::max(1.0, zz.lpNorm<Eigen::Infinity>());
    };

    Eigen::VectorXd r;
    residual(z, r);
    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd rp, rm;
    for (int it = 0; it <= opts.max_iterations; ++it) {
        if (converged(z, r)) {
            EquilibriumPoint eq;
            eq.state.resize(n);
            for (std::size_t i = 0; i < n; ++i) eq.state[i] = z[i] * sc[i];
            eq.p_load.assign(p_load.begin(), p_load.end());
            eq.residual_norm = r.lpNorm<Eigen::Infinity>();
            eq.iterations = it;
            return eq;
        }
        if (it == opts.max_iterations) break;
        for (std::size_t i = 0; i < n; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(z[i]));
            Eigen::VectorXd zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            residual(zp, rp);
            residual(zm, rm);
            J.col(i) = (rp - rm) / (2 * h);
        }
        // Minimum-norm step: meshed ILC graphs leave circulating transfers undetermined.
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
        cod.setThreshold(1e-11);
        cod.compute(J);
        if (cod.rank() == 0) fail(ErrorKind::NewtonDivergence, "zero Jacobian during equilibrium search");
        const Eigen::VectorXd dz = cod.solve(-r);
        if (!dz.allFinite()) fail(ErrorKind::NewtonDivergence, "non-finite Newton step");
        const double r0 = r.lpNorm<Eigen::Infinity>();
        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30 && !accepted; ++ls, lambda *= 0.5) {
            Eigen::VectorXd zt = z + lambda * dz;
            Eigen::VectorXd rt;
            try {
                residual(zt, rt);
            } catch (const Error& e) {
                if (!recoverable(e)) throw;
                continue;
            }
            if (rt.allFinite() && rt.lpNorm<Eigen::Infinity>() < r0) {
                z = zt;
                r = rt;
                accepted = true;
            }
        }
        if (!accepted) fail(ErrorKind::NewtonDivergence, "line search failed at iteration " + std::to_string(it + 1));
    }
    fail(ErrorKind::NewtonDivergence, "no convergence after " + std::to_string(opts.max_iterations) + " iterations");
}

namespace {

// Dormand-Prince 5(4).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

// J; DC work accumulators join the error norm when tracked.
constexpr double kEnergyAtol = 1e-13;

class Stepper {
public:
    Stepper(const OdeSystem& ode, const IntegrateOptions& opts, std::vector<double>& load)
        : ode_(ode), opts_(opts), load_(load), n_(ode.dimension()), nq_(opts.track_dc_energy ? ode.ilcs().size() : 0) {
        atol_ = ode.absolute_tolerances();
        atol_.resize(n_ + nq_, kEnergyAtol);
        for (auto& a : atol_) a *= opts.atol_scale;
        for (auto& k : k_) k.resize(n_ + nq_);
        tmp_.resize(n_ + nq_);
    }

    std::size_t size() const { return n_ + nq_; }

    void rhs(std::span<const double> y, std::span<double> dy) const {
        ode_.derivative(y.first(n_), load_, dy.first(n_));
        for (std::size_t l = 0; l < nq_; ++l) {
            const auto sl = ode_.ilc_slice(l);
            const auto& u = ode_.ilcs()[l];
            const auto p = ilc_port_powers(u, y.subspan(sl.offset, sl.size));
            const double v = y[sl.offset + 2];
            dy[n_ + l] = -(p[0] + p[1]) * v / (v + u.phys.V_dc_ref) - u.phys.K_dc * v * v;
        }
    }

    // Attempts one step; returns the scaled error norm and writes the candidate into ynew.
    double attempt(const std::vector<double>& y, double h, std::vector<double>& ynew, bool have_k1) {
        const std::size_t m = size();
        if (!have_k1) rhs(y, k_[0]);
        auto stage = [&](std::initializer_list<std::pair<int, double>> terms, std::vector<double>& out) {
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0;
                for (auto [idx, coef] : terms) s += coef * k_[idx][i];
                tmp_[i] = y[i] + h * s;
            }
            rhs(tmp_, out);
        };
        stage({{0, a21}}, k_[1]);
        stage({{0, a31}, {1, a32}}, k_[2]);
        stage({{0, a41}, {1, a42}, {2, a43}}, k_[3]);
        stage({{0, a51}, {1, a52}, {2, a53}, {3, a54}}, k_[4]);
        stage({{0, a61}, {1, a62}, {2, a63}, {3, a64}, {4, a65}}, k_[5]);
        ynew.resize(m);
        for (std::size_t i = 0; i < m; ++i)
            ynew[i] = y[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] + b6 * k_[5][i]);
        rhs(ynew, k_[6]);
        double acc = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double err = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] +
                                    e7 * k_[6][i]);
            const double sc = atol_[i] + opts_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            acc += (err / sc) * (err / sc);
        }
        return std::sqrt(acc / static_cast<double>(m));
    }

    void accept() { std::swap(k_[0], k_[6]); }

private:
    const OdeSystem& ode_;
    const IntegrateOptions& opts_;
    std::vector<double>& load_;
    std::size_t n_, nq_;
    std::vector<double> atol_;
    std::array<std::vector<double>, 7> k_;
    std::vector<double> tmp_;
};

}  // namespace

Trajectory integrate(const OdeSystem& ode, std::span<const double> x0, std::span<const double> base_load,
                     std::vector<LoadEvent> events, double t0, double t_end, const IntegrateOptions& opts) {
    const std::size_t n = ode.dimension();
    if (x0.size() != n) fail(ErrorKind::PortMismatch, "initial state has the wrong dimension");
    if (base_load.size() != ode.mgs().size()) fail(ErrorKind::PortMismatch, "load vector has the wrong dimension");
    if (!(t_end > t0) || !std::isfinite(t_end) || !std::isfinite(t0))
        fail(ErrorKind::SchemaViolation, "integration interval must satisfy t_end > t0");
    if (!(opts.rtol > 0) || !(opts.max_step > 0) || !(opts.atol_scale > 0))
        fail(ErrorKind::SchemaViolation, "integrator tolerances and max step must be positive");
    for (double v : x0)
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "initial state is not finite");
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].time < events[i - 1].time) fail(ErrorKind::SchemaViolation, "events must be sorted by time");
    for (const auto& e : events)
        if (e.mg >= ode.mgs().size() || !std::isfinite(e.time) || !std::isfinite(e.delta_p_load))
            fail(ErrorKind::SchemaViolation, "event references MG " + std::to_string(e.mg + 1) + " or is not finite");

    std::vector<double> load(base_load.begin(), base_load.end());
    Stepper st(ode, opts, load);
    const std::size_t m = st.size();
    const std::size_t nq = m - n;

    Trajectory tr;
    tr.dim = n;
    tr.labels = ode.state_labels();
    tr.ilc_count = nq;
    std::vector<double> y(m, 0.0), ynew(m);
    std::copy(x0.begin(), x0.end(), y.begin());

    auto record = [&](double t) {
        tr.time.push_back(t);
        tr.data.insert(tr.data.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        tr.dc_work.insert(tr.dc_work.end(), y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    };

    std::size_t next_event = 0;
    auto apply_events_at = [&](double t) {
        while (next_event < events.size() && events[next_event].time <= t) {
            const auto& e = events[next_event++];
            if (e.time < t0) continue;
            load[e.mg] += e.delta_p_load;
            tr.event_log.push_back({e.time, e.mg, e.delta_p_load});
        }
    };

    auto diverged = [&](std::string& why) {
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(y[i])) {
                why = "non-finite state " + tr.labels[i];
                return true;
            }
        for (std::size_t j = 0; j < ode.mgs().size(); ++j)
            if (std::abs(ode.mg_omega(y, j)) > opts.omega_bound) {
                why = "MG " + std::to_string(j + 1) + " frequency deviation exceeded bound";
                return true;
            }
        for (std::size_t l = 0; l < ode.ilcs().size(); ++l)
            if (std::abs(ode.ilc_vdc(y, l)) > opts.vdc_bound_fraction * ode.ilcs()[l].phys.V_dc_ref) {
                why = "ILC " + std::to_string(l + 1) + " DC voltage deviation exceeded bound";
                return true;
            }
        return false;
    };

    double t = t0;
    apply_events_at(t);
    record(t);
    double last_recorded = t;
    double h = std::min(opts.initial_step, opts.max_step);
    bool have_k1 = false;

    while (t < t_end) {
        const double seg_end = next_event < events.size() ? std::min(events[next_event].time, t_end) : t_end;
        while (t < seg_end) {
            bool last = false;
            if (t + h >= seg_end - 1e-13 * std::max(1.0, std::abs(seg_end))) {
                h = seg_end - t;
                last = true;
            }
            double err;
            int stage_failures = 0;
            while (true) {
                try {
                    err = st.attempt(y, h, ynew, have_k1);
                    break;
                } catch (const Error& e) {
                    if (!recoverable(e) || ++stage_failures > 40 || h < opts.min_step * std::max(1.0, std::abs(t)))
                        throw;
                    h *= 0.25;
                    last = false;
                }
            }
            if (!std::isfinite(err)) err = 1e10;
            if (err <= 1.0) {
                t = last ? seg_end : t + h;
                y.swap(ynew);
                st.accept();
                have_k1 = true;
                ++tr.accepted_steps;
                std::string why;
                if (diverged(why)) {
                    record(t);
                    tr.truncated = true;
                    tr.truncation_reason = why;
                    return tr;
                }
                if (opts.output_interval <= 0 || t - last_recorded >= opts.output_interval * (1 - 1e-9) || last) {
                    record(t);
                    last_recorded = t;
                }
                const double fac = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                h = std::min(h * fac, opts.max_step);
            } else {
                ++tr.rejected_steps;
                h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
                if (h < opts.min_step * std::max(1.0, std::abs(t)))
                    fail(ErrorKind::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t));
            }
        }
        if (t >= t_end) break;
        apply_events_at(t);
        have_k1 = false;  // right-hand side changed with the load
    }
    if (tr.time.back() != t) record(t);
    return tr;
}

void write_trajectory_csv(const Trajectory& traj, const OdeSystem& ode, std::ostream& out, double f_base) {
    const double w_base = 2.0 * 3.14159265358979323846 * f_base;
    out << "t";
    for (std::size_t j = 0; j < ode.mgs().size(); ++j) {
        const std::string p = "mg" + std::to_string(j + 1);
        out << ',' << p << ".omega," << p << ".omega_pu";
        if (ode.mgs()[j].kind == MgKind::SwingGovernor) out << ',' << p << ".p_m";
    }
    for (std::size_t l = 0; l < ode.ilcs().size(); ++l) {
        const std::string p = "ilc" + std::to_string(l + 1);
        out << ',' << p << ".p1," << p << ".p2," << p << ".vdc";
        const auto names = ilc_state_names(ode.ilcs()[l].scheme);
        const auto pc = port_config(ode.ilcs()[l].scheme);
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (k == 2) continue;
            if (pc == PortConfig::GridFollowing && k < 2) continue;
            if (pc == PortConfig::Partial && k == 1) continue;
            out << ',' << p << '.' << names[k];
        }
        if (traj.ilc_count) out << ',' << p << ".dc_work";
    }
    out << '\n';
    char buf[40];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    for (std::size_t k = 0; k < traj.samples(); ++k) {
        const auto x = traj.state(k);
        std::snprintf(buf, sizeof buf, "%.17g", traj.time[k]);
        out << buf;
        for (std::size_t j = 0; j < ode.mgs().size(); ++j) {
            const auto sl = ode.mg_slice(j);
            num(x[sl.offset]);
            num(x[sl.offset] / w_base);
            if (sl.size == 2) num(x[sl.offset + 1]);
        }
        for (std::size_t l = 0; l < ode.ilcs().size(); ++l) {
            const auto sl = ode.ilc_slice(l);
            const auto& u = ode.ilcs()[l];
            const auto xs = x.subspan(sl.offset, sl.size);
            std::array<double, 2> p{};
            try {
                p = ilc_port_powers(u, xs);
            } catch (const Error&) {
                p = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
            }
            num(p[0]);
            num(p[1]);
            num(xs[2]);
            const auto pc = port_config(u.scheme);
            for (std::size_t i = 0; i < sl.size; ++i) {
                if (i == 2) continue;
                if (pc == PortConfig::GridFollowing && i < 2) continue;
                if (pc == PortConfig::Partial && i == 1) continue;
                num(xs[i]);
            }
            if (traj.ilc_count) num(traj.dc_work[k * traj.ilc_count + l]);
        }
        out << '\n';
    }
}

}  // namespace mgilc
