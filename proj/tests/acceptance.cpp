// One PASS/FAIL line per acceptance criterion, with wall time and the measured quantities.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mgilc/analysis.hpp"
#include "mgilc/error.hpp"
#include "mgilc/scenario.hpp"
#include "mgilc/sweep.hpp"

using namespace mgilc;

namespace {

const std::string kDir = MGILC_SCENARIO_DIR;

SystemSpec two_mg(Scheme s) {
    auto spec = parse_scenario(kDir + "/two-mg.json");
    set_scheme(spec, s);
    return spec;
}

LinearSystem native_at_base(const SystemSpec& spec, std::size_t l) {
    const auto b = build_system(spec);
    const auto eq = base_equilibrium(spec, b.ode);
    const auto& u = spec.ilcs[l].unit;
    return linearize_ilc(u, ilc_operating_point(b.ode, eq, l), native_convention(u));
}

struct Outcome {
    bool pass = true;
    std::string detail;
    double budget = 0;  // seconds
};

void note(Outcome& o, bool ok, const std::string& what) {
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += (ok ? "" : "[x] ") + what;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome passivity_verdicts() {
    Outcome o{true, "", 5.0};
    const auto a = passivity_sweep(native_at_base(two_mg(Scheme::DualFreqDroop1), 0));
    note(o, a.verdict == PassivityVerdict::NonPassive,
         std::string("first dual frequency droop ") + to_string(a.verdict) + fmt(" (min eig %.3g", a.worst_min_eig) +
             fmt(" at %.4g rad/s)", a.worst_omega));
    const auto b = passivity_sweep(native_at_base(two_mg(Scheme::DualDroopMatching), 0));
    bool ok = b.verdict == PassivityVerdict::Passive;
    for (const auto& p : b.points) ok = ok && p.min_eig >= -1e-9 * p.gain;
    note(o, ok, std::string("dual droop + matching ") + to_string(b.verdict));
    return o;
}

Outcome relative_degree() {
    Outcome o{true, "", 1.0};
    const auto u = two_mg(Scheme::DualFreqDroop1).ilcs[0].unit;
    const auto chain = single_vsc_chain(u);
    const int rd = chain.omega2_to_p2.relative_degree();
    note(o, rd >= 2, "relative degree " + std::to_string(rd));
    const auto lin = linearize_ilc(u, PortConvention::GridFollowing);
    bool negative = false;
    double worst = 0, w_neg = 0;
    for (double w : log_grid(1e-2, 1e4, 400)) {
        const auto t = chain.omega2_to_p2(std::complex<double>(0, w));
        if (t.real() < 0 && !negative) {
            negative = true;
            w_neg = w;
        }
        worst = std::max(worst, std::abs(transfer_matrix(lin, w)(1, 1) - t) / std::abs(t));
    }
    note(o, negative, negative ? fmt("real part negative from %.4g rad/s", w_neg) : "real part never negative");
    note(o, worst <= 1e-6, fmt("max relative mismatch to linearization %.2e", worst));
    return o;
}

Outcome equalization_and_sharing() {
    Outcome o{true, "", 10.0};
    for (Scheme s : kAllSchemes) {
        if (s == Scheme::Matching) continue;  // no integral action
        const auto t0 = std::chrono::steady_clock::now();
        const auto spec = two_mg(s);
        const auto b = build_system(spec);
        const auto tr = simulate(spec, b.ode);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto x = tr.final_state();
        const auto& g = spec.ilcs[0].unit.gains;
        const double a = g.K_omega1 * b.ode.mg_omega(x, 0), c = g.K_omega2 * b.ode.mg_omega(x, 1);
        const double mismatch = std::abs(a - c) / std::max(std::abs(a), std::abs(c));
        const auto s1 = b.ode.mg_slice(0), s2 = b.ode.mg_slice(1);
        const double c1 = mg_contribution(spec.mgs[0], x.subspan(s1.offset, s1.size));
        const double c2 = mg_contribution(spec.mgs[1], x.subspan(s2.offset, s2.size));
        const double ratio = c1 / c2;
        const bool ok = !tr.truncated && mismatch < 1e-4 && std::abs(ratio / 2 - 1) < 0.02 && secs < o.budget;
        note(o, ok, std::string(scheme_tag(s)) + fmt(" mismatch %.1e", mismatch) + fmt(" split %.4f", ratio) +
                        fmt(" (%.2f s)", secs));
    }
    return o;
}

Outcome dc_topology() {
    Outcome o{true, "", 10.0};
    auto first_sign = [](std::size_t mg) {
        auto spec = two_mg(Scheme::DualFreqDroop1);
        spec.events = {{1.0, mg, -2e6}};
        spec.sim.t_end = 5;
        const auto b = build_system(spec);
        const auto tr = simulate(spec, b.ode);
        double peak = 0;
        for (std::size_t k = 0; k < tr.samples(); ++k) peak = std::max(peak, std::abs(b.ode.ilc_vdc(tr.state(k), 0)));
        for (std::size_t k = 0; k < tr.samples(); ++k) {
            const double v = b.ode.ilc_vdc(tr.state(k), 0);
            if (std::abs(v) > 1e-3 * peak) return v;
        }
        return 0.0;
    };
    const double a = first_sign(0), c = first_sign(1);
    note(o, a * c < 0, fmt("initial DC excursion %.3g V (load at MG1)", a) + fmt(" vs %.3g V (load at MG2)", c));
    return o;
}

Outcome table_trends() {
    Outcome o{true, "", 120.0};
    HarnessConfig cfg;
    cfg.workers = 8;
    const auto t = table3_harness(two_mg(Scheme::DualFreqDroop1), cfg);
    auto cell = [&](Scheme s, const char* col) { return t.find(s, col); };
    auto bval = [&](Scheme s, const char* col) {
        const auto* c = cell(s, col);
        return c && c->ok ? c->result.boundary : std::nan("");
    };
    auto beyond = [&](Scheme s, const char* col) {
        const auto* c = cell(s, col);
        return c && c->ok && c->result.status == BoundaryStatus::BeyondRange;
    };
    bool a = true;
    std::string da;
    for (Scheme s : kAllSchemes) {
        const double v = bval(s, "K_dc min");
        const bool gfm = port_config(s) == PortConfig::GridForming;
        const bool ok = gfm ? v > 0 : v == 0;
        a = a && ok;
        da += std::string(ok ? "" : "!") + scheme_tag(s) + "=" + fmt("%.3g ", v);
    }
    note(o, a, "(a) K_dc " + da);
    bool b = true;
    std::string db;
    for (Scheme s : {Scheme::Matching, Scheme::DualDroopMatching, Scheme::GflGfmDualDroop}) {
        const bool ok = beyond(s, "tau max");
        b = b && ok;
        db += std::string(ok ? "" : "!") + scheme_tag(s) + (ok ? ">5 " : fmt("=%.3g ", bval(s, "tau max")));
    }
    for (Scheme s : {Scheme::DualFreqDroop1, Scheme::DualFreqDroop2, Scheme::DualAcDcDroop}) {
        const double v = bval(s, "tau max");
        const bool ok = !beyond(s, "tau max") && v < 0.2;
        b = b && ok;
        db += std::string(ok ? "" : "!") + scheme_tag(s) + fmt("=%.3g ", v);
    }
    note(o, b, "(b) tau " + db);
    const double lp = bval(Scheme::DualDroopMatching, "L min"), lg = bval(Scheme::GfmFreqDroop, "L min");
    note(o, lp <= lg, fmt("(c) L partial %.3g mH", lp * 1e3) + fmt(" <= grid-forming droop %.3g mH", lg * 1e3));
    int matches = 0, compared = 0;
    for (const auto& c : t.cells)
        if (c.spec.applicable && c.ok) {
            ++compared;
            matches += c.matches_reference;
        }
    o.detail += "; reference values within tolerance: " + std::to_string(matches) + "/" + std::to_string(compared) +
                " (informative)";
    return o;
}

Outcome passivity_composition() {
    Outcome o{true, "", 30.0};
    int configs = 0, premises = 0, counter = 0;
    for (const char* f : {"two-mg.json", "three-mg.json", "ieee39-reduced.json"}) {
        for (Scheme s : kAllSchemes) {
            auto spec = parse_scenario(kDir + "/" + f);
            set_scheme(spec, s);
            const auto b = build_system(spec);
            EquilibriumPoint eq;
            try {
                eq = base_equilibrium(spec, b.ode);
            } catch (const Error&) {
                continue;
            }
            ++configs;
            bool premise = true;
            for (const auto& m : spec.mgs) premise = premise && passivity_sweep(mg_linearize(m)).strictly_positive();
            for (std::size_t l = 0; l < spec.ilcs.size() && premise; ++l) {
                const auto& u = spec.ilcs[l].unit;
                premise = passivity_sweep(linearize_ilc(u, ilc_operating_point(b.ode, eq, l), native_convention(u)))
                              .verdict == PassivityVerdict::Passive;
            }
            if (!premise) continue;
            ++premises;
            const double alpha = reduced_abscissa(linearize_closed_loop(b.ode, eq).a, circulation_modes(b.net));
            if (!(alpha < 0)) {
                ++counter;
                o.detail += std::string(f) + "/" + scheme_tag(s) + fmt(" abscissa %.3g; ", alpha);
            }
        }
    }
    note(o, premises > 0 && counter == 0,
         std::to_string(premises) + " of " + std::to_string(configs) + " configurations meet the premise, " +
             std::to_string(counter) + " counterexamples");
    return o;
}

Outcome observability() {
    Outcome o{true, "", 1.0};
    const auto lin = linearize_ilc(two_mg(Scheme::DualDroopMatching).ilcs[0].unit, PortConvention::GridFollowing);
    const auto r = observability_rank(lin);
    note(o, r.n == 4 && r.observability_rank == 4,
         "partial scheme rank " + std::to_string(r.observability_rank) + " of " + std::to_string(r.n));
    MgModel fo;
    fo.kind = MgKind::FirstOrderDroop;
    fo.T = 1.0;
    fo.D = 2e7;
    const auto spec = two_mg(Scheme::DualDroopMatching);
    for (const MgModel& m : {fo, spec.mgs[0]}) {
        const auto rep = observability_rank(mg_linearize(m));
        note(o, rep.rosenbrock_full() && rep.rosenbrock_ranks.size() == 32,
             std::string(to_string(m.kind)) + " Rosenbrock full rank at 32 points");
    }
    return o;
}

Outcome hygiene() {
    Outcome o{true, "", 60.0};
    // finite differences against analytic MG models
    MgModel fo;
    fo.kind = MgKind::FirstOrderDroop;
    fo.T = 0.3;
    fo.D = 5e4;
    double fd_err = 0;
    for (const MgModel& m : {fo, two_mg(Scheme::Matching).mgs[0], two_mg(Scheme::Matching).mgs[1]}) {
        const std::size_t n = mg_state_dim(m);
        std::vector<double> x0(n, 0.0), u0{0.0}, xs(n, 1e-2), us{1e6};
        if (n == 2) xs[1] = 1e6;
        VecFn f = [&](std::span<const double> x, std::span<const double> u, std::span<double> out) {
            mg_derivative(m, x, u[0], 0.0, out);
        };
        VecFn g = [](std::span<const double> x, std::span<const double>, std::span<double> out) { out[0] = x[0]; };
        const auto num = linearize(f, g, x0, u0, xs, us, 1);
        const auto ana = mg_linearize(m);
        auto rel = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
            return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
        };
        fd_err = std::max({fd_err, rel(num.a, ana.a), rel(num.b, ana.b), rel(num.c, ana.c)});
    }
    note(o, fd_err <= 1e-6, fmt("finite-difference vs analytic %.1e", fd_err));

    double energy = 0, halving = 0;
    for (Scheme s : kAllSchemes) {
        auto spec = two_mg(s);
        spec.ilcs[0].unit.phys.tau2 = 0.08;
        spec.events.push_back({20.0, 1, 1e6});
        spec.sim.t_end = 30;
        spec.sim.integrator.track_dc_energy = true;
        const auto b = build_system(spec);
        const auto tr = simulate(spec, b.ode);
        const double c = spec.ilcs[0].unit.phys.C;
        double peak = 0, worst = 0;
        const double v0 = b.ode.ilc_vdc(tr.state(0), 0);
        for (std::size_t k = 0; k < tr.samples(); ++k) {
            const double v = b.ode.ilc_vdc(tr.state(k), 0);
            const double stored = 0.5 * c * (v * v - v0 * v0);
            peak = std::max(peak, 0.5 * c * v * v);
            worst = std::max(worst, std::abs(tr.dc_work[k] - stored));
        }
        if (peak > 0) energy = std::max(energy, worst / peak);

        auto fine = spec;
        fine.sim.integrator.rtol /= 2;
        fine.sim.integrator.atol_scale /= 2;
        fine.sim.integrator.track_dc_energy = false;
        const auto tf = simulate(fine, b.ode);
        const auto sc = b.ode.state_scales();
        double diff = 0, size = 0;
        for (std::size_t i = 0; i < sc.size(); ++i) {
            diff = std::max(diff, std::abs(tr.final_state()[i] - tf.final_state()[i]) / sc[i]);
            size = std::max(size, std::abs(tr.final_state()[i]) / sc[i]);
        }
        halving = std::max(halving, diff / size / spec.sim.integrator.rtol);
    }
    note(o, energy <= 1e-6, fmt("DC energy bookkeeping %.1e relative", energy));
    note(o, halving < 10, fmt("tolerance halving moves final state %.2f rtol", halving));
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {"passivity verdicts", passivity_verdicts},
        {"relative-degree diagnostic", relative_degree},
        {"frequency equalization and power sharing", equalization_and_sharing},
        {"DC transient topology dependence", dc_topology},
        {"stability boundary trends", table_trends},
        {"passive components give a stable interconnection", passivity_composition},
        {"observability checks", observability},
        {"numerical hygiene", hygiene},
    };
    int failed = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[i].run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.budget > 0 && secs > o.budget) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", o.budget);
        }
        failed += !o.pass;
        std::printf("%s %zu %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
