#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "doctest.h"
#include "mgilc/analysis.hpp"
#include "mgilc/error.hpp"
#include "mgilc/scenario.hpp"

using namespace mgilc;
using cd = std::complex<double>;

namespace {

IlcUnit unit(Scheme s) {
    IlcUnit u;
    u.scheme = s;
    u.phys.refresh_susceptance();
    return u;
}

LinearSystem scalar(double a, double b, double c, double d) {
    LinearSystem l;
    l.a = Eigen::MatrixXd::Constant(1, 1, a);
    l.b = Eigen::MatrixXd::Constant(1, 1, b);
    l.c = Eigen::MatrixXd::Constant(1, 1, c);
    l.d = Eigen::MatrixXd::Constant(1, 1, d);
    return l;
}

LinearSystem native(Scheme s) {
    const auto u = unit(s);
    return linearize_ilc(u, native_convention(u));
}

std::vector<std::string> scenario_files() {
    return {MGILC_SCENARIO_DIR "/two-mg.json", MGILC_SCENARIO_DIR "/three-mg.json",
            MGILC_SCENARIO_DIR "/ieee39-reduced.json"};
}

}  // namespace

TEST_CASE("transfer matrix of analytic systems") {
    const auto g = transfer_matrix(scalar(0, 1, 1, 0), 1.0);
    CHECK(std::abs(g(0, 0) - cd(0, -1)) < 1e-15);
    const double tau = 0.05;
    const auto lag = transfer_matrix(scalar(-1 / tau, 1 / tau, 1, 0), 20.0);
    CHECK(std::abs(lag(0, 0) - cd(0.5, -0.5)) < 1e-12);
}

TEST_CASE("resolvent decays to the feedthrough") {
    for (auto s : kAllSchemes) {
        const auto lin = native(s);
        // leading term C B / (j w) bounds the distance from D
        const double w = 1e9;
        const auto g = transfer_matrix(lin, w);
        const double lead = (lin.c * lin.b).norm() / w;
        CHECK_MESSAGE((g - lin.d.cast<cd>()).norm() <= 1.01 * lead + 1e-6, std::string(scheme_tag(s)));
    }
    CHECK(std::abs(transfer_matrix(scalar(-3, 2, 5, 0.25), 1e9)(0, 0) - 0.25) < 1e-6);
}

TEST_CASE("imaginary-axis eigenvalue makes the resolvent singular") {
    ErrorKind k = ErrorKind::Io;
    try {
        transfer_matrix(scalar(0, 1, 1, 0), 0.0);
    } catch (const Error& e) {
        k = e.kind();
    }
    CHECK(k == ErrorKind::SingularResolvent);
}

TEST_CASE("hand-derived entries of ILC linearizations") {
    const auto dfd1 = linearize_ilc(unit(Scheme::DualFreqDroop1), PortConvention::GridFollowing);
    // vdc row, p1 column: -1 / (C Vref)
    CHECK(dfd1.a(2, 0) == doctest::Approx(-0.1).epsilon(1e-8));
    CHECK(dfd1.a(2, 1) == doctest::Approx(-0.1).epsilon(1e-8));
    CHECK(dfd1.a(2, 2) == doctest::Approx(-1.0 / 1e-3).epsilon(1e-8));
    CHECK(dfd1.d.norm() == 0.0);
    const auto ddm = linearize_ilc(unit(Scheme::DualDroopMatching), PortConvention::GridFollowing);
    CHECK(-ddm.c(0, 0) == doctest::Approx(unit(Scheme::DualDroopMatching).phys.B).epsilon(1e-8));
}

TEST_CASE("grid-forming port swaps inputs and outputs") {
    const auto lin = native(Scheme::Matching);
    CHECK(lin.states() == 1);
    CHECK(lin.inputs() == 2);
    // omega_ref = m vdc and C vdc' = (-p1 - p2)/Vref - K_dc vdc with inputs -p
    CHECK(lin.c(0, 0) == doctest::Approx(1e-3));
    CHECK(lin.b(0, 0) == doctest::Approx(1.0 / (1e-3 * 1e4)));
    CHECK(lin.a(0, 0) == doctest::Approx(-1.0 / 1e-3));
}

TEST_CASE("passivity verdicts of the reference schemes") {
    const auto dfd1 = passivity_sweep(native(Scheme::DualFreqDroop1));
    CHECK(dfd1.verdict == PassivityVerdict::NonPassive);
    CHECK(dfd1.worst_min_eig < 0);
    const auto ddm = passivity_sweep(native(Scheme::DualDroopMatching));
    CHECK(ddm.verdict == PassivityVerdict::Passive);
    for (const auto& p : ddm.points) CHECK(p.min_eig >= -1e-9 * p.gain);
    CHECK(ddm.points.size() == 400);
    CHECK(ddm.points.front().omega == doctest::Approx(1e-2));
    CHECK(ddm.points.back().omega == doctest::Approx(1e4));
}

TEST_CASE("first-order lag is passive and its abscissa is -1/tau") {
    const auto lag = scalar(-20, 20, 1, 0);
    CHECK(passivity_sweep(lag).verdict == PassivityVerdict::Passive);
    CHECK(stability_eigs(lag) == doctest::Approx(-20.0));
}

TEST_CASE("Hermitian part eigenvalues are real") {
    for (auto s : kAllSchemes) {
        const auto rep = passivity_sweep(native(s));
        for (const auto& p : rep.points) CHECK(p.imag_residue < 1e-12);
    }
}

TEST_CASE("verdicts do not flip between 200 and 800 grid points") {
    for (auto s : kAllSchemes) {
        const auto lin = native(s);
        const auto coarse = passivity_sweep(lin, log_grid(1e-2, 1e4, 200));
        const auto fine = passivity_sweep(lin, log_grid(1e-2, 1e4, 800));
        CHECK_MESSAGE(coarse.verdict == fine.verdict, std::string(scheme_tag(s)));
    }
}

TEST_CASE("sweep is independent of the worker count") {
    const auto lin = native(Scheme::DualFreqDroop1);
    const auto grid = log_grid(1e-2, 1e4, 400);
    const auto a = passivity_sweep(lin, grid, 1e-9, 1);
    const auto b = passivity_sweep(lin, grid, 1e-9, 4);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].min_eig == b.points[i].min_eig);
    CHECK(a.worst_omega == b.worst_omega);
}

TEST_CASE("single converter chain diagnostic") {
    const auto u = unit(Scheme::DualFreqDroop1);
    const auto chain = single_vsc_chain(u);
    CHECK(chain.omega2_to_p2.relative_degree() >= 2);
    CHECK(u.phys.V_dc_ref * chain.p1_to_vdc(0.0).real() == doctest::Approx(-1.0 / u.phys.K_dc));

    const auto lin = linearize_ilc(u, PortConvention::GridFollowing);
    bool negative = false;
    for (double w : log_grid(1e-2, 1e4, 400)) {
        const cd s(0, w);
        const auto g = transfer_matrix(lin, w);
        // inputs [omega1, omega2], outputs [-p1, -p2]
        const cd t12 = chain.omega2_to_p1(s), t22 = chain.omega2_to_p2(s);
        CHECK(std::abs(g(0, 1) - t12) <= 1e-6 * std::abs(t12));
        CHECK(std::abs(g(1, 1) - t22) <= 1e-6 * std::abs(t22));
        if (t22.real() < 0) negative = true;
    }
    CHECK(negative);
}

TEST_CASE("observability ranks") {
    LinearSystem full;
    full.a = Eigen::MatrixXd{{-1, 2, 0}, {0, -3, 1}, {0.5, 0, -2}};
    full.b = Eigen::MatrixXd::Identity(3, 3);
    full.c = Eigen::MatrixXd::Identity(3, 3);
    full.d = Eigen::MatrixXd::Zero(3, 3);
    CHECK(observability_rank(full).observability_rank == 3);

    LinearSystem hidden;
    hidden.a = Eigen::MatrixXd{{-1, 1, 0}, {0, -2, 0}, {0, 0, -5}};
    hidden.b = Eigen::MatrixXd::Ones(3, 1);
    hidden.c = Eigen::MatrixXd{{1, 0, 0}};
    hidden.d = Eigen::MatrixXd::Zero(1, 1);
    CHECK(observability_rank(hidden).observability_rank == 2);

    const auto ddm = linearize_ilc(unit(Scheme::DualDroopMatching), PortConvention::GridFollowing);
    REQUIRE(ddm.states() == 4);
    const auto rep = observability_rank(ddm);
    CHECK(rep.observability_rank == 4);
    CHECK(rep.observability_rank <= rep.n);
}

TEST_CASE("closed-loop spectra on the two-MG scenario") {
    auto spec = parse_scenario(MGILC_SCENARIO_DIR "/two-mg.json");
    {
        const auto b = build_system(spec);
        CHECK(stability_eigs(linearize_closed_loop(b.ode, base_equilibrium(spec, b.ode))) < 0);
    }
    set_scheme(spec, Scheme::GfmFreqDroop);
    apply_parameter(spec, "ilc.K_dc", 0.0);
    const auto b = build_system(spec);
    CHECK(stability_eigs(linearize_closed_loop(b.ode, base_equilibrium(spec, b.ode))) >= 0);
}

TEST_CASE("circulation modes count independent ILC cycles") {
    CHECK(circulation_modes(validate_topology({2, {{0, 1}}})) == 0);
    CHECK(circulation_modes(validate_topology({3, {{0, 1}, {2, 1}}})) == 0);
    CHECK(circulation_modes(validate_topology({3, {{0, 1}, {2, 1}, {2, 0}}})) == 1);
    CHECK(circulation_modes(validate_topology({2, {{0, 1}, {0, 1}}})) == 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(0, 0) = -1;
    a(1, 1) = -2;
    CHECK(reduced_abscissa(a, 1) == doctest::Approx(-1.0));
    CHECK(reduced_abscissa(a, 0) == 0.0);
}

TEST_CASE("positive-real components give a stable interconnection over the scenario suite") {
    int premises = 0, counterexamples = 0;
    for (const auto& file : scenario_files()) {
        for (auto s : kAllSchemes) {
            auto spec = parse_scenario(file);
            set_scheme(spec, s);
            const auto b = build_system(spec);
            EquilibriumPoint eq;
            try {
                eq = base_equilibrium(spec, b.ode);
            } catch (const Error&) {
                continue;  // no operating point, nothing to certify
            }
            bool premise = true;
            for (const auto& m : spec.mgs) premise = premise && passivity_sweep(mg_linearize(m)).strictly_positive();
            for (std::size_t l = 0; l < spec.ilcs.size() && premise; ++l) {
                const auto& u = spec.ilcs[l].unit;
                const auto lin = linearize_ilc(u, ilc_operating_point(b.ode, eq, l), native_convention(u));
                premise = passivity_sweep(lin).verdict == PassivityVerdict::Passive;
            }
            if (!premise) continue;
            ++premises;
            const auto cl = linearize_closed_loop(b.ode, eq);
            const double alpha = reduced_abscissa(cl.a, circulation_modes(b.net));
            if (!(alpha < 0)) {
                ++counterexamples;
                MESSAGE(file, " ", scheme_tag(s), " abscissa ", alpha);
            }
        }
    }
    CHECK(premises > 0);
    CHECK(counterexamples == 0);
}
