#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mgilc/analysis.hpp"
#include "mgilc/engine.hpp"
#include "mgilc/error.hpp"
#include "mgilc/ilc.hpp"

using namespace mgilc;

namespace {

IlcUnit unit(Scheme s) {
    IlcUnit u;
    u.scheme = s;
    u.phys.refresh_susceptance();
    return u;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

// Largest rate relative to the characteristic scale of each state.
double scaled_rate(const IlcUnit& u, const std::vector<double>& x, double w1, double w2) {
    std::vector<double> r(x.size());
    ilc_derivative(u, x, w1, w2, r);
    const auto names = ilc_state_names(u.scheme);
    double worst = 0;
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i]) / characteristic_scale(names[i]));
    return worst;
}

}  // namespace

TEST_CASE("scheme tags round trip and typos are rejected") {
    for (auto s : kAllSchemes) CHECK(parse_scheme(scheme_tag(s)) == s);
    CHECK(std::string(scheme_tag(Scheme::DualAcDcDroop)) == "dual-acdc-droop");
    CHECK(std::string(scheme_tag(Scheme::GflGfmDualDroop)) == "gfl-gfm-dual-droop");
    CHECK(kind_of([] { parse_scheme("machting"); }) == ErrorKind::UnknownScheme);
}

TEST_CASE("port configuration per scheme") {
    CHECK(port_config(Scheme::DualFreqDroop1) == PortConfig::GridFollowing);
    CHECK(port_config(Scheme::DualFreqDroop2) == PortConfig::GridFollowing);
    CHECK(port_config(Scheme::DualAcDcDroop) == PortConfig::GridFollowing);
    CHECK(port_config(Scheme::Matching) == PortConfig::GridForming);
    CHECK(port_config(Scheme::GfmFreqDroop) == PortConfig::GridForming);
    CHECK(port_config(Scheme::GfmDualDroop) == PortConfig::GridForming);
    CHECK(port_config(Scheme::DualDroopMatching) == PortConfig::Partial);
    CHECK(port_config(Scheme::GflGfmDualDroop) == PortConfig::Partial);
}

TEST_CASE("default link constant follows from V_ac, f and L") {
    IlcPhysical p;
    p.refresh_susceptance();
    CHECK(p.B == doctest::Approx(3300.0 * 3300.0 / (2 * std::numbers::pi * 50 * 1e-3)));
    CHECK(p.B == doctest::Approx(3.47e7).epsilon(2e-3));
}

TEST_CASE("DC bus rate") {
    IlcPhysical p;
    CHECK(dc_bus_rate(0, 0, 0, p) == 0.0);
    CHECK(dc_bus_rate(1000, 0, 0, p) == doctest::Approx(-100.0));
    CHECK(dc_bus_rate(0, 1000, 0, p) == doctest::Approx(-100.0));
    CHECK(dc_bus_rate(0, 0, 2, p) == doctest::Approx(-2000.0));
    CHECK(kind_of([&] { dc_bus_rate(0, 0, -1e4, p); }) == ErrorKind::DcVoltageCollapse);
    CHECK(kind_of([&] { dc_bus_rate(0, 0, -2e4, p); }) == ErrorKind::DcVoltageCollapse);
}

TEST_CASE("steady DC deviation is the positive root of V(V + Vref) = 1000") {
    IlcPhysical p;
    const double v = dc_steady_voltage(-1000, p);
    CHECK(v == doctest::Approx((-1e4 + std::sqrt(1e8 + 4000)) / 2).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.09999).epsilon(1e-4));
    CHECK(std::abs(dc_bus_rate(-600, -400, v, p)) < 1e-9);
}

TEST_CASE("first dual frequency droop references") {
    auto u = unit(Scheme::DualFreqDroop1);
    const double x[2] = {0, 0};
    auto out = controller_rates_and_refs(u, {0.02, 0.02, 0, 0, 0}, x);
    CHECK(out.ref1 == doctest::Approx(0.0));
    CHECK(out.rates[0] == doctest::Approx(0.0));
    out = controller_rates_and_refs(u, {-0.01, 0, 0, 0, 0}, x);
    CHECK(out.ref1 == doctest::Approx(2.5e5));
    CHECK(out.kind1 == RefKind::Power);
    const double y[2] = {1.0, 2.0};
    out = controller_rates_and_refs(u, {0, 0, 3.0, 0, 0}, y);
    CHECK(out.ref1 == doctest::Approx(10.0));
    CHECK(out.ref2 == doctest::Approx(2.5e4 * 3.0 + 2.5e5 * 2.0));
    CHECK(out.rates[1] == doctest::Approx(3.0));
}

TEST_CASE("dual AC/DC droop uses the second voltage gain on side two") {
    auto u = unit(Scheme::DualAcDcDroop);
    u.gains.K_v1 = 1e4;
    u.gains.K_v2 = 3e4;
    const double x[2] = {0, 0};
    const auto out = controller_rates_and_refs(u, {0, 0, 2.0, 0, 0}, x);
    CHECK(out.ref1 == doctest::Approx(2e4));
    CHECK(out.ref2 == doctest::Approx(6e4));
}

TEST_CASE("matching reference is proportional to the DC deviation") {
    auto u = unit(Scheme::Matching);
    const auto out = controller_rates_and_refs(u, {0, 0, 5.0, 0, 0}, {});
    CHECK(out.kind1 == RefKind::Frequency);
    CHECK(out.ref1 == doctest::Approx(5e-3));
    CHECK(out.ref2 == doctest::Approx(5e-3));
    const double core[1] = {0.0};
    const auto y = gfm_output(u, core, 0, 0);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("controller state dimension is checked") {
    auto u = unit(Scheme::DualFreqDroop1);
    const double x[3] = {0, 0, 0};
    CHECK(kind_of([&] { controller_rates_and_refs(u, {}, std::span<const double>(x, 3)); }) ==
          ErrorKind::SchemeStateMismatch);
    std::vector<double> s(4, 0.0), r(4);
    CHECK(kind_of([&] { ilc_derivative(unit(Scheme::Matching), s, 0, 0, r); }) == ErrorKind::SchemeStateMismatch);
}

TEST_CASE("partial unit link angle dynamics") {
    auto u = unit(Scheme::DualDroopMatching);
    std::vector<double> x{0.0, 0.0, 10.0, 0.0}, r(4);  // m1 * 10 V = 0.01 rad/s
    ilc_derivative(u, x, 0.0, 0.0, r);
    CHECK(r[0] == doctest::Approx(0.01));
    CHECK(ilc_port_powers(u, x)[0] == 0.0);
    CHECK(ilc_output(u, x)[0] == 0.0);
    x = {0.0, 123.0, -4.0, 7.0};
    CHECK(ilc_output(u, x)[0] == 0.0);
    u.phys.L.reset();
    u.phys.B = 3.47e7;
    x[0] = std::numbers::pi / 6;
    CHECK(ilc_port_powers(u, x)[0] == doctest::Approx(1.735e7));
}

TEST_CASE("link angle at or beyond pi/2 aborts") {
    auto u = unit(Scheme::GflGfmDualDroop);
    std::vector<double> x{std::numbers::pi / 2, 0, 0, 0, 0, 0}, r(6);
    CHECK(kind_of([&] { ilc_derivative(u, x, 0, 0, r); }) == ErrorKind::AngleOutOfRange);
    x[0] = -2.0;
    CHECK(kind_of([&] { ilc_port_powers(u, x); }) == ErrorKind::AngleOutOfRange);
}

TEST_CASE("grid-following output is the negated port power") {
    auto u = unit(Scheme::DualFreqDroop1);
    const std::vector<double> x{100, -100, 0, 0, 0};
    const auto y = ilc_output(u, x);
    CHECK(y[0] == -100.0);
    CHECK(y[1] == 100.0);
}

TEST_CASE("origin is an equilibrium of every scheme") {
    for (auto s : kAllSchemes) {
        const auto u = unit(s);
        const auto x = ilc_equilibrium(u, {0, 0, 0});
        CHECK(x.size() == ilc_state_dim(s));
        for (double v : x) CHECK(v == 0.0);
        std::vector<double> r(x.size());
        ilc_derivative(u, x, 0, 0, r);
        for (double v : r) CHECK(v == 0.0);
    }
}

TEST_CASE("matching equilibrium inverts the frequency law") {
    const auto u = unit(Scheme::Matching);
    const auto x = ilc_equilibrium(u, {-0.005, -0.005, 1e5});
    CHECK(x[2] == doctest::Approx(-5.0));
    CHECK(scaled_rate(u, x, -0.005, -0.005) < 1e-9);
}

TEST_CASE("first dual frequency droop equilibrium carries the transfer in the DC integrator") {
    const auto u = unit(Scheme::DualFreqDroop1);
    const double p = 4e5, w = -0.02;
    const auto x = ilc_equilibrium(u, {w, w, p});
    CHECK(x[0] == doctest::Approx(p));
    CHECK(x[1] == doctest::Approx(-p));
    CHECK(x[2] == 0.0);
    CHECK(x[4] == doctest::Approx(-p / u.gains.K_idc));
    CHECK(scaled_rate(u, x, w, w) < 1e-9);
}

TEST_CASE("loaded equilibria of every scheme have vanishing rates") {
    for (auto s : kAllSchemes) {
        const auto u = unit(s);
        for (double w : {-0.03, 0.004}) {
            for (double p : {-2e6, 5e5}) {
                const auto x = ilc_equilibrium(u, {w, w, p});
                CHECK_MESSAGE(scaled_rate(u, x, w, w) < 1e-9, std::string(scheme_tag(s)));
                CHECK(ilc_port_powers(u, x)[0] == doctest::Approx(p).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("unequal normalized frequencies admit no equilibrium") {
    for (auto s : kAllSchemes) {
        const auto u = unit(s);
        CHECK_MESSAGE(kind_of([&] { ilc_equilibrium(u, {-0.01, -0.02, 1e5}); }) == ErrorKind::NoEquilibrium,
                      scheme_tag(s));
    }
}

TEST_CASE("perturbing one frequency away from an equilibrium drives an integrator") {
    for (auto s : kAllSchemes) {
        const auto u = unit(s);
        const double w = -0.01;
        const auto x = ilc_equilibrium(u, {w, w, 3e5});
        CHECK_MESSAGE(scaled_rate(u, x, w, w + 1e-4) > 1e-4, std::string(scheme_tag(s)));
    }
}

TEST_CASE("partial link small-signal model is an integrator of gain B") {
    for (auto s : {Scheme::DualDroopMatching, Scheme::GflGfmDualDroop}) {
        const auto u = unit(s);
        const auto lin = linearize_ilc(u, PortConvention::GridFollowing);
        // d eta/dt = omega_ref1 - omega1, output -p1 = -B sin(eta)
        CHECK(lin.b(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK(std::abs(lin.b(0, 1)) < 1e-12);
        CHECK(std::abs(lin.a(0, 0)) < 1e-9);
        CHECK(-lin.c(0, 0) == doctest::Approx(u.phys.B).epsilon(1e-9));
        for (Eigen::Index j = 1; j < lin.c.cols(); ++j) CHECK(std::abs(lin.c(0, j)) < 1e-9 * u.phys.B);
    }
}

TEST_CASE("validation rejects missing or negative gains") {
    auto u = unit(Scheme::DualAcDcDroop);
    u.gains.K_v2 = 0;
    CHECK(kind_of([&] { validate_ilc(u, 0); }) == ErrorKind::SchemaViolation);
    u = unit(Scheme::Matching);
    u.phys.C = -1;
    CHECK(kind_of([&] { validate_ilc(u, 0); }) == ErrorKind::SchemaViolation);
    u = unit(Scheme::Matching);
    u.phys.K_dc = 0;
    CHECK_NOTHROW(validate_ilc(u, 0));
}
