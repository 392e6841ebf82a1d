#include "mgilc/ilc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mgilc/error.hpp"

namespace mgilc {

namespace {

struct SchemeInfo {
    Scheme scheme;
    const char* tag;
    const char* display;
    PortConfig port;
    std::vector<std::string> ctrl_states;
};

const std::vector<SchemeInfo>& scheme_table() {
    static const std::vector<SchemeInfo> table = {
        {Scheme::DualFreqDroop1, "dual-freq-droop-1", "Dual Freq. Droop 1", PortConfig::GridFollowing, {"xi", "zeta"}},
        {Scheme::DualFreqDroop2, "dual-freq-droop-2", "Dual Freq. Droop 2", PortConfig::GridFollowing, {"xi", "zeta"}},
        {Scheme::DualAcDcDroop, "dual-acdc-droop", "Dual AC/DC Droop", PortConfig::GridFollowing, {"xi1", "xi2"}},
        {Scheme::Matching, "matching", "Matching", PortConfig::GridForming, {}},
        {Scheme::GfmFreqDroop, "gfm-freq-droop", "GFM Freq. Droop", PortConfig::GridForming,
         {"zeta", "p_eq", "pf1", "pf2"}},
        {Scheme::GfmDualDroop, "gfm-dual-droop", "GFM Dual Droop", PortConfig::GridForming, {"xi1", "xi2", "pf1", "pf2"}},
        {Scheme::DualDroopMatching, "dual-droop-matching", "Dual Droop + Matching", PortConfig::Partial, {"xi2"}},
        {Scheme::GflGfmDualDroop, "gfl-gfm-dual-droop", "GFL+GFM Dual Droop", PortConfig::Partial,
         {"xi1", "pf1", "xi2"}},
    };
    return table;
}

const SchemeInfo& info(Scheme s) {
    for (const auto& i : scheme_table())
        if (i.scheme == s) return i;
    fail(ErrorKind::UnknownScheme, "unhandled scheme");
}

bool finite_all(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double link_power(double eta, double B) {
    if (!(std::abs(eta) < kAngleLimit))
        fail(ErrorKind::AngleOutOfRange, "link angle " + std::to_string(eta) + " rad reached +-pi/2");
    return B * std::sin(eta);
}

double link_angle(double p, double B) {
    if (!(std::abs(p) < B))
        fail(ErrorKind::NoEquilibrium, "required transfer " + std::to_string(p) + " W exceeds link capacity " +
                                           std::to_string(B) + " W");
    return std::asin(p / B);
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b)}) + 1e-12; }

}  // namespace

const char* scheme_tag(Scheme s) { return info(s).tag; }
const char* scheme_display_name(Scheme s) { return info(s).display; }
PortConfig port_config(Scheme s) { return info(s).port; }

Scheme parse_scheme(std::string_view tag) {
    for (const auto& i : scheme_table())
        if (tag == i.tag) return i.scheme;
    fail(ErrorKind::UnknownScheme, "unknown scheme tag '" + std::string(tag) + "'");
}

void IlcPhysical::refresh_susceptance() {
    if (L) B = V_ac * V_ac / (2.0 * std::numbers::pi * f_nom * *L);
}

void validate_ilc(const IlcUnit& u, std::size_t index) {
    const std::string who = "ILC " + std::to_string(index + 1) + ": ";
    auto positive = [&](double v, const char* name) {
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, who + name + " is not finite");
        if (!(v > 0)) fail(ErrorKind::SchemaViolation, who + name + " must be strictly positive");
    };
    const auto& p = u.phys;
    positive(p.C, "C");
    positive(p.V_dc_ref, "V_dc_ref");
    positive(p.tau1, "tau1");
    positive(p.tau2, "tau2");
    if (!std::isfinite(p.K_dc)) fail(ErrorKind::NonFiniteInput, who + "K_dc is not finite");
    if (p.K_dc < 0) fail(ErrorKind::SchemaViolation, who + "K_dc must be non-negative");
    if (port_config(u.scheme) != PortConfig::GridFollowing) {
        positive(p.V_ac, "V_ac");
        positive(p.f_nom, "f_nom");
        if (p.L) positive(*p.L, "L");
        positive(p.B, "B");
    }
    const auto& g = u.gains;
    auto kappa = [&](double v, const char* name) {
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, who + name + " is not finite");
        if (v < 0) fail(ErrorKind::SchemaViolation, who + name + " must be non-negative");
    };
    switch (u.scheme) {
        case Scheme::DualFreqDroop1:
        case Scheme::DualFreqDroop2:
            positive(g.K_omega1, "K_omega1");
            positive(g.K_omega2, "K_omega2");
            positive(g.K_i, "K_i");
            positive(g.K_pdc, "K_pdc");
            positive(g.K_idc, "K_idc");
            break;
        case Scheme::DualAcDcDroop:
            positive(g.K_omega1, "K_omega1");
            positive(g.K_omega2, "K_omega2");
            positive(g.K_v1, "K_v1");
            positive(g.K_v2, "K_v2");
            positive(g.K_i1, "K_i1");
            positive(g.K_i2, "K_i2");
            break;
        case Scheme::Matching:
            positive(g.m1, "m1");
            positive(g.m2, "m2");
            break;
        case Scheme::GfmFreqDroop:
            positive(g.K_omega1, "K_omega1");
            positive(g.K_omega2, "K_omega2");
            positive(g.K_i1, "K_i1");
            positive(g.K_i2, "K_i2");
            positive(g.K_pdc, "K_pdc");
            positive(g.K_idc, "K_idc");
            positive(g.m_p1, "m_p1");
            positive(g.m_p2, "m_p2");
            kappa(g.kappa_s1, "kappa_s1");
            kappa(g.kappa_s2, "kappa_s2");
            if (!(g.kappa_s1 + g.kappa_s2 > 0)) fail(ErrorKind::SchemaViolation, who + "kappa_s1 + kappa_s2 must be > 0");
            break;
        case Scheme::GfmDualDroop:
            positive(g.K_omega1, "K_omega1");
            positive(g.K_omega2, "K_omega2");
            positive(g.K_v1, "K_v1");
            positive(g.K_v2, "K_v2");
            positive(g.m_p1, "m_p1");
            positive(g.m_p2, "m_p2");
            if (g.K_i1 < 0 || g.K_i2 < 0) fail(ErrorKind::SchemaViolation, who + "K_i1, K_i2 must be non-negative");
            break;
        case Scheme::DualDroopMatching:
            positive(g.m1, "m1");
            positive(g.K_omega2, "K_omega2");
            positive(g.K_v2, "K_v2");
            positive(g.K_i2, "K_i2");
            break;
        case Scheme::GflGfmDualDroop:
            positive(g.K_omega1, "K_omega1");
            positive(g.K_omega2, "K_omega2");
            positive(g.K_v1, "K_v1");
            positive(g.K_v2, "K_v2");
            positive(g.m_p1, "m_p1");
            positive(g.K_i1, "K_i1");
            positive(g.K_i2, "K_i2");
            break;
    }
}

std::size_t controller_state_dim(Scheme s) { return info(s).ctrl_states.size(); }
std::size_t ilc_state_dim(Scheme s) { return 3 + controller_state_dim(s); }
std::size_t gfm_core_dim(Scheme s) { return 1 + controller_state_dim(s); }

std::vector<std::string> ilc_state_names(Scheme s) {
    std::vector<std::string> names;
    switch (port_config(s)) {
        case PortConfig::GridFollowing: names = {"p1", "p2", "vdc"}; break;
        case PortConfig::GridForming: names = {"eta1", "eta2", "vdc"}; break;
        case PortConfig::Partial: names = {"eta1", "p2", "vdc"}; break;
    }
    for (const auto& c : info(s).ctrl_states) names.push_back(c);
    return names;
}

std::vector<std::string> gfm_core_state_names(Scheme s) {
    std::vector<std::string> names{"vdc"};
    for (const auto& c : info(s).ctrl_states) names.push_back(c);
    return names;
}

double dc_bus_rate(double p1, double p2, double v_dc, const IlcPhysical& phys) {
    const double v = v_dc + phys.V_dc_ref;
    if (!(v > 0)) fail(ErrorKind::DcVoltageCollapse, "DC voltage " + std::to_string(v) + " V is not positive");
    return (-p1 / v - p2 / v - phys.K_dc * v_dc) / phys.C;
}

double dc_steady_voltage(double p_total, const IlcPhysical& phys) {
    // K_dc * V * (V + Vref) = -p_total, branch through the origin.
    if (phys.K_dc == 0) {
        if (p_total != 0) fail(ErrorKind::NoEquilibrium, "no DC load to absorb a net transfer with K_dc = 0");
        return 0.0;
    }
    const double c = p_total / phys.K_dc;  // V^2 + Vref V + c = 0
    const double disc = phys.V_dc_ref * phys.V_dc_ref - 4.0 * c;
    if (disc < 0) fail(ErrorKind::NoEquilibrium, "DC bus cannot absorb the requested transfer");
    const double sq = std::sqrt(disc);
    // Stable-cancellation form of (-Vref + sq) / 2.
    return -2.0 * c / (phys.V_dc_ref + sq);
}

ControllerOutput controller_rates_and_refs(const IlcUnit& u, const Measurements& m,
                                           std::span<const double> x) {
    if (x.size() != controller_state_dim(u.scheme))
        fail(ErrorKind::SchemeStateMismatch, std::string(scheme_tag(u.scheme)) + " expects " +
                                                 std::to_string(controller_state_dim(u.scheme)) +
                                                 " controller states, got " + std::to_string(x.size()));
    if (!std::isfinite(m.omega1) || !std::isfinite(m.omega2) || !std::isfinite(m.v_dc) || !std::isfinite(m.p1) ||
        !std::isfinite(m.p2) || !finite_all(x))
        fail(ErrorKind::NonFiniteInput, "controller received a non-finite value");

    const auto& g = u.gains;
    const double V = m.v_dc;
    ControllerOutput out;
    out.n = x.size();
    switch (u.scheme) {
        case Scheme::DualFreqDroop1: {
            const double droop = -g.K_omega1 * m.omega1 + g.K_omega2 * m.omega2;
            out.rates[0] = droop;
            out.rates[1] = V;
            out.ref1 = droop + g.K_i * x[0];
            out.ref2 = g.K_pdc * V + g.K_idc * x[1];
            break;
        }
        case Scheme::DualFreqDroop2: {
            const double droop = -g.K_omega1 * m.omega1 + g.K_omega2 * m.omega2;
            const double p_dc = g.K_pdc * V + g.K_idc * x[1];
            out.rates[0] = droop;
            out.rates[1] = V;
            out.ref1 = droop + g.K_i * x[0] + p_dc;
            out.ref2 = -droop - g.K_i * x[0] + p_dc;
            break;
        }
        case Scheme::DualAcDcDroop: {
            const double d1 = g.K_v1 * V - g.K_omega1 * m.omega1;
            const double d2 = g.K_v2 * V - g.K_omega2 * m.omega2;
            out.rates[0] = d1;
            out.rates[1] = d2;
            out.ref1 = d1 + g.K_i1 * x[0];
            out.ref2 = d2 + g.K_i2 * x[1];
            break;
        }
        case Scheme::Matching:
            out.kind1 = out.kind2 = RefKind::Frequency;
            out.ref1 = g.m1 * V;
            out.ref2 = g.m2 * V;
            break;
        case Scheme::GfmFreqDroop: {
            const double zeta = x[0], p_eq = x[1], pf1 = x[2], pf2 = x[3];
            const double p_dc = g.K_pdc * V + g.K_idc * zeta;
            out.kind1 = out.kind2 = RefKind::Frequency;
            out.ref1 = -g.m_p1 * (pf1 - g.kappa_s1 * p_dc + g.K_i1 * p_eq);
            out.ref2 = -g.m_p2 * (pf2 - g.kappa_s2 * p_dc - g.K_i2 * p_eq);
            out.rates[0] = V;
            out.rates[1] = g.K_omega1 * out.ref1 - g.K_omega2 * out.ref2;
            out.rates[2] = (-pf1 + m.p1) / u.phys.tau1;
            out.rates[3] = (-pf2 + m.p2) / u.phys.tau2;
            break;
        }
        case Scheme::GfmDualDroop: {
            const double xi1 = x[0], xi2 = x[1], pf1 = x[2], pf2 = x[3];
            const double fb = g.power_feedback ? 1.0 : 0.0;
            out.kind1 = out.kind2 = RefKind::Frequency;
            out.ref1 = g.m_p1 * (-fb * pf1 + g.K_v1 * V + g.K_i1 * xi1);
            out.ref2 = g.m_p2 * (-fb * pf2 + g.K_v2 * V + g.K_i2 * xi2);
            out.rates[0] = g.K_v1 * V - g.K_omega1 * out.ref1;
            out.rates[1] = g.K_v2 * V - g.K_omega2 * out.ref2;
            out.rates[2] = (-pf1 + m.p1) / u.phys.tau1;
            out.rates[3] = (-pf2 + m.p2) / u.phys.tau2;
            break;
        }
        case Scheme::DualDroopMatching: {
            const double d2 = g.K_v2 * V - g.K_omega2 * m.omega2;
            out.kind1 = RefKind::Frequency;
            out.ref1 = g.m1 * V;
            out.rates[0] = d2;
            out.ref2 = d2 + g.K_i2 * x[0];
            break;
        }
        case Scheme::GflGfmDualDroop: {
            const double xi1 = x[0], pf1 = x[1], xi2 = x[2];
            const double d2 = g.K_v2 * V - g.K_omega2 * m.omega2;
            out.kind1 = RefKind::Frequency;
            out.ref1 = g.m_p1 * (-pf1 + g.K_v1 * V + g.K_i1 * xi1);
            out.rates[0] = g.K_v1 * V - g.K_omega1 * out.ref1;
            out.rates[1] = (-pf1 + m.p1) / u.phys.tau1;
            out.rates[2] = d2;
            out.ref2 = d2 + g.K_i2 * xi2;
            break;
        }
    }
    return out;
}

std::array<double, 2> ilc_port_powers(const IlcUnit& u, std::span<const double> s) {
    switch (port_config(u.scheme)) {
        case PortConfig::GridFollowing: return {s[0], s[1]};
        case PortConfig::GridForming: return {link_power(s[0], u.phys.B), link_power(s[1], u.phys.B)};
        case PortConfig::Partial: return {link_power(s[0], u.phys.B), s[1]};
    }
    return {0, 0};
}

void ilc_derivative(const IlcUnit& u, std::span<const double> s, double omega1, double omega2,
                    std::span<double> rate) {
    const std::size_t n = ilc_state_dim(u.scheme);
    if (s.size() != n || rate.size() != n)
        fail(ErrorKind::SchemeStateMismatch, std::string(scheme_tag(u.scheme)) + " expects " + std::to_string(n) +
                                                 " states, got " + std::to_string(s.size()));
    const auto p = ilc_port_powers(u, s);
    const double V = s[2];
    Measurements m{omega1, omega2, V, p[0], p[1]};
    const auto out = controller_rates_and_refs(u, m, s.subspan(3));
    switch (port_config(u.scheme)) {
        case PortConfig::GridFollowing:
            rate[0] = (-s[0] + out.ref1) / u.phys.tau1;
            rate[1] = (-s[1] + out.ref2) / u.phys.tau2;
            break;
        case PortConfig::GridForming:
            rate[0] = out.ref1 - omega1;
            rate[1] = out.ref2 - omega2;
            break;
        case PortConfig::Partial:
            rate[0] = out.ref1 - omega1;
            rate[1] = (-s[1] + out.ref2) / u.phys.tau2;
            break;
    }
    rate[2] = dc_bus_rate(p[0], p[1], V, u.phys);
    for (std::size_t k = 0; k < out.n; ++k) rate[3 + k] = out.rates[k];
}

std::array<double, 2> ilc_output(const IlcUnit& u, std::span<const double> s) {
    const auto p = ilc_port_powers(u, s);
    return {-p[0], -p[1]};
}

void gfm_derivative(const IlcUnit& u, std::span<const double> core, double p1, double p2, std::span<double> rate) {
    if (port_config(u.scheme) != PortConfig::GridForming)
        fail(ErrorKind::PortMismatch, std::string(scheme_tag(u.scheme)) + " has no native grid-forming port");
    if (core.size() != gfm_core_dim(u.scheme) || rate.size() != core.size())
        fail(ErrorKind::SchemeStateMismatch, "grid-forming core state has the wrong dimension");
    Measurements m{0, 0, core[0], p1, p2};
    const auto out = controller_rates_and_refs(u, m, core.subspan(1));
    rate[0] = dc_bus_rate(p1, p2, core[0], u.phys);
    for (std::size_t k = 0; k < out.n; ++k) rate[1 + k] = out.rates[k];
}

std::array<double, 2> gfm_output(const IlcUnit& u, std::span<const double> core, double p1, double p2) {
    if (port_config(u.scheme) != PortConfig::GridForming)
        fail(ErrorKind::PortMismatch, std::string(scheme_tag(u.scheme)) + " has no native grid-forming port");
    Measurements m{0, 0, core[0], p1, p2};
    const auto out = controller_rates_and_refs(u, m, core.subspan(1));
    return {out.ref1, out.ref2};
}

std::vector<double> ilc_equilibrium(const IlcUnit& u, const IlcBoundary& b) {
    const auto& g = u.gains;
    const auto& ph = u.phys;
    const double w1 = b.omega1, w2 = b.omega2, p1 = b.p1;
    if (!std::isfinite(w1) || !std::isfinite(w2) || !std::isfinite(p1))
        fail(ErrorKind::NonFiniteInput, "equilibrium boundary is not finite");
    auto require = [&](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::NoEquilibrium, std::string(scheme_tag(u.scheme)) + ": " + what);
    };
    auto equal_normalized = [&] {
        require(same(g.K_omega1 * w1, g.K_omega2 * w2), "normalized MG frequencies differ");
    };

    std::vector<double> x(ilc_state_dim(u.scheme), 0.0);
    double V = 0, p2 = 0;
    switch (u.scheme) {
        case Scheme::DualFreqDroop1:
            equal_normalized();
            p2 = -p1;
            x[3] = (p1 + g.K_omega1 * w1 - g.K_omega2 * w2) / g.K_i;
            x[4] = p2 / g.K_idc;
            break;
        case Scheme::DualFreqDroop2:
            equal_normalized();
            p2 = -p1;
            x[3] = (p1 + g.K_omega1 * w1 - g.K_omega2 * w2) / g.K_i;
            x[4] = 0.0;
            break;
        case Scheme::DualAcDcDroop:
            V = g.K_omega1 * w1 / g.K_v1;
            require(same(g.K_v2 * V, g.K_omega2 * w2), "DC droop relations of the two sides disagree");
            p2 = -p1 - ph.K_dc * V * (V + ph.V_dc_ref);
            x[3] = p1 / g.K_i1;
            x[4] = p2 / g.K_i2;
            break;
        case Scheme::Matching:
            V = w1 / g.m1;
            require(same(g.m2 * V, w2), "omega1/m1 and omega2/m2 disagree");
            p2 = -p1 - ph.K_dc * V * (V + ph.V_dc_ref);
            break;
        case Scheme::GfmFreqDroop: {
            require(same(g.K_omega1 * w1, g.K_omega2 * w2), "normalized MG frequencies differ");
            p2 = -p1;
            const double r1 = -w1 / g.m_p1 - p1;
            const double r2 = -w2 / g.m_p2 - p2;
            const double det = g.kappa_s1 * g.K_i2 + g.kappa_s2 * g.K_i1;
            const double p_dc = (-g.K_i2 * r1 - g.K_i1 * r2) / det;
            const double p_eq = (g.kappa_s2 * r1 - g.kappa_s1 * r2) / det;
            x[3] = p_dc / g.K_idc;
            x[4] = p_eq;
            x[5] = p1;
            x[6] = p2;
            break;
        }
        case Scheme::GfmDualDroop: {
            V = g.K_omega1 * w1 / g.K_v1;
            require(same(g.K_v2 * V, g.K_omega2 * w2), "DC droop relations of the two sides disagree");
            p2 = -p1 - ph.K_dc * V * (V + ph.V_dc_ref);
            const double fb = g.power_feedback ? 1.0 : 0.0;
            require(g.K_i1 > 0 && g.K_i2 > 0, "integral gains must be positive");
            x[3] = (w1 / g.m_p1 + fb * p1 - g.K_v1 * V) / g.K_i1;
            x[4] = (w2 / g.m_p2 + fb * p2 - g.K_v2 * V) / g.K_i2;
            x[5] = p1;
            x[6] = p2;
            break;
        }
        case Scheme::DualDroopMatching:
            V = w1 / g.m1;
            require(same(g.K_v2 * V, g.K_omega2 * w2), "matching side and droop side disagree on the DC voltage");
            p2 = -p1 - ph.K_dc * V * (V + ph.V_dc_ref);
            x[3] = p2 / g.K_i2;
            break;
        case Scheme::GflGfmDualDroop:
            V = g.K_omega1 * w1 / g.K_v1;
            require(same(g.K_v2 * V, g.K_omega2 * w2), "DC droop relations of the two sides disagree");
            p2 = -p1 - ph.K_dc * V * (V + ph.V_dc_ref);
            x[3] = (w1 / g.m_p1 + p1 - g.K_v1 * V) / g.K_i1;
            x[4] = p1;
            x[5] = p2 / g.K_i2;
            break;
    }
    require(V + ph.V_dc_ref > 0, "DC voltage would collapse");
    x[2] = V;
    switch (port_config(u.scheme)) {
        case PortConfig::GridFollowing:
            x[0] = p1;
            x[1] = p2;
            break;
        case PortConfig::GridForming:
            x[0] = link_angle(p1, ph.B);
            x[1] = link_angle(p2, ph.B);
            break;
        case PortConfig::Partial:
            x[0] = link_angle(p1, ph.B);
            x[1] = p2;
            break;
    }
    return x;
}

}  // namespace mgilc
