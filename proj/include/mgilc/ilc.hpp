#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mgilc {

enum class Scheme {
    DualFreqDroop1,
    DualFreqDroop2,
    DualAcDcDroop,
    Matching,
    GfmFreqDroop,
    GfmDualDroop,
    DualDroopMatching,
    GflGfmDualDroop,
};

enum class PortConfig { GridFollowing, GridForming, Partial };

inline constexpr std::array<Scheme, 8> kAllSchemes = {
    Scheme::DualFreqDroop1, Scheme::DualFreqDroop2, Scheme::DualAcDcDroop,     Scheme::Matching,
    Scheme::GfmFreqDroop,   Scheme::GfmDualDroop,   Scheme::DualDroopMatching, Scheme::GflGfmDualDroop,
};

const char* scheme_tag(Scheme s);
const char* scheme_display_name(Scheme s);
Scheme parse_scheme(std::string_view tag);  // throws UnknownScheme
PortConfig port_config(Scheme s);

struct IlcPhysical {
    double C = 1e-3;
    double V_dc_ref = 1e4;
    double K_dc = 1.0;
    double tau1 = 0.05;
    double tau2 = 0.05;
    double V_ac = 3300.0;
    double f_nom = 50.0;
    std::optional<double> L = 1e-3;  // when set, B follows from V_ac, f_nom and L
    double B = 0.0;

    void refresh_susceptance();
};

struct ControllerGains {
    double K_omega1 = 2.5e7, K_omega2 = 2.5e7;
    double K_v1 = 2.5e4, K_v2 = 2.5e4;
    double K_i = 10.0, K_i1 = 10.0, K_i2 = 10.0;
    double K_pdc = 2.5e4, K_idc = 2.5e5;
    double m1 = 1e-3, m2 = 1e-3;
    double m_p1 = 5e-8, m_p2 = 5e-8;
    double kappa_s1 = 0.5, kappa_s2 = 0.5;
    // Grid-forming dual droop only: drops the filtered-power droop term when false.
    bool power_feedback = true;
};

struct IlcUnit {
    Scheme scheme = Scheme::DualFreqDroop1;
    IlcPhysical phys;
    ControllerGains gains;
};

// Checks the invariants of the physical block and the gains used by the scheme.
void validate_ilc(const IlcUnit& u, std::size_t index);

// Engine layout: three plant states followed by controller states.
//   grid-following: p1, p2, vdc
//   grid-forming:   eta1, eta2, vdc   (eta_k is the link angle into MG k)
//   partial:        eta1, p2, vdc
std::size_t controller_state_dim(Scheme s);
std::size_t ilc_state_dim(Scheme s);
std::vector<std::string> ilc_state_names(Scheme s);

// Native grid-forming layout without link angles: vdc followed by controller states.
std::size_t gfm_core_dim(Scheme s);
std::vector<std::string> gfm_core_state_names(Scheme s);

double dc_bus_rate(double p1, double p2, double v_dc, const IlcPhysical& phys);

// Steady DC deviation for a constant total transfer p1 + p2 into the MGs.
double dc_steady_voltage(double p_total, const IlcPhysical& phys);

enum class RefKind { Power, Frequency };

struct Measurements {
    double omega1 = 0, omega2 = 0;  // MG frequency deviations, rad/s
    double v_dc = 0;
    double p1 = 0, p2 = 0;          // power leaving the ILC into each MG, W
};

struct ControllerOutput {
    std::array<double, 4> rates{};
    std::size_t n = 0;
    RefKind kind1 = RefKind::Power, kind2 = RefKind::Power;
    double ref1 = 0, ref2 = 0;
};

ControllerOutput controller_rates_and_refs(const IlcUnit& u, const Measurements& meas,
                                           std::span<const double> ctrl_state);

// Power delivered into each MG by the plant in engine layout.
std::array<double, 2> ilc_port_powers(const IlcUnit& u, std::span<const double> state);

// Engine layout derivative; inputs are the attached MG frequencies.
void ilc_derivative(const IlcUnit& u, std::span<const double> state, double omega1, double omega2,
                    std::span<double> rate);

// Engine layout output y = [-p1, -p2].
std::array<double, 2> ilc_output(const IlcUnit& u, std::span<const double> state);

// Native grid-forming port: inputs are the powers delivered into the MGs, outputs the reference frequencies.
void gfm_derivative(const IlcUnit& u, std::span<const double> core, double p1, double p2, std::span<double> rate);
std::array<double, 2> gfm_output(const IlcUnit& u, std::span<const double> core, double p1, double p2);

struct IlcBoundary {
    double omega1 = 0, omega2 = 0;
    double p1 = 0;  // power delivered into MG a; p2 follows from the DC balance
};

// Engine layout steady state. Throws NoEquilibrium if the boundary violates the scheme's constraints.
std::vector<double> ilc_equilibrium(const IlcUnit& u, const IlcBoundary& b);

// Largest admissible link angle magnitude.
inline constexpr double kAngleLimit = 1.5707963267948966;

}  // namespace mgilc
