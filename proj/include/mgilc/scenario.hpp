#pragma once

#include <string>
#include <vector>

#include "mgilc/engine.hpp"

namespace mgilc {

struct IlcEntry {
    IlcEndpoints endpoints;  // 0-based
    IlcUnit unit;
};

struct SimConfig {
    double t_end = 60.0;
    IntegrateOptions integrator{};
    double f_nom = 50.0;  // per-unit frequency base
};

struct SystemSpec {
    std::string name;
    std::vector<MgModel> mgs;
    std::vector<double> p_load;  // base load per MG, W
    std::vector<IlcEntry> ilcs;
    std::vector<LoadEvent> events;
    SimConfig sim;
    std::string notes;
};

SystemSpec parse_scenario_text(const std::string& text);
SystemSpec parse_scenario(const std::string& path);

// Fully resolved document (every default written out); parsing it reproduces the same system.
std::string resolved_json(const SystemSpec& spec);

// Validation plus assembly.
struct BuiltSystem {
    ValidatedNetwork net;
    OdeSystem ode;
};
BuiltSystem build_system(const SystemSpec& spec);

// Equilibrium at the base loads, starting from the component-wise guess.
EquilibriumPoint base_equilibrium(const SystemSpec& spec, const OdeSystem& ode);

// Runs the scenario: equilibrium at base loads, then events through sim.t_end.
Trajectory simulate(const SystemSpec& spec, const OdeSystem& ode);

// Parameter paths: ilc.K_dc, ilc.tau, ilc.C, ilc.L, ilc.B, ilc.V_dc_ref, ilc.gains.<name> where <name> is
// K_omega, K_v, K_i, m, m_p (both sides) or any single gain field; prefix ilc[k]. targets one ILC (1-based).
void apply_parameter(SystemSpec& spec, const std::string& path, double value);
double read_parameter(const SystemSpec& spec, const std::string& path);

void set_scheme(SystemSpec& spec, Scheme scheme);

}  // namespace mgilc
