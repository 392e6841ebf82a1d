#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mgilc/ilc.hpp"
#include "mgilc/mg_models.hpp"
#include "mgilc/network.hpp"

namespace mgilc {

struct StateSlice {
    std::size_t offset = 0, size = 0;
};

class OdeSystem {
public:
    static OdeSystem assemble(const ValidatedNetwork& net, std::vector<MgModel> mgs, std::vector<IlcUnit> ilcs);

    std::size_t dimension() const { return dim_; }
    const ValidatedNetwork& network() const { return net_; }
    const std::vector<MgModel>& mgs() const { return mgs_; }
    const std::vector<IlcUnit>& ilcs() const { return ilcs_; }
    StateSlice mg_slice(std::size_t j) const { return mg_slices_.at(j); }
    StateSlice ilc_slice(std::size_t l) const { return ilc_slices_.at(l); }

    // p_load holds one exogenous load deviation per MG.
    void derivative(std::span<const double> x, std::span<const double> p_load, std::span<double> dx) const;

    // Power injected into each MG by all attached ILCs.
    std::vector<double> mg_power_inputs(std::span<const double> x) const;

    std::vector<std::string> state_labels() const;
    // Characteristic magnitude per state (used for Newton scaling and finite-difference steps).
    std::vector<double> state_scales() const;
    // Absolute tolerances per state unit: 1e-6 V, 1e-9 rad/s and rad, 1e-3 W.
    std::vector<double> absolute_tolerances() const;

    // MG-frequency entries of x.
    double mg_omega(std::span<const double> x, std::size_t j) const { return x[mg_slices_[j].offset]; }
    double ilc_vdc(std::span<const double> x, std::size_t l) const { return x[ilc_slices_[l].offset + 2]; }

private:
    ValidatedNetwork net_;
    std::vector<MgModel> mgs_;
    std::vector<IlcUnit> ilcs_;
    std::vector<StateSlice> mg_slices_, ilc_slices_;
    std::size_t dim_ = 0;
};

// Per-state magnitude and absolute tolerance keyed by raw state name (omega, p_m, p1, eta1, vdc, zeta, xi1, ...).
double characteristic_scale(const std::string& raw_name);
double absolute_tolerance(const std::string& raw_name);

struct EquilibriumPoint {
    std::vector<double> state;
    std::vector<double> p_load;
    double residual_norm = 0;
    int iterations = 0;
};

struct NewtonOptions {
    int max_iterations = 50;
    double tolerance = 1e-8;
};

// Component-wise steady state for the given loads, usable as a Newton guess.
std::vector<double> equilibrium_guess(const OdeSystem& ode, std::span<const double> p_load);

EquilibriumPoint find_equilibrium(const OdeSystem& ode, std::span<const double> p_load,
                                  std::span<const double> guess, const NewtonOptions& opts = {});

// Scaled residual used by find_equilibrium.
double scaled_residual(const OdeSystem& ode, std::span<const double> x, std::span<const double> p_load);

struct LoadEvent {
    double time = 0;
    std::size_t mg = 0;  // 0-based
    double delta_p_load = 0;
};

struct IntegrateOptions {
    double rtol = 1e-7;
    double atol_scale = 1.0;  // multiplies the per-unit absolute tolerances
    double max_step = 0.05;
    double initial_step = 1e-4;
    double min_step = 1e-12;
    double output_interval = 0.0;  // 0 records every accepted step
    double omega_bound = 5.0;
    double vdc_bound_fraction = 0.2;
    bool track_dc_energy = false;
};

struct EventRecord {
    double time = 0;
    std::size_t mg = 0;
    double delta_p_load = 0;
};

struct Trajectory {
    std::vector<double> time;
    std::vector<double> data;  // row-major, one row per time sample
    std::size_t dim = 0;
    std::vector<std::string> labels;
    std::vector<EventRecord> event_log;
    std::vector<double> dc_work;  // row-major per sample and ILC: integral of the DC power balance
    std::size_t ilc_count = 0;
    bool truncated = false;
    std::string truncation_reason;
    std::size_t accepted_steps = 0, rejected_steps = 0;

    std::size_t samples() const { return time.size(); }
    std::span<const double> state(std::size_t k) const { return {data.data() + k * dim, dim}; }
    std::span<const double> final_state() const { return state(samples() - 1); }
};

Trajectory integrate(const OdeSystem& ode, std::span<const double> x0, std::span<const double> base_load,
                     std::vector<LoadEvent> events, double t0, double t_end, const IntegrateOptions& opts = {});

// CSV with t, per-MG omega (and per-unit omega on base 2*pi*f_base), per-ILC p1, p2, vdc and remaining states.
void write_trajectory_csv(const Trajectory& traj, const OdeSystem& ode, std::ostream& out, double f_base = 50.0);

}  // namespace mgilc
