#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "mgilc/linear_system.hpp"

namespace mgilc {

enum class MgKind { FirstOrderDroop, SwingGovernor };

// Aggregate power -> frequency model. SI units, deviations from nominal.
struct MgModel {
    MgKind kind = MgKind::SwingGovernor;
    double T = 1.0;      // FirstOrderDroop lag, s
    double D = 1e4;      // damping / droop, W s/rad
    double M = 1e6;      // inertia, W s^2/rad
    double T_g = 0.2;    // governor time constant, s
    double inv_R = 1e7;  // inverse droop, W s/rad
    double rating = 1e8; // W, sizes disturbances only
};

// omega first, then p_m for SwingGovernor.
std::size_t mg_state_dim(const MgModel& m);
std::array<const char*, 2> mg_state_names(const MgModel& m);

void validate_mg(const MgModel& m, std::size_t index);

void mg_derivative(const MgModel& m, std::span<const double> state, double p_in, double p_load,
                   std::span<double> rate);

// Steady state for constant total injection p_in + p_load.
void mg_steady_state(const MgModel& m, double p_total, std::span<double> state);

// Static power/frequency stiffness (D + 1/R for SwingGovernor, D for FirstOrderDroop).
double mg_stiffness(const MgModel& m);

// Power produced inside the MG in response to frequency (damping plus governor), W.
double mg_contribution(const MgModel& m, std::span<const double> state);

LinearSystem mg_linearize(const MgModel& m);

const char* to_string(MgKind k);

}  // namespace mgilc
