#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mgilc/engine.hpp"
#include "mgilc/ilc.hpp"
#include "mgilc/linear_system.hpp"
#include "mgilc/polynomial.hpp"

namespace mgilc {

using VecFn = std::function<void(std::span<const double> x, std::span<const double> u, std::span<double> out)>;

// Central differences with step 1e-5 * max(|v|, scale) per variable.
LinearSystem linearize(const VecFn& f, const VecFn& g, std::span<const double> x0, std::span<const double> u0,
                       std::span<const double> x_scale, std::span<const double> u_scale, std::size_t n_out);

enum class PortConvention {
    GridFollowing,  // inputs [omega1, omega2], outputs [-p1, -p2], link angles inside the unit
    GridForming,    // inputs [-p1, -p2], outputs [omega_ref1, omega_ref2], no link angles
};

// Port convention the unit exposes natively.
PortConvention native_convention(const IlcUnit& u);

struct IlcOperatingPoint {
    std::vector<double> state;  // engine layout
    double omega1 = 0, omega2 = 0;
};

LinearSystem linearize_ilc(const IlcUnit& u, const IlcOperatingPoint& op, PortConvention conv);
LinearSystem linearize_ilc(const IlcUnit& u, PortConvention conv);  // about the origin

// Closed-loop state matrix of the assembled ODE at an equilibrium.
LinearSystem linearize_closed_loop(const OdeSystem& ode, const EquilibriumPoint& eq);

// Local operating point of ILC l taken from an assembled equilibrium.
IlcOperatingPoint ilc_operating_point(const OdeSystem& ode, const EquilibriumPoint& eq, std::size_t l);

// G(jw) = C (jwI - A)^-1 B + D.
Eigen::MatrixXcd transfer_matrix(const LinearSystem& lin, double omega);

double spectral_abscissa(const Eigen::MatrixXd& a);

// Independent ILC cycles (|Z| - |N| + 1 for a connected graph). Each one leaves a circulating transfer
// undetermined, i.e. a zero eigenvalue tangent to a manifold of equilibria.
int circulation_modes(const ValidatedNetwork& net);

// Spectral abscissa after discarding the `ignored` eigenvalues of smallest magnitude (all must lie within
// zero_tol of the origin relative to the spectral radius, otherwise nothing is discarded).
double reduced_abscissa(const Eigen::MatrixXd& a, int ignored, double zero_tol = 1e-7);
double stability_eigs(const LinearSystem& lin);

std::vector<double> log_grid(double lo, double hi, std::size_t n);

enum class PassivityVerdict { Passive, Marginal, NonPassive };
const char* to_string(PassivityVerdict v);

struct PassivityPoint {
    double omega = 0;
    double min_eig = 0;
    double gain = 0;  // spectral norm of G(jw)
    std::vector<double> diag_re;
    double imag_residue = 0;  // largest |Im| of the general eigen solver on the Hermitian part
};

struct PassivityReport {
    std::vector<PassivityPoint> points;
    std::vector<double> skipped;  // singular resolvent frequencies
    PassivityVerdict verdict = PassivityVerdict::Passive;
    double worst_omega = 0, worst_min_eig = 0, worst_relative = 0;
    double eps_rel = 1e-9;
    // High-frequency diagonal asymptote: per port, relative degree and whether Re G_ii < 0 somewhere beyond the grid.
    std::vector<int> diag_relative_degree;
    std::vector<bool> diag_negative_tail;
    bool negative_tail() const;
    // Strict variant: every point above +eps_rel * |G|.
    bool strictly_positive() const;
};

PassivityReport passivity_sweep(const LinearSystem& lin, const std::vector<double>& grid, double eps_rel = 1e-9,
                                std::size_t workers = 1);
PassivityReport passivity_sweep(const LinearSystem& lin);  // default 400-point grid on [1e-2, 1e4]

// Columns omega, min_eig, diag<k>_re.
void write_passivity_csv(const PassivityReport& rep, std::ostream& out);

struct ObservabilityReport {
    int n = 0;
    int observability_rank = 0;
    std::vector<double> sample_omegas;
    std::vector<int> rosenbrock_ranks;
    int rosenbrock_cols = 0;
    bool rosenbrock_full() const;
};

int numeric_rank(const Eigen::MatrixXcd& m, double rel_tol = 1e-10);
ObservabilityReport observability_rank(const LinearSystem& lin, std::size_t samples = 32, double w_lo = 1e-2,
                                       double w_hi = 1e4);

// Transfer functions of the single-converter chain for the first dual frequency droop scheme.
struct VscChain {
    Rational omega2_to_p1;  // input -omega2, output p1
    Rational p1_to_vdc;     // open DC bus
    Rational vdc_to_p2;     // DC regulator closed around the bus
    Rational omega2_to_p2;  // product of the three
};

VscChain single_vsc_chain(const IlcUnit& u);

}  // namespace mgilc
