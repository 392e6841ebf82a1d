#include "mgilc/mg_models.hpp"

#include <cmath>

#include "mgilc/error.hpp"

namespace mgilc {

std::size_t mg_state_dim(const MgModel& m) { return m.kind == MgKind::FirstOrderDroop ? 1 : 2; }

std::array<const char*, 2> mg_state_names(const MgModel& m) {
    if (m.kind == MgKind::FirstOrderDroop) return {"omega", nullptr};
    return {"omega", "p_m"};
}

const char* to_string(MgKind k) { return k == MgKind::FirstOrderDroop ? "first-order-droop" : "swing-governor"; }

void validate_mg(const MgModel& m, std::size_t index) {
    auto need = [&](double v, const char* name) {
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "MG " + std::to_string(index + 1) + ": " + name);
        if (!(v > 0))
            fail(ErrorKind::SchemaViolation,
                 "MG " + std::to_string(index + 1) + ": " + name + " must be strictly positive");
    };
    need(m.D, "D");
    need(m.rating, "rating");
    if (m.kind == MgKind::FirstOrderDroop) {
        need(m.T, "T");
    } else {
        need(m.M, "M");
        need(m.T_g, "T_g");
        need(m.inv_R, "inv_R");
    }
}

void mg_derivative(const MgModel& m, std::span<const double> state, double p_in, double p_load,
                   std::span<double> rate) {
    const double w = state[0];
    if (!std::isfinite(w) || !std::isfinite(p_in) || !std::isfinite(p_load))
        fail(ErrorKind::NonFiniteInput, "MG derivative received a non-finite value");
    if (m.kind == MgKind::FirstOrderDroop) {
        rate[0] = (-m.D * w + p_in + p_load) / m.T;
        return;
    }
    const double pm = state[1];
    if (!std::isfinite(pm)) fail(ErrorKind::NonFiniteInput, "MG governor power is not finite");
    rate[0] = (-m.D * w + pm + p_in + p_load) / m.M;
    rate[1] = (-pm - m.inv_R * w) / m.T_g;
}

double mg_stiffness(const MgModel& m) { return m.kind == MgKind::FirstOrderDroop ? m.D : m.D + m.inv_R; }

void mg_steady_state(const MgModel& m, double p_total, std::span<double> state) {
    const double w = p_total / mg_stiffness(m);
    state[0] = w;
    if (m.kind == MgKind::SwingGovernor) state[1] = -m.inv_R * w;
}

double mg_contribution(const MgModel& m, std::span<const double> state) {
    double p = -m.D * state[0];
    if (m.kind == MgKind::SwingGovernor) p += state[1];
    return p;
}

LinearSystem mg_linearize(const MgModel& m) {
    LinearSystem s;
    const auto n = static_cast<Eigen::Index>(mg_state_dim(m));
    s.a = Eigen::MatrixXd::Zero(n, n);
    s.b = Eigen::MatrixXd::Zero(n, 1);
    s.c = Eigen::MatrixXd::Zero(1, n);
    s.d = Eigen::MatrixXd::Zero(1, 1);
    s.c(0, 0) = 1.0;
    if (m.kind == MgKind::FirstOrderDroop) {
        s.a(0, 0) = -m.D / m.T;
        s.b(0, 0) = 1.0 / m.T;
        s.state_labels = {"omega"};
    } else {
        s.a << -m.D / m.M, 1.0 / m.M, -m.inv_R / m.T_g, -1.0 / m.T_g;
        s.b(0, 0) = 1.0 / m.M;
        s.state_labels = {"omega", "p_m"};
    }
    s.input_labels = {"p"};
    s.output_labels = {"omega"};
    return s;
}

}  // namespace mgilc
