#include "mgilc/mgilc.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mgilc/analysis.hpp"
#include "mgilc/error.hpp"
#include "mgilc/parallel.hpp"
#include "mgilc/scenario.hpp"
#include "mgilc/svg.hpp"
#include "mgilc/sweep.hpp"

struct mgilc_scenario {
    mgilc::SystemSpec spec;
};

struct mgilc_trajectory {
    mgilc::Trajectory traj;
    mgilc::OdeSystem ode;
    double f_nom = 50.0;
};

struct mgilc_linear {
    mgilc::LinearSystem lin;
    int ignored_modes = 0;
};

struct mgilc_passivity {
    mgilc::PassivityReport rep;
    std::string title;
};

struct mgilc_table {
    mgilc::SweepTable table;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

mgilc_status record(mgilc_status s, const std::string& kind, const std::string& msg) {
    g_kind = kind;
    g_error = msg;
    return s;
}

mgilc_status usage(const std::string& msg) { return record(MGILC_ERR_USAGE, "Usage", msg); }

template <class F>
mgilc_status guarded(F&& body) {
    try {
        body();
        g_kind.clear();
        g_error.clear();
        return MGILC_OK;
    } catch (const mgilc::Error& e) {
        return record(static_cast<mgilc_status>(mgilc::category(e.kind())), mgilc::to_string(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return record(MGILC_ERR_NUMERICAL, "OutOfMemory", "allocation failed");
    } catch (const std::exception& e) {
        return record(MGILC_ERR_NUMERICAL, "Internal", e.what());
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) mgilc::fail(mgilc::ErrorKind::Io, "cannot write '" + path + "'");
    f << content;
    if (!f) mgilc::fail(mgilc::ErrorKind::Io, "write to '" + path + "' failed");
}

std::size_t ilc_index(const mgilc::SystemSpec& s, std::size_t ilc) {
    if (ilc < 1 || ilc > s.ilcs.size())
        mgilc::fail(mgilc::ErrorKind::DanglingEndpoint, "ILC " + std::to_string(ilc) + " does not exist");
    return ilc - 1;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

extern "C" {

const char* mgilc_last_error(void) { return g_error.c_str(); }
const char* mgilc_last_error_kind(void) { return g_kind.c_str(); }
const char* mgilc_version(void) { return "0.1.0"; }
void mgilc_string_free(char* s) { std::free(s); }

mgilc_status mgilc_scenario_load(const char* path, mgilc_scenario** out) {
    if (!path || !out) return usage("null argument");
    return guarded([&] { *out = new mgilc_scenario{mgilc::parse_scenario(path)}; });
}

mgilc_status mgilc_scenario_from_json(const char* text, mgilc_scenario** out) {
    if (!text || !out) return usage("null argument");
    return guarded([&] { *out = new mgilc_scenario{mgilc::parse_scenario_text(text)}; });
}

void mgilc_scenario_free(mgilc_scenario* s) { delete s; }

mgilc_status mgilc_scenario_clone(const mgilc_scenario* s, mgilc_scenario** out) {
    if (!s || !out) return usage("null argument");
    return guarded([&] { *out = new mgilc_scenario{s->spec}; });
}

mgilc_status mgilc_scenario_resolved_json(const mgilc_scenario* s, char** out) {
    if (!s || !out) return usage("null argument");
    return guarded([&] { *out = dup(mgilc::resolved_json(s->spec)); });
}

mgilc_status mgilc_scenario_counts(const mgilc_scenario* s, size_t* mgs, size_t* ilcs, size_t* states) {
    if (!s) return usage("null argument");
    return guarded([&] {
        if (mgs) *mgs = s->spec.mgs.size();
        if (ilcs) *ilcs = s->spec.ilcs.size();
        if (states) *states = mgilc::build_system(s->spec).ode.dimension();
    });
}

mgilc_status mgilc_scenario_set_param(mgilc_scenario* s, const char* path, double value) {
    if (!s || !path) return usage("null argument");
    return guarded([&] { mgilc::apply_parameter(s->spec, path, value); });
}

mgilc_status mgilc_scenario_get_param(const mgilc_scenario* s, const char* path, double* value) {
    if (!s || !path || !value) return usage("null argument");
    return guarded([&] { *value = mgilc::read_parameter(s->spec, path); });
}

mgilc_status mgilc_scenario_set_scheme(mgilc_scenario* s, const char* tag) {
    if (!s || !tag) return usage("null argument");
    return guarded([&] { mgilc::set_scheme(s->spec, mgilc::parse_scheme(tag)); });
}

mgilc_status mgilc_scenario_set_t_end(mgilc_scenario* s, double t_end) {
    if (!s) return usage("null argument");
    if (!(t_end > 0) || !std::isfinite(t_end)) return usage("t_end must be positive and finite");
    return guarded([&] { s->spec.sim.t_end = t_end; });
}

mgilc_status mgilc_scenario_add_event(mgilc_scenario* s, double time, size_t mg, double delta_p_load) {
    if (!s) return usage("null argument");
    return guarded([&] {
        if (mg < 1 || mg > s->spec.mgs.size())
            mgilc::fail(mgilc::ErrorKind::DanglingEndpoint, "MG " + std::to_string(mg) + " does not exist");
        if (!std::isfinite(time) || !std::isfinite(delta_p_load))
            mgilc::fail(mgilc::ErrorKind::NonFiniteInput, "event values must be finite");
        auto& ev = s->spec.events;
        auto it = ev.begin();
        while (it != ev.end() && it->time <= time) ++it;
        ev.insert(it, mgilc::LoadEvent{time, mg - 1, delta_p_load});
    });
}

mgilc_status mgilc_scenario_clear_events(mgilc_scenario* s) {
    if (!s) return usage("null argument");
    s->spec.events.clear();
    return MGILC_OK;
}

mgilc_status mgilc_simulate(const mgilc_scenario* s, mgilc_trajectory** out) {
    if (!s || !out) return usage("null argument");
    return guarded([&] {
        auto built = mgilc::build_system(s->spec);
        auto traj = mgilc::simulate(s->spec, built.ode);
        *out = new mgilc_trajectory{std::move(traj), std::move(built.ode), s->spec.sim.f_nom};
    });
}

void mgilc_trajectory_free(mgilc_trajectory* t) { delete t; }

mgilc_status mgilc_trajectory_size(const mgilc_trajectory* t, size_t* samples, size_t* dim) {
    if (!t) return usage("null argument");
    if (samples) *samples = t->traj.samples();
    if (dim) *dim = t->traj.dim;
    return MGILC_OK;
}

int mgilc_trajectory_truncated(const mgilc_trajectory* t) { return t && t->traj.truncated ? 1 : 0; }

const char* mgilc_trajectory_truncation_reason(const mgilc_trajectory* t) {
    return t ? t->traj.truncation_reason.c_str() : "";
}

mgilc_status mgilc_trajectory_time(const mgilc_trajectory* t, size_t k, double* value) {
    if (!t || !value) return usage("null argument");
    if (k >= t->traj.samples()) return usage("sample index out of range");
    *value = t->traj.time[k];
    return MGILC_OK;
}

mgilc_status mgilc_trajectory_final_omega(const mgilc_trajectory* t, size_t mg, double* value) {
    if (!t || !value) return usage("null argument");
    if (mg < 1 || mg > t->ode.mgs().size()) return usage("MG index out of range");
    *value = t->ode.mg_omega(t->traj.final_state(), mg - 1);
    return MGILC_OK;
}

mgilc_status mgilc_trajectory_final_vdc(const mgilc_trajectory* t, size_t ilc, double* value) {
    if (!t || !value) return usage("null argument");
    if (ilc < 1 || ilc > t->ode.ilcs().size()) return usage("ILC index out of range");
    *value = t->ode.ilc_vdc(t->traj.final_state(), ilc - 1);
    return MGILC_OK;
}

mgilc_status mgilc_trajectory_write_csv(const mgilc_trajectory* t, const char* path) {
    if (!t || !path) return usage("null argument");
    return guarded([&] {
        std::ostringstream os;
        mgilc::write_trajectory_csv(t->traj, t->ode, os, t->f_nom);
        write_file(path, os.str());
    });
}

mgilc_status mgilc_trajectory_write_svg(const mgilc_trajectory* t, const char* path) {
    if (!t || !path) return usage("null argument");
    return guarded([&] {
        mgilc::PlotSpec plot;
        plot.title = "MG frequency deviation";
        plot.x_label = "time [s]";
        plot.y_label = "frequency deviation [rad/s]";
        for (std::size_t j = 0; j < t->ode.mgs().size(); ++j) {
            mgilc::PlotSeries s;
            s.name = "MG" + std::to_string(j + 1);
            for (std::size_t k = 0; k < t->traj.samples(); ++k) {
                s.x.push_back(t->traj.time[k]);
                s.y.push_back(t->ode.mg_omega(t->traj.state(k), j));
            }
            plot.series.push_back(std::move(s));
        }
        mgilc::emit_svg(plot, path);
    });
}

mgilc_status mgilc_linearize_ilc(const mgilc_scenario* s, size_t ilc, int port, mgilc_linear** out) {
    if (!s || !out) return usage("null argument");
    if (port != 0 && port != 1) return usage("port must be 0 (grid-following) or 1 (native)");
    return guarded([&] {
        const auto l = ilc_index(s->spec, ilc);
        auto built = mgilc::build_system(s->spec);
        const auto eq = mgilc::base_equilibrium(s->spec, built.ode);
        const auto op = mgilc::ilc_operating_point(built.ode, eq, l);
        const auto& u = s->spec.ilcs[l].unit;
        const auto conv = port == 0 ? mgilc::PortConvention::GridFollowing : mgilc::native_convention(u);
        *out = new mgilc_linear{mgilc::linearize_ilc(u, op, conv), 0};
    });
}

mgilc_status mgilc_linearize_closed_loop(const mgilc_scenario* s, mgilc_linear** out) {
    if (!s || !out) return usage("null argument");
    return guarded([&] {
        auto built = mgilc::build_system(s->spec);
        const auto eq = mgilc::base_equilibrium(s->spec, built.ode);
        *out = new mgilc_linear{mgilc::linearize_closed_loop(built.ode, eq), mgilc::circulation_modes(built.net)};
    });
}

void mgilc_linear_free(mgilc_linear* l) { delete l; }

mgilc_status mgilc_linear_dims(const mgilc_linear* l, size_t* states, size_t* inputs, size_t* outputs) {
    if (!l) return usage("null argument");
    if (states) *states = static_cast<size_t>(l->lin.states());
    if (inputs) *inputs = static_cast<size_t>(l->lin.inputs());
    if (outputs) *outputs = static_cast<size_t>(l->lin.outputs());
    return MGILC_OK;
}

mgilc_status mgilc_linear_matrix(const mgilc_linear* l, char which, double* buf, size_t len) {
    if (!l || !buf) return usage("null argument");
    const Eigen::MatrixXd* m = nullptr;
    switch (which) {
        case 'A': m = &l->lin.a; break;
        case 'B': m = &l->lin.b; break;
        case 'C': m = &l->lin.c; break;
        case 'D': m = &l->lin.d; break;
        default: return usage("matrix must be one of A, B, C, D");
    }
    if (len < static_cast<size_t>(m->size())) return usage("buffer too small");
    for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) buf[i * m->cols() + j] = (*m)(i, j);
    return MGILC_OK;
}

mgilc_status mgilc_linear_abscissa(const mgilc_linear* l, double* value) {
    if (!l || !value) return usage("null argument");
    return guarded([&] { *value = mgilc::reduced_abscissa(l->lin.a, l->ignored_modes); });
}

mgilc_status mgilc_linear_json(const mgilc_linear* l, char** out) {
    if (!l || !out) return usage("null argument");
    return guarded([&] {
        nlohmann::json j;
        j["states"] = l->lin.state_labels;
        j["inputs"] = l->lin.input_labels;
        j["outputs"] = l->lin.output_labels;
        j["A"] = matrix_json(l->lin.a);
        j["B"] = matrix_json(l->lin.b);
        j["C"] = matrix_json(l->lin.c);
        j["D"] = matrix_json(l->lin.d);
        j["condition_estimate"] = l->lin.condition_estimate;
        j["ill_conditioned"] = l->lin.ill_conditioned;
        j["circulation_modes"] = l->ignored_modes;
        j["spectral_abscissa"] = mgilc::reduced_abscissa(l->lin.a, l->ignored_modes);
        *out = dup(j.dump(2) + "\n");
    });
}

mgilc_status mgilc_passivity_sweep(const mgilc_scenario* s, size_t ilc, int port, size_t points, double w_lo, double w_hi,
                             mgilc_passivity** out) {
    if (!s || !out) return usage("null argument");
    if (port != 0 && port != 1) return usage("port must be 0 (grid-following) or 1 (native)");
    if (points < 2 || !(w_lo > 0) || !(w_hi > w_lo)) return usage("need at least 2 points on 0 < w_lo < w_hi");
    return guarded([&] {
        const auto l = ilc_index(s->spec, ilc);
        auto built = mgilc::build_system(s->spec);
        const auto eq = mgilc::base_equilibrium(s->spec, built.ode);
        const auto op = mgilc::ilc_operating_point(built.ode, eq, l);
        const auto& u = s->spec.ilcs[l].unit;
        const auto conv = port == 0 ? mgilc::PortConvention::GridFollowing : mgilc::native_convention(u);
        const auto lin = mgilc::linearize_ilc(u, op, conv);
        auto rep = mgilc::passivity_sweep(lin, mgilc::log_grid(w_lo, w_hi, points), 1e-9,
                                          mgilc::worker_count(0));
        std::string title = std::string("ILC") + std::to_string(ilc) + " " + mgilc::scheme_display_name(u.scheme);
        *out = new mgilc_passivity{std::move(rep), std::move(title)};
    });
}

void mgilc_passivity_free(mgilc_passivity* p) { delete p; }

const char* mgilc_passivity_verdict(const mgilc_passivity* p) { return p ? mgilc::to_string(p->rep.verdict) : ""; }

mgilc_status mgilc_passivity_worst(const mgilc_passivity* p, double* omega, double* min_eig) {
    if (!p) return usage("null argument");
    if (omega) *omega = p->rep.worst_omega;
    if (min_eig) *min_eig = p->rep.worst_min_eig;
    return MGILC_OK;
}

int mgilc_passivity_negative_tail(const mgilc_passivity* p) { return p && p->rep.negative_tail() ? 1 : 0; }

mgilc_status mgilc_passivity_write_csv(const mgilc_passivity* p, const char* path) {
    if (!p || !path) return usage("null argument");
    return guarded([&] {
        std::ostringstream os;
        mgilc::write_passivity_csv(p->rep, os);
        write_file(path, os.str());
    });
}

mgilc_status mgilc_passivity_write_svg(const mgilc_passivity* p, const char* path) {
    if (!p || !path) return usage("null argument");
    return guarded([&] {
        mgilc::PlotSpec plot;
        plot.title = p->title + " Hermitian part";
        plot.x_label = "log10 frequency [log10 rad/s]";
        plot.y_label = "eigenvalue / real part [port units]";
        mgilc::PlotSeries me{"min eig(G + G*)", {}, {}};
        std::vector<mgilc::PlotSeries> diag;
        for (const auto& pt : p->rep.points) {
            me.x.push_back(std::log10(pt.omega));
            me.y.push_back(pt.min_eig);
            for (std::size_t k = 0; k < pt.diag_re.size(); ++k) {
                if (diag.size() <= k) diag.push_back({"Re G" + std::to_string(k + 1) + std::to_string(k + 1), {}, {}});
                diag[k].x.push_back(std::log10(pt.omega));
                diag[k].y.push_back(pt.diag_re[k]);
            }
        }
        plot.series.push_back(std::move(me));
        for (auto& d : diag) plot.series.push_back(std::move(d));
        mgilc::emit_svg(plot, path);
    });
}

mgilc_status mgilc_classify(const mgilc_scenario* s, mgilc_stability* verdict, double* abscissa) {
    if (!s || !verdict) return usage("null argument");
    return guarded([&] {
        const auto c = mgilc::classify_stability(s->spec);
        *verdict = static_cast<mgilc_stability>(c.verdict);
        if (abscissa) *abscissa = c.abscissa;
    });
}

mgilc_status mgilc_bisect(const mgilc_scenario* s, const char* param, double lower, double upper, int min_stable,
                          double tolerance, int log_scale, size_t workers, mgilc_boundary* out) {
    if (!s || !param || !out) return usage("null argument");
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) return usage("need lower < upper");
    if (!(tolerance > 0)) return usage("tolerance must be positive");
    if (log_scale && !(lower > 0)) return usage("log-scale search needs a positive lower bound");
    return guarded([&] {
        mgilc::SweepRequest req;
        req.base = s->spec;
        req.parameter = param;
        req.lower = lower;
        req.upper = upper;
        req.direction = min_stable ? mgilc::Direction::MinStable : mgilc::Direction::MaxStable;
        req.tolerance = tolerance;
        req.log_scale = log_scale != 0;
        const auto r = mgilc::bisect_boundary(req, {}, mgilc::worker_count(workers));
        out->beyond_range = r.status == mgilc::BoundaryStatus::BeyondRange ? 1 : 0;
        out->boundary = r.boundary;
        out->stable_end = r.stable_end;
        out->unstable_end = r.unstable_end;
        out->probes = r.probes;
    });
}

mgilc_status mgilc_table3(const mgilc_scenario* s, const char* cache_dir, size_t workers, mgilc_table** out) {
    if (!s || !out) return usage("null argument");
    return guarded([&] {
        mgilc::HarnessConfig cfg;
        if (cache_dir) cfg.cache_dir = cache_dir;
        cfg.workers = workers;
        *out = new mgilc_table{mgilc::table3_harness(s->spec, cfg)};
    });
}

void mgilc_table_free(mgilc_table* t) { delete t; }

mgilc_status mgilc_table_write_csv(const mgilc_table* t, const char* path) {
    if (!t || !path) return usage("null argument");
    return guarded([&] {
        std::ostringstream os;
        mgilc::write_table_csv(t->table, os);
        write_file(path, os.str());
    });
}

mgilc_status mgilc_table_text(const mgilc_table* t, char** out) {
    if (!t || !out) return usage("null argument");
    return guarded([&] { *out = dup(mgilc::format_table_text(t->table)); });
}

}  // extern "C"
