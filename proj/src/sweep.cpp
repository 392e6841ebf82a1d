#include "mgilc/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "mgilc/analysis.hpp"
#include "mgilc/error.hpp"
#include "mgilc/parallel.hpp"

namespace mgilc {

using nlohmann::json;

const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Indeterminate: return "indeterminate";
    }
    return "unknown";
}

Classification classify_stability(const SystemSpec& spec, const ClassifyOptions& opts) {
    Classification c;
    const auto built = build_system(spec);
    const auto& ode = built.ode;
    EquilibriumPoint eq;
    try {
        eq = base_equilibrium(spec, ode);
    } catch (const Error& e) {
        if (category(e.kind()) != ErrorCategory::Numerical) throw;
        c.verdict = Stability::Unstable;
        c.abscissa = std::numeric_limits<double>::quiet_NaN();
        c.cause = std::string("no equilibrium: ") + e.what();
        return c;
    }
    c.equilibrium_found = true;
    const auto lin = linearize_closed_loop(ode, eq);
    c.abscissa = reduced_abscissa(lin.a, circulation_modes(built.net));
    const bool spectral_stable = c.abscissa < opts.abscissa_threshold;

    if (opts.disturbed_mg >= spec.mgs.size()) fail(ErrorKind::SchemaViolation, "disturbed MG index out of range");
    std::vector<double> load_after = spec.p_load;
    const double step = -opts.disturbance_fraction * spec.mgs[opts.disturbed_mg].rating;
    load_after[opts.disturbed_mg] += step;
    IntegrateOptions io = spec.sim.integrator;
    io.output_interval = 0;
    io.track_dc_energy = false;
    Trajectory tr;
    std::string sim_cause;
    try {
        tr = integrate(ode, eq.state, spec.p_load, {{0.0, opts.disturbed_mg, step}}, 0.0, opts.horizon, io);
        if (tr.truncated) {
            c.sim_diverged = true;
            sim_cause = tr.truncation_reason;
        }
    } catch (const Error& e) {
        if (category(e.kind()) != ErrorCategory::Numerical && e.kind() != ErrorKind::NonFiniteInput) throw;
        c.sim_diverged = true;
        sim_cause = e.what();
    }
    if (!c.sim_diverged) {
        try {
            const auto fs = tr.final_state();
            const auto eq2 = find_equilibrium(ode, load_after, std::vector<double>(fs.begin(), fs.end()));
            const auto atol = ode.absolute_tolerances();
            c.sim_returned = true;
            for (std::size_t i = 0; i < ode.dimension() && c.sim_returned; ++i) {
                double peak = 0;
                for (std::size_t k = 0; k < tr.samples(); ++k)
                    peak = std::max(peak, std::abs(tr.state(k)[i] - eq2.state[i]));
                const double fin = std::abs(fs[i] - eq2.state[i]);
                if (fin > opts.return_ratio * peak + 100 * atol[i]) {
                    c.sim_returned = false;
                    sim_cause = "state " + tr.labels[i] + " did not settle";
                }
            }
        } catch (const Error& e) {
            if (category(e.kind()) != ErrorCategory::Numerical) throw;
            sim_cause = std::string("post-disturbance equilibrium not found: ") + e.what();
        }
    }
    const bool sim_ok = !c.sim_diverged && c.sim_returned;
    if (spectral_stable && sim_ok) {
        c.verdict = Stability::Stable;
    } else if (!spectral_stable && !sim_ok) {
        c.verdict = Stability::Unstable;
        c.cause = sim_cause;
    } else {
        c.verdict = Stability::Indeterminate;
        c.cause = spectral_stable ? "spectrally stable but simulation failed: " + sim_cause
                                  : "simulation settled but spectral abscissa is not negative";
    }
    return c;
}

namespace {

double midpoint(double a, double b, bool log_scale) { return log_scale ? std::sqrt(a * b) : 0.5 * (a + b); }

bool narrow_enough(double a, double b, double tol, bool log_scale) {
    if (log_scale) return std::max(a, b) / std::min(a, b) <= 1.0 + tol;
    return std::abs(b - a) <= tol;
}

Classification probe(const SweepRequest& req, double v, const ClassifyOptions& opts) {
    SystemSpec s = req.base;
    apply_parameter(s, req.parameter, v);
    return classify_stability(s, opts);
}

}  // namespace

BoundaryResult bisect_boundary(const SweepRequest& req, const ClassifyOptions& opts, std::size_t workers) {
    if (!std::isfinite(req.lower) || !std::isfinite(req.upper) || !(req.lower < req.upper))
        fail(ErrorKind::SchemaViolation, "sweep interval must be finite with lower < upper");
    if (req.log_scale && !(req.lower > 0)) fail(ErrorKind::SchemaViolation, "log-scale sweep needs lower > 0");
    if (!(req.tolerance > 0)) fail(ErrorKind::SchemaViolation, "sweep tolerance must be positive");

    Classification ends[2];
    parallel_for(2, worker_count(workers), [&](std::size_t i) {
        ends[i] = probe(req, i == 0 ? req.lower : req.upper, opts);
    });
    BoundaryResult r;
    r.probes = 2;
    const bool lo_stable = ends[0].verdict == Stability::Stable;
    const bool hi_stable = ends[1].verdict == Stability::Stable;
    const bool min_stable = req.direction == Direction::MinStable;
    if (lo_stable && hi_stable) {
        r.status = BoundaryStatus::BeyondRange;
        r.boundary = r.stable_end = min_stable ? req.lower : req.upper;
        r.stable_evidence = min_stable ? ends[0] : ends[1];
        r.unstable_end = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    if (!lo_stable && !hi_stable)
        fail(ErrorKind::NonBracketing, "no stable point at either end of [" + std::to_string(req.lower) + ", " +
                                           std::to_string(req.upper) + "] for " + req.parameter + " (" +
                                           ends[0].cause + ")");
    if (lo_stable == min_stable)
        fail(ErrorKind::NonBracketing, "classification along " + req.parameter + " runs opposite to the requested direction");

    double stable_v = min_stable ? req.upper : req.lower;
    double unstable_v = min_stable ? req.lower : req.upper;
    Classification stable_c = min_stable ? ends[1] : ends[0];
    Classification unstable_c = min_stable ? ends[0] : ends[1];
    while (!narrow_enough(stable_v, unstable_v, req.tolerance, req.log_scale)) {
        const double mid = midpoint(stable_v, unstable_v, req.log_scale);
        auto c = probe(req, mid, opts);
        ++r.probes;
        if (c.verdict == Stability::Stable) {
            stable_v = mid;
            stable_c = c;
        } else {
            unstable_v = mid;
            unstable_c = c;
        }
    }
    // Re-verify the accepted bracket.
    Classification check[2];
    parallel_for(2, worker_count(workers), [&](std::size_t i) { check[i] = probe(req, i == 0 ? stable_v : unstable_v, opts); });
    r.probes += 2;
    if (check[0].verdict != Stability::Stable || check[1].verdict == Stability::Stable)
        fail(ErrorKind::NonBracketing, "bracket for " + req.parameter + " failed re-verification");
    r.status = BoundaryStatus::Bracketed;
    r.boundary = r.stable_end = stable_v;
    r.unstable_end = unstable_v;
    r.stable_evidence = check[0];
    r.unstable_evidence = check[1];
    (void)stable_c;
    (void)unstable_c;
    return r;
}

const SweepCell* SweepTable::find(Scheme s, const std::string& column) const {
    for (const auto& c : cells)
        if (c.spec.scheme == s && c.spec.column == column) return &c;
    return nullptr;
}

std::vector<CellSpec> table3_cells(const std::vector<Scheme>& schemes) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    struct Ref {
        Scheme s;
        double kdc;
        const char* kdc_txt;
        double tau;
        const char* tau_txt;
        bool tau_beyond;
        const char* gain_path;
        double gain_default;
        double gain;
        const char* gain_txt;
        bool gain_beyond;
        double l_mh;
        const char* l_txt;
    };
    static const Ref refs[] = {
        {Scheme::DualFreqDroop1, 0.0, "0.00", 0.07, "0.07", false, "ilc.gains.K_omega", 2.5e7, 1e9, "K_omega = 1e9", false, nan, "N/A"},
        {Scheme::DualFreqDroop2, 0.0, "0.00", 0.08, "0.08", false, "ilc.gains.K_omega", 2.5e7, nan, "Any reasonable", true, nan, "N/A"},
        {Scheme::DualAcDcDroop, 0.0, "0.00", 0.08, "0.08", false, "ilc.gains.K_omega", 2.5e7, nan, "Any reasonable", true, nan, "N/A"},
        {Scheme::Matching, 0.06, "0.06", nan, ">5", true, "ilc.gains.m", 1e-3, 0.03, "m = 0.03", false, 0.70, "0.70 mH"},
        {Scheme::GfmFreqDroop, 0.20, "0.20", 0.09, "0.09", false, "ilc.gains.m_p", 5e-8, 1e-6, "m_p = 1e-6", false, 0.30, "0.30 mH"},
        {Scheme::GfmDualDroop, 0.08, "0.08", 0.50, "0.50", false, "ilc.gains.m_p", 5e-8, 6e-6, "m_p = 6e-6", false, 0.05, "0.05 mH"},
        {Scheme::DualDroopMatching, 0.0, "0.00", nan, ">5", true, "ilc.gains.K_omega", 2.5e7, nan, "Any reasonable", true, 0.01, "0.01 mH"},
        {Scheme::GflGfmDualDroop, 0.0, "0.00", nan, ">5", true, "ilc.gains.m_p", 5e-8, 9e-6, "m_p = 9e-6", false, 0.01, "0.01 mH"},
    };
    std::vector<CellSpec> cells;
    for (Scheme s : schemes) {
        const Ref* ref = nullptr;
        for (const auto& r : refs)
            if (r.s == s) ref = &r;
        CellSpec k;
        k.scheme = s;

        k.column = "K_dc min";
        k.parameter = "ilc.K_dc";
        k.lower = 0.0;
        k.upper = 1.0;
        k.tolerance = 0.005;
        k.direction = Direction::MinStable;
        k.reference = ref->kdc_txt;
        k.reference_value = ref->kdc;
        cells.push_back(k);

        k = CellSpec{};
        k.scheme = s;
        k.column = "tau max";
        k.parameter = "ilc.tau";
        k.lower = 0.01;
        k.upper = 5.0;
        k.tolerance = 0.005;
        k.direction = Direction::MaxStable;
        k.unit = "s";
        k.reference = ref->tau_txt;
        k.reference_value = ref->tau;
        k.reference_beyond = ref->tau_beyond;
        cells.push_back(k);

        k = CellSpec{};
        k.scheme = s;
        k.column = "gain max";
        k.parameter = ref->gain_path;
        k.lower = ref->gain_default;
        k.upper = 100.0 * ref->gain_default;
        k.tolerance = 0.02;
        k.log_scale = true;
        k.direction = Direction::MaxStable;
        k.reference = ref->gain_txt;
        k.reference_value = ref->gain;
        k.reference_beyond = ref->gain_beyond;
        cells.push_back(k);

        k = CellSpec{};
        k.scheme = s;
        k.column = "L min";
        k.applicable = port_config(s) != PortConfig::GridFollowing;
        k.parameter = "ilc.L";
        k.lower = 1e-5;
        k.upper = 2e-3;
        k.tolerance = 0.05;
        k.log_scale = true;
        k.direction = Direction::MinStable;
        k.display_scale = 1e3;
        k.unit = "mH";
        k.reference = ref->l_txt;
        k.reference_value = ref->l_mh;
        cells.push_back(k);
    }
    return cells;
}

std::string cell_key(const SystemSpec& base, const CellSpec& cell, const ClassifyOptions& opts) {
    SystemSpec s = base;
    set_scheme(s, cell.scheme);
    std::ostringstream o;
    o << "cell-v1\n" << resolved_json(s) << cell.parameter << '\n' << std::setprecision(17) << cell.lower << ' '
      << cell.upper << ' ' << cell.tolerance << ' ' << static_cast<int>(cell.direction) << ' ' << cell.log_scale
      << '\n' << opts.abscissa_threshold << ' ' << opts.disturbance_fraction << ' ' << opts.disturbed_mg << ' '
      << opts.horizon << ' ' << opts.return_ratio;
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : o.str()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

json classification_json(const Classification& c) {
    return json{{"verdict", to_string(c.verdict)},
                {"abscissa", std::isfinite(c.abscissa) ? json(c.abscissa) : json(nullptr)},
                {"equilibrium_found", c.equilibrium_found},
                {"sim_diverged", c.sim_diverged},
                {"sim_returned", c.sim_returned},
                {"cause", c.cause}};
}

Classification classification_from(const json& j) {
    Classification c;
    const auto v = j.at("verdict").get<std::string>();
    c.verdict = v == "stable" ? Stability::Stable : v == "unstable" ? Stability::Unstable : Stability::Indeterminate;
    c.abscissa = j.at("abscissa").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("abscissa").get<double>();
    c.equilibrium_found = j.at("equilibrium_found").get<bool>();
    c.sim_diverged = j.at("sim_diverged").get<bool>();
    c.sim_returned = j.at("sim_returned").get<bool>();
    c.cause = j.at("cause").get<std::string>();
    return c;
}

json cell_json(const SweepCell& c) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return json{{"ok", c.ok},
                {"error", c.error},
                {"status", c.result.status == BoundaryStatus::Bracketed ? "bracketed" : "beyond"},
                {"boundary", num(c.result.boundary)},
                {"stable_end", num(c.result.stable_end)},
                {"unstable_end", num(c.result.unstable_end)},
                {"probes", c.result.probes},
                {"stable_evidence", classification_json(c.result.stable_evidence)},
                {"unstable_evidence", classification_json(c.result.unstable_evidence)}};
}

void cell_from(const json& j, SweepCell& c) {
    auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
    c.ok = j.at("ok").get<bool>();
    c.error = j.at("error").get<std::string>();
    c.result.status = j.at("status") == "bracketed" ? BoundaryStatus::Bracketed : BoundaryStatus::BeyondRange;
    c.result.boundary = num(j.at("boundary"));
    c.result.stable_end = num(j.at("stable_end"));
    c.result.unstable_end = num(j.at("unstable_end"));
    c.result.probes = j.at("probes").get<int>();
    c.result.stable_evidence = classification_from(j.at("stable_evidence"));
    c.result.unstable_evidence = classification_from(j.at("unstable_evidence"));
}

std::string number_text(double v) {
    char buf[32];
    if (v == 0) return "0.00";
    if (std::abs(v) >= 0.01 && std::abs(v) < 1000)
        std::snprintf(buf, sizeof buf, "%.3g", v);
    else
        std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void finish_cell(SweepCell& c) {
    const auto& k = c.spec;
    if (!k.applicable) {
        c.display = "N/A";
        c.matches_reference = k.reference == "N/A";
        return;
    }
    if (!c.ok) {
        c.display = "failed";
        c.matches_reference = false;
        return;
    }
    const double shown = c.result.boundary * k.display_scale;
    const std::string unit = k.unit.empty() ? "" : " " + k.unit;
    if (c.result.status == BoundaryStatus::BeyondRange) {
        const double end = (k.direction == Direction::MinStable ? k.lower : k.upper) * k.display_scale;
        if (k.direction == Direction::MinStable)
            c.display = "<=" + number_text(end) + unit + " (beyond range)";
        else
            c.display = ">=" + number_text(end) + unit + " (beyond range)";
    } else {
        c.display = number_text(shown) + unit;
    }
    if (k.reference_beyond) {
        c.matches_reference = c.result.status == BoundaryStatus::BeyondRange;
    } else if (std::isfinite(k.reference_value)) {
        const double v = k.reference_value;
        const bool abs_ok = std::abs(shown - v) <= 0.05 && k.unit != "mH" && k.column != "gain max";
        const bool factor_ok = v > 0 && shown > 0 && shown / v <= 2.0 && v / shown <= 2.0;
        const bool zero_ok = v == 0 && shown <= 0.05;
        c.matches_reference = abs_ok || factor_ok || zero_ok;
    }
}

}  // namespace

SweepTable table3_harness(const SystemSpec& base, const HarnessConfig& cfg) {
    SweepTable table;
    for (auto& k : table3_cells(cfg.schemes)) {
        SweepCell c;
        c.spec = k;
        table.cells.push_back(c);
    }
    if (!cfg.cache_dir.empty()) std::filesystem::create_directories(cfg.cache_dir);
    parallel_for(table.cells.size(), worker_count(cfg.workers), [&](std::size_t i) {
        auto& c = table.cells[i];
        if (!c.spec.applicable) {
            c.ok = true;
            finish_cell(c);
            return;
        }
        std::string cache_path;
        if (!cfg.cache_dir.empty()) {
            cache_path = (std::filesystem::path(cfg.cache_dir) / (cell_key(base, c.spec, cfg.classify) + ".json")).string();
            std::ifstream in(cache_path);
            if (in) {
                try {
                    cell_from(json::parse(in), c);
                    c.from_cache = true;
                    finish_cell(c);
                    return;
                } catch (...) {
                }
            }
        }
        SweepRequest req;
        req.base = base;
        set_scheme(req.base, c.spec.scheme);
        req.parameter = c.spec.parameter;
        req.lower = c.spec.lower;
        req.upper = c.spec.upper;
        req.tolerance = c.spec.tolerance;
        req.direction = c.spec.direction;
        req.log_scale = c.spec.log_scale;
        try {
            c.result = bisect_boundary(req, cfg.classify, 1);
            c.ok = true;
        } catch (const Error& e) {
            c.ok = false;
            c.error = e.what();
        }
        if (!cache_path.empty()) {
            const std::string tmp = cache_path + ".tmp";
            {
                std::ofstream out(tmp);
                out << cell_json(c).dump(2) << '\n';
            }
            std::filesystem::rename(tmp, cache_path);
        }
        finish_cell(c);
    });
    return table;
}

namespace {

std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

}  // namespace

void write_table_csv(const SweepTable& t, std::ostream& out) {
    out << "scheme,column,parameter,status,boundary,stable_end,unstable_end,abscissa_stable,abscissa_unstable,"
           "diverged_unstable,unstable_verdict,probes,display,reference,matches_reference,error\n";
    for (const auto& c : t.cells) {
        const auto& r = c.result;
        std::string status = !c.spec.applicable ? "not-applicable"
                             : !c.ok            ? "failed"
                             : r.status == BoundaryStatus::Bracketed ? "bracketed"
                                                                     : "beyond-range";
        const bool has_unstable = c.ok && c.spec.applicable && r.status == BoundaryStatus::Bracketed;
        out << scheme_tag(c.spec.scheme) << ',' << csv_text(c.spec.column) << ',' << c.spec.parameter << ',' << status
            << ',' << (c.ok && c.spec.applicable ? csv_num(r.boundary) : "") << ','
            << (c.ok && c.spec.applicable ? csv_num(r.stable_end) : "") << ','
            << (has_unstable ? csv_num(r.unstable_end) : "") << ','
            << (c.ok && c.spec.applicable ? csv_num(r.stable_evidence.abscissa) : "") << ','
            << (has_unstable ? csv_num(r.unstable_evidence.abscissa) : "") << ','
            << (has_unstable ? (r.unstable_evidence.sim_diverged ? "true" : "false") : "") << ','
            << (has_unstable ? to_string(r.unstable_evidence.verdict) : "") << ',' << r.probes << ','
            << csv_text(c.display) << ',' << csv_text(c.spec.reference) << ',' << (c.matches_reference ? "true" : "false")
            << ',' << csv_text(c.error) << '\n';
    }
}

std::string format_table_text(const SweepTable& t) {
    const std::vector<std::string> cols = {"K_dc min", "tau max", "gain max", "L min"};
    std::vector<Scheme> rows;
    for (const auto& c : t.cells)
        if (std::find(rows.begin(), rows.end(), c.spec.scheme) == rows.end()) rows.push_back(c.spec.scheme);

    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"scheme"};
    for (const auto& c : cols) {
        header.push_back(c);
        header.push_back("reference");
    }
    grid.push_back(header);
    for (Scheme s : rows) {
        std::vector<std::string> line{scheme_display_name(s)};
        for (const auto& col : cols) {
            const auto* c = t.find(s, col);
            if (!c) {
                line.push_back("-");
                line.push_back("-");
                continue;
            }
            std::string v = c->display;
            if (c->spec.column == "gain max" && c->ok) {
                const auto p = c->spec.parameter.substr(c->spec.parameter.rfind('.') + 1);
                v = p + " " + v;
            }
            if (c->spec.applicable && c->ok) v += c->matches_reference ? "" : " *";
            line.push_back(v);
            line.push_back(c->spec.reference);
        }
        grid.push_back(line);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : grid)
        for (std::size_t k = 0; k < r.size(); ++k) width[k] = std::max(width[k], r[k].size());
    std::ostringstream o;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t k = 0; k < grid[i].size(); ++k) {
            o << std::left << std::setw(static_cast<int>(width[k])) << grid[i][k];
            if (k + 1 < grid[i].size()) o << " | ";
        }
        o << '\n';
        if (i == 0) {
            for (std::size_t k = 0; k < width.size(); ++k) {
                o << std::string(width[k], '-');
                if (k + 1 < width.size()) o << "-+-";
            }
            o << '\n';
        }
    }
    o << "* outside the informative tolerance (0.05 absolute or factor 2) of the reference value\n";
    return o.str();
}

}  // namespace mgilc
