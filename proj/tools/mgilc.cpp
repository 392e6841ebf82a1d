// Command line front end over the C API.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mgilc/mgilc.h"

namespace {

int report(mgilc_status st) {
    if (st != MGILC_OK) std::fprintf(stderr, "error: %s\n", mgilc_last_error());
    return static_cast<int>(st);
}

template <class T, void (*Free)(T*)>
struct Owned {
    T* p = nullptr;
    ~Owned() { Free(p); }
};

struct Common {
    std::string scenario;
    std::string scheme;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenario, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--scheme", c.scheme, "override the scheme of every ILC");
    cmd->add_option("--set", c.sets, "parameter override path=value, e.g. ilc.K_dc=0.5")->take_all();
}

int load(const Common& c, mgilc_scenario** out) {
    if (int rc = report(mgilc_scenario_load(c.scenario.c_str(), out))) return rc;
    if (!c.scheme.empty())
        if (int rc = report(mgilc_scenario_set_scheme(*out, c.scheme.c_str()))) return rc;
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects path=value, got '%s'\n", s.c_str());
            return MGILC_ERR_USAGE;
        }
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod(s.substr(eq + 1), &used);
            if (used != s.size() - eq - 1) throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            std::fprintf(stderr, "error: bad number in --set '%s'\n", s.c_str());
            return MGILC_ERR_USAGE;
        }
        if (int rc = report(mgilc_scenario_set_param(*out, s.substr(0, eq).c_str(), v))) return rc;
    }
    return 0;
}

int ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create '%s': %s\n", dir.c_str(), ec.message().c_str());
        return MGILC_ERR_VALIDATION;
    }
    return 0;
}

std::string join(const std::string& dir, const char* name) { return (std::filesystem::path(dir) / name).string(); }

int port_code(const std::string& p) { return p == "gfl" ? 0 : 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-microgrid interlinking converter simulation and analysis"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mgilc_version());

    Common sim_c;
    std::string sim_out;
    double t_end = 0;
    auto* sim = app.add_subcommand("simulate", "integrate a scenario and write trajectory.csv and frequency.svg");
    add_common(sim, sim_c);
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--t-end", t_end, "override the end time [s]");

    Common lin_c;
    std::size_t lin_ilc = 0;
    std::string lin_port = "native", lin_out;
    bool closed = false;
    auto* lin = app.add_subcommand("linearize", "state-space model at the base equilibrium as JSON");
    add_common(lin, lin_c);
    auto* lin_ilc_opt = lin->add_option("--ilc", lin_ilc, "ILC index (1-based)");
    lin->add_flag("--closed-loop", closed, "whole interconnection instead of one ILC")->excludes(lin_ilc_opt);
    lin->add_option("--port", lin_port, "port convention")->check(CLI::IsMember({"native", "gfl"}));
    lin->add_option("--out", lin_out, "output file (default standard output)");

    Common pas_c;
    std::size_t pas_ilc = 1, points = 400;
    double w_lo = 1e-2, w_hi = 1e4;
    std::string pas_port = "native", pas_out;
    auto* pas = app.add_subcommand("passivity", "Hermitian-part frequency sweep of one ILC");
    add_common(pas, pas_c);
    pas->add_option("--ilc", pas_ilc, "ILC index (1-based)")->required();
    pas->add_option("--port", pas_port, "port convention")->check(CLI::IsMember({"native", "gfl"}));
    pas->add_option("--points", points, "grid points");
    pas->add_option("--w-lo", w_lo, "lowest frequency [rad/s]");
    pas->add_option("--w-hi", w_hi, "highest frequency [rad/s]");
    pas->add_option("--out", pas_out, "directory for passivity.csv and passivity.svg");

    Common sw_c;
    std::string param, direction = "min-stable";
    double lower = 0, upper = 1, tol = 0.01;
    bool log_scale = false;
    std::size_t sw_workers = 0;
    auto* sw = app.add_subcommand("sweep", "bisect a stability boundary over one parameter");
    add_common(sw, sw_c);
    sw->add_option("--param", param, "parameter path, e.g. ilc.K_dc or ilc.gains.K_omega")->required();
    sw->add_option("--lower", lower, "interval lower bound")->required();
    sw->add_option("--upper", upper, "interval upper bound")->required();
    sw->add_option("--direction", direction, "stable above (min-stable) or below (max-stable) the boundary")
        ->check(CLI::IsMember({"min-stable", "max-stable"}));
    sw->add_option("--tol", tol, "bracket width (ratio when --log)");
    sw->add_flag("--log", log_scale, "bisect in log scale");
    sw->add_option("--workers", sw_workers, "parallel probes (0 = all cores)");

    Common t3_c;
    std::string t3_out, cache;
    std::size_t t3_workers = 0;
    auto* t3 = app.add_subcommand("table3", "all scheme by parameter stability boundaries");
    add_common(t3, t3_c);
    t3->add_option("--out", t3_out, "directory for table3.csv and table3.txt");
    t3->add_option("--cache", cache, "cell cache directory");
    t3->add_option("--workers", t3_workers, "parallel cells (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return MGILC_ERR_USAGE;
    }

    if (sim->parsed()) {
        Owned<mgilc_scenario, mgilc_scenario_free> s;
        if (int rc = load(sim_c, &s.p)) return rc;
        if (t_end > 0)
            if (int rc = report(mgilc_scenario_set_t_end(s.p, t_end))) return rc;
        if (int rc = ensure_dir(sim_out)) return rc;
        Owned<mgilc_trajectory, mgilc_trajectory_free> t;
        if (int rc = report(mgilc_simulate(s.p, &t.p))) return rc;
        if (int rc = report(mgilc_trajectory_write_csv(t.p, join(sim_out, "trajectory.csv").c_str()))) return rc;
        if (int rc = report(mgilc_trajectory_write_svg(t.p, join(sim_out, "frequency.svg").c_str()))) return rc;
        std::size_t samples = 0, dim = 0, mgs = 0;
        mgilc_trajectory_size(t.p, &samples, &dim);
        mgilc_scenario_counts(s.p, &mgs, nullptr, nullptr);
        std::printf("samples %zu, states %zu\n", samples, dim);
        for (std::size_t j = 1; j <= mgs; ++j) {
            double w = 0;
            mgilc_trajectory_final_omega(t.p, j, &w);
            std::printf("mg%zu final omega %.6g rad/s\n", j, w);
        }
        if (mgilc_trajectory_truncated(t.p)) {
            std::printf("truncated: %s\n", mgilc_trajectory_truncation_reason(t.p));
            return MGILC_ERR_NUMERICAL;
        }
        return 0;
    }

    if (lin->parsed()) {
        if (!closed && lin_ilc == 0) {
            std::fprintf(stderr, "error: give --ilc <index> or --closed-loop\n");
            return MGILC_ERR_USAGE;
        }
        Owned<mgilc_scenario, mgilc_scenario_free> s;
        if (int rc = load(lin_c, &s.p)) return rc;
        Owned<mgilc_linear, mgilc_linear_free> l;
        const auto st = closed ? mgilc_linearize_closed_loop(s.p, &l.p)
                               : mgilc_linearize_ilc(s.p, lin_ilc, port_code(lin_port), &l.p);
        if (int rc = report(st)) return rc;
        char* text = nullptr;
        if (int rc = report(mgilc_linear_json(l.p, &text))) return rc;
        std::string doc(text);
        mgilc_string_free(text);
        if (lin_out.empty()) {
            std::fputs(doc.c_str(), stdout);
        } else {
            std::FILE* f = std::fopen(lin_out.c_str(), "wb");
            if (!f) {
                std::fprintf(stderr, "error: cannot write '%s'\n", lin_out.c_str());
                return MGILC_ERR_VALIDATION;
            }
            std::fputs(doc.c_str(), f);
            std::fclose(f);
        }
        return 0;
    }

    if (pas->parsed()) {
        Owned<mgilc_scenario, mgilc_scenario_free> s;
        if (int rc = load(pas_c, &s.p)) return rc;
        Owned<mgilc_passivity, mgilc_passivity_free> p;
        if (int rc = report(mgilc_passivity_sweep(s.p, pas_ilc, port_code(pas_port), points, w_lo, w_hi, &p.p)))
            return rc;
        if (!pas_out.empty()) {
            if (int rc = ensure_dir(pas_out)) return rc;
            if (int rc = report(mgilc_passivity_write_csv(p.p, join(pas_out, "passivity.csv").c_str()))) return rc;
            if (int rc = report(mgilc_passivity_write_svg(p.p, join(pas_out, "passivity.svg").c_str()))) return rc;
        }
        double w = 0, e = 0;
        mgilc_passivity_worst(p.p, &w, &e);
        std::printf("%s\n", mgilc_passivity_verdict(p.p));
        std::printf("worst frequency %.6g rad/s, min eigenvalue %.6g\n", w, e);
        if (mgilc_passivity_negative_tail(p.p)) std::printf("diagonal real part negative beyond the grid\n");
        return 0;
    }

    if (sw->parsed()) {
        Owned<mgilc_scenario, mgilc_scenario_free> s;
        if (int rc = load(sw_c, &s.p)) return rc;
        mgilc_boundary b{};
        if (int rc = report(mgilc_bisect(s.p, param.c_str(), lower, upper, direction == "min-stable" ? 1 : 0, tol,
                                         log_scale ? 1 : 0, sw_workers, &b)))
            return rc;
        if (b.beyond_range)
            std::printf("%s beyond range: stable over [%.6g, %.6g] (%d probes)\n", param.c_str(), lower, upper,
                        b.probes);
        else
            std::printf("%s boundary %.6g (stable %.6g, unstable %.6g, %d probes)\n", param.c_str(), b.boundary,
                        b.stable_end, b.unstable_end, b.probes);
        return 0;
    }

    if (t3->parsed()) {
        Owned<mgilc_scenario, mgilc_scenario_free> s;
        if (int rc = load(t3_c, &s.p)) return rc;
        Owned<mgilc_table, mgilc_table_free> t;
        if (int rc = report(mgilc_table3(s.p, cache.empty() ? nullptr : cache.c_str(), t3_workers, &t.p))) return rc;
        char* text = nullptr;
        if (int rc = report(mgilc_table_text(t.p, &text))) return rc;
        std::string doc(text);
        mgilc_string_free(text);
        std::fputs(doc.c_str(), stdout);
        if (!t3_out.empty()) {
            if (int rc = ensure_dir(t3_out)) return rc;
            if (int rc = report(mgilc_table_write_csv(t.p, join(t3_out, "table3.csv").c_str()))) return rc;
            std::FILE* f = std::fopen(join(t3_out, "table3.txt").c_str(), "wb");
            if (f) {
                std::fputs(doc.c_str(), f);
                std::fclose(f);
            }
        }
        return 0;
    }
    return MGILC_ERR_USAGE;
}
