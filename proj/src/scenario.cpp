#include "mgilc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mgilc/error.hpp"

namespace mgilc {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& what) {
    fail(ErrorKind::SchemaViolation, path + ": " + what);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) schema(path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) schema(path + "." + it.key(), "unknown key");
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) schema(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, path + ": not finite");
    return v;
}

void opt_number(const json& obj, const char* key, const std::string& path, double& out) {
    if (obj.contains(key)) out = number(obj.at(key), path + "." + key);
}

double req_number(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) schema(path + "." + key, "required field missing");
    return number(obj.at(key), path + "." + key);
}

std::size_t index1(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema(path, "expected a 1-based integer index");
    const auto v = j.get<long long>();
    if (v < 1) schema(path, "indices are 1-based");
    return static_cast<std::size_t>(v - 1);
}

MgModel parse_mg(const json& j, const std::string& path, double& p_load) {
    MgModel m;
    std::string kind = "swing-governor";
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) schema(path + ".kind", "expected a string");
        kind = j.at("kind").get<std::string>();
    }
    p_load = 0;
    if (kind == "swing-governor") {
        only_keys(j, path, {"kind", "M", "D", "T_g", "inv_R", "rating", "p_load"});
        m.kind = MgKind::SwingGovernor;
        m.M = req_number(j, "M", path);
        m.D = req_number(j, "D", path);
        m.T_g = req_number(j, "T_g", path);
        m.inv_R = req_number(j, "inv_R", path);
    } else if (kind == "first-order-droop") {
        only_keys(j, path, {"kind", "T", "D", "rating", "p_load"});
        m.kind = MgKind::FirstOrderDroop;
        m.T = req_number(j, "T", path);
        m.D = req_number(j, "D", path);
    } else {
        schema(path + ".kind", "expected 'swing-governor' or 'first-order-droop'");
    }
    m.rating = req_number(j, "rating", path);
    opt_number(j, "p_load", path, p_load);
    return m;
}

IlcEntry parse_ilc(const json& j, const std::string& path) {
    only_keys(j, path, {"mg_a", "mg_b", "scheme", "physical", "gains"});
    IlcEntry e;
    if (!j.contains("mg_a") || !j.contains("mg_b")) schema(path, "mg_a and mg_b are required");
    e.endpoints.mg_a = index1(j.at("mg_a"), path + ".mg_a");
    e.endpoints.mg_b = index1(j.at("mg_b"), path + ".mg_b");
    if (!j.contains("scheme") || !j.at("scheme").is_string()) schema(path + ".scheme", "expected a scheme tag");
    e.unit.scheme = parse_scheme(j.at("scheme").get<std::string>());

    auto& ph = e.unit.phys;
    if (j.contains("physical")) {
        const auto& p = j.at("physical");
        const std::string pp = path + ".physical";
        only_keys(p, pp, {"C", "V_dc_ref", "K_dc", "tau1", "tau2", "V_ac", "f_nom", "L", "B"});
        opt_number(p, "C", pp, ph.C);
        opt_number(p, "V_dc_ref", pp, ph.V_dc_ref);
        opt_number(p, "K_dc", pp, ph.K_dc);
        opt_number(p, "tau1", pp, ph.tau1);
        opt_number(p, "tau2", pp, ph.tau2);
        opt_number(p, "V_ac", pp, ph.V_ac);
        opt_number(p, "f_nom", pp, ph.f_nom);
        if (p.contains("L")) ph.L = number(p.at("L"), pp + ".L");
        if (p.contains("B")) {
            const double b = number(p.at("B"), pp + ".B");
            if (p.contains("L")) {
                ph.refresh_susceptance();
                if (std::abs(b - ph.B) > 1e-9 * std::abs(ph.B)) schema(pp + ".B", "inconsistent with L, V_ac and f_nom");
            } else {
                ph.L.reset();
            }
            ph.B = b;
        }
    }
    ph.refresh_susceptance();

    auto& g = e.unit.gains;
    if (j.contains("gains")) {
        const auto& q = j.at("gains");
        const std::string gp = path + ".gains";
        only_keys(q, gp, {"K_omega1", "K_omega2", "K_v1", "K_v2", "K_i", "K_i1", "K_i2", "K_pdc", "K_idc", "m1",
                          "m2", "m_p1", "m_p2", "kappa_s1", "kappa_s2"});
        opt_number(q, "K_omega1", gp, g.K_omega1);
        opt_number(q, "K_omega2", gp, g.K_omega2);
        opt_number(q, "K_v1", gp, g.K_v1);
        opt_number(q, "K_v2", gp, g.K_v2);
        opt_number(q, "K_i", gp, g.K_i);
        opt_number(q, "K_i1", gp, g.K_i1);
        opt_number(q, "K_i2", gp, g.K_i2);
        opt_number(q, "m1", gp, g.m1);
        opt_number(q, "m2", gp, g.m2);
        opt_number(q, "m_p1", gp, g.m_p1);
        opt_number(q, "m_p2", gp, g.m_p2);
        opt_number(q, "kappa_s1", gp, g.kappa_s1);
        opt_number(q, "kappa_s2", gp, g.kappa_s2);
        g.K_pdc = g.K_v1;
        opt_number(q, "K_pdc", gp, g.K_pdc);
        g.K_idc = 10.0 * g.K_pdc;
        opt_number(q, "K_idc", gp, g.K_idc);
    }
    return e;
}

json gains_json(const ControllerGains& g) {
    return json{{"K_omega1", g.K_omega1}, {"K_omega2", g.K_omega2}, {"K_v1", g.K_v1},       {"K_v2", g.K_v2},
                {"K_i", g.K_i},           {"K_i1", g.K_i1},         {"K_i2", g.K_i2},       {"K_pdc", g.K_pdc},
                {"K_idc", g.K_idc},       {"m1", g.m1},             {"m2", g.m2},           {"m_p1", g.m_p1},
                {"m_p2", g.m_p2},         {"kappa_s1", g.kappa_s1}, {"kappa_s2", g.kappa_s2}};
}

}  // namespace

SystemSpec parse_scenario_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::SchemaViolation, std::string("document is not valid JSON: ") + e.what());
    }
    only_keys(doc, "$", {"name", "notes", "defaults", "mgs", "ilcs", "events", "sim"});
    SystemSpec s;
    if (doc.contains("name")) {
        if (!doc.at("name").is_string()) schema("$.name", "expected a string");
        s.name = doc.at("name").get<std::string>();
    }
    if (doc.contains("notes")) {
        if (!doc.at("notes").is_string()) schema("$.notes", "expected a string");
        s.notes = doc.at("notes").get<std::string>();
    }
    if (doc.contains("defaults") && doc.at("defaults") != "table2")
        schema("$.defaults", "only 'table2' defaults are available");
    if (!doc.contains("mgs") || !doc.at("mgs").is_array() || doc.at("mgs").empty())
        schema("$.mgs", "expected a non-empty list");
    for (std::size_t j = 0; j < doc.at("mgs").size(); ++j) {
        double p_load = 0;
        s.mgs.push_back(parse_mg(doc.at("mgs")[j], "$.mgs[" + std::to_string(j + 1) + "]", p_load));
        s.p_load.push_back(p_load);
    }
    if (doc.contains("ilcs")) {
        if (!doc.at("ilcs").is_array()) schema("$.ilcs", "expected a list");
        for (std::size_t l = 0; l < doc.at("ilcs").size(); ++l)
            s.ilcs.push_back(parse_ilc(doc.at("ilcs")[l], "$.ilcs[" + std::to_string(l + 1) + "]"));
    }
    if (doc.contains("events")) {
        if (!doc.at("events").is_array()) schema("$.events", "expected a list");
        for (std::size_t k = 0; k < doc.at("events").size(); ++k) {
            const auto& ev = doc.at("events")[k];
            const std::string ep = "$.events[" + std::to_string(k + 1) + "]";
            only_keys(ev, ep, {"time", "mg", "delta_p_load"});
            LoadEvent e;
            e.time = req_number(ev, "time", ep);
            if (!ev.contains("mg")) schema(ep + ".mg", "required field missing");
            e.mg = index1(ev.at("mg"), ep + ".mg");
            e.delta_p_load = req_number(ev, "delta_p_load", ep);
            s.events.push_back(e);
        }
        std::stable_sort(s.events.begin(), s.events.end(),
                         [](const LoadEvent& a, const LoadEvent& b) { return a.time < b.time; });
    }
    if (doc.contains("sim")) {
        const auto& sm = doc.at("sim");
        only_keys(sm, "$.sim", {"t_end", "rtol", "atol_scale", "max_step", "output_interval", "f_nom"});
        opt_number(sm, "t_end", "$.sim", s.sim.t_end);
        opt_number(sm, "rtol", "$.sim", s.sim.integrator.rtol);
        opt_number(sm, "atol_scale", "$.sim", s.sim.integrator.atol_scale);
        opt_number(sm, "max_step", "$.sim", s.sim.integrator.max_step);
        opt_number(sm, "output_interval", "$.sim", s.sim.integrator.output_interval);
        opt_number(sm, "f_nom", "$.sim", s.sim.f_nom);
        if (!(s.sim.t_end > 0)) schema("$.sim.t_end", "must be positive");
        if (!(s.sim.integrator.rtol > 0)) schema("$.sim.rtol", "must be positive");
        if (!(s.sim.integrator.atol_scale > 0)) schema("$.sim.atol_scale", "must be positive");
        if (!(s.sim.integrator.max_step > 0)) schema("$.sim.max_step", "must be positive");
        if (s.sim.integrator.output_interval < 0) schema("$.sim.output_interval", "must be non-negative");
        if (!(s.sim.f_nom > 0)) schema("$.sim.f_nom", "must be positive");
    }
    return s;
}

SystemSpec parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

std::string resolved_json(const SystemSpec& s) {
    json doc;
    doc["name"] = s.name;
    if (!s.notes.empty()) doc["notes"] = s.notes;
    doc["defaults"] = "table2";
    doc["mgs"] = json::array();
    for (std::size_t j = 0; j < s.mgs.size(); ++j) {
        const auto& m = s.mgs[j];
        json o;
        o["kind"] = to_string(m.kind);
        if (m.kind == MgKind::SwingGovernor) {
            o["M"] = m.M;
            o["D"] = m.D;
            o["T_g"] = m.T_g;
            o["inv_R"] = m.inv_R;
        } else {
            o["T"] = m.T;
            o["D"] = m.D;
        }
        o["rating"] = m.rating;
        o["p_load"] = j < s.p_load.size() ? s.p_load[j] : 0.0;
        doc["mgs"].push_back(o);
    }
    doc["ilcs"] = json::array();
    for (const auto& e : s.ilcs) {
        const auto& ph = e.unit.phys;
        json phys{{"C", ph.C},       {"V_dc_ref", ph.V_dc_ref}, {"K_dc", ph.K_dc}, {"tau1", ph.tau1},
                  {"tau2", ph.tau2}, {"V_ac", ph.V_ac},         {"f_nom", ph.f_nom}, {"B", ph.B}};
        if (ph.L) phys["L"] = *ph.L;
        doc["ilcs"].push_back(json{{"mg_a", e.endpoints.mg_a + 1},
                                   {"mg_b", e.endpoints.mg_b + 1},
                                   {"scheme", scheme_tag(e.unit.scheme)},
                                   {"physical", phys},
                                   {"gains", gains_json(e.unit.gains)}});
    }
    doc["events"] = json::array();
    for (const auto& e : s.events)
        doc["events"].push_back(json{{"time", e.time}, {"mg", e.mg + 1}, {"delta_p_load", e.delta_p_load}});
    doc["sim"] = json{{"t_end", s.sim.t_end},
                      {"rtol", s.sim.integrator.rtol},
                      {"atol_scale", s.sim.integrator.atol_scale},
                      {"max_step", s.sim.integrator.max_step},
                      {"output_interval", s.sim.integrator.output_interval},
                      {"f_nom", s.sim.f_nom}};
    return doc.dump(2) + "\n";
}

BuiltSystem build_system(const SystemSpec& spec) {
    NetworkSpec ns;
    ns.mg_count = spec.mgs.size();
    for (const auto& e : spec.ilcs) ns.ilcs.push_back(e.endpoints);
    auto net = validate_topology(ns);
    for (std::size_t j = 0; j < spec.mgs.size(); ++j) validate_mg(spec.mgs[j], j);
    std::vector<IlcUnit> units;
    for (std::size_t l = 0; l < spec.ilcs.size(); ++l) {
        validate_ilc(spec.ilcs[l].unit, l);
        units.push_back(spec.ilcs[l].unit);
    }
    if (spec.p_load.size() != spec.mgs.size()) fail(ErrorKind::SchemaViolation, "one base load per MG is required");
    for (std::size_t k = 0; k < spec.events.size(); ++k)
        if (spec.events[k].mg >= spec.mgs.size())
            fail(ErrorKind::DanglingEndpoint, "event " + std::to_string(k + 1) + " references MG " +
                                                  std::to_string(spec.events[k].mg + 1));
    auto ode = OdeSystem::assemble(net, spec.mgs, std::move(units));
    return {std::move(net), std::move(ode)};
}

EquilibriumPoint base_equilibrium(const SystemSpec& spec, const OdeSystem& ode) {
    return find_equilibrium(ode, spec.p_load, equilibrium_guess(ode, spec.p_load));
}

Trajectory simulate(const SystemSpec& spec, const OdeSystem& ode) {
    const auto eq = base_equilibrium(spec, ode);
    return integrate(ode, eq.state, spec.p_load, spec.events, 0.0, spec.sim.t_end, spec.sim.integrator);
}

namespace {

struct Target {
    std::vector<std::size_t> ilcs;
    std::string field;
};

Target resolve(const SystemSpec& spec, const std::string& path) {
    Target t;
    std::string rest;
    if (path.rfind("ilc.", 0) == 0) {
        rest = path.substr(4);
        for (std::size_t l = 0; l < spec.ilcs.size(); ++l) t.ilcs.push_back(l);
    } else if (path.rfind("ilc[", 0) == 0) {
        const auto close = path.find("].");
        if (close == std::string::npos) fail(ErrorKind::SchemaViolation, "bad parameter path '" + path + "'");
        std::size_t k = 0;
        try {
            k = std::stoul(path.substr(4, close - 4));
        } catch (...) {
            fail(ErrorKind::SchemaViolation, "bad ILC index in '" + path + "'");
        }
        if (k < 1 || k > spec.ilcs.size()) fail(ErrorKind::DanglingEndpoint, "parameter path '" + path + "' names a missing ILC");
        t.ilcs.push_back(k - 1);
        rest = path.substr(close + 2);
    } else {
        fail(ErrorKind::SchemaViolation, "unknown parameter path '" + path + "'");
    }
    if (rest.rfind("gains.", 0) == 0) rest = rest.substr(6);
    t.field = rest;
    return t;
}

std::vector<double*> fields(IlcUnit& u, const std::string& f, const std::string& path) {
    auto& p = u.phys;
    auto& g = u.gains;
    if (f == "K_dc") return {&p.K_dc};
    if (f == "tau") return {&p.tau1, &p.tau2};
    if (f == "tau1") return {&p.tau1};
    if (f == "tau2") return {&p.tau2};
    if (f == "C") return {&p.C};
    if (f == "V_dc_ref") return {&p.V_dc_ref};
    if (f == "V_ac") return {&p.V_ac};
    if (f == "K_omega") return {&g.K_omega1, &g.K_omega2};
    if (f == "K_v") return {&g.K_v1, &g.K_v2};
    if (f == "K_i") return {&g.K_i, &g.K_i1, &g.K_i2};
    if (f == "m") return {&g.m1, &g.m2};
    if (f == "m_p") return {&g.m_p1, &g.m_p2};
    if (f == "kappa_s") return {&g.kappa_s1, &g.kappa_s2};
    if (f == "K_omega1") return {&g.K_omega1};
    if (f == "K_omega2") return {&g.K_omega2};
    if (f == "K_v1") return {&g.K_v1};
    if (f == "K_v2") return {&g.K_v2};
    if (f == "K_i1") return {&g.K_i1};
    if (f == "K_i2") return {&g.K_i2};
    if (f == "K_pdc") return {&g.K_pdc};
    if (f == "K_idc") return {&g.K_idc};
    if (f == "m1") return {&g.m1};
    if (f == "m2") return {&g.m2};
    if (f == "m_p1") return {&g.m_p1};
    if (f == "m_p2") return {&g.m_p2};
    if (f == "kappa_s1") return {&g.kappa_s1};
    if (f == "kappa_s2") return {&g.kappa_s2};
    fail(ErrorKind::SchemaViolation, "unknown parameter path '" + path + "'");
}

}  // namespace

void apply_parameter(SystemSpec& spec, const std::string& path, double value) {
    if (!std::isfinite(value)) fail(ErrorKind::NonFiniteInput, "parameter value for '" + path + "' is not finite");
    const auto t = resolve(spec, path);
    for (auto l : t.ilcs) {
        auto& u = spec.ilcs[l].unit;
        if (t.field == "L") {
            u.phys.L = value;
            u.phys.refresh_susceptance();
        } else if (t.field == "B") {
            u.phys.L.reset();
            u.phys.B = value;
        } else {
            for (double* p : fields(u, t.field, path)) *p = value;
            if (t.field == "V_ac") u.phys.refresh_susceptance();
        }
    }
}

double read_parameter(const SystemSpec& spec, const std::string& path) {
    const auto t = resolve(spec, path);
    if (t.ilcs.empty()) fail(ErrorKind::SchemaViolation, "scenario has no ILC for '" + path + "'");
    IlcUnit u = spec.ilcs[t.ilcs.front()].unit;
    if (t.field == "L") {
        if (!u.phys.L) fail(ErrorKind::SchemaViolation, "ILC inductance is not set");
        return *u.phys.L;
    }
    if (t.field == "B") return u.phys.B;
    return *fields(u, t.field, path).front();
}

void set_scheme(SystemSpec& spec, Scheme scheme) {
    for (auto& e : spec.ilcs) e.unit.scheme = scheme;
}

}  // namespace mgilc
