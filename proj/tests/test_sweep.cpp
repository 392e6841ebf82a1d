#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mgilc/error.hpp"
#include "mgilc/sweep.hpp"

using namespace mgilc;

namespace {

SystemSpec base(Scheme s) {
    auto spec = parse_scenario(MGILC_SCENARIO_DIR "/two-mg.json");
    set_scheme(spec, s);
    return spec;
}

SweepRequest request(Scheme s, const std::string& param, double lo, double hi, Direction d, double tol,
                     bool log_scale = false) {
    SweepRequest r;
    r.base = base(s);
    r.parameter = param;
    r.lower = lo;
    r.upper = hi;
    r.direction = d;
    r.tolerance = tol;
    r.log_scale = log_scale;
    return r;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("default dual AC/DC droop is stable") {
    const auto c = classify_stability(base(Scheme::DualAcDcDroop));
    CHECK(c.verdict == Stability::Stable);
    CHECK(c.abscissa < -1e-6);
    CHECK(c.equilibrium_found);
    CHECK(c.sim_returned);
    CHECK_FALSE(c.sim_diverged);
}

TEST_CASE("matching with ample DC damping is stable") {
    auto spec = base(Scheme::Matching);
    apply_parameter(spec, "ilc.K_dc", 0.5);
    CHECK(classify_stability(spec).verdict == Stability::Stable);
}

TEST_CASE("undamped grid-forming frequency droop is not stable") {
    auto spec = base(Scheme::GfmFreqDroop);
    apply_parameter(spec, "ilc.K_dc", 0.0);
    const auto c = classify_stability(spec);
    CHECK(c.verdict != Stability::Stable);
    CHECK(c.abscissa >= 0);
}

TEST_CASE("missing equilibrium classifies as unstable with a cause") {
    auto spec = base(Scheme::DualDroopMatching);
    spec.p_load = {-3e8, 0.0};
    const auto c = classify_stability(spec);
    CHECK(c.verdict == Stability::Unstable);
    CHECK_FALSE(c.equilibrium_found);
    CHECK(c.cause.find("no equilibrium") != std::string::npos);
}

TEST_CASE("stability names") {
    CHECK(std::string(to_string(Stability::Stable)) == "stable");
    CHECK(std::string(to_string(Stability::Unstable)) == "unstable");
    CHECK(std::string(to_string(Stability::Indeterminate)) == "indeterminate");
}

TEST_CASE("K_dc boundary of the first dual frequency droop is zero") {
    const auto r = bisect_boundary(request(Scheme::DualFreqDroop1, "ilc.K_dc", 0, 1, Direction::MinStable, 0.01));
    CHECK(r.status == BoundaryStatus::BeyondRange);
    CHECK(r.boundary == 0.0);
    CHECK(std::isnan(r.unstable_end));
    CHECK(r.stable_evidence.verdict == Stability::Stable);
}

TEST_CASE("lag boundary of the first dual frequency droop is bracketed") {
    const auto r =
        bisect_boundary(request(Scheme::DualFreqDroop1, "ilc.tau", 0.01, 1, Direction::MaxStable, 0.005), {}, 4);
    REQUIRE(r.status == BoundaryStatus::Bracketed);
    CHECK(r.boundary > 0.03);
    CHECK(r.boundary < 0.2);
    CHECK(r.unstable_end > r.stable_end);
    CHECK(r.unstable_end - r.stable_end <= 0.005);
    CHECK(r.stable_evidence.verdict == Stability::Stable);
    CHECK(r.unstable_evidence.verdict != Stability::Stable);
    MESSAGE("tau boundary ", r.boundary);
}

TEST_CASE("log-scale bisection meets its ratio tolerance") {
    const auto r = bisect_boundary(
        request(Scheme::DualFreqDroop1, "ilc.gains.K_omega", 2.5e7, 2.5e9, Direction::MaxStable, 0.02, true), {}, 4);
    REQUIRE(r.status == BoundaryStatus::Bracketed);
    CHECK(r.unstable_end / r.stable_end <= 1.02 + 1e-12);
    CHECK(r.unstable_end / r.stable_end > 1.0);
}

TEST_CASE("bisection refuses intervals without a sign change in the expected direction") {
    CHECK(kind_of([] {
              bisect_boundary(request(Scheme::GfmFreqDroop, "ilc.K_dc", 0, 0.001, Direction::MinStable, 1e-4));
          }) == ErrorKind::NonBracketing);
    CHECK(kind_of([] {
              bisect_boundary(request(Scheme::DualFreqDroop1, "ilc.tau", 0.01, 1, Direction::MinStable, 0.01));
          }) == ErrorKind::NonBracketing);
    CHECK(kind_of([] {
              bisect_boundary(request(Scheme::DualFreqDroop1, "ilc.tau", 1, 0.5, Direction::MaxStable, 0.01));
          }) == ErrorKind::SchemaViolation);
    CHECK(kind_of([] {
              bisect_boundary(request(Scheme::DualFreqDroop1, "ilc.tau", 0, 1, Direction::MaxStable, 0.01, true));
          }) == ErrorKind::SchemaViolation);
}

TEST_CASE("boundary ordering across schemes") {
    auto bound = [](Scheme s, const char* p, double lo, double hi, Direction d, double tol, bool lg) {
        return bisect_boundary(request(s, p, lo, hi, d, tol, lg), {}, 4);
    };
    const auto tau_m = bound(Scheme::Matching, "ilc.tau", 0.01, 5, Direction::MaxStable, 0.005, false);
    const auto tau_d = bound(Scheme::DualFreqDroop1, "ilc.tau", 0.01, 5, Direction::MaxStable, 0.005, false);
    CHECK(tau_m.boundary > tau_d.boundary);

    const auto kdc_p = bound(Scheme::DualDroopMatching, "ilc.K_dc", 0, 1, Direction::MinStable, 0.005, false);
    CHECK(kdc_p.boundary == 0.0);
    const auto kdc_g = bound(Scheme::GfmFreqDroop, "ilc.K_dc", 0, 1, Direction::MinStable, 0.005, false);
    CHECK(kdc_g.boundary > kdc_p.boundary);

    const auto l_p = bound(Scheme::DualDroopMatching, "ilc.L", 1e-5, 2e-3, Direction::MinStable, 0.05, true);
    const auto l_g = bound(Scheme::GfmFreqDroop, "ilc.L", 1e-5, 2e-3, Direction::MinStable, 0.05, true);
    CHECK(l_p.boundary <= l_g.boundary);
}

TEST_CASE("table cells") {
    const auto cells = table3_cells({kAllSchemes.begin(), kAllSchemes.end()});
    CHECK(cells.size() == 32);
    for (const auto& c : cells) {
        CHECK(c.lower < c.upper);
        if (c.column == "L min") CHECK(c.applicable == (port_config(c.scheme) != PortConfig::GridFollowing));
        if (c.column == "gain max") CHECK(c.upper == doctest::Approx(100 * c.lower));
    }
}

TEST_CASE("cell keys depend on content only") {
    const auto cells = table3_cells({Scheme::Matching});
    const auto b = base(Scheme::DualFreqDroop1);
    CHECK(cell_key(b, cells[0], {}) == cell_key(base(Scheme::DualFreqDroop1), cells[0], {}));
    CHECK(cell_key(b, cells[0], {}) != cell_key(b, cells[1], {}));
    auto b2 = b;
    apply_parameter(b2, "ilc.C", 2e-3);
    CHECK(cell_key(b, cells[0], {}) != cell_key(b2, cells[0], {}));
    ClassifyOptions o;
    o.horizon = 30;
    CHECK(cell_key(b, cells[0], {}) != cell_key(b, cells[0], o));
}

TEST_CASE("harness is deterministic and resumes from its cache") {
    const auto dir = std::filesystem::temp_directory_path() / "mgilc_sweep_cache_test";
    std::filesystem::remove_all(dir);
    HarnessConfig cfg;
    cfg.cache_dir = dir.string();
    cfg.workers = 4;
    cfg.schemes = {Scheme::DualFreqDroop1, Scheme::DualDroopMatching};
    const auto spec = base(Scheme::DualFreqDroop1);
    const auto first = table3_harness(spec, cfg);
    const auto second = table3_harness(spec, cfg);
    HarnessConfig nocache = cfg;
    nocache.cache_dir.clear();
    nocache.workers = 1;
    const auto third = table3_harness(spec, nocache);
    REQUIRE(first.cells.size() == 8);
    REQUIRE(second.cells.size() == 8);
    for (std::size_t i = 0; i < first.cells.size(); ++i) {
        CHECK_FALSE(first.cells[i].from_cache);
        CHECK(second.cells[i].from_cache == first.cells[i].spec.applicable);
        CHECK(first.cells[i].display == second.cells[i].display);
        CHECK(first.cells[i].display == third.cells[i].display);
        CHECK(first.cells[i].result.boundary == third.cells[i].result.boundary);
    }
    const auto* na = first.find(Scheme::DualFreqDroop1, "L min");
    REQUIRE(na != nullptr);
    CHECK_FALSE(na->spec.applicable);
    CHECK(na->display == "N/A");
    std::ostringstream csv;
    write_table_csv(first, csv);
    CHECK(csv.str().find("reference") != std::string::npos);
    CHECK(format_table_text(first).find("reference") != std::string::npos);
    std::filesystem::remove_all(dir);
}
