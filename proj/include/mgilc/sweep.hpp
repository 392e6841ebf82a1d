#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mgilc/scenario.hpp"

namespace mgilc {

enum class Stability { Stable, Unstable, Indeterminate };
const char* to_string(Stability s);

struct ClassifyOptions {
    double abscissa_threshold = -1e-6;
    double disturbance_fraction = 0.01;  // of the disturbed MG's rating, applied as added load
    std::size_t disturbed_mg = 0;
    double horizon = 60.0;
    double return_ratio = 0.5;  // final deviation must fall below this fraction of its peak
};

struct Classification {
    Stability verdict = Stability::Indeterminate;
    double abscissa = 0;
    bool equilibrium_found = false;
    bool sim_diverged = false;
    bool sim_returned = false;
    std::string cause;
};

Classification classify_stability(const SystemSpec& spec, const ClassifyOptions& opts = {});

enum class Direction { MinStable, MaxStable };  // stable above / below the boundary

struct SweepRequest {
    SystemSpec base;
    std::string parameter;
    double lower = 0, upper = 1;
    Direction direction = Direction::MinStable;
    double tolerance = 0.01;  // absolute, or relative ratio when log_scale
    bool log_scale = false;
};

enum class BoundaryStatus { Bracketed, BeyondRange };

struct BoundaryResult {
    BoundaryStatus status = BoundaryStatus::Bracketed;
    double boundary = 0;      // last verified stable value
    double stable_end = 0;    // bracket end classified Stable
    double unstable_end = 0;  // bracket end classified not Stable (NaN when beyond range)
    Classification stable_evidence, unstable_evidence;
    int probes = 0;
};

BoundaryResult bisect_boundary(const SweepRequest& req, const ClassifyOptions& opts = {}, std::size_t workers = 1);

struct CellSpec {
    Scheme scheme = Scheme::DualFreqDroop1;
    std::string column;  // "K_dc min", "tau max", "gain max", "L min"
    bool applicable = true;
    std::string parameter;
    double lower = 0, upper = 1, tolerance = 0.01;
    Direction direction = Direction::MinStable;
    bool log_scale = false;
    double display_scale = 1.0;  // value shown = parameter * display_scale
    std::string unit;
    std::string reference;          // reference entry as printed
    double reference_value = 0;     // numeric reference in display units; NaN when qualitative
    bool reference_beyond = false;  // reference says stable over the whole range (">5", "Any reasonable")
};

struct SweepCell {
    CellSpec spec;
    bool ok = false;
    std::string error;
    BoundaryResult result;
    bool from_cache = false;
    std::string display;
    bool matches_reference = false;  // informative comparison only
};

struct SweepTable {
    std::vector<SweepCell> cells;
    const SweepCell* find(Scheme s, const std::string& column) const;
};

struct HarnessConfig {
    std::string cache_dir;  // empty disables caching
    std::size_t workers = 0;
    ClassifyOptions classify;
    std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
};

std::vector<CellSpec> table3_cells(const std::vector<Scheme>& schemes);
SweepTable table3_harness(const SystemSpec& base, const HarnessConfig& cfg);

// Content hash of a cell request (hex), used as the cache key.
std::string cell_key(const SystemSpec& base, const CellSpec& cell, const ClassifyOptions& opts);

void write_table_csv(const SweepTable& t, std::ostream& out);
std::string format_table_text(const SweepTable& t);

}  // namespace mgilc
