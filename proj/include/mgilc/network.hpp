#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mgilc {

struct IlcEndpoints {
    std::size_t mg_a = 0;  // 0-based
    std::size_t mg_b = 0;
};

struct NetworkSpec {
    std::size_t mg_count = 0;
    std::vector<IlcEndpoints> ilcs;
};

// One ILC side attached to one MG. Connections 2l and 2l+1 belong to ILC l.
struct Connection {
    std::size_t ilc = 0;
    int side = 0;  // 0 -> mg_a, 1 -> mg_b
    std::size_t mg = 0;
};

class ValidatedNetwork {
public:
    std::size_t mg_count() const { return spec_.mg_count; }
    std::size_t ilc_count() const { return spec_.ilcs.size(); }
    const std::vector<Connection>& connections() const { return connections_; }
    const IlcEndpoints& endpoints(std::size_t ilc) const { return spec_.ilcs.at(ilc); }
    const NetworkSpec& spec() const { return spec_; }

    friend ValidatedNetwork validate_topology(const NetworkSpec& spec);
    friend bool operator==(const ValidatedNetwork& a, const ValidatedNetwork& b);

private:
    NetworkSpec spec_;
    std::vector<Connection> connections_;
};

ValidatedNetwork validate_topology(const NetworkSpec& spec);
bool operator==(const ValidatedNetwork& a, const ValidatedNetwork& b);

struct IncidenceMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<int> values;  // row-major
    std::vector<std::string> row_labels, col_labels;

    int operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    int& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

// A[i, rho] = 1 iff connection rho attaches to MG i.
IncidenceMatrix build_ilc_incidence(const ValidatedNetwork& net);

// Node/edge graph with lines and grid-following ILC edges. Built and checked only, never simulated.
struct TopologyEdge {
    std::size_t from = 0, to = 0;  // 0-based node indices; from is the source
    bool gfl_ilc = false;
};

struct GeneralTopology {
    std::size_t mg_buses = 0;         // nu
    std::size_t gfm_connections = 0;  // mu; nodes are MG buses first, then GFM connection nodes
    std::vector<TopologyEdge> edges;
};

struct TopologyCounts {
    std::size_t lines = 0;            // m
    std::size_t mg_buses = 0;         // nu
    std::size_t gfm_connections = 0;  // mu
    std::size_t gfl_connections = 0;  // lambda
};

TopologyCounts validate_general_topology(const GeneralTopology& gt);

struct GeneralIncidence {
    IncidenceMatrix signed_incidence;  // nodes x all edges
    IncidenceMatrix gfl_incidence;     // nodes x GFL connections
    TopologyCounts counts;
};

GeneralIncidence build_general_incidence(const GeneralTopology& gt);

}  // namespace mgilc
