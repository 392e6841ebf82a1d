#include "mgilc/network.hpp"

#include <numeric>

#include "mgilc/error.hpp"

namespace mgilc {

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

ValidatedNetwork validate_topology(const NetworkSpec& spec) {
    if (spec.mg_count == 0) fail(ErrorKind::DisconnectedGraph, "network has no microgrids");
    std::vector<std::size_t> parent(spec.mg_count);
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t l = 0; l < spec.ilcs.size(); ++l) {
        const auto& e = spec.ilcs[l];
        for (std::size_t mg : {e.mg_a, e.mg_b})
            if (mg >= spec.mg_count)
                fail(ErrorKind::DanglingEndpoint,
                     "ILC " + std::to_string(l + 1) + " references MG " + std::to_string(mg + 1) + ", but only " +
                         std::to_string(spec.mg_count) + " MGs exist");
        if (e.mg_a == e.mg_b)
            fail(ErrorKind::SelfLoop,
                 "ILC " + std::to_string(l + 1) + " connects MG " + std::to_string(e.mg_a + 1) + " to itself");
        parent[find_root(parent, e.mg_a)] = find_root(parent, e.mg_b);
    }
    const std::size_t root = find_root(parent, 0);
    for (std::size_t i = 1; i < spec.mg_count; ++i)
        if (find_root(parent, i) != root)
            fail(ErrorKind::DisconnectedGraph, "MG " + std::to_string(i + 1) + " is not reachable from MG 1");

    ValidatedNetwork net;
    net.spec_ = spec;
    net.connections_.reserve(2 * spec.ilcs.size());
    for (std::size_t l = 0; l < spec.ilcs.size(); ++l) {
        net.connections_.push_back({l, 0, spec.ilcs[l].mg_a});
        net.connections_.push_back({l, 1, spec.ilcs[l].mg_b});
    }
    return net;
}

bool operator==(const ValidatedNetwork& a, const ValidatedNetwork& b) {
    if (a.spec_.mg_count != b.spec_.mg_count || a.spec_.ilcs.size() != b.spec_.ilcs.size()) return false;
    for (std::size_t l = 0; l < a.spec_.ilcs.size(); ++l)
        if (a.spec_.ilcs[l].mg_a != b.spec_.ilcs[l].mg_a || a.spec_.ilcs[l].mg_b != b.spec_.ilcs[l].mg_b) return false;
    return true;
}

IncidenceMatrix build_ilc_incidence(const ValidatedNetwork& net) {
    IncidenceMatrix a;
    a.rows = net.mg_count();
    a.cols = net.connections().size();
    a.values.assign(a.rows * a.cols, 0);
    for (std::size_t i = 0; i < a.rows; ++i) a.row_labels.push_back("mg" + std::to_string(i + 1));
    for (std::size_t rho = 0; rho < a.cols; ++rho) {
        const auto& c = net.connections()[rho];
        a(c.mg, rho) = 1;
        a.col_labels.push_back("c" + std::to_string(rho + 1) + "@ilc" + std::to_string(c.ilc + 1));
    }
    return a;
}

TopologyCounts validate_general_topology(const GeneralTopology& gt) {
    const std::size_t nodes = gt.mg_buses + gt.gfm_connections;
    TopologyCounts counts;
    counts.mg_buses = gt.mg_buses;
    counts.gfm_connections = gt.gfm_connections;
    for (std::size_t k = 0; k < gt.edges.size(); ++k) {
        const auto& e = gt.edges[k];
        if (e.from >= nodes || e.to >= nodes)
            fail(ErrorKind::DanglingEndpoint, "edge " + std::to_string(k + 1) + " references a node outside 1.." +
                                                  std::to_string(nodes));
        if (e.from == e.to) fail(ErrorKind::SelfLoop, "edge " + std::to_string(k + 1) + " is a self-loop");
        if (e.gfl_ilc)
            counts.gfl_connections += 2;
        else
            ++counts.lines;
    }
    return counts;
}

GeneralIncidence build_general_incidence(const GeneralTopology& gt) {
    GeneralIncidence out;
    out.counts = validate_general_topology(gt);
    const std::size_t nodes = gt.mg_buses + gt.gfm_connections;

    auto& m = out.signed_incidence;
    m.rows = nodes;
    m.cols = gt.edges.size();
    m.values.assign(m.rows * m.cols, 0);
    auto& a = out.gfl_incidence;
    a.rows = nodes;
    a.cols = out.counts.gfl_connections;
    a.values.assign(a.rows * a.cols, 0);
    for (std::size_t v = 0; v < nodes; ++v) {
        std::string label = v < gt.mg_buses ? "bus" + std::to_string(v + 1)
                                            : "gfm" + std::to_string(v - gt.mg_buses + 1);
        m.row_labels.push_back(label);
        a.row_labels.push_back(label);
    }
    std::size_t conn = 0;
    for (std::size_t k = 0; k < gt.edges.size(); ++k) {
        const auto& e = gt.edges[k];
        m(e.from, k) = 1;
        m(e.to, k) = -1;
        m.col_labels.push_back((e.gfl_ilc ? "ilc_edge" : "line") + std::to_string(k + 1));
        if (e.gfl_ilc) {
            a(e.from, conn) = 1;
            a.col_labels.push_back("l" + std::to_string(conn + 1));
            ++conn;
            a(e.to, conn) = 1;
            a.col_labels.push_back("l" + std::to_string(conn + 1));
            ++conn;
        }
    }
    return out;
}

}  // namespace mgilc
