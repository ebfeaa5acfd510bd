#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsig/common.hpp"
#include "avsig/matrices.hpp"

namespace avsig {

/// Undirected weighted edge, canonical u < v. Weights are the surviving
/// correlation values, strictly positive.
struct WeightedEdge {
    int u = 0, v = 0;
    double weight = 0.0;
};

class WeightedGraph {
public:
    WeightedGraph() = default;
    explicit WeightedGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {}

    void add_edge(int u, int v, double weight) {
        if (u == v) throw ValidationError("self-loops are not allowed");
        if (weight <= 0.0) throw ValidationError("edge weights must be positive");
        if (u > v) std::swap(u, v);
        edges_.push_back({u, v, weight});
    }

    void finalize() {
        std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
            return std::tie(a.u, a.v) < std::tie(b.u, b.v);
        });
    }

    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<WeightedEdge>& edges() const { return edges_; }
    size_t n_nodes() const { return nodes_.size(); }
    size_t n_edges() const { return edges_.size(); }

private:
    std::vector<std::string> nodes_;
    std::vector<WeightedEdge> edges_;
};

struct ThresholdConfig {
    double corr_min = 0.0;
};

/// Keeps edges whose correlation is >= corr_min and positive. Values above 1
/// are accepted and simply yield an empty edge set; negative thresholds are
/// rejected since negative correlations never produce edges.
inline WeightedGraph threshold_graph(const CorrelationMatrix& C, const ThresholdConfig& cfg) {
    if (cfg.corr_min < 0.0)
        throw ValidationError("corr_min must be non-negative");
    WeightedGraph g(C.labels);
    for (size_t i = 0; i < C.size; ++i)
        for (size_t j = i + 1; j < C.size; ++j) {
            double v = C.values[i][j];
            if (v > 0.0 && v >= cfg.corr_min)
                g.add_edge(static_cast<int>(i), static_cast<int>(j), v);
        }
    g.finalize();
    return g;
}

struct CommunityPartition {
    std::vector<std::vector<int>> communities;  // disjoint, covering node sets
    double modularity = 0.0;

    std::vector<int> community_of(size_t n_nodes) const {
        std::vector<int> c(n_nodes, -1);
        for (size_t k = 0; k < communities.size(); ++k)
            for (int v : communities[k]) c[v] = static_cast<int>(k);
        return c;
    }
};

namespace detail {

struct Adjacency {
    std::vector<std::vector<std::pair<int, int>>> nbr;  // node -> (neighbor, edge index)

    Adjacency(size_t n, const std::vector<WeightedEdge>& edges,
              const std::vector<bool>* active = nullptr)
        : nbr(n) {
        for (size_t e = 0; e < edges.size(); ++e) {
            if (active && !(*active)[e]) continue;
            nbr[edges[e].u].emplace_back(edges[e].v, static_cast<int>(e));
            nbr[edges[e].v].emplace_back(edges[e].u, static_cast<int>(e));
        }
    }
};

inline bool close(double a, double b) {
    return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
}

/// Brandes accumulation from one source over the shortest-path DAG under
/// distance = 1/weight. Adds each ordered pair's fractional path counts to
/// `acc`, indexed by edge.
inline void brandes_from_source(int s, size_t n, const std::vector<WeightedEdge>& edges,
                                const Adjacency& adj, std::vector<double>& acc) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf), sigma(n, 0.0), delta(n, 0.0);
    std::vector<std::vector<std::pair<int, int>>> pred(n);  // (node, edge idx)
    std::vector<bool> settled(n, false);
    std::vector<int> order;

    using QItem = std::pair<double, int>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
    dist[s] = 0.0;
    sigma[s] = 1.0;
    pq.emplace(0.0, s);
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (settled[v]) continue;
        settled[v] = true;
        order.push_back(v);
        for (auto [w, e] : adj.nbr[v]) {
            if (settled[w]) continue;
            double nd = dist[v] + 1.0 / edges[e].weight;
            if (dist[w] == inf || (nd < dist[w] && !close(nd, dist[w]))) {
                dist[w] = nd;
                sigma[w] = sigma[v];
                pred[w].assign(1, {v, e});
                pq.emplace(nd, w);
            } else if (close(nd, dist[w])) {
                sigma[w] += sigma[v];
                pred[w].emplace_back(v, e);
            }
        }
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int w = *it;
        for (auto [v, e] : pred[w]) {
            double share = sigma[v] / sigma[w] * (1.0 + delta[w]);
            acc[e] += share;
            delta[v] += share;
        }
    }
}

} // namespace detail

/// Edge betweenness: per node pair, each edge receives the fraction of
/// shortest paths (length = 1/weight) that traverse it; fractions are summed
/// over all unordered pairs.
inline std::vector<double> edge_betweenness(const WeightedGraph& g,
                                            const std::vector<bool>* active = nullptr) {
    std::vector<double> acc(g.n_edges(), 0.0);
    detail::Adjacency adj(g.n_nodes(), g.edges(), active);
    for (size_t s = 0; s < g.n_nodes(); ++s)
        detail::brandes_from_source(static_cast<int>(s), g.n_nodes(), g.edges(), adj, acc);
    for (auto& b : acc) b /= 2.0;  // each unordered pair visited from both ends
    return acc;
}

/// Betweenness keyed by (u, v) node labels, for reports and tests.
inline std::map<std::pair<int, int>, double> edge_betweenness_map(const WeightedGraph& g) {
    auto b = edge_betweenness(g);
    std::map<std::pair<int, int>, double> out;
    for (size_t e = 0; e < g.n_edges(); ++e)
        out[{g.edges()[e].u, g.edges()[e].v}] = b[e];
    return out;
}

/// Weighted modularity of a partition against this graph's full edge set.
inline double modularity(const WeightedGraph& g, const std::vector<int>& community_of) {
    double m = 0.0;
    for (const auto& e : g.edges()) m += e.weight;
    if (m <= 0.0) return 0.0;
    size_t nc = 0;
    for (int c : community_of) nc = std::max(nc, static_cast<size_t>(c) + 1);
    std::vector<double> w_in(nc, 0.0), strength(nc, 0.0);
    for (const auto& e : g.edges()) {
        strength[community_of[e.u]] += e.weight;
        strength[community_of[e.v]] += e.weight;
        if (community_of[e.u] == community_of[e.v]) w_in[community_of[e.u]] += e.weight;
    }
    double q = 0.0;
    for (size_t c = 0; c < nc; ++c) {
        double frac = strength[c] / (2.0 * m);
        q += w_in[c] / m - frac * frac;
    }
    return q;
}

namespace detail {

inline std::vector<std::vector<int>> components(size_t n, const std::vector<WeightedEdge>& edges,
                                                const std::vector<bool>& active) {
    std::vector<int> comp(n, -1);
    Adjacency adj(n, edges, &active);
    int nc = 0;
    std::vector<int> stack;
    for (size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = nc;
        stack.push_back(static_cast<int>(s));
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (auto [w, e] : adj.nbr[v])
                if (comp[w] < 0) {
                    comp[w] = nc;
                    stack.push_back(w);
                }
        }
        ++nc;
    }
    std::vector<std::vector<int>> out(nc);
    for (size_t v = 0; v < n; ++v) out[comp[v]].push_back(static_cast<int>(v));
    return out;
}

} // namespace detail

/// Girvan-Newman edge-betweenness clustering: repeatedly remove the
/// highest-betweenness edge (canonical-order tie break) and return the
/// connected-component partition with maximal modularity across the removal
/// sequence. Isolated nodes form singleton communities.
inline CommunityPartition detect_communities(const WeightedGraph& g) {
    size_t n = g.n_nodes();
    std::vector<bool> active(g.n_edges(), true);

    CommunityPartition best;
    best.modularity = -std::numeric_limits<double>::infinity();
    size_t remaining = g.n_edges();
    while (true) {
        auto comps = detail::components(n, g.edges(), active);
        std::vector<int> comp_of(n);
        for (size_t c = 0; c < comps.size(); ++c)
            for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
        double q = modularity(g, comp_of);
        if (q > best.modularity + 1e-12) {
            best.modularity = q;
            best.communities = comps;
        }
        if (remaining == 0) break;

        auto bet = edge_betweenness(g, &active);
        int arg = -1;
        for (size_t e = 0; e < g.n_edges(); ++e) {
            if (!active[e]) continue;
            if (arg < 0 || bet[e] > bet[arg] + 1e-12) arg = static_cast<int>(e);
            // equal scores keep the earlier (canonical) edge
        }
        active[arg] = false;
        --remaining;
    }
    if (g.n_edges() == 0) best.modularity = 0.0;
    return best;
}

// --- serialization ----------------------------------------------------------

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

inline std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", w);
    return buf;
}

} // namespace detail

/// Graphviz dot output; nodes carry their community id as an attribute.
inline void emit_graph_dot(std::ostream& os, const WeightedGraph& g,
                           const CommunityPartition& partition) {
    auto comm = partition.community_of(g.n_nodes());
    os << "graph malware_classes {\n";
    for (size_t v = 0; v < g.n_nodes(); ++v)
        os << "  \"" << detail::dot_escape(g.nodes()[v]) << "\" [community=" << comm[v]
           << "];\n";
    for (const auto& e : g.edges())
        os << "  \"" << detail::dot_escape(g.nodes()[e.u]) << "\" -- \""
           << detail::dot_escape(g.nodes()[e.v])
           << "\" [weight=" << detail::format_weight(e.weight) << "];\n";
    os << "}\n";
}

inline nlohmann::json graph_to_json(const WeightedGraph& g,
                                    const CommunityPartition& partition) {
    auto comm = partition.community_of(g.n_nodes());
    nlohmann::json nodes = nlohmann::json::array();
    for (size_t v = 0; v < g.n_nodes(); ++v)
        nodes.push_back({{"id", v}, {"label", g.nodes()[v]}, {"community", comm[v]}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges())
        edges.push_back({{"source", e.u}, {"target", e.v}, {"weight", e.weight}});
    return {{"nodes", nodes},
            {"edges", edges},
            {"modularity", partition.modularity},
            {"n_communities", partition.communities.size()}};
}

inline void emit_graph_json(std::ostream& os, const WeightedGraph& g,
                            const CommunityPartition& partition) {
    os << graph_to_json(g, partition).dump(2) << '\n';
}

enum class GraphFormat { Dot, Json };

inline void emit_graph(std::ostream& os, const WeightedGraph& g,
                       const CommunityPartition& partition, GraphFormat format) {
    if (format == GraphFormat::Dot) emit_graph_dot(os, g, partition);
    else emit_graph_json(os, g, partition);
}

} // namespace avsig
