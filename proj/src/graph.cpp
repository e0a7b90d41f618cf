#include "ssnp/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ssnp {

CsrGraph CsrGraph::from_edges(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> edges) {
    std::vector<std::vector<NodeId>> adj(num_nodes);
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes) {
            throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) + ")");
        }
        if (u == v) continue;
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    CsrGraph g;
    g.row_offsets_.assign(num_nodes + 1, 0);
    for (std::size_t u = 0; u < num_nodes; ++u) {
        auto& row = adj[u];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        g.row_offsets_[u + 1] = g.row_offsets_[u] + row.size();
    }
    g.col_indices_.reserve(g.row_offsets_.back());
    for (const auto& row : adj) g.col_indices_.insert(g.col_indices_.end(), row.begin(), row.end());
    return g;
}

CsrGraph CsrGraph::from_csr(std::vector<std::size_t> row_offsets, std::vector<NodeId> col_indices) {
    if (row_offsets.empty()) throw DataError("row_offsets must have num_nodes + 1 entries");
    CsrGraph g;
    g.row_offsets_ = std::move(row_offsets);
    g.col_indices_ = std::move(col_indices);
    g.validate();
    return g;
}

bool CsrGraph::has_edge(NodeId u, NodeId v) const {
    const auto row = neighbors(u);
    return std::binary_search(row.begin(), row.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> CsrGraph::edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < num_nodes(); ++u) {
        for (NodeId v : neighbors(u)) {
            if (u < v) out.emplace_back(u, v);
        }
    }
    return out;
}

void CsrGraph::validate() const {
    const std::size_t n = num_nodes();
    if (row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size()) {
        throw DataError("row_offsets must start at 0 and end at col_indices.size()");
    }
    if (col_indices_.size() % 2 != 0) throw DataError("odd number of directed entries");
    for (std::size_t u = 0; u < n; ++u) {
        if (row_offsets_[u] > row_offsets_[u + 1]) throw DataError("row_offsets must be non-decreasing");
        const auto row = neighbors(static_cast<NodeId>(u));
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] >= n) throw DataError("column index out of range in row " + std::to_string(u));
            if (row[i] == u) throw DataError("self-loop at node " + std::to_string(u));
            if (i > 0 && row[i - 1] >= row[i]) {
                throw DataError("row " + std::to_string(u) + " is unsorted or has duplicates");
            }
        }
    }
    for (std::size_t u = 0; u < n; ++u) {
        for (NodeId v : neighbors(static_cast<NodeId>(u))) {
            if (!has_edge(v, static_cast<NodeId>(u))) {
                throw DataError("asymmetric entry (" + std::to_string(u) + ", " + std::to_string(v) + ")");
            }
        }
    }
}

namespace {

bool parse_id(std::string_view tok, std::uint64_t& out) {
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

CsrGraph load_edge_list(const std::filesystem::path& path, std::size_t num_nodes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list " + path.string());
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<std::string> toks;
        for (std::string t; ss >> t;) toks.push_back(t);
        if (toks.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        if (toks.size() != 2) throw DataError(where + ": expected exactly two node ids");
        std::uint64_t u = 0;
        std::uint64_t v = 0;
        if (!parse_id(toks[0], u) || !parse_id(toks[1], v)) throw DataError(where + ": unparseable node id");
        if (u >= num_nodes || v >= num_nodes) {
            throw DataError(where + ": node id out of range (num_nodes = " + std::to_string(num_nodes) + ")");
        }
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
    return CsrGraph::from_edges(num_nodes, edges);
}

CsrGraph induced_subgraph(const CsrGraph& g, std::span<const NodeId> nodes) {
    std::vector<NodeId> sorted(nodes.begin(), nodes.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (NodeId u : sorted) {
        if (u >= g.num_nodes()) throw DataError("induced_subgraph: node " + std::to_string(u) + " out of range");
    }
    const auto compact = [&](NodeId u) -> std::ptrdiff_t {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), u);
        return (it != sorted.end() && *it == u) ? it - sorted.begin() : -1;
    };
    std::vector<std::size_t> offsets{0};
    std::vector<NodeId> cols;
    for (NodeId u : sorted) {
        for (NodeId v : g.neighbors(u)) {
            const auto c = compact(v);
            if (c >= 0) cols.push_back(static_cast<NodeId>(c));
        }
        offsets.push_back(cols.size());
    }
    // Rows stay sorted because the relabelling is monotone.
    return CsrGraph::from_csr(std::move(offsets), std::move(cols));
}

CsrGraph disjoint_union(const CsrGraph& a, const CsrGraph& b) {
    auto edges = a.edge_list();
    const auto shift = static_cast<NodeId>(a.num_nodes());
    for (const auto& [u, v] : b.edge_list()) edges.emplace_back(u + shift, v + shift);
    return CsrGraph::from_edges(a.num_nodes() + b.num_nodes(), edges);
}

}  // namespace ssnp
