#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ssnp {

using NodeId = std::uint32_t;

/// Raised for malformed or inconsistent input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Immutable simple undirected graph in compressed sparse row form.
 *
 * Every undirected edge {u, v} is stored twice (u -> v and v -> u). Rows are
 * sorted and contain neither duplicates nor self-loops. Safe to share across
 * threads once constructed.
 */
class CsrGraph {
public:
    CsrGraph() : row_offsets_{0} {}

    /// Builds from an arbitrary undirected edge list: mirrors, sorts,
    /// deduplicates and drops self-loops. Throws DataError on out-of-range ids.
    static CsrGraph from_edges(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> edges);

    /// Adopts raw CSR arrays after validating every structural invariant.
    static CsrGraph from_csr(std::vector<std::size_t> row_offsets, std::vector<NodeId> col_indices);

    std::size_t num_nodes() const { return row_offsets_.size() - 1; }
    std::size_t num_edges() const { return col_indices_.size() / 2; }

    std::span<const NodeId> neighbors(NodeId u) const {
        return {col_indices_.data() + row_offsets_[u], col_indices_.data() + row_offsets_[u + 1]};
    }
    std::size_t degree(NodeId u) const { return row_offsets_[u + 1] - row_offsets_[u]; }
    bool has_edge(NodeId u, NodeId v) const;

    const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
    const std::vector<NodeId>& col_indices() const { return col_indices_; }

    /// Undirected edge list with u < v, in CSR order.
    std::vector<std::pair<NodeId, NodeId>> edge_list() const;

    /// Re-checks symmetry, ordering and range invariants; throws DataError.
    void validate() const;

    bool operator==(const CsrGraph&) const = default;

private:
    std::vector<std::size_t> row_offsets_;
    std::vector<NodeId> col_indices_;
};

/// Reads whitespace-separated "u v" pairs, one per line. Blank lines are
/// skipped; lines with a third column (weights) are rejected.
CsrGraph load_edge_list(const std::filesystem::path& path, std::size_t num_nodes);

/// Graph over `nodes` relabelled to 0..|nodes|-1 in sorted id order.
CsrGraph induced_subgraph(const CsrGraph& g, std::span<const NodeId> nodes);

/// Disjoint union; nodes of `b` are shifted by a.num_nodes().
CsrGraph disjoint_union(const CsrGraph& a, const CsrGraph& b);

}  // namespace ssnp
