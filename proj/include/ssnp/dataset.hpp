#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ssnp/graph.hpp"
#include "ssnp/matrix.hpp"

namespace ssnp {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct SubgraphInstance {
    std::vector<NodeId> node_ids;  // strictly increasing, non-empty
    std::vector<int> labels;       // sorted, non-empty
    Split split = Split::kTrain;

    bool operator==(const SubgraphInstance&) const = default;
};

struct SubgraphDataset {
    CsrGraph graph;
    Matrix features;  // num_nodes x d
    std::vector<SubgraphInstance> instances;
    int num_classes = 0;
    bool multi_label = false;

    std::vector<std::size_t> indices_of(Split s) const;

    /// Throws DataError when any dataset invariant is violated.
    void validate() const;

    bool operator==(const SubgraphDataset&) const = default;
};

struct LoadOptions {
    /// When features.tsv is absent, use one-hot min(degree, max_degree_bucket)
    /// instead of the constant-1 column.
    bool degree_features = false;
    std::size_t max_degree_bucket = 32;
};

/// Reads meta.tsv, edges.tsv, subgraphs.tsv and optional features.tsv.
SubgraphDataset load_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {});

/// Writes the four dataset files into `dir`, which must already exist.
void write_dataset(const SubgraphDataset& ds, const std::filesystem::path& dir);

/// One-hot degree features, one column per degree in [0, max_bucket].
Matrix degree_one_hot(const CsrGraph& g, std::size_t max_bucket);

struct SyntheticInfo {
    std::vector<int> fringe_counts;  // b per instance
};

/**
 * Planted-clique benchmark whose labels depend only on external topology.
 *
 * Each instance is a private triangle. A random number b in {1..6} of private
 * fringe nodes is attached, each fringe node adjacent to all three triangle
 * nodes. Label is 1 when b >= 4. Features are a constant column, so the
 * triangle interior carries no label information. Splits are 80/10/10 after
 * a seeded shuffle. Requires num_subgraphs >= 20.
 */
SubgraphDataset generate_synthetic(std::size_t num_subgraphs, std::uint64_t seed, SyntheticInfo* info = nullptr);

}  // namespace ssnp
