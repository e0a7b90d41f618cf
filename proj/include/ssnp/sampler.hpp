#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "ssnp/dataset.hpp"
#include "ssnp/graph.hpp"
#include "ssnp/rng.hpp"

namespace ssnp {

/// Sorted node set outside V_S reached by rooted random walks from V_S.
struct NeighborhoodView {
    std::size_t subgraph_index = 0;
    std::vector<NodeId> node_ids;
    int h = 0;
    int k = 0;

    bool operator==(const NeighborhoodView&) const = default;
};

enum class Strategy { kOnline, kPrecomputed, kPrecomputedOnline };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Nodes outside `subgraph` whose distance to it is at most h (multi-source BFS).
std::vector<NodeId> exact_neighborhood(const CsrGraph& g, std::span<const NodeId> subgraph, int h);

/// k simple random walks of h steps from every subgraph node; returns the
/// visited set minus the subgraph. Walks from isolated nodes stop at once.
std::vector<NodeId> sample_walk_nodes(const CsrGraph& g, std::span<const NodeId> subgraph, int h, int k, RngStream& rng);

NeighborhoodView sample_view(const CsrGraph& g, const SubgraphInstance& s, std::size_t subgraph_index, int h, int k,
                             RngStream& rng);

struct ViewStoreParams {
    Strategy strategy = Strategy::kPrecomputedOnline;
    int n_v = 20;
    int n_ve = 5;
    int h = 1;
    int k = 1;
    std::uint64_t base_seed = 0;
    int n_eval = 5;  // views drawn at inference under the online strategy

    /// Throws std::invalid_argument for inconsistent combinations.
    void validate() const;
    bool operator==(const ViewStoreParams&) const = default;
};

/// Precomputed neighbourhood views. Immutable after construction.
class ViewStore {
public:
    ViewStore() = default;
    ViewStore(ViewStoreParams params, std::vector<std::vector<NeighborhoodView>> views);

    const ViewStoreParams& params() const { return params_; }
    std::size_t total_views() const;
    const std::vector<NeighborhoodView>& views_of(std::size_t subgraph) const { return views_.at(subgraph); }
    std::size_t num_subgraphs() const { return views_.size(); }

    bool operator==(const ViewStore&) const = default;

private:
    ViewStoreParams params_;
    std::vector<std::vector<NeighborhoodView>> views_;
};

/// Stream key of precomputed view `view_index` for one subgraph.
StreamKey precomputed_view_key(std::uint64_t base_seed, std::size_t subgraph, int view_index);
/// Stream key of the online view drawn for one subgraph in `epoch` (-1 = evaluation).
StreamKey online_view_key(std::uint64_t base_seed, std::size_t subgraph, int view_index, std::int64_t epoch);

/// Samples n_v views per subgraph for PV/POV; an empty store for OV.
/// The result does not depend on `threads`.
ViewStore build_view_store(const SubgraphDataset& ds, const ViewStoreParams& params, unsigned threads = 1);

/// Training (subgraph, view) pairs for one epoch, grouped by subgraph in
/// ascending index order.
std::vector<NeighborhoodView> epoch_views(const ViewStore& store, const SubgraphDataset& ds, std::int64_t epoch);

/// Views used to score one subgraph at inference time.
std::vector<NeighborhoodView> eval_views(const ViewStore& store, const SubgraphDataset& ds, std::size_t subgraph_index);

/// TSV cache: "subgraph_index<TAB>view_index<TAB>comma-separated node ids".
void save_views(const ViewStore& store, const std::filesystem::path& path);
ViewStore load_views(const std::filesystem::path& path, const SubgraphDataset& ds, const ViewStoreParams& params);

}  // namespace ssnp
