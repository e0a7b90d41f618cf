#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssnp/graph.hpp"

namespace ssnp {

/// Maps (iteration, previous colour, sorted neighbour colours) to a colour id.
/// Sharing one dictionary across graphs makes their colourings comparable.
class ColorDictionary {
public:
    int id_for(int iteration, int old_color, const std::vector<int>& neighbor_colors);
    std::size_t size() const { return ids_.size(); }

private:
    std::map<std::tuple<int, int, std::vector<int>>, int> ids_;
};

struct WlColoring {
    std::vector<int> colors;
    int iteration = 0;
};

/// 1-WL refinement from a uniform initial colouring.
WlColoring wl_refine(const CsrGraph& g, int iters, ColorDictionary& dict);
WlColoring wl_refine(const CsrGraph& g, int iters);

struct SignaturePair {
    std::vector<int> subgraph;      // sorted colour multiset over V_S
    std::vector<int> neighborhood;  // sorted colour multiset over the exact h-hop neighbourhood
    std::uint64_t subgraph_hash = 0;
    std::uint64_t neighborhood_hash = 0;

    bool operator==(const SignaturePair&) const = default;
};

SignaturePair signatures(const CsrGraph& g, std::span<const NodeId> subgraph, int h, const WlColoring& coloring);

struct Distinguishability {
    bool plain = false;  // subgraph-only pooling tells the pair apart
    bool snp = false;    // subgraph + neighbourhood pooling tells the pair apart
};

Distinguishability distinguishability(const CsrGraph& g1, std::span<const NodeId> s1, const CsrGraph& g2,
                                      std::span<const NodeId> s2, int h, int iters);

/// Labelling-independent key of a graph with marked nodes: two marked graphs
/// share a key iff they are isomorphic. Intended for graphs of <= 10 nodes.
std::string canonical_key(const CsrGraph& g, std::span<const NodeId> marked = {});

/// Connected graphs on exactly n nodes, one per isomorphism class, in a
/// fixed generation order.
std::vector<CsrGraph> connected_graphs(std::size_t n);

struct MarkedGraph {
    CsrGraph graph;
    std::vector<NodeId> subgraph;
};

struct Counterexample {
    MarkedGraph first;
    MarkedGraph second;
    std::size_t candidates_examined = 0;
};

/// First pair (in enumeration order over connected graphs of increasing size
/// and their marked node sets) that subgraph-only pooling cannot separate at
/// any iteration 1..iters while subgraph+neighbourhood pooling can.
std::optional<Counterexample> find_counterexample(std::size_t max_nodes, int h, int iters);

struct ModelSeparation {
    bool ssnp_separates = false;
    bool plain_separates = false;
    double ssnp_logit_gap = 0.0;
    double plain_logit_gap = 0.0;
};

/// Trains two tiny GCN models (SSNP and plain-pooling ablation, sum pooling,
/// constant features, exact neighbourhood as the view) to label the two
/// subgraphs 0 and 1, and reports which one separates them.
ModelSeparation verify_with_models(const Counterexample& pair, int h, int num_layers, std::uint64_t seed = 0);

}  // namespace ssnp
