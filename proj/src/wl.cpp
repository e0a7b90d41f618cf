#include "ssnp/wl.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ssnp/model.hpp"
#include "ssnp/optim.hpp"
#include "ssnp/rng.hpp"
#include "ssnp/sampler.hpp"

namespace ssnp {

int ColorDictionary::id_for(int iteration, int old_color, const std::vector<int>& neighbor_colors) {
    auto [it, inserted] = ids_.try_emplace({iteration, old_color, neighbor_colors}, static_cast<int>(ids_.size()) + 1);
    return it->second;
}

WlColoring wl_refine(const CsrGraph& g, int iters, ColorDictionary& dict) {
    WlColoring c{.colors = std::vector<int>(g.num_nodes(), 0), .iteration = 0};
    std::vector<int> nb;
    for (int t = 1; t <= iters; ++t) {
        std::vector<int> next(g.num_nodes());
        for (NodeId u = 0; u < g.num_nodes(); ++u) {
            nb.clear();
            for (NodeId v : g.neighbors(u)) nb.push_back(c.colors[v]);
            std::sort(nb.begin(), nb.end());
            next[u] = dict.id_for(t, c.colors[u], nb);
        }
        c.colors = std::move(next);
        c.iteration = t;
    }
    return c;
}

WlColoring wl_refine(const CsrGraph& g, int iters) {
    ColorDictionary dict;
    return wl_refine(g, iters, dict);
}

namespace {

std::uint64_t hash_multiset(const std::vector<int>& sorted) {
    std::uint64_t h = mix64(sorted.size());
    for (int c : sorted) h = mix64(h ^ static_cast<std::uint64_t>(c));
    return h;
}

}  // namespace

SignaturePair signatures(const CsrGraph& g, std::span<const NodeId> subgraph, int h, const WlColoring& coloring) {
    SignaturePair sp;
    for (NodeId u : subgraph) sp.subgraph.push_back(coloring.colors.at(u));
    for (NodeId u : exact_neighborhood(g, subgraph, h)) sp.neighborhood.push_back(coloring.colors.at(u));
    std::sort(sp.subgraph.begin(), sp.subgraph.end());
    std::sort(sp.neighborhood.begin(), sp.neighborhood.end());
    sp.subgraph_hash = hash_multiset(sp.subgraph);
    sp.neighborhood_hash = hash_multiset(sp.neighborhood);
    return sp;
}

Distinguishability distinguishability(const CsrGraph& g1, std::span<const NodeId> s1, const CsrGraph& g2,
                                      std::span<const NodeId> s2, int h, int iters) {
    ColorDictionary dict;
    const auto a = signatures(g1, s1, h, wl_refine(g1, iters, dict));
    const auto b = signatures(g2, s2, h, wl_refine(g2, iters, dict));
    return {.plain = a.subgraph != b.subgraph, .snp = a != b};
}

namespace {

// Refinement whose colour ids are ranks of sorted signatures, so they do not
// depend on node numbering. Runs to the stable partition.
std::vector<int> invariant_colors(const CsrGraph& g, std::vector<int> colors) {
    const std::size_t n = g.num_nodes();
    std::size_t classes = std::set<int>(colors.begin(), colors.end()).size();
    while (true) {
        std::vector<std::pair<int, std::vector<int>>> sig(n);
        for (NodeId u = 0; u < n; ++u) {
            sig[u].first = colors[u];
            for (NodeId v : g.neighbors(u)) sig[u].second.push_back(colors[v]);
            std::sort(sig[u].second.begin(), sig[u].second.end());
        }
        auto uniq = sig;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        std::vector<int> next(n);
        for (NodeId u = 0; u < n; ++u) {
            next[u] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), sig[u]) - uniq.begin());
        }
        colors = std::move(next);
        if (uniq.size() == classes) return colors;
        classes = uniq.size();
    }
}

}  // namespace

std::string canonical_key(const CsrGraph& g, std::span<const NodeId> marked) {
    const std::size_t n = g.num_nodes();
    std::vector<int> init(n, 0);
    for (NodeId u : marked) init.at(u) = 1;
    const auto colors = invariant_colors(g, init);

    // Nodes ordered by colour; only permutations inside a colour class are tried.
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return colors[a] < colors[b]; });
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && colors[order[j]] == colors[order[i]]) ++j;
        cells.emplace_back(i, j);
        i = j;
    }

    std::string header = std::to_string(n) + ":";
    for (NodeId u : order) header += static_cast<char>('a' + colors[u] % 26) + std::to_string(colors[u]) + (init[u] ? "*" : ".");
    std::string best;
    std::vector<NodeId> perm = order;
    const auto encode = [&] {
        std::string bits;
        bits.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) bits.push_back(g.has_edge(perm[i], perm[j]) ? '1' : '0');
        }
        return bits;
    };
    // Odometer over the per-cell permutations.
    for (auto& [b, e] : cells) std::sort(perm.begin() + static_cast<std::ptrdiff_t>(b), perm.begin() + static_cast<std::ptrdiff_t>(e));
    while (true) {
        auto bits = encode();
        if (best.empty() || bits < best) best = std::move(bits);
        std::size_t c = 0;
        for (; c < cells.size(); ++c) {
            auto [b, e] = cells[c];
            if (std::next_permutation(perm.begin() + static_cast<std::ptrdiff_t>(b), perm.begin() + static_cast<std::ptrdiff_t>(e))) break;
        }
        if (c == cells.size()) break;
    }
    return header + "|" + best;
}

std::vector<CsrGraph> connected_graphs(std::size_t n) {
    if (n == 0) return {};
    std::vector<CsrGraph> level{CsrGraph::from_edges(1, {})};
    for (std::size_t size = 2; size <= n; ++size) {
        // Every connected graph has a non-cut vertex, so extending each
        // connected graph on size-1 nodes by one vertex reaches them all.
        std::vector<CsrGraph> next;
        std::unordered_set<std::string> seen;
        const auto prev = static_cast<NodeId>(size - 1);
        for (const auto& g : level) {
            const auto base = g.edge_list();
            for (std::uint32_t mask = 1; mask < (1u << prev); ++mask) {
                auto edges = base;
                for (NodeId u = 0; u < prev; ++u) {
                    if (mask & (1u << u)) edges.emplace_back(u, prev);
                }
                auto cand = CsrGraph::from_edges(size, edges);
                if (seen.insert(canonical_key(cand)).second) next.push_back(std::move(cand));
            }
        }
        level = std::move(next);
    }
    return level;
}

std::optional<Counterexample> find_counterexample(std::size_t max_nodes, int h, int iters) {
    if (iters < 1) return std::nullopt;
    struct Candidate {
        MarkedGraph marked;
        std::vector<std::vector<int>> plain;  // per iteration 1..iters
        std::vector<SignaturePair> full;
    };
    ColorDictionary dict;  // one universe for every candidate
    std::vector<Candidate> candidates;
    std::map<std::vector<std::vector<int>>, std::vector<std::size_t>> by_plain;
    std::size_t examined = 0;

    for (std::size_t n = 1; n <= max_nodes; ++n) {
        for (const auto& g : connected_graphs(n)) {
            std::vector<WlColoring> colorings;
            for (int t = 1; t <= iters; ++t) colorings.push_back(wl_refine(g, t, dict));
            std::unordered_set<std::string> seen;
            for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
                std::vector<NodeId> s;
                for (NodeId u = 0; u < n; ++u) {
                    if (mask & (1u << u)) s.push_back(u);
                }
                if (!seen.insert(canonical_key(g, s)).second) continue;
                ++examined;
                Candidate c{.marked = {g, s}};
                for (const auto& col : colorings) {
                    auto sp = signatures(g, s, h, col);
                    c.plain.push_back(sp.subgraph);
                    c.full.push_back(std::move(sp));
                }
                auto& bucket = by_plain[c.plain];
                for (std::size_t prev : bucket) {
                    const auto& p = candidates[prev];
                    bool snp_differs = false;
                    for (int t = 0; t < iters; ++t) snp_differs = snp_differs || p.full[t] != c.full[t];
                    if (snp_differs) {
                        return Counterexample{.first = p.marked, .second = c.marked, .candidates_examined = examined};
                    }
                }
                bucket.push_back(candidates.size());
                candidates.push_back(std::move(c));
            }
        }
    }
    return std::nullopt;
}

ModelSeparation verify_with_models(const Counterexample& pair, int h, int num_layers, std::uint64_t seed) {
    const auto& g1 = pair.first.graph;
    const auto g = disjoint_union(g1, pair.second.graph);
    const auto shift = static_cast<NodeId>(g1.num_nodes());
    std::vector<NodeId> s1 = pair.first.subgraph;
    std::vector<NodeId> s2;
    for (NodeId u : pair.second.subgraph) s2.push_back(u + shift);
    const auto n1 = exact_neighborhood(g, s1, h);
    const auto n2 = exact_neighborhood(g, s2, h);
    const Matrix x(g.num_nodes(), 1, 1.0);
    const std::vector<PoolInput> batch{{s1, n1}, {s2, n2}};
    const std::vector<int> targets{0, 1};

    const auto run = [&](bool ablate, double& gap) {
        ModelConfig mc{.layer_kind = LayerKind::kGcn,
                       .num_layers = num_layers,
                       .hidden_dim = 8,
                       .pool = PoolKind::kSum,
                       .dropout = 0.0,
                       .num_classes = 2,
                       .ablate_neighborhood = ablate};
        SsnpModel model(mc, 1, seed);
        Adam adam;
        for (int step = 0; step < 300; ++step) {
            Tape tape;
            const auto loss = softmax_cross_entropy(tape, model.forward(tape, g, x, batch, false, {}), targets);
            model.params().zero_grad();
            backward(tape, loss);
            adam.step(model.params(), 0.01);
        }
        Tape tape(Tape::Mode::kInference);
        const auto logits = model.forward(tape, g, x, batch, false, {}).value();
        gap = 0.0;
        for (std::size_t c = 0; c < logits.cols; ++c) gap = std::max(gap, std::abs(logits(0, c) - logits(1, c)));
        const bool correct = logits(0, 0) > logits(0, 1) && logits(1, 1) > logits(1, 0);
        // Reassociated float sums can differ in the last bits; that is not separation.
        return correct && gap > 1e-6;
    };
    ModelSeparation out;
    out.ssnp_separates = run(false, out.ssnp_logit_gap);
    out.plain_separates = run(true, out.plain_logit_gap);
    return out;
}

}  // namespace ssnp
