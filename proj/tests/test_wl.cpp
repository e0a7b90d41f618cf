#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "ssnp/sampler.hpp"
#include "ssnp/wl.hpp"

using namespace ssnp;

namespace {

CsrGraph relabel(const CsrGraph& g, const std::vector<NodeId>& perm) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& [u, v] : g.edge_list()) edges.emplace_back(perm[u], perm[v]);
    return CsrGraph::from_edges(g.num_nodes(), edges);
}

std::vector<NodeId> relabel_set(const std::vector<NodeId>& s, const std::vector<NodeId>& perm) {
    std::vector<NodeId> out;
    for (NodeId u : s) out.push_back(perm[u]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("wl_refine") {
    SUBCASE("regular graphs stay monochrome") {
        for (int iters : {0, 1, 3}) {
            const auto c = wl_refine(ssnp::testing::cycle(7), iters).colors;
            CHECK(std::set<int>(c.begin(), c.end()).size() == 1);
        }
    }
    SUBCASE("path endpoints separate from the middle") {
        const auto c = wl_refine(ssnp::testing::path_graph(3), 1).colors;
        CHECK(c[0] == c[2]);
        CHECK(c[0] != c[1]);
    }
    SUBCASE("zero iterations is uniform") {
        const auto c = wl_refine(ssnp::testing::star(4), 0);
        CHECK(c.iteration == 0);
        CHECK(std::set<int>(c.colors.begin(), c.colors.end()).size() == 1);
    }
    SUBCASE("a shared dictionary makes colours comparable across graphs") {
        ColorDictionary dict;
        const auto a = wl_refine(ssnp::testing::path_graph(4), 2, dict);
        const auto b = wl_refine(ssnp::testing::star(3), 2, dict);
        CHECK(a.colors[0] != b.colors[1]);
        CHECK(a.colors[0] == a.colors[3]);
    }
}

TEST_CASE("signatures") {
    const auto g = ssnp::testing::path_graph(5);
    const auto col = wl_refine(g, 2);
    const std::vector<NodeId> s{1, 2};
    CHECK(signatures(g, s, 1, col) == signatures(g, s, 1, col));
    const std::vector<NodeId> all{0, 1, 2, 3, 4};
    CHECK(signatures(g, all, 2, col).neighborhood.empty());

    const std::vector<NodeId> perm{3, 0, 4, 1, 2};
    const auto g2 = relabel(g, perm);
    const auto s2 = relabel_set(s, perm);
    ColorDictionary dict;
    const auto c1 = wl_refine(g, 2, dict);
    const auto c2 = wl_refine(g2, 2, dict);
    CHECK(signatures(g, s, 1, c1) == signatures(g2, s2, 1, c2));
}

TEST_CASE("distinguishability") {
    const auto g = ssnp::testing::cycle(6);
    const std::vector<NodeId> s1{0, 1};
    const std::vector<NodeId> s2{3, 4};
    const auto same = distinguishability(g, s1, g, s2, 1, 2);
    CHECK_FALSE(same.plain);
    CHECK_FALSE(same.snp);

    const auto path = ssnp::testing::path_graph(4);
    const std::vector<NodeId> ends{0, 3};
    const std::vector<NodeId> mid{1, 2};
    const auto d = distinguishability(path, ends, path, mid, 1, 2);
    CHECK(d.plain);
    CHECK(d.snp);
}

TEST_CASE("canonical_key is isomorphism invariant and sees the marking") {
    const auto g = ssnp::testing::path_graph(5);
    const std::vector<NodeId> perm{2, 4, 0, 3, 1};
    const std::vector<NodeId> s{0, 1};
    CHECK(canonical_key(g) == canonical_key(relabel(g, perm)));
    CHECK(canonical_key(g, s) == canonical_key(relabel(g, perm), relabel_set(s, perm)));
    const std::vector<NodeId> other{1, 2};
    CHECK(canonical_key(g, s) != canonical_key(g, other));
    CHECK(canonical_key(ssnp::testing::cycle(6)) != canonical_key(disjoint_union(ssnp::testing::cycle(3), ssnp::testing::cycle(3))));
}

TEST_CASE("connected graph enumeration matches known counts") {
    // Connected unlabelled graphs on n nodes: 1, 1, 2, 6, 21, 112.
    const std::vector<std::size_t> expected{1, 1, 2, 6, 21, 112};
    for (std::size_t n = 1; n <= 6; ++n) {
        CAPTURE(n);
        CHECK(connected_graphs(n).size() == expected[n - 1]);
    }
}

TEST_CASE("find_counterexample returns a pair only neighbourhood pooling separates") {
    const auto found = find_counterexample(8, 1, 2);
    REQUIRE(found.has_value());
    const auto& a = found->first;
    const auto& b = found->second;
    const auto d = distinguishability(a.graph, a.subgraph, b.graph, b.subgraph, 1, 2);
    CHECK_FALSE(d.plain);
    CHECK(d.snp);

    ColorDictionary dict;
    const auto ca = wl_refine(a.graph, 2, dict);
    const auto cb = wl_refine(b.graph, 2, dict);
    CHECK(signatures(a.graph, a.subgraph, 1, ca).subgraph == signatures(b.graph, b.subgraph, 1, cb).subgraph);
    CHECK(canonical_key(a.graph, a.subgraph) != canonical_key(b.graph, b.subgraph));
    CHECK(a.graph.num_nodes() <= 8);
}

TEST_CASE("trained tiny models separate the pair only with neighbourhood pooling") {
    const auto found = find_counterexample(8, 1, 2);
    REQUIRE(found.has_value());
    const auto sep = verify_with_models(*found, 1, 2, 0);
    CHECK(sep.ssnp_separates);
    CHECK_FALSE(sep.plain_separates);
    CHECK(sep.plain_logit_gap < 1e-9);
}
