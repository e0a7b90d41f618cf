#include "ssnp/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace ssnp {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::kOnline: return "ov";
        case Strategy::kPrecomputed: return "pv";
        case Strategy::kPrecomputedOnline: return "pov";
    }
    return "?";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "ov" || s == "OV") return Strategy::kOnline;
    if (s == "pv" || s == "PV") return Strategy::kPrecomputed;
    if (s == "pov" || s == "POV") return Strategy::kPrecomputedOnline;
    throw std::invalid_argument("unknown strategy '" + std::string(s) + "' (expected ov, pv or pov)");
}

std::vector<NodeId> exact_neighborhood(const CsrGraph& g, std::span<const NodeId> subgraph, int h) {
    if (h <= 0) return {};
    std::vector<int> dist(g.num_nodes(), -1);
    std::vector<NodeId> frontier;
    for (NodeId u : subgraph) {
        if (dist[u] < 0) {
            dist[u] = 0;
            frontier.push_back(u);
        }
    }
    std::vector<NodeId> reached;
    for (int depth = 1; depth <= h && !frontier.empty(); ++depth) {
        std::vector<NodeId> next;
        for (NodeId u : frontier) {
            for (NodeId v : g.neighbors(u)) {
                if (dist[v] < 0) {
                    dist[v] = depth;
                    next.push_back(v);
                    reached.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    std::sort(reached.begin(), reached.end());
    return reached;
}

std::vector<NodeId> sample_walk_nodes(const CsrGraph& g, std::span<const NodeId> subgraph, int h, int k, RngStream& rng) {
    std::vector<NodeId> visited;
    visited.reserve(subgraph.size() * static_cast<std::size_t>(std::max(h, 0) * std::max(k, 0)));
    for (NodeId root : subgraph) {
        for (int w = 0; w < k; ++w) {
            NodeId cur = root;
            for (int step = 0; step < h; ++step) {
                const auto nbrs = g.neighbors(cur);
                if (nbrs.empty()) break;
                cur = nbrs[rng.uniform_index(nbrs.size())];
                visited.push_back(cur);
            }
        }
    }
    std::sort(visited.begin(), visited.end());
    visited.erase(std::unique(visited.begin(), visited.end()), visited.end());
    // Walks may re-enter the subgraph; those nodes are removed afterwards.
    std::vector<NodeId> sorted_sub(subgraph.begin(), subgraph.end());
    std::sort(sorted_sub.begin(), sorted_sub.end());
    std::vector<NodeId> out;
    std::set_difference(visited.begin(), visited.end(), sorted_sub.begin(), sorted_sub.end(), std::back_inserter(out));
    return out;
}

NeighborhoodView sample_view(const CsrGraph& g, const SubgraphInstance& s, std::size_t subgraph_index, int h, int k,
                             RngStream& rng) {
    return {.subgraph_index = subgraph_index, .node_ids = sample_walk_nodes(g, s.node_ids, h, k, rng), .h = h, .k = k};
}

void ViewStoreParams::validate() const {
    if (h < 1) throw std::invalid_argument("h must be >= 1");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (n_eval < 1) throw std::invalid_argument("n_eval must be >= 1");
    if (strategy != Strategy::kOnline && n_v < 1) throw std::invalid_argument("n_v must be >= 1");
    if (strategy == Strategy::kPrecomputedOnline && (n_ve < 1 || n_ve > n_v)) {
        throw std::invalid_argument("n_ve must satisfy 1 <= n_ve <= n_v (got n_ve=" + std::to_string(n_ve) +
                                    ", n_v=" + std::to_string(n_v) + ")");
    }
}

ViewStore::ViewStore(ViewStoreParams params, std::vector<std::vector<NeighborhoodView>> views)
    : params_(params), views_(std::move(views)) {}

std::size_t ViewStore::total_views() const {
    std::size_t n = 0;
    for (const auto& v : views_) n += v.size();
    return n;
}

StreamKey precomputed_view_key(std::uint64_t base_seed, std::size_t subgraph, int view_index) {
    return {.base_seed = base_seed,
            .subgraph = static_cast<std::int64_t>(subgraph),
            .view = view_index,
            .epoch = 0,
            .domain = StreamDomain::kWalk};
}

StreamKey online_view_key(std::uint64_t base_seed, std::size_t subgraph, int view_index, std::int64_t epoch) {
    // Offset keeps online keys apart from precomputed ones at epoch 0.
    return {.base_seed = base_seed,
            .subgraph = static_cast<std::int64_t>(subgraph),
            .view = -1 - view_index,
            .epoch = epoch,
            .domain = StreamDomain::kWalk};
}

ViewStore build_view_store(const SubgraphDataset& ds, const ViewStoreParams& params, unsigned threads) {
    params.validate();
    if (params.strategy == Strategy::kOnline) return ViewStore(params, {});

    const std::size_t n = ds.instances.size();
    std::vector<std::vector<NeighborhoodView>> views(n);
    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            views[i].reserve(static_cast<std::size_t>(params.n_v));
            for (int v = 0; v < params.n_v; ++v) {
                RngStream rng(precomputed_view_key(params.base_seed, i, v));
                views[i].push_back(sample_view(ds.graph, ds.instances[i], i, params.h, params.k, rng));
            }
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t begin = 0; begin < n; begin += chunk) pool.emplace_back(work, begin, std::min(n, begin + chunk));
    }
    return ViewStore(params, std::move(views));
}

std::vector<NeighborhoodView> epoch_views(const ViewStore& store, const SubgraphDataset& ds, std::int64_t epoch) {
    const auto& p = store.params();
    std::vector<NeighborhoodView> out;
    for (std::size_t i : ds.indices_of(Split::kTrain)) {
        switch (p.strategy) {
            case Strategy::kOnline: {
                RngStream rng(online_view_key(p.base_seed, i, 0, epoch));
                out.push_back(sample_view(ds.graph, ds.instances[i], i, p.h, p.k, rng));
                break;
            }
            case Strategy::kPrecomputed: {
                const auto& vs = store.views_of(i);
                out.insert(out.end(), vs.begin(), vs.end());
                break;
            }
            case Strategy::kPrecomputedOnline: {
                const auto& vs = store.views_of(i);
                std::vector<std::size_t> idx(vs.size());
                std::iota(idx.begin(), idx.end(), 0);
                RngStream rng({.base_seed = p.base_seed,
                               .subgraph = static_cast<std::int64_t>(i),
                               .epoch = epoch,
                               .domain = StreamDomain::kPovSubset});
                // Partial Fisher-Yates: the first n_ve slots are a uniform subset.
                const auto take = static_cast<std::size_t>(p.n_ve);
                for (std::size_t j = 0; j < take; ++j) {
                    const auto r = j + static_cast<std::size_t>(rng.uniform_index(idx.size() - j));
                    std::swap(idx[j], idx[r]);
                }
                idx.resize(take);
                std::sort(idx.begin(), idx.end());
                for (std::size_t j : idx) out.push_back(vs[j]);
                break;
            }
        }
    }
    return out;
}

std::vector<NeighborhoodView> eval_views(const ViewStore& store, const SubgraphDataset& ds, std::size_t subgraph_index) {
    const auto& p = store.params();
    if (p.strategy != Strategy::kOnline) return store.views_of(subgraph_index);
    std::vector<NeighborhoodView> out;
    for (int v = 0; v < p.n_eval; ++v) {
        RngStream rng(online_view_key(p.base_seed, subgraph_index, v, -1));
        out.push_back(sample_view(ds.graph, ds.instances[subgraph_index], subgraph_index, p.h, p.k, rng));
    }
    return out;
}

void save_views(const ViewStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write views cache " + path.string());
    for (std::size_t i = 0; i < store.num_subgraphs(); ++i) {
        const auto& vs = store.views_of(i);
        for (std::size_t v = 0; v < vs.size(); ++v) {
            out << i << '\t' << v << '\t';
            for (std::size_t j = 0; j < vs[v].node_ids.size(); ++j) out << (j ? "," : "") << vs[v].node_ids[j];
            out << '\n';
        }
    }
}

ViewStore load_views(const std::filesystem::path& path, const SubgraphDataset& ds, const ViewStoreParams& params) {
    params.validate();
    if (params.strategy == Strategy::kOnline) return ViewStore(params, {});
    std::ifstream in(path);
    if (!in) throw DataError("cannot open views cache " + path.string());
    const std::size_t n = ds.instances.size();
    std::vector<std::vector<NeighborhoodView>> views(n);
    std::string line;
    std::size_t line_no = 0;
    const auto parse = [&](std::string_view tok, const std::string& where) {
        std::uint64_t value = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) throw DataError(where + ": bad integer");
        return value;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw DataError(where + ": expected three tab-separated fields");
        const std::string_view sv(line);
        const auto sub = parse(sv.substr(0, t1), where);
        const auto view = parse(sv.substr(t1 + 1, t2 - t1 - 1), where);
        if (sub >= n) throw DataError(where + ": subgraph index out of range");
        if (view != views[sub].size()) throw DataError(where + ": views must be listed in order");
        NeighborhoodView nv{.subgraph_index = sub, .h = params.h, .k = params.k};
        std::string_view ids = sv.substr(t2 + 1);
        while (!ids.empty()) {
            const auto comma = ids.find(',');
            const auto u = parse(ids.substr(0, comma), where);
            if (u >= ds.graph.num_nodes()) throw DataError(where + ": node id out of range");
            nv.node_ids.push_back(static_cast<NodeId>(u));
            ids = comma == std::string_view::npos ? std::string_view{} : ids.substr(comma + 1);
        }
        if (!std::is_sorted(nv.node_ids.begin(), nv.node_ids.end())) throw DataError(where + ": node ids not sorted");
        const auto& sub_nodes = ds.instances[sub].node_ids;
        for (NodeId u : nv.node_ids) {
            if (std::binary_search(sub_nodes.begin(), sub_nodes.end(), u)) throw DataError(where + ": view overlaps subgraph");
        }
        views[sub].push_back(std::move(nv));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (views[i].size() != static_cast<std::size_t>(params.n_v)) {
            throw DataError("views cache holds " + std::to_string(views[i].size()) + " views for subgraph " +
                            std::to_string(i) + ", expected n_v=" + std::to_string(params.n_v));
        }
    }
    return ViewStore(params, std::move(views));
}

}  // namespace ssnp
