#include "ssnp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssnp/rng.hpp"

namespace ssnp {

std::string_view to_string(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    throw DataError("unknown split '" + std::string(s) + "'");
}

std::vector<std::size_t> SubgraphDataset::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].split == s) out.push_back(i);
    }
    return out;
}

void SubgraphDataset::validate() const {
    graph.validate();
    if (features.rows != graph.num_nodes()) throw DataError("feature rows do not match num_nodes");
    for (double v : features.data) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    if (num_classes < 1) throw DataError("num_classes must be positive");
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const std::string where = "subgraph " + std::to_string(i);
        if (inst.node_ids.empty()) throw DataError(where + ": empty node set");
        for (std::size_t j = 0; j < inst.node_ids.size(); ++j) {
            if (inst.node_ids[j] >= graph.num_nodes()) throw DataError(where + ": unknown node id");
            if (j > 0 && inst.node_ids[j - 1] >= inst.node_ids[j]) throw DataError(where + ": node ids not strictly increasing");
        }
        if (inst.labels.empty()) throw DataError(where + ": no labels");
        if (!multi_label && inst.labels.size() != 1) throw DataError(where + ": single-label dataset needs exactly one label");
        for (int c : inst.labels) {
            if (c < 0 || c >= num_classes) throw DataError(where + ": label id out of range");
        }
    }
}

namespace {

std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view tok, const std::string& where) {
    T value{};
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc{} || ptr != end || tok.empty()) {
        throw DataError(where + ": cannot parse '" + std::string(tok) + "'");
    }
    return value;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

Matrix degree_one_hot(const CsrGraph& g, std::size_t max_bucket) {
    Matrix m(g.num_nodes(), max_bucket + 1);
    for (NodeId u = 0; u < g.num_nodes(); ++u) m(u, std::min(g.degree(u), max_bucket)) = 1.0;
    return m;
}

SubgraphDataset load_dataset(const std::filesystem::path& dir, const LoadOptions& opts) {
    SubgraphDataset ds;
    std::size_t num_nodes = 0;
    {
        std::ifstream in(dir / "meta.tsv");
        if (!in) throw DataError("missing meta.tsv in " + dir.string());
        std::string line;
        std::getline(in, line);
        const auto f = split_on(strip_cr(line), '\t');
        if (f.size() != 3) throw DataError("meta.tsv: expected num_nodes, num_classes, multi_label");
        num_nodes = parse_number<std::size_t>(f[0], "meta.tsv");
        ds.num_classes = parse_number<int>(f[1], "meta.tsv");
        const int ml = parse_number<int>(f[2], "meta.tsv");
        if (ml != 0 && ml != 1) throw DataError("meta.tsv: multi_label must be 0 or 1");
        ds.multi_label = ml == 1;
        if (ds.num_classes < 1) throw DataError("meta.tsv: num_classes must be positive");
    }
    ds.graph = load_edge_list(dir / "edges.tsv", num_nodes);

    const auto feat_path = dir / "features.tsv";
    if (std::filesystem::exists(feat_path)) {
        std::ifstream in(feat_path);
        std::vector<std::vector<double>> rows(num_nodes);
        std::vector<bool> seen(num_nodes, false);
        std::size_t dim = 0;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(line);
            if (line.empty()) continue;
            const std::string where = "features.tsv:" + std::to_string(line_no);
            const auto f = split_on(line, '\t');
            if (f.size() < 2) throw DataError(where + ": expected node id and at least one value");
            const auto u = parse_number<std::size_t>(f[0], where);
            if (u >= num_nodes) throw DataError(where + ": node id out of range");
            if (seen[u]) throw DataError(where + ": duplicate node id");
            if (dim == 0) dim = f.size() - 1;
            if (f.size() - 1 != dim) throw DataError(where + ": inconsistent feature dimension");
            seen[u] = true;
            for (std::size_t j = 1; j < f.size(); ++j) rows[u].push_back(parse_number<double>(f[j], where));
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw DataError("features.tsv: every node needs a feature row");
        }
        ds.features = Matrix(num_nodes, dim);
        for (std::size_t u = 0; u < num_nodes; ++u) std::copy(rows[u].begin(), rows[u].end(), ds.features.row(u).begin());
    } else if (opts.degree_features) {
        ds.features = degree_one_hot(ds.graph, opts.max_degree_bucket);
    } else {
        ds.features = Matrix(num_nodes, 1, 1.0);
    }

    std::ifstream in(dir / "subgraphs.tsv");
    if (!in) throw DataError("missing subgraphs.tsv in " + dir.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::string where = "subgraphs.tsv:" + std::to_string(line_no);
        const auto f = split_on(line, '\t');
        if (f.size() != 3) throw DataError(where + ": expected split, node ids, label ids");
        SubgraphInstance inst;
        try {
            inst.split = parse_split(f[0]);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        for (const auto& tok : split_on(f[1], ',')) {
            const auto u = parse_number<std::size_t>(tok, where);
            if (u >= num_nodes) throw DataError(where + ": subgraph references unknown node " + tok);
            inst.node_ids.push_back(static_cast<NodeId>(u));
        }
        for (const auto& tok : split_on(f[2], ',')) {
            const int c = parse_number<int>(tok, where);
            if (c < 0 || c >= ds.num_classes) throw DataError(where + ": label id " + tok + " >= num_classes");
            inst.labels.push_back(c);
        }
        std::sort(inst.node_ids.begin(), inst.node_ids.end());
        inst.node_ids.erase(std::unique(inst.node_ids.begin(), inst.node_ids.end()), inst.node_ids.end());
        std::sort(inst.labels.begin(), inst.labels.end());
        inst.labels.erase(std::unique(inst.labels.begin(), inst.labels.end()), inst.labels.end());
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

void write_dataset(const SubgraphDataset& ds, const std::filesystem::path& dir) {
    const auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw DataError("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("meta.tsv");
        out << ds.graph.num_nodes() << '\t' << ds.num_classes << '\t' << (ds.multi_label ? 1 : 0) << '\n';
    }
    {
        auto out = open("edges.tsv");
        for (const auto& [u, v] : ds.graph.edge_list()) out << u << '\t' << v << '\n';
    }
    {
        auto out = open("features.tsv");
        for (std::size_t u = 0; u < ds.features.rows; ++u) {
            out << u;
            for (double v : ds.features.row(u)) out << '\t' << format_double(v);
            out << '\n';
        }
    }
    {
        auto out = open("subgraphs.tsv");
        for (const auto& inst : ds.instances) {
            out << to_string(inst.split) << '\t';
            for (std::size_t j = 0; j < inst.node_ids.size(); ++j) out << (j ? "," : "") << inst.node_ids[j];
            out << '\t';
            for (std::size_t j = 0; j < inst.labels.size(); ++j) out << (j ? "," : "") << inst.labels[j];
            out << '\n';
        }
    }
}

SubgraphDataset generate_synthetic(std::size_t num_subgraphs, std::uint64_t seed, SyntheticInfo* info) {
    if (num_subgraphs < 20) throw DataError("generate_synthetic needs at least 20 subgraphs");
    RngStream rng({.base_seed = seed, .domain = StreamDomain::kSynthetic});

    SubgraphDataset ds;
    ds.num_classes = 2;
    ds.multi_label = false;
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<int> fringe_counts;
    NodeId next = 0;
    for (std::size_t i = 0; i < num_subgraphs; ++i) {
        const NodeId a = next++;
        const NodeId b = next++;
        const NodeId c = next++;
        edges.insert(edges.end(), {{a, b}, {a, c}, {b, c}});
        const int fringe = 1 + static_cast<int>(rng.uniform_index(6));
        for (int f = 0; f < fringe; ++f) {
            const NodeId x = next++;
            edges.insert(edges.end(), {{a, x}, {b, x}, {c, x}});
        }
        fringe_counts.push_back(fringe);
        ds.instances.push_back({.node_ids = {a, b, c}, .labels = {fringe >= 4 ? 1 : 0}});
    }
    ds.graph = CsrGraph::from_edges(next, edges);
    ds.features = Matrix(next, 1, 1.0);

    std::vector<std::size_t> order(num_subgraphs);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(num_subgraphs)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(num_subgraphs)));
    for (std::size_t r = 0; r < order.size(); ++r) {
        ds.instances[order[r]].split = r < n_train ? Split::kTrain : (r < n_train + n_val ? Split::kVal : Split::kTest);
    }
    if (info) info->fringe_counts = std::move(fringe_counts);
    return ds;
}

}  // namespace ssnp
