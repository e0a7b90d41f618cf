#include "ssnp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ssnp {

std::string_view to_string(LayerKind k) {
    switch (k) {
        case LayerKind::kMlp: return "mlp";
        case LayerKind::kGcn: return "gcn";
        case LayerKind::kNn: return "nn";
    }
    return "?";
}

LayerKind parse_layer_kind(std::string_view s) {
    if (s == "mlp") return LayerKind::kMlp;
    if (s == "gcn") return LayerKind::kGcn;
    if (s == "nn") return LayerKind::kNn;
    throw std::invalid_argument("unknown layer kind '" + std::string(s) + "' (expected mlp, gcn or nn)");
}

std::string_view to_string(PoolKind k) {
    switch (k) {
        case PoolKind::kSum: return "sum";
        case PoolKind::kMean: return "mean";
        case PoolKind::kMax: return "max";
        case PoolKind::kSize: return "size";
    }
    return "?";
}

PoolKind parse_pool_kind(std::string_view s) {
    if (s == "sum") return PoolKind::kSum;
    if (s == "mean") return PoolKind::kMean;
    if (s == "max") return PoolKind::kMax;
    if (s == "size") return PoolKind::kSize;
    throw std::invalid_argument("unknown pool kind '" + std::string(s) + "' (expected sum, mean, max or size)");
}

void ModelConfig::validate() const {
    if (num_layers < 1 || num_layers > 3) throw std::invalid_argument("num_layers must be 1, 2 or 3");
    if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");
    if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
}

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, RngStream rng) {
    Matrix m(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : m.data) v = rng.uniform(-bound, bound);
    return m;
}

std::string layer_name(int l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

bool overlaps(std::span<const NodeId> sa, std::span<const NodeId> sb) {
    std::vector<NodeId> a(sa.begin(), sa.end());
    std::vector<NodeId> b(sb.begin(), sb.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        a[i] < b[j] ? ++i : ++j;
    }
    return false;
}

}  // namespace

SsnpModel::SsnpModel(ModelConfig config, std::size_t input_dim, std::uint64_t init_seed)
    : config_(config), input_dim_(input_dim) {
    config_.validate();
    if (input_dim == 0) throw std::invalid_argument("input dimension must be positive");
    std::int64_t stream = 0;
    const auto next_rng = [&] {
        return RngStream({.base_seed = init_seed, .subgraph = stream++, .domain = StreamDomain::kInit});
    };
    const auto hidden = static_cast<std::size_t>(config_.hidden_dim);
    std::size_t in = input_dim;
    for (int l = 0; l < config_.num_layers; ++l) {
        switch (config_.layer_kind) {
            case LayerKind::kMlp:
                params_.add(layer_name(l, "weight"), glorot(in, hidden, next_rng()));
                params_.add(layer_name(l, "bias"), Matrix(1, hidden));
                break;
            case LayerKind::kGcn:
                params_.add(layer_name(l, "weight"), glorot(in, hidden, next_rng()));
                break;
            case LayerKind::kNn:
                params_.add(layer_name(l, "w1"), glorot(in, hidden, next_rng()));
                params_.add(layer_name(l, "norm.gamma"), Matrix(1, hidden, 1.0));
                params_.add(layer_name(l, "norm.beta"), Matrix(1, hidden, 0.0));
                params_.add(layer_name(l, "norm.alpha"), Matrix(1, hidden, 1.0));
                params_.add(layer_name(l, "w2"), glorot(hidden + in, hidden, next_rng()));
                break;
        }
        in = hidden;
    }
    const auto classes = static_cast<std::size_t>(config_.num_classes);
    params_.add("classifier.weight", glorot(readout_dim(), classes, next_rng()));
    params_.add("classifier.bias", Matrix(1, classes));
}

std::size_t SsnpModel::readout_dim() const {
    return config_.pool == PoolKind::kSize ? 2 : 2 * static_cast<std::size_t>(config_.hidden_dim);
}

Tensor SsnpModel::transform(Tape& tape, const CsrGraph& g, const Matrix& x, bool training,
                            const StreamKey& dropout_key) const {
    if (x.rows != g.num_nodes()) throw ShapeError("feature rows do not match the base graph");
    if (x.cols != input_dim_) {
        throw ShapeError("feature dimension " + std::to_string(x.cols) + " does not match model input " +
                         std::to_string(input_dim_));
    }
    Tensor h = Tensor::constant(x);
    for (int l = 0; l < config_.num_layers; ++l) {
        StreamKey key = dropout_key;
        key.view = l;
        key.domain = StreamDomain::kDropout;
        RngStream rng(key);
        switch (config_.layer_kind) {
            case LayerKind::kMlp: {
                auto a = add_bias(tape, matmul(tape, h, params_.at(layer_name(l, "weight"))), params_.at(layer_name(l, "bias")));
                h = dropout(tape, elu(tape, a), config_.dropout, training, rng);
                break;
            }
            case LayerKind::kGcn: {
                // (A+I)·h·W computed as (A+I)·(h·W); identical by associativity, cheaper when hidden < input.
                auto hw = matmul(tape, h, params_.at(layer_name(l, "weight")));
                h = dropout(tape, elu(tape, spmm_self(tape, g, hw, config_.gcn_aggregation)), config_.dropout, training, rng);
                break;
            }
            case LayerKind::kNn: {
                auto h1 = elu(tape, matmul(tape, h, params_.at(layer_name(l, "w1"))));
                auto agg = spmm_self(tape, g, h1);
                auto normed = graph_norm(tape, agg, params_.at(layer_name(l, "norm.gamma")),
                                         params_.at(layer_name(l, "norm.beta")), params_.at(layer_name(l, "norm.alpha")));
                auto h2 = dropout(tape, normed, config_.dropout, training, rng);
                h = matmul(tape, concat_cols(tape, h2, h), params_.at(layer_name(l, "w2")));
                break;
            }
        }
    }
    return h;
}

Tensor SsnpModel::pool(Tape& tape, const Tensor& z, std::span<const PoolInput> batch) const {
    std::vector<std::vector<NodeId>> subs;
    std::vector<std::vector<NodeId>> hoods;
    subs.reserve(batch.size());
    hoods.reserve(batch.size());
    for (const auto& item : batch) {
        if (overlaps(item.subgraph, item.neighborhood)) throw std::invalid_argument("neighbourhood view overlaps its subgraph");
        subs.emplace_back(item.subgraph.begin(), item.subgraph.end());
        hoods.emplace_back(item.neighborhood.begin(), item.neighborhood.end());
    }
    auto ps = segment_pool(tape, z, subs, config_.pool);
    if (config_.ablate_neighborhood) {
        return concat_cols(tape, ps, Tensor::constant(Matrix(ps.rows(), ps.cols())));
    }
    return concat_cols(tape, ps, segment_pool(tape, z, hoods, config_.pool));
}

Tensor SsnpModel::classify(Tape& tape, const Tensor& q) const {
    if (q.cols() != readout_dim()) {
        throw ShapeError("readout width " + std::to_string(q.cols()) + " does not match classifier input " +
                         std::to_string(readout_dim()));
    }
    return add_bias(tape, matmul(tape, q, params_.at("classifier.weight")), params_.at("classifier.bias"));
}

Tensor SsnpModel::forward(Tape& tape, const CsrGraph& g, const Matrix& x, std::span<const PoolInput> batch, bool training,
                          const StreamKey& dropout_key) const {
    auto z = transform(tape, g, x, training, dropout_key);
    return classify(tape, pool(tape, z, batch));
}

Tensor ssnp_pool(Tape& tape, const Tensor& z, std::span<const NodeId> subgraph, std::span<const NodeId> view,
                 PoolKind kind) {
    if (overlaps(subgraph, view)) throw std::invalid_argument("neighbourhood view overlaps its subgraph");
    const std::vector<std::vector<NodeId>> s{{subgraph.begin(), subgraph.end()}};
    const std::vector<std::vector<NodeId>> n{{view.begin(), view.end()}};
    return concat_cols(tape, segment_pool(tape, z, s, kind), segment_pool(tape, z, n, kind));
}

}  // namespace ssnp
