#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ssnp/graph.hpp"
#include "ssnp/params.hpp"
#include "ssnp/sampler.hpp"
#include "ssnp/tensor.hpp"

namespace ssnp {

enum class LayerKind { kMlp, kGcn, kNn };

std::string_view to_string(LayerKind k);
LayerKind parse_layer_kind(std::string_view s);
std::string_view to_string(PoolKind k);
PoolKind parse_pool_kind(std::string_view s);

struct ModelConfig {
    LayerKind layer_kind = LayerKind::kNn;
    int num_layers = 1;
    int hidden_dim = 64;
    PoolKind pool = PoolKind::kSum;  // shared by the subgraph and neighbourhood halves
    double dropout = 0.5;
    int num_classes = 2;
    bool multi_label = false;
    /// Replace the neighbourhood half of the readout by zeros (plain pooling).
    bool ablate_neighborhood = false;
    /// GCN aggregation; the unnormalized sum is the default.
    Aggregation gcn_aggregation = Aggregation::kSum;

    void validate() const;
};

/// One (subgraph, view) pair of a batch.
struct PoolInput {
    std::span<const NodeId> subgraph;
    std::span<const NodeId> neighborhood;
};

/**
 * Transformation layers over the whole base graph, subgraph/neighbourhood
 * readout and a linear classifier.
 *
 * Layer kinds, with h the layer input and σ = ELU:
 *   MLP  h' = σ(h W + b)
 *   GCN  h' = σ((A+I) h W)
 *   NN   h1 = σ(h W1); h2 = dropout(norm((A+I) h1)); h' = [h2, h] W2
 * MLP and GCN apply dropout to the layer output while training.
 */
class SsnpModel {
public:
    SsnpModel(ModelConfig config, std::size_t input_dim, std::uint64_t init_seed);

    const ModelConfig& config() const { return config_; }
    std::size_t input_dim() const { return input_dim_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Width of the pooled representation fed to the classifier.
    std::size_t readout_dim() const;

    /// Node embeddings Z for every base-graph node. `dropout_key` seeds the
    /// per-layer dropout masks when training.
    Tensor transform(Tape& tape, const CsrGraph& g, const Matrix& x, bool training, const StreamKey& dropout_key) const;

    /// Concatenated subgraph and neighbourhood pooling, one row per input.
    Tensor pool(Tape& tape, const Tensor& z, std::span<const PoolInput> batch) const;

    Tensor classify(Tape& tape, const Tensor& q) const;

    /// transform once, then pool and classify each pair of the batch.
    Tensor forward(Tape& tape, const CsrGraph& g, const Matrix& x, std::span<const PoolInput> batch, bool training,
                   const StreamKey& dropout_key) const;

private:
    ModelConfig config_;
    std::size_t input_dim_;
    ParamStore params_;
};

/// Subgraph-and-neighbourhood readout for a single pair. Rejects views that
/// overlap the subgraph.
Tensor ssnp_pool(Tape& tape, const Tensor& z, std::span<const NodeId> subgraph, std::span<const NodeId> view,
                 PoolKind kind);

}  // namespace ssnp
