#include "ssnp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ssnp/sampler.hpp"

namespace ssnp {

double relative_error(double analytic, double numeric, double floor) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

Matrix numeric_gradient(const std::function<double()>& loss, Tensor& param, double step) {
    Matrix out(param.rows(), param.cols());
    auto& values = param.mutable_value().data;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double orig = values[i];
        values[i] = orig + step;
        const double up = loss();
        values[i] = orig - step;
        const double down = loss();
        values[i] = orig;
        out.data[i] = (up - down) / (2.0 * step);
    }
    return out;
}

GradCheckReport grad_check_model(LayerKind kind, int trials, std::uint64_t seed, double step) {
    GradCheckReport report{.kind = kind, .trials = trials};
    constexpr std::size_t kNodes = 12;
    constexpr std::size_t kFeatures = 4;
    constexpr int kClasses = 3;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream rng({.base_seed = seed, .subgraph = trial, .domain = StreamDomain::kTest});
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId u = 0; u < kNodes; ++u) {
            for (NodeId v = u + 1; v < kNodes; ++v) {
                if (rng.uniform01() < 0.3) edges.emplace_back(u, v);
            }
        }
        const auto g = CsrGraph::from_edges(kNodes, edges);
        Matrix x(kNodes, kFeatures);
        for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);

        ModelConfig mc{.layer_kind = kind, .num_layers = 2, .hidden_dim = 5, .pool = PoolKind::kSum, .dropout = 0.0,
                       .num_classes = kClasses};
        SsnpModel model(mc, kFeatures, seed + static_cast<std::uint64_t>(trial));
        // Move every parameter (including biases and norm affine terms) off its default.
        for (std::size_t i = 0; i < model.params().size(); ++i) {
            for (auto& v : model.params().tensor(i).mutable_value().data) v += rng.uniform(-0.5, 0.5);
        }

        std::vector<std::vector<NodeId>> subs;
        std::vector<std::vector<NodeId>> hoods;
        std::vector<int> targets;
        for (int b = 0; b < 4; ++b) {
            std::vector<NodeId> s;
            const auto size = 1 + rng.uniform_index(3);
            while (s.size() < size) {
                const auto u = static_cast<NodeId>(rng.uniform_index(kNodes));
                if (std::find(s.begin(), s.end(), u) == s.end()) s.push_back(u);
            }
            std::sort(s.begin(), s.end());
            hoods.push_back(exact_neighborhood(g, s, 1));
            subs.push_back(std::move(s));
            targets.push_back(static_cast<int>(rng.uniform_index(kClasses)));
        }
        std::vector<PoolInput> batch;
        for (std::size_t b = 0; b < subs.size(); ++b) batch.push_back({subs[b], hoods[b]});

        const auto eval_loss = [&] {
            Tape tape(Tape::Mode::kInference);
            return softmax_cross_entropy(tape, model.forward(tape, g, x, batch, false, {}), targets).item();
        };
        Tape tape;
        const auto loss = softmax_cross_entropy(tape, model.forward(tape, g, x, batch, false, {}), targets);
        model.params().zero_grad();
        backward(tape, loss);

        for (std::size_t i = 0; i < model.params().size(); ++i) {
            auto& p = model.params().tensor(i);
            const Matrix analytic = p.grad();
            const Matrix numeric = numeric_gradient(eval_loss, p, step);
            double worst = 0.0;
            for (std::size_t j = 0; j < analytic.size(); ++j) {
                worst = std::max(worst, relative_error(analytic.data[j], numeric.data[j]));
            }
            const auto& name = model.params().name(i);
            auto it = std::find_if(report.per_param.begin(), report.per_param.end(),
                                   [&](const ParamError& e) { return e.name == name; });
            if (it == report.per_param.end()) {
                report.per_param.push_back({name, worst});
            } else {
                it->max_rel_error = std::max(it->max_rel_error, worst);
            }
            report.max_rel_error = std::max(report.max_rel_error, worst);
        }
    }
    return report;
}

}  // namespace ssnp
