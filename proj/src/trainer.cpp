#include "ssnp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace ssnp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Matrix> snapshot(const ParamStore& params) {
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) out.push_back(params.tensor(i).value());
    return out;
}

void restore(ParamStore& params, const std::vector<Matrix>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params.tensor(i).mutable_value() = values[i];
}

Matrix multi_hot(const SubgraphDataset& ds, std::span<const std::size_t> instances) {
    Matrix t(instances.size(), static_cast<std::size_t>(ds.num_classes));
    for (std::size_t r = 0; r < instances.size(); ++r) {
        for (int c : ds.instances[instances[r]].labels) t(r, static_cast<std::size_t>(c)) = 1.0;
    }
    return t;
}

}  // namespace

std::string MetricsRecord::to_json(bool with_timing) const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["train_loss"] = train_loss;
    j["val_loss"] = val_loss;
    j["val_micro_f1"] = val_micro_f1;
    j["test_micro_f1"] = test_micro_f1;
    j["lr"] = lr;
    j["train_instances"] = train_instances;
    if (with_timing) {
        j["sample_seconds"] = sample_seconds;
        j["train_seconds"] = train_seconds;
        j["eval_seconds"] = eval_seconds;
    }
    return j.dump();
}

SsnpModel make_model(const SubgraphDataset& ds, const TrainConfig& config) {
    ModelConfig mc = config.model;
    mc.num_classes = ds.num_classes;
    mc.multi_label = ds.multi_label;
    return SsnpModel(mc, ds.features.cols, config.seed);
}

EvalResult evaluate(const SsnpModel& model, const SubgraphDataset& ds, const ViewStore& store, Split split) {
    const auto& mc = model.config();
    if (mc.num_classes != ds.num_classes || mc.multi_label != ds.multi_label) {
        throw std::invalid_argument("checkpoint label space does not match the dataset");
    }
    EvalResult res;
    res.instances = ds.indices_of(split);
    const std::size_t classes = static_cast<std::size_t>(ds.num_classes);
    res.probs = Matrix(res.instances.size(), classes);
    if (res.instances.empty()) return res;

    Tape tape(Tape::Mode::kInference);
    const auto z = model.transform(tape, ds.graph, ds.features, false, {});
    std::vector<std::vector<NeighborhoodView>> views;
    std::vector<PoolInput> batch;
    std::vector<std::size_t> owner;
    views.reserve(res.instances.size());
    for (std::size_t r = 0; r < res.instances.size(); ++r) views.push_back(eval_views(store, ds, res.instances[r]));
    for (std::size_t r = 0; r < res.instances.size(); ++r) {
        for (const auto& v : views[r]) {
            batch.push_back({ds.instances[res.instances[r]].node_ids, v.node_ids});
            owner.push_back(r);
        }
    }
    const auto logits = model.classify(tape, model.pool(tape, z, batch));
    const Matrix p = ds.multi_label ? sigmoid(logits.value()) : softmax_rows(logits.value());
    std::vector<double> counts(res.instances.size(), 0.0);
    for (std::size_t i = 0; i < owner.size(); ++i) {
        counts[owner[i]] += 1.0;
        for (std::size_t c = 0; c < classes; ++c) res.probs(owner[i], c) += p(i, c);
    }
    for (std::size_t r = 0; r < res.instances.size(); ++r) {
        for (std::size_t c = 0; c < classes; ++c) res.probs(r, c) /= counts[r];
    }

    constexpr double kFloor = 1e-12;
    double loss = 0.0;
    std::vector<LabelSet> truth;
    for (std::size_t r = 0; r < res.instances.size(); ++r) {
        const auto& labels = ds.instances[res.instances[r]].labels;
        truth.push_back(labels);
        if (ds.multi_label) {
            for (std::size_t c = 0; c < classes; ++c) {
                const bool pos = std::find(labels.begin(), labels.end(), static_cast<int>(c)) != labels.end();
                const double q = std::clamp(res.probs(r, c), kFloor, 1.0 - kFloor);
                loss -= pos ? std::log(q) : std::log1p(-q);
            }
        } else {
            loss -= std::log(std::max(res.probs(r, static_cast<std::size_t>(labels.front())), kFloor));
        }
    }
    loss /= static_cast<double>(res.instances.size() * (ds.multi_label ? classes : 1));
    res.loss = loss;
    res.micro_f1 = micro_f1(predict_labels(res.probs, ds.multi_label), truth);
    return res;
}

TrainResult train(const SubgraphDataset& ds, const TrainConfig& config, const ViewStore* store, const EpochCallback& on_epoch) {
    config.validate();
    if (ds.indices_of(Split::kTrain).empty() || ds.indices_of(Split::kVal).empty()) {
        throw std::invalid_argument("training needs non-empty train and val splits");
    }
    const auto vp = config.view_params();
    const auto t_pre = Clock::now();
    ViewStore built;
    if (store == nullptr) {
        built = build_view_store(ds, vp, config.threads);
        store = &built;
    }
    const double preprocess_seconds = seconds_since(t_pre);

    SsnpModel model = make_model(ds, config);
    auto& params = model.params();
    Adam adam;
    ReduceLrOnPlateau scheduler(config.lr, config.scheduler);
    double lr = config.lr;

    TrainResult result{.model = model};
    std::vector<Matrix> best = snapshot(params);
    int since_best = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        MetricsRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;

        auto t0 = Clock::now();
        const auto pairs = epoch_views(*store, ds, epoch);
        std::vector<std::size_t> order(pairs.size());
        std::iota(order.begin(), order.end(), 0);
        RngStream shuffle_rng({.base_seed = config.seed, .epoch = epoch, .domain = StreamDomain::kShuffle});
        shuffle_rng.shuffle(order);
        rec.sample_seconds = seconds_since(t0) + (epoch == 0 ? preprocess_seconds : 0.0);
        rec.train_instances = pairs.size();

        t0 = Clock::now();
        double loss_sum = 0.0;
        const auto bs = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0, batch_no = 0; start < order.size(); start += bs, ++batch_no) {
            const std::size_t end = std::min(order.size(), start + bs);
            std::vector<PoolInput> batch;
            std::vector<int> targets;
            std::vector<std::size_t> members;
            for (std::size_t i = start; i < end; ++i) {
                const auto& view = pairs[order[i]];
                const auto& inst = ds.instances[view.subgraph_index];
                batch.push_back({inst.node_ids, view.node_ids});
                targets.push_back(inst.labels.front());
                members.push_back(view.subgraph_index);
            }
            Tape tape;
            try {
                const StreamKey dropout_key{.base_seed = config.seed,
                                            .subgraph = static_cast<std::int64_t>(batch_no),
                                            .epoch = epoch,
                                            .domain = StreamDomain::kDropout};
                const auto logits = model.forward(tape, ds.graph, ds.features, batch, true, dropout_key);
                const auto loss = ds.multi_label ? bce_with_logits(tape, logits, multi_hot(ds, members))
                                                 : softmax_cross_entropy(tape, logits, targets);
                params.zero_grad();
                backward(tape, loss);
                adam.step(params, lr);
                loss_sum += loss.item() * static_cast<double>(end - start);
            } catch (const NumericError& e) {
                throw TrainingDiverged(epoch, e.what());
            }
        }
        rec.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
        rec.train_seconds = seconds_since(t0);

        t0 = Clock::now();
        const auto val = evaluate(model, ds, *store, Split::kVal);
        const auto test = evaluate(model, ds, *store, Split::kTest);
        rec.eval_seconds = seconds_since(t0);
        rec.val_loss = val.loss;
        rec.val_micro_f1 = val.micro_f1;
        rec.test_micro_f1 = test.micro_f1;
        if (!std::isfinite(val.loss)) throw TrainingDiverged(epoch, "validation loss is not finite");

        lr = scheduler.step(val.loss);
        if (result.best_epoch < 0 || val.micro_f1 > result.best_val_micro_f1) {
            result.best_epoch = epoch;
            result.best_val_micro_f1 = val.micro_f1;
            result.test_micro_f1 = test.micro_f1;
            best = snapshot(params);
            since_best = 0;
        } else {
            ++since_best;
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (epoch + 1 >= config.warmup_epochs && since_best >= config.patience) break;
    }
    // Fresh parameter tensors so the result never aliases the training graph.
    SsnpModel out = make_model(ds, config);
    restore(out.params(), best);
    result.model = std::move(out);
    return result;
}

void save_checkpoint(const std::filesystem::path& path, const SsnpModel& model, const TrainConfig& config) {
    TrainConfig c = config;
    c.model = model.config();
    model.params().save(path);
    std::ofstream side(path.string() + ".cfg", std::ios::binary);
    if (!side) throw std::runtime_error("cannot write " + path.string() + ".cfg");
    side << "# ssnp checkpoint configuration\n";
    side << "input_dim=" << model.input_dim() << '\n';
    for (const auto& [k, v] : to_settings(c)) side << k << '=' << v << '\n';
}

std::pair<TrainConfig, SsnpModel> load_checkpoint(const std::filesystem::path& path) {
    TrainConfig c;
    std::size_t input_dim = 0;
    for (const auto& [k, v] : read_settings_file(path.string() + ".cfg")) {
        if (k == "input_dim") {
            input_dim = static_cast<std::size_t>(std::stoull(v));
        } else {
            apply_setting(c, k, v);
        }
    }
    if (input_dim == 0) throw ConfigError("checkpoint sidecar lacks input_dim");
    SsnpModel model(c.model, input_dim, c.seed);
    model.params().load(path);
    return {c, std::move(model)};
}

}  // namespace ssnp
