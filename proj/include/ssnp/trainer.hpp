#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssnp/dataset.hpp"
#include "ssnp/metrics.hpp"
#include "ssnp/model.hpp"
#include "ssnp/optim.hpp"
#include "ssnp/sampler.hpp"

namespace ssnp {

struct TrainConfig {
    double lr = 0.001;
    int max_epochs = 300;
    int warmup_epochs = 50;
    int patience = 50;
    std::uint64_t seed = 0;
    int batch_size = 64;
    unsigned threads = 1;
    bool record_timing = false;
    ViewStoreParams views;  // base_seed is overwritten by `seed`
    ModelConfig model;
    PlateauOptions scheduler;

    /// Throws std::invalid_argument naming the offending key.
    void validate() const;
    ViewStoreParams view_params() const {
        auto p = views;
        p.base_seed = seed;
        return p;
    }
};

struct MetricsRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_micro_f1 = 0.0;
    double test_micro_f1 = 0.0;
    double lr = 0.0;
    std::size_t train_instances = 0;
    double sample_seconds = 0.0;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;

    /// One JSON object; wall-clock fields only when `with_timing`.
    std::string to_json(bool with_timing) const;
};

struct EvalResult {
    double loss = 0.0;
    double micro_f1 = 0.0;
    Matrix probs;  // one row per evaluated instance, averaged over views
    std::vector<std::size_t> instances;
};

/// Non-finite loss during training.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch, const std::string& what)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch(epoch) {}
    int epoch;
};

/// Scores every instance of `split` with dropout off, averaging class
/// probabilities over the instance's evaluation views.
EvalResult evaluate(const SsnpModel& model, const SubgraphDataset& ds, const ViewStore& store, Split split);

struct TrainResult {
    SsnpModel model;  // parameters of the best validation epoch
    std::vector<MetricsRecord> history;
    int best_epoch = -1;
    double best_val_micro_f1 = 0.0;
    double test_micro_f1 = 0.0;  // of the returned model
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

/// Full optimisation loop with scheduler, warm-up and early stopping on
/// validation micro-F1. `store` may be supplied to reuse cached views.
TrainResult train(const SubgraphDataset& ds, const TrainConfig& config, const ViewStore* store = nullptr,
                  const EpochCallback& on_epoch = {});

/// Instantiates an untrained model sized for `ds`.
SsnpModel make_model(const SubgraphDataset& ds, const TrainConfig& config);

/// Parameters plus a "<path>.cfg" key=value sidecar.
void save_checkpoint(const std::filesystem::path& path, const SsnpModel& model, const TrainConfig& config);
std::pair<TrainConfig, SsnpModel> load_checkpoint(const std::filesystem::path& path);

// Flat key=value settings shared by config files, CLI overrides and sidecars.

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// All recognised keys, in canonical order.
const std::vector<std::string>& config_keys();
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);
std::vector<std::pair<std::string, std::string>> to_settings(const TrainConfig& config);
/// Parses "key=value" lines; '#' starts a comment. Throws ConfigError.
std::vector<std::pair<std::string, std::string>> read_settings_file(const std::filesystem::path& path);
TrainConfig config_from_file(const std::filesystem::path& path);

}  // namespace ssnp
