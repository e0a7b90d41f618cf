#include <charconv>
#include <fstream>
#include <map>

#include "ssnp/trainer.hpp"

namespace ssnp {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
        throw ConfigError(key + ": cannot parse '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

template <typename Fn>
auto wrap(const std::string& key, Fn fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr: must be positive");
    if (max_epochs < 1) throw ConfigError("max_epochs: must be >= 1");
    if (warmup_epochs < 0 || warmup_epochs > max_epochs) throw ConfigError("warmup: must lie in [0, max_epochs]");
    if (patience < 1) throw ConfigError("patience: must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    if (!(scheduler.factor > 0.0 && scheduler.factor <= 1.0)) throw ConfigError("sched_factor: must lie in (0, 1]");
    if (scheduler.patience < 0) throw ConfigError("sched_patience: must be >= 0");
    if (scheduler.min_lr < 0.0) throw ConfigError("min_lr: must be >= 0");
    wrap("model", [&] { model.validate(); });
    try {
        views.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("views: ") + e.what());
    }
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "lr",          "max_epochs",  "warmup",       "patience",       "seed",           "batch_size",
        "threads",     "record_timing", "strategy",   "n_v",            "n_ve",           "h",
        "k",           "n_eval",      "layer_kind",   "num_layers",     "hidden_dim",     "pool",
        "dropout",     "ablate_neighborhood",         "gcn_norm",       "num_classes",    "multi_label",
        "sched_factor", "sched_patience", "min_lr"};
    return keys;
}

void apply_setting(TrainConfig& c, const std::string& raw_key, const std::string& raw_value) {
    std::string key = trim(raw_key);
    for (auto& ch : key) {
        if (ch == '-') ch = '_';
    }
    const std::string value = trim(raw_value);
    auto& m = c.model;
    auto& v = c.views;
    if (key == "lr") c.lr = parse_value<double>(key, value);
    else if (key == "max_epochs") c.max_epochs = parse_value<int>(key, value);
    else if (key == "warmup") c.warmup_epochs = parse_value<int>(key, value);
    else if (key == "patience") c.patience = parse_value<int>(key, value);
    else if (key == "seed") c.seed = parse_value<std::uint64_t>(key, value);
    else if (key == "batch_size") c.batch_size = parse_value<int>(key, value);
    else if (key == "threads") c.threads = parse_value<unsigned>(key, value);
    else if (key == "record_timing") c.record_timing = parse_bool(key, value);
    else if (key == "strategy") v.strategy = wrap(key, [&] { return parse_strategy(value); });
    else if (key == "n_v") v.n_v = parse_value<int>(key, value);
    else if (key == "n_ve") v.n_ve = parse_value<int>(key, value);
    else if (key == "h") v.h = parse_value<int>(key, value);
    else if (key == "k") v.k = parse_value<int>(key, value);
    else if (key == "n_eval") v.n_eval = parse_value<int>(key, value);
    else if (key == "layer_kind") m.layer_kind = wrap(key, [&] { return parse_layer_kind(value); });
    else if (key == "num_layers") m.num_layers = parse_value<int>(key, value);
    else if (key == "hidden_dim") m.hidden_dim = parse_value<int>(key, value);
    else if (key == "pool") m.pool = wrap(key, [&] { return parse_pool_kind(value); });
    else if (key == "dropout") m.dropout = parse_value<double>(key, value);
    else if (key == "ablate_neighborhood") m.ablate_neighborhood = parse_bool(key, value);
    else if (key == "gcn_norm") {
        if (value == "sum") m.gcn_aggregation = Aggregation::kSum;
        else if (value == "sym") m.gcn_aggregation = Aggregation::kSymNormalized;
        else throw ConfigError("gcn_norm: expected sum or sym");
    }
    else if (key == "num_classes") m.num_classes = parse_value<int>(key, value);
    else if (key == "multi_label") m.multi_label = parse_bool(key, value);
    else if (key == "sched_factor") c.scheduler.factor = parse_value<double>(key, value);
    else if (key == "sched_patience") c.scheduler.patience = parse_value<int>(key, value);
    else if (key == "min_lr") c.scheduler.min_lr = parse_value<double>(key, value);
    else throw ConfigError("unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> to_settings(const TrainConfig& c) {
    const auto b = [](bool x) { return std::string(x ? "1" : "0"); };
    return {
        {"lr", fmt(c.lr)},
        {"max_epochs", std::to_string(c.max_epochs)},
        {"warmup", std::to_string(c.warmup_epochs)},
        {"patience", std::to_string(c.patience)},
        {"seed", std::to_string(c.seed)},
        {"batch_size", std::to_string(c.batch_size)},
        {"threads", std::to_string(c.threads)},
        {"record_timing", b(c.record_timing)},
        {"strategy", std::string(to_string(c.views.strategy))},
        {"n_v", std::to_string(c.views.n_v)},
        {"n_ve", std::to_string(c.views.n_ve)},
        {"h", std::to_string(c.views.h)},
        {"k", std::to_string(c.views.k)},
        {"n_eval", std::to_string(c.views.n_eval)},
        {"layer_kind", std::string(to_string(c.model.layer_kind))},
        {"num_layers", std::to_string(c.model.num_layers)},
        {"hidden_dim", std::to_string(c.model.hidden_dim)},
        {"pool", std::string(to_string(c.model.pool))},
        {"dropout", fmt(c.model.dropout)},
        {"ablate_neighborhood", b(c.model.ablate_neighborhood)},
        {"gcn_norm", c.model.gcn_aggregation == Aggregation::kSum ? "sum" : "sym"},
        {"num_classes", std::to_string(c.model.num_classes)},
        {"multi_label", b(c.model.multi_label)},
        {"sched_factor", fmt(c.scheduler.factor)},
        {"sched_patience", std::to_string(c.scheduler.patience)},
        {"min_lr", fmt(c.scheduler.min_lr)},
    };
}

std::vector<std::pair<std::string, std::string>> read_settings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.filename().string() + ":" + std::to_string(line_no) + ": expected key=value");
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

TrainConfig config_from_file(const std::filesystem::path& path) {
    TrainConfig c;
    for (const auto& [k, v] : read_settings_file(path)) apply_setting(c, k, v);
    return c;
}

}  // namespace ssnp
