#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssnp/dataset.hpp"
#include "ssnp/gradcheck.hpp"
#include "ssnp/sampler.hpp"
#include "ssnp/trainer.hpp"
#include "ssnp/wl.hpp"

namespace ssnp::cli {

namespace fs = std::filesystem;

namespace {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes through a sibling temporary that is renamed into place on commit.
class AtomicFile {
public:
    explicit AtomicFile(fs::path target) : target_(std::move(target)), tmp_(target_.string() + ".tmp") {
        out_.open(tmp_, std::ios::binary);
        if (!out_) throw std::runtime_error("cannot write " + tmp_.string());
    }
    ~AtomicFile() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }
    std::ostream& stream() { return out_; }
    void commit() {
        out_.close();
        if (!out_) throw std::runtime_error("failed writing " + tmp_.string());
        fs::rename(tmp_, target_);
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

struct Overrides {
    std::map<std::string, std::string> values;
    bool ablate = false;
    CLI::Option* ablate_opt = nullptr;
};

// Flags mirroring config keys (dashes on the command line, underscores in files).
const std::vector<std::string>& override_flags() {
    static const std::vector<std::string> flags = {
        "layer-kind", "num-layers", "hidden-dim", "pool",       "h",          "k",        "strategy",
        "n-v",        "n-ve",       "n-eval",     "lr",         "max-epochs", "warmup",   "patience",
        "batch-size", "dropout",    "seed",       "gcn-norm",   "sched-factor", "sched-patience", "min-lr",
        "threads"};
    return flags;
}

void add_overrides(CLI::App* app, Overrides& ov) {
    for (const auto& flag : override_flags()) app->add_option("--" + flag, ov.values[flag]);
    ov.ablate_opt = app->add_flag("--ablate-neighborhood", ov.ablate, "Zero the neighbourhood half of the readout");
}

TrainConfig resolve_config(const std::string& config_path, CLI::App* app, const Overrides& ov) {
    TrainConfig c = config_path.empty() ? TrainConfig{} : config_from_file(config_path);
    for (const auto& flag : override_flags()) {
        if (app->get_option("--" + flag)->count() > 0) apply_setting(c, flag, ov.values.at(flag));
    }
    if (ov.ablate_opt->count() > 0) c.model.ablate_neighborhood = ov.ablate;
    return c;
}

std::string join_ids(const std::vector<NodeId>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + std::to_string(ids[i]);
    return s;
}

SubgraphDataset load_for_training(const std::string& dir, bool degree_features, TrainConfig& config) {
    auto ds = load_dataset(dir, {.degree_features = degree_features});
    config.model.num_classes = ds.num_classes;
    config.model.multi_label = ds.multi_label;
    return ds;
}

ViewStore obtain_views(const SubgraphDataset& ds, const TrainConfig& config, const std::string& cache) {
    const auto vp = config.view_params();
    if (!cache.empty() && fs::exists(cache)) return load_views(cache, ds, vp);
    auto store = build_view_store(ds, vp, config.threads);
    if (!cache.empty() && vp.strategy != Strategy::kOnline) {
        const std::string tmp = cache + ".tmp";
        save_views(store, tmp);
        fs::rename(tmp, cache);
    }
    return store;
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::string& out_dir, std::size_t num_subgraphs, std::uint64_t seed, std::ostream& out) {
    if (num_subgraphs < 20) throw ValidationError("--num-subgraphs must be at least 20");
    const auto ds = generate_synthetic(num_subgraphs, seed);
    const fs::path dir(out_dir);
    const fs::path staging = dir.string() + ".staging";
    fs::remove_all(staging);
    fs::create_directories(staging);
    write_dataset(ds, staging);
    fs::create_directories(dir);
    for (const char* name : {"meta.tsv", "edges.tsv", "features.tsv", "subgraphs.tsv"}) {
        fs::rename(staging / name, dir / name);
    }
    fs::remove_all(staging);
    out << "wrote " << ds.instances.size() << " subgraphs over " << ds.graph.num_nodes() << " nodes and "
        << ds.graph.num_edges() << " edges to " << dir.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- sample

int cmd_sample(const std::string& data, std::size_t index, int h, int k, int views, std::uint64_t seed, std::ostream& out) {
    if (h < 1 || k < 1) throw ValidationError("--h and --k must be >= 1");
    if (views < 0) throw ValidationError("--views must be >= 0");
    const auto ds = load_dataset(data);
    if (index >= ds.instances.size()) {
        throw ValidationError("--subgraph " + std::to_string(index) + " out of range (dataset has " +
                              std::to_string(ds.instances.size()) + " subgraphs)");
    }
    const auto& inst = ds.instances[index];
    const auto exact = exact_neighborhood(ds.graph, inst.node_ids, h);
    const std::size_t bound = inst.node_ids.size() * static_cast<std::size_t>(h) * static_cast<std::size_t>(k);
    out << "subgraph " << index << " (" << to_string(inst.split) << ") nodes=" << join_ids(inst.node_ids)
        << " size=" << inst.node_ids.size() << '\n';
    out << "exact h=" << h << " neighborhood size=" << exact.size() << ": " << join_ids(exact) << '\n';
    out << "view size bound |V_S|*h*k=" << bound << '\n';
    for (int v = 0; v < views; ++v) {
        RngStream rng(precomputed_view_key(seed, index, v));
        const auto view = sample_view(ds.graph, inst, index, h, k, rng);
        out << "view " << v << " size=" << view.node_ids.size() << ": " << join_ids(view.node_ids) << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------- train / eval

int cmd_train(const std::string& data, TrainConfig config, bool degree_features, const std::string& metrics_path,
              const std::string& checkpoint, const std::string& views_cache, std::ostream& out) {
    auto ds = load_for_training(data, degree_features, config);
    config.validate();
    const auto store = obtain_views(ds, config, views_cache);

    std::optional<AtomicFile> metrics_file;
    if (!metrics_path.empty()) metrics_file.emplace(metrics_path);
    std::ostream& metrics = metrics_file ? metrics_file->stream() : out;
    const auto result = train(ds, config, &store, [&](const MetricsRecord& rec) {
        metrics << rec.to_json(config.record_timing) << '\n';
    });
    if (metrics_file) metrics_file->commit();
    if (!checkpoint.empty()) {
        const fs::path tmp = checkpoint + ".tmp-ckpt";
        save_checkpoint(tmp, result.model, config);
        fs::rename(tmp.string() + ".cfg", checkpoint + ".cfg");
        fs::rename(tmp, checkpoint);
    }
    nlohmann::ordered_json summary;
    summary["best_epoch"] = result.best_epoch;
    summary["best_val_micro_f1"] = result.best_val_micro_f1;
    summary["test_micro_f1"] = result.test_micro_f1;
    summary["epochs_run"] = result.history.size();
    out << summary.dump() << '\n';
    return kOk;
}

int cmd_eval(const std::string& data, const std::string& checkpoint, const std::string& split, bool degree_features,
             const std::string& views_cache, std::ostream& out) {
    auto [config, model] = load_checkpoint(checkpoint);
    const auto ds = load_dataset(data, {.degree_features = degree_features});
    const Split s = parse_split(split);
    const auto store = obtain_views(ds, config, views_cache);
    const auto res = evaluate(model, ds, store, s);
    nlohmann::ordered_json j;
    j["split"] = split;
    j["instances"] = res.instances.size();
    j["micro_f1"] = res.micro_f1;
    j["loss"] = res.loss;
    out << j.dump() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- sweep

std::vector<std::pair<std::string, std::vector<std::string>>> read_grid(const std::string& path) {
    std::vector<std::pair<std::string, std::vector<std::string>>> grid;
    for (auto [key, values] : read_settings_file(path)) {
        std::replace(key.begin(), key.end(), '-', '_');
        if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
            throw ValidationError("grid: unknown key '" + key + "'");
        }
        std::vector<std::string> list;
        std::stringstream ss(values);
        for (std::string v; std::getline(ss, v, ',');) {
            v.erase(0, v.find_first_not_of(" \t"));
            v.erase(v.find_last_not_of(" \t") + 1);
            if (v.empty()) throw ValidationError("grid: empty value for '" + key + "'");
            list.push_back(v);
        }
        if (list.empty()) throw ValidationError("grid: no values for '" + key + "'");
        for (const auto& [k, _] : grid) {
            if (k == key) throw ValidationError("grid: duplicate key '" + key + "'");
        }
        grid.emplace_back(key, std::move(list));
    }
    std::sort(grid.begin(), grid.end());
    return grid;
}

bool value_less(const std::string& a, const std::string& b) {
    double x = 0.0;
    double y = 0.0;
    const bool nx = std::from_chars(a.data(), a.data() + a.size(), x).ptr == a.data() + a.size();
    const bool ny = std::from_chars(b.data(), b.data() + b.size(), y).ptr == b.data() + b.size();
    if (nx && ny && x != y) return x < y;
    return a < b;
}

int cmd_sweep(const std::string& data, const std::string& grid_path, TrainConfig base, bool degree_features, int repeats,
              const std::string& out_path, std::ostream& out) {
    if (repeats < 1) throw ValidationError("--repeats must be >= 1");
    const auto grid = grid_path.empty() ? decltype(read_grid("")){} : read_grid(grid_path);
    auto ds = load_for_training(data, degree_features, base);

    // Cartesian product; every cell is validated before any run starts.
    std::vector<std::vector<std::string>> cells{{}};
    for (const auto& [key, values] : grid) {
        std::vector<std::vector<std::string>> next;
        for (const auto& cell : cells) {
            for (const auto& v : values) {
                auto c = cell;
                c.push_back(v);
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), value_less);
    });
    std::vector<TrainConfig> configs;
    for (const auto& cell : cells) {
        TrainConfig c = base;
        bool sets_n_ve = false;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            apply_setting(c, grid[i].first, cell[i]);
            sets_n_ve = sets_n_ve || grid[i].first == "n_ve";
        }
        // Sweeping n_v alone: cap the per-epoch draw at the pool size.
        if (!sets_n_ve) c.views.n_ve = std::min(c.views.n_ve, c.views.n_v);
        c.validate();
        configs.push_back(c);
    }

    std::optional<AtomicFile> file;
    if (!out_path.empty()) file.emplace(out_path);
    std::ostream& csv = file ? file->stream() : out;
    for (const auto& [key, _] : grid) csv << key << ',';
    csv << "repeats,mean_micro_f1,stderr_micro_f1,runtime_seconds\n";
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        std::vector<double> scores;
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < repeats; ++r) {
            TrainConfig c = configs[ci];
            c.seed = base.seed + static_cast<std::uint64_t>(r);
            scores.push_back(train(ds, c).test_micro_f1);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        double var = 0.0;
        for (double s : scores) var += (s - mean) * (s - mean);
        const double stderr_ =
            scores.size() > 1 ? std::sqrt(var / static_cast<double>(scores.size() - 1) / static_cast<double>(scores.size())) : 0.0;
        for (const auto& v : cells[ci]) csv << v << ',';
        csv << repeats << ',' << mean << ',' << stderr_ << ',' << secs << '\n';
    }
    if (file) file->commit();
    return kOk;
}

// ---------------------------------------------------------------- wl-demo

void write_dot(std::ostream& os, const std::string& name, const MarkedGraph& mg) {
    os << "graph " << name << " {\n";
    for (NodeId u = 0; u < mg.graph.num_nodes(); ++u) {
        const bool marked = std::binary_search(mg.subgraph.begin(), mg.subgraph.end(), u);
        os << "  n" << u << (marked ? " [style=filled, fillcolor=plum]" : "") << ";\n";
    }
    for (const auto& [u, v] : mg.graph.edge_list()) os << "  n" << u << " -- n" << v << ";\n";
    os << "}\n";
}

int cmd_wl_demo(std::size_t max_nodes, int h, int iters, std::uint64_t seed, const std::string& dot_path, std::ostream& out) {
    if (max_nodes < 1 || max_nodes > 10) throw ValidationError("--max-nodes must lie in [1, 10]");
    if (h < 1 || iters < 1) throw ValidationError("--h and --iters must be >= 1");
    const auto found = find_counterexample(max_nodes, h, iters);
    if (!found) {
        out << "no counterexample with at most " << max_nodes << " nodes\n";
        return kThresholdFailure;
    }
    const auto describe = [&](const char* label, const MarkedGraph& mg) {
        out << label << ": " << mg.graph.num_nodes() << " nodes, edges";
        for (const auto& [u, v] : mg.graph.edge_list()) out << ' ' << u << '-' << v;
        out << "; subgraph {" << join_ids(mg.subgraph) << "}\n";
    };
    out << "examined " << found->candidates_examined << " marked graphs\n";
    describe("S1", found->first);
    describe("S2", found->second);
    for (int t = 0; t <= iters; ++t) {
        ColorDictionary dict;
        const auto c1 = wl_refine(found->first.graph, t, dict);
        const auto c2 = wl_refine(found->second.graph, t, dict);
        const auto a = signatures(found->first.graph, found->first.subgraph, h, c1);
        const auto b = signatures(found->second.graph, found->second.subgraph, h, c2);
        const auto fmt = [](const std::vector<int>& v) {
            std::string s = "{";
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
            return s + "}";
        };
        out << "iteration " << t << ": S1 subgraph " << fmt(a.subgraph) << " neighborhood " << fmt(a.neighborhood)
            << " | S2 subgraph " << fmt(b.subgraph) << " neighborhood " << fmt(b.neighborhood)
            << " | plain " << (a.subgraph != b.subgraph ? "distinguishes" : "fails") << ", snp "
            << (a != b ? "distinguishes" : "fails") << '\n';
    }
    const auto sep = verify_with_models(*found, h, iters, seed);
    out << "trained GCN (" << iters << " layers): ssnp " << (sep.ssnp_separates ? "separates" : "does not separate")
        << " (logit gap " << sep.ssnp_logit_gap << "), plain " << (sep.plain_separates ? "separates" : "does not separate")
        << " (logit gap " << sep.plain_logit_gap << ")\n";
    if (!dot_path.empty()) {
        AtomicFile f(dot_path);
        write_dot(f.stream(), "S1", found->first);
        write_dot(f.stream(), "S2", found->second);
        f.commit();
    }
    return sep.ssnp_separates && !sep.plain_separates ? kOk : kThresholdFailure;
}

// ---------------------------------------------------------------- grad-check

int cmd_grad_check(const std::string& kind, int trials, std::uint64_t seed, std::ostream& out) {
    if (trials < 1) throw ValidationError("--trials must be >= 1");
    std::vector<LayerKind> kinds;
    if (kind == "all") {
        kinds = {LayerKind::kMlp, LayerKind::kGcn, LayerKind::kNn};
    } else {
        kinds = {parse_layer_kind(kind)};
    }
    constexpr double kTolerance = 1e-4;
    bool ok = true;
    for (auto k : kinds) {
        const auto report = grad_check_model(k, trials, seed);
        out << "layer-kind " << to_string(k) << ", " << trials << " trials\n";
        for (const auto& p : report.per_param) out << "  " << p.name << " max_rel_error=" << p.max_rel_error << '\n';
        out << "  max_rel_error=" << report.max_rel_error << (report.passed(kTolerance) ? " PASS" : " FAIL") << '\n';
        ok = ok && report.passed(kTolerance);
    }
    return ok ? kOk : kThresholdFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic subgraph neighbourhood pooling toolkit"};
    app.require_subcommand(1);
    // --h is the hop count, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");

    std::string data;
    std::string out_dir;
    std::string config_path;
    std::string metrics_path;
    std::string checkpoint;
    std::string views_cache;
    std::string split = "test";
    std::string grid;
    std::string sweep_out;
    std::string dot_path;
    std::string kind = "all";
    std::size_t num_subgraphs = 200;
    std::size_t subgraph_index = 0;
    std::size_t max_nodes = 8;
    std::uint64_t seed = 0;
    int h = 1;
    int k = 1;
    int views = 5;
    int iters = 2;
    int trials = 5;
    int repeats = 3;
    bool degree_features = false;

    auto* gen = app.add_subcommand("gen", "Generate the synthetic planted-clique dataset");
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--num-subgraphs", num_subgraphs, "Number of subgraphs (>= 20)");
    gen->add_option("--seed", seed);

    auto* sample = app.add_subcommand("sample", "Print exact and sampled neighbourhoods of one subgraph");
    sample->add_option("--data", data)->required();
    sample->add_option("--subgraph", subgraph_index)->required();
    sample->add_option("--h", h);
    sample->add_option("--k", k);
    sample->add_option("--views", views);
    sample->add_option("--seed", seed);

    Overrides train_ov;
    auto* train_cmd = app.add_subcommand("train", "Train a model");
    train_cmd->add_option("--data", data)->required();
    train_cmd->add_option("--config", config_path);
    train_cmd->add_option("--metrics", metrics_path, "JSONL metrics file (default stdout)");
    train_cmd->add_option("--checkpoint", checkpoint);
    train_cmd->add_option("--views-cache", views_cache);
    train_cmd->add_flag("--degree-features", degree_features);
    add_overrides(train_cmd, train_ov);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--data", data)->required();
    eval_cmd->add_option("--checkpoint", checkpoint)->required();
    eval_cmd->add_option("--split", split);
    eval_cmd->add_option("--views-cache", views_cache);
    eval_cmd->add_flag("--degree-features", degree_features);

    Overrides sweep_ov;
    auto* sweep = app.add_subcommand("sweep", "Run a hyperparameter grid");
    sweep->add_option("--data", data)->required();
    sweep->add_option("--grid", grid);
    sweep->add_option("--config", config_path);
    sweep->add_option("--repeats", repeats);
    sweep->add_option("--out", sweep_out, "CSV file (default stdout)");
    sweep->add_flag("--degree-features", degree_features);
    add_overrides(sweep, sweep_ov);

    auto* wl = app.add_subcommand("wl-demo", "Search for a pair only neighbourhood pooling separates");
    wl->add_option("--max-nodes", max_nodes);
    wl->add_option("--h", h);
    wl->add_option("--iters", iters);
    wl->add_option("--seed", seed);
    wl->add_option("--emit-dot", dot_path);

    auto* grad = app.add_subcommand("grad-check", "Finite-difference check of all model gradients");
    grad->add_option("--layer-kind", kind, "mlp, gcn, nn or all");
    grad->add_option("--trials", trials);
    grad->add_option("--seed", seed);

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    if (storage.empty()) storage.emplace_back("ssnp");
    for (auto& a : storage) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidationError;
    }

    try {
        if (*gen) return cmd_gen(out_dir, num_subgraphs, seed, out);
        if (*sample) return cmd_sample(data, subgraph_index, h, k, views, seed, out);
        if (*train_cmd) {
            auto config = resolve_config(config_path, train_cmd, train_ov);
            return cmd_train(data, config, degree_features, metrics_path, checkpoint, views_cache, out);
        }
        if (*eval_cmd) return cmd_eval(data, checkpoint, split, degree_features, views_cache, out);
        if (*sweep) {
            auto config = resolve_config(config_path, sweep, sweep_ov);
            return cmd_sweep(data, grid, config, degree_features, repeats, sweep_out, out);
        }
        if (*wl) return cmd_wl_demo(max_nodes, h, iters, seed, dot_path, out);
        if (*grad) return cmd_grad_check(kind, trials, seed, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kValidationError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kValidationError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kValidationError;
}

}  // namespace ssnp::cli
