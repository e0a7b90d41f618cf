#include <doctest.h>

#include <sstream>

#include "commands.hpp"
#include "helpers.hpp"
#include "ssnp/dataset.hpp"

using namespace ssnp;
using ssnp::testing::read_file;
using ssnp::testing::TempDir;
using ssnp::testing::write_file;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "ssnp");
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<NodeId> parse_ids(const std::string& line) {
    std::vector<NodeId> ids;
    const auto colon = line.rfind(": ");
    if (colon == std::string::npos) return ids;
    std::istringstream in(line.substr(colon + 2));
    for (std::string tok; std::getline(in, tok, ',');) {
        if (!tok.empty()) ids.push_back(static_cast<NodeId>(std::stoul(tok)));
    }
    return ids;
}

const std::vector<std::string> kQuick{"--max-epochs", "3", "--warmup", "1", "--hidden-dim", "4", "--n-v", "3", "--n-ve", "2"};

std::vector<std::string> with_quick(std::vector<std::string> args) {
    args.insert(args.end(), kQuick.begin(), kQuick.end());
    return args;
}

}  // namespace

TEST_CASE("gen writes a loadable, reproducible dataset") {
    TempDir a("cli");
    TempDir b("cli");
    REQUIRE(run({"gen", "--out", (a / "d").string(), "--num-subgraphs", "40", "--seed", "1"}).code == 0);
    REQUIRE(run({"gen", "--out", (b / "d").string(), "--num-subgraphs", "40", "--seed", "1"}).code == 0);
    CHECK(load_dataset(a / "d").instances.size() == 40);
    for (const char* f : {"meta.tsv", "edges.tsv", "features.tsv", "subgraphs.tsv"}) {
        CHECK(read_file(a / "d" / f) == read_file(b / "d" / f));
    }
}

TEST_CASE("gen rejects fewer than 20 subgraphs without writing anything") {
    TempDir a("cli");
    const auto r = run({"gen", "--out", (a / "d").string(), "--num-subgraphs", "10"});
    CHECK(r.code == cli::kValidationError);
    CHECK_FALSE(std::filesystem::exists(a / "d"));
}

TEST_CASE("argument errors exit with the validation code") {
    CHECK(run({}).code == cli::kValidationError);
    CHECK(run({"frobnicate"}).code == cli::kValidationError);
    CHECK(run({"train"}).code == cli::kValidationError);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("sample prints views inside the exact neighbourhood and within the bound") {
    TempDir a("cli");
    REQUIRE(run({"gen", "--out", (a / "d").string(), "--num-subgraphs", "20", "--seed", "2"}).code == 0);
    for (int h : {1, 2}) {
        const auto r = run({"sample", "--data", (a / "d").string(), "--subgraph", "4", "--h", std::to_string(h), "--k", "2",
                            "--views", "6"});
        REQUIRE(r.code == 0);
        const auto ls = lines(r.out);
        REQUIRE(ls.size() == 3 + 6);
        auto exact = parse_ids(ls[1]);
        const auto bound = std::stoul(ls[2].substr(ls[2].find('=') + 1));
        for (std::size_t i = 3; i < ls.size(); ++i) {
            const auto view = parse_ids(ls[i]);
            CHECK(std::includes(exact.begin(), exact.end(), view.begin(), view.end()));
            CHECK(view.size() <= bound);
        }
    }
    const auto none = run({"sample", "--data", (a / "d").string(), "--subgraph", "0", "--views", "0"});
    CHECK(lines(none.out).size() == 3);
    CHECK(run({"sample", "--data", (a / "d").string(), "--subgraph", "99"}).code == cli::kValidationError);
}

TEST_CASE("train validates, writes metrics and checkpoint, and is reproducible") {
    TempDir a("cli");
    const auto data = (a / "d").string();
    REQUIRE(run({"gen", "--out", data, "--num-subgraphs", "40", "--seed", "3"}).code == 0);

    const auto bad = run({"train", "--data", data, "--strategy", "pov", "--n-v", "20", "--n-ve", "25", "--metrics",
                          (a / "bad.jsonl").string()});
    CHECK(bad.code == cli::kValidationError);
    CHECK(bad.err.find("n_ve") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(a / "bad.jsonl"));

    const auto m1 = (a / "m1.jsonl").string();
    const auto m2 = (a / "m2.jsonl").string();
    const auto ckpt = (a / "model.bin").string();
    REQUIRE(run(with_quick({"train", "--data", data, "--seed", "4", "--metrics", m1, "--checkpoint", ckpt})).code == 0);
    REQUIRE(run(with_quick({"train", "--data", data, "--seed", "4", "--metrics", m2})).code == 0);
    CHECK(read_file(m1) == read_file(m2));
    CHECK(lines(read_file(m1)).size() == 3);

    const auto ev = run({"eval", "--data", data, "--checkpoint", ckpt, "--split", "test"});
    CHECK(ev.code == 0);
    CHECK(ev.out.find("micro_f1") != std::string::npos);
    CHECK(run({"eval", "--data", data, "--checkpoint", ckpt, "--split", "bogus"}).code == cli::kValidationError);
}

TEST_CASE("command-line overrides beat the config file") {
    TempDir a("cli");
    const auto data = (a / "d").string();
    REQUIRE(run({"gen", "--out", data, "--num-subgraphs", "20"}).code == 0);
    write_file(a / "run.cfg", "max_epochs=2\nwarmup=1\nhidden_dim=4\nn_v=3\nn_ve=2\nlr=0.5\n");
    const auto r = run({"train", "--data", data, "--config", (a / "run.cfg").string(), "--lr", "0.125"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 3);
    CHECK(ls[0].find("\"lr\":0.125") != std::string::npos);

    write_file(a / "bad.cfg", "learning_rate=0.1\n");
    CHECK(run({"train", "--data", data, "--config", (a / "bad.cfg").string()}).code == cli::kValidationError);
}

TEST_CASE("views cache is reused") {
    TempDir a("cli");
    const auto data = (a / "d").string();
    REQUIRE(run({"gen", "--out", data, "--num-subgraphs", "20"}).code == 0);
    const auto cache = (a / "views.tsv").string();
    const auto m1 = (a / "m1.jsonl").string();
    const auto m2 = (a / "m2.jsonl").string();
    REQUIRE(run(with_quick({"train", "--data", data, "--views-cache", cache, "--metrics", m1})).code == 0);
    CHECK(std::filesystem::exists(cache));
    REQUIRE(run(with_quick({"train", "--data", data, "--views-cache", cache, "--metrics", m2})).code == 0);
    CHECK(read_file(m1) == read_file(m2));
}

TEST_CASE("sweep") {
    TempDir a("cli");
    const auto data = (a / "d").string();
    REQUIRE(run({"gen", "--out", data, "--num-subgraphs", "20"}).code == 0);
    const std::vector<std::string> quick{"--max-epochs", "2", "--warmup", "1", "--hidden-dim", "4"};

    SUBCASE("counting") {
        write_file(a / "grid.txt", "n_v=3,1\n");
        auto args = std::vector<std::string>{"sweep", "--data", data, "--grid", (a / "grid.txt").string(), "--repeats", "2"};
        args.insert(args.end(), quick.begin(), quick.end());
        const auto r = run(args);
        REQUIRE(r.code == 0);
        const auto ls = lines(r.out);
        REQUIRE(ls.size() == 3);
        CHECK(ls[0] == "n_v,repeats,mean_micro_f1,stderr_micro_f1,runtime_seconds");
        CHECK(ls[1].rfind("1,2,", 0) == 0);
        CHECK(ls[2].rfind("3,2,", 0) == 0);
    }
    SUBCASE("numeric-aware ordering over two keys") {
        write_file(a / "grid.txt", "pool=sum,size\nn_v=10,2\n");
        auto args = std::vector<std::string>{"sweep", "--data", data, "--grid", (a / "grid.txt").string(), "--repeats", "1",
                                             "--out", (a / "sweep.csv").string()};
        args.insert(args.end(), quick.begin(), quick.end());
        REQUIRE(run(args).code == 0);
        const auto ls = lines(read_file(a / "sweep.csv"));
        REQUIRE(ls.size() == 5);
        CHECK(ls[0].rfind("n_v,pool,", 0) == 0);
        CHECK(ls[1].rfind("2,size,", 0) == 0);
        CHECK(ls[2].rfind("2,sum,", 0) == 0);
        CHECK(ls[3].rfind("10,size,", 0) == 0);
        CHECK(ls[4].rfind("10,sum,", 0) == 0);
    }
    SUBCASE("empty grid is one default row") {
        auto args = std::vector<std::string>{"sweep", "--data", data, "--repeats", "1"};
        args.insert(args.end(), quick.begin(), quick.end());
        const auto r = run(args);
        REQUIRE(r.code == 0);
        CHECK(lines(r.out).size() == 2);
    }
    SUBCASE("malformed grids") {
        write_file(a / "grid.txt", "colour=red\n");
        CHECK(run({"sweep", "--data", data, "--grid", (a / "grid.txt").string()}).code == cli::kValidationError);
        write_file(a / "grid.txt", "n_v=1,,3\n");
        CHECK(run({"sweep", "--data", data, "--grid", (a / "grid.txt").string()}).code == cli::kValidationError);
        write_file(a / "grid.txt", "lr=fast\n");
        CHECK(run({"sweep", "--data", data, "--grid", (a / "grid.txt").string(), "--out", (a / "x.csv").string()}).code ==
              cli::kValidationError);
        CHECK_FALSE(std::filesystem::exists(a / "x.csv"));
    }
}

TEST_CASE("grad-check reports per-parameter errors") {
    for (const char* kind : {"nn", "gcn"}) {
        const auto r = run({"grad-check", "--layer-kind", kind, "--trials", "5"});
        CHECK(r.code == 0);
        CHECK(r.out.find("max_rel_error") != std::string::npos);
        CHECK(r.out.find("classifier.weight") != std::string::npos);
    }
    CHECK(run({"grad-check", "--layer-kind", "gat"}).code == cli::kValidationError);
}

TEST_CASE("wl-demo finds a pair and writes DOT") {
    TempDir a("cli");
    const auto r = run({"wl-demo", "--max-nodes", "6", "--emit-dot", (a / "pair.dot").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("snp distinguishes") != std::string::npos);
    CHECK(read_file(a / "pair.dot").find("graph S2") != std::string::npos);
}
