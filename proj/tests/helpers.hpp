#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ssnp/graph.hpp"

namespace ssnp::testing {

inline CsrGraph path_graph(std::size_t n) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u + 1 < n; ++u) edges.emplace_back(u, u + 1);
    return CsrGraph::from_edges(n, edges);
}

inline CsrGraph triangle() {
    const std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {1, 2}, {0, 2}};
    return CsrGraph::from_edges(3, edges);
}

inline CsrGraph star(std::size_t leaves) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId v = 1; v <= leaves; ++v) edges.emplace_back(0, v);
    return CsrGraph::from_edges(leaves + 1, edges);
}

inline CsrGraph cycle(std::size_t n) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < n; ++u) edges.emplace_back(u, static_cast<NodeId>((u + 1) % n));
    return CsrGraph::from_edges(n, edges);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("ssnp-test-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace ssnp::testing
