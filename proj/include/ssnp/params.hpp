#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ssnp/tensor.hpp"

namespace ssnp {

/// Named trainable tensors in insertion order.
class ParamStore {
public:
    Tensor& add(const std::string& name, Matrix init);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.contains(name); }

    std::size_t size() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_[i].first; }
    Tensor& tensor(std::size_t i) { return entries_[i].second; }
    const Tensor& tensor(std::size_t i) const { return entries_[i].second; }

    void zero_grad();
    std::size_t num_scalars() const;

    /// Flat little-endian binary: magic, version, count, then per parameter
    /// name length, name, rows, cols and values.
    void save(const std::filesystem::path& path) const;
    /// Overwrites values of an identically shaped store.
    void load(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace ssnp
