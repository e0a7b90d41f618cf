#include "ssnp/params.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace ssnp {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'S', 'N', 'P', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("checkpoint truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

}  // namespace

Tensor& ParamStore::add(const std::string& name, Matrix init) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    index_[name] = entries_.size();
    entries_.emplace_back(name, Tensor::parameter(std::move(init)));
    entries_.back().second.zero_grad();
    return entries_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return entries_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return entries_[it->second].second;
}

void ParamStore::zero_grad() {
    for (auto& [_, t] : entries_) t.zero_grad();
}

std::size_t ParamStore::num_scalars() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.value().size();
    return n;
}

void ParamStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint64_t>(out, entries_.size());
    for (const auto& [name, t] : entries_) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le<std::uint64_t>(out, t.rows());
        put_le<std::uint64_t>(out, t.cols());
        for (double v : t.value().data) put_le<double>(out, v);
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

void ParamStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error(path.string() + " is not a parameter file");
    if (get_le<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");
    const auto count = get_le<std::uint64_t>(in);
    if (count != entries_.size()) throw std::runtime_error("checkpoint parameter count does not match the model");
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = get_le<std::uint32_t>(in);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw std::runtime_error("checkpoint truncated");
        const auto rows = get_le<std::uint64_t>(in);
        const auto cols = get_le<std::uint64_t>(in);
        auto& t = at(name);
        if (t.rows() != rows || t.cols() != cols) throw std::runtime_error("shape mismatch for parameter '" + name + "'");
        for (auto& v : t.mutable_value().data) v = get_le<double>(in);
    }
}

}  // namespace ssnp
