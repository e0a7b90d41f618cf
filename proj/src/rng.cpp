#include "ssnp/rng.hpp"

#include <limits>
#include <stdexcept>

namespace ssnp {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t absorb(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

}  // namespace

RngStream::RngStream(const StreamKey& key) {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(key.domain));
    h = absorb(h, key.base_seed);
    h = absorb(h, static_cast<std::uint64_t>(key.subgraph));
    h = absorb(h, static_cast<std::uint64_t>(key.view));
    h = absorb(h, static_cast<std::uint64_t>(key.epoch));
    key_ = h;
}

std::uint64_t RngStream::next_u64() {
    // Two rounds over (key, counter) decorrelate neighbouring counters.
    const std::uint64_t c = counter_++;
    return mix64(key_ ^ mix64(c * 0xd1b54a32d192ed03ULL + 1));
}

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_index: bound must be positive");
    // Rejection sampling keeps the draw exactly uniform and portable.
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace ssnp
