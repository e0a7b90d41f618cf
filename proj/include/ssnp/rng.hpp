#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ssnp {

/// Purpose tag folded into every stream key so that streams drawn for
/// different jobs never alias even when the numeric indices coincide.
enum class StreamDomain : std::uint64_t {
    kWalk = 1,
    kPovSubset = 2,
    kDropout = 3,
    kShuffle = 4,
    kInit = 5,
    kSynthetic = 6,
    kTest = 7,
};

struct StreamKey {
    std::uint64_t base_seed = 0;
    std::int64_t subgraph = 0;
    std::int64_t view = 0;
    std::int64_t epoch = 0;
    StreamDomain domain = StreamDomain::kWalk;
};

/// Counter-based keyed generator. Output i is a pure function of (key, i),
/// so the order in which independent streams are consumed never matters.
class RngStream {
public:
    explicit RngStream(const StreamKey& key);

    std::uint64_t next_u64();

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }
    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

    std::uint64_t key_hash() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace ssnp
