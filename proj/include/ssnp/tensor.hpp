#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssnp/graph.hpp"
#include "ssnp/matrix.hpp"
#include "ssnp/rng.hpp"

namespace ssnp {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value became NaN or infinite inside an op.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Tape;

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;  // empty until a gradient reaches this node
    bool requires_grad = false;
    const Tape* tape = nullptr;
    std::size_t record = std::numeric_limits<std::size_t>::max();

    Matrix& grad_buffer() {
        if (!grad.same_shape(value)) grad = Matrix(value.rows, value.cols);
        return grad;
    }
};

}  // namespace detail

/// Shared handle to a dense matrix that may participate in a Tape.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Matrix value);
    static Tensor parameter(Matrix value);

    std::size_t rows() const { return node_->value.rows; }
    std::size_t cols() const { return node_->value.cols; }
    const Matrix& value() const { return node_->value; }
    /// Mutable access for optimizers and finite-difference probes.
    Matrix& mutable_value() const { return node_->value; }
    const Matrix& grad() const { return node_->grad; }
    Matrix& mutable_grad() const { return node_->grad_buffer(); }
    bool has_grad() const { return node_->grad.same_shape(node_->value); }
    void zero_grad();
    bool requires_grad() const { return node_->requires_grad; }
    double item() const;
    bool defined() const { return node_ != nullptr; }

    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;

    friend class Tape;
};

/**
 * Records differentiable ops in creation order. One tape serves one forward
 * and one backward pass; backward() clears it. A non-recording tape runs
 * the same ops without keeping any history (inference). Ops on spmm_self
 * keep a reference to the graph, which must outlive the tape.
 */
class Tape {
public:
    enum class Mode { kRecord, kInference };
    explicit Tape(Mode mode = Mode::kRecord) : recording_(mode == Mode::kRecord) {}
    // Recorded tensors point back at their tape, so it must stay put.
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    std::size_t size() const { return records_.size(); }

    /// Creates the output tensor of an op. `inputs` are the differentiable
    /// operands; `backward` reads the output gradient and accumulates into
    /// the inputs. Checks the value for NaN/Inf.
    Tensor record(const char* op, Matrix value, std::vector<Tensor> inputs, std::function<void(const Matrix&)> backward);

    void backward(const Tensor& loss);

private:
    struct Record {
        const char* op;
        std::vector<std::shared_ptr<detail::Node>> inputs;
        std::shared_ptr<detail::Node> output;
        std::function<void(const Matrix&)> backward;
    };
    std::vector<Record> records_;
    bool recording_ = true;
};

/// Reverse-mode sweep from a scalar loss; gradients accumulate into leaves.
inline void backward(Tape& tape, const Tensor& loss) { tape.backward(loss); }

enum class PoolKind { kSum, kMean, kMax, kSize };
enum class Aggregation { kSum, kSymNormalized };

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// x + 1·bias for a 1×n bias row.
Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias);
/// out[u] = Σ_{v∈N(u)} h[v] + h[u]; kSymNormalized scales by (d_u+1)^-½ (d_v+1)^-½.
Tensor spmm_self(Tape& tape, const CsrGraph& g, const Tensor& h, Aggregation agg = Aggregation::kSum);
Tensor elu(Tape& tape, const Tensor& x);
/// Column-wise normalization over all rows with learnable scale γ, shift β
/// and mean coefficient α (each 1×d).
Tensor graph_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& alpha,
                  double eps = 1e-5);
/// Inverted dropout; identity when !training or p == 0.
Tensor dropout(Tape& tape, const Tensor& x, double p, bool training, RngStream& rng);
Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b);
/// One output row per group. kSize yields a 1-column count with no gradient.
Tensor segment_pool(Tape& tape, const Tensor& z, std::span<const std::vector<NodeId>> groups, PoolKind kind);
Tensor sum_all(Tape& tape, const Tensor& x);
/// Mean over rows of -log softmax(logits)[target].
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const int> targets);
/// Mean over all entries of the stable binary cross-entropy with logits.
Tensor bce_with_logits(Tape& tape, const Tensor& logits, const Matrix& targets);

Matrix softmax_rows(const Matrix& logits);
Matrix sigmoid(const Matrix& logits);

}  // namespace ssnp
