#include "ssnp/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace ssnp {

Tensor Tensor::constant(Matrix value) {
    auto n = std::make_shared<detail::Node>();
    n->value = std::move(value);
    return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
    auto n = std::make_shared<detail::Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Tensor(std::move(n));
}

void Tensor::zero_grad() {
    auto& g = node_->grad_buffer();
    std::fill(g.data.begin(), g.data.end(), 0.0);
}

double Tensor::item() const {
    if (rows() != 1 || cols() != 1) throw ShapeError("item() needs a 1x1 tensor");
    return node_->value.data[0];
}

Tensor Tape::record(const char* op, Matrix value, std::vector<Tensor> inputs,
                    std::function<void(const Matrix&)> backward) {
    for (double v : value.data) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
    }
    auto out = Tensor::constant(std::move(value));
    const bool needs = recording_ && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
        return t.requires_grad();
    });
    if (!needs) return out;
    out.node_->requires_grad = true;
    out.node_->tape = this;
    out.node_->record = records_.size();
    std::vector<std::shared_ptr<detail::Node>> nodes;
    nodes.reserve(inputs.size());
    for (auto& t : inputs) nodes.push_back(t.node_);
    records_.push_back({op, std::move(nodes), out.node_, std::move(backward)});
    return out;
}

void Tape::backward(const Tensor& loss) {
    const auto& ln = loss.node();
    if (!ln || ln->tape != this || ln->record >= records_.size() || records_[ln->record].output != ln) {
        throw std::logic_error("backward: loss was not produced on this tape (or backward already ran)");
    }
    if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("backward: loss must be a 1x1 tensor");
    ln->grad_buffer().data[0] = 1.0;
    for (std::size_t i = ln->record + 1; i-- > 0;) {
        auto& rec = records_[i];
        if (rec.output->grad.same_shape(rec.output->value)) rec.backward(rec.output->grad);
    }
    for (auto& rec : records_) {
        rec.output->tape = nullptr;
        rec.output->record = std::numeric_limits<std::size_t>::max();
    }
    records_.clear();
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

std::string shape(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

// dst += a·bᵀ-style kernels share these loops; fixed loop order keeps results bitwise reproducible.
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {  // c += a·b
    for (std::size_t i = 0; i < a.rows; ++i) {
        auto crow = c.row(i);
        for (std::size_t p = 0; p < a.cols; ++p) {
            const double av = a(i, p);
            if (av == 0.0) continue;
            const auto brow = b.row(p);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {  // c += a·bᵀ
    // Row-axpy over an explicit transpose vectorizes; a dot-product reduction would not.
    Matrix bt(b.cols, b.rows);
    for (std::size_t i = 0; i < b.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) bt(j, i) = b(i, j);
    }
    gemm_acc(a, bt, c);
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {  // c += aᵀ·b
    for (std::size_t p = 0; p < a.rows; ++p) {
        const auto arow = a.row(p);
        const auto brow = b.row(p);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            auto crow = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
}

void spmm_apply(const CsrGraph& g, const Matrix& in, Matrix& out, Aggregation agg) {
    const std::size_t d = in.cols;
    std::vector<double> scale;
    if (agg == Aggregation::kSymNormalized) {
        scale.resize(g.num_nodes());
        for (NodeId u = 0; u < g.num_nodes(); ++u) scale[u] = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));
    }
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        auto orow = out.row(u);
        const double su = scale.empty() ? 1.0 : scale[u];
        const auto self = in.row(u);
        for (std::size_t j = 0; j < d; ++j) orow[j] += su * su * self[j];
        for (NodeId v : g.neighbors(u)) {
            const double w = scale.empty() ? 1.0 : su * scale[v];
            const auto vrow = in.row(v);
            for (std::size_t j = 0; j < d; ++j) orow[j] += w * vrow[j];
        }
    }
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ (" + shape(a) + " vs " + shape(b) + ")");
    Matrix out(a.rows(), b.cols());
    gemm_acc(a.value(), b.value(), out);
    return tape.record("matmul", std::move(out), {a, b}, [a, b](const Matrix& g) mutable {
        if (a.requires_grad()) gemm_nt_acc(g, b.value(), a.mutable_grad());
        if (b.requires_grad()) gemm_tn_acc(a.value(), g, b.mutable_grad());
    });
}

Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
    require(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias: bias must be 1x" + std::to_string(x.cols()));
    Matrix out = x.value();
    for (std::size_t i = 0; i < out.rows; ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < out.cols; ++j) r[j] += bias.value().data[j];
    }
    return tape.record("add_bias", std::move(out), {x, bias}, [x, bias](const Matrix& g) mutable {
        if (x.requires_grad()) {
            auto& gx = x.mutable_grad();
            for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i];
        }
        if (bias.requires_grad()) {
            auto& gb = bias.mutable_grad();
            for (std::size_t i = 0; i < g.rows; ++i) {
                const auto r = g.row(i);
                for (std::size_t j = 0; j < g.cols; ++j) gb.data[j] += r[j];
            }
        }
    });
}

Tensor spmm_self(Tape& tape, const CsrGraph& g, const Tensor& h, Aggregation agg) {
    require(h.rows() == g.num_nodes(), "spmm_self: expected " + std::to_string(g.num_nodes()) + " rows, got " + shape(h));
    Matrix out(h.rows(), h.cols());
    spmm_apply(g, h.value(), out, agg);
    // (A+I) and its symmetric normalization are self-adjoint.
    return tape.record("spmm_self", std::move(out), {h}, [&g, h, agg](const Matrix& grad) mutable {
        spmm_apply(g, grad, h.mutable_grad(), agg);
    });
}

Tensor elu(Tape& tape, const Tensor& x) {
    Matrix out(x.rows(), x.cols());
    const auto& xv = x.value();
    for (std::size_t i = 0; i < xv.size(); ++i) out.data[i] = xv.data[i] > 0.0 ? xv.data[i] : std::expm1(xv.data[i]);
    return tape.record("elu", std::move(out), {x}, [x](const Matrix& g) mutable {
        const auto& xv = x.value();
        auto& gx = x.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] * (xv.data[i] > 0.0 ? 1.0 : std::exp(xv.data[i]));
    });
}

Tensor graph_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& alpha, double eps) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    require(n >= 1, "graph_norm: needs at least one row");
    for (const Tensor* p : {&gamma, &beta, &alpha}) {
        require(p->rows() == 1 && p->cols() == d, "graph_norm: affine parameters must be 1x" + std::to_string(d));
    }
    const auto& xv = x.value();
    std::vector<double> mean(d, 0.0);
    std::vector<double> stddev(d, 0.0);
    Matrix centered(n, d);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += xv(i, j);
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
        const double shift = alpha.value().data[j] * mean[j];
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            centered(i, j) = xv(i, j) - shift;
            var += centered(i, j) * centered(i, j);
        }
        stddev[j] = std::sqrt(var / static_cast<double>(n) + eps);
        for (std::size_t i = 0; i < n; ++i) {
            out(i, j) = gamma.value().data[j] * centered(i, j) / stddev[j] + beta.value().data[j];
        }
    }
    return tape.record(
        "graph_norm", std::move(out), {x, gamma, beta, alpha},
        [x, gamma, beta, alpha, mean = std::move(mean), stddev = std::move(stddev),
         centered = std::move(centered)](const Matrix& g) mutable {
            const std::size_t n = g.rows;
            const std::size_t d = g.cols;
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) {
                const double s = stddev[j];
                const double gam = gamma.value().data[j];
                double sum_g = 0.0;
                double sum_gc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    sum_g += g(i, j);
                    sum_gc += g(i, j) * centered(i, j);
                }
                if (beta.requires_grad()) beta.mutable_grad().data[j] += sum_g;
                if (gamma.requires_grad()) gamma.mutable_grad().data[j] += sum_gc / s;
                // dL/dc_i = γ/s · (g_i − c_i·Σ g c / (n s²))
                double sum_dc = 0.0;
                std::vector<double> dc(n);
                for (std::size_t i = 0; i < n; ++i) {
                    dc[i] = gam / s * (g(i, j) - centered(i, j) * sum_gc * inv_n / (s * s));
                    sum_dc += dc[i];
                }
                if (alpha.requires_grad()) alpha.mutable_grad().data[j] += -mean[j] * sum_dc;
                if (x.requires_grad()) {
                    auto& gx = x.mutable_grad();
                    const double shift = alpha.value().data[j] * inv_n * sum_dc;
                    for (std::size_t i = 0; i < n; ++i) gx(i, j) += dc[i] - shift;
                }
            }
        });
}

Tensor dropout(Tape& tape, const Tensor& x, double p, bool training, RngStream& rng) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must lie in [0, 1)");
    if (!training || p == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - p);
    Matrix mask(x.rows(), x.cols());
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask.data[i] = rng.uniform01() < p ? 0.0 : keep_scale;
        out.data[i] = x.value().data[i] * mask.data[i];
    }
    return tape.record("dropout", std::move(out), {x}, [x, mask = std::move(mask)](const Matrix& g) mutable {
        auto& gx = x.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] * mask.data[i];
    });
}

Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows(), "concat_cols: row counts differ (" + shape(a) + " vs " + shape(b) + ")");
    const std::size_t da = a.cols();
    Matrix out(a.rows(), da + b.cols());
    for (std::size_t i = 0; i < out.rows; ++i) {
        std::copy(a.value().row(i).begin(), a.value().row(i).end(), out.row(i).begin());
        std::copy(b.value().row(i).begin(), b.value().row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(da));
    }
    return tape.record("concat_cols", std::move(out), {a, b}, [a, b, da](const Matrix& g) mutable {
        for (std::size_t i = 0; i < g.rows; ++i) {
            const auto r = g.row(i);
            if (a.requires_grad()) {
                auto ga = a.mutable_grad().row(i);
                for (std::size_t j = 0; j < da; ++j) ga[j] += r[j];
            }
            if (b.requires_grad()) {
                auto gb = b.mutable_grad().row(i);
                for (std::size_t j = 0; j < gb.size(); ++j) gb[j] += r[da + j];
            }
        }
    });
}

Tensor segment_pool(Tape& tape, const Tensor& z, std::span<const std::vector<NodeId>> groups, PoolKind kind) {
    const std::size_t d = z.cols();
    for (const auto& grp : groups) {
        for (NodeId u : grp) require(u < z.rows(), "segment_pool: node id " + std::to_string(u) + " out of range");
    }
    if (kind == PoolKind::kSize) {
        Matrix out(groups.size(), 1);
        for (std::size_t gi = 0; gi < groups.size(); ++gi) out(gi, 0) = static_cast<double>(groups[gi].size());
        return tape.record("segment_pool_size", std::move(out), {}, {});
    }
    const auto& zv = z.value();
    Matrix out(groups.size(), d);
    std::vector<std::vector<NodeId>> argmax;
    if (kind == PoolKind::kMax) argmax.assign(groups.size(), std::vector<NodeId>(d, 0));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& grp = groups[gi];
        if (grp.empty()) continue;
        auto orow = out.row(gi);
        if (kind == PoolKind::kMax) {
            for (std::size_t j = 0; j < d; ++j) {
                // Strict comparison keeps the first maximiser in group order.
                NodeId best = grp[0];
                for (NodeId u : grp) {
                    if (zv(u, j) > zv(best, j)) best = u;
                }
                orow[j] = zv(best, j);
                argmax[gi][j] = best;
            }
            continue;
        }
        for (NodeId u : grp) {
            const auto r = zv.row(u);
            for (std::size_t j = 0; j < d; ++j) orow[j] += r[j];
        }
        if (kind == PoolKind::kMean) {
            for (auto& v : orow) v /= static_cast<double>(grp.size());
        }
    }
    std::vector<std::vector<NodeId>> owned(groups.begin(), groups.end());
    return tape.record("segment_pool", std::move(out), {z},
                       [z, kind, owned = std::move(owned), argmax = std::move(argmax)](const Matrix& g) mutable {
                           auto& gz = z.mutable_grad();
                           for (std::size_t gi = 0; gi < owned.size(); ++gi) {
                               const auto& grp = owned[gi];
                               if (grp.empty()) continue;
                               const auto grow = g.row(gi);
                               if (kind == PoolKind::kMax) {
                                   for (std::size_t j = 0; j < grow.size(); ++j) gz(argmax[gi][j], j) += grow[j];
                                   continue;
                               }
                               const double w = kind == PoolKind::kMean ? 1.0 / static_cast<double>(grp.size()) : 1.0;
                               for (NodeId u : grp) {
                                   auto r = gz.row(u);
                                   for (std::size_t j = 0; j < grow.size(); ++j) r[j] += w * grow[j];
                               }
                           }
                       });
}

Tensor sum_all(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (double v : x.value().data) s += v;
    return tape.record("sum_all", Matrix(1, 1, s), {x}, [x](const Matrix& g) mutable {
        auto& gx = x.mutable_grad();
        for (auto& v : gx.data) v += g.data[0];
    });
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const auto r = logits.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) z += (out(i, j) = std::exp(r[j] - mx));
        for (std::size_t j = 0; j < r.size(); ++j) out(i, j) /= z;
    }
    return out;
}

Matrix sigmoid(const Matrix& logits) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits.data[i];
        out.data[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return out;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const int> targets) {
    const std::size_t b = logits.rows();
    const std::size_t c = logits.cols();
    require(targets.size() == b, "softmax_cross_entropy: need one target per row");
    require(b > 0 && c > 0, "softmax_cross_entropy: empty logits");
    for (int t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= c) {
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(t) + " outside [0, " +
                                    std::to_string(c) + ")");
        }
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const auto r = logits.value().row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double v : r) z += std::exp(v - mx);
        loss += std::log(z) + mx - r[static_cast<std::size_t>(targets[i])];
    }
    loss /= static_cast<double>(b);
    std::vector<int> tg(targets.begin(), targets.end());
    return tape.record("softmax_cross_entropy", Matrix(1, 1, loss), {logits},
                       [logits, tg = std::move(tg)](const Matrix& g) mutable {
                           const Matrix p = softmax_rows(logits.value());
                           auto& gl = logits.mutable_grad();
                           const double scale = g.data[0] / static_cast<double>(p.rows);
                           for (std::size_t i = 0; i < p.rows; ++i) {
                               for (std::size_t j = 0; j < p.cols; ++j) {
                                   const double onehot = static_cast<int>(j) == tg[i] ? 1.0 : 0.0;
                                   gl(i, j) += scale * (p(i, j) - onehot);
                               }
                           }
                       });
}

Tensor bce_with_logits(Tape& tape, const Tensor& logits, const Matrix& targets) {
    require(targets.rows == logits.rows() && targets.cols == logits.cols(),
            "bce_with_logits: target shape must match logits " + shape(logits));
    require(targets.size() > 0, "bce_with_logits: empty logits");
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double x = logits.value().data[i];
        loss += std::max(x, 0.0) - x * targets.data[i] + std::log1p(std::exp(-std::abs(x)));
    }
    loss /= static_cast<double>(targets.size());
    return tape.record("bce_with_logits", Matrix(1, 1, loss), {logits}, [logits, targets](const Matrix& g) mutable {
        const Matrix s = sigmoid(logits.value());
        auto& gl = logits.mutable_grad();
        const double scale = g.data[0] / static_cast<double>(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) gl.data[i] += scale * (s.data[i] - targets.data[i]);
    });
}

}  // namespace ssnp
