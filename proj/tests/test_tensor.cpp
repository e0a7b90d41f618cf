#include <doctest.h>

#include <cmath>
#include <functional>

#include "helpers.hpp"
#include "ssnp/gradcheck.hpp"
#include "ssnp/tensor.hpp"

using namespace ssnp;

namespace {

Matrix mat(std::size_t r, std::size_t c, std::vector<double> v) {
    Matrix m(r, c);
    m.data = std::move(v);
    return m;
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    RngStream rng({.base_seed = seed, .domain = StreamDomain::kTest});
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(-1.5, 1.5);
    return m;
}

// Scalar loss = sum(op(inputs) ∘ weights); compares the tape gradient of each
// input with central differences.
double max_grad_error(const std::function<Tensor(Tape&, std::vector<Tensor>&)>& op, std::vector<Tensor> inputs,
                      std::uint64_t seed = 99) {
    Matrix weights;
    const auto loss_of = [&](Tape& tape) {
        Tensor out = op(tape, inputs);
        if (weights.rows == 0) weights = random_matrix(out.rows(), out.cols(), seed);
        Tensor w = Tensor::constant(weights);
        Tensor prod = tape.record("weight", [&] {
            Matrix m = out.value();
            for (std::size_t i = 0; i < m.size(); ++i) m.data[i] *= weights.data[i];
            return m;
        }(), {out}, [out, &weights](const Matrix& g) {
            auto& go = out.mutable_grad();
            for (std::size_t i = 0; i < g.size(); ++i) go.data[i] += g.data[i] * weights.data[i];
        });
        return sum_all(tape, prod);
    };
    Tape tape;
    const Tensor loss = loss_of(tape);
    for (auto& t : inputs) t.zero_grad();
    backward(tape, loss);
    double worst = 0.0;
    for (auto& t : inputs) {
        const Matrix analytic = t.grad();
        const auto numeric = numeric_gradient(
            [&] {
                Tape inference(Tape::Mode::kInference);
                return loss_of(inference).item();
            },
            t);
        for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic.data[i], numeric.data[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("matmul values") {
    Tape tape;
    const auto eye = Tensor::constant(mat(2, 2, {1, 0, 0, 1}));
    const auto b = Tensor::constant(mat(2, 2, {1, 2, 3, 4}));
    CHECK(matmul(tape, eye, b).value() == b.value());
    const auto row = Tensor::constant(mat(1, 2, {1, 2}));
    const auto col = Tensor::constant(mat(2, 1, {3, 4}));
    CHECK(matmul(tape, row, col).item() == 11.0);
    CHECK_THROWS_AS((void)matmul(tape, row, row), ShapeError);
}

TEST_CASE("matmul gradient matches central differences") {
    auto a = Tensor::parameter(random_matrix(3, 4, 1));
    auto b = Tensor::parameter(random_matrix(4, 2, 2));
    const double err = max_grad_error([](Tape& t, std::vector<Tensor>& in) { return matmul(t, in[0], in[1]); }, {a, b});
    CHECK(err < 1e-6);
}

TEST_CASE("add_bias broadcasts and sums its gradient over rows") {
    auto x = Tensor::parameter(random_matrix(3, 2, 3));
    auto bias = Tensor::parameter(random_matrix(1, 2, 4));
    const double err = max_grad_error([](Tape& t, std::vector<Tensor>& in) { return add_bias(t, in[0], in[1]); }, {x, bias});
    CHECK(err < 1e-6);
}

TEST_CASE("spmm_self values") {
    Tape tape;
    const auto edgeless = CsrGraph::from_edges(3, std::vector<std::pair<NodeId, NodeId>>{});
    const auto h = Tensor::constant(mat(3, 1, {1, 10, 100}));
    CHECK(spmm_self(tape, edgeless, h).value() == h.value());
    const auto ones = Tensor::constant(Matrix(3, 1, 1.0));
    CHECK(spmm_self(tape, ssnp::testing::triangle(), ones).value() == Matrix(3, 1, 3.0));
    CHECK(spmm_self(tape, ssnp::testing::path_graph(3), h).value() == mat(3, 1, {11, 111, 110}));
}

TEST_CASE("spmm_self gradients for both aggregations") {
    const auto g = ssnp::testing::star(4);
    for (auto agg : {Aggregation::kSum, Aggregation::kSymNormalized}) {
        auto h = Tensor::parameter(random_matrix(5, 3, 5));
        const double err = max_grad_error([&](Tape& t, std::vector<Tensor>& in) { return spmm_self(t, g, in[0], agg); }, {h});
        CHECK(err < 1e-6);
    }
}

TEST_CASE("elu values and gradient") {
    Tape tape;
    const auto x = Tensor::constant(mat(1, 3, {0.0, 2.0, -1.0}));
    const auto y = elu(tape, x).value();
    CHECK(y.data[0] == 0.0);
    CHECK(y.data[1] == 2.0);
    CHECK(y.data[2] == doctest::Approx(-0.63212).epsilon(1e-5));

    RngStream rng({.base_seed = 17, .domain = StreamDomain::kTest});
    Matrix pts(10, 10);
    for (auto& v : pts.data) {
        do {
            v = rng.uniform(-4.0, 4.0);
        } while (std::abs(v) < 1e-3);
    }
    auto p = Tensor::parameter(pts);
    Tape t2;
    backward(t2, sum_all(t2, elu(t2, p)));
    const auto scalar_elu = [](double v) { return v > 0.0 ? v : std::expm1(v); };
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double v = pts.data[i];
        const double numeric = (scalar_elu(v + 1e-6) - scalar_elu(v - 1e-6)) / 2e-6;
        worst = std::max(worst, relative_error(p.grad().data[i], numeric));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("graph_norm values") {
    Tape tape;
    const auto one = Tensor::constant(Matrix(1, 1, 1.0));
    const auto zero = Tensor::constant(Matrix(1, 1, 0.0));
    const auto constant_col = Tensor::constant(Matrix(4, 1, 2.5));
    const Matrix centred = graph_norm(tape, constant_col, one, zero, one).value();
    for (double v : centred.data) CHECK(v == 0.0);

    // α = 0: no centring; the column [1, -1] has unit second moment.
    const auto x = Tensor::constant(mat(2, 1, {1, -1}));
    const auto y = graph_norm(tape, x, one, zero, zero).value();
    CHECK(y.data[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(y.data[1] == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("graph_norm gradients for x, gamma, beta and alpha") {
    auto x = Tensor::parameter(random_matrix(6, 3, 6));
    auto gamma = Tensor::parameter(random_matrix(1, 3, 7));
    auto beta = Tensor::parameter(random_matrix(1, 3, 8));
    auto alpha = Tensor::parameter(random_matrix(1, 3, 9));
    const double err = max_grad_error(
        [](Tape& t, std::vector<Tensor>& in) { return graph_norm(t, in[0], in[1], in[2], in[3]); }, {x, gamma, beta, alpha});
    CHECK(err < 1e-5);
}

TEST_CASE("dropout") {
    Tape tape;
    RngStream rng({.base_seed = 1, .domain = StreamDomain::kDropout});
    const auto x = Tensor::constant(random_matrix(4, 4, 10));
    CHECK(dropout(tape, x, 0.0, true, rng).value() == x.value());
    CHECK(dropout(tape, x, 0.9, false, rng).value() == x.value());

    Matrix big(1000, 100, 1.0);
    const auto y = dropout(tape, Tensor::constant(big), 0.5, true, rng).value();
    std::size_t survivors = 0;
    double mean = 0.0;
    for (double v : y.data) {
        survivors += v != 0.0;
        mean += v;
    }
    mean /= static_cast<double>(y.size());
    CHECK(static_cast<double>(survivors) / static_cast<double>(y.size()) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("dropout gradient follows the mask") {
    auto x = Tensor::parameter(random_matrix(5, 5, 11));
    const double err = max_grad_error(
        [](Tape& t, std::vector<Tensor>& in) {
            RngStream rng({.base_seed = 2, .domain = StreamDomain::kDropout});
            return dropout(t, in[0], 0.3, true, rng);
        },
        {x});
    CHECK(err < 1e-6);
}

TEST_CASE("concat_cols values and gradient routing") {
    Tape tape;
    const auto joined = concat_cols(tape, Tensor::constant(mat(1, 1, {1})), Tensor::constant(mat(1, 1, {2})));
    CHECK(joined.value() == mat(1, 2, {1, 2}));

    auto a = Tensor::parameter(random_matrix(3, 2, 12));
    auto b = Tensor::parameter(random_matrix(3, 1, 13));
    Tape t2;
    auto cat = concat_cols(t2, a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cat.value()(i, 0) == a.value()(i, 0));
        CHECK(cat.value()(i, 1) == a.value()(i, 1));
        CHECK(cat.value()(i, 2) == b.value()(i, 0));
    }
    backward(t2, sum_all(t2, cat));
    CHECK(a.grad() == Matrix(3, 2, 1.0));
    CHECK(b.grad() == Matrix(3, 1, 1.0));
}

TEST_CASE("segment_pool values") {
    Tape tape;
    const auto ones = Tensor::constant(Matrix(3, 1, 1.0));
    const std::vector<std::vector<NodeId>> all{{0, 1, 2}};
    CHECK(segment_pool(tape, ones, all, PoolKind::kSum).item() == 3.0);

    const auto z = Tensor::constant(mat(2, 1, {2, 4}));
    const std::vector<std::vector<NodeId>> both{{0, 1}};
    CHECK(segment_pool(tape, z, both, PoolKind::kMean).item() == 3.0);
    CHECK(segment_pool(tape, z, both, PoolKind::kMax).item() == 4.0);
    CHECK(segment_pool(tape, z, both, PoolKind::kSize).item() == 2.0);

    const std::vector<std::vector<NodeId>> empty{{}};
    for (auto kind : {PoolKind::kSum, PoolKind::kMean, PoolKind::kMax, PoolKind::kSize}) {
        CHECK(segment_pool(tape, z, empty, kind).item() == 0.0);
    }
}

TEST_CASE("segment_pool gradients") {
    const std::vector<std::vector<NodeId>> groups{{0, 2, 3}, {1}, {}, {4, 0}};
    for (auto kind : {PoolKind::kSum, PoolKind::kMean, PoolKind::kMax}) {
        auto z = Tensor::parameter(random_matrix(5, 3, 14));
        const double err =
            max_grad_error([&](Tape& t, std::vector<Tensor>& in) { return segment_pool(t, in[0], groups, kind); }, {z});
        CHECK(err < 1e-6);
    }
}

TEST_CASE("max pooling breaks ties toward the first member") {
    auto z = Tensor::parameter(mat(3, 1, {5, 5, 1}));
    Tape tape;
    const std::vector<std::vector<NodeId>> g{{1, 0, 2}};
    backward(tape, sum_all(tape, segment_pool(tape, z, g, PoolKind::kMax)));
    CHECK(z.grad() == mat(3, 1, {0, 1, 0}));
}

TEST_CASE("softmax_cross_entropy") {
    Tape tape;
    const std::vector<int> t0{0};
    CHECK(softmax_cross_entropy(tape, Tensor::constant(Matrix(1, 4, 0.3)), t0).item() ==
          doctest::Approx(1.38629).epsilon(1e-5));
    CHECK(softmax_cross_entropy(tape, Tensor::constant(mat(1, 2, {10, -10})), t0).item() ==
          doctest::Approx(2.06115e-9).epsilon(1e-4));
    const std::vector<int> bad{2};
    CHECK_THROWS((void)softmax_cross_entropy(tape, Tensor::constant(Matrix(1, 2)), bad));

    const std::vector<int> targets{2, 0, 1};
    auto logits = Tensor::parameter(random_matrix(3, 3, 15));
    Tape t2;
    auto loss = softmax_cross_entropy(t2, logits, targets);
    backward(t2, loss);
    const auto numeric = numeric_gradient(
        [&] {
            Tape inf(Tape::Mode::kInference);
            return softmax_cross_entropy(inf, logits, targets).item();
        },
        logits);
    for (std::size_t i = 0; i < numeric.size(); ++i) CHECK(relative_error(logits.grad().data[i], numeric.data[i]) < 1e-6);
}

TEST_CASE("bce_with_logits") {
    Tape tape;
    const Matrix zero_t(1, 1, 0.0);
    const Matrix one_t(1, 1, 1.0);
    CHECK(bce_with_logits(tape, Tensor::constant(Matrix(1, 1, 0.0)), zero_t).item() == doctest::Approx(std::log(2.0)));
    CHECK(bce_with_logits(tape, Tensor::constant(Matrix(1, 1, 0.0)), one_t).item() == doctest::Approx(std::log(2.0)));
    CHECK(bce_with_logits(tape, Tensor::constant(Matrix(1, 1, 20.0)), one_t).item() ==
          doctest::Approx(2.06115e-9).epsilon(1e-4));

    const Matrix targets = mat(2, 3, {1, 0, 1, 0, 0, 1});
    auto logits = Tensor::parameter(random_matrix(2, 3, 16));
    Tape t2;
    backward(t2, bce_with_logits(t2, logits, targets));
    const auto s = sigmoid(logits.value());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(logits.grad().data[i] == doctest::Approx((s.data[i] - targets.data[i]) / 6.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax_rows") {
    const auto p = softmax_rows(mat(1, 2, {1, -1}));
    CHECK(p.data[0] == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(p.data[1] == doctest::Approx(0.1192).epsilon(1e-3));
}

TEST_CASE("tape lifecycle") {
    SUBCASE("sum of a parameter has unit gradient") {
        auto w = Tensor::parameter(random_matrix(2, 2, 18));
        Tape tape;
        backward(tape, sum_all(tape, w));
        CHECK(w.grad() == Matrix(2, 2, 1.0));
    }
    SUBCASE("second backward without a new forward is an error") {
        auto w = Tensor::parameter(random_matrix(2, 2, 18));
        Tape tape;
        auto loss = sum_all(tape, w);
        backward(tape, loss);
        CHECK_THROWS_AS(backward(tape, loss), std::logic_error);
    }
    SUBCASE("non-scalar loss is rejected") {
        auto w = Tensor::parameter(random_matrix(2, 2, 18));
        Tape tape;
        auto y = elu(tape, w);
        CHECK_THROWS(backward(tape, y));
    }
    SUBCASE("gradients accumulate across tapes until cleared") {
        auto w = Tensor::parameter(random_matrix(1, 3, 19));
        for (int i = 0; i < 2; ++i) {
            Tape tape;
            backward(tape, sum_all(tape, w));
        }
        CHECK(w.grad() == Matrix(1, 3, 2.0));
        w.zero_grad();
        CHECK(w.grad() == Matrix(1, 3, 0.0));
    }
    SUBCASE("inference tape records nothing") {
        auto w = Tensor::parameter(random_matrix(2, 2, 18));
        Tape tape(Tape::Mode::kInference);
        (void)elu(tape, w);
        CHECK(tape.size() == 0);
    }
}

TEST_CASE("non-finite values raise NumericError") {
    Tape tape;
    const auto huge = Tensor::constant(Matrix(1, 1, 1e308));
    CHECK_THROWS_AS((void)matmul(tape, huge, Tensor::constant(Matrix(1, 1, 1e10))), NumericError);
}
