#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssnp/model.hpp"
#include "ssnp/tensor.hpp"

namespace ssnp {

/// |a - b| / max(|a|, |b|, floor). The floor keeps entries whose true
/// gradient is ~0 from dominating through round-off.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Central-difference derivative of `loss` with respect to every entry of
/// `param`, perturbing the value in place and restoring it.
Matrix numeric_gradient(const std::function<double()>& loss, Tensor& param, double step = 1e-6);

struct ParamError {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    LayerKind kind = LayerKind::kNn;
    int trials = 0;
    double max_rel_error = 0.0;
    std::vector<ParamError> per_param;  // worst error per parameter name over all trials
    bool passed(double tol = 1e-4) const { return max_rel_error < tol; }
};

/// Finite-difference check of every model parameter on random 12-node graphs
/// (dropout off, sum pooling, two layers, cross-entropy loss).
GradCheckReport grad_check_model(LayerKind kind, int trials, std::uint64_t seed, double step = 1e-6);

}  // namespace ssnp
