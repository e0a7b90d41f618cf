#pragma once

#include <vector>

#include "ssnp/params.hpp"

namespace ssnp {

/// Adam with bias correction. Moment buffers are allocated on first step.
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore& params, double lr);
    long steps() const { return t_; }

private:
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

struct PlateauOptions {
    double factor = 0.5;
    int patience = 10;
    double min_lr = 1e-5;
    double threshold = 1e-4;  // absolute improvement that resets the counter
};

/// Shrinks the learning rate when the monitored loss stops improving.
class ReduceLrOnPlateau {
public:
    ReduceLrOnPlateau(double initial_lr, PlateauOptions opts) : lr_(initial_lr), opts_(opts) {}

    /// Call once per epoch; returns the learning rate for the next epoch.
    double step(double val_loss);
    double lr() const { return lr_; }

private:
    double lr_;
    PlateauOptions opts_;
    double best_ = 0.0;
    bool has_best_ = false;
    int bad_epochs_ = 0;
};

}  // namespace ssnp
