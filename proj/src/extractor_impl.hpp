#pragma once

#include "taskdenoise/nnet.hpp"

namespace tdn::nn::detail {

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
// Derivative given the pre-activation.
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

Vec mlp_forward(const ModelParams& p, const Mat& code, TrainableCache* cache);
Mat mlp_backward(const ModelParams& p, const TrainableCache& cache, const Vec& dfeat, std::vector<double>* grads,
                 bool want_input_grad);

Vec cnn_forward(const ModelParams& p, const Mat& x, TrainableCache* cache);
Mat cnn_backward(const ModelParams& p, const TrainableCache& cache, const Vec& dfeat, std::vector<double>* grads,
                 bool want_input_grad);

}  // namespace tdn::nn::detail
