#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"
#include "taskdenoise/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tdn::nn {

double clip_gradients(Gradients& g, double threshold) {
    if (!(threshold > 0.0)) throw ValidationError("clip threshold must be positive");
    const double norm = g.global_norm();
    if (!std::isfinite(norm)) throw NumericalError("non-finite gradient norm");
    if (norm > threshold) {
        const double s = threshold / norm;
        for (int b = 0; b < kBlockCount; ++b) {
            if (g.present[b]) kernels::scale(s, g.g[b]);
        }
    }
    return norm;
}

void max_norm_project(ModelParams& p, double rho, Block only) {
    if (!(rho > 0.0)) throw ValidationError("max-norm radius must be positive");
    const auto& ro = p.block(only);
    bool any = false;
    for (const auto& s : ro.weights) {
        for (std::size_t r = 0; r < s.rows && !any; ++r) {
            any = kernels::sum_sq({ro.values.data() + s.offset + r * s.cols, s.cols}) > rho * rho;
        }
    }
    if (!any) return;
    auto& blk = p.mutable_block(only);
    for (const auto& s : blk.weights) {
        for (std::size_t r = 0; r < s.rows; ++r) {
            double* row = blk.values.data() + s.offset + r * s.cols;
            const double n = std::sqrt(kernels::sum_sq({row, s.cols}));
            if (n > rho) kernels::scale(rho / n, {row, s.cols});
        }
    }
}

void max_norm_project(ModelParams& p, double rho) {
    for (int b = 0; b < kBlockCount; ++b) max_norm_project(p, rho, static_cast<Block>(b));
}

OptimizerState OptimizerState::for_params(const ModelParams& p, AdamWConfig cfg) {
    OptimizerState st;
    st.config = cfg;
    for (int b = 0; b < kBlockCount; ++b) {
        const auto n = p.block(static_cast<Block>(b)).values.size();
        st.blocks[b].m.assign(n, 0.0);
        st.blocks[b].v.assign(n, 0.0);
        st.blocks[b].v_max.assign(n, 0.0);
    }
    return st;
}

void adamw_step(ModelParams& p, const Gradients& g, OptimizerState& st, double lr) {
    const auto& c = st.config;
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be finite and >= 0");
    for (int b = 0; b < kBlockCount; ++b) {
        if (!g.present[b]) continue;
        const auto block = static_cast<Block>(b);
        auto& s = st.blocks[b];
        const auto& grad = g.g[b];
        if (grad.size() != p.block(block).values.size() || s.m.size() != grad.size()) {
            throw ValidationError("optimizer state does not match parameter block");
        }
        s.step += 1;
        const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
        const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
        const double step_size = lr / bc1;
        const double sqrt_bc2 = std::sqrt(bc2);
        const double decay = 1.0 - lr * c.weight_decay;
        auto& vals = p.mutable_block(block).values;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double gi = grad[i];
            s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * gi;
            s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * gi * gi;
            s.v_max[i] = std::max(s.v_max[i], s.v[i]);
            const double denom = std::sqrt(s.v_max[i]) / sqrt_bc2 + c.eps;
            const double next = vals[i] * decay - step_size * s.m[i] / denom;
            if (!std::isfinite(next)) {
                throw NumericalError("non-finite AdamW update in block " + std::string(to_string(block)));
            }
            vals[i] = next;
        }
        if (c.max_norm > 0.0) max_norm_project(p, c.max_norm, block);
    }
}

double cosine_lr(std::int64_t t, std::int64_t total, double lr0, double alpha) {
    if (total <= 0) return lr0;
    const double frac = std::clamp(static_cast<double>(t) / static_cast<double>(total), 0.0, 1.0);
    return lr0 * ((1.0 - alpha) + alpha * 0.5 * (1.0 + std::cos(std::numbers::pi * frac)));
}

}  // namespace tdn::nn
