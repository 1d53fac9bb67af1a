#pragma once
// Rank-1 spatial-temporal decomposition of one trial.
//
// X = sum_{i<M} a_i b_i^T + eps, stored as N = M + 1 components where the
// last one is always the residual eps (materialized even when ~0).

#include "taskdenoise/rng.hpp"
#include "taskdenoise/signal.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdn {

enum class DecompMethod { PCA, SVD, ICA };
enum class IcaNonlinearity { Tanh, Cube };

std::string_view to_string(DecompMethod m);
DecompMethod parse_decomp_method(std::string_view s);
std::string_view to_string(IcaNonlinearity g);
IcaNonlinearity parse_ica_nonlinearity(std::string_view s);

struct DecompConfig {
    DecompMethod method = DecompMethod::ICA;
    int ica_max_iter = 200;
    double ica_tol = 1e-4;
    IcaNonlinearity ica_nonlinearity = IcaNonlinearity::Tanh;
    // Remove per-channel means before PCA/ICA; the means land in the residual.
    bool center = true;
    // When false, an unconverged FastICA run keeps its last orthogonal unmixing
    // matrix and reports converged = false instead of throwing.
    bool ica_strict = true;

    void validate() const;
};

struct ConvergenceInfo {
    int iterations = 0;
    double final_delta = 0.0;
    bool converged = true;
};

class ComponentSet {
public:
    ComponentSet(std::vector<Mat> components, std::vector<Vec> spatial, std::vector<Vec> temporal,
                 DecompMethod method, double fs, ConvergenceInfo convergence = {});

    // N = M + 1; index M is the residual.
    std::size_t size() const noexcept { return components_.size(); }
    std::size_t factor_count() const noexcept { return spatial_.size(); }
    const Mat& component(std::size_t i) const { return components_.at(i); }
    const std::vector<Mat>& components() const noexcept { return components_; }
    const Mat& residual() const { return components_.back(); }
    const std::vector<Vec>& spatial() const noexcept { return spatial_; }
    const std::vector<Vec>& temporal() const noexcept { return temporal_; }
    DecompMethod method() const noexcept { return method_; }
    double fs() const noexcept { return fs_; }
    const ConvergenceInfo& convergence() const noexcept { return convergence_; }
    std::size_t channels() const { return static_cast<std::size_t>(components_.front().rows()); }
    std::size_t samples() const { return static_cast<std::size_t>(components_.front().cols()); }

    // Squared Frobenius norm of each component.
    std::vector<double> energies() const;

private:
    std::vector<Mat> components_;
    std::vector<Vec> spatial_;
    std::vector<Vec> temporal_;
    DecompMethod method_;
    double fs_;
    ConvergenceInfo convergence_;
};

ComponentSet decompose(const Trial& x, const DecompConfig& cfg, RngSeed seed);

// sum_i weights[i] * C_i
Mat reconstruct_matrix(const ComponentSet& cs, std::span<const double> weights);
Trial reconstruct(const ComponentSet& cs, std::span<const double> weights);

}  // namespace tdn
