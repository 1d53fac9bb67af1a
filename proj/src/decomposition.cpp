#include "taskdenoise/decomposition.hpp"

#include "taskdenoise/error.hpp"
#include "taskdenoise/kernels.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace tdn {

namespace {

constexpr double kRankCutoff = 1e-12;

using DMat = Eigen::MatrixXd;

struct Factor {
    Vec a;
    Vec b;
};

// Flip so the largest-magnitude entry of a is positive.
void canonicalize_sign(Factor& f) {
    Eigen::Index arg = 0;
    f.a.cwiseAbs().maxCoeff(&arg);
    if (f.a(arg) < 0.0) {
        f.a = -f.a;
        f.b = -f.b;
    }
}

Vec channel_means(const Mat& x, bool center) {
    if (!center) return Vec::Zero(x.rows());
    return x.rowwise().mean();
}

// Eigenpairs of the channel covariance in descending order, truncated at the rank cutoff.
struct Eig {
    Vec values;
    DMat vectors;
};

Eig covariance_eig(const Mat& xc) {
    const double denom = static_cast<double>(xc.cols() - 1);
    DMat cov = (xc * xc.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<DMat> es(cov);
    if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
    const Eigen::Index c = cov.rows();
    Vec vals = es.eigenvalues().reverse();
    DMat vecs = es.eigenvectors().rowwise().reverse();
    const double top = vals(0);
    Eigen::Index keep = 0;
    if (top > 0.0) {
        while (keep < c && vals(keep) >= kRankCutoff * top) ++keep;
    }
    return {vals.head(keep), vecs.leftCols(keep)};
}

ComponentSet assemble(const Trial& x, std::vector<Factor> factors, DecompMethod method, ConvergenceInfo conv) {
    const Mat& data = x.data();
    std::vector<Mat> comps;
    std::vector<Vec> spatial;
    std::vector<Vec> temporal;
    comps.reserve(factors.size() + 1);
    Mat residual = data;
    for (auto& f : factors) {
        Mat ci = f.a * f.b.transpose();
        residual -= ci;
        comps.push_back(std::move(ci));
        spatial.push_back(std::move(f.a));
        temporal.push_back(std::move(f.b));
    }
    comps.push_back(std::move(residual));
    return ComponentSet(std::move(comps), std::move(spatial), std::move(temporal), method, x.fs(), conv);
}

ComponentSet decompose_pca(const Trial& x, const DecompConfig& cfg) {
    const Mat& data = x.data();
    const Vec mu = channel_means(data, cfg.center);
    const Mat xc = data.colwise() - mu;
    const Eig eig = covariance_eig(xc);
    std::vector<Factor> factors;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        Factor f{eig.vectors.col(i), Vec()};
        canonicalize_sign(f);
        f.b = xc.transpose() * f.a;
        factors.push_back(std::move(f));
    }
    return assemble(x, std::move(factors), DecompMethod::PCA, {});
}

ComponentSet decompose_svd(const Trial& x) {
    const DMat data = x.data();
    Eigen::BDCSVD<DMat> svd(data, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    std::vector<Factor> factors;
    const Eigen::Index cap = std::min<Eigen::Index>(sv.size(), data.rows());
    const double top = sv.size() ? sv(0) : 0.0;
    for (Eigen::Index i = 0; i < cap; ++i) {
        if (!(top > 0.0) || sv(i) * sv(i) < kRankCutoff * top * top) break;
        Factor f{svd.matrixU().col(i), svd.matrixV().col(i) * sv(i)};
        canonicalize_sign(f);
        factors.push_back(std::move(f));
    }
    return assemble(x, std::move(factors), DecompMethod::SVD, {});
}

// (W W^T)^{-1/2} W
DMat symmetric_decorrelation(const DMat& w) {
    Eigen::SelfAdjointEigenSolver<DMat> es(w * w.transpose());
    const Vec d = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose() * w;
}

ComponentSet decompose_ica(const Trial& x, const DecompConfig& cfg, RngSeed seed) {
    const Mat& data = x.data();
    const Vec mu = channel_means(data, cfg.center);
    const Mat xc = data.colwise() - mu;
    const Eig eig = covariance_eig(xc);
    const Eigen::Index r = eig.values.size();
    if (r == 0) return assemble(x, {}, DecompMethod::ICA, {});

    const Vec sqrt_d = eig.values.cwiseSqrt();
    const DMat whiten = sqrt_d.cwiseInverse().asDiagonal() * eig.vectors.transpose();  // r x C
    const DMat z = whiten * xc;                                                        // r x T
    const double inv_t = 1.0 / static_cast<double>(z.cols());

    auto eng = make_engine(seed);
    DMat w(r, r);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(eng);
    w = symmetric_decorrelation(w);

    ConvergenceInfo conv;
    conv.converged = false;
    double delta = std::numeric_limits<double>::infinity();
    DMat g(r, z.cols());
    Vec gp_mean(r);
    for (int it = 1; it <= cfg.ica_max_iter; ++it) {
        const DMat y = w * z;
        if (cfg.ica_nonlinearity == IcaNonlinearity::Tanh) {
            g = y.array().tanh().matrix();
            gp_mean = (1.0 - g.array().square()).matrix().rowwise().mean();
        } else {
            g = y.array().cube().matrix();
            gp_mean = (3.0 * y.array().square()).matrix().rowwise().mean();
        }
        DMat w_new = (g * z.transpose()) * inv_t - gp_mean.asDiagonal() * w;
        w_new = symmetric_decorrelation(w_new);
        delta = ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
        w = std::move(w_new);
        conv.iterations = it;
        if (delta < cfg.ica_tol) {
            conv.converged = true;
            break;
        }
    }
    conv.final_delta = delta;
    if (!conv.converged && cfg.ica_strict) {
        throw ConvergenceError("FastICA did not converge after " + std::to_string(cfg.ica_max_iter) +
                                   " iterations (last delta " + std::to_string(delta) + ")",
                               delta, conv.iterations);
    }

    if (!conv.converged) {
        spdlog::debug("FastICA kept unconverged unmixing after {} iterations (delta {:.3g})", conv.iterations, delta);
    }

    const DMat sources = w * z;                                             // r x T
    const DMat mixing = eig.vectors * sqrt_d.asDiagonal() * w.transpose();  // C x r
    std::vector<Factor> factors;
    std::vector<double> energy;
    for (Eigen::Index i = 0; i < r; ++i) {
        Factor f{mixing.col(i), sources.row(i).transpose()};
        energy.push_back(f.a.norm() * f.b.norm());
        factors.push_back(std::move(f));
    }
    std::vector<std::size_t> order(factors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });
    std::vector<Factor> sorted;
    for (auto i : order) {
        canonicalize_sign(factors[i]);
        sorted.push_back(std::move(factors[i]));
    }
    return assemble(x, std::move(sorted), DecompMethod::ICA, conv);
}

}  // namespace

std::string_view to_string(DecompMethod m) {
    switch (m) {
        case DecompMethod::PCA: return "pca";
        case DecompMethod::SVD: return "svd";
        case DecompMethod::ICA: return "ica";
    }
    return "?";
}

DecompMethod parse_decomp_method(std::string_view s) {
    if (s == "pca" || s == "PCA") return DecompMethod::PCA;
    if (s == "svd" || s == "SVD") return DecompMethod::SVD;
    if (s == "ica" || s == "ICA") return DecompMethod::ICA;
    throw ValidationError("unknown decomposition method '" + std::string(s) + "'");
}

std::string_view to_string(IcaNonlinearity g) { return g == IcaNonlinearity::Tanh ? "tanh" : "cube"; }

IcaNonlinearity parse_ica_nonlinearity(std::string_view s) {
    if (s == "tanh") return IcaNonlinearity::Tanh;
    if (s == "cube") return IcaNonlinearity::Cube;
    throw ValidationError("unknown ICA nonlinearity '" + std::string(s) + "'");
}

void DecompConfig::validate() const {
    if (!(ica_tol > 0.0)) throw ValidationError("ica_tol must be positive");
    if (ica_max_iter < 1) throw ValidationError("ica_max_iter must be >= 1");
}

ComponentSet::ComponentSet(std::vector<Mat> components, std::vector<Vec> spatial, std::vector<Vec> temporal,
                           DecompMethod method, double fs, ConvergenceInfo convergence)
    : components_(std::move(components)),
      spatial_(std::move(spatial)),
      temporal_(std::move(temporal)),
      method_(method),
      fs_(fs),
      convergence_(convergence) {
    if (components_.empty()) throw ValidationError("component set needs at least the residual");
    if (spatial_.size() != temporal_.size() || components_.size() != spatial_.size() + 1) {
        throw ValidationError("component set requires N = M + 1");
    }
    const auto rows = components_.front().rows();
    const auto cols = components_.front().cols();
    for (const auto& c : components_) {
        if (c.rows() != rows || c.cols() != cols) throw ValidationError("component shapes differ");
    }
}

std::vector<double> ComponentSet::energies() const {
    std::vector<double> e;
    e.reserve(components_.size());
    for (const auto& c : components_) e.push_back(kernels::sum_sq({c.data(), static_cast<std::size_t>(c.size())}));
    return e;
}

ComponentSet decompose(const Trial& x, const DecompConfig& cfg, RngSeed seed) {
    cfg.validate();
    if (x.samples() <= x.channels()) {
        spdlog::warn("decompose: T={} <= C={}; covariance estimates will be poor", x.samples(), x.channels());
    }
    switch (cfg.method) {
        case DecompMethod::PCA: return decompose_pca(x, cfg);
        case DecompMethod::SVD: return decompose_svd(x);
        case DecompMethod::ICA: return decompose_ica(x, cfg, seed);
    }
    throw ValidationError("unknown decomposition method");
}

Mat reconstruct_matrix(const ComponentSet& cs, std::span<const double> weights) {
    if (weights.size() != cs.size()) {
        throw ValidationError("expected " + std::to_string(cs.size()) + " weights, got " +
                              std::to_string(weights.size()));
    }
    Mat out = Mat::Zero(static_cast<Eigen::Index>(cs.channels()), static_cast<Eigen::Index>(cs.samples()));
    const auto n = static_cast<std::size_t>(out.size());
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!std::isfinite(weights[i])) throw ValidationError("weight " + std::to_string(i) + " is not finite");
        if (weights[i] != 0.0) k.axpy(weights[i], cs.component(i).data(), out.data(), n);
    }
    return out;
}

Trial reconstruct(const ComponentSet& cs, std::span<const double> weights) {
    return Trial(reconstruct_matrix(cs, weights), cs.fs());
}

}  // namespace tdn
