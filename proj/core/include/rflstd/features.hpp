#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace rflstd {

enum class ActivationKind { Linear, ReLU, Abs, Sign };

/// Pointwise activation sigma applied to W s.
struct Activation {
    ActivationKind kind = ActivationKind::ReLU;

    [[nodiscard]] double operator()(double t) const;

    /// Lipschitz constant K_sigma; meaningless when !has_lipschitz_bound().
    [[nodiscard]] double lipschitz() const;

    /// Sign is discontinuous: closed-form kernel only.
    [[nodiscard]] bool has_lipschitz_bound() const { return kind != ActivationKind::Sign; }

    /// True when the closed-form kernel is defined through the angle between inputs.
    [[nodiscard]] bool angle_based() const { return kind != ActivationKind::Linear; }

    [[nodiscard]] std::string_view name() const;

    static Activation parse(std::string_view name);
};

/// Transform phi applied entrywise to the Gaussian draws behind W. Empty means identity.
using WeightTransform = std::function<double(double)>;

/// RF(s) = sigma(W s) with W an N x d matrix drawn once from a seed.
///
/// Row k of W consumes the generator after rows 0..k-1, so maps sharing a seed
/// but with different N share their leading rows.
class FeatureMap {
public:
    FeatureMap(int num_features, int state_dim, Activation activation, std::uint64_t seed,
               WeightTransform weight_transform = {});

    /// sigma(W A), one output column per column of A.
    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd &A) const;

    [[nodiscard]] const Eigen::MatrixXd &weights() const { return weights_; }
    [[nodiscard]] const Activation &activation() const { return activation_; }
    [[nodiscard]] int num_features() const { return static_cast<int>(weights_.rows()); }
    [[nodiscard]] int state_dim() const { return static_cast<int>(weights_.cols()); }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] bool identity_weights() const { return identity_weights_; }

private:
    Eigen::MatrixXd weights_;
    Activation activation_;
    std::uint64_t seed_;
    bool identity_weights_;
};

/// E_w[sigma(w^T a) sigma(w^T b)] for w ~ N(0, I_d), in closed form.
/// Cosines are clamped to [-1, 1]. Zero inputs to angle-based kernels throw ParameterError.
double phi_closed_form(const Eigen::VectorXd &a, const Eigen::VectorXd &b, Activation activation);

using GramMatrix = Eigen::MatrixXd;

/// Expected Gram matrix over the columns of S (symmetrized).
GramMatrix phi_gram(const Eigen::MatrixXd &S, Activation activation);

/// Cross Gram block: entry (i, j) is phi_closed_form(A_i, B_j).
Eigen::MatrixXd phi_cross(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B, Activation activation);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of sigma(w^T a) sigma(w^T b).
MonteCarloEstimate phi_monte_carlo(const Eigen::VectorXd &a, const Eigen::VectorXd &b, Activation activation,
                                   int num_samples, std::uint64_t seed);

}  // namespace rflstd
