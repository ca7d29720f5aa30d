#include "rflstd/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rflstd/errors.hpp"

namespace rflstd {

double Activation::operator()(double t) const {
    switch (kind) {
        case ActivationKind::Linear: return t;
        case ActivationKind::ReLU: return t > 0.0 ? t : 0.0;
        case ActivationKind::Abs: return std::abs(t);
        case ActivationKind::Sign: return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    }
    return t;
}

double Activation::lipschitz() const {
    return kind == ActivationKind::Sign ? std::numeric_limits<double>::infinity() : 1.0;
}

std::string_view Activation::name() const {
    switch (kind) {
        case ActivationKind::Linear: return "linear";
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::Abs: return "abs";
        case ActivationKind::Sign: return "sign";
    }
    return "unknown";
}

Activation Activation::parse(std::string_view name) {
    if (name == "linear") return {ActivationKind::Linear};
    if (name == "relu") return {ActivationKind::ReLU};
    if (name == "abs") return {ActivationKind::Abs};
    if (name == "sign") return {ActivationKind::Sign};
    throw ParameterError("unknown activation '" + std::string(name) + "'");
}

FeatureMap::FeatureMap(int num_features, int state_dim, Activation activation, std::uint64_t seed,
                       WeightTransform weight_transform)
    : activation_(activation), seed_(seed), identity_weights_(!weight_transform) {
    if (num_features < 1 || state_dim < 1) throw ParameterError("feature map needs N >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    weights_.resize(num_features, state_dim);
    for (int k = 0; k < num_features; ++k) {
        for (int j = 0; j < state_dim; ++j) {
            const double draw = normal(rng);
            weights_(k, j) = weight_transform ? weight_transform(draw) : draw;
        }
    }
}

Eigen::MatrixXd FeatureMap::apply(const Eigen::MatrixXd &A) const {
    if (A.cols() < 1) throw ParameterError("apply_features needs at least one column");
    if (A.rows() != weights_.cols()) {
        throw ParameterError("apply_features: input has " + std::to_string(A.rows()) + " rows, expected " +
                             std::to_string(weights_.cols()));
    }
    Eigen::MatrixXd out = weights_ * A;
    const Activation act = activation_;
    return out.unaryExpr([act](double t) { return act(t); });
}

double phi_closed_form(const Eigen::VectorXd &a, const Eigen::VectorXd &b, Activation activation) {
    if (a.size() != b.size()) throw ParameterError("phi_closed_form: dimension mismatch");
    const double dot = a.dot(b);
    if (activation.kind == ActivationKind::Linear) return dot;

    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw ParameterError("phi_closed_form: zero-norm input for an angle-based kernel");
    const double cosine = std::clamp(dot / (na * nb), -1.0, 1.0);
    const double sine = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
    constexpr double pi = std::numbers::pi;

    switch (activation.kind) {
        case ActivationKind::ReLU:
            return na * nb / (2.0 * pi) * (cosine * std::acos(-cosine) + sine);
        case ActivationKind::Abs:
            return 2.0 / pi * na * nb * (cosine * std::asin(cosine) + sine);
        case ActivationKind::Sign:
            return 2.0 / pi * std::asin(cosine);
        case ActivationKind::Linear:
            break;
    }
    return dot;
}

Eigen::MatrixXd phi_cross(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B, Activation activation) {
    if (A.rows() != B.rows()) throw ParameterError("phi_cross: dimension mismatch");
    Eigen::MatrixXd out(A.cols(), B.cols());
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        const Eigen::VectorXd bj = B.col(j);
        for (Eigen::Index i = 0; i < A.cols(); ++i) out(i, j) = phi_closed_form(A.col(i), bj, activation);
    }
    return out;
}

GramMatrix phi_gram(const Eigen::MatrixXd &S, Activation activation) {
    const auto q = S.cols();
    GramMatrix out(q, q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const Eigen::VectorXd sj = S.col(j);
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double value = phi_closed_form(S.col(i), sj, activation);
            out(i, j) = value;
            out(j, i) = value;
        }
    }
    return out;
}

MonteCarloEstimate phi_monte_carlo(const Eigen::VectorXd &a, const Eigen::VectorXd &b, Activation activation,
                                   int num_samples, std::uint64_t seed) {
    if (num_samples < 2) throw ParameterError("phi_monte_carlo needs at least two samples");
    if (a.size() != b.size()) throw ParameterError("phi_monte_carlo: dimension mismatch");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd w(a.size());
    // Welford accumulation.
    double mean = 0.0;
    double m2 = 0.0;
    for (int k = 0; k < num_samples; ++k) {
        for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = normal(rng);
        const double x = activation(w.dot(a)) * activation(w.dot(b));
        const double delta = x - mean;
        mean += delta / (k + 1);
        m2 += delta * (x - mean);
    }
    const double variance = m2 / (num_samples - 1);
    return {mean, std::sqrt(variance / num_samples)};
}

}  // namespace rflstd
