#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "rflstd/errors.hpp"
#include "rflstd/theory.hpp"

namespace rflstd {

namespace {

using Quad = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<113, boost::multiprecision::digit_base_2>, boost::multiprecision::et_off>;
using QuadMatrix = Eigen::Matrix<Quad, Eigen::Dynamic, Eigen::Dynamic>;
using QuadVector = Eigen::Matrix<Quad, Eigen::Dynamic, 1>;

Quad trace_product(const QuadMatrix &X, const QuadMatrix &Y) { return X.cwiseProduct(Y.transpose()).sum(); }

}  // namespace

double true_msbe_correction_extended(const TheoryInputs &in, const DeterministicEquivalent &de) {
    const int p = in.p();
    const int m = in.m();
    const Quad c = Quad(de.N) / Quad(m) / (Quad(1) + Quad(de.delta));

    const QuadMatrix phi_s = in.phi_states.cast<Quad>();
    const QuadMatrix A = in.ops.A_hat.cast<Quad>();
    QuadMatrix F(p, m);
    for (int j = 0; j < m; ++j) F.col(j) = phi_s.col(in.ops.visited_ids[j]);
    QuadMatrix phi_hat(m, m);
    for (int i = 0; i < m; ++i) phi_hat.row(i) = F.row(in.ops.visited_ids[i]);

    const QuadVector pi = in.pi.cast<Quad>();
    const QuadMatrix K = QuadMatrix::Identity(p, p) - Quad(in.ops.discount) * in.transition.cast<Quad>();
    const QuadMatrix lambda_p = K.transpose() * pi.asDiagonal() * K;

    QuadMatrix system = c * phi_hat * A;
    system.diagonal().array() += Quad(de.lambda);
    const QuadMatrix T = system.partialPivLu().inverse();
    const QuadMatrix M = A * T;

    // Theta_S Psi_2 Theta_S^T = c^3 F M Phi_hat M^T F^T, Theta_S K^T Psi_S = c^2 F M F^T, Psi_S = c Phi_S.
    const QuadMatrix F_M = F * M;
    const Quad first = c * c * c * trace_product(lambda_p, F_M * phi_hat * F_M.transpose());
    const Quad second = Quad(2) * c * c * trace_product(lambda_p, F_M * F.transpose());
    const Quad third = c * trace_product(lambda_p, phi_s);
    const Quad bracket = first - second + third;
    return static_cast<double>(bracket / Quad(de.N)) / de.denominator * de.psi1_norm / in.n();
}

}  // namespace rflstd
