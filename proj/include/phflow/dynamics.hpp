#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "phflow/errors.hpp"
#include "phflow/models.hpp"

namespace phflow {

// ---------------------------------------------------------------------------
// State of the linearized flow: Jacobi field value and covariant derivative.
// ---------------------------------------------------------------------------
struct TangentPair {
    Eigen::VectorXd eta;
    Eigen::VectorXd sigma;

    int dim() const { return static_cast<int>(eta.size()); }
};

inline TangentPair make_pair(Eigen::VectorXd eta, Eigen::VectorXd sigma) {
    if (eta.size() != sigma.size())
        throw contract_violation("TangentPair: eta and sigma dimensions differ");
    return TangentPair{std::move(eta), std::move(sigma)};
}

// eta' = sigma, sigma' = -K eta.
inline TangentPair jacobi_rhs(const TangentPair& pair, const Eigen::MatrixXd& K) {
    if (pair.eta.size() != pair.sigma.size() || K.rows() != pair.eta.size() ||
        K.cols() != pair.eta.size())
        throw contract_violation("jacobi_rhs: dimension mismatch");
    return TangentPair{pair.sigma, -K * pair.eta};
}

// Fundamental solution of the scalar block eta'' = -lambda eta over time t.
inline Eigen::Matrix2d closed_form_block(double lambda, double t) {
    Eigen::Matrix2d M;
    if (lambda < 0.0) {
        const double mu = std::sqrt(-lambda);
        const double ch = std::cosh(mu * t), sh = std::sinh(mu * t);
        M << ch, sh / mu, mu * sh, ch;
    } else if (lambda == 0.0) {
        M << 1.0, t, 0.0, 1.0;
    } else {
        const double mu = std::sqrt(lambda);
        const double cs = std::cos(mu * t), sn = std::sin(mu * t);
        M << cs, sn / mu, -mu * sn, cs;
    }
    return M;
}

namespace detail {

// One classical RK4 step of y' = F(t) y with F(t) = [[0, I], [-K(t), 0]],
// written against a generic column count so single pairs and full transition
// matrices share the code path.
inline void rk4_step(const CurvatureModel& model, double t, double h,
                     Eigen::MatrixXd& Y) {
    const int d = model.fiber_dim();
    const auto apply = [&](const Eigen::MatrixXd& K,
                           const Eigen::MatrixXd& Z) -> Eigen::MatrixXd {
        Eigen::MatrixXd R(Z.rows(), Z.cols());
        R.topRows(d) = Z.bottomRows(d);
        R.bottomRows(d) = -K * Z.topRows(d);
        return R;
    };
    const Eigen::MatrixXd K0 = model(t);
    const Eigen::MatrixXd Kh = model(t + 0.5 * h);
    const Eigen::MatrixXd K1 = model(t + h);
    const Eigen::MatrixXd k1 = apply(K0, Y);
    const Eigen::MatrixXd k2 = apply(Kh, Y + (0.5 * h) * k1);
    const Eigen::MatrixXd k3 = apply(Kh, Y + (0.5 * h) * k2);
    const Eigen::MatrixXd k4 = apply(K1, Y + h * k3);
    Y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Eigen::MatrixXd integrate(const CurvatureModel& model, Eigen::MatrixXd Y,
                                 double t0, double t1, double step) {
    if (step <= 0.0) throw parameter_error("integrator step must be positive");
    const double span = t1 - t0;
    if (span == 0.0) return Y;
    const long nsteps =
        std::max<long>(1, static_cast<long>(std::ceil(std::abs(span) / step - 1e-12)));
    const double h = span / static_cast<double>(nsteps);
    double t = t0;
    for (long i = 0; i < nsteps; ++i) {
        rk4_step(model, t, h, Y);
        t = t0 + span * static_cast<double>(i + 1) / static_cast<double>(nsteps);
        if (!Y.allFinite())
            throw numeric_error("propagation overflow at t = " + num_str(t));
    }
    return Y;
}

} // namespace detail

// Propagates a pair from time t0 to t1 (either direction) with uniform RK4
// steps of size at most `step`.
inline TangentPair propagate_between(const CurvatureModel& model, const TangentPair& pair,
                                     double t0, double t1, double step) {
    const int d = model.fiber_dim();
    if (pair.dim() != d || pair.sigma.size() != d)
        throw contract_violation("propagate: pair dimension does not match model");
    Eigen::MatrixXd Y(2 * d, 1);
    Y.topRows(d) = pair.eta;
    Y.bottomRows(d) = pair.sigma;
    Y = detail::integrate(model, std::move(Y), t0, t1, step);
    return TangentPair{Y.topRows(d).col(0), Y.bottomRows(d).col(0)};
}

inline TangentPair propagate_rk4(const CurvatureModel& model, const TangentPair& pair,
                                 double t_end, double step) {
    if (t_end < 0.0) throw parameter_error("propagate_rk4: t_end must be >= 0");
    return propagate_between(model, pair, 0.0, t_end, step);
}

// Full 2(n-1) x 2(n-1) fundamental solution over [t0, t1].
inline Eigen::MatrixXd transition_between(const CurvatureModel& model, double t0,
                                          double t1, double step) {
    const int d = model.fiber_dim();
    Eigen::MatrixXd Y = Eigen::MatrixXd::Identity(2 * d, 2 * d);
    return detail::integrate(model, std::move(Y), t0, t1, step);
}

inline Eigen::MatrixXd transition_matrix(const CurvatureModel& model, double t_end,
                                         double step) {
    if (t_end < 0.0) throw parameter_error("transition_matrix: t_end must be >= 0");
    return transition_between(model, 0.0, t_end, step);
}

// Symplectic pairing g(eta1, sigma2) - g(sigma1, eta2); conserved by the flow.
inline double wronskian(const TangentPair& p1, const TangentPair& p2) {
    if (p1.dim() != p2.dim())
        throw contract_violation("wronskian: dimension mismatch");
    return p1.eta.dot(p2.sigma) - p1.sigma.dot(p2.eta);
}

} // namespace phflow
