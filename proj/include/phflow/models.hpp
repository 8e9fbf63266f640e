#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phflow/errors.hpp"

namespace phflow {

// Short numeric literal for building identifier strings ("1", "0.5", "1.5").
inline std::string num_str(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Curvature operator along a geodesic, in a parallel orthonormal frame of the
// normal bundle: t |-> K(t), a symmetric (n-1)x(n-1) matrix.
// ---------------------------------------------------------------------------
struct CurvatureModel {
    std::string name;      // identifier echoed into reports
    int dim_n = 0;         // manifold dimension n; fibers have dimension n-1
    bool constant_in_t = true;
    double period = 0.0;   // 0 = not periodic
    double lipschitz = 0.0;// bound on |d/dt K(t)| entries (0 for constant)

    std::function<Eigen::MatrixXd(double)> rule;

    int fiber_dim() const { return dim_n - 1; }
    Eigen::MatrixXd operator()(double t) const { return rule(t); }
};

// ---------------------------------------------------------------------------
// Orthogonal split of the normal fiber: A (dimension r) carries the strongest
// curvature, B the rest. aprime is the B->A block of the projection
// derivative; the full operator is recovered as [[0, aprime],[aprime^T, 0]].
// r = fiber dimension (empty B) is the degenerate variant used by the
// negative-curvature check only.
// ---------------------------------------------------------------------------
struct SplitSpec {
    int r = 0;
    Eigen::MatrixXd basis_A; // d x r, orthonormal columns
    Eigen::MatrixXd basis_B; // d x (d-r), orthonormal columns
    Eigen::MatrixXd aprime;  // r x (d-r)

    int dim() const { return static_cast<int>(basis_A.rows()); }
    int dim_B() const { return dim() - r; }
};

inline SplitSpec with_aprime(const SplitSpec& split, const Eigen::MatrixXd& D) {
    if (D.rows() != split.r || D.cols() != split.dim_B())
        throw contract_violation("aprime block must be r x (d-r)");
    SplitSpec out = split;
    out.aprime = D;
    return out;
}

// A = all of the fiber, B empty: the quadratic form degenerates to g(eta, sigma).
inline SplitSpec degenerate_split(int d) {
    if (d < 1) throw parameter_error("fiber dimension must be >= 1");
    SplitSpec s;
    s.r = d;
    s.basis_A = Eigen::MatrixXd::Identity(d, d);
    s.basis_B = Eigen::MatrixXd(d, 0);
    s.aprime = Eigen::MatrixXd(d, 0);
    return s;
}

struct EigenSplit {
    SplitSpec split;
    Eigen::VectorXd eigenvalues; // ascending
    double gap = 0.0;            // lambda_{r+1} - lambda_r  (>= 0)
};

namespace detail {
inline bool is_exactly_diagonal(const Eigen::MatrixXd& K) {
    for (int i = 0; i < K.rows(); ++i)
        for (int j = 0; j < K.cols(); ++j)
            if (i != j && K(i, j) != 0.0) return false;
    return true;
}

inline void require_symmetric(const Eigen::MatrixXd& M, const char* who) {
    if (M.rows() != M.cols() || (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw contract_violation(std::string(who) + ": operator must be symmetric");
}
} // namespace detail

// Splits the fiber by the spectrum of K: A spans the eigenvectors of the r
// most negative eigenvalues. Exactly-diagonal input is handled by a stable
// sort of the diagonal so constructed models keep exact eigenvalues.
inline EigenSplit eigen_split(const Eigen::MatrixXd& K, int r) {
    detail::require_symmetric(K, "eigen_split");
    const int d = static_cast<int>(K.rows());
    if (r < 1 || r > d - 1)
        throw parameter_error("eigen_split: r must satisfy 1 <= r <= fiber_dim - 1");

    Eigen::VectorXd evals(d);
    Eigen::MatrixXd evecs(d, d);
    if (detail::is_exactly_diagonal(K)) {
        std::vector<int> idx(d);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return K(a, a) < K(b, b); });
        evecs.setZero();
        for (int i = 0; i < d; ++i) {
            evals[i] = K(idx[i], idx[i]);
            evecs(idx[i], i) = 1.0;
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
        if (solver.info() != Eigen::Success)
            throw numeric_error("eigen_split: eigensolver failed to converge");
        evals = solver.eigenvalues(); // ascending
        evecs = solver.eigenvectors();
    }

    EigenSplit out;
    out.eigenvalues = evals;
    out.gap = evals[r] - evals[r - 1];
    out.split.r = r;
    out.split.basis_A = evecs.leftCols(r);
    out.split.basis_B = evecs.rightCols(d - r);
    out.split.aprime = Eigen::MatrixXd::Zero(r, d - r);
    return out;
}

// ---------------------------------------------------------------------------
// Model constructors
// ---------------------------------------------------------------------------

inline CurvatureModel constant_curvature_model(double a, int n) {
    if (a <= 0.0) throw parameter_error("constant_curvature_model: a must be positive");
    if (n < 3) throw parameter_error("constant_curvature_model: n must be >= 3");
    CurvatureModel m;
    m.name = "constant(a=" + num_str(a) + ",n=" + std::to_string(n) + ")";
    m.dim_n = n;
    const Eigen::MatrixXd K = -a * a * Eigen::MatrixXd::Identity(n - 1, n - 1);
    m.rule = [K](double) { return K; };
    return m;
}

inline CurvatureModel rank_one_symmetric_model(double a, int n, int r) {
    if (a <= 0.0) throw parameter_error("rank_one_symmetric_model: a must be positive");
    if (n < 3) throw parameter_error("rank_one_symmetric_model: n must be >= 3");
    if (r < 1 || r > n - 2)
        throw parameter_error("rank_one_symmetric_model: r must satisfy 1 <= r <= n-2");
    CurvatureModel m;
    m.name = "rank_one(a=" + num_str(a) + ",n=" + std::to_string(n) +
             ",r=" + std::to_string(r) + ")";
    m.dim_n = n;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n - 1, n - 1);
    for (int i = 0; i < r; ++i) K(i, i) = -4.0 * a * a;
    for (int i = r; i < n - 1; ++i) K(i, i) = -a * a;
    m.rule = [K](double) { return K; };
    return m;
}

// ---------------------------------------------------------------------------
// Higher-rank data: root covectors on the flat, with multiplicities. The
// Jacobi operator in direction X has eigenvalue -alpha_i(X)^2 with
// multiplicity m_i, plus (rank-1) zeros from the flat itself.
// ---------------------------------------------------------------------------
struct RootDatum {
    Eigen::VectorXd covector; // linear functional on R^k
    int multiplicity = 1;
};

struct HigherRankFamily {
    std::vector<RootDatum> roots;
    int rank = 0;
    std::function<Eigen::VectorXd(double)> path; // s -> unit X(s) in R^k
    double s_max = 0.0;                          // suggested parameter range end
    int dim_n = 0;

    Eigen::VectorXd eigenvalues_at(double s) const {
        Eigen::VectorXd X = path(s);
        if (X.size() != rank) throw parameter_error("direction dimension != rank");
        const double nrm = X.norm();
        if (nrm < 1e-12) throw parameter_error("zero direction vector");
        if (std::abs(nrm - 1.0) > 1e-9)
            throw parameter_error("direction vector must be unit");
        Eigen::VectorXd ev(dim_n - 1);
        int j = 0;
        for (const auto& rd : roots) {
            const double av = rd.covector.dot(X);
            for (int q = 0; q < rd.multiplicity; ++q) ev[j++] = -av * av;
        }
        for (int q = 0; q < rank - 1; ++q) ev[j++] = 0.0;
        return ev;
    }

    CurvatureModel at(double s) const {
        Eigen::VectorXd ev = eigenvalues_at(s);
        CurvatureModel m;
        m.name = "higher_rank(s=" + num_str(s) + ")";
        m.dim_n = dim_n;
        const Eigen::MatrixXd K = ev.asDiagonal().toDenseMatrix();
        m.rule = [K](double) { return K; };
        return m;
    }
};

inline HigherRankFamily higher_rank_model(std::vector<RootDatum> roots, int rank,
                                          std::function<Eigen::VectorXd(double)> path,
                                          double s_max) {
    if (rank < 2) throw parameter_error("higher_rank_model: rank must be >= 2");
    if (roots.empty()) throw parameter_error("higher_rank_model: roots must be nonempty");
    int mult_sum = 0;
    for (const auto& rd : roots) {
        if (rd.covector.size() != rank)
            throw parameter_error("higher_rank_model: covector dimension != rank");
        if (rd.covector.norm() == 0.0)
            throw parameter_error("higher_rank_model: zero root covector");
        if (rd.multiplicity < 1)
            throw parameter_error("higher_rank_model: multiplicity must be positive");
        mult_sum += rd.multiplicity;
    }
    HigherRankFamily fam;
    fam.roots = std::move(roots);
    fam.rank = rank;
    fam.path = std::move(path);
    fam.s_max = s_max;
    fam.dim_n = 1 + mult_sum + (rank - 1); // v direction + root spaces + flat
    return fam;
}

// Great-circle arc from `from` to `to` (both nonzero, normalized internally),
// parametrized by angle s in [0, angle(from,to)].
inline std::pair<std::function<Eigen::VectorXd(double)>, double>
great_circle_path(Eigen::VectorXd from, Eigen::VectorXd to) {
    if (from.norm() < 1e-12 || to.norm() < 1e-12)
        throw parameter_error("great_circle_path: zero direction vector");
    from.normalize();
    to.normalize();
    Eigen::VectorXd orth = to - to.dot(from) * from;
    if (orth.norm() < 1e-12)
        throw parameter_error("great_circle_path: endpoints must not be parallel");
    orth.normalize();
    const double angle = std::acos(std::clamp(to.dot(from), -1.0, 1.0));
    auto path = [from, orth](double s) -> Eigen::VectorXd {
        return std::cos(s) * from + std::sin(s) * orth;
    };
    return {path, angle};
}

// ---------------------------------------------------------------------------
// Conformal perturbation. hess is the (d+1)x(d+1) Hessian of the conformal
// factor in the frame (v, e_1, ..., e_d) where v is the geodesic direction
// (index 0) and e_i span the normal fiber:
//   K1 = K - 1/2 * hess|_{v_perp} - 1/2 * hess(v,v) * Id.
// ---------------------------------------------------------------------------
inline Eigen::MatrixXd conformal_perturbation(const Eigen::MatrixXd& K,
                                              const Eigen::MatrixXd& hess) {
    detail::require_symmetric(K, "conformal_perturbation(K)");
    detail::require_symmetric(hess, "conformal_perturbation(hess)");
    const int d = static_cast<int>(K.rows());
    if (hess.rows() != d + 1)
        throw contract_violation(
            "conformal_perturbation: hess must be (d+1)x(d+1) in the (v, frame) basis");
    return K - 0.5 * hess.block(1, 1, d, d) -
           0.5 * hess(0, 0) * Eigen::MatrixXd::Identity(d, d);
}

// ---------------------------------------------------------------------------
// Bump profile: the standard smooth mollifier, peak 1 at u = 0, support |u| < 1.
// ---------------------------------------------------------------------------
struct BumpSpec {
    double center = 0.0;
    double width = 1.0;     // support radius in t
    double amplitude = 1.0; // scales the profile; 1 zeroes the B-curvature at peak
};

inline double bump_profile(double u) {
    const double uu = u * u;
    if (uu >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - uu));
}

namespace detail {
inline double estimate_profile_slope() {
    // max |d/du bump_profile| over (-1, 1), computed once on a fine grid
    double best = 0.0;
    const int n = 20000;
    for (int i = 1; i < n; ++i) {
        const double u = -1.0 + 2.0 * i / n;
        const double uu = u * u;
        if (uu >= 1.0) continue;
        const double den = (1.0 - uu);
        const double dp = bump_profile(u) * (-2.0 * u / (den * den));
        best = std::max(best, std::abs(dp));
    }
    return best;
}
} // namespace detail

// Periodic along-orbit scenario: A-curvature fixed at -4a^2, B-curvature
// -a^2 (1 - chi(t)) with chi a periodic bump (period T_gamma). on_gamma = true
// freezes chi at 1 (the closed orbit through the flattened region).
inline CurvatureModel non_anosov_scenario(double a, int n, int r, const BumpSpec& bump,
                                          double period, bool on_gamma = false) {
    if (a <= 0.0) throw parameter_error("non_anosov_scenario: a must be positive");
    if (n < 3) throw parameter_error("non_anosov_scenario: n must be >= 3");
    if (r < 1 || r > n - 2)
        throw parameter_error("non_anosov_scenario: r must satisfy 1 <= r <= n-2");
    if (bump.amplitude < 0.0)
        throw parameter_error("non_anosov_scenario: amplitude must be >= 0");
    if (!on_gamma) {
        if (period <= 0.0) throw parameter_error("non_anosov_scenario: period must be positive");
        if (!(bump.width > 0.0) || bump.width >= period / 2.0)
            throw parameter_error("non_anosov_scenario: width must lie in (0, period/2)");
    }

    CurvatureModel m;
    m.dim_n = n;
    const int d = n - 1;
    if (on_gamma) {
        m.name = "non_anosov_on_gamma(a=" + num_str(a) + ",n=" + std::to_string(n) +
                 ",r=" + std::to_string(r) + ")";
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < r; ++i) K(i, i) = -4.0 * a * a;
        m.rule = [K](double) { return K; };
        return m;
    }

    m.name = "non_anosov(a=" + num_str(a) + ",n=" + std::to_string(n) +
             ",r=" + std::to_string(r) + ",w=" + num_str(bump.width) +
             ",h=" + num_str(bump.amplitude) + ",P=" + num_str(period) + ")";
    m.constant_in_t = bump.amplitude != 0.0 ? false : true;
    m.period = period;
    static const double profile_slope = detail::estimate_profile_slope();
    m.lipschitz = a * a * bump.amplitude * profile_slope / bump.width;
    const double a2 = a * a, c0 = bump.center, w = bump.width, h = bump.amplitude,
                 P = period;
    m.rule = [a2, c0, w, h, P, r, d](double t) {
        const double u = std::remainder(t - c0, P) / w;
        const double chi = h * bump_profile(u);
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < r; ++i) K(i, i) = -4.0 * a2;
        for (int i = r; i < d; ++i) K(i, i) = -a2 * (1.0 - chi);
        return K;
    };
    return m;
}

// Wraps a fixed operator (e.g. a perturbed curvature matrix) as a model.
inline CurvatureModel matrix_model(const Eigen::MatrixXd& K, const std::string& name) {
    detail::require_symmetric(K, "matrix_model");
    CurvatureModel m;
    m.name = name;
    m.dim_n = static_cast<int>(K.rows()) + 1;
    m.rule = [K](double) { return K; };
    return m;
}

} // namespace phflow
