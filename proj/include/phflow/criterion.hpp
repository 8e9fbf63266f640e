#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phflow/dynamics.hpp"
#include "phflow/errors.hpp"
#include "phflow/models.hpp"
#include "phflow/parallel.hpp"
#include "phflow/rng.hpp"

namespace phflow {

// ---------------------------------------------------------------------------
// Quadratic form Q^c(eta, sigma) = g(eta_A, sigma_A) - c^2 |eta_B|^2 - |sigma_B|^2
// ---------------------------------------------------------------------------
struct QFormParams {
    double c = 1.0;
    explicit QFormParams(double c_) : c(c_) {
        if (!(c > 0.0)) throw parameter_error("c must be positive");
    }
};

enum class ConeClass { boundary, positive, negative };

inline const char* cone_class_name(ConeClass cls) {
    switch (cls) {
        case ConeClass::boundary: return "boundary";
        case ConeClass::positive: return "positive";
        default: return "negative";
    }
}

struct ConeSample {
    TangentPair pair;
    ConeClass cone_class = ConeClass::boundary;
    double qvalue = 0.0;
};

namespace detail {

// Split coordinates of a pair, stacked as [eta_A; sigma_A; eta_B; sigma_B].
inline Eigen::VectorXd split_coords(const SplitSpec& split, const TangentPair& pair) {
    const int r = split.r, b = split.dim_B();
    Eigen::VectorXd w(2 * (r + b));
    w.segment(0, r) = split.basis_A.transpose() * pair.eta;
    w.segment(r, r) = split.basis_A.transpose() * pair.sigma;
    if (b > 0) {
        w.segment(2 * r, b) = split.basis_B.transpose() * pair.eta;
        w.segment(2 * r + b, b) = split.basis_B.transpose() * pair.sigma;
    }
    return w;
}

inline TangentPair embed_coords(const SplitSpec& split, const Eigen::VectorXd& w) {
    const int r = split.r, b = split.dim_B();
    Eigen::VectorXd eta = split.basis_A * w.segment(0, r);
    Eigen::VectorXd sigma = split.basis_A * w.segment(r, r);
    if (b > 0) {
        eta += split.basis_B * w.segment(2 * r, b);
        sigma += split.basis_B * w.segment(2 * r + b, b);
    }
    return TangentPair{std::move(eta), std::move(sigma)};
}

inline double qform_coords(double c, int r, int b, const Eigen::VectorXd& w) {
    double q = w.segment(0, r).dot(w.segment(r, r));
    if (b > 0)
        q -= c * c * w.segment(2 * r, b).squaredNorm() +
             w.segment(2 * r + b, b).squaredNorm();
    return q;
}

} // namespace detail

inline double qform_eval(const QFormParams& params, const SplitSpec& split,
                         const TangentPair& pair) {
    if (pair.dim() != split.dim())
        throw contract_violation("qform_eval: pair dimension does not match split");
    return detail::qform_coords(params.c, split.r, split.dim_B(),
                                detail::split_coords(split, pair));
}

// ---------------------------------------------------------------------------
// Criterion matrix S^c in coordinates (eta_A, sigma_A, eta_B, sigma_B):
//
//        [ -K_A     0       c^2 D     D/2           ]
//        [  0       Id      D/2       D             ]
//        [ c^2 D^T  D^T/2   0         -c^2 Id + K_B ]
//        [ D^T/2    D^T     -c^2 Id + K_B   0       ]
//
// where D is the B->A block of the projection derivative. d/dt Q^c(w) equals
// the quadratic form of this matrix; with D = 0 it reduces to the
// block-diagonal/antidiagonal special case used by the gap analysis.
// ---------------------------------------------------------------------------
inline Eigen::MatrixXd assemble_S(const QFormParams& params, const Eigen::MatrixXd& K_A,
                                  const Eigen::MatrixXd& K_B,
                                  const Eigen::MatrixXd& aprime) {
    detail::require_symmetric(K_A, "assemble_S(K_A)");
    if (K_B.size() > 0) detail::require_symmetric(K_B, "assemble_S(K_B)");
    const int r = static_cast<int>(K_A.rows());
    const int b = static_cast<int>(K_B.rows());
    if (aprime.rows() != r || aprime.cols() != b)
        throw contract_violation("assemble_S: aprime must be r x (d-r)");
    const double c = params.c;
    const int m = 2 * (r + b);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
    S.block(0, 0, r, r) = -K_A;
    S.block(r, r, r, r) = Eigen::MatrixXd::Identity(r, r);
    if (b > 0) {
        const Eigen::MatrixXd anti =
            -c * c * Eigen::MatrixXd::Identity(b, b) + K_B;
        S.block(2 * r, 2 * r + b, b, b) = anti;
        S.block(2 * r + b, 2 * r, b, b) = anti;
        S.block(0, 2 * r, r, b) = c * c * aprime;
        S.block(0, 2 * r + b, r, b) = 0.5 * aprime;
        S.block(r, 2 * r, r, b) = 0.5 * aprime;
        S.block(r, 2 * r + b, r, b) = aprime;
        S.block(2 * r, 0, b, r) = c * c * aprime.transpose();
        S.block(2 * r + b, 0, b, r) = 0.5 * aprime.transpose();
        S.block(2 * r, r, b, r) = 0.5 * aprime.transpose();
        S.block(2 * r + b, r, b, r) = aprime.transpose();
    }
    return S;
}

// d/dt Q^c along the flow, evaluated algebraically through S^c. Only the
// A- and B-diagonal curvature blocks enter, matching the displayed matrix;
// the finite-difference oracle certifies exactness for block-diagonal K.
inline double form_derivative(const QFormParams& params, const SplitSpec& split,
                              const Eigen::MatrixXd& K, const TangentPair& pair) {
    if (pair.dim() != split.dim() || K.rows() != split.dim())
        throw contract_violation("form_derivative: dimension mismatch");
    const Eigen::MatrixXd K_A =
        split.basis_A.transpose() * K * split.basis_A;
    const Eigen::MatrixXd K_B =
        split.basis_B.transpose() * K * split.basis_B;
    const Eigen::MatrixXd S = assemble_S(params, K_A, K_B, split.aprime);
    const Eigen::VectorXd w = detail::split_coords(split, pair);
    return w.dot(S * w);
}

// Central finite difference of t -> Q^c(flow_t(pair)) at t = 0; independent
// check of form_derivative (exact to O(h^2) when the split is parallel).
inline double fd_derivative_oracle(const CurvatureModel& model, const SplitSpec& split,
                                   const QFormParams& params, const TangentPair& pair,
                                   double h, double step = 1e-4) {
    if (h <= 0.0) throw parameter_error("fd_derivative_oracle: h must be positive");
    const TangentPair fwd = propagate_between(model, pair, 0.0, h, step);
    const TangentPair bwd = propagate_between(model, pair, 0.0, -h, step);
    return (qform_eval(params, split, fwd) - qform_eval(params, split, bwd)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Cone sampling. Standard splits use the A-part gauge: |eta_A| = 1,
// sigma_A = y * (direction making g(eta_A, sigma_A) >= 0), and the B-part
// magnitude is solved so that Q^c lands exactly in the requested class.
// Degenerate splits (B empty) sample the form g(eta, sigma) directly on the
// unit sphere of the full pair.
// ---------------------------------------------------------------------------
namespace detail {

struct SampleCoords {
    Eigen::VectorXd w; // stacked split coordinates
    double qvalue = 0.0;
};

inline std::vector<SampleCoords> sample_coords(const QFormParams& params, int r, int b,
                                               long count, std::uint64_t seed,
                                               ConeClass cls) {
    if (count < 1) throw parameter_error("cone_sample: count must be >= 1");
    if (r < 1) throw parameter_error("cone_sample: split must have r >= 1");
    Rng rng(seed ^ (static_cast<std::uint64_t>(cls) + 1) * 0x51ed2701);
    std::vector<SampleCoords> out;
    out.reserve(static_cast<std::size_t>(count));
    const double c = params.c;

    for (long i = 0; i < count; ++i) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * (r + b));
        if (b == 0) {
            // Degenerate form g(eta, sigma) on the unit sphere of (eta, sigma).
            Eigen::VectorXd eta = rng.gaussian_vector(r);
            while (eta.norm() < 1e-9) eta = rng.gaussian_vector(r);
            Eigen::VectorXd sig = rng.gaussian_vector(r);
            if (cls == ConeClass::boundary) {
                const Eigen::VectorXd ehat = eta.normalized();
                sig -= sig.dot(ehat) * ehat;
            } else {
                double dot = eta.dot(sig);
                while (std::abs(dot) < 1e-9 * eta.norm() * std::max(sig.norm(), 1e-30)) {
                    sig = rng.gaussian_vector(r);
                    dot = eta.dot(sig);
                }
                const double want = cls == ConeClass::positive ? 1.0 : -1.0;
                if (dot * want < 0.0) sig = -sig;
            }
            const double nrm = std::sqrt(eta.squaredNorm() + sig.squaredNorm());
            eta /= nrm;
            sig /= nrm;
            w.segment(0, r) = eta;
            w.segment(r, r) = sig;
            out.push_back({std::move(w), eta.dot(sig)});
            continue;
        }

        // A-part gauge.
        const Eigen::VectorXd eta_A = rng.unit_vector(r);
        Eigen::VectorXd dir_A = rng.unit_vector(r);
        double y = rng.half_normal();
        if (eta_A.dot(dir_A) < 0.0) dir_A = -dir_A;
        double p = y * eta_A.dot(dir_A);
        if (cls != ConeClass::boundary) {
            while (p < 1e-6) { // keep a usable margin for strict-sign classes
                dir_A = rng.unit_vector(r);
                y = rng.half_normal();
                if (eta_A.dot(dir_A) < 0.0) dir_A = -dir_A;
                p = y * eta_A.dot(dir_A);
            }
        }
        const Eigen::VectorXd u_B = rng.unit_vector(b);
        const Eigen::VectorXd v_B = rng.unit_vector(b);
        const double tau = rng.uniform(0.0, 1.5707963267948966);
        double target = p; // squared B-magnitude scale giving Q = 0
        if (cls == ConeClass::positive) {
            target = p * rng.uniform(); // in [0, p): leaves Q = p - target > 0
        } else if (cls == ConeClass::negative) {
            target = p + rng.half_normal() + 1e-9;
        }
        const double mag = std::sqrt(target);
        w.segment(0, r) = eta_A;
        w.segment(r, r) = y * dir_A;
        w.segment(2 * r, b) = (mag * std::cos(tau) / c) * u_B;
        w.segment(2 * r + b, b) = (mag * std::sin(tau)) * v_B;
        const double q = qform_coords(c, r, b, w);
        out.push_back({std::move(w), q});
    }
    return out;
}

// Aligned worst-case boundary probe for isotropic curvature blocks
// (K_A = kappa_A Id, K_B = kappa_B Id): the form restricted to the aligned
// family F(y) = -kappa_A + y^2 + (kappa_B - c^2) y / c is minimized at
// y* = (c^2 - kappa_B) / (2c). Returns an empty vector when the blocks are
// not isotropic.
inline std::vector<SampleCoords> aligned_probe(const QFormParams& params,
                                               const Eigen::MatrixXd& K_A,
                                               const Eigen::MatrixXd& K_B) {
    const int r = static_cast<int>(K_A.rows());
    const int b = static_cast<int>(K_B.rows());
    if (b == 0) return {};
    const double kA = K_A(0, 0), kB = K_B(0, 0);
    const auto isotropic = [](const Eigen::MatrixXd& M, double k) {
        for (int i = 0; i < M.rows(); ++i)
            for (int j = 0; j < M.cols(); ++j)
                if (M(i, j) != (i == j ? k : 0.0)) return false;
        return true;
    };
    if (!isotropic(K_A, kA) || !isotropic(K_B, kB)) return {};
    const double c = params.c;
    const double ystar = (c * c - kB) / (2.0 * c);
    if (!(ystar > 0.0)) return {};
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * (r + b));
    const double mag = std::sqrt(ystar);
    const double root_half = 0.7071067811865476; // cos(pi/4) = sin(pi/4)
    w[0] = 1.0;                      // eta_A = e1
    w[r] = ystar;                    // sigma_A = y* e1
    w[2 * r] = mag * root_half / c;  // eta_B on e1
    w[2 * r + b] = mag * root_half;  // sigma_B on e1
    return {SampleCoords{std::move(w), 0.0}};
}

} // namespace detail

inline std::vector<ConeSample> cone_sample(const QFormParams& params,
                                           const SplitSpec& split, long count,
                                           std::uint64_t seed, ConeClass cls) {
    const auto coords =
        detail::sample_coords(params, split.r, split.dim_B(), count, seed, cls);
    std::vector<ConeSample> out;
    out.reserve(coords.size());
    for (const auto& sc : coords) {
        TangentPair pair = detail::embed_coords(split, sc.w);
        const double q = qform_eval(params, split, pair);
        out.push_back(ConeSample{std::move(pair), cls, q});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------
struct CriterionReport {
    std::string model_id;
    double c = 0.0;
    int r = 0;
    double min_form_boundary = std::numeric_limits<double>::infinity();
    double min_form_positive = std::numeric_limits<double>::infinity();
    long samples_used = 0;
    bool verdict = false;
    std::string reason; // empty on pass; "no splitting" / "nonnegative center curvature" / "negative form minimum"
    double argmin_t = 0.0;
    ConeClass argmin_class = ConeClass::boundary;
    Eigen::VectorXd argmin_coords; // stacked split coordinates of the argmin sample
    double alpha_inf = 0.0;
    double beta_sup = 0.0;
    double suggested_e = 0.0;
    bool uniform_gap = false;
};

struct GapReport {
    double alpha_inf = 0.0;
    double beta_sup = 0.0;
    bool uniform_gap = false;
    double suggested_e = std::numeric_limits<double>::quiet_NaN();
    long samples_used = 0;
    long beta_undefined_count = 0;      // samples where lambda_{r+1} > 0
    double resolution_tolerance = 0.0;  // margin the sampling cannot certify
};

struct MarginReport {
    double e = 0.0;
    double chain_value = 0.0; // 2 alpha - e - beta^2 / e, as in the proof chain
    double margin = 0.0;      // min(chain_value, alpha - e, e - beta)
};

// The proof chain needs e in (beta, alpha) AND 2 alpha - e - beta^2/e > 0;
// margin is the minimum of the three clauses, so it is positive exactly on
// the admissible interval. chain_value preserves the raw inequality.
inline MarginReport corollary_margin(double alpha, double beta, double e) {
    MarginReport m;
    m.e = e;
    m.chain_value = 2.0 * alpha - e - beta * beta / e;
    m.margin = std::min({m.chain_value, alpha - e, e - beta});
    return m;
}

namespace detail {

inline std::vector<double> criterion_time_grid(const CurvatureModel& model) {
    if (model.constant_in_t) return {0.0};
    const double span = model.period > 0.0 ? model.period : 10.0;
    std::vector<double> ts;
    const int cells = 128;
    ts.reserve(cells);
    for (int i = 0; i < cells; ++i)
        ts.push_back(span * static_cast<double>(i) / cells);
    return ts;
}

struct HypothesesCheck {
    bool ok = true;
    std::string reason;
    double alpha = 0.0; // sqrt(-lambda_r)
    double beta = 0.0;  // sqrt(-lambda_{r+1})
};

inline HypothesesCheck check_split_hypotheses(const EigenSplit& es) {
    HypothesesCheck h;
    const int r = es.split.r;
    const double lam_r = es.eigenvalues[r - 1];
    const double lam_r1 = es.eigenvalues[r];
    if (es.gap <= 1e-12) {
        h.ok = false;
        h.reason = "no splitting";
    } else if (lam_r1 >= -1e-12) {
        h.ok = false;
        h.reason = "nonnegative center curvature";
    }
    h.alpha = std::sqrt(std::max(0.0, -lam_r));
    h.beta = std::sqrt(std::max(0.0, -lam_r1));
    return h;
}

// Minimum of w^T S w over a coordinate sample set (parallel, deterministic
// reduction in index order).
inline void min_form_over(const Eigen::MatrixXd& S,
                          const std::vector<SampleCoords>& coords, double& min_value,
                          long& argmin_index) {
    std::vector<double> vals(coords.size());
    parallel_for(coords.size(), [&](std::size_t i) {
        vals[i] = coords[i].w.dot(S * coords[i].w);
    });
    min_value = std::numeric_limits<double>::infinity();
    argmin_index = -1;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i] < min_value) {
            min_value = vals[i];
            argmin_index = static_cast<long>(i);
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Positivity check of the criterion form over sampled C0 and C+, with the
// split hypotheses (positive spectral gap, strictly negative curvature on B)
// verified at every sampled time.
// ---------------------------------------------------------------------------
inline CriterionReport criterion_check(const CurvatureModel& model, int r,
                                       const QFormParams& params, long count,
                                       std::uint64_t seed) {
    CriterionReport rep;
    rep.model_id = model.name;
    rep.c = params.c;
    rep.r = r;
    const int d = model.fiber_dim();
    const int b = d - r;
    if (r < 1 || b < 1)
        throw parameter_error("criterion_check: r must satisfy 1 <= r <= fiber_dim - 1");

    const auto boundary = detail::sample_coords(params, r, b, count, seed,
                                                ConeClass::boundary);
    const auto positive = detail::sample_coords(params, r, b, count, seed,
                                                ConeClass::positive);

    const auto ts = detail::criterion_time_grid(model);
    double alpha_inf = std::numeric_limits<double>::infinity();
    double beta_sup = 0.0;
    bool hypotheses_ok = true;
    std::string reason;

    for (double t : ts) {
        const Eigen::MatrixXd K = model(t);
        const EigenSplit es = eigen_split(K, r);
        const auto hyp = detail::check_split_hypotheses(es);
        if (!hyp.ok && hypotheses_ok) {
            hypotheses_ok = false;
            reason = hyp.reason;
        }
        alpha_inf = std::min(alpha_inf, hyp.alpha);
        beta_sup = std::max(beta_sup, hyp.beta);

        const Eigen::MatrixXd K_A =
            es.split.basis_A.transpose() * K * es.split.basis_A;
        const Eigen::MatrixXd K_B =
            es.split.basis_B.transpose() * K * es.split.basis_B;
        const Eigen::MatrixXd S = assemble_S(params, K_A, K_B, es.split.aprime);

        auto probe = detail::aligned_probe(params, K_A, K_B);
        std::vector<detail::SampleCoords> bset = boundary;
        for (auto& pr : probe) bset.push_back(std::move(pr));

        double mb = 0.0, mp = 0.0;
        long ab = -1, ap = -1;
        detail::min_form_over(S, bset, mb, ab);
        detail::min_form_over(S, positive, mp, ap);
        rep.samples_used += static_cast<long>(bset.size() + positive.size());
        const double prev_global =
            std::min(rep.min_form_boundary, rep.min_form_positive);
        rep.min_form_boundary = std::min(rep.min_form_boundary, mb);
        rep.min_form_positive = std::min(rep.min_form_positive, mp);
        if (std::min(mb, mp) < prev_global) {
            rep.argmin_t = t;
            if (mb <= mp) {
                rep.argmin_class = ConeClass::boundary;
                rep.argmin_coords = bset[static_cast<std::size_t>(ab)].w;
            } else {
                rep.argmin_class = ConeClass::positive;
                rep.argmin_coords = positive[static_cast<std::size_t>(ap)].w;
            }
        }
    }

    rep.alpha_inf = alpha_inf;
    rep.beta_sup = beta_sup;
    rep.uniform_gap = hypotheses_ok && beta_sup < alpha_inf;
    rep.suggested_e = 0.5 * (alpha_inf + beta_sup);
    const bool minima_ok =
        rep.min_form_boundary > 0.0 && rep.min_form_positive > 0.0;
    rep.verdict = hypotheses_ok && minima_ok;
    if (!rep.verdict) {
        rep.reason = !hypotheses_ok ? reason : "negative form minimum";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Degenerate-form check for strictly negative curvature: Q = g(eta, sigma),
// dQ/dt = |sigma|^2 - g(K eta, eta) > 0 whenever K < 0.
// ---------------------------------------------------------------------------
inline CriterionReport negative_curvature_check(const CurvatureModel& model,
                                                const std::vector<ConeSample>& samples) {
    const int d = model.fiber_dim();
    const Eigen::MatrixXd K = model(0.0);
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
        if (solver.eigenvalues().maxCoeff() >= 0.0)
            throw precondition_error(
                "negative_curvature_check: model curvature must be strictly negative");
    }
    if (samples.empty())
        throw parameter_error("negative_curvature_check: sample set must be nonempty");

    const SplitSpec split = degenerate_split(d);
    const QFormParams unit_params(1.0);
    CriterionReport rep;
    rep.model_id = model.name;
    rep.c = 0.0;
    rep.r = d;
    std::vector<double> vals(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        vals[i] = form_derivative(unit_params, split, K, samples[i].pair);
    });
    double global_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double& slot = samples[i].cone_class == ConeClass::boundary
                           ? rep.min_form_boundary
                           : rep.min_form_positive;
        slot = std::min(slot, vals[i]);
        if (vals[i] < global_min) {
            global_min = vals[i];
            rep.argmin_t = 0.0;
            rep.argmin_class = samples[i].cone_class;
            rep.argmin_coords = detail::split_coords(split, samples[i].pair);
        }
    }
    rep.samples_used = static_cast<long>(samples.size());
    rep.verdict = rep.min_form_boundary > 0.0 && rep.min_form_positive > 0.0;
    if (!rep.verdict) rep.reason = "negative form minimum";
    return rep;
}

// Convenience sampler + check: `count` boundary and `count` positive samples
// of the degenerate form.
inline CriterionReport negative_curvature_check(const CurvatureModel& model, long count,
                                                std::uint64_t seed) {
    const int d = model.fiber_dim();
    const SplitSpec split = degenerate_split(d);
    const QFormParams unit_params(1.0);
    std::vector<ConeSample> samples =
        cone_sample(unit_params, split, count, seed, ConeClass::boundary);
    std::vector<ConeSample> pos =
        cone_sample(unit_params, split, count, seed, ConeClass::positive);
    samples.insert(samples.end(), std::make_move_iterator(pos.begin()),
                   std::make_move_iterator(pos.end()));
    return negative_curvature_check(model, samples);
}

// ---------------------------------------------------------------------------
// Gap functions over a sampled family of curvature operators.
// ---------------------------------------------------------------------------
inline GapReport gap_functions(const std::vector<std::pair<double, Eigen::MatrixXd>>& family,
                               int r) {
    if (family.empty())
        throw parameter_error("gap_functions: sample set must be nonempty");
    GapReport rep;
    rep.alpha_inf = std::numeric_limits<double>::infinity();
    rep.beta_sup = 0.0;
    std::vector<double> labels, alphas, betas;
    labels.reserve(family.size());
    alphas.reserve(family.size());
    betas.reserve(family.size());
    for (const auto& [label, K] : family) {
        const EigenSplit es = eigen_split(K, r);
        const double lam_r = es.eigenvalues[r - 1];
        const double lam_r1 = es.eigenvalues[r];
        const double alpha = std::sqrt(std::max(0.0, -lam_r));
        rep.alpha_inf = std::min(rep.alpha_inf, alpha);
        double beta = std::numeric_limits<double>::quiet_NaN();
        if (lam_r1 > 0.0) {
            ++rep.beta_undefined_count;
        } else {
            beta = std::sqrt(-lam_r1);
            rep.beta_sup = std::max(rep.beta_sup, beta);
        }
        labels.push_back(label);
        alphas.push_back(alpha);
        betas.push_back(beta);
        ++rep.samples_used;
    }
    // A discrete sampling certifies a uniform gap only when alpha_inf - beta_sup
    // exceeds what the sampling resolves: between adjacent samples the two gap
    // functions can drift toward a crossing by up to half a spacing times their
    // local slopes, so a smaller margin may be an artifact of the grid.
    double spacing = 0.0, slope_alpha = 0.0, slope_beta = 0.0;
    for (std::size_t i = 1; i < labels.size(); ++i) {
        const double ds = std::abs(labels[i] - labels[i - 1]);
        if (ds <= 0.0) continue;
        spacing = std::max(spacing, ds);
        slope_alpha = std::max(slope_alpha, std::abs(alphas[i] - alphas[i - 1]) / ds);
        if (!std::isnan(betas[i]) && !std::isnan(betas[i - 1]))
            slope_beta = std::max(slope_beta, std::abs(betas[i] - betas[i - 1]) / ds);
    }
    rep.resolution_tolerance = 0.5 * spacing * (slope_alpha + slope_beta);
    rep.uniform_gap = rep.beta_undefined_count == 0 &&
                      rep.alpha_inf - rep.beta_sup > rep.resolution_tolerance;
    if (rep.uniform_gap)
        rep.suggested_e = 0.5 * (rep.alpha_inf + rep.beta_sup);
    return rep;
}

// ---------------------------------------------------------------------------
// Largest projection-derivative norm the criterion tolerates: bisection on the
// scale s of synthetic unit-norm B->A blocks injected into S^c.
// ---------------------------------------------------------------------------
struct EpsilonReport {
    std::string model_id;
    double c = 0.0;
    int r = 0;
    double eps_hat = 0.0;
    double base_min_boundary = 0.0;
    double base_min_positive = 0.0;
    long blocks = 0;
    long samples_per_class = 0;
    double alpha_inf = 0.0;
    double beta_sup = 0.0;
    double chain_value = 0.0; // 2 alpha - c - beta^2 / c
    double margin = 0.0;      // min-clause margin at e = c
    std::vector<std::pair<double, double>> trace; // (s, worst min form)
};

inline EpsilonReport corollary_epsilon(const CurvatureModel& model, int r,
                                       const QFormParams& params, std::uint64_t seed,
                                       long count) {
    if (count < 1) throw parameter_error("corollary_epsilon: count must be >= 1");
    const long samples_per_class = 4096;
    const CriterionReport base =
        criterion_check(model, r, params, samples_per_class, seed);
    if (!base.verdict)
        throw precondition_error(
            "corollary_epsilon: base criterion fails (" +
            (base.reason.empty() ? std::string("negative form minimum") : base.reason) +
            ")");

    const int d = model.fiber_dim();
    const int b = d - r;
    const auto boundary = detail::sample_coords(params, r, b, samples_per_class, seed,
                                                ConeClass::boundary);
    const auto positive = detail::sample_coords(params, r, b, samples_per_class, seed,
                                                ConeClass::positive);

    // unit operator-norm B->A blocks (normalized by largest singular value)
    Rng rng(seed ^ 0xA7C0FFEEull);
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        Eigen::MatrixXd D(r, b);
        for (int p = 0; p < r; ++p)
            for (int q = 0; q < b; ++q) D(p, q) = rng.gaussian();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
        const double top = svd.singularValues()[0];
        if (top < 1e-12) {
            D.setZero();
            D(0, 0) = 1.0;
        } else {
            D /= top;
        }
        blocks.push_back(std::move(D));
    }

    const auto ts = detail::criterion_time_grid(model);
    struct TimeSlice {
        Eigen::MatrixXd K_A, K_B;
        std::vector<detail::SampleCoords> bset;
    };
    std::vector<TimeSlice> slices;
    for (double t : ts) {
        const Eigen::MatrixXd K = model(t);
        const EigenSplit es = eigen_split(K, r);
        TimeSlice slice;
        slice.K_A = es.split.basis_A.transpose() * K * es.split.basis_A;
        slice.K_B = es.split.basis_B.transpose() * K * es.split.basis_B;
        slice.bset = boundary;
        for (auto& pr : detail::aligned_probe(params, slice.K_A, slice.K_B))
            slice.bset.push_back(std::move(pr));
        slices.push_back(std::move(slice));
    }

    EpsilonReport rep;
    rep.model_id = model.name;
    rep.c = params.c;
    rep.r = r;
    rep.base_min_boundary = base.min_form_boundary;
    rep.base_min_positive = base.min_form_positive;
    rep.blocks = count;
    rep.samples_per_class = samples_per_class;
    rep.alpha_inf = base.alpha_inf;
    rep.beta_sup = base.beta_sup;
    const MarginReport mr = corollary_margin(base.alpha_inf, base.beta_sup, params.c);
    rep.chain_value = mr.chain_value;
    rep.margin = mr.margin;

    const auto worst_min_form = [&](double s) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& slice : slices) {
            for (const auto& D : blocks) {
                const Eigen::MatrixXd S = assemble_S(params, slice.K_A, slice.K_B, s * D);
                double mv = 0.0;
                long idx = -1;
                detail::min_form_over(S, slice.bset, mv, idx);
                worst = std::min(worst, mv);
                detail::min_form_over(S, positive, mv, idx);
                worst = std::min(worst, mv);
            }
        }
        return worst;
    };

    double lo = 0.0, hi = 1.0;
    double w_hi = worst_min_form(hi);
    rep.trace.emplace_back(hi, w_hi);
    while (w_hi > 0.0 && hi < 1e9) {
        lo = hi;
        hi *= 2.0;
        w_hi = worst_min_form(hi);
        rep.trace.emplace_back(hi, w_hi);
    }
    if (w_hi > 0.0) {
        rep.eps_hat = hi; // criterion effectively insensitive to A' at this scale
        return rep;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double wm = worst_min_form(mid);
        if (it < 12) rep.trace.emplace_back(mid, wm);
        if (wm > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    rep.eps_hat = lo;
    return rep;
}

} // namespace phflow
