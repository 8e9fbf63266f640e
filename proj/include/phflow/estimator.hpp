#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phflow/criterion.hpp"
#include "phflow/dynamics.hpp"
#include "phflow/errors.hpp"
#include "phflow/models.hpp"

namespace phflow {

// ---------------------------------------------------------------------------
// Lyapunov spectrum by discrete QR re-orthonormalization of the full basis.
// The accumulation starts from the identity basis: a random rotation would
// bias zero exponents by ~log(T)/T, which matters at the tested horizons.
// ---------------------------------------------------------------------------
struct LyapunovReport {
    std::string model_id;
    Eigen::VectorXd exponents; // sorted ascending, size 2(n-1)
    double T_used = 0.0;
    double reorth_period = 0.0;
    double residual = 0.0; // exponent change over the last quarter of T
    std::uint64_t seed = 0;
};

inline LyapunovReport lyapunov_spectrum(const CurvatureModel& model, double T,
                                        double step, double reorth_period,
                                        std::uint64_t seed) {
    if (reorth_period <= 0.0)
        throw parameter_error("lyapunov_spectrum: reorth_period must be positive");
    if (T < 10.0 * reorth_period)
        throw parameter_error("lyapunov_spectrum: requires T >= 10 * reorth_period");
    const int m = 2 * model.fiber_dim();
    const long nseg = std::max<long>(
        1, static_cast<long>(std::ceil(T / reorth_period - 1e-12)));

    Eigen::MatrixXd Y = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd logsum = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd snapshot; // exponents at the first checkpoint past 3T/4
    double snapshot_T = 0.0;

    for (long k = 0; k < nseg; ++k) {
        const double t0 = T * static_cast<double>(k) / static_cast<double>(nseg);
        const double t1 = T * static_cast<double>(k + 1) / static_cast<double>(nseg);
        try {
            Y = detail::integrate(model, std::move(Y), t0, t1, step);
        } catch (const numeric_error& e) {
            throw numeric_error(std::string(e.what()) +
                                " between re-orthonormalizations; reduce reorth_period");
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
        Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int j = 0; j < m; ++j) {
            double rjj = R(j, j);
            if (rjj < 0.0) {
                rjj = -rjj;
                Q.col(j) = -Q.col(j);
            }
            if (!(rjj > 0.0) || !std::isfinite(rjj))
                throw numeric_error(
                    "lyapunov_spectrum: degenerate growth factor; reduce reorth_period");
            logsum[j] += std::log(rjj);
        }
        Y = std::move(Q);
        if (snapshot.size() == 0 && t1 >= 0.75 * T) {
            snapshot = logsum / t1;
            std::sort(snapshot.data(), snapshot.data() + m);
            snapshot_T = t1;
        }
    }

    LyapunovReport rep;
    rep.model_id = model.name;
    rep.T_used = T;
    rep.reorth_period = reorth_period;
    rep.seed = seed;
    Eigen::VectorXd exps = logsum / T;
    std::sort(exps.data(), exps.data() + m);
    rep.exponents = exps;
    rep.residual = 0.0;
    if (snapshot.size() == static_cast<Eigen::Index>(m) && snapshot_T < T) {
        for (int j = 0; j < m; ++j)
            rep.residual = std::max(rep.residual, std::abs(exps[j] - snapshot[j]));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Splitting dimensions from exponent clustering.
// ---------------------------------------------------------------------------
struct SplittingResult {
    int dim_stable = 0;
    int dim_center = 0;
    int dim_unstable = 0;
    std::string verdict; // "three-way" | "anosov-like" | "no dominated splitting detected"
    bool dominated = false;
};

inline SplittingResult splitting_dims(const LyapunovReport& report, double gap_threshold) {
    const Eigen::VectorXd& e = report.exponents;
    const int m = static_cast<int>(e.size());
    if (m < 2) throw parameter_error("splitting_dims: need at least two exponents");
    for (int i = 1; i < m; ++i)
        if (e[i] < e[i - 1])
            throw contract_violation("splitting_dims: exponents must be sorted ascending");

    std::vector<int> cluster_sizes;
    int current = 1;
    for (int i = 1; i < m; ++i) {
        if (e[i] - e[i - 1] > gap_threshold) {
            cluster_sizes.push_back(current);
            current = 1;
        } else {
            ++current;
        }
    }
    cluster_sizes.push_back(current);

    SplittingResult res;
    if (cluster_sizes.size() == 1) {
        res.verdict = "no dominated splitting detected";
        return res;
    }
    res.dominated = true;
    res.dim_stable = cluster_sizes.front();
    res.dim_unstable = cluster_sizes.back();
    for (std::size_t i = 1; i + 1 < cluster_sizes.size(); ++i)
        res.dim_center += cluster_sizes[i];
    res.verdict = cluster_sizes.size() == 2 ? "anosov-like" : "three-way";
    return res;
}

// ---------------------------------------------------------------------------
// Finite-time cone invariance test. Propagates positive-cone samples with a
// shared per-segment transition matrix, renormalizing columns after every
// segment (Q's sign is scale-invariant). When the boundary form has a
// negative direction at t = 0, one adversarial sample constructed from the
// argmin (B-part pulled inward) is added, so a failing criterion produces an
// observable escape.
// ---------------------------------------------------------------------------
struct ConeInvarianceReport {
    std::string model_id;
    double c = 0.0;
    int r = 0;
    double fraction_retained = 0.0;
    double min_exit_time = std::numeric_limits<double>::quiet_NaN();
    bool any_exit = false;
    double contraction_stat = 0.0; // median of Q^c(w_T / |w_T|)
    long samples_used = 0;
    bool adversarial_added = false;
    std::vector<double> exit_times; // per sample; NaN = never exited
    std::vector<double> final_q;    // per sample, normalized final Q
};

namespace detail {

// Applies the transition over [t0, t1] to the column bundle, renormalizing
// afterwards; overflow inside a segment is handled by recursive halving
// (renormalize-and-continue, never abort).
inline void apply_segment(const CurvatureModel& model, Eigen::MatrixXd& W, double t0,
                          double t1, double step, int depth = 0) {
    try {
        const Eigen::MatrixXd Phi = transition_between(model, t0, t1, step);
        W = Phi * W;
    } catch (const numeric_error&) {
        if (depth > 24) throw;
        const double mid = 0.5 * (t0 + t1);
        apply_segment(model, W, t0, mid, step, depth + 1);
        apply_segment(model, W, mid, t1, step, depth + 1);
        return;
    }
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        const double n = W.col(j).norm();
        if (n > 0.0 && std::isfinite(n)) W.col(j) /= n;
    }
}

} // namespace detail

inline ConeInvarianceReport cone_invariance_test(const CurvatureModel& model, int r,
                                                 const QFormParams& params, double T,
                                                 long count, std::uint64_t seed,
                                                 double step = 1e-3) {
    if (count < 1) throw parameter_error("cone_invariance_test: count must be >= 1");
    if (T <= 0.0) throw parameter_error("cone_invariance_test: T must be positive");
    const int d = model.fiber_dim();
    const int b = d - r;
    if (r < 1 || b < 1)
        throw parameter_error("cone_invariance_test: r must satisfy 1 <= r <= fiber_dim - 1");

    const Eigen::MatrixXd K0 = model(0.0);
    const EigenSplit es = eigen_split(K0, r);
    const SplitSpec& split = es.split;

    auto positive = detail::sample_coords(params, r, b, count, seed, ConeClass::positive);

    // adversarial escape candidate from the boundary argmin at t = 0
    bool adversarial = false;
    {
        auto bset = detail::sample_coords(params, r, b, count, seed, ConeClass::boundary);
        const Eigen::MatrixXd K_A = split.basis_A.transpose() * K0 * split.basis_A;
        const Eigen::MatrixXd K_B = split.basis_B.transpose() * K0 * split.basis_B;
        for (auto& pr : detail::aligned_probe(params, K_A, K_B))
            bset.push_back(std::move(pr));
        const Eigen::MatrixXd S = assemble_S(params, K_A, K_B, split.aprime);
        double mv = 0.0;
        long idx = -1;
        detail::min_form_over(S, bset, mv, idx);
        if (mv < 0.0 && idx >= 0) {
            Eigen::VectorXd w = bset[static_cast<std::size_t>(idx)].w;
            w.segment(2 * r, 2 * b) *= 1.0 - 1e-6; // pull just inside the cone
            positive.push_back(detail::SampleCoords{std::move(w), 0.0});
            adversarial = true;
        }
    }

    const long n = static_cast<long>(positive.size());
    Eigen::MatrixXd W(2 * d, n);
    for (long j = 0; j < n; ++j) {
        const TangentPair p = detail::embed_coords(split, positive[static_cast<std::size_t>(j)].w);
        W.col(j).head(d) = p.eta;
        W.col(j).tail(d) = p.sigma;
        W.col(j) /= W.col(j).norm();
    }

    const auto q_of_columns = [&](const Eigen::MatrixXd& M) {
        const Eigen::MatrixXd EA = split.basis_A.transpose() * M.topRows(d);
        const Eigen::MatrixXd SA = split.basis_A.transpose() * M.bottomRows(d);
        const Eigen::MatrixXd EB = split.basis_B.transpose() * M.topRows(d);
        const Eigen::MatrixXd SB = split.basis_B.transpose() * M.bottomRows(d);
        Eigen::VectorXd q(M.cols());
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            q[j] = EA.col(j).dot(SA.col(j)) - params.c * params.c * EB.col(j).squaredNorm() -
                   SB.col(j).squaredNorm();
        return q;
    };

    const double cadence = std::min(0.5, T);
    const long nseg =
        std::max<long>(1, static_cast<long>(std::ceil(T / cadence - 1e-12)));
    std::vector<double> exit_time(static_cast<std::size_t>(n),
                                  std::numeric_limits<double>::quiet_NaN());
    for (long k = 0; k < nseg; ++k) {
        const double t0 = T * static_cast<double>(k) / static_cast<double>(nseg);
        const double t1 = T * static_cast<double>(k + 1) / static_cast<double>(nseg);
        detail::apply_segment(model, W, t0, t1, step);
        const Eigen::VectorXd q = q_of_columns(W);
        for (long j = 0; j < n; ++j) {
            if (q[j] <= 0.0 && std::isnan(exit_time[static_cast<std::size_t>(j)]))
                exit_time[static_cast<std::size_t>(j)] = t1;
        }
    }

    ConeInvarianceReport rep;
    rep.model_id = model.name;
    rep.c = params.c;
    rep.r = r;
    rep.samples_used = n;
    rep.adversarial_added = adversarial;
    const Eigen::VectorXd qf = q_of_columns(W);
    long retained = 0;
    for (long j = 0; j < n; ++j)
        if (qf[j] > 0.0) ++retained;
    rep.fraction_retained = static_cast<double>(retained) / static_cast<double>(n);
    rep.exit_times = exit_time;
    rep.final_q.assign(qf.data(), qf.data() + n);
    for (double et : exit_time) {
        if (!std::isnan(et)) {
            rep.any_exit = true;
            if (std::isnan(rep.min_exit_time) || et < rep.min_exit_time)
                rep.min_exit_time = et;
        }
    }
    std::vector<double> sorted_q(rep.final_q);
    std::sort(sorted_q.begin(), sorted_q.end());
    const std::size_t half = sorted_q.size() / 2;
    rep.contraction_stat = sorted_q.size() % 2 == 1
                               ? sorted_q[half]
                               : 0.5 * (sorted_q[half - 1] + sorted_q[half]);
    return rep;
}

// ---------------------------------------------------------------------------
// Fraction of [0, T] where the pointwise criterion fails. A time is bad when
// (a) the form minimum over a fixed boundary sample set is <= 0, or (b) the
// first B-eigenvalue is nonnegative (no admissible center rate), or (c) it
// exceeds -beta_ref^2, the best uniform center-curvature bound the scanned
// window admits.
// ---------------------------------------------------------------------------
struct BadSetRow {
    double t = 0.0;
    double min_form = 0.0;
    bool in_bad_set = false;
};

struct BadSetReport {
    std::string model_id;
    double c = 0.0;
    int r = 0;
    double fraction = 0.0;
    double beta_ref = 0.0;
    long boundary_samples = 0;
    std::vector<BadSetRow> rows;
};

inline BadSetReport time_in_bad_set(const CurvatureModel& model, int r,
                                    const QFormParams& params, double T, double dt) {
    if (dt <= 0.0) throw parameter_error("time_in_bad_set: dt must be positive");
    if (T <= 0.0) throw parameter_error("time_in_bad_set: T must be positive");
    const int d = model.fiber_dim();
    const int b = d - r;
    if (r < 1 || b < 1)
        throw parameter_error("time_in_bad_set: r must satisfy 1 <= r <= fiber_dim - 1");

    constexpr std::uint64_t kFixedSeed = 0xBAD5E7ull; // op signature carries no seed
    constexpr long kBoundaryCount = 512;
    const auto boundary = detail::sample_coords(params, r, b, kBoundaryCount, kFixedSeed,
                                                ConeClass::boundary);

    const long nt = static_cast<long>(std::floor(T / dt + 1e-9)) + 1;
    std::vector<double> lam_r1(static_cast<std::size_t>(nt));
    std::vector<Eigen::MatrixXd> KA(static_cast<std::size_t>(nt)),
        KB(static_cast<std::size_t>(nt));
    double beta_ref_sq = 0.0;
    for (long i = 0; i < nt; ++i) {
        const double t = dt * static_cast<double>(i);
        const Eigen::MatrixXd K = model(t);
        const EigenSplit es = eigen_split(K, r);
        lam_r1[static_cast<std::size_t>(i)] = es.eigenvalues[r];
        KA[static_cast<std::size_t>(i)] =
            es.split.basis_A.transpose() * K * es.split.basis_A;
        KB[static_cast<std::size_t>(i)] =
            es.split.basis_B.transpose() * K * es.split.basis_B;
        beta_ref_sq = std::max(beta_ref_sq, std::max(0.0, -es.eigenvalues[r]));
    }

    BadSetReport rep;
    rep.model_id = model.name;
    rep.c = params.c;
    rep.r = r;
    rep.beta_ref = std::sqrt(beta_ref_sq);
    rep.boundary_samples = kBoundaryCount;
    rep.rows.resize(static_cast<std::size_t>(nt));
    long bad = 0;
    for (long i = 0; i < nt; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        std::vector<detail::SampleCoords> bset = boundary;
        for (auto& pr : detail::aligned_probe(params, KA[ui], KB[ui]))
            bset.push_back(std::move(pr));
        const Eigen::MatrixXd S =
            assemble_S(params, KA[ui], KB[ui], Eigen::MatrixXd::Zero(r, b));
        double mv = 0.0;
        long idx = -1;
        detail::min_form_over(S, bset, mv, idx);
        const bool in_bad = mv <= 0.0 || lam_r1[ui] >= -1e-9 ||
                            lam_r1[ui] > -beta_ref_sq + 1e-9;
        rep.rows[ui] = BadSetRow{dt * static_cast<double>(i), mv, in_bad};
        if (in_bad) ++bad;
    }
    rep.fraction = static_cast<double>(bad) / static_cast<double>(nt);
    return rep;
}

} // namespace phflow
