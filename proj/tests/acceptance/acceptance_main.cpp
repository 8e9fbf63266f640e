// Acceptance gate: one PASS/FAIL line per criterion, exit code = number of
// failed criteria. Each criterion is self-contained and uses independent
// oracles (closed forms, brute-force minimization, analytic spectra) rather
// than values produced by the code paths under test.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "phflow/phflow.hpp"

using namespace phflow;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << ": " << index << ". " << name;
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << "\n";
    if (!ok) ++g_failures;
}

void run_criterion(int index, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    bool ok = false;
    std::string detail;
    try {
        auto [good, text] = body();
        ok = good;
        detail = text;
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    report(index, name, ok, detail);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

// Closed-form transition for K = diag(lambdas) assembled from 2x2 mode blocks.
Eigen::MatrixXd closed_form_transition(const Eigen::VectorXd& lambdas, double t) {
    const int d = static_cast<int>(lambdas.size());
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    for (int i = 0; i < d; ++i) {
        const Eigen::Matrix2d blk = closed_form_block(lambdas[i], t);
        Phi(i, i) = blk(0, 0);
        Phi(i, d + i) = blk(0, 1);
        Phi(d + i, i) = blk(1, 0);
        Phi(d + i, d + i) = blk(1, 1);
    }
    return Phi;
}

// Brute-force minimization of the boundary form over the aligned family for
// isotropic blocks (kappa_A, kappa_B): parameters are y = |sigma_A|, the
// angle theta between eta_A and sigma_A, and the B-split angle tau. The form
// is evaluated through assemble_S, not through any closed-form shortcut.
double brute_force_boundary_min(double c, double kappa_A, double kappa_B) {
    const QFormParams params(c);
    const Eigen::MatrixXd K_A = kappa_A * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd K_B = kappa_B * Eigen::MatrixXd::Identity(1, 1);
    const Eigen::MatrixXd S = assemble_S(params, K_A, K_B, Eigen::MatrixXd::Zero(2, 1));

    const auto value = [&](double y, double theta, double tau) {
        const double p = y * std::cos(theta); // g(eta_A, sigma_A)
        if (p < 0.0) return std::numeric_limits<double>::infinity();
        Eigen::VectorXd w(6);
        w.setZero();
        w[0] = 1.0;                                  // eta_A = e1
        w[2] = y * std::cos(theta);                  // sigma_A along eta_A
        w[3] = y * std::sin(theta);                  //   and orthogonal part
        const double mag = std::sqrt(p);             // boundary: c^2|eta_B|^2 + |sigma_B|^2 = p
        w[4] = mag * std::cos(tau) / c;              // eta_B
        w[5] = mag * std::sin(tau);                  // sigma_B (aligned B parts)
        return w.dot(S * w);
    };

    double best = std::numeric_limits<double>::infinity();
    double by = 0.0, bt = 0.0, bu = 0.0;
    double ylo = 0.0, yhi = 6.0, tlo = 0.0, thi = M_PI / 2, ulo = 0.0,
           uhi = M_PI / 2;
    for (int round = 0; round < 4; ++round) {
        const int N = 60;
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j)
                for (int k = 0; k <= N; ++k) {
                    const double y = ylo + (yhi - ylo) * i / N;
                    const double th = tlo + (thi - tlo) * j / N;
                    const double ta = ulo + (uhi - ulo) * k / N;
                    const double v = value(y, th, ta);
                    if (v < best) {
                        best = v;
                        by = y;
                        bt = th;
                        bu = ta;
                    }
                }
        const double wy = (yhi - ylo) / N, wt = (thi - tlo) / N, wu = (uhi - ulo) / N;
        ylo = std::max(0.0, by - wy);
        yhi = by + wy;
        tlo = std::max(0.0, bt - wt);
        thi = std::min(M_PI / 2, bt + wt);
        ulo = std::max(0.0, bu - wu);
        uhi = std::min(M_PI / 2, bu + wu);
    }
    return best;
}

std::pair<bool, std::string> integrator_oracle() {
    Eigen::MatrixXd K(2, 2);
    K << -4.0, 0.0, 0.0, -1.0;
    const CurvatureModel model = matrix_model(K, "diag(-4,-1)");
    const Eigen::MatrixXd Phi = transition_matrix(model, 5.0, 1e-3);
    const Eigen::MatrixXd exact =
        closed_form_transition(Eigen::Vector2d(-4.0, -1.0), 5.0);
    const double err = (Phi - exact).cwiseAbs().maxCoeff();

    // Wronskian drift over [0,10] on well-conditioned mode pairs whose
    // pairing stays O(1) along the flow.
    const TangentPair dec1 =
        make_pair(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-2.0, 0.0));
    const TangentPair gro1 =
        make_pair(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(2.0, 0.0));
    const TangentPair dec2 =
        make_pair(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(0.0, -1.0));
    const TangentPair gro2 =
        make_pair(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(0.0, 1.0));
    const std::vector<std::pair<TangentPair, TangentPair>> pairs = {
        {dec1, gro1}, {dec2, gro2}, {dec1, gro2}, {dec2, gro1}};
    double drift = 0.0;
    for (const auto& [p, q] : pairs) {
        const double w0 = wronskian(p, q);
        for (double t = 1.0; t <= 10.0; t += 1.0) {
            const TangentPair pt = propagate_between(model, p, 0.0, t, 1e-3);
            const TangentPair qt = propagate_between(model, q, 0.0, t, 1e-3);
            drift = std::max(drift, std::abs(wronskian(pt, qt) - w0));
        }
    }
    const bool ok = err <= 1e-6 && drift <= 1e-9;
    return {ok, "max componentwise error " + fmt(err) + " (<= 1e-6), wronskian drift " +
                    fmt(drift) + " (<= 1e-9)"};
}

std::pair<bool, std::string> negative_curvature() {
    const CurvatureModel model = constant_curvature_model(1.0, 4);
    const long count = 10000;
    const std::uint64_t seed = 7;
    const CriterionReport rep = negative_curvature_check(model, count, seed);

    // lower bound a^2 * (min sample eta-norm^2) from the identical draws
    const SplitSpec split = degenerate_split(3);
    const QFormParams unit(1.0);
    double min_eta_sq = std::numeric_limits<double>::infinity();
    for (ConeClass cls : {ConeClass::boundary, ConeClass::positive}) {
        for (const auto& s : cone_sample(unit, split, count, seed, cls))
            min_eta_sq = std::min(min_eta_sq, s.pair.eta.squaredNorm());
    }
    const double floor_bound = 1.0 * min_eta_sq;
    const double min_seen = std::min(rep.min_form_boundary, rep.min_form_positive);
    const bool ok = rep.verdict && min_seen >= floor_bound && floor_bound > 0.0;
    return {ok, "min derivative " + fmt(min_seen) + " >= a^2*min|eta|^2 = " +
                    fmt(floor_bound) + ", verdict " + (rep.verdict ? "pass" : "fail")};
}

std::pair<bool, std::string> rank_one_criterion() {
    const CurvatureModel model = rank_one_symmetric_model(1.0, 4, 2);
    const CriterionReport pass = criterion_check(model, 2, QFormParams(1.5), 10000, 7);
    const double oracle = brute_force_boundary_min(1.5, -4.0, -1.0);
    const double rel = std::abs(pass.min_form_boundary - oracle) / std::abs(oracle);
    const CriterionReport fail = criterion_check(model, 2, QFormParams(4.0), 10000, 7);
    const bool ok = pass.verdict && rel <= 0.05 && !fail.verdict;
    return {ok, "min_form_boundary " + fmt(pass.min_form_boundary) +
                    " vs brute-force oracle " + fmt(oracle) + " (rel err " + fmt(rel) +
                    "), c=4 verdict " + (fail.verdict ? "pass" : "fail")};
}

std::pair<bool, std::string> corollary_margin_and_epsilon() {
    const Eigen::MatrixXd K = rank_one_symmetric_model(1.0, 4, 2)(0.0);
    const GapReport gap = gap_functions({{0.0, K}}, 2);
    bool ok = gap.alpha_inf == 2.0 && gap.beta_sup == 1.0;
    for (double e : {1.1, 1.5, 1.9})
        ok = ok && corollary_margin(gap.alpha_inf, gap.beta_sup, e).margin > 0.0;
    for (double e : {0.9, 2.5})
        ok = ok && corollary_margin(gap.alpha_inf, gap.beta_sup, e).margin <= 0.0;

    const EpsilonReport eps = corollary_epsilon(rank_one_symmetric_model(1.0, 4, 2), 2,
                                                QFormParams(1.5), 7, 16);
    ok = ok && eps.eps_hat > 0.0;
    return {ok, "alpha_inf " + fmt(gap.alpha_inf) + ", beta_sup " + fmt(gap.beta_sup) +
                    ", margin signs across {0.9,1.1,1.5,1.9,2.5} ok, eps_hat " +
                    fmt(eps.eps_hat)};
}

std::pair<bool, std::string> exponent_recovery() {
    const CurvatureModel model = rank_one_symmetric_model(1.0, 4, 2);
    const LyapunovReport rep = lyapunov_spectrum(model, 50.0, 1e-3, 0.5, 7);
    const double expected[6] = {-2.0, -2.0, -1.0, 1.0, 2.0, 2.0};
    double worst = 0.0;
    for (int i = 0; i < 6; ++i)
        worst = std::max(worst,
                         std::abs(rep.exponents[i] - expected[i]) / std::abs(expected[i]));
    const SplittingResult split = splitting_dims(rep, 0.25);
    const bool dims_ok =
        split.dim_stable == 2 && split.dim_center == 2 && split.dim_unstable == 2;
    const bool ok = worst <= 0.01 && dims_ok;
    return {ok, "worst relative exponent error " + fmt(worst) +
                    " (<= 0.01), splitting (" + std::to_string(split.dim_stable) + "," +
                    std::to_string(split.dim_center) + "," +
                    std::to_string(split.dim_unstable) + ")"};
}

std::pair<bool, std::string> higher_rank_obstruction() {
    std::vector<RootDatum> roots = {{Eigen::Vector2d(1.0, 0.0), 1},
                                    {Eigen::Vector2d(0.0, 1.0), 1}};
    auto [path, smax] = great_circle_path(Eigen::Vector2d(1.0, 0.0),
                                          Eigen::Vector2d(0.0, 1.0));
    const HigherRankFamily fam = higher_rank_model(roots, 2, path, smax);

    double min_gap = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, Eigen::MatrixXd>> family;
    for (double s = 0.0; s <= fam.s_max + 0.5e-3; s += 1e-3) {
        const double sc = std::min(s, fam.s_max);
        const Eigen::MatrixXd K = fam.at(sc)(0.0);
        family.emplace_back(sc, K);
        min_gap = std::min(min_gap, eigen_split(K, 1).gap);
    }
    const GapReport rep = gap_functions(family, 1);
    const bool ok = min_gap <= 1e-3 && !rep.uniform_gap;
    return {ok, "min gap along the path " + fmt(min_gap) +
                    " (<= 1e-3), uniform_gap " + (rep.uniform_gap ? "true" : "false")};
}

std::pair<bool, std::string> non_anosov_scenario_checks() {
    std::ostringstream detail;

    // (a) flat-center orbit: exponents {-2, 0, 0, 2}, bad set everywhere
    const CurvatureModel on_gamma = non_anosov_scenario(1.0, 3, 1, BumpSpec{}, 0.0, true);
    const LyapunovReport ly = lyapunov_spectrum(on_gamma, 50.0, 1e-3, 0.5, 7);
    bool ok = std::abs(ly.exponents[0] + 2.0) < 0.02 &&
              std::abs(ly.exponents[3] - 2.0) < 0.02 &&
              std::abs(ly.exponents[1]) < 0.05 && std::abs(ly.exponents[2]) < 0.05;
    const BadSetReport gamma_bad =
        time_in_bad_set(on_gamma, 1, QFormParams(1.5), 50.0, 0.01);
    ok = ok && gamma_bad.fraction == 1.0;
    detail << "on-orbit exponents {" << fmt(ly.exponents[0]) << ","
           << fmt(ly.exponents[1]) << "," << fmt(ly.exponents[2]) << ","
           << fmt(ly.exponents[3]) << "}, bad fraction " << gamma_bad.fraction;

    // (b) bump with 10% duty cycle: cones retained over 20 periods; bad-set
    // fraction within 20% of the bump sub-level measure 2*width/period
    BumpSpec bump;
    bump.center = 10.0;
    bump.width = 1.0;
    bump.amplitude = 1.0;
    const CurvatureModel bumpy = non_anosov_scenario(1.0, 4, 2, bump, 20.0);
    const ConeInvarianceReport cones =
        cone_invariance_test(bumpy, 2, QFormParams(1.5), 400.0, 20, 7);
    const BadSetReport bad = time_in_bad_set(bumpy, 2, QFormParams(1.5), 200.0, 0.01);
    const double duty = 2.0 * bump.width / 20.0;
    ok = ok && cones.fraction_retained == 1.0 &&
         std::abs(bad.fraction - duty) <= 0.2 * duty;
    detail << "; bump retention " << cones.fraction_retained << ", bad fraction "
           << fmt(bad.fraction) << " vs duty " << fmt(duty);

    // (c) conformal perturbation with Hess = -a^2 Id lifts -a^2 to 0 exactly
    const Eigen::MatrixXd K1 = conformal_perturbation(
        rank_one_symmetric_model(1.0, 4, 2)(0.0), -Eigen::MatrixXd::Identity(4, 4));
    ok = ok && K1(2, 2) == 0.0 && K1(0, 0) == -3.0;
    detail << "; perturbed center eigenvalue " << fmt(K1(2, 2));
    return {ok, detail.str()};
}

std::pair<bool, std::string> oracle_agreement() {
    struct Case {
        CurvatureModel model;
        int r;
    };
    BumpSpec bump;
    bump.center = 10.0;
    bump.width = 1.0;
    bump.amplitude = 1.0;
    auto [path, smax] = great_circle_path(Eigen::Vector2d(1.0, 0.0),
                                          Eigen::Vector2d(0.0, 1.0));
    const HigherRankFamily fam = higher_rank_model(
        {{Eigen::Vector2d(1.0, 0.0), 1}, {Eigen::Vector2d(0.0, 1.0), 1}}, 2, path, smax);
    std::vector<Case> zoo;
    zoo.push_back({constant_curvature_model(1.0, 4), 1});
    zoo.push_back({rank_one_symmetric_model(1.0, 4, 2), 2});
    zoo.push_back({non_anosov_scenario(1.0, 3, 1, BumpSpec{}, 0.0, true), 1});
    zoo.push_back({non_anosov_scenario(1.0, 4, 2, bump, 20.0), 2});
    zoo.push_back({fam.at(0.3), 1});

    double worst = 0.0;
    Rng rng(1234);
    for (const auto& cs : zoo) {
        const int d = cs.model.fiber_dim();
        const SplitSpec split = eigen_split(cs.model(0.0), cs.r).split;
        const QFormParams params(1.5);
        for (int k = 0; k < 1000; ++k) {
            Eigen::VectorXd eta = rng.gaussian_vector(d), sigma = rng.gaussian_vector(d);
            const double nrm = std::sqrt(eta.squaredNorm() + sigma.squaredNorm());
            eta /= nrm;
            sigma /= nrm;
            const TangentPair w = make_pair(eta, sigma);
            const double alg = form_derivative(params, split, cs.model(0.0), w);
            const double fd =
                fd_derivative_oracle(cs.model, split, params, w, 1e-4, 1e-4);
            worst = std::max(worst, std::abs(alg - fd));
        }
    }
    return {worst <= 1e-5,
            "worst |algebraic - finite difference| " + fmt(worst) + " (<= 1e-5)"};
}

std::pair<bool, std::string> reproducibility() {
    ExperimentConfig cfg = parse_config(
        "model = rank_one\na = 1\nn = 4\nr = 2\ntask = criterion\nc = 1.5\n"
        "count = 3000\nseed = 7\n");

    setenv("PHFLOW_WORKERS", "1", 1);
    const RunResult serial = run_experiment_capture(cfg);
    setenv("PHFLOW_WORKERS", "8", 1);
    const RunResult wide = run_experiment_capture(cfg);
    unsetenv("PHFLOW_WORKERS");
    const RunResult ambient = run_experiment_capture(cfg);
    const RunResult repeat = run_experiment_capture(cfg);

    const bool ok = serial.csv == wide.csv && serial.csv == ambient.csv &&
                    ambient.csv == repeat.csv &&
                    serial.report.dump() == wide.report.dump() &&
                    serial.report.dump() == ambient.report.dump() &&
                    ambient.report.dump() == repeat.report.dump();
    return {ok, ok ? "byte-identical across reruns and worker counts"
                   : "outputs differ across worker counts or reruns"};
}

} // namespace

int main() {
    run_criterion(1, "integrator oracle (closed form + wronskian)", integrator_oracle);
    run_criterion(2, "negative-curvature degenerate form", negative_curvature);
    run_criterion(3, "rank-one criterion window", rank_one_criterion);
    run_criterion(4, "corollary margin and epsilon", corollary_margin_and_epsilon);
    run_criterion(5, "exponent recovery and splitting dims", exponent_recovery);
    run_criterion(6, "higher-rank gap obstruction", higher_rank_obstruction);
    run_criterion(7, "non-Anosov scenario (orbit, bump, conformal)",
                  non_anosov_scenario_checks);
    run_criterion(8, "algebraic vs finite-difference derivative", oracle_agreement);
    run_criterion(9, "seeded reproducibility across parallelism", reproducibility);

    if (g_failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << g_failures << " acceptance criteria failed\n";
    return g_failures;
}
