#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "phflow/config.hpp"
#include "phflow/criterion.hpp"
#include "phflow/errors.hpp"
#include "phflow/estimator.hpp"

namespace phflow {

// Exit codes: 0 = verdict pass / task complete, 1 = verdict fail,
// 2 = execution error (bad config, numeric failure, unwritable output).
enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_error = 2 };

namespace detail {

inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline nlohmann::json finite_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

} // namespace detail

// In-memory result of one experiment; run_experiment writes it to disk.
struct RunResult {
    int exit_code = exit_error;
    nlohmann::json report;
    std::string csv;
};

namespace detail {

inline RunResult run_criterion(const ExperimentConfig& cfg) {
    const CurvatureModel model = build_model(cfg);
    const QFormParams params(*cfg.c);
    const int r = *cfg.r;
    const long count = *cfg.count;
    const std::uint64_t seed = *cfg.seed;
    const CriterionReport rep = criterion_check(model, r, params, count, seed);

    RunResult out;
    out.exit_code = rep.verdict ? exit_pass : exit_fail;
    nlohmann::json j;
    j["task"] = "criterion";
    j["model"] = rep.model_id;
    j["c"] = rep.c;
    j["r"] = rep.r;
    j["count"] = count;
    j["seed"] = seed;
    j["min_form_boundary"] = rep.min_form_boundary;
    j["min_form_positive"] = rep.min_form_positive;
    j["samples_used"] = rep.samples_used;
    j["verdict"] = rep.verdict;
    j["reason"] = rep.reason;
    j["argmin_t"] = rep.argmin_t;
    j["argmin_class"] = cone_class_name(rep.argmin_class);
    j["argmin_coords"] = vector_json(rep.argmin_coords);
    j["alpha_inf"] = finite_or_null(rep.alpha_inf);
    j["beta_sup"] = rep.beta_sup;
    j["suggested_e"] = finite_or_null(rep.suggested_e);
    j["uniform_gap"] = rep.uniform_gap;
    out.report = std::move(j);

    // Per-sample table: the same draws the check used, each scored by its
    // worst form value over the evaluation time grid.
    const int b = model.fiber_dim() - r;
    const auto boundary =
        sample_coords(params, r, b, count, seed, ConeClass::boundary);
    const auto positive =
        sample_coords(params, r, b, count, seed, ConeClass::positive);
    const auto ts = criterion_time_grid(model);
    std::vector<Eigen::MatrixXd> Ss;
    Ss.reserve(ts.size());
    for (double t : ts) {
        const Eigen::MatrixXd K = model(t);
        const EigenSplit es = eigen_split(K, r);
        Ss.push_back(assemble_S(params,
                                es.split.basis_A.transpose() * K * es.split.basis_A,
                                es.split.basis_B.transpose() * K * es.split.basis_B,
                                es.split.aprime));
    }
    std::ostringstream csv;
    csv << "sample_id,t,cone_class,q_value,form_value\n";
    const auto emit = [&](const std::vector<SampleCoords>& set, ConeClass cls,
                          long base_id) {
        std::vector<double> best(set.size());
        std::vector<double> best_t(set.size());
        parallel_for(set.size(), [&](std::size_t i) {
            double mv = std::numeric_limits<double>::infinity();
            double mt = ts.front();
            for (std::size_t k = 0; k < Ss.size(); ++k) {
                const double v = set[i].w.dot(Ss[k] * set[i].w);
                if (v < mv) {
                    mv = v;
                    mt = ts[k];
                }
            }
            best[i] = mv;
            best_t[i] = mt;
        });
        for (std::size_t i = 0; i < set.size(); ++i) {
            csv << (base_id + static_cast<long>(i)) << ',' << fmt_g17(best_t[i])
                << ',' << cone_class_name(cls) << ',' << fmt_g17(set[i].qvalue)
                << ',' << fmt_g17(best[i]) << '\n';
        }
    };
    emit(boundary, ConeClass::boundary, 0);
    emit(positive, ConeClass::positive, count);
    out.csv = csv.str();
    return out;
}

inline RunResult run_gap(const ExperimentConfig& cfg) {
    const int r = *cfg.r;
    std::vector<std::pair<double, Eigen::MatrixXd>> family;
    if (cfg.model == "higher_rank" && cfg.path_from && cfg.path_to) {
        const HigherRankFamily fam = build_family(cfg);
        const double ds = cfg.s_step_or_default();
        for (double s = 0.0; s <= fam.s_max + 0.5 * ds; s += ds) {
            const double sc = std::min(s, fam.s_max);
            family.emplace_back(sc, fam.at(sc)(0.0));
        }
    } else {
        const CurvatureModel model = build_model(cfg);
        for (double t : criterion_time_grid(model)) family.emplace_back(t, model(t));
    }
    const GapReport rep = gap_functions(family, r);

    RunResult out;
    out.exit_code = rep.uniform_gap ? exit_pass : exit_fail;
    nlohmann::json j;
    j["task"] = "gap";
    j["model"] = cfg.model;
    j["r"] = r;
    j["alpha_inf"] = rep.alpha_inf;
    j["beta_sup"] = rep.beta_sup;
    j["uniform_gap"] = rep.uniform_gap;
    j["suggested_e"] = finite_or_null(rep.suggested_e);
    j["samples_used"] = rep.samples_used;
    j["beta_undefined_count"] = rep.beta_undefined_count;
    j["resolution_tolerance"] = rep.resolution_tolerance;
    out.report = std::move(j);

    std::ostringstream csv;
    csv << "sample,lambda_r,lambda_r1,alpha,beta,gap\n";
    for (const auto& [label, K] : family) {
        const EigenSplit es = eigen_split(K, r);
        const double lam_r = es.eigenvalues[r - 1];
        const double lam_r1 = es.eigenvalues[r];
        csv << fmt_g17(label) << ',' << fmt_g17(lam_r) << ',' << fmt_g17(lam_r1)
            << ',' << fmt_g17(std::sqrt(std::max(0.0, -lam_r))) << ','
            << fmt_g17(std::sqrt(std::max(0.0, -lam_r1))) << ','
            << fmt_g17(es.gap) << '\n';
    }
    out.csv = csv.str();
    return out;
}

inline RunResult run_lyapunov(const ExperimentConfig& cfg) {
    const CurvatureModel model = build_model(cfg);
    const LyapunovReport rep =
        lyapunov_spectrum(model, *cfg.T, cfg.step_or_default(),
                          cfg.reorth_or_default(), *cfg.seed);
    const double threshold = cfg.gap_threshold_or_default();
    const SplittingResult split = splitting_dims(rep, threshold);

    RunResult out;
    out.exit_code = exit_pass;
    nlohmann::json j;
    j["task"] = "lyapunov";
    j["model"] = rep.model_id;
    j["T"] = rep.T_used;
    j["reorth_period"] = rep.reorth_period;
    j["seed"] = rep.seed;
    j["residual"] = rep.residual;
    j["exponents"] = vector_json(rep.exponents);
    j["gap_threshold"] = threshold;
    j["splitting"] = {{"dim_stable", split.dim_stable},
                      {"dim_center", split.dim_center},
                      {"dim_unstable", split.dim_unstable},
                      {"verdict", split.verdict},
                      {"dominated", split.dominated}};
    out.report = std::move(j);

    std::ostringstream csv;
    csv << "index,exponent,residual\n";
    for (Eigen::Index i = 0; i < rep.exponents.size(); ++i)
        csv << i << ',' << fmt_g17(rep.exponents[i]) << ','
            << fmt_g17(rep.residual) << '\n';
    out.csv = csv.str();
    return out;
}

inline RunResult run_cones(const ExperimentConfig& cfg) {
    const CurvatureModel model = build_model(cfg);
    const QFormParams params(*cfg.c);
    const ConeInvarianceReport rep =
        cone_invariance_test(model, *cfg.r, params, *cfg.T, *cfg.count, *cfg.seed,
                             cfg.step_or_default());

    RunResult out;
    out.exit_code = rep.fraction_retained == 1.0 ? exit_pass : exit_fail;
    nlohmann::json j;
    j["task"] = "cones";
    j["model"] = rep.model_id;
    j["c"] = rep.c;
    j["r"] = rep.r;
    j["T"] = *cfg.T;
    j["fraction_retained"] = rep.fraction_retained;
    j["min_exit_time"] = finite_or_null(rep.min_exit_time);
    j["any_exit"] = rep.any_exit;
    j["contraction_stat"] = rep.contraction_stat;
    j["samples_used"] = rep.samples_used;
    j["adversarial_added"] = rep.adversarial_added;
    out.report = std::move(j);

    std::ostringstream csv;
    csv << "sample_id,exit_time,q_final\n";
    for (std::size_t i = 0; i < rep.final_q.size(); ++i) {
        const double et = rep.exit_times[i];
        csv << i << ',' << fmt_g17(std::isnan(et) ? -1.0 : et) << ','
            << fmt_g17(rep.final_q[i]) << '\n';
    }
    out.csv = csv.str();
    return out;
}

inline RunResult run_badset(const ExperimentConfig& cfg) {
    const CurvatureModel model = build_model(cfg);
    const QFormParams params(*cfg.c);
    const BadSetReport rep =
        time_in_bad_set(model, *cfg.r, params, *cfg.T, cfg.dt_or_default());

    RunResult out;
    out.exit_code = exit_pass;
    nlohmann::json j;
    j["task"] = "badset";
    j["model"] = rep.model_id;
    j["c"] = rep.c;
    j["r"] = rep.r;
    j["T"] = *cfg.T;
    j["dt"] = cfg.dt_or_default();
    j["fraction"] = rep.fraction;
    j["beta_ref"] = rep.beta_ref;
    j["boundary_samples"] = rep.boundary_samples;
    out.report = std::move(j);

    std::ostringstream csv;
    csv << "t,min_form,in_bad_set\n";
    for (const auto& row : rep.rows)
        csv << fmt_g17(row.t) << ',' << fmt_g17(row.min_form) << ','
            << (row.in_bad_set ? 1 : 0) << '\n';
    out.csv = csv.str();
    return out;
}

inline RunResult run_epsilon(const ExperimentConfig& cfg) {
    const CurvatureModel model = build_model(cfg);
    const QFormParams params(*cfg.c);
    const EpsilonReport rep =
        corollary_epsilon(model, *cfg.r, params, *cfg.seed, *cfg.count);

    RunResult out;
    out.exit_code = rep.eps_hat > 0.0 ? exit_pass : exit_fail;
    nlohmann::json j;
    j["task"] = "epsilon";
    j["model"] = rep.model_id;
    j["c"] = rep.c;
    j["r"] = rep.r;
    j["eps_hat"] = rep.eps_hat;
    j["base_min_boundary"] = rep.base_min_boundary;
    j["base_min_positive"] = rep.base_min_positive;
    j["blocks"] = rep.blocks;
    j["samples_per_class"] = rep.samples_per_class;
    j["alpha_inf"] = rep.alpha_inf;
    j["beta_sup"] = rep.beta_sup;
    j["chain_value"] = rep.chain_value;
    j["margin"] = rep.margin;
    out.report = std::move(j);

    std::ostringstream csv;
    csv << "iteration,s,min_form\n";
    for (std::size_t i = 0; i < rep.trace.size(); ++i)
        csv << i << ',' << fmt_g17(rep.trace[i].first) << ','
            << fmt_g17(rep.trace[i].second) << '\n';
    out.csv = csv.str();
    return out;
}

} // namespace detail

// Runs the task described by the config, entirely in memory.
inline RunResult run_experiment_capture(const ExperimentConfig& cfg) {
    if (cfg.task == "criterion") return detail::run_criterion(cfg);
    if (cfg.task == "gap") return detail::run_gap(cfg);
    if (cfg.task == "lyapunov") return detail::run_lyapunov(cfg);
    if (cfg.task == "cones") return detail::run_cones(cfg);
    if (cfg.task == "badset") return detail::run_badset(cfg);
    if (cfg.task == "epsilon") return detail::run_epsilon(cfg);
    throw parameter_error("unknown task '" + cfg.task + "'");
}

// Runs the task and writes report.json + samples.csv into cfg.output.
// Returns the exit code; any execution failure maps to exit_error (2).
inline int run_experiment(const ExperimentConfig& cfg,
                          std::ostream& err = std::cerr) {
    try {
        const RunResult result = run_experiment_capture(cfg);

        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(cfg.output, ec);
        if (ec) {
            err << "error: cannot create output directory '" << cfg.output
                << "': " << ec.message() << "\n";
            return exit_error;
        }
        const fs::path dir(cfg.output);

        nlohmann::json report = result.report;
        report["exit_code"] = result.exit_code;
        report["config"] = serialize_config(cfg);
        {
            std::ofstream jf(dir / "report.json", std::ios::binary);
            if (!jf) {
                err << "error: cannot write '" << (dir / "report.json").string()
                    << "'\n";
                return exit_error;
            }
            jf << report.dump(2) << "\n";
            if (!jf.good()) {
                err << "error: short write on report.json\n";
                return exit_error;
            }
        }
        {
            std::ofstream cf(dir / "samples.csv", std::ios::binary);
            if (!cf) {
                err << "error: cannot write '" << (dir / "samples.csv").string()
                    << "'\n";
                return exit_error;
            }
            cf << result.csv;
            if (!cf.good()) {
                err << "error: short write on samples.csv\n";
                return exit_error;
            }
        }
        return result.exit_code;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return exit_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_error;
    }
}

} // namespace phflow
