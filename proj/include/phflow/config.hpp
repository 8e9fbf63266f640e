#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phflow/errors.hpp"
#include "phflow/models.hpp"

namespace phflow {

// ---------------------------------------------------------------------------
// Flat key-value experiment description (line-based "key = value", '#'
// comments). Unknown keys are rejected with their line number; defaults are
// applied on access and echoed by serialize_config.
// ---------------------------------------------------------------------------
struct ExperimentConfig {
    std::string model;
    std::string task;
    std::string output = "out";

    std::optional<double> a, c, T, step, dt, reorth, gap_threshold;
    std::optional<double> s, s_step;
    std::optional<double> bump_center, bump_width, bump_amplitude, period;
    std::optional<int> n, r, rank;
    std::optional<long> count;
    std::optional<std::uint64_t> seed;
    std::optional<bool> on_gamma;
    std::vector<Eigen::VectorXd> roots;
    std::vector<int> multiplicities;
    std::optional<Eigen::VectorXd> path_from, path_to;

    double step_or_default() const { return step.value_or(1e-3); }
    double dt_or_default() const { return dt.value_or(0.01); }
    double reorth_or_default() const { return reorth.value_or(0.5); }
    double s_step_or_default() const { return s_step.value_or(1e-3); }
    double gap_threshold_or_default() const {
        return gap_threshold.value_or(0.25 * a.value_or(1.0));
    }

    bool operator==(const ExperimentConfig& o) const {
        auto veq = [](const std::vector<Eigen::VectorXd>& x,
                      const std::vector<Eigen::VectorXd>& y) {
            if (x.size() != y.size()) return false;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i].size() != y[i].size() || x[i] != y[i]) return false;
            return true;
        };
        auto oveq = [](const std::optional<Eigen::VectorXd>& x,
                       const std::optional<Eigen::VectorXd>& y) {
            if (x.has_value() != y.has_value()) return false;
            return !x || (x->size() == y->size() && *x == *y);
        };
        return model == o.model && task == o.task && output == o.output && a == o.a &&
               c == o.c && T == o.T && step == o.step && dt == o.dt &&
               reorth == o.reorth && gap_threshold == o.gap_threshold && s == o.s &&
               s_step == o.s_step && bump_center == o.bump_center &&
               bump_width == o.bump_width && bump_amplitude == o.bump_amplitude &&
               period == o.period && n == o.n && r == o.r && rank == o.rank &&
               count == o.count && seed == o.seed && on_gamma == o.on_gamma &&
               veq(roots, o.roots) && multiplicities == o.multiplicities &&
               oveq(path_from, o.path_from) && oveq(path_to, o.path_to);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& v, int line) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (...) {
        throw parse_error("malformed number '" + v + "'", line);
    }
    if (pos != v.size()) throw parse_error("malformed number '" + v + "'", line);
    return x;
}

inline long parse_long(const std::string& v, int line) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (...) {
        throw parse_error("malformed integer '" + v + "'", line);
    }
    if (pos != v.size()) throw parse_error("malformed integer '" + v + "'", line);
    return x;
}

inline bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw parse_error("malformed boolean '" + v + "' (use true/false)", line);
}

inline Eigen::VectorXd parse_vector(const std::string& v, int line) {
    std::vector<double> vals;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw parse_error("malformed vector '" + v + "'", line);
        vals.push_back(parse_double(item, line));
    }
    if (vals.empty()) throw parse_error("malformed vector '" + v + "'", line);
    Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = vals[i];
    return out;
}

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "model",       "task",       "output",      "a",
        "c",           "T",          "step",        "dt",
        "reorth",      "gap_threshold", "s",        "s_step",
        "bump.center", "bump.width", "bump.amplitude", "period",
        "n",           "r",          "rank",        "count",
        "seed",        "on_gamma",   "roots",       "multiplicities",
        "path_from",   "path_to"};
    return keys;
}

} // namespace detail

// Parses and validates the config text. `task_override` (e.g. the CLI
// subcommand) supplies the task when the text omits it; a conflicting
// explicit task is an error.
inline ExperimentConfig parse_config(const std::string& text,
                                     const std::string& task_override = "") {
    ExperimentConfig cfg;
    std::map<std::string, int> key_line;

    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("expected 'key = value'", lineno);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw parse_error("empty key", lineno);
        if (!detail::known_config_keys().count(key))
            throw parse_error("unknown key '" + key + "'", lineno);
        if (key_line.count(key))
            throw parse_error("duplicate key '" + key + "' (first on line " +
                                  std::to_string(key_line[key]) + ")",
                              lineno);
        if (val.empty()) throw parse_error("missing value for key '" + key + "'", lineno);
        key_line[key] = lineno;

        if (key == "model") cfg.model = val;
        else if (key == "task") cfg.task = val;
        else if (key == "output") cfg.output = val;
        else if (key == "a") cfg.a = detail::parse_double(val, lineno);
        else if (key == "c") cfg.c = detail::parse_double(val, lineno);
        else if (key == "T") cfg.T = detail::parse_double(val, lineno);
        else if (key == "step") cfg.step = detail::parse_double(val, lineno);
        else if (key == "dt") cfg.dt = detail::parse_double(val, lineno);
        else if (key == "reorth") cfg.reorth = detail::parse_double(val, lineno);
        else if (key == "gap_threshold") cfg.gap_threshold = detail::parse_double(val, lineno);
        else if (key == "s") cfg.s = detail::parse_double(val, lineno);
        else if (key == "s_step") cfg.s_step = detail::parse_double(val, lineno);
        else if (key == "bump.center") cfg.bump_center = detail::parse_double(val, lineno);
        else if (key == "bump.width") cfg.bump_width = detail::parse_double(val, lineno);
        else if (key == "bump.amplitude") cfg.bump_amplitude = detail::parse_double(val, lineno);
        else if (key == "period") cfg.period = detail::parse_double(val, lineno);
        else if (key == "n") cfg.n = static_cast<int>(detail::parse_long(val, lineno));
        else if (key == "r") cfg.r = static_cast<int>(detail::parse_long(val, lineno));
        else if (key == "rank") cfg.rank = static_cast<int>(detail::parse_long(val, lineno));
        else if (key == "count") cfg.count = detail::parse_long(val, lineno);
        else if (key == "seed")
            cfg.seed = static_cast<std::uint64_t>(detail::parse_long(val, lineno));
        else if (key == "on_gamma") cfg.on_gamma = detail::parse_bool(val, lineno);
        else if (key == "roots") {
            std::stringstream rs(val);
            std::string part;
            while (std::getline(rs, part, ';')) {
                part = detail::trim(part);
                if (part.empty()) throw parse_error("malformed roots list", lineno);
                cfg.roots.push_back(detail::parse_vector(part, lineno));
            }
            if (cfg.roots.empty()) throw parse_error("malformed roots list", lineno);
        } else if (key == "multiplicities") {
            std::stringstream ms(val);
            std::string part;
            while (std::getline(ms, part, ',')) {
                part = detail::trim(part);
                if (part.empty()) throw parse_error("malformed multiplicities list", lineno);
                cfg.multiplicities.push_back(
                    static_cast<int>(detail::parse_long(part, lineno)));
            }
        } else if (key == "path_from") {
            cfg.path_from = detail::parse_vector(val, lineno);
        } else if (key == "path_to") {
            cfg.path_to = detail::parse_vector(val, lineno);
        }
    }

    const auto line_of = [&](const std::string& k) {
        auto it = key_line.find(k);
        return it == key_line.end() ? 0 : it->second;
    };
    const auto require = [&](bool present, const std::string& k) {
        if (!present)
            throw parse_error("missing mandatory key '" + k + "' for task '" +
                                  cfg.task + "'",
                              0);
    };

    if (cfg.task.empty()) {
        if (task_override.empty())
            throw parse_error("missing mandatory key 'task'", 0);
        cfg.task = task_override;
    } else if (!task_override.empty() && cfg.task != task_override) {
        throw parse_error("config task '" + cfg.task + "' conflicts with subcommand '" +
                              task_override + "'",
                          line_of("task"));
    }

    static const std::set<std::string> tasks = {"criterion", "gap",    "lyapunov",
                                                "cones",     "badset", "epsilon"};
    if (!tasks.count(cfg.task))
        throw parse_error("unknown task '" + cfg.task + "'", line_of("task"));

    if (cfg.model.empty()) throw parse_error("missing mandatory key 'model'", 0);
    static const std::set<std::string> models = {"constant", "rank_one", "higher_rank",
                                                 "non_anosov"};
    if (!models.count(cfg.model))
        throw parse_error("unknown model '" + cfg.model + "'", line_of("model"));

    if (cfg.c && !(*cfg.c > 0.0))
        throw parse_error("c must be positive", line_of("c"));
    if (cfg.step && !(*cfg.step > 0.0))
        throw parse_error("step must be positive", line_of("step"));
    if (cfg.dt && !(*cfg.dt > 0.0))
        throw parse_error("dt must be positive", line_of("dt"));

    // Model-family keys.
    if (cfg.model == "constant" || cfg.model == "rank_one" || cfg.model == "non_anosov") {
        require(cfg.a.has_value(), "a");
        require(cfg.n.has_value(), "n");
    }
    if (cfg.model == "rank_one" || cfg.model == "non_anosov") require(cfg.r.has_value(), "r");
    if (cfg.model == "non_anosov" && !cfg.on_gamma.value_or(false)) {
        require(cfg.bump_width.has_value(), "bump.width");
        require(cfg.period.has_value(), "period");
    }
    if (cfg.model == "higher_rank") {
        require(!cfg.roots.empty(), "roots");
        require(!cfg.multiplicities.empty(), "multiplicities");
        require(cfg.rank.has_value(), "rank");
        if (cfg.roots.size() != cfg.multiplicities.size())
            throw parse_error("roots and multiplicities must have equal length",
                              line_of("multiplicities"));
        if (cfg.task == "gap") {
            require(cfg.path_from.has_value(), "path_from");
            require(cfg.path_to.has_value(), "path_to");
        } else {
            require(cfg.path_from.has_value() || cfg.s.has_value(), "path_from");
        }
    }

    // Task keys. Sampling tasks need a seed; integration tasks need horizons.
    const std::string& task = cfg.task;
    if (task == "criterion" || task == "cones" || task == "epsilon") {
        require(cfg.c.has_value(), "c");
        require(cfg.count.has_value(), "count");
        require(cfg.seed.has_value(), "seed");
    }
    if (task == "badset") require(cfg.c.has_value(), "c");
    if (task == "lyapunov") {
        require(cfg.T.has_value(), "T");
        require(cfg.seed.has_value(), "seed");
    }
    if (task == "cones" || task == "badset") require(cfg.T.has_value(), "T");
    if (task != "lyapunov") require(cfg.r.has_value(), "r");
    if (cfg.count && *cfg.count < 1)
        throw parse_error("count must be >= 1", line_of("count"));

    return cfg;
}

// Canonical text form; parse_config(serialize_config(cfg)) == cfg.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const auto put = [&](const char* key, const std::string& v) {
        out << key << " = " << v << "\n";
    };
    const auto putd = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", *v);
            put(key, buf);
        }
    };
    const auto putvec = [&](const Eigen::VectorXd& v) {
        std::string s;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
            if (i) s += ",";
            s += buf;
        }
        return s;
    };
    put("model", cfg.model);
    put("task", cfg.task);
    if (cfg.n) put("n", std::to_string(*cfg.n));
    if (cfg.r) put("r", std::to_string(*cfg.r));
    if (cfg.rank) put("rank", std::to_string(*cfg.rank));
    putd("a", cfg.a);
    putd("c", cfg.c);
    putd("T", cfg.T);
    putd("step", cfg.step);
    putd("dt", cfg.dt);
    putd("reorth", cfg.reorth);
    putd("gap_threshold", cfg.gap_threshold);
    putd("s", cfg.s);
    putd("s_step", cfg.s_step);
    putd("bump.center", cfg.bump_center);
    putd("bump.width", cfg.bump_width);
    putd("bump.amplitude", cfg.bump_amplitude);
    putd("period", cfg.period);
    if (cfg.count) put("count", std::to_string(*cfg.count));
    if (cfg.seed) put("seed", std::to_string(*cfg.seed));
    if (cfg.on_gamma) put("on_gamma", *cfg.on_gamma ? "true" : "false");
    if (!cfg.roots.empty()) {
        std::string s;
        for (std::size_t i = 0; i < cfg.roots.size(); ++i) {
            if (i) s += "; ";
            s += putvec(cfg.roots[i]);
        }
        put("roots", s);
    }
    if (!cfg.multiplicities.empty()) {
        std::string s;
        for (std::size_t i = 0; i < cfg.multiplicities.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(cfg.multiplicities[i]);
        }
        put("multiplicities", s);
    }
    if (cfg.path_from) put("path_from", putvec(*cfg.path_from));
    if (cfg.path_to) put("path_to", putvec(*cfg.path_to));
    put("output", cfg.output);
    return out.str();
}

// Builds the (fixed-direction) curvature model a config describes. For
// higher_rank configs the direction is X(s) on the great-circle path (key
// `s`, default 0) unless explicit path endpoints are absent and `s` names a
// direction-free model.
inline CurvatureModel build_model(const ExperimentConfig& cfg) {
    if (cfg.model == "constant")
        return constant_curvature_model(*cfg.a, *cfg.n);
    if (cfg.model == "rank_one")
        return rank_one_symmetric_model(*cfg.a, *cfg.n, *cfg.r);
    if (cfg.model == "non_anosov") {
        BumpSpec bump;
        bump.center = cfg.bump_center.value_or(0.0);
        bump.width = cfg.bump_width.value_or(1.0);
        bump.amplitude = cfg.bump_amplitude.value_or(1.0);
        return non_anosov_scenario(*cfg.a, *cfg.n, *cfg.r, bump,
                                   cfg.period.value_or(0.0),
                                   cfg.on_gamma.value_or(false));
    }
    if (cfg.model == "higher_rank") {
        std::vector<RootDatum> roots;
        for (std::size_t i = 0; i < cfg.roots.size(); ++i)
            roots.push_back(RootDatum{cfg.roots[i], cfg.multiplicities[i]});
        if (cfg.path_from && cfg.path_to) {
            auto [path, smax] = great_circle_path(*cfg.path_from, *cfg.path_to);
            const HigherRankFamily fam =
                higher_rank_model(roots, *cfg.rank, path, smax);
            return fam.at(cfg.s.value_or(0.0));
        }
        // fixed direction given directly through path_from
        Eigen::VectorXd X = cfg.path_from.value();
        X.normalize();
        const HigherRankFamily fam = higher_rank_model(
            roots, *cfg.rank, [X](double) { return X; }, 0.0);
        return fam.at(0.0);
    }
    throw parameter_error("unknown model '" + cfg.model + "'");
}

inline HigherRankFamily build_family(const ExperimentConfig& cfg) {
    std::vector<RootDatum> roots;
    for (std::size_t i = 0; i < cfg.roots.size(); ++i)
        roots.push_back(RootDatum{cfg.roots[i], cfg.multiplicities[i]});
    auto [path, smax] = great_circle_path(*cfg.path_from, *cfg.path_to);
    return higher_rank_model(roots, *cfg.rank, path, smax);
}

} // namespace phflow
