#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hucrl/adapter.hpp"
#include "hucrl/beta_schedule.hpp"
#include "hucrl/cem.hpp"
#include "hucrl/kernel.hpp"
#include "hucrl/pendulum.hpp"

namespace hucrl {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace cfg_detail {

/// Strict field access: reading happens through this view so unknown keys
/// are rejected and error messages carry the full field path.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    T require(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing required field '" + key + "'");
        return get<T>(key);
    }

    template <typename T>
    T value(const std::string& key, T def) {
        seen_.insert(key);
        if (!j_.contains(key)) return def;
        return get<T>(key);
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const nlohmann::json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    StrictObject child(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing required field '" + key + "'");
        return StrictObject(j_.at(key), path_ + "." + key);
    }

    std::optional<StrictObject> optional_child(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
        return StrictObject(j_.at(key), path_ + "." + key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(path_ + ": unknown field '" + it.key() + "'");
    }

private:
    template <typename T>
    T get(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> from_vector(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace cfg_detail

struct StrategyConfig {
    Strategy kind = Strategy::HUcrl;
    bool greedy_sampling = true;
    int thompson_features = 1024;
};

struct ModelConfig {
    KernelParams kernel;
    Eigen::VectorXd target_scale;  // per state dimension
    std::vector<int> angle_dims;   // state dims encoded as (sin, cos)
    int max_points = 600;
    BetaSchedule beta_schedule = BetaSchedule::fixed(1.0);

    ModelConfig() {
        kernel.lengthscales = cfg_detail::to_vector({1.2, 1.2, 4.0, 1.8});
        kernel.signal_variance = 1.0;
        kernel.noise_variance = 1e-4;
        target_scale = cfg_detail::to_vector({0.3, 1.2});
        angle_dims = {0};
    }
};

struct PlannerConfig {
    CemConfig cem;
    bool carry_warm_start = true;   // reuse the best plan found in an episode
    double carry_std_floor = 0.5;   // proposal std floor (fraction of half-range) on carried plans

    PlannerConfig() {
        cem.action_bounds.resize(1, 2);
        cem.action_bounds << -1.0, 1.0;
    }
};

struct DiagnosticsConfig {
    double coverage_beta = 2.0;
    double state_norm_bound = 20.0;
    double delta = 0.1;       // confidence for the noise-bound report
    double lipschitz_f = 0.0; // user-supplied constants for the theoretical radius;
    double b0 = 0.0;          // zero disables that part of the report
    std::string dump_trajectories = "final";  // none | final | all
};

struct RunConfig {
    std::uint64_t seed = 0;
    int episodes = 20;
    StrategyConfig strategy;
    PendulumParams env;
    double rho = 0.0;
    ModelConfig model;
    PlannerConfig planner;
    DiagnosticsConfig diagnostics;
    std::optional<double> oracle_return;

    void validate() const {
        if (episodes < 1) throw ConfigError("config: episodes must be >= 1");
        env.validate();
        model.kernel.validate();
        planner.cem.validate();
        if (rho < 0.0) throw ConfigError("config: rho must be >= 0");
        if (model.max_points < 1) throw ConfigError("config: model.max_points must be >= 1");
        if (model.target_scale.size() == 0 || (model.target_scale.array() <= 0.0).any())
            throw ConfigError("config: model.target_scale must be positive");
        if (diagnostics.dump_trajectories != "none" && diagnostics.dump_trajectories != "final" &&
            diagnostics.dump_trajectories != "all")
            throw ConfigError("config: diagnostics.dump_trajectories must be none|final|all");
        StateEncoding enc{model.angle_dims};
        const Eigen::Index expected =
            enc.feature_dim(model.target_scale.size()) + planner.cem.action_bounds.rows();
        if (model.kernel.input_dim() != expected)
            throw ConfigError("config: kernel lengthscales dimension " +
                              std::to_string(model.kernel.input_dim()) + " does not match encoded inputs " +
                              std::to_string(expected));
    }
};

// ---- JSON round trip -------------------------------------------------------

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["episodes"] = c.episodes;
    j["strategy"] = {
        {"name", strategy_name(c.strategy.kind)},
        {"greedy_sampling", c.strategy.greedy_sampling},
        {"thompson_features", c.strategy.thompson_features},
    };
    j["env"] = {
        {"mass", c.env.mass},
        {"length", c.env.length},
        {"gravity", c.env.gravity},
        {"friction", c.env.friction},
        {"dt", c.env.dt},
        {"max_torque", c.env.max_torque},
        {"noise_std", std::vector<double>{c.env.noise_std[0], c.env.noise_std[1]}},
        {"horizon", c.env.horizon},
        {"rho", c.rho},
    };
    nlohmann::json beta;
    if (c.model.beta_schedule.mode == BetaSchedule::Mode::Fixed)
        beta = {{"mode", "fixed"}, {"value", c.model.beta_schedule.value}};
    else
        beta = {{"mode", "rkhs"},
                {"bound", c.model.beta_schedule.rkhs_bound},
                {"delta", c.model.beta_schedule.delta}};
    j["model"] = {
        {"lengthscales", cfg_detail::from_vector(c.model.kernel.lengthscales)},
        {"signal_variance", c.model.kernel.signal_variance},
        {"noise_variance", c.model.kernel.noise_variance},
        {"target_scale", cfg_detail::from_vector(c.model.target_scale)},
        {"angle_dims", c.model.angle_dims},
        {"max_points", c.model.max_points},
        {"beta_schedule", beta},
    };
    std::vector<std::vector<double>> bounds;
    for (Eigen::Index i = 0; i < c.planner.cem.action_bounds.rows(); ++i)
        bounds.push_back({c.planner.cem.action_bounds(i, 0), c.planner.cem.action_bounds(i, 1)});
    j["planner"] = {
        {"horizon", c.planner.cem.horizon},
        {"particles", c.planner.cem.n_particles},
        {"iterations", c.planner.cem.n_iters},
        {"warm_iterations", c.planner.cem.n_warm_iters},
        {"full_iter_steps", c.planner.cem.full_iter_steps},
        {"elites", c.planner.cem.n_elites},
        {"init_std", c.planner.cem.init_std},
        {"alpha", c.planner.cem.alpha},
        {"std_floor", c.planner.cem.std_floor},
        {"discount", c.planner.cem.discount},
        {"noise_beta", c.planner.cem.noise_beta},
        {"elitism", c.planner.cem.elitism},
        {"action_bounds", bounds},
        {"carry_warm_start", c.planner.carry_warm_start},
        {"carry_std_floor", c.planner.carry_std_floor},
    };
    j["diagnostics"] = {
        {"coverage_beta", c.diagnostics.coverage_beta},
        {"state_norm_bound", c.diagnostics.state_norm_bound},
        {"delta", c.diagnostics.delta},
        {"lipschitz_f", c.diagnostics.lipschitz_f},
        {"b0", c.diagnostics.b0},
        {"dump_trajectories", c.diagnostics.dump_trajectories},
    };
    if (c.oracle_return)
        j["oracle_return"] = *c.oracle_return;
    else
        j["oracle_return"] = nullptr;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& root, const std::string& path = "config") {
    cfg_detail::StrictObject o(root, path);
    RunConfig c;
    c.seed = o.value<std::uint64_t>("seed", c.seed);
    c.episodes = o.value<int>("episodes", c.episodes);

    if (o.has("strategy")) {
        auto s = o.child("strategy");
        const std::string name = s.require<std::string>("name");
        if (name == "greedy")
            c.strategy.kind = Strategy::Greedy;
        else if (name == "thompson")
            c.strategy.kind = Strategy::Thompson;
        else if (name == "hucrl")
            c.strategy.kind = Strategy::HUcrl;
        else
            throw ConfigError(path + ".strategy.name: must be greedy|thompson|hucrl");
        c.strategy.greedy_sampling = s.value<bool>("greedy_sampling", c.strategy.greedy_sampling);
        c.strategy.thompson_features = s.value<int>("thompson_features", c.strategy.thompson_features);
        s.finish();
    }

    if (o.has("env")) {
        auto e = o.child("env");
        c.env.mass = e.value<double>("mass", c.env.mass);
        c.env.length = e.value<double>("length", c.env.length);
        c.env.gravity = e.value<double>("gravity", c.env.gravity);
        c.env.friction = e.value<double>("friction", c.env.friction);
        c.env.dt = e.value<double>("dt", c.env.dt);
        c.env.max_torque = e.value<double>("max_torque", c.env.max_torque);
        if (e.has("noise_std")) {
            const auto v = e.raw("noise_std").get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError(path + ".env.noise_std: expected 2 entries");
            c.env.noise_std << v[0], v[1];
        }
        c.env.horizon = e.value<int>("horizon", c.env.horizon);
        c.rho = e.value<double>("rho", c.rho);
        e.finish();
    }

    if (o.has("model")) {
        auto m = o.child("model");
        if (m.has("lengthscales"))
            c.model.kernel.lengthscales = cfg_detail::to_vector(m.raw("lengthscales").get<std::vector<double>>());
        c.model.kernel.signal_variance = m.value<double>("signal_variance", c.model.kernel.signal_variance);
        c.model.kernel.noise_variance = m.value<double>("noise_variance", c.model.kernel.noise_variance);
        if (m.has("target_scale"))
            c.model.target_scale = cfg_detail::to_vector(m.raw("target_scale").get<std::vector<double>>());
        if (m.has("angle_dims")) c.model.angle_dims = m.raw("angle_dims").get<std::vector<int>>();
        c.model.max_points = m.value<int>("max_points", c.model.max_points);
        if (auto b = m.optional_child("beta_schedule")) {
            const std::string mode = b->require<std::string>("mode");
            if (mode == "fixed")
                c.model.beta_schedule = BetaSchedule::fixed(b->require<double>("value"));
            else if (mode == "rkhs")
                c.model.beta_schedule =
                    BetaSchedule::rkhs(b->require<double>("bound"), b->require<double>("delta"));
            else
                throw ConfigError(path + ".model.beta_schedule.mode: must be fixed|rkhs");
            b->finish();
        }
        m.finish();
    }

    if (o.has("planner")) {
        auto pl = o.child("planner");
        auto& cem = c.planner.cem;
        cem.horizon = pl.value<int>("horizon", cem.horizon);
        cem.n_particles = pl.value<int>("particles", cem.n_particles);
        cem.n_iters = pl.value<int>("iterations", cem.n_iters);
        cem.n_warm_iters = pl.value<int>("warm_iterations", cem.n_warm_iters);
        cem.full_iter_steps = pl.value<int>("full_iter_steps", cem.full_iter_steps);
        cem.n_elites = pl.value<int>("elites", cem.n_elites);
        cem.init_std = pl.value<double>("init_std", cem.init_std);
        cem.alpha = pl.value<double>("alpha", cem.alpha);
        cem.std_floor = pl.value<double>("std_floor", cem.std_floor);
        cem.discount = pl.value<double>("discount", cem.discount);
        cem.noise_beta = pl.value<double>("noise_beta", cem.noise_beta);
        cem.elitism = pl.value<bool>("elitism", cem.elitism);
        if (pl.has("action_bounds")) {
            const auto b = pl.raw("action_bounds").get<std::vector<std::vector<double>>>();
            cem.action_bounds.resize(static_cast<Eigen::Index>(b.size()), 2);
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (b[i].size() != 2) throw ConfigError(path + ".planner.action_bounds: rows must be [lo,hi]");
                cem.action_bounds(static_cast<Eigen::Index>(i), 0) = b[i][0];
                cem.action_bounds(static_cast<Eigen::Index>(i), 1) = b[i][1];
            }
        }
        c.planner.carry_warm_start = pl.value<bool>("carry_warm_start", c.planner.carry_warm_start);
        c.planner.carry_std_floor = pl.value<double>("carry_std_floor", c.planner.carry_std_floor);
        pl.finish();
    }

    if (o.has("diagnostics")) {
        auto d = o.child("diagnostics");
        c.diagnostics.coverage_beta = d.value<double>("coverage_beta", c.diagnostics.coverage_beta);
        c.diagnostics.state_norm_bound = d.value<double>("state_norm_bound", c.diagnostics.state_norm_bound);
        c.diagnostics.delta = d.value<double>("delta", c.diagnostics.delta);
        c.diagnostics.lipschitz_f = d.value<double>("lipschitz_f", c.diagnostics.lipschitz_f);
        c.diagnostics.b0 = d.value<double>("b0", c.diagnostics.b0);
        c.diagnostics.dump_trajectories =
            d.value<std::string>("dump_trajectories", c.diagnostics.dump_trajectories);
        d.finish();
    }

    if (o.has("oracle_return") && !o.raw("oracle_return").is_null())
        c.oracle_return = o.raw("oracle_return").get<double>();

    o.finish();
    c.validate();
    return c;
}

/// FNV-1a over the canonical config serialization; identifies which config
/// produced an output file.
inline std::string config_hash(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace hucrl
