#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hucrl/runner.hpp"

namespace hucrl {

/// The strategy x action-penalty x seed sweep behind the headline figure.
struct ExperimentMatrix {
    std::vector<Strategy> strategies{Strategy::Greedy, Strategy::Thompson, Strategy::HUcrl};
    std::vector<double> rhos{0.0, 0.1, 0.2};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    RunConfig base;
    std::string output_dir = "matrix_out";

    void validate() const {
        if (strategies.empty() || rhos.empty() || seeds.empty())
            throw ConfigError("matrix: strategies, rhos, and seeds must be nonempty");
        base.validate();
    }
};

inline ExperimentMatrix matrix_from_json(const nlohmann::json& root) {
    cfg_detail::StrictObject o(root, "matrix");
    ExperimentMatrix m;
    if (o.has("strategies")) {
        m.strategies.clear();
        for (const auto& s : o.raw("strategies").get<std::vector<std::string>>()) {
            if (s == "greedy")
                m.strategies.push_back(Strategy::Greedy);
            else if (s == "thompson")
                m.strategies.push_back(Strategy::Thompson);
            else if (s == "hucrl")
                m.strategies.push_back(Strategy::HUcrl);
            else
                throw ConfigError("matrix.strategies: unknown strategy '" + s + "'");
        }
    }
    if (o.has("rhos")) m.rhos = o.raw("rhos").get<std::vector<double>>();
    if (o.has("seeds")) m.seeds = o.raw("seeds").get<std::vector<std::uint64_t>>();
    m.output_dir = o.value<std::string>("output_dir", m.output_dir);
    if (o.has("base")) m.base = run_config_from_json(o.raw("base"), "matrix.base");
    o.finish();
    m.validate();
    return m;
}

inline nlohmann::json to_json(const ExperimentMatrix& m) {
    nlohmann::json j;
    std::vector<std::string> strats;
    for (auto s : m.strategies) strats.emplace_back(strategy_name(s));
    j["strategies"] = strats;
    j["rhos"] = m.rhos;
    j["seeds"] = m.seeds;
    j["output_dir"] = m.output_dir;
    j["base"] = to_json(m.base);
    return j;
}

struct CellResult {
    Strategy strategy;
    double rho = 0.0;
    std::uint64_t seed = 0;
    double final_return = 0.0;
    bool solved = false;
    bool ok = false;
    std::string error;
};

struct CellSummary {
    Strategy strategy;
    double rho;
    double median_final_return;
    double iqr_lo;
    double iqr_hi;
    double solve_rate;
};

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= v.size()) return v.back();
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

inline std::string cell_dir_name(Strategy s, double rho, std::uint64_t seed) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_rho%.3g_seed%llu", strategy_name(s), rho,
                  static_cast<unsigned long long>(seed));
    return buf;
}

/// Run every cell of the sweep in a bounded worker pool; each cell writes its
/// own manifest.json and curve.csv, then the matrix-level summary.csv
/// aggregates medians, interquartile ranges, and solve rates over seeds.
inline std::vector<CellResult> run_matrix(const ExperimentMatrix& matrix, int workers = 1) {
    matrix.validate();
    namespace fs = std::filesystem;
    fs::create_directories(matrix.output_dir);

    struct Cell {
        Strategy s;
        double rho;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (auto s : matrix.strategies)
        for (double rho : matrix.rhos)
            for (auto seed : matrix.seeds) cells.push_back({s, rho, seed});

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& c = cells[i];
            CellResult& r = results[i];
            r.strategy = c.s;
            r.rho = c.rho;
            r.seed = c.seed;
            try {
                RunConfig config = matrix.base;
                config.strategy.kind = c.s;
                config.rho = c.rho;
                config.seed = c.seed;
                Agent agent(config);
                const fs::path dir = fs::path(matrix.output_dir) / cell_dir_name(c.s, c.rho, c.seed);
                fs::create_directories(dir);
                RunManifest manifest;
                try {
                    manifest = agent.run();
                } catch (...) {
                    // leave a valid partial manifest behind before propagating
                    write_manifest(agent.manifest(), (dir / "manifest.json").string());
                    throw;
                }
                write_manifest(manifest, (dir / "manifest.json").string());
                write_curve_csv(manifest, (dir / "curve.csv").string());
                if (agent.config().diagnostics.dump_trajectories == "final" && !agent.trajectories().empty())
                    write_trajectory_csv(agent.trajectories().back(), manifest.config_hash,
                                         (dir / "final_trajectory.csv").string());
                r.final_return = manifest.episodes.back().episode_return;
                r.solved = manifest.solved_final_episode;
                r.ok = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };

    workers = std::max(1, workers);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

inline std::vector<CellSummary> summarize(const std::vector<CellResult>& results) {
    std::vector<CellSummary> out;
    for (const auto& r : results) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const CellSummary& s) {
            return s.strategy == r.strategy && s.rho == r.rho;
        });
        if (seen) continue;
        std::vector<double> returns;
        int solved = 0, total = 0;
        for (const auto& q : results)
            if (q.strategy == r.strategy && q.rho == r.rho && q.ok) {
                returns.push_back(q.final_return);
                solved += q.solved ? 1 : 0;
                ++total;
            }
        CellSummary s;
        s.strategy = r.strategy;
        s.rho = r.rho;
        s.median_final_return = quantile(returns, 0.5);
        s.iqr_lo = quantile(returns, 0.25);
        s.iqr_hi = quantile(returns, 0.75);
        s.solve_rate = total > 0 ? static_cast<double>(solved) / total : 0.0;
        out.push_back(s);
    }
    return out;
}

inline void write_summary_csv(const std::vector<CellSummary>& summaries, const std::string& config_hash,
                              const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_summary_csv: cannot open " + path);
    f << "# config=" << config_hash << "\n";
    f << "strategy,rho,median_final_return,iqr_lo,iqr_hi,solve_rate\n";
    for (const auto& s : summaries)
        f << strategy_name(s.strategy) << ',' << format_double(s.rho) << ','
          << format_double(s.median_final_return) << ',' << format_double(s.iqr_lo) << ','
          << format_double(s.iqr_hi) << ',' << format_double(s.solve_rate) << '\n';
}

}  // namespace hucrl
