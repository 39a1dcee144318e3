// Experiment driver: single runs, the strategy x penalty x seed sweep,
// the 1-D bandit demo, the oracle baseline, and manifest aggregation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hucrl/bandit.hpp"
#include "hucrl/matrix.hpp"
#include "hucrl/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw hucrl::ConfigError("cannot open config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw hucrl::ConfigError(path + ": parse error: " + e.what());
    }
    return j;
}

hucrl::RunConfig load_run_config(const std::string& path) {
    return hucrl::run_config_from_json(read_json_file(path));
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> strategy, std::optional<double> rho, std::optional<int> episodes,
            const std::string& out_dir) {
    hucrl::RunConfig config = config_path.empty() ? hucrl::RunConfig{} : load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (rho) config.rho = *rho;
    if (episodes) config.episodes = *episodes;
    if (strategy) {
        if (*strategy == "greedy")
            config.strategy.kind = hucrl::Strategy::Greedy;
        else if (*strategy == "thompson")
            config.strategy.kind = hucrl::Strategy::Thompson;
        else if (*strategy == "hucrl")
            config.strategy.kind = hucrl::Strategy::HUcrl;
        else
            throw hucrl::ConfigError("--strategy must be greedy|thompson|hucrl");
    }
    config.validate();

    fs::create_directories(out_dir);
    hucrl::Agent agent(config);
    hucrl::RunManifest manifest;
    try {
        manifest = agent.run();
    } catch (...) {
        hucrl::write_manifest(agent.manifest(), (fs::path(out_dir) / "manifest.json").string());
        throw;
    }
    hucrl::write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    hucrl::write_curve_csv(manifest, (fs::path(out_dir) / "curve.csv").string());

    const auto& dump = config.diagnostics.dump_trajectories;
    if (dump == "final" && !agent.trajectories().empty()) {
        hucrl::write_trajectory_csv(agent.trajectories().back(), manifest.config_hash,
                                    (fs::path(out_dir) / "final_trajectory.csv").string());
    } else if (dump == "all") {
        for (std::size_t i = 0; i < agent.trajectories().size(); ++i)
            hucrl::write_trajectory_csv(agent.trajectories()[i], manifest.config_hash,
                                        (fs::path(out_dir) / ("trajectory_ep" + std::to_string(i + 1) + ".csv")).string());
    }

    const auto& last = manifest.episodes.back();
    std::cout << "strategy=" << hucrl::strategy_name(config.strategy.kind) << " rho=" << config.rho
              << " seed=" << config.seed << " final_return=" << last.episode_return
              << " solved=" << (manifest.solved_final_episode ? "yes" : "no") << "\n";
    return 0;
}

int cmd_matrix(const std::string& config_path, const std::string& out_dir, int workers) {
    hucrl::ExperimentMatrix matrix =
        config_path.empty() ? hucrl::ExperimentMatrix{} : hucrl::matrix_from_json(read_json_file(config_path));
    if (!out_dir.empty()) matrix.output_dir = out_dir;
    matrix.validate();

    const auto results = hucrl::run_matrix(matrix, workers);
    const auto summaries = hucrl::summarize(results);
    const std::string hash = hucrl::config_hash(hucrl::to_json(matrix));
    hucrl::write_summary_csv(summaries, hash, (fs::path(matrix.output_dir) / "summary.csv").string());

    bool all_ok = true;
    for (const auto& r : results) {
        if (!r.ok) {
            all_ok = false;
            std::cerr << "cell " << hucrl::cell_dir_name(r.strategy, r.rho, r.seed) << " failed: " << r.error
                      << "\n";
        }
    }
    for (const auto& s : summaries)
        std::cout << hucrl::strategy_name(s.strategy) << " rho=" << s.rho
                  << " median_final_return=" << s.median_final_return << " solve_rate=" << s.solve_rate
                  << "\n";
    return all_ok ? 0 : 1;
}

int cmd_bandit(double beta, int rounds, std::uint64_t seed, const std::string& out_path) {
    hucrl::BanditProblem prob = hucrl::BanditProblem::standard();
    hucrl::KernelParams kernel;
    kernel.lengthscales = Eigen::VectorXd::Constant(1, 0.1);
    kernel.signal_variance = 1.0;
    kernel.noise_variance = 1e-4;

    const hucrl::BanditTrace trace = hucrl::run_bandit(prob, beta, rounds, kernel, seed);

    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open " + out_path);
    f << "round,grid_index,x,observation\n";
    for (std::size_t r = 0; r < trace.selections.size(); ++r)
        f << r << ',' << trace.selections[r] << ',' << hucrl::format_double(prob.grid[trace.selections[r]])
          << ',' << hucrl::format_double(trace.observations[r]) << '\n';

    const int last = trace.selections.back();
    std::cout << "beta=" << beta << " rounds=" << rounds << " final_x=" << prob.grid[last]
              << " global_argmax=" << prob.objective.global_argmax()
              << " decoy=" << prob.objective.decoy_argmax() << "\n";
    return 0;
}

int cmd_oracle(const std::string& config_path, std::uint64_t seeds, const std::string& out_path) {
    hucrl::RunConfig config = config_path.empty() ? hucrl::RunConfig{} : load_run_config(config_path);
    const double value = hucrl::oracle_return(config, static_cast<int>(seeds));
    json j;
    j["oracle_return"] = value;
    j["config_hash"] = hucrl::config_hash(hucrl::to_json(config));
    j["seeds"] = seeds;
    j["note"] = "high-budget planner on the true dynamics; empirical stand-in for the optimal return";
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open " + out_path);
    f << j.dump(2) << '\n';
    std::cout << "oracle_return=" << value << "\n";
    return 0;
}

int cmd_report(const std::string& dir, const std::string& out_path) {
    std::vector<hucrl::CellResult> results;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.path().filename() != "manifest.json") continue;
        const json j = read_json_file(entry.path().string());
        hucrl::CellResult r;
        const std::string strat = j.at("config").at("strategy").at("name").get<std::string>();
        r.strategy = strat == "greedy"    ? hucrl::Strategy::Greedy
                     : strat == "thompson" ? hucrl::Strategy::Thompson
                                           : hucrl::Strategy::HUcrl;
        r.rho = j.at("config").at("env").at("rho").get<double>();
        r.seed = j.at("config").at("seed").get<std::uint64_t>();
        if (!j.at("episodes").empty()) {
            r.final_return = j.at("episodes").back().at("return").get<double>();
            r.solved = j.value("solved_final_episode", false);
            r.ok = j.value("completed", false);
        }
        results.push_back(r);
    }
    if (results.empty()) {
        std::cerr << "no manifests found under " << dir << "\n";
        return 1;
    }
    const auto summaries = hucrl::summarize(results);
    hucrl::write_summary_csv(summaries, "aggregated", out_path);
    std::cout << "aggregated " << results.size() << " manifests into " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimistic model-based RL on the sparse swing-up pendulum"};
    app.require_subcommand(1);

    std::string config_path, out = "out";
    std::optional<std::uint64_t> seed_opt;
    std::optional<std::string> strategy_opt;
    std::optional<double> rho_opt;
    std::optional<int> episodes_opt;
    int workers = 1;

    auto* run = app.add_subcommand("run", "execute one learning run");
    run->add_option("--config", config_path, "run config JSON");
    run->add_option("--seed", [&](const CLI::results_t& r) { seed_opt = std::stoull(r[0]); return true; },
                    "override seed");
    run->add_option("--strategy",
                    [&](const CLI::results_t& r) { strategy_opt = r[0]; return true; },
                    "override strategy (greedy|thompson|hucrl)");
    run->add_option("--rho", [&](const CLI::results_t& r) { rho_opt = std::stod(r[0]); return true; },
                    "override action penalty");
    run->add_option("--episodes", [&](const CLI::results_t& r) { episodes_opt = std::stoi(r[0]); return true; },
                    "override episode count");
    run->add_option("--out", out, "output directory");

    std::string mat_out;
    auto* matrix = app.add_subcommand("matrix", "run the strategy x rho x seed sweep");
    matrix->add_option("--config", config_path, "matrix config JSON");
    matrix->add_option("--out", mat_out, "output directory (overrides config)");
    matrix->add_option("--workers", workers, "bounded worker pool size");

    double beta = 0.0;
    int rounds = 40;
    std::uint64_t bandit_seed = 0;
    std::string bandit_out = "bandit_trace.csv";
    auto* bandit = app.add_subcommand("bandit", "GP-UCB demo on the fixed two-bump objective");
    bandit->add_option("--beta", beta, "UCB exploration coefficient")->required();
    bandit->add_option("--rounds", rounds, "number of selection rounds");
    bandit->add_option("--seed", bandit_seed, "noise seed");
    bandit->add_option("--out", bandit_out, "trace CSV path");

    std::uint64_t oracle_seeds = 5;
    std::string oracle_out = "oracle.json";
    auto* oracle = app.add_subcommand("oracle", "regret baseline from the true-dynamics planner");
    oracle->add_option("--config", config_path, "run config JSON");
    oracle->add_option("--seeds", oracle_seeds, "number of averaged seeds");
    oracle->add_option("--out", oracle_out, "output JSON path");

    std::string report_dir = ".", report_out = "summary.csv";
    auto* report = app.add_subcommand("report", "aggregate manifests into a summary CSV");
    report->add_option("--dir", report_dir, "directory to scan for manifest.json files");
    report->add_option("--out", report_out, "summary CSV path");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, seed_opt, strategy_opt, rho_opt, episodes_opt, out);
        if (matrix->parsed()) return cmd_matrix(config_path, mat_out, workers);
        if (bandit->parsed()) return cmd_bandit(beta, rounds, bandit_seed, bandit_out);
        if (oracle->parsed()) return cmd_oracle(config_path, oracle_seeds, oracle_out);
        if (report->parsed()) return cmd_report(report_dir, report_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const hucrl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
