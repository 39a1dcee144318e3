#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hucrl/posterior.hpp"

namespace hucrl {

inline constexpr const char* kModelFormat = "hucrl-gp";
inline constexpr int kModelFormatVersion = 1;

/// Serialize kernel parameters and the raw dataset. The factorization is not
/// stored; loading refits, so the file stays valid across numeric changes.
inline nlohmann::json posterior_to_json(const GpPosterior& post) {
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelFormatVersion;
    j["kernel"] = {
        {"lengthscales", std::vector<double>(post.kernel().lengthscales.begin(), post.kernel().lengthscales.end())},
        {"signal_variance", post.kernel().signal_variance},
        {"noise_variance", post.kernel().noise_variance},
    };
    j["target_dim"] = post.target_dim();
    nlohmann::json inputs = nlohmann::json::array();
    nlohmann::json targets = nlohmann::json::array();
    for (std::size_t i = 0; i < post.size(); ++i) {
        const auto& x = post.dataset().inputs[i];
        const auto& y = post.dataset().targets[i];
        inputs.push_back(std::vector<double>(x.begin(), x.end()));
        targets.push_back(std::vector<double>(y.begin(), y.end()));
    }
    j["inputs"] = std::move(inputs);
    j["targets"] = std::move(targets);
    return j;
}

inline GpPosterior posterior_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kModelFormat)
        throw std::runtime_error("model file: unknown format tag");
    if (j.value("version", -1) != kModelFormatVersion)
        throw std::runtime_error("model file: unsupported version " + std::to_string(j.value("version", -1)));
    KernelParams k;
    const auto ls = j.at("kernel").at("lengthscales").get<std::vector<double>>();
    k.lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    k.signal_variance = j.at("kernel").at("signal_variance").get<double>();
    k.noise_variance = j.at("kernel").at("noise_variance").get<double>();

    GpDataset data;
    const auto& ji = j.at("inputs");
    const auto& jt = j.at("targets");
    if (ji.size() != jt.size()) throw std::runtime_error("model file: inputs/targets length mismatch");
    for (std::size_t i = 0; i < ji.size(); ++i) {
        const auto x = ji[i].get<std::vector<double>>();
        const auto y = jt[i].get<std::vector<double>>();
        data.add(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                 Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
    }
    GpPosterior post = GpPosterior::fit(data, k);
    post.set_prior_target_dim(j.value("target_dim", Eigen::Index{1}));
    return post;
}

inline void save_posterior(const GpPosterior& post, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_posterior: cannot open " + path);
    f << posterior_to_json(post).dump(2) << '\n';
}

inline GpPosterior load_posterior(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_posterior: cannot open " + path);
    nlohmann::json j;
    f >> j;
    return posterior_from_json(j);
}

}  // namespace hucrl
