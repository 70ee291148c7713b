#pragma once

#include <charconv>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mapd/error.hpp"
#include "mapd/experiments.hpp"
#include "mapd/synthetic.hpp"
#include "mapd/train.hpp"

namespace mapd {

/// Everything a train/correct/prioritize run needs, parsed from a flat
/// `key = value` text file (# starts a comment). One root seed feeds data,
/// suite and training streams.
struct ExperimentConfig {
    SyntheticConfig data;
    TrainConfig train;
    double noise_rate = 0.0;
    std::size_t test_per_class = 0;
    std::size_t val_per_class = 0;
    std::size_t probe_n = 100;
    std::size_t probe_test_n = 0;
    std::size_t probes_per_group = 50;
    std::optional<std::string> suite_manifest;
    std::optional<std::string> dataset_path;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_value(std::string_view v, const std::string& key) {
    T out{};
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw Error(ErrorCode::parse, "bad value '" + std::string(v) + "' for key " + key);
    return out;
}

inline bool parse_bool(std::string_view v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorCode::parse, "bad boolean '" + std::string(v) + "' for key " + key);
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(std::string_view text) {
    ExperimentConfig cfg;
    bool spurious = false;
    SpuriousSpec spurious_spec;

    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::parse,
                        "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key{detail::trim(line.substr(0, eq))};
        const std::string_view value = detail::trim(line.substr(eq + 1));

        if (key == "seed") {
            const auto s = detail::parse_value<std::uint64_t>(value, key);
            cfg.data.seed = s;
            cfg.train.seed = s;
        } else if (key == "num_classes") {
            cfg.data.num_classes = detail::parse_value<int>(value, key);
        } else if (key == "dim") {
            cfg.data.dim = detail::parse_value<std::size_t>(value, key);
        } else if (key == "examples_per_class") {
            cfg.data.examples_per_class = detail::parse_value<std::size_t>(value, key);
        } else if (key == "std_dev") {
            cfg.data.std_dev = detail::parse_value<double>(value, key);
        } else if (key == "mean_scale") {
            cfg.data.mean_scale = detail::parse_value<double>(value, key);
        } else if (key == "ood_shift") {
            cfg.data.ood_shift = detail::parse_value<double>(value, key);
        } else if (key == "spurious") {
            spurious = detail::parse_bool(value, key);
        } else if (key == "spurious_minority_fraction") {
            spurious_spec.minority_fraction = detail::parse_value<double>(value, key);
        } else if (key == "spurious_magnitude") {
            spurious_spec.magnitude = detail::parse_value<double>(value, key);
        } else if (key == "spurious_noise_std") {
            spurious_spec.noise_std = detail::parse_value<double>(value, key);
        } else if (key == "lr") {
            cfg.train.lr = detail::parse_value<double>(value, key);
        } else if (key == "momentum") {
            cfg.train.momentum = detail::parse_value<double>(value, key);
        } else if (key == "weight_decay") {
            cfg.train.weight_decay = detail::parse_value<double>(value, key);
        } else if (key == "epochs") {
            cfg.train.epochs = detail::parse_value<std::size_t>(value, key);
        } else if (key == "batch_size") {
            cfg.train.batch_size = detail::parse_value<std::size_t>(value, key);
        } else if (key == "hidden_units") {
            cfg.train.hidden_units = detail::parse_value<std::size_t>(value, key);
        } else if (key == "activation") {
            if (value == "tanh")
                cfg.train.activation = Activation::tanh;
            else if (value == "relu")
                cfg.train.activation = Activation::relu;
            else
                throw Error(ErrorCode::parse, "bad activation '" + std::string(value) + "'");
        } else if (key == "correction") {
            if (value == "none")
                cfg.train.correction = CorrectionPolicy::none;
            else if (value == "probabilistic")
                cfg.train.correction = CorrectionPolicy::probabilistic;
            else if (value == "binary")
                cfg.train.correction = CorrectionPolicy::binary;
            else
                throw Error(ErrorCode::parse, "bad correction '" + std::string(value) + "'");
        } else if (key == "pretrain_epochs") {
            cfg.train.pretrain_epochs = detail::parse_value<std::size_t>(value, key);
        } else if (key == "selection") {
            if (value == "all")
                cfg.train.selection = SelectionPolicy::all;
            else if (value == "uniform")
                cfg.train.selection = SelectionPolicy::uniform;
            else if (value == "high_loss")
                cfg.train.selection = SelectionPolicy::high_loss;
            else if (value == "mapd")
                cfg.train.selection = SelectionPolicy::mapd;
            else
                throw Error(ErrorCode::parse, "bad selection '" + std::string(value) + "'");
        } else if (key == "select_n") {
            cfg.train.select_n = detail::parse_value<std::size_t>(value, key);
        } else if (key == "class_floor") {
            cfg.train.class_floor = detail::parse_value<std::size_t>(value, key);
        } else if (key == "k") {
            cfg.train.knn_k = detail::parse_value<std::size_t>(value, key);
        } else if (key == "record_flags") {
            cfg.train.record_flags = detail::parse_bool(value, key);
        } else if (key == "include_probes") {
            if (value == "suite")
                cfg.train.probe_inclusion = ProbeInclusion::follow_suite;
            else if (value == "all" || value == "true" || value == "1")
                cfg.train.probe_inclusion = ProbeInclusion::include_all;
            else if (value == "none" || value == "false" || value == "0")
                cfg.train.probe_inclusion = ProbeInclusion::exclude_all;
            else
                throw Error(ErrorCode::parse, "bad include_probes '" + std::string(value) + "'");
        } else if (key == "noise_rate") {
            cfg.noise_rate = detail::parse_value<double>(value, key);
        } else if (key == "test_per_class") {
            cfg.test_per_class = detail::parse_value<std::size_t>(value, key);
        } else if (key == "val_per_class") {
            cfg.val_per_class = detail::parse_value<std::size_t>(value, key);
        } else if (key == "probe_n") {
            cfg.probe_n = detail::parse_value<std::size_t>(value, key);
        } else if (key == "probe_test_n") {
            cfg.probe_test_n = detail::parse_value<std::size_t>(value, key);
        } else if (key == "probes_per_group") {
            cfg.probes_per_group = detail::parse_value<std::size_t>(value, key);
        } else if (key == "suite_manifest") {
            cfg.suite_manifest = std::string(value);
        } else if (key == "dataset") {
            cfg.dataset_path = std::string(value);
        } else {
            throw Error(ErrorCode::parse,
                        "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (pos > text.size()) break;
    }
    if (spurious) cfg.data.spurious = spurious_spec;
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

} // namespace mapd
