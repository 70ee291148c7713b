#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapd/curve_store.hpp"
#include "mapd/error.hpp"
#include "mapd/trajectory_knn.hpp"

namespace mapd {

struct Example {
    ExampleId id = 0;
    std::vector<double> features;
    int label = 0;
    // Planted ground-truth metadata (e.g. "random_labels", "minority").
    // Consumed by tests and audits, never by training.
    std::optional<ProbeCategory> true_metadata;
};

struct Dataset {
    std::vector<Example> examples;
    int num_classes = 0;
    std::size_t dim = 0;

    std::size_t size() const { return examples.size(); }

    ExampleId max_id() const {
        ExampleId m = 0;
        for (const Example& e : examples) m = std::max(m, e.id);
        return m;
    }

    void validate() const {
        if (examples.empty()) throw Error(ErrorCode::precondition, "dataset is empty");
        if (num_classes < 1) throw Error(ErrorCode::precondition, "num_classes must be >= 1");
        std::set<ExampleId> seen;
        for (const Example& e : examples) {
            if (!seen.insert(e.id).second)
                throw Error(ErrorCode::precondition,
                            "duplicate example id " + std::to_string(e.id));
            if (e.features.size() != dim)
                throw Error(ErrorCode::precondition,
                            "example " + std::to_string(e.id) + " has dimension " +
                                std::to_string(e.features.size()) + ", dataset dim is " +
                                std::to_string(dim));
            if (e.label < 0 || e.label >= num_classes)
                throw Error(ErrorCode::precondition,
                            "example " + std::to_string(e.id) + " label out of range");
        }
    }
};

inline nlohmann::json example_to_json(const Example& e) {
    nlohmann::json j{{"id", e.id}, {"label", e.label}, {"features", e.features}};
    if (e.true_metadata) j["true_metadata"] = *e.true_metadata;
    return j;
}

inline Example example_from_json(const nlohmann::json& j) {
    Example e;
    e.id = j.at("id").get<ExampleId>();
    e.label = j.at("label").get<int>();
    e.features = j.at("features").get<std::vector<double>>();
    if (j.contains("true_metadata")) e.true_metadata = j.at("true_metadata").get<std::string>();
    return e;
}

inline std::string to_json_string(const Dataset& ds) {
    nlohmann::json j;
    j["num_classes"] = ds.num_classes;
    j["dim"] = ds.dim;
    nlohmann::json arr = nlohmann::json::array();
    for (const Example& e : ds.examples) arr.push_back(example_to_json(e));
    j["examples"] = std::move(arr);
    return j.dump(1);
}

inline Dataset dataset_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("bad dataset json: ") + e.what());
    }
    Dataset ds;
    try {
        ds.num_classes = j.at("num_classes").get<int>();
        ds.dim = j.at("dim").get<std::size_t>();
        for (const auto& ej : j.at("examples")) ds.examples.push_back(example_from_json(ej));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("bad dataset json: ") + e.what());
    }
    ds.validate();
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    write_file(path, to_json_string(ds));
}

inline Dataset load_dataset(const std::string& path) {
    return dataset_from_json(read_file(path));
}

} // namespace mapd
