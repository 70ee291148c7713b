#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapd/dataset.hpp"
#include "mapd/error.hpp"
#include "mapd/rng.hpp"

namespace mapd {

// ---------------------------------------------------------------------------
// Typicality scores. Consistency-style scores are an input artifact; for
// synthetic data the geometric proxy below (negative distance to the own-class
// centroid) stands in.
// ---------------------------------------------------------------------------

struct TypicalityScores {
    std::map<ExampleId, double> scores;

    double at(ExampleId id) const {
        auto it = scores.find(id);
        if (it == scores.end())
            throw Error(ErrorCode::precondition,
                        "missing typicality score for id " + std::to_string(id));
        return it->second;
    }
};

inline TypicalityScores centroid_typicality_scores(const Dataset& ds) {
    std::vector<std::vector<double>> centroid(ds.num_classes,
                                              std::vector<double>(ds.dim, 0.0));
    std::vector<std::size_t> count(ds.num_classes, 0);
    for (const Example& e : ds.examples) {
        for (std::size_t i = 0; i < ds.dim; ++i) centroid[e.label][i] += e.features[i];
        ++count[e.label];
    }
    for (int c = 0; c < ds.num_classes; ++c)
        if (count[c] > 0)
            for (double& v : centroid[c]) v /= static_cast<double>(count[c]);
    TypicalityScores out;
    for (const Example& e : ds.examples) {
        double sq = 0.0;
        for (std::size_t i = 0; i < ds.dim; ++i) {
            const double d = e.features[i] - centroid[e.label][i];
            sq += d * d;
        }
        out.scores[e.id] = -std::sqrt(sq);
    }
    return out;
}

inline std::string scores_to_csv(const TypicalityScores& scores) {
    std::string out = "example_id,score\n";
    char buf[64];
    for (const auto& [id, score] : scores.scores) {
        detail::format_u64(out, id);
        out += ',';
        auto res = std::to_chars(buf, buf + sizeof(buf), score);
        out.append(buf, res.ptr);
        out += '\n';
    }
    return out;
}

inline TypicalityScores scores_from_csv(std::string_view text) {
    TypicalityScores out;
    std::size_t pos = 0, line_no = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        ++line_no;
        if (!header_seen) {
            if (line != "example_id,score")
                throw Error(ErrorCode::parse, "bad score header (want example_id,score)");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (fields.size() != 2)
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected 2 fields");
        const auto id = detail::parse_number<ExampleId>(fields[0], line_no, "example_id");
        const auto score = detail::parse_number<double>(fields[1], line_no, "score");
        if (!out.scores.emplace(id, score).second)
            throw Error(ErrorCode::parse,
                        "line " + std::to_string(line_no) + ": duplicate id " + std::to_string(id));
    }
    if (!header_seen) throw Error(ErrorCode::parse, "empty score file");
    return out;
}

inline void save_scores(const TypicalityScores& s, const std::string& path) {
    write_file(path, scores_to_csv(s));
}
inline TypicalityScores load_scores(const std::string& path) {
    return scores_from_csv(read_file(path));
}

// ---------------------------------------------------------------------------
// Curation primitives. All pure functions of (dataset, parameters, seed).
// Transformed probes receive fresh ids (the caller supplies the first free id);
// untransformed selections keep their base-dataset identity.
// ---------------------------------------------------------------------------

namespace detail {

/// First n positions of a seeded Fisher-Yates shuffle of 0..total-1.
inline std::vector<std::size_t> sample_without_replacement(std::size_t total, std::size_t n,
                                                           Rng& rng) {
    if (n > total)
        throw Error(ErrorCode::precondition, "cannot sample " + std::to_string(n) +
                                                 " from population of " + std::to_string(total));
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.uniform_int(total - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    return idx;
}

inline std::vector<std::size_t> rank_by_score(const Dataset& ds, const TypicalityScores& scores,
                                              bool highest_first) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> s(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) s[i] = scores.at(ds.examples[i].id);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s[a] != s[b]) return highest_first ? s[a] > s[b] : s[a] < s[b];
        return ds.examples[a].id < ds.examples[b].id;
    });
    return order;
}

} // namespace detail

/// The n examples with the highest typicality scores, ties by ascending id.
inline std::vector<Example> curate_typical(const Dataset& ds, const TypicalityScores& scores,
                                           std::size_t n) {
    if (n > ds.size())
        throw Error(ErrorCode::precondition, "n exceeds dataset size");
    auto order = detail::rank_by_score(ds, scores, /*highest_first=*/true);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ds.examples[order[i]]);
    return out;
}

/// Mirror of curate_typical with the lowest scores.
inline std::vector<Example> curate_atypical(const Dataset& ds, const TypicalityScores& scores,
                                            std::size_t n) {
    if (n > ds.size())
        throw Error(ErrorCode::precondition, "n exceeds dataset size");
    auto order = detail::rank_by_score(ds, scores, /*highest_first=*/false);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ds.examples[order[i]]);
    return out;
}

/// Copies of n sampled examples with labels redrawn uniformly from [0, C).
inline std::vector<Example> curate_random_labels(const Dataset& ds, std::size_t n,
                                                 std::uint64_t seed, ExampleId first_fresh_id) {
    Rng rng(seed);
    auto picks = detail::sample_without_replacement(ds.size(), n, rng);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Example e = ds.examples[picks[i]];
        e.id = first_fresh_id + i;
        e.label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ds.num_classes)));
        e.true_metadata = categories::random_labels;
        out.push_back(std::move(e));
    }
    return out;
}

/// Pure-noise probes: features i.i.d. U[0,1) per dimension, labels uniform.
inline std::vector<Example> curate_random_inputs(std::size_t dim, int num_classes, std::size_t n,
                                                 std::uint64_t seed, ExampleId first_fresh_id) {
    if (dim < 1 || n < 1 || num_classes < 1)
        throw Error(ErrorCode::precondition, "dim, n and num_classes must be positive");
    Rng rng(seed);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Example e;
        e.id = first_fresh_id + i;
        e.features.resize(dim);
        for (double& v : e.features) v = rng.uniform();
        e.label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_classes)));
        e.true_metadata = categories::random_inputs_outputs;
        out.push_back(std::move(e));
    }
    return out;
}

/// Copies of n sampled examples with N(0, sigma^2) noise added per feature.
inline std::vector<Example> curate_corrupted(const Dataset& ds, std::size_t n, double sigma,
                                             std::uint64_t seed, ExampleId first_fresh_id) {
    if (sigma < 0.0)
        throw Error(ErrorCode::precondition, "sigma must be nonnegative");
    Rng rng(seed);
    auto picks = detail::sample_without_replacement(ds.size(), n, rng);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Example e = ds.examples[picks[i]];
        e.id = first_fresh_id + i;
        for (double& v : e.features) v += sigma * rng.normal();
        e.true_metadata = categories::corrupted;
        out.push_back(std::move(e));
    }
    return out;
}

/// Untransformed random sample, a proxy for clean data. Keeps base identities.
inline std::vector<Example> curate_clean_sample(const Dataset& ds, std::size_t n,
                                                std::uint64_t seed) {
    Rng rng(seed);
    auto picks = detail::sample_without_replacement(ds.size(), n, rng);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ds.examples[picks[i]]);
    return out;
}

/// Out-of-distribution probes: a Gaussian mixture over the dataset's class
/// centroids shifted by a constant offset on every coordinate; labels uniform.
inline std::vector<Example> curate_ood(const Dataset& ds, std::size_t n, double shift,
                                       double std_dev, std::uint64_t seed,
                                       ExampleId first_fresh_id) {
    if (std_dev < 0.0)
        throw Error(ErrorCode::precondition, "std_dev must be nonnegative");
    std::vector<std::vector<double>> centroid(ds.num_classes,
                                              std::vector<double>(ds.dim, 0.0));
    std::vector<std::size_t> count(ds.num_classes, 0);
    for (const Example& e : ds.examples) {
        for (std::size_t i = 0; i < ds.dim; ++i) centroid[e.label][i] += e.features[i];
        ++count[e.label];
    }
    for (int c = 0; c < ds.num_classes; ++c)
        if (count[c] > 0)
            for (double& v : centroid[c]) v /= static_cast<double>(count[c]);
    Rng rng(seed);
    std::vector<Example> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto component = rng.uniform_int(static_cast<std::uint64_t>(ds.num_classes));
        Example e;
        e.id = first_fresh_id + i;
        e.features.resize(ds.dim);
        for (std::size_t d = 0; d < ds.dim; ++d)
            e.features[d] = centroid[component][d] + shift + std_dev * rng.normal();
        e.label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ds.num_classes)));
        e.true_metadata = categories::ood;
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suite assembly.
// ---------------------------------------------------------------------------

enum class GeneratorKind {
    typical,
    atypical,
    random_labels,
    random_inputs_outputs,
    corrupted,
    ood,
    clean_random_sample,
};

inline std::string_view to_string(GeneratorKind g) {
    switch (g) {
    case GeneratorKind::typical: return "typical";
    case GeneratorKind::atypical: return "atypical";
    case GeneratorKind::random_labels: return "random_labels";
    case GeneratorKind::random_inputs_outputs: return "random_inputs_outputs";
    case GeneratorKind::corrupted: return "corrupted";
    case GeneratorKind::ood: return "ood";
    case GeneratorKind::clean_random_sample: return "clean_random_sample";
    }
    return "unknown";
}

inline GeneratorKind generator_from_string(std::string_view name) {
    for (GeneratorKind g :
         {GeneratorKind::typical, GeneratorKind::atypical, GeneratorKind::random_labels,
          GeneratorKind::random_inputs_outputs, GeneratorKind::corrupted, GeneratorKind::ood,
          GeneratorKind::clean_random_sample})
        if (to_string(g) == name) return g;
    throw Error(ErrorCode::parse, "unknown generator '" + std::string(name) + "'");
}

struct ProbeSpec {
    std::string category;
    GeneratorKind generator = GeneratorKind::clean_random_sample;
    std::size_t train_n = 250;
    std::size_t test_n = 250;
    bool include_in_training = true;
    double sigma = 0.1;     // corrupted: noise standard deviation
    double ood_shift = 3.0; // ood: per-coordinate centroid offset
    double ood_std = 0.25;  // ood: mixture component spread
};

struct ProbeSuite {
    struct Category {
        std::string name;
        std::vector<Example> train;
        std::vector<Example> test;
        bool include_in_training = true;
    };
    std::vector<Category> entries; // spec order

    const Category* find(const std::string& name) const {
        for (const Category& c : entries)
            if (c.name == name) return &c;
        return nullptr;
    }
    const Category& at(const std::string& name) const {
        const Category* c = find(name);
        if (!c) throw Error(ErrorCode::precondition, "unknown probe category '" + name + "'");
        return *c;
    }
};

/// Builds a suite from per-category specs. Each category draws train_n+test_n
/// examples with its own derived seed and splits them; untransformed categories
/// (typical/atypical/clean) claim disjoint base examples so probe ids never
/// collide across the suite.
inline ProbeSuite assemble_suite(const Dataset& ds, std::span<const ProbeSpec> specs,
                                 std::uint64_t seed,
                                 const TypicalityScores* scores = nullptr) {
    std::set<std::string> names;
    for (const ProbeSpec& spec : specs)
        if (!names.insert(spec.category).second)
            throw Error(ErrorCode::precondition,
                        "duplicate probe category '" + spec.category + "'");

    ProbeSuite suite;
    ExampleId next_fresh = ds.max_id() + 1;
    std::set<ExampleId> claimed; // base ids already used by untransformed categories

    auto unclaimed_view = [&]() {
        Dataset view;
        view.num_classes = ds.num_classes;
        view.dim = ds.dim;
        for (const Example& e : ds.examples)
            if (!claimed.count(e.id)) view.examples.push_back(e);
        return view;
    };

    for (const ProbeSpec& spec : specs) {
        const std::size_t total = spec.train_n + spec.test_n;
        const std::uint64_t cat_seed = derive_seed(seed, "curate/" + spec.category);
        std::vector<Example> drawn;
        switch (spec.generator) {
        case GeneratorKind::typical:
        case GeneratorKind::atypical: {
            if (!scores)
                throw Error(ErrorCode::precondition,
                            "typicality scores required for category '" + spec.category + "'");
            Dataset view = unclaimed_view();
            drawn = spec.generator == GeneratorKind::typical
                        ? curate_typical(view, *scores, total)
                        : curate_atypical(view, *scores, total);
            for (const Example& e : drawn) claimed.insert(e.id);
            break;
        }
        case GeneratorKind::clean_random_sample: {
            Dataset view = unclaimed_view();
            drawn = curate_clean_sample(view, total, cat_seed);
            for (const Example& e : drawn) claimed.insert(e.id);
            break;
        }
        case GeneratorKind::random_labels:
            drawn = curate_random_labels(ds, total, cat_seed, next_fresh);
            next_fresh += total;
            break;
        case GeneratorKind::random_inputs_outputs:
            drawn = curate_random_inputs(ds.dim, ds.num_classes, total, cat_seed, next_fresh);
            next_fresh += total;
            break;
        case GeneratorKind::corrupted:
            drawn = curate_corrupted(ds, total, spec.sigma, cat_seed, next_fresh);
            next_fresh += total;
            break;
        case GeneratorKind::ood:
            drawn = curate_ood(ds, total, spec.ood_shift, spec.ood_std, cat_seed, next_fresh);
            next_fresh += total;
            break;
        }
        ProbeSuite::Category cat;
        cat.name = spec.category;
        cat.include_in_training = spec.include_in_training;
        cat.train.assign(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(spec.train_n));
        cat.test.assign(drawn.begin() + static_cast<std::ptrdiff_t>(spec.train_n), drawn.end());
        suite.entries.push_back(std::move(cat));
    }
    return suite;
}

// ---------------------------------------------------------------------------
// Manifest and suite serialization (JSON).
// ---------------------------------------------------------------------------

struct SuiteManifest {
    std::uint64_t seed = 0;
    std::optional<std::string> scores_file;
    std::vector<ProbeSpec> specs;
};

inline std::string to_json_string(const SuiteManifest& m) {
    nlohmann::json j;
    j["seed"] = m.seed;
    if (m.scores_file) j["scores_file"] = *m.scores_file;
    nlohmann::json arr = nlohmann::json::array();
    for (const ProbeSpec& s : m.specs) {
        nlohmann::json cj{{"name", s.category},
                          {"generator", std::string(to_string(s.generator))},
                          {"train_n", s.train_n},
                          {"test_n", s.test_n},
                          {"include_in_training", s.include_in_training}};
        if (s.generator == GeneratorKind::corrupted) cj["sigma"] = s.sigma;
        if (s.generator == GeneratorKind::ood) {
            cj["ood_shift"] = s.ood_shift;
            cj["ood_std"] = s.ood_std;
        }
        arr.push_back(std::move(cj));
    }
    j["categories"] = std::move(arr);
    return j.dump(1);
}

inline SuiteManifest manifest_from_json(const std::string& text) {
    SuiteManifest m;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        m.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("scores_file")) m.scores_file = j.at("scores_file").get<std::string>();
        for (const auto& cj : j.at("categories")) {
            ProbeSpec s;
            s.category = cj.at("name").get<std::string>();
            s.generator = generator_from_string(cj.at("generator").get<std::string>());
            if (cj.contains("train_n")) s.train_n = cj.at("train_n").get<std::size_t>();
            if (cj.contains("test_n")) s.test_n = cj.at("test_n").get<std::size_t>();
            if (cj.contains("include_in_training"))
                s.include_in_training = cj.at("include_in_training").get<bool>();
            if (cj.contains("sigma")) s.sigma = cj.at("sigma").get<double>();
            if (cj.contains("ood_shift")) s.ood_shift = cj.at("ood_shift").get<double>();
            if (cj.contains("ood_std")) s.ood_std = cj.at("ood_std").get<double>();
            m.specs.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("bad suite manifest: ") + e.what());
    }
    return m;
}

inline std::string to_json_string(const ProbeSuite& suite) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ProbeSuite::Category& c : suite.entries) {
        nlohmann::json cj{{"name", c.name}, {"include_in_training", c.include_in_training}};
        nlohmann::json train = nlohmann::json::array(), test = nlohmann::json::array();
        for (const Example& e : c.train) train.push_back(example_to_json(e));
        for (const Example& e : c.test) test.push_back(example_to_json(e));
        cj["train"] = std::move(train);
        cj["test"] = std::move(test);
        arr.push_back(std::move(cj));
    }
    nlohmann::json j{{"categories", std::move(arr)}};
    return j.dump(1);
}

inline ProbeSuite suite_from_json(const std::string& text) {
    ProbeSuite suite;
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        for (const auto& cj : j.at("categories")) {
            ProbeSuite::Category c;
            c.name = cj.at("name").get<std::string>();
            c.include_in_training = cj.at("include_in_training").get<bool>();
            for (const auto& ej : cj.at("train")) c.train.push_back(example_from_json(ej));
            for (const auto& ej : cj.at("test")) c.test.push_back(example_from_json(ej));
            suite.entries.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("bad suite json: ") + e.what());
    }
    return suite;
}

inline void save_suite(const ProbeSuite& suite, const std::string& path) {
    write_file(path, to_json_string(suite));
}
inline ProbeSuite load_suite(const std::string& path) {
    return suite_from_json(read_file(path));
}
inline void save_manifest(const SuiteManifest& m, const std::string& path) {
    write_file(path, to_json_string(m));
}
inline SuiteManifest load_manifest(const std::string& path) {
    return manifest_from_json(read_file(path));
}

/// cmd_curate entry point: resolve scores if any spec needs them, then build.
inline ProbeSuite assemble_from_manifest(const Dataset& ds, const SuiteManifest& m,
                                         const TypicalityScores* scores = nullptr) {
    TypicalityScores loaded;
    const TypicalityScores* effective = scores;
    bool needs_scores = false;
    for (const ProbeSpec& s : m.specs)
        if (s.generator == GeneratorKind::typical || s.generator == GeneratorKind::atypical)
            needs_scores = true;
    if (needs_scores && !effective) {
        if (!m.scores_file)
            throw Error(ErrorCode::precondition,
                        "manifest requests typical/atypical probes but no score file is given");
        loaded = load_scores(*m.scores_file);
        effective = &loaded;
    }
    return assemble_suite(ds, m.specs, m.seed, effective);
}

} // namespace mapd
