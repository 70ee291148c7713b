#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mapd/curve_store.hpp"
#include "mapd/error.hpp"
#include "mapd/trajectory_knn.hpp"

namespace mapd {

// ---------------------------------------------------------------------------
// Label correction.
// ---------------------------------------------------------------------------

/// A corrected training target: convex combination of the dataset label and
/// the model's one-hot prediction, weighted by the clean probability.
struct CorrectedLabel {
    std::vector<double> distribution;
};

namespace detail {

inline void check_one_hot(std::span<const double> y) {
    std::size_t ones = 0;
    for (double v : y) {
        if (v == 1.0)
            ++ones;
        else if (v != 0.0)
            throw Error(ErrorCode::precondition, "label vector is not one-hot");
    }
    if (ones != 1) throw Error(ErrorCode::precondition, "label vector is not one-hot");
}

inline void check_unit_interval(double v, const char* name) {
    if (!(v >= 0.0) || !(v <= 1.0))
        throw Error(ErrorCode::precondition, std::string(name) + " must lie in [0,1]");
}

} // namespace detail

inline CorrectedLabel correct_label(std::span<const double> y, int predicted_class,
                                    double p_clean) {
    detail::check_one_hot(y);
    detail::check_unit_interval(p_clean, "p_clean");
    if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= y.size())
        throw Error(ErrorCode::precondition, "predicted_class out of range");
    CorrectedLabel out;
    out.distribution.assign(y.begin(), y.end());
    for (double& v : out.distribution) v *= p_clean;
    out.distribution[static_cast<std::size_t>(predicted_class)] += 1.0 - p_clean;
    return out;
}

/// Ablation variant: argmax of the two-class posterior instead of the
/// probability itself. A tie (p_clean = 0.5) keeps the dataset label.
inline CorrectedLabel binary_correct_label(std::span<const double> y, int predicted_class,
                                           double p_clean) {
    detail::check_one_hot(y);
    detail::check_unit_interval(p_clean, "p_clean");
    return correct_label(y, predicted_class, p_clean >= 0.5 ? 1.0 : 0.0);
}

// ---------------------------------------------------------------------------
// Prioritized batch selection.
// ---------------------------------------------------------------------------

struct PriorityScore {
    double value = 0.0;
};

/// training_score = (clean_score + (1 - correct_class_confidence)) / 2
inline PriorityScore priority_score(double clean_score, double correct_class_confidence) {
    detail::check_unit_interval(clean_score, "clean_score");
    detail::check_unit_interval(correct_class_confidence, "correct_class_confidence");
    return PriorityScore{(clean_score + (1.0 - correct_class_confidence)) / 2.0};
}

struct BatchCandidate {
    ExampleId id = 0;
    int class_label = 0;
    PriorityScore score;
};

/// Chooses exactly select_n ids: each class present keeps its top scorers up
/// to class_floor, the rest is filled by global descending score. Ties break
/// by ascending id. Returns ids in ascending order.
inline std::vector<ExampleId> select_batch(std::span<const BatchCandidate> candidates,
                                           std::size_t select_n, std::size_t class_floor) {
    if (select_n > candidates.size())
        throw Error(ErrorCode::infeasible, "select_n exceeds candidate count");
    std::set<ExampleId> seen;
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!seen.insert(candidates[i].id).second)
            throw Error(ErrorCode::precondition,
                        "duplicate candidate id " + std::to_string(candidates[i].id));
        by_class[candidates[i].class_label].push_back(i);
    }
    if (class_floor * by_class.size() > select_n)
        throw Error(ErrorCode::infeasible,
                    "class floor " + std::to_string(class_floor) + " infeasible for " +
                        std::to_string(by_class.size()) + " classes and select_n " +
                        std::to_string(select_n));

    auto better = [&](std::size_t a, std::size_t b) {
        if (candidates[a].score.value != candidates[b].score.value)
            return candidates[a].score.value > candidates[b].score.value;
        return candidates[a].id < candidates[b].id;
    };

    std::vector<bool> taken(candidates.size(), false);
    std::size_t taken_count = 0;
    for (auto& [label, members] : by_class) {
        std::sort(members.begin(), members.end(), better);
        const std::size_t quota = std::min(class_floor, members.size());
        for (std::size_t i = 0; i < quota; ++i) {
            taken[members[i]] = true;
            ++taken_count;
        }
    }
    std::vector<std::size_t> rest;
    rest.reserve(candidates.size() - taken_count);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (!taken[i]) rest.push_back(i);
    std::sort(rest.begin(), rest.end(), better);
    for (std::size_t i = 0; taken_count < select_n; ++i, ++taken_count) taken[rest[i]] = true;

    std::vector<ExampleId> out;
    out.reserve(select_n);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (taken[i]) out.push_back(candidates[i].id);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Online trajectory scoring.
// ---------------------------------------------------------------------------

/// Clean probability from a posterior, collapsed to the {clean, noisy} pair by
/// renormalizing over those two categories. With no mass on either, falls back
/// to the uninformative 0.5.
inline double two_class_clean_probability(const MetadataPosterior& post,
                                          const ProbeCategory& clean_category,
                                          const ProbeCategory& noisy_category) {
    auto count_of = [&](const ProbeCategory& c) {
        auto it = post.counts.find(c);
        return it == post.counts.end() ? 0 : it->second;
    };
    const int c = count_of(clean_category);
    const int n = count_of(noisy_category);
    if (c + n == 0) return 0.5;
    return static_cast<double>(c) / static_cast<double>(c + n);
}

struct OnlineBatchEntry {
    ExampleId id = 0;
    float current_loss = 0.0f;
    double correct_class_confidence = 0.0;
};

struct OnlineScores {
    std::map<ExampleId, double> clean_probability;
    std::map<ExampleId, PriorityScore> priority;
};

/// Appends each entry's current loss to a working copy of its recorded curve
/// (the store itself is never mutated), classifies the extended prefix, and
/// scores it. Examples with no history use a curve of length 1.
inline OnlineScores online_append_and_score(const CurveStore& curves,
                                            std::span<const OnlineBatchEntry> batch,
                                            const ProbeTrajectoryDataset& ref, std::size_t k,
                                            const ProbeCategory& clean_category,
                                            const ProbeCategory& noisy_category) {
    OnlineScores out;
    for (const OnlineBatchEntry& entry : batch) {
        std::vector<float> working;
        if (curves.contains(entry.id)) {
            const LearningCurve& c = curves.curve(entry.id);
            working = curves.loss_prefix(entry.id, c.points.size());
        }
        working.push_back(entry.current_loss);
        const MetadataPosterior post = posterior(working, ref, k, working.size());
        const double p_clean = two_class_clean_probability(post, clean_category, noisy_category);
        out.clean_probability[entry.id] = p_clean;
        out.priority[entry.id] = priority_score(p_clean, entry.correct_class_confidence);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Minority-group detection.
// ---------------------------------------------------------------------------

/// Per-example probability of matching the minority probes' dynamics. The
/// reference must hold exactly the two group categories, built from
/// evaluation-only curves.
inline std::map<ExampleId, double> detect_minority(const CurveStore& store,
                                                   const ProbeTrajectoryDataset& ref,
                                                   std::size_t k, std::size_t t,
                                                   const ProbeCategory& minority = "minority",
                                                   const ProbeCategory& majority = "majority") {
    const auto names = ref.category_names();
    const std::vector<ProbeCategory> expected = [&] {
        std::vector<ProbeCategory> v{minority, majority};
        std::sort(v.begin(), v.end());
        return v;
    }();
    if (names != expected)
        throw Error(ErrorCode::precondition,
                    "reference categories must be exactly {" + minority + ", " + majority + "}");
    const ClassifyResult result = classify_all(store, ref, k, t);
    std::map<ExampleId, double> out;
    for (const auto& [id, post] : result.posteriors) out[id] = post.prob(minority);
    return out;
}

// ---------------------------------------------------------------------------
// Audit ranking.
// ---------------------------------------------------------------------------

struct AuditEntry {
    ExampleId example_id = 0;
    ProbeCategory assigned_category;
    MetadataPosterior posterior;
    int class_label = 0;
    double p_category = 0.0;
};

/// Top examples by posterior probability of one category, optionally
/// restricted to a class. Deterministic: descending probability, ties by
/// ascending id.
inline std::vector<AuditEntry> audit_rank(const std::map<ExampleId, MetadataPosterior>& posteriors,
                                          const std::map<ExampleId, int>& labels,
                                          const ProbeCategory& category,
                                          std::optional<int> class_filter, std::size_t top_n,
                                          std::span<const ProbeCategory> known_categories = {}) {
    if (posteriors.size() != labels.size())
        throw Error(ErrorCode::precondition, "posterior and label key sets differ");
    for (const auto& [id, label] : labels)
        if (!posteriors.count(id))
            throw Error(ErrorCode::precondition,
                        "label id " + std::to_string(id) + " missing from posteriors");
    std::set<ProbeCategory> known(known_categories.begin(), known_categories.end());
    if (known.empty())
        for (const auto& [id, post] : posteriors)
            for (const auto& [cat, count] : post.counts) known.insert(cat);
    if (!known.count(category))
        throw Error(ErrorCode::precondition, "unknown probe category '" + category + "'");

    std::vector<AuditEntry> entries;
    for (const auto& [id, post] : posteriors) {
        const int label = labels.at(id);
        if (class_filter && label != *class_filter) continue;
        AuditEntry e;
        e.example_id = id;
        e.assigned_category = assign(post);
        e.posterior = post;
        e.class_label = label;
        e.p_category = post.prob(category);
        entries.push_back(std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const AuditEntry& a, const AuditEntry& b) {
        if (a.p_category != b.p_category) return a.p_category > b.p_category;
        return a.example_id < b.example_id;
    });
    if (entries.size() > top_n) entries.resize(top_n);
    return entries;
}

/// rank,example_id,class,assigned_category,p_category
inline std::string audit_report_csv(std::span<const AuditEntry> entries) {
    std::string out = "rank,example_id,class,assigned_category,p_category\n";
    char buf[64];
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const AuditEntry& e = entries[i];
        detail::format_u64(out, i + 1);
        out += ',';
        detail::format_u64(out, e.example_id);
        out += ',';
        auto res = std::to_chars(buf, buf + sizeof(buf), e.class_label);
        out.append(buf, res.ptr);
        out += ',';
        out += e.assigned_category;
        out += ',';
        res = std::to_chars(buf, buf + sizeof(buf), e.p_category);
        out.append(buf, res.ptr);
        out += '\n';
    }
    return out;
}

} // namespace mapd
