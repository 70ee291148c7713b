#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mapd/curve_store.hpp"
#include "mapd/dataset.hpp"
#include "mapd/error.hpp"
#include "mapd/model.hpp"
#include "mapd/probe_suite.hpp"
#include "mapd/rng.hpp"
#include "mapd/synthetic.hpp"
#include "mapd/tasks.hpp"
#include "mapd/trajectory_knn.hpp"

namespace mapd {

enum class CorrectionPolicy { none, probabilistic, binary };
enum class SelectionPolicy { all, uniform, high_loss, mapd };
enum class ProbeInclusion { follow_suite, include_all, exclude_all };

inline std::string_view to_string(CorrectionPolicy p) {
    switch (p) {
    case CorrectionPolicy::none: return "none";
    case CorrectionPolicy::probabilistic: return "probabilistic";
    case CorrectionPolicy::binary: return "binary";
    }
    return "unknown";
}

inline std::string_view to_string(SelectionPolicy p) {
    switch (p) {
    case SelectionPolicy::all: return "all";
    case SelectionPolicy::uniform: return "uniform";
    case SelectionPolicy::high_loss: return "high_loss";
    case SelectionPolicy::mapd: return "mapd";
    }
    return "unknown";
}

struct TrainConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    std::uint64_t seed = 1;
    std::size_t hidden_units = 0; // 0 = plain softmax regression
    Activation activation = Activation::relu;
    ProbeInclusion probe_inclusion = ProbeInclusion::follow_suite;
    CorrectionPolicy correction = CorrectionPolicy::none;
    std::size_t pretrain_epochs = 10;
    SelectionPolicy selection = SelectionPolicy::all;
    std::size_t select_n = 32;
    std::size_t class_floor = 2;
    std::size_t knn_k = 20;
    bool record_flags = true; // record correctness + label confidence columns
    ProbeCategory clean_category = categories::clean_random_sample;
    ProbeCategory noisy_category = categories::random_labels;

    void validate() const {
        if (!(lr >= 0.0)) throw Error(ErrorCode::precondition, "learning rate must be >= 0");
        if (epochs < 1) throw Error(ErrorCode::precondition, "epochs must be >= 1");
        if (batch_size < 1) throw Error(ErrorCode::precondition, "batch_size must be >= 1");
        if (knn_k < 1) throw Error(ErrorCode::precondition, "k must be >= 1");
    }
};

struct TrainResult {
    ModelState model;
    CurveStore store;
    ProbeTrajectoryDataset reference; // the train-half probe trajectories
    std::map<ExampleId, ProbeCategory> test_probe_truth;
    std::map<ExampleId, ProbeCategory> train_probe_truth;
    std::vector<double> eval_accuracy; // per epoch, when an eval set was given
    std::size_t steps_per_epoch = 0;
};

inline double dataset_accuracy(const ModelState& m, const Dataset& ds) {
    std::size_t hits = 0;
    for (const Example& e : ds.examples)
        if (predict_class(m, e.features) == e.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.examples.size());
}

namespace detail {

struct PoolMember {
    Example example;
    bool trained = true;
};

struct ProbeTag {
    ExampleId id;
    ProbeCategory category;
    bool train_half; // train half feeds the reference set; test half is truth-only
};

} // namespace detail

/// Trains on the dataset plus the suite's included probes, recording
/// end-of-epoch loss (and optionally correctness / label confidence) for every
/// pool example and every evaluation-only probe. Returns the trained model,
/// the curve store, and the probe trajectory reference set built from the
/// suite's train halves.
inline TrainResult train_and_record(const Dataset& dataset, const ProbeSuite& suite,
                                    const TrainConfig& cfg, const Dataset* eval_set = nullptr) {
    cfg.validate();
    dataset.validate();

    // --- assemble the optimization pool and the evaluation-only extras
    std::vector<detail::PoolMember> pool;
    std::map<ExampleId, std::size_t> index_of;
    pool.reserve(dataset.size());
    for (const Example& e : dataset.examples) {
        index_of[e.id] = pool.size();
        pool.push_back({e, true});
    }

    std::vector<detail::ProbeTag> probe_tags;
    for (const ProbeSuite::Category& cat : suite.entries) {
        bool included = cat.include_in_training;
        if (cfg.probe_inclusion == ProbeInclusion::include_all) included = true;
        if (cfg.probe_inclusion == ProbeInclusion::exclude_all) included = false;
        for (const auto* half : {&cat.train, &cat.test}) {
            for (const Example& e : *half) {
                if (e.features.size() != dataset.dim)
                    throw Error(ErrorCode::precondition,
                                "probe " + std::to_string(e.id) + " dimension mismatch");
                probe_tags.push_back({e.id, cat.name, half == &cat.train});
                auto it = index_of.find(e.id);
                if (it != index_of.end()) {
                    // Untransformed probe aliasing a dataset example: it is
                    // already optimized, which contradicts an excluded suite.
                    if (!included)
                        throw Error(ErrorCode::precondition,
                                    "probe " + std::to_string(e.id) +
                                        " is excluded from training but aliases a training example");
                    continue;
                }
                index_of[e.id] = pool.size();
                pool.push_back({e, included});
            }
        }
    }

    std::vector<std::size_t> trainable; // pool indices that receive gradients
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i].trained) trainable.push_back(i);
    if (trainable.empty())
        throw Error(ErrorCode::precondition, "nothing to optimize");

    // Probe indices by (category, train-half) for online reference building.
    std::vector<std::size_t> ref_probe_pool; // pool index of every train-half probe
    std::vector<ProbeCategory> ref_probe_category;
    TrainResult result;
    for (const detail::ProbeTag& tag : probe_tags) {
        if (tag.train_half) {
            ref_probe_pool.push_back(index_of.at(tag.id));
            ref_probe_category.push_back(tag.category);
            result.train_probe_truth[tag.id] = tag.category;
        } else {
            result.test_probe_truth[tag.id] = tag.category;
        }
    }

    const bool online_needed = cfg.correction != CorrectionPolicy::none ||
                               cfg.selection == SelectionPolicy::mapd;
    if (online_needed) {
        std::set<ProbeCategory> have;
        for (const ProbeCategory& c : ref_probe_category) have.insert(c);
        if (!have.count(cfg.clean_category) || !have.count(cfg.noisy_category))
            throw Error(ErrorCode::precondition,
                        "correction/mapd selection needs probe categories '" +
                            cfg.clean_category + "' and '" + cfg.noisy_category + "'");
        if (cfg.knn_k > ref_probe_pool.size())
            throw Error(ErrorCode::precondition, "k exceeds the number of reference probes");
    }

    // --- model and optimizer
    ModelState model = init_model(dataset.num_classes, dataset.dim, cfg.hidden_units,
                                  cfg.activation, derive_seed(cfg.seed, "train/init"));
    SgdState opt = make_sgd_state(model);
    Rng shuffle_rng(derive_seed(cfg.seed, "train/shuffle"));
    Rng select_rng(derive_seed(cfg.seed, "train/select"));

    CurveStore store;
    // Losses recorded so far for pool index i (same values as the store; kept
    // flat for cheap prefix access in the online scheme).
    std::vector<std::vector<float>> history(pool.size());

    const std::size_t num_batches =
        (trainable.size() + cfg.batch_size - 1) / cfg.batch_size;
    result.steps_per_epoch = num_batches;

    std::vector<std::size_t> order = trainable;
    std::vector<double> p_clean_epoch(pool.size(), 1.0);
    std::vector<int> predicted_epoch(pool.size(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Online clean probabilities from completed epochs, plus the model's
        // epoch-boundary predictions: the corrected targets for this epoch are
        // a pure function of the state after the previous one.
        const bool correcting = cfg.correction != CorrectionPolicy::none &&
                                epoch >= cfg.pretrain_epochs && epoch >= 1;
        if (correcting) {
            ProbeTrajectoryDataset ref;
            for (std::size_t p = 0; p < ref_probe_pool.size(); ++p)
                ref.add(history[ref_probe_pool[p]], ref_probe_category[p],
                        pool[ref_probe_pool[p]].example.id);
            for (std::size_t i : trainable) {
                const MetadataPosterior post =
                    posterior(history[i], ref, cfg.knn_k, epoch);
                p_clean_epoch[i] =
                    two_class_clean_probability(post, cfg.clean_category, cfg.noisy_category);
                predicted_epoch[i] = predict_class(model, pool[i].example.features);
            }
        }

        // Shuffled pass over the trainable pool.
        for (std::size_t i = order.size(); i-- > 1;) {
            const std::size_t j = shuffle_rng.uniform_int(i + 1);
            std::swap(order[i], order[j]);
        }

        for (std::size_t b = 0; b < num_batches; ++b) {
            const std::size_t begin = b * cfg.batch_size;
            const std::size_t end = std::min(begin + cfg.batch_size, order.size());
            std::span<const std::size_t> batch(order.data() + begin, end - begin);

            // --- pick the members that actually receive gradients
            std::vector<std::size_t> chosen;
            switch (cfg.selection) {
            case SelectionPolicy::all:
                chosen.assign(batch.begin(), batch.end());
                break;
            case SelectionPolicy::uniform: {
                const std::size_t n = std::min(cfg.select_n, batch.size());
                auto picks = detail::sample_without_replacement(batch.size(), n, select_rng);
                for (std::size_t p : picks) chosen.push_back(batch[p]);
                break;
            }
            case SelectionPolicy::high_loss: {
                const std::size_t n = std::min(cfg.select_n, batch.size());
                std::vector<std::pair<double, std::size_t>> scored;
                scored.reserve(batch.size());
                for (std::size_t i : batch)
                    scored.emplace_back(example_loss(model, pool[i].example), i);
                std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return pool[a.second].example.id < pool[b.second].example.id;
                });
                for (std::size_t i = 0; i < n; ++i) chosen.push_back(scored[i].second);
                break;
            }
            case SelectionPolicy::mapd: {
                // Working reference: recorded probe prefixes plus each probe's
                // loss under the current parameters, so prefix lengths line up
                // with the queries even in epoch 0.
                ProbeTrajectoryDataset ref;
                for (std::size_t p = 0; p < ref_probe_pool.size(); ++p) {
                    const std::size_t i = ref_probe_pool[p];
                    std::vector<float> curve = history[i];
                    curve.push_back(
                        static_cast<float>(example_loss(model, pool[i].example)));
                    ref.add(std::move(curve), ref_probe_category[p], pool[i].example.id);
                }
                std::vector<OnlineBatchEntry> entries;
                std::vector<BatchCandidate> candidates;
                entries.reserve(batch.size());
                for (std::size_t i : batch) {
                    const Example& e = pool[i].example;
                    const std::vector<double> probs = forward(model, e.features);
                    OnlineBatchEntry entry;
                    entry.id = e.id;
                    entry.current_loss = static_cast<float>(example_loss(model, e));
                    entry.correct_class_confidence =
                        probs[static_cast<std::size_t>(e.label)];
                    entries.push_back(entry);
                }
                CurveStore working;
                for (std::size_t i : batch) {
                    for (std::size_t e = 0; e < history[i].size(); ++e) {
                        CurvePoint pt;
                        pt.epoch = static_cast<std::uint32_t>(e);
                        pt.loss = history[i][e];
                        working.append_point(pool[i].example.id, pt);
                    }
                }
                const OnlineScores scores =
                    online_append_and_score(working, entries, ref, cfg.knn_k,
                                            cfg.clean_category, cfg.noisy_category);
                for (std::size_t i : batch)
                    candidates.push_back(BatchCandidate{pool[i].example.id,
                                                        pool[i].example.label,
                                                        scores.priority.at(pool[i].example.id)});
                const std::size_t n = std::min(cfg.select_n, batch.size());
                std::size_t floor = cfg.class_floor;
                std::set<int> classes_present;
                for (const BatchCandidate& c : candidates) classes_present.insert(c.class_label);
                floor = std::min(floor, n / std::max<std::size_t>(classes_present.size(), 1));
                const std::vector<ExampleId> ids = select_batch(candidates, n, floor);
                const std::set<ExampleId> id_set(ids.begin(), ids.end());
                for (std::size_t i : batch)
                    if (id_set.count(pool[i].example.id)) chosen.push_back(i);
                break;
            }
            }
            if (chosen.empty()) continue;

            // --- targets (possibly corrected) and the SGD step
            std::vector<std::vector<double>> soft_targets;
            std::vector<BatchItem> items;
            soft_targets.reserve(chosen.size());
            items.reserve(chosen.size());
            for (std::size_t i : chosen) {
                const Example& e = pool[i].example;
                BatchItem item;
                item.example = &e;
                if (correcting) {
                    std::vector<double> one_hot(
                        static_cast<std::size_t>(dataset.num_classes), 0.0);
                    one_hot[static_cast<std::size_t>(e.label)] = 1.0;
                    const CorrectedLabel corrected =
                        cfg.correction == CorrectionPolicy::probabilistic
                            ? correct_label(one_hot, predicted_epoch[i], p_clean_epoch[i])
                            : binary_correct_label(one_hot, predicted_epoch[i],
                                                   p_clean_epoch[i]);
                    soft_targets.push_back(corrected.distribution);
                    item.soft_target = &soft_targets.back();
                }
                items.push_back(item);
            }
            const ModelGradient grad = gradient(model, items);
            sgd_step(model, grad, opt, cfg.lr, cfg.momentum, cfg.weight_decay);
        }

        // --- end-of-epoch recording for every pool member (trained or not)
        for (const detail::PoolMember& member : pool) {
            const Example& e = member.example;
            CurvePoint point;
            point.epoch = static_cast<std::uint32_t>(epoch);
            point.loss = static_cast<float>(example_loss(model, e));
            if (cfg.record_flags) {
                const std::vector<double> probs = forward(model, e.features);
                const auto argmax = static_cast<int>(
                    std::max_element(probs.begin(), probs.end()) - probs.begin());
                point.correct = argmax == e.label;
                point.label_confidence =
                    static_cast<float>(probs[static_cast<std::size_t>(e.label)]);
            }
            store.append_point(e.id, point, member.trained);
            history[index_of.at(e.id)].push_back(point.loss);
        }
        if (eval_set) result.eval_accuracy.push_back(dataset_accuracy(model, *eval_set));
    }

    // --- reference set from the train-half probe curves (full trajectories)
    for (std::size_t p = 0; p < ref_probe_pool.size(); ++p) {
        const std::size_t i = ref_probe_pool[p];
        result.reference.add(history[i], ref_probe_category[p], pool[i].example.id);
    }
    result.model = std::move(model);
    result.store = std::move(store);
    return result;
}

} // namespace mapd
