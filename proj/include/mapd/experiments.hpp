#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mapd/probe_suite.hpp"
#include "mapd/synthetic.hpp"
#include "mapd/tasks.hpp"
#include "mapd/train.hpp"

namespace mapd {

// ---------------------------------------------------------------------------
// Shared scaffolding: a noisy train split plus the two-category probe suite
// (clean random sample vs random labels) used for detection and correction.
// ---------------------------------------------------------------------------

struct NoisyTask {
    Dataset train; // with planted noise
    Dataset test;  // clean
    ProbeSuite suite;
    std::set<ExampleId> planted; // ids whose effective label changed
};

inline NoisyTask make_noisy_task(const SyntheticConfig& data_cfg, double noise_rate,
                                 std::size_t test_per_class, std::size_t probe_n,
                                 std::size_t probe_test_n = 0) {
    SplitDataset split = generate_split(data_cfg, data_cfg.examples_per_class, 0, test_per_class);
    NoisyTask task;
    task.test = std::move(split.test);
    task.train = std::move(split.train);
    const auto changed = plant_label_noise(task.train, noise_rate, data_cfg.seed);
    task.planted.insert(changed.begin(), changed.end());

    std::vector<ProbeSpec> specs(2);
    specs[0].category = categories::clean_random_sample;
    specs[0].generator = GeneratorKind::clean_random_sample;
    specs[1].category = categories::random_labels;
    specs[1].generator = GeneratorKind::random_labels;
    for (ProbeSpec& s : specs) {
        s.train_n = probe_n;
        s.test_n = probe_test_n;
        s.include_in_training = true;
    }
    task.suite = assemble_suite(task.train, specs, derive_seed(data_cfg.seed, "suite"));
    return task;
}

// ---------------------------------------------------------------------------
// Label-noise detection (posterior quality, no intervention).
// ---------------------------------------------------------------------------

struct NoiseDetectionResult {
    std::map<ExampleId, double> noisy_probability; // per train-set example
    std::set<ExampleId> planted;
};

/// Trains once on a noisy synthetic task and scores every train example's
/// final-epoch trajectory against the clean/random-label reference.
inline NoiseDetectionResult run_noise_detection_experiment(const SyntheticConfig& data_cfg,
                                                           TrainConfig train_cfg,
                                                           double noise_rate,
                                                           std::size_t probe_n) {
    NoisyTask task = make_noisy_task(data_cfg, noise_rate, 0, probe_n);
    train_cfg.correction = CorrectionPolicy::none;
    train_cfg.selection = SelectionPolicy::all;
    const TrainResult run = train_and_record(task.train, task.suite, train_cfg);

    NoiseDetectionResult out;
    out.planted = std::move(task.planted);
    const std::size_t t = run.store.epoch_count();
    for (const Example& e : task.train.examples) {
        const std::vector<float> query = run.store.loss_prefix(e.id, t);
        const MetadataPosterior post = posterior(query, run.reference, train_cfg.knn_k, t);
        out.noisy_probability[e.id] =
            1.0 - two_class_clean_probability(post, train_cfg.clean_category,
                                              train_cfg.noisy_category);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label-noise correction.
// ---------------------------------------------------------------------------

struct NoiseCorrectionResult {
    double accuracy_uncorrected = 0.0;
    double accuracy_corrected = 0.0;
    std::optional<double> accuracy_binary;
};

/// Plants uniform label noise, then trains with and without online correction
/// (optionally also the binary-correction ablation) and reports final test
/// accuracy on the clean split. All runs share data, suite and seeds; only the
/// correction policy differs.
inline NoiseCorrectionResult run_noise_correction_experiment(const SyntheticConfig& data_cfg,
                                                             const TrainConfig& train_cfg,
                                                             double noise_rate,
                                                             std::size_t test_per_class,
                                                             std::size_t probe_n,
                                                             bool include_binary = false) {
    NoisyTask task = make_noisy_task(data_cfg, noise_rate, test_per_class, probe_n);
    auto run_with = [&](CorrectionPolicy policy) {
        TrainConfig cfg = train_cfg;
        cfg.correction = policy;
        cfg.selection = SelectionPolicy::all;
        const TrainResult run = train_and_record(task.train, task.suite, cfg);
        return dataset_accuracy(run.model, task.test);
    };
    NoiseCorrectionResult out;
    out.accuracy_uncorrected = run_with(CorrectionPolicy::none);
    out.accuracy_corrected = run_with(CorrectionPolicy::probabilistic);
    if (include_binary) out.accuracy_binary = run_with(CorrectionPolicy::binary);
    return out;
}

// ---------------------------------------------------------------------------
// Prioritized training.
// ---------------------------------------------------------------------------

struct PrioritizedTrace {
    SelectionPolicy policy = SelectionPolicy::uniform;
    std::vector<double> accuracy_per_epoch;
    std::size_t steps_per_epoch = 0;
};

struct PrioritizedResult {
    PrioritizedTrace uniform;
    PrioritizedTrace high_loss;
    PrioritizedTrace mapd;
};

/// Online batch selection on a noisy task: train on select_n of each
/// batch_size-sized minibatch under three policies and trace clean-test
/// accuracy per epoch.
inline PrioritizedResult run_prioritized_experiment(const SyntheticConfig& data_cfg,
                                                    const TrainConfig& train_cfg,
                                                    double noise_rate,
                                                    std::size_t test_per_class,
                                                    std::size_t probe_n) {
    NoisyTask task = make_noisy_task(data_cfg, noise_rate, test_per_class, probe_n);
    auto run_with = [&](SelectionPolicy policy) {
        TrainConfig cfg = train_cfg;
        cfg.selection = policy;
        cfg.correction = CorrectionPolicy::none;
        const TrainResult run = train_and_record(task.train, task.suite, cfg, &task.test);
        PrioritizedTrace trace;
        trace.policy = policy;
        trace.accuracy_per_epoch = run.eval_accuracy;
        trace.steps_per_epoch = run.steps_per_epoch;
        return trace;
    };
    PrioritizedResult out;
    out.uniform = run_with(SelectionPolicy::uniform);
    out.high_loss = run_with(SelectionPolicy::high_loss);
    out.mapd = run_with(SelectionPolicy::mapd);
    return out;
}

// ---------------------------------------------------------------------------
// Minority-group detection.
// ---------------------------------------------------------------------------

struct MinorityDetectionResult {
    std::map<ExampleId, double> minority_probability; // per train-set example
    std::set<ExampleId> minority_truth;                // planted minority train ids
};

/// Spurious-correlation scenario: group probes come from a held-out validation
/// split and are never trained on; train examples are scored against their
/// evaluation-only trajectories.
inline MinorityDetectionResult run_minority_detection_experiment(const SyntheticConfig& data_cfg,
                                                                 TrainConfig train_cfg,
                                                                 std::size_t val_per_class,
                                                                 std::size_t probes_per_group) {
    if (!data_cfg.spurious)
        throw Error(ErrorCode::precondition, "minority detection needs a spurious-feature spec");
    SplitDataset split =
        generate_split(data_cfg, data_cfg.examples_per_class, val_per_class, 0);

    // Balanced group probes sampled from the validation split.
    std::vector<const Example*> val_minority, val_majority;
    for (const Example& e : split.val.examples)
        (e.true_metadata == std::optional<ProbeCategory>("minority") ? val_minority
                                                                     : val_majority)
            .push_back(&e);
    if (val_minority.size() < probes_per_group || val_majority.size() < probes_per_group)
        throw Error(ErrorCode::infeasible, "validation split too small for requested probes");

    ProbeSuite suite;
    Rng rng(derive_seed(data_cfg.seed, "suite/minority"));
    for (const auto& [name, members] :
         {std::pair{std::string("majority"), &val_majority},
          std::pair{std::string("minority"), &val_minority}}) {
        auto picks = detail::sample_without_replacement(members->size(), probes_per_group, rng);
        ProbeSuite::Category cat;
        cat.name = name;
        cat.include_in_training = false;
        for (std::size_t p : picks) cat.train.push_back(*(*members)[p]);
        suite.entries.push_back(std::move(cat));
    }

    train_cfg.correction = CorrectionPolicy::none;
    train_cfg.selection = SelectionPolicy::all;
    const TrainResult run = train_and_record(split.train, suite, train_cfg);

    MinorityDetectionResult out;
    const auto scores = detect_minority(run.store, run.reference, train_cfg.knn_k,
                                        run.store.epoch_count());
    for (const Example& e : split.train.examples) {
        out.minority_probability[e.id] = scores.at(e.id);
        if (e.true_metadata == std::optional<ProbeCategory>("minority"))
            out.minority_truth.insert(e.id);
    }
    return out;
}

} // namespace mapd
