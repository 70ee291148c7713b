#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mapd/dataset.hpp"
#include "mapd/error.hpp"
#include "mapd/rng.hpp"

namespace mapd {

/// Minority-group scenario: one extra coordinate carries the class sign for
/// the majority group and the flipped sign for the minority group, a
/// desk-scale analogue of background/foreground spurious correlations.
struct SpuriousSpec {
    double minority_fraction = 0.05;
    double magnitude = 2.0;
    double noise_std = 0.1;
};

struct SyntheticConfig {
    int num_classes = 2;
    std::size_t dim = 10;
    double std_dev = 0.5;
    std::size_t examples_per_class = 1000;
    std::uint64_t seed = 1;
    double mean_scale = 1.0;
    std::vector<std::vector<double>> means; // empty => derived from mean_scale
    std::optional<SpuriousSpec> spurious;
    double ood_shift = 3.0; // forwarded to ood probe generation

    void validate() const {
        if (num_classes < 2) throw Error(ErrorCode::precondition, "num_classes must be >= 2");
        if (dim < 1) throw Error(ErrorCode::precondition, "dim must be >= 1");
        if (!(std_dev > 0.0)) throw Error(ErrorCode::precondition, "std_dev must be positive");
        if (examples_per_class < 1)
            throw Error(ErrorCode::precondition, "examples_per_class must be >= 1");
        if (!means.empty()) {
            if (means.size() != static_cast<std::size_t>(num_classes))
                throw Error(ErrorCode::precondition, "means must have one vector per class");
            for (const auto& m : means)
                if (m.size() != dim)
                    throw Error(ErrorCode::precondition, "mean vector dimension mismatch");
        }
        if (spurious) {
            if (num_classes != 2)
                throw Error(ErrorCode::precondition, "spurious feature requires two classes");
            if (spurious->minority_fraction < 0.0 || spurious->minority_fraction > 1.0)
                throw Error(ErrorCode::precondition, "minority_fraction must lie in [0,1]");
        }
    }
};

inline std::vector<std::vector<double>> class_means(const SyntheticConfig& cfg) {
    if (!cfg.means.empty()) return cfg.means;
    std::vector<std::vector<double>> means(cfg.num_classes, std::vector<double>(cfg.dim, 0.0));
    if (cfg.num_classes == 2) {
        // (-s, ..., -s) vs (+s, ..., +s)
        for (std::size_t d = 0; d < cfg.dim; ++d) {
            means[0][d] = -cfg.mean_scale;
            means[1][d] = cfg.mean_scale;
        }
    } else {
        for (int c = 0; c < cfg.num_classes; ++c)
            means[c][static_cast<std::size_t>(c) % cfg.dim] += 2.0 * cfg.mean_scale;
    }
    return means;
}

/// Deterministic Gaussian-mixture dataset. Ids are assigned class-major,
/// 0..N-1. With a spurious spec the feature dimension grows by one and each
/// example's true_metadata records its group.
inline Dataset generate(const SyntheticConfig& cfg) {
    cfg.validate();
    const auto means = class_means(cfg);
    Dataset ds;
    ds.num_classes = cfg.num_classes;
    ds.dim = cfg.dim + (cfg.spurious ? 1 : 0);
    Rng rng(derive_seed(cfg.seed, "data/generate"));

    ExampleId next_id = 0;
    for (int c = 0; c < cfg.num_classes; ++c) {
        // Minority membership: a seeded subset of fixed size per class.
        std::set<std::size_t> minority_rows;
        if (cfg.spurious) {
            const auto m = static_cast<std::size_t>(
                std::llround(cfg.spurious->minority_fraction *
                             static_cast<double>(cfg.examples_per_class)));
            Rng pick(derive_seed(cfg.seed, "data/minority/" + std::to_string(c)));
            std::vector<std::size_t> rows(cfg.examples_per_class);
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t j = i + pick.uniform_int(rows.size() - i);
                std::swap(rows[i], rows[j]);
                minority_rows.insert(rows[i]);
            }
        }
        for (std::size_t i = 0; i < cfg.examples_per_class; ++i) {
            Example e;
            e.id = next_id++;
            e.label = c;
            e.features.resize(ds.dim);
            for (std::size_t d = 0; d < cfg.dim; ++d)
                e.features[d] = means[c][d] + cfg.std_dev * rng.normal();
            if (cfg.spurious) {
                const bool minority = minority_rows.count(i) != 0;
                const double class_sign = c == 1 ? 1.0 : -1.0;
                const double sign = minority ? -class_sign : class_sign;
                e.features[cfg.dim] =
                    sign * cfg.spurious->magnitude + cfg.spurious->noise_std * rng.normal();
                e.true_metadata = minority ? "minority" : "majority";
            }
            ds.examples.push_back(std::move(e));
        }
    }
    return ds;
}

/// Mixture with two feature scales inside the unit box: a handful of strong
/// "pattern" coordinates carry class identity (even-weight sign codes, minimum
/// Hamming distance 2) while `fine_dims` weak coordinates are vulnerable to
/// small perturbations. Useful when mild corruptions must stay observable
/// without destroying class structure.
inline SyntheticConfig two_scale_config(int num_classes, std::size_t fine_dims,
                                        double pattern_amp, double fine_amp, double std_dev,
                                        std::size_t per_class, std::uint64_t seed) {
    if (num_classes < 2)
        throw Error(ErrorCode::precondition, "num_classes must be >= 2");
    std::size_t bits = 1;
    while ((std::size_t{1} << bits) < static_cast<std::size_t>(num_classes)) ++bits;
    const std::size_t pattern_dims = bits + 1; // +1 parity bit

    SyntheticConfig cfg;
    cfg.num_classes = num_classes;
    cfg.dim = pattern_dims + fine_dims;
    cfg.std_dev = std_dev;
    cfg.examples_per_class = per_class;
    cfg.seed = seed;
    cfg.means.assign(num_classes, std::vector<double>(cfg.dim, 0.5));
    const unsigned fine_rows[8] = {1, 2, 4, 8, 3, 5, 6, 9};
    for (int c = 0; c < num_classes; ++c) {
        const unsigned code = (static_cast<unsigned>(c) << 1) |
                              static_cast<unsigned>(__builtin_parity(static_cast<unsigned>(c)));
        for (std::size_t j = 0; j < pattern_dims; ++j)
            cfg.means[c][j] += ((code >> j) & 1 ? -pattern_amp : pattern_amp);
        for (std::size_t j = 0; j < fine_dims; ++j)
            cfg.means[c][pattern_dims + j] +=
                (__builtin_parity(fine_rows[c % 8] & (j + 1)) ? -fine_amp : fine_amp);
    }
    return cfg;
}

struct SplitDataset {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// One generate() call split per class into train/val/test so ids stay
/// globally unique across the splits.
inline SplitDataset generate_split(SyntheticConfig cfg, std::size_t train_per_class,
                                   std::size_t val_per_class, std::size_t test_per_class) {
    cfg.examples_per_class = train_per_class + val_per_class + test_per_class;
    const Dataset full = generate(cfg);
    SplitDataset out;
    for (Dataset* part : {&out.train, &out.val, &out.test}) {
        part->num_classes = full.num_classes;
        part->dim = full.dim;
    }
    for (int c = 0; c < cfg.num_classes; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * cfg.examples_per_class;
        for (std::size_t i = 0; i < cfg.examples_per_class; ++i) {
            const Example& e = full.examples[base + i];
            if (i < train_per_class)
                out.train.examples.push_back(e);
            else if (i < train_per_class + val_per_class)
                out.val.examples.push_back(e);
            else
                out.test.examples.push_back(e);
        }
    }
    return out;
}

/// Replaces each label with a uniform draw from [0, C) with probability
/// `rate`. Returns the ids whose effective label actually changed; those also
/// get true_metadata = random_labels for auditing.
inline std::vector<ExampleId> plant_label_noise(Dataset& ds, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0)
        throw Error(ErrorCode::precondition, "noise rate must lie in [0,1]");
    Rng rng(derive_seed(seed, "noise/plant"));
    std::vector<ExampleId> changed;
    for (Example& e : ds.examples) {
        if (rng.uniform() >= rate) continue;
        const int new_label =
            static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(ds.num_classes)));
        if (new_label != e.label) {
            e.label = new_label;
            e.true_metadata = categories::random_labels;
            changed.push_back(e.id);
        }
    }
    return changed;
}

} // namespace mapd
