#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "mapd/model.hpp"
#include "mapd/trajectory_knn.hpp"

namespace oracles {

struct BruteNeighbor {
    double distance;
    std::string category;
    mapd::ExampleId probe_id;
};

/// Exhaustive scan: every distance computed and fully sorted.
inline std::vector<BruteNeighbor> brute_force_neighbors(std::span<const float> query,
                                                        const mapd::ProbeTrajectoryDataset& ref,
                                                        std::size_t k, std::size_t t) {
    std::vector<BruteNeighbor> all;
    for (const mapd::ProbeEntry& e : ref.entries()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            const double d = static_cast<double>(query[i]) - static_cast<double>(e.curve[i]);
            sum += d * d;
        }
        all.push_back({std::sqrt(sum), e.category, e.probe_id});
    }
    std::sort(all.begin(), all.end(), [](const BruteNeighbor& a, const BruteNeighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.probe_id < b.probe_id;
    });
    all.resize(k);
    return all;
}

/// Neighbor counts per category from the exhaustive scan (posterior numerators).
inline std::map<std::string, int> brute_force_counts(std::span<const float> query,
                                                     const mapd::ProbeTrajectoryDataset& ref,
                                                     std::size_t k, std::size_t t) {
    std::map<std::string, int> counts;
    for (const BruteNeighbor& n : brute_force_neighbors(query, ref, k, t)) ++counts[n.category];
    return counts;
}

/// Central finite differences of the mean batch loss, parameter by parameter.
inline mapd::ModelGradient finite_difference_gradient(const mapd::ModelState& model,
                                                      std::span<const mapd::BatchItem> batch,
                                                      double h = 1e-5) {
    auto mean_loss = [&](const mapd::ModelState& m) {
        double sum = 0.0;
        for (const mapd::BatchItem& item : batch) {
            if (item.soft_target)
                sum += mapd::soft_example_loss(m, item.example->features, *item.soft_target);
            else
                sum += mapd::example_loss(m, *item.example);
        }
        return sum / static_cast<double>(batch.size());
    };
    mapd::ModelGradient grad = mapd::zero_gradient(model);
    mapd::ModelState probe = model;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (std::size_t i = 0; i < model.layers[l].w.size(); ++i) {
            const double saved = probe.layers[l].w[i];
            probe.layers[l].w[i] = saved + h;
            const double up = mean_loss(probe);
            probe.layers[l].w[i] = saved - h;
            const double down = mean_loss(probe);
            probe.layers[l].w[i] = saved;
            grad[l].w[i] = (up - down) / (2.0 * h);
        }
        for (std::size_t i = 0; i < model.layers[l].b.size(); ++i) {
            const double saved = probe.layers[l].b[i];
            probe.layers[l].b[i] = saved + h;
            const double up = mean_loss(probe);
            probe.layers[l].b[i] = saved - h;
            const double down = mean_loss(probe);
            probe.layers[l].b[i] = saved;
            grad[l].b[i] = (up - down) / (2.0 * h);
        }
    }
    return grad;
}

inline double max_relative_gradient_error(const mapd::ModelGradient& analytic,
                                          const mapd::ModelGradient& reference) {
    double worst = 0.0;
    for (std::size_t l = 0; l < analytic.size(); ++l) {
        auto check = [&](const std::vector<double>& a, const std::vector<double>& r) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double denom = std::max({1e-6, std::abs(a[i]), std::abs(r[i])});
                worst = std::max(worst, std::abs(a[i] - r[i]) / denom);
            }
        };
        check(analytic[l].w, reference[l].w);
        check(analytic[l].b, reference[l].b);
    }
    return worst;
}

/// AUROC by brute-force pairwise comparison (rank-sum with 0.5 tie credit).
inline double auroc(const std::map<mapd::ExampleId, double>& scores,
                    const std::set<mapd::ExampleId>& positives) {
    std::vector<double> pos, neg;
    for (const auto& [id, s] : scores)
        (positives.count(id) ? pos : neg).push_back(s);
    if (pos.empty() || neg.empty()) return 0.5;
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) {
            if (p > n)
                wins += 1.0;
            else if (p == n)
                wins += 0.5;
        }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Nearest-class-mean classifier accuracy (oracle for separable mixtures).
inline double nearest_mean_accuracy(const mapd::Dataset& ds) {
    std::vector<std::vector<double>> mean(ds.num_classes, std::vector<double>(ds.dim, 0.0));
    std::vector<std::size_t> count(ds.num_classes, 0);
    for (const mapd::Example& e : ds.examples) {
        for (std::size_t i = 0; i < ds.dim; ++i) mean[e.label][i] += e.features[i];
        ++count[e.label];
    }
    for (int c = 0; c < ds.num_classes; ++c)
        for (double& v : mean[c]) v /= static_cast<double>(count[c]);
    std::size_t hits = 0;
    for (const mapd::Example& e : ds.examples) {
        int best = 0;
        double best_d = 0.0;
        for (int c = 0; c < ds.num_classes; ++c) {
            double d = 0.0;
            for (std::size_t i = 0; i < ds.dim; ++i) {
                const double diff = e.features[i] - mean[c][i];
                d += diff * diff;
            }
            if (c == 0 || d < best_d) {
                best = c;
                best_d = d;
            }
        }
        if (best == e.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

} // namespace oracles
