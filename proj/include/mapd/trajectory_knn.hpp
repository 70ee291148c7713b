#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mapd/curve_store.hpp"
#include "mapd/error.hpp"

namespace mapd {

using ProbeCategory = std::string;

namespace categories {
inline constexpr const char* typical = "typical";
inline constexpr const char* atypical = "atypical";
inline constexpr const char* random_labels = "random_labels";
inline constexpr const char* random_inputs_outputs = "random_inputs_outputs";
inline constexpr const char* corrupted = "corrupted";
inline constexpr const char* ood = "ood";
inline constexpr const char* clean_random_sample = "clean_random_sample";
} // namespace categories

struct ProbeEntry {
    std::vector<float> curve;
    ProbeCategory category;
    ExampleId probe_id = 0;
};

/// The k-NN reference set: probe loss trajectories with known categories.
/// Immutable after construction; queries are read-only and parallelizable.
class ProbeTrajectoryDataset {
  public:
    void add(std::vector<float> curve, ProbeCategory category, ExampleId probe_id) {
        if (curve.empty())
            throw Error(ErrorCode::precondition, "probe curve must be non-empty");
        if (category.find_first_of(",\n\r") != std::string::npos)
            throw Error(ErrorCode::precondition, "category name may not contain ',' or newlines");
        if (!entries_.empty() && curve.size() != epoch_len_)
            throw Error(ErrorCode::precondition,
                        "probe curve length " + std::to_string(curve.size()) +
                            " differs from reference length " + std::to_string(epoch_len_));
        if (!seen_ids_.insert(probe_id).second)
            throw Error(ErrorCode::precondition,
                        "duplicate probe id " + std::to_string(probe_id));
        epoch_len_ = curve.size();
        category_set_.insert(category);
        entries_.push_back(ProbeEntry{std::move(curve), std::move(category), probe_id});
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t epoch_len() const { return epoch_len_; }
    const std::vector<ProbeEntry>& entries() const { return entries_; }

    /// Distinct categories, sorted.
    std::vector<ProbeCategory> category_names() const {
        return {category_set_.begin(), category_set_.end()};
    }
    bool has_category(const ProbeCategory& c) const { return category_set_.count(c) != 0; }

  private:
    std::vector<ProbeEntry> entries_;
    std::set<ProbeCategory> category_set_;
    std::set<ExampleId> seen_ids_;
    std::size_t epoch_len_ = 0;
};

/// p(m | s) as counts over the k nearest neighbors; every probability is an
/// exact multiple of 1/k and the counts always sum to k.
struct MetadataPosterior {
    std::map<ProbeCategory, int> counts;
    int k = 0;

    double prob(const ProbeCategory& category) const {
        auto it = counts.find(category);
        return it == counts.end() ? 0.0
                                  : static_cast<double>(it->second) / static_cast<double>(k);
    }
};

struct Neighbor {
    double distance = 0.0;
    ProbeCategory category;
    ExampleId probe_id = 0;
};

/// Euclidean distance between two equal-length loss trajectories.
inline double trajectory_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size() || a.empty())
        throw Error(ErrorCode::precondition, "trajectories must have equal nonzero length");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return std::sqrt(sum);
}

namespace detail {

inline void check_query(std::span<const float> query, const ProbeTrajectoryDataset& ref,
                        std::size_t k, std::size_t t) {
    if (ref.empty()) throw Error(ErrorCode::precondition, "empty reference dataset");
    if (k == 0 || k > ref.size())
        throw Error(ErrorCode::precondition, "k=" + std::to_string(k) +
                                                 " out of range for reference of size " +
                                                 std::to_string(ref.size()));
    if (t == 0 || t > ref.epoch_len())
        throw Error(ErrorCode::precondition, "prefix length t=" + std::to_string(t) +
                                                 " out of range for reference length " +
                                                 std::to_string(ref.epoch_len()));
    if (t > query.size())
        throw Error(ErrorCode::precondition,
                    "prefix length t=" + std::to_string(t) + " exceeds query length " +
                        std::to_string(query.size()));
}

// Squared distance over prefixes; same accumulation order everywhere so the
// linear scan and any future index agree bit-for-bit.
inline double prefix_distance_sq(std::span<const float> a, std::span<const float> b,
                                 std::size_t t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum;
}

} // namespace detail

/// The k nearest reference trajectories to `query`, compared on prefixes of
/// length t, sorted ascending by (distance, probe_id).
inline std::vector<Neighbor> nearest_neighbors(std::span<const float> query,
                                               const ProbeTrajectoryDataset& ref,
                                               std::size_t k, std::size_t t) {
    detail::check_query(query, ref, k, t);
    std::vector<Neighbor> all;
    all.reserve(ref.size());
    for (const ProbeEntry& e : ref.entries())
        all.push_back(Neighbor{std::sqrt(detail::prefix_distance_sq(query, e.curve, t)),
                               e.category, e.probe_id});
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.probe_id < b.probe_id;
    });
    all.resize(k);
    return all;
}

inline MetadataPosterior posterior(std::span<const float> query,
                                   const ProbeTrajectoryDataset& ref, std::size_t k,
                                   std::size_t t) {
    MetadataPosterior post;
    post.k = static_cast<int>(k);
    for (const Neighbor& n : nearest_neighbors(query, ref, k, t)) ++post.counts[n.category];
    return post;
}

/// Argmax category; ties go to the lexicographically smallest name.
inline ProbeCategory assign(const MetadataPosterior& post) {
    if (post.counts.empty())
        throw Error(ErrorCode::precondition, "empty posterior");
    const std::pair<const ProbeCategory, int>* best = nullptr;
    for (const auto& entry : post.counts)
        if (!best || entry.second > best->second) best = &entry;
    return best->first;
}

struct ClassifyResult {
    std::map<ExampleId, MetadataPosterior> posteriors;
    std::vector<std::pair<ExampleId, std::string>> skipped; // id -> reason
};

/// Classifies every curve in the store. Per-example failures (curves shorter
/// than t) are reported in `skipped` rather than aborting the batch. The result
/// is independent of `num_threads`.
inline ClassifyResult classify_all(const CurveStore& store, const ProbeTrajectoryDataset& ref,
                                   std::size_t k, std::size_t t, std::size_t num_threads = 0) {
    if (!store.empty()) {
        // Validate global preconditions once, against a dummy query of length t.
        std::vector<float> probe_shape(t, 0.0f);
        detail::check_query(probe_shape, ref, k, t);
    }
    const std::vector<ExampleId> ids = store.ids();
    if (num_threads == 0) {
        num_threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        num_threads = std::min(num_threads, std::size_t{8});
    }
    num_threads = std::min<std::size_t>(num_threads, std::max<std::size_t>(ids.size(), 1));

    struct Shard {
        std::vector<std::pair<ExampleId, MetadataPosterior>> ok;
        std::vector<std::pair<ExampleId, std::string>> skipped;
    };
    auto run_range = [&](std::size_t begin, std::size_t end) {
        Shard shard;
        for (std::size_t i = begin; i < end; ++i) {
            const ExampleId id = ids[i];
            const LearningCurve& c = store.curve(id);
            if (c.points.size() < t) {
                shard.skipped.emplace_back(id, "curve has " + std::to_string(c.points.size()) +
                                                   " points, need " + std::to_string(t));
                continue;
            }
            std::vector<float> query = store.loss_prefix(id, t);
            shard.ok.emplace_back(id, posterior(query, ref, k, t));
        }
        return shard;
    };

    ClassifyResult result;
    if (num_threads <= 1) {
        Shard shard = run_range(0, ids.size());
        result.posteriors.insert(shard.ok.begin(), shard.ok.end());
        result.skipped = std::move(shard.skipped);
        return result;
    }
    std::vector<std::future<Shard>> futures;
    const std::size_t chunk = (ids.size() + num_threads - 1) / num_threads;
    for (std::size_t begin = 0; begin < ids.size(); begin += chunk) {
        const std::size_t end = std::min(begin + chunk, ids.size());
        futures.push_back(std::async(std::launch::async, run_range, begin, end));
    }
    for (auto& f : futures) {
        Shard shard = f.get();
        result.posteriors.insert(shard.ok.begin(), shard.ok.end());
        result.skipped.insert(result.skipped.end(), shard.skipped.begin(), shard.skipped.end());
    }
    return result;
}

/// Square matrix of true-category rows vs assigned-category columns.
class ConfusionMatrix {
  public:
    ConfusionMatrix(std::vector<ProbeCategory> names, std::size_t n)
        : names_(std::move(names)), counts_(n, std::vector<long>(n, 0)) {}

    const std::vector<ProbeCategory>& names() const { return names_; }
    long at(std::size_t true_row, std::size_t assigned_col) const {
        return counts_[true_row][assigned_col];
    }
    long& at(std::size_t true_row, std::size_t assigned_col) {
        return counts_[true_row][assigned_col];
    }

    long total() const {
        long sum = 0;
        for (const auto& row : counts_)
            for (long v : row) sum += v;
        return sum;
    }
    long trace() const {
        long sum = 0;
        for (std::size_t i = 0; i < counts_.size(); ++i) sum += counts_[i][i];
        return sum;
    }
    double accuracy() const {
        const long n = total();
        return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
    }
    long row_sum(std::size_t row) const {
        long sum = 0;
        for (long v : counts_[row]) sum += v;
        return sum;
    }

  private:
    std::vector<ProbeCategory> names_;
    std::vector<std::vector<long>> counts_;
};

inline ConfusionMatrix confusion_matrix(const std::map<ExampleId, MetadataPosterior>& posteriors,
                                        const std::map<ExampleId, ProbeCategory>& truth) {
    if (posteriors.size() != truth.size())
        throw Error(ErrorCode::precondition, "posterior and truth key sets differ in size");
    std::set<ProbeCategory> cats;
    for (const auto& [id, category] : truth) {
        if (!posteriors.count(id))
            throw Error(ErrorCode::precondition,
                        "truth id " + std::to_string(id) + " missing from posteriors");
        cats.insert(category);
    }
    std::map<ExampleId, ProbeCategory> assigned;
    for (const auto& [id, post] : posteriors) {
        assigned[id] = assign(post);
        cats.insert(assigned[id]);
    }
    std::vector<ProbeCategory> names(cats.begin(), cats.end());
    auto index_of = [&](const ProbeCategory& c) {
        return static_cast<std::size_t>(
            std::lower_bound(names.begin(), names.end(), c) - names.begin());
    };
    ConfusionMatrix cm(names, names.size());
    for (const auto& [id, category] : truth)
        ++cm.at(index_of(category), index_of(assigned[id]));
    return cm;
}

// ---------------------------------------------------------------------------
// Reference-set serialization: the curve-store text format plus a category
// column, header probe_id,category,epoch,loss, sorted by (probe_id, epoch).
// ---------------------------------------------------------------------------

inline std::string to_csv(const ProbeTrajectoryDataset& ref) {
    std::vector<const ProbeEntry*> sorted;
    sorted.reserve(ref.size());
    for (const ProbeEntry& e : ref.entries()) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const ProbeEntry* a, const ProbeEntry* b) { return a->probe_id < b->probe_id; });
    std::string out = "probe_id,category,epoch,loss\n";
    for (const ProbeEntry* e : sorted) {
        for (std::size_t epoch = 0; epoch < e->curve.size(); ++epoch) {
            detail::format_u64(out, e->probe_id);
            out += ',';
            out += e->category;
            out += ',';
            detail::format_u64(out, epoch);
            out += ',';
            detail::format_float(out, e->curve[epoch]);
            out += '\n';
        }
    }
    return out;
}

inline ProbeTrajectoryDataset trajectories_from_csv(std::string_view text) {
    std::size_t pos = 0, line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;
        ++line_no;
        return true;
    };
    std::string_view header;
    if (!next_line(header) || header != "probe_id,category,epoch,loss")
        throw Error(ErrorCode::parse, "bad reference header (want probe_id,category,epoch,loss)");

    ProbeTrajectoryDataset ref;
    bool open = false;
    ExampleId cur_id = 0;
    ProbeCategory cur_category;
    std::vector<float> cur_curve;
    auto flush = [&]() {
        if (open) {
            try {
                ref.add(std::move(cur_curve), cur_category, cur_id);
            } catch (const Error& e) {
                throw Error(ErrorCode::parse, std::string("reference file: ") + e.what());
            }
        }
        cur_curve.clear();
        open = false;
    };
    std::string_view line;
    while (next_line(line)) {
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (fields.size() != 4)
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected 4 fields");
        const auto id = detail::parse_number<ExampleId>(fields[0], line_no, "probe_id");
        const ProbeCategory category(fields[1]);
        const auto epoch = detail::parse_number<std::uint32_t>(fields[2], line_no, "epoch");
        const float loss = detail::parse_number<float>(fields[3], line_no, "loss");
        if (open && id != cur_id) {
            if (id < cur_id)
                throw Error(ErrorCode::parse,
                            "line " + std::to_string(line_no) + ": rows not sorted by probe_id");
            flush();
        }
        if (!open) {
            open = true;
            cur_id = id;
            cur_category = category;
        } else if (category != cur_category) {
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) +
                                              ": category changes within probe " +
                                              std::to_string(id));
        }
        if (epoch != cur_curve.size())
            throw Error(ErrorCode::parse,
                        "line " + std::to_string(line_no) + ": non-contiguous epoch for probe " +
                            std::to_string(id));
        cur_curve.push_back(loss);
    }
    flush();
    return ref;
}

inline void save_trajectories(const ProbeTrajectoryDataset& ref, const std::string& path) {
    write_file(path, to_csv(ref));
}

inline ProbeTrajectoryDataset load_trajectories(const std::string& path) {
    return trajectories_from_csv(read_file(path));
}

} // namespace mapd
