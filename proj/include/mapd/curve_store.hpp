#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mapd/error.hpp"

namespace mapd {

using ExampleId = std::uint64_t;

/// One end-of-epoch measurement for one example. Losses are kept at float32
/// precision: that is what both on-disk formats store, so keeping the same
/// width in memory makes round trips bit-exact by construction.
struct CurvePoint {
    std::uint32_t epoch = 0;
    float loss = 0.0f;
    std::optional<bool> correct;
    std::optional<float> label_confidence;
};

struct LearningCurve {
    ExampleId example_id = 0;
    std::vector<CurvePoint> points;
    bool trained = true; // false => evaluation-only, never in the optimization set

    std::size_t size() const { return points.size(); }
};

/// Per-example learning curves for one training run. Epochs within a curve are
/// always exactly 0..len-1; append_point enforces this. A single writer appends
/// at epoch boundaries; reads are const and safe to run concurrently.
class CurveStore {
  public:
    void append_point(ExampleId id, const CurvePoint& point, bool trained = true) {
        // Validate everything before touching any state, so a rejected append
        // leaves the store exactly as it was.
        if (!std::isfinite(point.loss) || point.loss < 0.0f)
            throw Error(ErrorCode::precondition, "loss must be finite and nonnegative");
        if (point.label_confidence &&
            (!(*point.label_confidence >= 0.0f) || !(*point.label_confidence <= 1.0f)))
            throw Error(ErrorCode::precondition, "label_confidence must lie in [0,1]");
        auto it = curves_.find(id);
        const std::size_t expected_epoch = it == curves_.end() ? 0 : it->second.points.size();
        if (point.epoch != expected_epoch)
            throw Error(ErrorCode::precondition,
                        "out-of-order epoch " + std::to_string(point.epoch) + " for id " +
                            std::to_string(id) + " (expected " +
                            std::to_string(expected_epoch) + ")");
        if (it != curves_.end() && it->second.trained != trained)
            throw Error(ErrorCode::precondition, "trained flag may not change mid-curve");
        if (has_correct_.has_value() &&
            (point.correct.has_value() != *has_correct_ ||
             point.label_confidence.has_value() != *has_confidence_))
            throw Error(ErrorCode::precondition,
                        "mixed optional-field presence within one store");

        if (it == curves_.end()) {
            it = curves_.try_emplace(id).first;
            it->second.example_id = id;
            it->second.trained = trained;
        }
        if (!has_correct_.has_value()) {
            has_correct_ = point.correct.has_value();
            has_confidence_ = point.label_confidence.has_value();
        }
        it->second.points.push_back(point);
        epoch_count_ = std::max<std::size_t>(epoch_count_, it->second.points.size());
    }

    bool contains(ExampleId id) const { return curves_.count(id) != 0; }
    std::size_t size() const { return curves_.size(); }
    bool empty() const { return curves_.empty(); }
    std::size_t epoch_count() const { return epoch_count_; }
    bool has_correct() const { return has_correct_.value_or(false); }
    bool has_confidence() const { return has_confidence_.value_or(false); }

    const LearningCurve& curve(ExampleId id) const {
        auto it = curves_.find(id);
        if (it == curves_.end())
            throw Error(ErrorCode::precondition, "unknown example id " + std::to_string(id));
        return it->second;
    }

    const std::map<ExampleId, LearningCurve>& curves() const { return curves_; }

    std::vector<ExampleId> ids() const {
        std::vector<ExampleId> out;
        out.reserve(curves_.size());
        for (const auto& [id, curve] : curves_) out.push_back(id);
        return out;
    }

    /// Losses of epochs 0..t-1 for one curve.
    std::vector<float> loss_prefix(ExampleId id, std::size_t t) const {
        const LearningCurve& c = curve(id);
        if (t == 0)
            throw Error(ErrorCode::precondition, "prefix length must be positive");
        if (t > c.points.size())
            throw Error(ErrorCode::precondition,
                        "prefix length " + std::to_string(t) + " exceeds curve length " +
                            std::to_string(c.points.size()));
        std::vector<float> out(t);
        for (std::size_t e = 0; e < t; ++e) out[e] = c.points[e].loss;
        return out;
    }

    /// Fraction of ids predicted correctly at any epoch <= t-1.
    double percent_first_learned(std::span<const ExampleId> ids, std::size_t t) const {
        auto distinct = canonical_ids(ids);
        if (distinct.empty())
            throw Error(ErrorCode::precondition, "empty id set");
        std::size_t learned = 0;
        for (ExampleId id : distinct) {
            const auto& pts = checked_correctness(id, t);
            for (std::size_t e = 0; e < t; ++e) {
                if (*pts[e].correct) {
                    ++learned;
                    break;
                }
            }
        }
        return static_cast<double>(learned) / static_cast<double>(distinct.size());
    }

    /// Fraction of ids correct from some epoch <= t-1 through the end of the
    /// recorded run, i.e. learned by t and never forgotten afterwards.
    double percent_consistently_learned(std::span<const ExampleId> ids, std::size_t t) const {
        auto distinct = canonical_ids(ids);
        if (distinct.empty())
            throw Error(ErrorCode::precondition, "empty id set");
        std::size_t consistent = 0;
        for (ExampleId id : distinct) {
            const auto& pts = checked_correctness(id, t);
            const std::size_t len = pts.size();
            std::size_t run_start = len; // first epoch of the trailing all-correct run
            for (std::size_t e = len; e-- > 0 && *pts[e].correct;) run_start = e;
            if (run_start + 1 <= t) ++consistent;
        }
        return static_cast<double>(consistent) / static_cast<double>(distinct.size());
    }

    /// Fraction of ids predicted correctly at exactly `epoch`.
    double accuracy_at(std::span<const ExampleId> ids, std::size_t epoch) const {
        auto distinct = canonical_ids(ids);
        if (distinct.empty())
            throw Error(ErrorCode::precondition, "empty id set");
        std::size_t hits = 0;
        for (ExampleId id : distinct) {
            const auto& pts = checked_correctness(id, epoch + 1);
            if (*pts[epoch].correct) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(distinct.size());
    }

    /// Epoch-wise mean loss over the id set, epochs 0..t-1.
    std::vector<double> mean_curve(std::span<const ExampleId> ids, std::size_t t) const {
        auto distinct = canonical_ids(ids);
        if (distinct.empty())
            throw Error(ErrorCode::precondition, "empty id set");
        std::vector<double> sum(t, 0.0);
        for (ExampleId id : distinct) {
            const LearningCurve& c = curve(id);
            if (t == 0 || t > c.points.size())
                throw Error(ErrorCode::precondition, "prefix length out of range");
            for (std::size_t e = 0; e < t; ++e) sum[e] += c.points[e].loss;
        }
        for (double& v : sum) v /= static_cast<double>(distinct.size());
        return sum;
    }

  private:
    // Sorted distinct ids: fixes the accumulation order so statistics are
    // permutation-invariant in the input.
    static std::vector<ExampleId> canonical_ids(std::span<const ExampleId> ids) {
        std::vector<ExampleId> out(ids.begin(), ids.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    const std::vector<CurvePoint>& checked_correctness(ExampleId id, std::size_t t) const {
        const LearningCurve& c = curve(id);
        if (!has_correct())
            throw Error(ErrorCode::precondition, "store has no correctness flags");
        if (t == 0 || t > c.points.size())
            throw Error(ErrorCode::precondition, "epoch range out of bounds for id " +
                                                     std::to_string(id));
        return c.points;
    }

    std::map<ExampleId, LearningCurve> curves_;
    std::size_t epoch_count_ = 0;
    std::optional<bool> has_correct_;
    std::optional<bool> has_confidence_;
};

// ---------------------------------------------------------------------------
// Persistence. Two interchangeable containers:
//   * delimiter-separated text, header example_id,epoch,loss[,correct]
//     [,label_confidence][,trained], rows sorted by (example_id, epoch);
//   * binary ("MAPD" magic, version byte, little-endian u64 ids, f32 losses).
// The trained column appears only when some curve is evaluation-only, so plain
// loss-trajectory files keep the minimal header.
// ---------------------------------------------------------------------------

namespace detail {

inline void format_float(std::string& out, float v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline void format_u64(std::string& out, std::uint64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
    T value{};
    auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": bad " +
                                          std::string(what) + " '" + std::string(field) + "'");
    return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline void append_le(std::string& out, const void* src, std::size_t n) {
    // Little-endian host assumed (static_assert below guards the build).
    out.append(static_cast<const char*>(src), n);
}

static_assert(std::endian::native == std::endian::little,
              "binary curve container assumes a little-endian host");

} // namespace detail

inline std::string to_csv(const CurveStore& store) {
    bool any_eval_only = false;
    for (const auto& [id, curve] : store.curves())
        if (!curve.trained) any_eval_only = true;

    std::string out = "example_id,epoch,loss";
    if (store.has_correct()) out += ",correct";
    if (store.has_confidence()) out += ",label_confidence";
    if (any_eval_only) out += ",trained";
    out += '\n';

    for (const auto& [id, curve] : store.curves()) {
        for (const CurvePoint& p : curve.points) {
            detail::format_u64(out, id);
            out += ',';
            detail::format_u64(out, p.epoch);
            out += ',';
            detail::format_float(out, p.loss);
            if (store.has_correct()) out += *p.correct ? ",1" : ",0";
            if (store.has_confidence()) {
                out += ',';
                detail::format_float(out, *p.label_confidence);
            }
            if (any_eval_only) out += curve.trained ? ",1" : ",0";
            out += '\n';
        }
    }
    return out;
}

inline CurveStore from_csv(std::string_view text) {
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
    if (!next_line(header))
        throw Error(ErrorCode::parse, "empty trajectory file (missing header)");
    auto cols = detail::split_fields(header);
    std::size_t idx = 0;
    auto expect = [&](std::string_view name) {
        if (idx >= cols.size() || cols[idx] != name)
            throw Error(ErrorCode::parse, "bad trajectory header '" + std::string(header) + "'");
        ++idx;
    };
    auto accept = [&](std::string_view name) {
        if (idx < cols.size() && cols[idx] == name) {
            ++idx;
            return true;
        }
        return false;
    };
    expect("example_id");
    expect("epoch");
    expect("loss");
    const bool has_correct = accept("correct");
    const bool has_conf = accept("label_confidence");
    const bool has_trained = accept("trained");
    if (idx != cols.size())
        throw Error(ErrorCode::parse, "bad trajectory header '" + std::string(header) + "'");

    CurveStore store;
    bool seen_any = false;
    ExampleId prev_id = 0;
    std::string_view line;
    while (next_line(line)) {
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (fields.size() != idx)
            throw Error(ErrorCode::parse,
                        "line " + std::to_string(line_no) + ": expected " + std::to_string(idx) +
                            " fields, got " + std::to_string(fields.size()));
        std::size_t f = 0;
        const auto id = detail::parse_number<ExampleId>(fields[f++], line_no, "example_id");
        const auto epoch = detail::parse_number<std::uint32_t>(fields[f++], line_no, "epoch");
        CurvePoint point;
        point.epoch = epoch;
        point.loss = detail::parse_number<float>(fields[f++], line_no, "loss");
        if (has_correct) {
            std::string_view v = fields[f++];
            if (v != "0" && v != "1")
                throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": bad correct flag");
            point.correct = (v == "1");
        }
        if (has_conf)
            point.label_confidence = detail::parse_number<float>(fields[f++], line_no, "label_confidence");
        bool trained = true;
        if (has_trained) {
            std::string_view v = fields[f++];
            if (v != "0" && v != "1")
                throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": bad trained flag");
            trained = (v == "1");
        }
        if (seen_any && id < prev_id)
            throw Error(ErrorCode::parse,
                        "line " + std::to_string(line_no) + ": rows not sorted by example_id");
        try {
            store.append_point(id, point, trained);
        } catch (const Error& e) {
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        prev_id = id;
        seen_any = true;
    }
    return store;
}

inline std::string to_binary(const CurveStore& store) {
    std::string out;
    out.append("MAPD", 4);
    out.push_back(char(1)); // version
    std::uint8_t flags = 0;
    if (store.has_correct()) flags |= 1;
    if (store.has_confidence()) flags |= 2;
    out.push_back(static_cast<char>(flags));
    const std::uint64_t n = store.size();
    detail::append_le(out, &n, 8);
    for (const auto& [id, curve] : store.curves()) {
        detail::append_le(out, &id, 8);
        out.push_back(curve.trained ? char(1) : char(0));
        const std::uint32_t len = static_cast<std::uint32_t>(curve.points.size());
        detail::append_le(out, &len, 4);
        for (const CurvePoint& p : curve.points) {
            detail::append_le(out, &p.loss, 4);
            if (flags & 1) out.push_back(*p.correct ? char(1) : char(0));
            if (flags & 2) detail::append_le(out, &*p.label_confidence, 4);
        }
    }
    return out;
}

inline CurveStore from_binary(std::string_view data) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > data.size())
            throw Error(ErrorCode::parse, "truncated binary curve container");
    };
    auto read = [&](void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data.data() + pos, n);
        pos += n;
    };
    need(6);
    if (data.substr(0, 4) != "MAPD")
        throw Error(ErrorCode::parse, "bad magic bytes (not a MAPD container)");
    pos = 4;
    std::uint8_t version = 0, flags = 0;
    read(&version, 1);
    read(&flags, 1);
    if (version != 1)
        throw Error(ErrorCode::parse, "unsupported container version " + std::to_string(version));
    std::uint64_t n = 0;
    read(&n, 8);
    CurveStore store;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t id = 0;
        std::uint8_t trained = 0;
        std::uint32_t len = 0;
        read(&id, 8);
        read(&trained, 1);
        read(&len, 4);
        if (store.contains(id))
            throw Error(ErrorCode::parse, "duplicate curve for id " + std::to_string(id));
        for (std::uint32_t e = 0; e < len; ++e) {
            CurvePoint p;
            p.epoch = e;
            read(&p.loss, 4);
            if (flags & 1) {
                std::uint8_t c = 0;
                read(&c, 1);
                p.correct = (c != 0);
            }
            if (flags & 2) {
                float conf = 0.0f;
                read(&conf, 4);
                p.label_confidence = conf;
            }
            store.append_point(id, p, trained != 0);
        }
    }
    if (pos != data.size())
        throw Error(ErrorCode::parse, "trailing bytes after binary curve container");
    return store;
}

inline bool binary_curve_path(std::string_view path) {
    return path.ends_with(".bin") || path.ends_with(".mapd");
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void save_curves(const CurveStore& store, const std::string& path) {
    write_file(path, binary_curve_path(path) ? to_binary(store) : to_csv(store));
}

inline CurveStore load_curves(const std::string& path) {
    const std::string data = read_file(path);
    return binary_curve_path(path) ? from_binary(data) : from_csv(data);
}

} // namespace mapd
