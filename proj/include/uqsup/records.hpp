#pragma once

// Recorded model outputs: one PredictionRecord per input, grouped in a Dataset.
// Classification samples are softmax vectors; regression samples are a scalar
// with an optional per-sample variance channel.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uqsup/errors.hpp"

namespace uqsup {

inline constexpr double default_sum_tolerance = 1e-4;

enum class Task { classification, regression };
enum class Split { train, validation, test };

struct ClassDistribution {
    std::vector<double> probs;

    std::size_t num_classes() const noexcept { return probs.size(); }
    bool operator==(const ClassDistribution&) const = default;
};

struct RegressionSample {
    double value = 0.0;
    std::optional<double> variance;

    bool operator==(const RegressionSample&) const = default;
};

using Sample = std::variant<ClassDistribution, RegressionSample>;

// Class index for classification, real target for regression.
using GroundTruth = std::variant<std::size_t, double>;

struct PredictionRecord {
    std::string input_id;
    std::vector<Sample> outputs;
    std::optional<GroundTruth> ground_truth;
    Split split = Split::test;
    std::string source = "nominal";

    std::size_t num_samples() const noexcept { return outputs.size(); }

    bool is_classification() const noexcept {
        return !outputs.empty() && std::holds_alternative<ClassDistribution>(outputs.front());
    }

    // C of the first sample; 0 for regression or empty records.
    std::size_t num_classes() const noexcept {
        if (!is_classification()) return 0;
        return std::get<ClassDistribution>(outputs.front()).num_classes();
    }

    std::optional<std::size_t> class_label() const {
        if (ground_truth && std::holds_alternative<std::size_t>(*ground_truth))
            return std::get<std::size_t>(*ground_truth);
        return std::nullopt;
    }

    std::optional<double> regression_target() const {
        if (ground_truth && std::holds_alternative<double>(*ground_truth))
            return std::get<double>(*ground_truth);
        return std::nullopt;
    }

    bool operator==(const PredictionRecord&) const = default;
};

struct Dataset {
    std::vector<PredictionRecord> records;
    std::map<std::string, std::string> metadata;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    bool operator==(const Dataset&) const = default;
};

struct Violation {
    std::string input_id;
    std::string message;
    std::size_t record_index = 0;
};

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    }
    return "test";
}

inline std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation" || s == "val") return Split::validation;
    if (s == "test") return Split::test;
    return std::nullopt;
}

inline std::string_view to_string(Task t) {
    return t == Task::classification ? "classification" : "regression";
}

inline std::optional<Task> parse_task(std::string_view s) {
    if (s == "classification") return Task::classification;
    if (s == "regression") return Task::regression;
    return std::nullopt;
}

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Shape signature used for the "identical shape" invariant:
// C for classification, -1 (scalar) or -2 (mean, variance) for regression.
inline long sample_shape(const Sample& s) {
    if (const auto* cd = std::get_if<ClassDistribution>(&s))
        return static_cast<long>(cd->num_classes());
    return std::get<RegressionSample>(s).variance ? -2 : -1;
}

inline void check_record(const PredictionRecord& r, std::size_t index, double tol,
                         std::vector<Violation>& out) {
    auto fail = [&](std::string msg) { out.push_back({r.input_id, std::move(msg), index}); };

    if (r.outputs.empty()) {
        fail("no output samples");
        return;
    }
    const long shape = sample_shape(r.outputs.front());
    for (std::size_t t = 0; t < r.outputs.size(); ++t) {
        const Sample& s = r.outputs[t];
        if (sample_shape(s) != shape) {
            fail("sample " + std::to_string(t) + " shape differs from sample 0");
            continue;
        }
        if (const auto* cd = std::get_if<ClassDistribution>(&s)) {
            if (cd->num_classes() < 2) {
                fail("sample " + std::to_string(t) + " has fewer than 2 classes");
                continue;
            }
            double sum = 0.0;
            bool entries_ok = true;
            for (double p : cd->probs) {
                if (!std::isfinite(p) || p < 0.0 || p > 1.0) entries_ok = false;
                sum += p;
            }
            if (!entries_ok) {
                fail("sample " + std::to_string(t) + " has an entry outside [0,1] or non-finite");
            } else if (std::abs(sum - 1.0) > tol) {
                fail("sample " + std::to_string(t) + ": sum " + fmt_g(sum) + " exceeds tolerance");
            }
        } else {
            const auto& rs = std::get<RegressionSample>(s);
            if (!std::isfinite(rs.value))
                fail("sample " + std::to_string(t) + " value non-finite");
            if (rs.variance && (!std::isfinite(*rs.variance) || *rs.variance < 0.0))
                fail("sample " + std::to_string(t) + " variance negative or non-finite");
        }
    }

    if (r.ground_truth) {
        if (r.is_classification()) {
            const auto label = r.class_label();
            if (!label)
                fail("ground truth is not a class index");
            else if (*label >= r.num_classes())
                fail("ground truth class " + std::to_string(*label) + " not below C=" +
                     std::to_string(r.num_classes()));
        } else {
            const auto target = r.regression_target();
            if (!target || !std::isfinite(*target))
                fail("regression ground truth missing or non-finite");
        }
    }
}

} // namespace detail

// Every invariant violation in the dataset; empty iff the dataset is valid.
inline std::vector<Violation> validate_dataset(const Dataset& d,
                                               double sum_tolerance = default_sum_tolerance) {
    std::vector<Violation> out;
    std::set<std::string> seen;
    std::optional<std::size_t> dataset_classes;
    std::optional<bool> dataset_classification;

    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const PredictionRecord& r = d.records[i];
        detail::check_record(r, i, sum_tolerance, out);

        if (!seen.insert(r.input_id).second)
            out.push_back({r.input_id, "duplicate input_id", i});

        if (r.outputs.empty()) continue;
        const bool cls = r.is_classification();
        if (!dataset_classification) {
            dataset_classification = cls;
        } else if (*dataset_classification != cls) {
            out.push_back({r.input_id, "task differs from earlier records", i});
            continue;
        }
        if (cls) {
            if (!dataset_classes)
                dataset_classes = r.num_classes();
            else if (*dataset_classes != r.num_classes())
                out.push_back({r.input_id,
                               "C=" + std::to_string(r.num_classes()) + " differs from dataset C=" +
                                   std::to_string(*dataset_classes),
                               i});
        }
    }
    return out;
}

enum class PartitionKey { split, source };

inline std::map<std::string, Dataset> partition(const Dataset& d, PartitionKey by) {
    std::map<std::string, Dataset> parts;
    for (const auto& r : d.records) {
        const std::string key =
            by == PartitionKey::split ? std::string(to_string(r.split)) : r.source;
        auto [it, inserted] = parts.try_emplace(key);
        if (inserted) it->second.metadata = d.metadata;
        it->second.records.push_back(r);
    }
    return parts;
}

// Records of one split, metadata preserved.
inline Dataset filter_split(const Dataset& d, Split s) {
    Dataset out;
    out.metadata = d.metadata;
    for (const auto& r : d.records)
        if (r.split == s) out.records.push_back(r);
    return out;
}

// Keeps the first `samples` outputs of every record.
inline Dataset truncate_samples(const Dataset& d, std::size_t samples) {
    Dataset out;
    out.metadata = d.metadata;
    out.records.reserve(d.records.size());
    for (const auto& r : d.records) {
        if (samples > r.outputs.size())
            throw precondition_error("cannot truncate record '" + r.input_id + "' with T=" +
                                     std::to_string(r.outputs.size()) + " to " +
                                     std::to_string(samples) + " samples");
        PredictionRecord copy = r;
        copy.outputs.resize(samples);
        out.records.push_back(std::move(copy));
    }
    return out;
}

} // namespace uqsup
