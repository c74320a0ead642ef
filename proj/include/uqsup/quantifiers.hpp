#pragma once

// Uncertainty / confidence quantifiers.
//
// Point predictors (T = 1): SM, PCS, SME.
// Sampled classifiers (T >= 2, MC-Dropout or ensemble members): VR, PE, MI, MS.
// Sampled regressors: PRED_VAR (sample variance), MEAN_VAR (mean of per-sample
// variances).
//
// Entropies use the natural log with 0 ln 0 = 0. Argmax and mode ties go to the
// lowest class index.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uqsup/errors.hpp"
#include "uqsup/parallel.hpp"
#include "uqsup/records.hpp"

namespace uqsup {

enum class QuantifierId { SM, PCS, SME, VR, PE, MI, MS, PRED_VAR, MEAN_VAR };
enum class Orientation { uncertainty, confidence };

inline constexpr std::array all_quantifiers = {
    QuantifierId::SM, QuantifierId::PCS, QuantifierId::SME,      QuantifierId::VR,      QuantifierId::PE,
    QuantifierId::MI, QuantifierId::MS,  QuantifierId::PRED_VAR, QuantifierId::MEAN_VAR,
};

inline std::string_view to_string(QuantifierId q) {
    switch (q) {
    case QuantifierId::SM: return "SM";
    case QuantifierId::PCS: return "PCS";
    case QuantifierId::SME: return "SME";
    case QuantifierId::VR: return "VR";
    case QuantifierId::PE: return "PE";
    case QuantifierId::MI: return "MI";
    case QuantifierId::MS: return "MS";
    case QuantifierId::PRED_VAR: return "PRED_VAR";
    case QuantifierId::MEAN_VAR: return "MEAN_VAR";
    }
    return "?";
}

inline std::optional<QuantifierId> parse_quantifier(std::string_view s) {
    for (auto q : all_quantifiers)
        if (to_string(q) == s) return q;
    return std::nullopt;
}

inline std::string_view to_string(Orientation o) {
    return o == Orientation::uncertainty ? "uncertainty" : "confidence";
}

inline std::optional<Orientation> parse_orientation(std::string_view s) {
    if (s == "uncertainty") return Orientation::uncertainty;
    if (s == "confidence") return Orientation::confidence;
    return std::nullopt;
}

constexpr Orientation orientation_of(QuantifierId q) noexcept {
    switch (q) {
    case QuantifierId::SM:
    case QuantifierId::PCS:
    case QuantifierId::MS: return Orientation::confidence;
    default: return Orientation::uncertainty;
    }
}

using Prediction = std::variant<std::size_t, double>;

struct QuantifiedPrediction {
    std::string input_id;
    Prediction predicted;
    double score = 0.0;
    Orientation orientation = Orientation::uncertainty;

    std::optional<std::size_t> predicted_class() const {
        if (const auto* c = std::get_if<std::size_t>(&predicted)) return *c;
        return std::nullopt;
    }
    std::optional<double> predicted_value() const {
        if (const auto* v = std::get_if<double>(&predicted)) return *v;
        return std::nullopt;
    }

    bool operator==(const QuantifiedPrediction&) const = default;
};

// Score as an uncertainty: confidences are negated. Strictly decreasing in
// confidence, so rankings and thresholds carry over.
inline double as_uncertainty(const QuantifiedPrediction& q) {
    return q.orientation == Orientation::uncertainty ? q.score : -q.score;
}

namespace detail {

inline std::size_t argmax_first(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

inline const std::vector<double>& probs_of(const Sample& s) {
    return std::get<ClassDistribution>(s).probs;
}

inline std::vector<double> mean_distribution(const PredictionRecord& r) {
    std::vector<double> mean(r.num_classes(), 0.0);
    for (const auto& s : r.outputs) {
        const auto& p = probs_of(s);
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
    }
    const double t = static_cast<double>(r.outputs.size());
    for (double& m : mean) m /= t;
    return mean;
}

inline std::string describe(const PredictionRecord& r) {
    return "record '" + r.input_id + "' (T=" + std::to_string(r.outputs.size()) + ", " +
           (r.outputs.empty() ? "empty" : r.is_classification() ? "classification" : "regression") + ")";
}

} // namespace detail

// Throws precondition_error when `r` cannot be fed to `q`.
inline void require_applicable(QuantifierId q, const PredictionRecord& r) {
    const auto fail = [&](std::string_view need) {
        throw precondition_error(std::string(to_string(q)) + " requires " + std::string(need) + "; " +
                                 detail::describe(r));
    };
    if (r.outputs.empty()) fail("a nonempty sample list");
    const std::size_t t = r.outputs.size();
    const long shape = detail::sample_shape(r.outputs.front());
    for (const auto& s : r.outputs)
        if (detail::sample_shape(s) != shape) fail("samples of identical shape");

    switch (q) {
    case QuantifierId::SM:
    case QuantifierId::PCS:
    case QuantifierId::SME:
        if (t != 1 || !r.is_classification()) fail("T = 1 classification outputs");
        if (r.num_classes() < 2) fail("C >= 2");
        break;
    case QuantifierId::VR:
    case QuantifierId::PE:
    case QuantifierId::MI:
    case QuantifierId::MS:
        if (t < 2 || !r.is_classification()) fail("T >= 2 classification outputs");
        if (r.num_classes() < 2) fail("C >= 2");
        break;
    case QuantifierId::PRED_VAR:
        if (t < 2 || r.is_classification()) fail("T >= 2 regression outputs");
        break;
    case QuantifierId::MEAN_VAR:
        if (t < 2 || r.is_classification()) fail("T >= 2 regression outputs");
        if (shape != -2) fail("a per-sample variance channel");
        break;
    }
}

inline bool is_applicable(QuantifierId q, const PredictionRecord& r) {
    try {
        require_applicable(q, r);
        return true;
    } catch (const precondition_error&) {
        return false;
    }
}

inline QuantifiedPrediction max_softmax(const PredictionRecord& r) {
    require_applicable(QuantifierId::SM, r);
    const auto& p = detail::probs_of(r.outputs.front());
    const std::size_t k = detail::argmax_first(p);
    return {r.input_id, k, p[k], Orientation::confidence};
}

inline QuantifiedPrediction pcs(const PredictionRecord& r) {
    require_applicable(QuantifierId::PCS, r);
    const auto& p = detail::probs_of(r.outputs.front());
    const std::size_t k = detail::argmax_first(p);
    double second = -1.0;
    for (std::size_t c = 0; c < p.size(); ++c)
        if (c != k) second = std::max(second, p[c]);
    return {r.input_id, k, p[k] - second, Orientation::confidence};
}

inline QuantifiedPrediction softmax_entropy(const PredictionRecord& r) {
    require_applicable(QuantifierId::SME, r);
    const auto& p = detail::probs_of(r.outputs.front());
    return {r.input_id, detail::argmax_first(p), detail::entropy(p), Orientation::uncertainty};
}

// Modal per-sample winner; score is the fraction of samples that disagree with it.
inline QuantifiedPrediction variation_ratio(const PredictionRecord& r) {
    require_applicable(QuantifierId::VR, r);
    std::vector<std::size_t> votes(r.num_classes(), 0);
    for (const auto& s : r.outputs) ++votes[detail::argmax_first(detail::probs_of(s))];
    const auto mode = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    const double t = static_cast<double>(r.outputs.size());
    return {r.input_id, mode, 1.0 - static_cast<double>(votes[mode]) / t, Orientation::uncertainty};
}

inline QuantifiedPrediction predictive_entropy(const PredictionRecord& r) {
    require_applicable(QuantifierId::PE, r);
    const auto mean = detail::mean_distribution(r);
    return {r.input_id, detail::argmax_first(mean), detail::entropy(mean), Orientation::uncertainty};
}

// PE minus the mean per-sample entropy. Clamped at 0 against rounding below zero.
inline QuantifiedPrediction mutual_information(const PredictionRecord& r) {
    require_applicable(QuantifierId::MI, r);
    const auto mean = detail::mean_distribution(r);
    double expected = 0.0;
    for (const auto& s : r.outputs) expected += detail::entropy(detail::probs_of(s));
    expected /= static_cast<double>(r.outputs.size());
    const double mi = std::max(0.0, detail::entropy(mean) - expected);
    return {r.input_id, detail::argmax_first(mean), mi, Orientation::uncertainty};
}

inline QuantifiedPrediction mean_softmax(const PredictionRecord& r) {
    require_applicable(QuantifierId::MS, r);
    std::vector<double> sums(r.num_classes(), 0.0);
    for (const auto& s : r.outputs) {
        const auto& p = detail::probs_of(s);
        for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += p[c];
    }
    const std::size_t k = detail::argmax_first(sums);
    return {r.input_id, k, sums[k] / static_cast<double>(r.outputs.size()), Orientation::confidence};
}

// Unbiased sample variance. The inverse model precision is a per-model
// constant and is left out.
inline QuantifiedPrediction predictive_variance(const PredictionRecord& r) {
    require_applicable(QuantifierId::PRED_VAR, r);
    const double t = static_cast<double>(r.outputs.size());
    double mean = 0.0;
    for (const auto& s : r.outputs) mean += std::get<RegressionSample>(s).value;
    mean /= t;
    double ss = 0.0;
    for (const auto& s : r.outputs) {
        const double d = std::get<RegressionSample>(s).value - mean;
        ss += d * d;
    }
    return {r.input_id, mean, ss / (t - 1.0), Orientation::uncertainty};
}

inline QuantifiedPrediction mean_variance(const PredictionRecord& r) {
    require_applicable(QuantifierId::MEAN_VAR, r);
    const double t = static_cast<double>(r.outputs.size());
    double mean = 0.0, var = 0.0;
    for (const auto& s : r.outputs) {
        const auto& rs = std::get<RegressionSample>(s);
        if (*rs.variance < 0.0)
            throw precondition_error("MEAN_VAR requires non-negative variances; " + detail::describe(r));
        mean += rs.value;
        var += *rs.variance;
    }
    return {r.input_id, mean / t, var / t, Orientation::uncertainty};
}

inline QuantifiedPrediction quantify(const PredictionRecord& r, QuantifierId q) {
    switch (q) {
    case QuantifierId::SM: return max_softmax(r);
    case QuantifierId::PCS: return pcs(r);
    case QuantifierId::SME: return softmax_entropy(r);
    case QuantifierId::VR: return variation_ratio(r);
    case QuantifierId::PE: return predictive_entropy(r);
    case QuantifierId::MI: return mutual_information(r);
    case QuantifierId::MS: return mean_softmax(r);
    case QuantifierId::PRED_VAR: return predictive_variance(r);
    case QuantifierId::MEAN_VAR: return mean_variance(r);
    }
    throw precondition_error("unknown quantifier");
}

// One result per record in input order. Preconditions are checked for every
// record before any work, so the error always names the first offender.
inline std::vector<QuantifiedPrediction> quantify_dataset(const Dataset& d, QuantifierId q,
                                                          std::size_t threads = 1) {
    for (const auto& r : d.records) require_applicable(q, r);
    std::vector<QuantifiedPrediction> out(d.records.size());
    parallel_for(d.records.size(), threads, [&](std::size_t i) { out[i] = quantify(d.records[i], q); });
    return out;
}

// Quantifiers whose preconditions hold for every record of a nonempty dataset.
inline std::vector<QuantifierId> applicable_quantifiers(const Dataset& d) {
    std::vector<QuantifierId> out;
    if (d.empty()) return out;
    for (auto q : all_quantifiers) {
        bool ok = true;
        for (const auto& r : d.records)
            if (!is_applicable(q, r)) {
                ok = false;
                break;
            }
        if (ok) out.push_back(q);
    }
    return out;
}

} // namespace uqsup
