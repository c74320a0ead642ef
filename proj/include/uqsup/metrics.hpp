#pragma once

// Supervisor assessment: supervised objective over the accepted subset,
// acceptance rate, S_beta, confusion-matrix metrics of the supervisor as a
// binary classifier (malicious = positive = should be rejected), and the
// threshold-free AUROC / average precision / point-biserial correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uqsup/errors.hpp"
#include "uqsup/quantifiers.hpp"
#include "uqsup/records.hpp"
#include "uqsup/supervisor.hpp"

namespace uqsup {

enum class ObjectiveKind { accuracy, mean_squared_error, custom };
enum class Direction { maximize, minimize };

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::accuracy;
    double lower = 0.0;
    double upper = 1.0;
    Direction direction = Direction::maximize;
    // Only for ObjectiveKind::custom; receives the labeled accepted subset.
    std::function<double(std::span<const QuantifiedPrediction>, std::span<const PredictionRecord>)> custom;

    static ObjectiveSpec accuracy() { return {}; }

    static ObjectiveSpec mean_squared_error(double lower, double upper) {
        ObjectiveSpec s;
        s.kind = ObjectiveKind::mean_squared_error;
        s.lower = lower;
        s.upper = upper;
        s.direction = Direction::minimize;
        return s;
    }

    void validate() const {
        if (!(lower < upper)) throw precondition_error("objective bounds require lower < upper");
        if (kind == ObjectiveKind::accuracy &&
            (lower != 0.0 || upper != 1.0 || direction != Direction::maximize))
            throw precondition_error("accuracy objective must use bounds [0, 1] and maximize");
        if (kind == ObjectiveKind::custom && !custom)
            throw precondition_error("custom objective needs a callable");
    }
};

inline std::string_view to_string(ObjectiveKind k) {
    switch (k) {
    case ObjectiveKind::accuracy: return "accuracy";
    case ObjectiveKind::mean_squared_error: return "mse";
    case ObjectiveKind::custom: return "custom";
    }
    return "custom";
}

namespace detail {

inline void check_aligned(std::size_t a, std::size_t b, std::string_view what) {
    if (a != b)
        throw precondition_error(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                                 std::to_string(b) + ")");
}

inline void check_ids(std::span<const QuantifiedPrediction> qs, std::span<const PredictionRecord> records) {
    check_aligned(qs.size(), records.size(), "predictions/records");
    for (std::size_t i = 0; i < qs.size(); ++i)
        if (qs[i].input_id != records[i].input_id)
            throw precondition_error("prediction '" + qs[i].input_id + "' does not match record '" +
                                     records[i].input_id + "' at position " + std::to_string(i));
}

inline bool has_label(const PredictionRecord& r) { return r.ground_truth.has_value(); }

// Objective over the records selected by `indices`, all of which are labeled.
inline double objective_over(const ObjectiveSpec& spec, std::span<const std::size_t> indices,
                             std::span<const QuantifiedPrediction> qs, std::span<const PredictionRecord> records) {
    switch (spec.kind) {
    case ObjectiveKind::accuracy: {
        std::size_t correct = 0;
        for (std::size_t i : indices) {
            const auto label = records[i].class_label();
            const auto pred = qs[i].predicted_class();
            if (!label || !pred) throw precondition_error("accuracy needs class predictions and labels");
            if (*label == *pred) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(indices.size());
    }
    case ObjectiveKind::mean_squared_error: {
        double sum = 0.0;
        for (std::size_t i : indices) {
            const auto target = records[i].regression_target();
            const auto pred = qs[i].predicted_value();
            if (!target || !pred) throw precondition_error("MSE needs regression predictions and targets");
            sum += (*pred - *target) * (*pred - *target);
        }
        return sum / static_cast<double>(indices.size());
    }
    case ObjectiveKind::custom: {
        std::vector<QuantifiedPrediction> sub_q;
        std::vector<PredictionRecord> sub_r;
        for (std::size_t i : indices) {
            sub_q.push_back(qs[i]);
            sub_r.push_back(records[i]);
        }
        return spec.custom(sub_q, sub_r);
    }
    }
    throw precondition_error("unknown objective kind");
}

} // namespace detail

// Objective over the accepted, labeled inputs. Unlabeled inputs are skipped.
inline double supervised_objective(std::span<const Decision> decisions, std::span<const QuantifiedPrediction> qs,
                                   std::span<const PredictionRecord> records, const ObjectiveSpec& spec) {
    spec.validate();
    detail::check_ids(qs, records);
    detail::check_aligned(decisions.size(), qs.size(), "decisions/predictions");
    std::vector<std::size_t> accepted;
    for (std::size_t i = 0; i < decisions.size(); ++i)
        if (decisions[i].accepted && detail::has_label(records[i])) accepted.push_back(i);
    if (accepted.empty()) throw undefined_metric_error("supervised objective undefined, no accepted inputs");
    return detail::objective_over(spec, accepted, qs, records);
}

// Objective over every labeled input, as if no supervisor were present.
inline double unsupervised_objective(std::span<const QuantifiedPrediction> qs,
                                     std::span<const PredictionRecord> records, const ObjectiveSpec& spec) {
    spec.validate();
    detail::check_ids(qs, records);
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (detail::has_label(records[i])) labeled.push_back(i);
    if (labeled.empty()) throw undefined_metric_error("objective undefined, no labeled inputs");
    return detail::objective_over(spec, labeled, qs, records);
}

inline double acceptance_rate(std::span<const Decision> decisions) {
    if (decisions.empty()) throw precondition_error("acceptance rate of an empty decision list");
    const auto n = std::count_if(decisions.begin(), decisions.end(), [](const Decision& d) { return d.accepted; });
    return static_cast<double>(n) / static_cast<double>(decisions.size());
}

// Objective mapped to [0, 1], 1 being best.
inline double normalized_objective(double objective, const ObjectiveSpec& spec) {
    const double nu = std::clamp((objective - spec.lower) / (spec.upper - spec.lower), 0.0, 1.0);
    return spec.direction == Direction::maximize ? nu : 1.0 - nu;
}

// Weighted harmonic mean of the normalized supervised objective and the
// acceptance rate.
inline double s_score(double supervised_obj, double acceptance, const ObjectiveSpec& spec, double beta = 1.0) {
    if (!(beta > 0.0)) throw precondition_error("S-score requires beta > 0");
    if (!(acceptance >= 0.0 && acceptance <= 1.0))
        throw precondition_error("acceptance rate must lie in [0, 1]");
    if (!(spec.lower < spec.upper)) throw precondition_error("objective bounds require lower < upper");
    const double nu = normalized_objective(supervised_obj, spec);
    const double b2 = beta * beta;
    const double denom = b2 * nu + acceptance;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * nu * acceptance / denom;
}

// Per-record malicious flag (nullopt when unlabeled). Classification: the
// prediction is wrong. Regression: |prediction - target| > imprecision.
inline std::vector<std::optional<bool>> malicious_labels(std::span<const QuantifiedPrediction> qs,
                                                         std::span<const PredictionRecord> records,
                                                         double acceptable_imprecision = 0.5) {
    detail::check_ids(qs, records);
    std::vector<std::optional<bool>> out(qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (const auto label = records[i].class_label()) {
            const auto pred = qs[i].predicted_class();
            if (!pred) throw precondition_error("class label paired with a regression prediction");
            out[i] = *pred != *label;
        } else if (const auto target = records[i].regression_target()) {
            const auto pred = qs[i].predicted_value();
            if (!pred) throw precondition_error("regression target paired with a class prediction");
            out[i] = std::abs(*pred - *target) > acceptable_imprecision;
        }
    }
    return out;
}

struct BinaryMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    // nullopt marks an empty denominator.
    std::optional<double> tpr, fpr, tnr, fnr, precision;
    double f1 = 0.0; // 0 when precision or recall is undefined or both are 0
    double acc = 0.0;
};

// Positive = malicious, predicted positive = rejected. Unlabeled entries are skipped.
inline BinaryMetrics binary_supervisor_metrics(std::span<const Decision> decisions,
                                               std::span<const std::optional<bool>> malicious) {
    detail::check_aligned(decisions.size(), malicious.size(), "decisions/labels");
    BinaryMetrics m;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!malicious[i]) continue;
        const bool rejected = !decisions[i].accepted;
        if (*malicious[i])
            (rejected ? m.tp : m.fn) += 1;
        else
            (rejected ? m.fp : m.tn) += 1;
    }
    const std::size_t total = m.tp + m.fp + m.tn + m.fn;
    if (total == 0) throw undefined_metric_error("binary metrics undefined: no labeled records");
    const auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
        if (b == 0) return std::nullopt;
        return static_cast<double>(a) / static_cast<double>(b);
    };
    m.tpr = ratio(m.tp, m.tp + m.fn);
    m.fnr = ratio(m.fn, m.tp + m.fn);
    m.fpr = ratio(m.fp, m.fp + m.tn);
    m.tnr = ratio(m.tn, m.fp + m.tn);
    m.precision = ratio(m.tp, m.tp + m.fp);
    if (m.precision && m.tpr && *m.precision + *m.tpr > 0.0)
        m.f1 = 2.0 * *m.precision * *m.tpr / (*m.precision + *m.tpr);
    m.acc = static_cast<double>(m.tp + m.tn) / static_cast<double>(total);
    return m;
}

struct LabeledScore {
    double uncertainty = 0.0;
    bool malicious = false;
};

// Mann-Whitney form: P(u_malicious > u_benign) + P(equal) / 2, via mid-ranks.
inline double auroc(std::span<const LabeledScore> scores) {
    std::size_t pos = 0;
    for (const auto& s : scores) pos += s.malicious;
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw undefined_metric_error("AUROC undefined: needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].uncertainty < scores[b].uncertainty; });
    // Twice the rank sum keeps mid-ranks integral.
    long double rank_sum2 = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < order.size() && scores[order[j]].uncertainty == scores[order[i]].uncertainty) {
            group_pos += scores[order[j]].malicious;
            ++j;
        }
        // Ranks i+1..j, mid-rank (i+1+j)/2.
        rank_sum2 += static_cast<long double>(group_pos) * static_cast<long double>(i + 1 + j);
        i = j;
    }
    const long double p = static_cast<long double>(pos);
    const long double u_stat = rank_sum2 / 2 - p * (p + 1) / 2;
    return static_cast<double>(u_stat / (p * static_cast<long double>(neg)));
}

// Step-wise average precision over thresholds descending through the observed scores.
inline double avgpr(std::span<const LabeledScore> scores) {
    std::size_t pos = 0;
    for (const auto& s : scores) pos += s.malicious;
    if (pos == 0) throw undefined_metric_error("average precision undefined: no positives");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].uncertainty > scores[b].uncertainty; });
    std::size_t tp = 0, seen = 0, prev_tp = 0;
    double ap = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]].uncertainty == scores[order[i]].uncertainty) {
            tp += scores[order[j]].malicious;
            ++j;
        }
        seen = j;
        if (tp != prev_tp) {
            const double recall_step = static_cast<double>(tp - prev_tp) / static_cast<double>(pos);
            ap += recall_step * static_cast<double>(tp) / static_cast<double>(seen);
            prev_tp = tp;
        }
        i = j;
    }
    return ap;
}

// Pearson correlation; equals the point-biserial coefficient when `errors` is 0/1.
inline double point_biserial(std::span<const double> errors, std::span<const double> uncertainties) {
    detail::check_aligned(errors.size(), uncertainties.size(), "point_biserial");
    if (errors.size() < 3) throw precondition_error("point_biserial needs at least 3 pairs");
    const double n = static_cast<double>(errors.size());
    const double mx = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    const double my = std::accumulate(uncertainties.begin(), uncertainties.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const double dx = errors[i] - mx, dy = uncertainties[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw undefined_metric_error("undefined correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline std::vector<LabeledScore> labeled_scores(std::span<const QuantifiedPrediction> qs,
                                                std::span<const std::optional<bool>> malicious) {
    detail::check_aligned(qs.size(), malicious.size(), "predictions/labels");
    std::vector<LabeledScore> out;
    for (std::size_t i = 0; i < qs.size(); ++i)
        if (malicious[i]) out.push_back({as_uncertainty(qs[i]), *malicious[i]});
    return out;
}

struct EvaluationReport {
    std::optional<double> unsupervised_objective;
    std::optional<double> supervised_objective;
    double acceptance_rate = 0.0;
    std::vector<std::pair<double, std::optional<double>>> s_beta; // (beta, S_beta)
    BinaryMetrics binary;
    std::optional<double> auroc;
    std::optional<double> avgpr;
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
    std::size_t n_unlabeled_excluded = 0;
    std::string objective = "accuracy";
    std::map<std::string, std::string> context; // quantifier, epsilon, subject, source, ...

    std::optional<double> s_at(double beta) const {
        for (const auto& [b, s] : s_beta)
            if (b == beta) return s;
        return std::nullopt;
    }
};

struct EvaluateOptions {
    ObjectiveSpec objective = ObjectiveSpec::accuracy();
    std::vector<double> betas{1.0};
    double acceptable_imprecision = 0.5;
};

// Every metric of the report for one supervisor over one set of predictions.
// Undefined metrics are left empty instead of throwing.
inline EvaluationReport evaluate(const SupervisorConfig& config, std::span<const QuantifiedPrediction> qs,
                                 std::span<const PredictionRecord> records, const EvaluateOptions& opts = {}) {
    opts.objective.validate();
    detail::check_ids(qs, records);
    if (qs.empty()) throw precondition_error("evaluation needs at least one input");
    for (double b : opts.betas)
        if (!(b > 0.0)) throw precondition_error("S-score requires beta > 0");

    const auto decisions = uqsup::apply(config, qs);
    EvaluationReport rep;
    rep.objective = std::string(to_string(opts.objective.kind));
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        (decisions[i].accepted ? rep.n_accepted : rep.n_rejected) += 1;
        if (!detail::has_label(records[i])) ++rep.n_unlabeled_excluded;
    }
    rep.acceptance_rate = acceptance_rate(decisions);

    const auto guarded = [](auto&& fn) -> std::optional<double> {
        try {
            return fn();
        } catch (const undefined_metric_error&) {
            return std::nullopt;
        }
    };
    rep.unsupervised_objective = guarded([&] { return unsupervised_objective(qs, records, opts.objective); });
    rep.supervised_objective = guarded([&] { return supervised_objective(decisions, qs, records, opts.objective); });
    for (double b : opts.betas) {
        std::optional<double> s;
        if (rep.supervised_objective)
            s = s_score(*rep.supervised_objective, rep.acceptance_rate, opts.objective, b);
        else if (rep.acceptance_rate == 0.0)
            s = 0.0;
        rep.s_beta.emplace_back(b, s);
    }

    const auto malicious = malicious_labels(qs, records, opts.acceptable_imprecision);
    try {
        rep.binary = binary_supervisor_metrics(decisions, malicious);
    } catch (const undefined_metric_error&) {
    }
    const auto ls = labeled_scores(qs, malicious);
    rep.auroc = guarded([&] { return auroc(ls); });
    rep.avgpr = guarded([&] { return avgpr(ls); });

    rep.context["quantifier"] = std::string(to_string(config.quantifier));
    rep.context["orientation"] = std::string(to_string(config.orientation));
    rep.context["entropy_log_base"] = "e";
    return rep;
}

} // namespace uqsup
