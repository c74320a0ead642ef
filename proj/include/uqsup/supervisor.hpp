#pragma once

// Threshold supervisor. Uncertainty scores are accepted iff u < t, confidence
// scores iff c > t. The threshold is calibrated on benign validation scores
// only: a false positive is a benign input that gets rejected.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uqsup/errors.hpp"
#include "uqsup/quantifiers.hpp"

namespace uqsup {

inline constexpr std::array<double, 3> default_epsilons = {0.01, 0.05, 0.1};

enum class CalibrationMode {
    above,   // smallest achievable FPR >= epsilon
    at_most, // largest achievable FPR <= epsilon
};

inline std::string_view to_string(CalibrationMode m) {
    return m == CalibrationMode::above ? "above" : "at-most";
}

inline std::optional<CalibrationMode> parse_mode(std::string_view s) {
    if (s == "above") return CalibrationMode::above;
    if (s == "at-most" || s == "at_most") return CalibrationMode::at_most;
    return std::nullopt;
}

struct SupervisorConfig {
    QuantifierId quantifier = QuantifierId::SM;
    double threshold = 0.0;
    Orientation orientation = Orientation::confidence;
    std::optional<double> epsilon; // absent for a manual threshold
    CalibrationMode mode = CalibrationMode::above;
    std::size_t calibration_split_size = 0;
    std::optional<double> achieved_fpr;
    bool degenerate = false;  // no achievable FPR strictly inside (0, 1), or fallback taken
    bool fpr_warning = false; // |achieved - epsilon| > epsilon / 2

    bool operator==(const SupervisorConfig&) const = default;
};

struct Decision {
    std::string input_id;
    bool accepted = false;
    double score = 0.0;

    bool operator==(const Decision&) const = default;
};

struct ScoredSample {
    double score = 0.0;
    bool benign = true;
};

struct Calibration {
    double threshold = std::numeric_limits<double>::infinity();
    double achieved_fpr = 0.0;
    std::size_t benign_count = 0;
    bool degenerate = false;
    bool fpr_warning = false;
};

inline bool accepts(Orientation o, double score, double threshold) noexcept {
    return o == Orientation::uncertainty ? score < threshold : score > threshold;
}

// Candidate thresholds are the distinct benign scores plus the accept-all
// sentinel; the reject-all candidate (FPR = 1) is never selected.
inline Calibration calibrate_threshold(std::span<const ScoredSample> val_scores, double epsilon,
                                       Orientation orientation,
                                       CalibrationMode mode = CalibrationMode::above) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw precondition_error("epsilon must lie in (0, 1), got " + std::to_string(epsilon));

    // Work in uncertainty space; confidences are negated and mapped back at the end.
    std::vector<double> u;
    for (const auto& s : val_scores) {
        if (!std::isfinite(s.score)) throw precondition_error("calibration scores must be finite");
        if (s.benign) u.push_back(orientation == Orientation::uncertainty ? s.score : -s.score);
    }
    if (u.empty()) throw precondition_error("calibration needs at least one benign score");
    std::sort(u.begin(), u.end(), std::greater<>());

    const double n = static_cast<double>(u.size());
    struct Candidate {
        double threshold;
        double fpr;
    };
    std::vector<Candidate> candidates{{std::numeric_limits<double>::infinity(), 0.0}};
    for (std::size_t i = 0; i < u.size();) {
        std::size_t j = i;
        while (j < u.size() && u[j] == u[i]) ++j;
        if (j == u.size()) break; // rejecting at the smallest score rejects every benign input
        candidates.push_back({u[i], static_cast<double>(j) / n});
        i = j;
    }

    Calibration out;
    out.benign_count = u.size();
    out.degenerate = candidates.size() == 1;
    const Candidate* chosen = nullptr;
    if (mode == CalibrationMode::above) {
        for (const auto& c : candidates)
            if (c.fpr >= epsilon) {
                chosen = &c;
                break;
            }
        if (!chosen) {
            chosen = &candidates.back();
            out.degenerate = true;
        }
    } else {
        for (const auto& c : candidates)
            if (c.fpr <= epsilon) chosen = &c;
    }
    out.threshold = orientation == Orientation::uncertainty ? chosen->threshold : -chosen->threshold;
    out.achieved_fpr = chosen->fpr;
    out.fpr_warning = std::abs(out.achieved_fpr - epsilon) > epsilon / 2.0;
    return out;
}

inline SupervisorConfig calibrate_threshold(QuantifierId q, std::span<const ScoredSample> val_scores,
                                            double epsilon,
                                            CalibrationMode mode = CalibrationMode::above) {
    const Calibration c = calibrate_threshold(val_scores, epsilon, orientation_of(q), mode);
    SupervisorConfig cfg;
    cfg.quantifier = q;
    cfg.threshold = c.threshold;
    cfg.orientation = orientation_of(q);
    cfg.epsilon = epsilon;
    cfg.mode = mode;
    cfg.calibration_split_size = c.benign_count;
    cfg.achieved_fpr = c.achieved_fpr;
    cfg.degenerate = c.degenerate;
    cfg.fpr_warning = c.fpr_warning;
    return cfg;
}

inline SupervisorConfig manual_config(QuantifierId q, double threshold) {
    SupervisorConfig cfg;
    cfg.quantifier = q;
    cfg.threshold = threshold;
    cfg.orientation = orientation_of(q);
    return cfg;
}

inline std::vector<Decision> apply(const SupervisorConfig& config,
                                   std::span<const QuantifiedPrediction> qs) {
    std::vector<Decision> out;
    out.reserve(qs.size());
    for (const auto& q : qs) {
        if (q.orientation != config.orientation)
            throw precondition_error("orientation mismatch for '" + q.input_id + "': config is " +
                                     std::string(to_string(config.orientation)) + ", score is " +
                                     std::string(to_string(q.orientation)));
        out.push_back({q.input_id, accepts(config.orientation, q.score, config.threshold), q.score});
    }
    return out;
}

// Benign-rejection rate of a fixed threshold over the benign entries of `scores`.
inline double empirical_fpr(std::span<const ScoredSample> scores, Orientation o, double threshold) {
    std::size_t benign = 0, rejected = 0;
    for (const auto& s : scores) {
        if (!s.benign) continue;
        ++benign;
        if (!accepts(o, s.score, threshold)) ++rejected;
    }
    if (benign == 0) throw undefined_metric_error("FPR undefined: no benign samples");
    return static_cast<double>(rejected) / static_cast<double>(benign);
}

} // namespace uqsup
