#pragma once

// quantify -> calibrate on the validation split -> evaluate on the test split.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uqsup/metrics.hpp"
#include "uqsup/quantifiers.hpp"
#include "uqsup/records.hpp"
#include "uqsup/supervisor.hpp"

namespace uqsup {

struct PipelineOptions {
    QuantifierId quantifier = QuantifierId::SM;
    double epsilon = 0.1;
    CalibrationMode mode = CalibrationMode::above;
    EvaluateOptions eval;
    std::size_t threads = 1;
};

struct PipelineResult {
    SupervisorConfig config;
    EvaluationReport report;
};

// Labeled predictions as calibration input; benign = not malicious.
inline std::vector<ScoredSample> calibration_scores(std::span<const QuantifiedPrediction> qs,
                                                    std::span<const PredictionRecord> records,
                                                    double acceptable_imprecision = 0.5) {
    const auto malicious = malicious_labels(qs, records, acceptable_imprecision);
    std::vector<ScoredSample> out;
    for (std::size_t i = 0; i < qs.size(); ++i)
        if (malicious[i]) out.push_back({qs[i].score, !*malicious[i]});
    return out;
}

inline SupervisorConfig calibrate_on(const Dataset& validation, QuantifierId q, double epsilon,
                                     CalibrationMode mode = CalibrationMode::above,
                                     double acceptable_imprecision = 0.5, std::size_t threads = 1) {
    const auto qs = quantify_dataset(validation, q, threads);
    const auto scores = calibration_scores(qs, validation.records, acceptable_imprecision);
    return calibrate_threshold(q, scores, epsilon, mode);
}

// Evaluates a fixed config on every record of `test`, annotating the report
// with config and dataset context.
inline EvaluationReport evaluate_on(const SupervisorConfig& config, const Dataset& test,
                                    const EvaluateOptions& opts = {}, std::size_t threads = 1) {
    const auto qs = quantify_dataset(test, config.quantifier, threads);
    EvaluationReport rep = evaluate(config, qs, test.records, opts);
    auto& ctx = rep.context;
    for (const char* key : {"subject", "model", "epoch"})
        if (auto it = test.metadata.find(key); it != test.metadata.end()) ctx[key] = it->second;
    std::optional<std::string> source;
    for (const auto& r : test.records) {
        if (!source)
            source = r.source;
        else if (*source != r.source) {
            source = "mixed";
            break;
        }
    }
    if (source) ctx["source"] = *source;
    if (config.epsilon) ctx["epsilon"] = detail::fmt_g(*config.epsilon);
    ctx["mode"] = std::string(to_string(config.mode));
    return rep;
}

inline PipelineResult run_pipeline(const Dataset& d, const PipelineOptions& opts) {
    const Dataset validation = filter_split(d, Split::validation);
    const Dataset test = filter_split(d, Split::test);
    if (validation.empty()) throw precondition_error("pipeline needs records in the validation split");
    if (test.empty()) throw precondition_error("pipeline needs records in the test split");
    PipelineResult out;
    out.config = calibrate_on(validation, opts.quantifier, opts.epsilon, opts.mode,
                              opts.eval.acceptable_imprecision, opts.threads);
    out.report = evaluate_on(out.config, test, opts.eval, opts.threads);
    return out;
}

} // namespace uqsup
