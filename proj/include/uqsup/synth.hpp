#pragma once

// Synthetic recorded outputs for self-tests and demos.
//
// Classification: each input has a true class y and a noise level sigma drawn
// uniformly from [0, noise_max]. Its feature vector is margin * e_y plus
// isotropic Gaussian noise of scale sigma; logits equal the features. Sampled
// models perturb the logits once more per sample with scale
// sample_noise * sigma, so noisier inputs are both misclassified more often and
// more dispersed across samples.
//
// Regression: target y ~ N(0, 1); each sample predicts y + N(0, sigma) with a
// reported per-sample variance sigma^2 when with_variance is set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "uqsup/errors.hpp"
#include "uqsup/records.hpp"

namespace uqsup {

struct SynthOptions {
    Task task = Task::classification;
    std::size_t num_classes = 3;
    std::size_t samples = 1;
    std::size_t n_validation = 500;
    std::size_t n_test = 500;
    double margin = 3.0;
    double noise_max = 3.0;
    double sample_noise = 0.5;
    bool with_variance = false;
    std::string source = "nominal";
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> softmax(std::vector<double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return logits;
}

} // namespace detail

inline Dataset synthesize(const SynthOptions& opts) {
    if (opts.samples < 1) throw precondition_error("synthetic data needs at least one sample per record");
    if (opts.task == Task::classification && opts.num_classes < 2)
        throw precondition_error("synthetic classification needs at least 2 classes");

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_class(0, opts.num_classes - 1);

    Dataset d;
    d.metadata["generator"] = "uqsup-synth";
    d.metadata["seed"] = std::to_string(opts.seed);
    const std::size_t total = opts.n_validation + opts.n_test;
    d.records.reserve(total);

    for (std::size_t i = 0; i < total; ++i) {
        PredictionRecord r;
        r.input_id = "s" + std::to_string(i);
        r.split = i < opts.n_validation ? Split::validation : Split::test;
        r.source = opts.source;
        const double sigma = opts.noise_max * unit(rng);

        if (opts.task == Task::classification) {
            const std::size_t y = pick_class(rng);
            std::vector<double> features(opts.num_classes);
            for (std::size_t c = 0; c < opts.num_classes; ++c)
                features[c] = (c == y ? opts.margin : 0.0) + sigma * gauss(rng);
            for (std::size_t t = 0; t < opts.samples; ++t) {
                std::vector<double> logits = features;
                if (opts.samples > 1)
                    for (double& v : logits) v += opts.sample_noise * sigma * gauss(rng);
                r.outputs.emplace_back(ClassDistribution{detail::softmax(std::move(logits))});
            }
            r.ground_truth = y;
        } else {
            const double target = gauss(rng);
            const double base = target + sigma * gauss(rng);
            for (std::size_t t = 0; t < opts.samples; ++t) {
                RegressionSample s;
                s.value = opts.samples > 1 ? base + opts.sample_noise * sigma * gauss(rng) : base;
                if (opts.with_variance) s.variance = sigma * sigma;
                r.outputs.emplace_back(s);
            }
            r.ground_truth = target;
        }
        d.records.push_back(std::move(r));
    }
    return d;
}

} // namespace uqsup
