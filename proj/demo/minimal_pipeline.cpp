// Generates a small MC-Dropout-like dataset, calibrates every sampled-classifier
// quantifier at the default epsilons and prints the supervised metrics.

#include <iostream>

#include "uqsup/uqsup.hpp"

int main() {
    uqsup::SynthOptions opts;
    opts.samples = 20;
    opts.seed = 7;
    const uqsup::Dataset data = uqsup::synthesize(opts);

    std::vector<uqsup::EvaluationReport> reports;
    for (auto q : {uqsup::QuantifierId::VR, uqsup::QuantifierId::PE, uqsup::QuantifierId::MI,
                   uqsup::QuantifierId::MS}) {
        for (double eps : uqsup::default_epsilons) {
            uqsup::PipelineOptions p;
            p.quantifier = q;
            p.epsilon = eps;
            reports.push_back(uqsup::run_pipeline(data, p).report);
        }
    }
    std::cout << uqsup::io::report_table(reports);
}
