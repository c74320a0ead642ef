// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "reference_rows.hpp"
#include "uqsup/uqsup.hpp"

using namespace uqsup;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok && pass) detail = "first failure: " + what;
        pass = pass && ok;
    }
};

PredictionRecord cls_record(const oracle::Samples& s, std::string id = "x") {
    PredictionRecord r;
    r.input_id = std::move(id);
    for (const auto& p : s) r.outputs.emplace_back(ClassDistribution{p});
    return r;
}

std::size_t cls_of(const QuantifiedPrediction& q) { return *q.predicted_class(); }

// ---------------------------------------------------------------------------

Outcome s_score_reproduction() {
    Outcome o;
    const auto acc = ObjectiveSpec::accuracy();
    const auto literal = [&](const reference::S1Row& r) {
        return std::abs(s_score(r.acc_bar, r.delta, acc) - r.s1) <= 0.005 + 1e-12;
    };
    std::size_t literal_pass = 0, interval_pass = 0, named = 0;
    for (const auto& r : reference::s1_rows) {
        literal_pass += literal(r);
        // S1 is increasing in both inputs, so the rounding box maps to [lo, hi].
        const double h = 0.005 + 1e-12;
        const double lo = s_score(std::max(0.0, r.acc_bar - h), std::max(0.0, r.delta - h), acc);
        const double hi = s_score(std::min(1.0, r.acc_bar + h), std::min(1.0, r.delta + h), acc);
        const bool consistent = hi >= r.s1 - h && lo <= r.s1 + h;
        interval_pass += consistent;
        o.check(consistent, std::string(r.subject) + "/" + r.model + "/" + r.quantifier + "/" + r.source);

        const std::string q = r.quantifier, subject = r.subject, model = r.model, source = r.source;
        const bool is_named = model == "point" && q == "SM" && source == "nominal" &&
                              ((subject == "Cifar10" && r.epsilon == 0.1) || (subject == "Mnist" && r.epsilon == 0.01));
        if (is_named) {
            ++named;
            o.check(literal(r), "named row " + subject);
        }
    }
    o.check(named == 2, "named rows present");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("named rows within +-0.005; ") +
                std::to_string(interval_pass) + "/" + std::to_string(reference::s1_rows.size()) +
                " rows consistent with two-decimal inputs; " + std::to_string(literal_pass) + "/" +
                std::to_string(reference::s1_rows.size()) + " within +-0.005 from the rounded inputs";
    return o;
}

Outcome quantifier_oracles() {
    Outcome o;
    std::mt19937_64 rng(2);
    std::size_t compared = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t c = 2 + rng() % 3, t = 2 + rng() % 5;
        oracle::Samples s;
        for (std::size_t k = 0; k < t; ++k) s.push_back(gen::coarse_distribution(rng, c));
        const auto point = cls_record({s[0]}), sampled = cls_record(s);
        const std::pair<QuantifiedPrediction, oracle::Out> cases[] = {
            {quantify(point, QuantifierId::SM), oracle::sm(s[0])},
            {quantify(point, QuantifierId::PCS), oracle::pcs(s[0])},
            {quantify(point, QuantifierId::SME), oracle::sme(s[0])},
            {quantify(sampled, QuantifierId::VR), oracle::vr(s)},
            {quantify(sampled, QuantifierId::PE), oracle::pe(s)},
            {quantify(sampled, QuantifierId::MI), oracle::mi(s)},
            {quantify(sampled, QuantifierId::MS), oracle::ms(s)},
        };
        for (const auto& [got, want] : cases) {
            o.check(cls_of(got) == want.cls && std::abs(got.score - want.score) <= 1e-9,
                    "record " + std::to_string(i) + " " + std::string(to_string(got.orientation)));
            ++compared;
        }
    }
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(compared) + " (record, quantifier) pairs vs oracle";
    return o;
}

Outcome calibration_contract() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::lognormal_distribution<double> dist(0.0, 0.75);
    std::vector<double> cal(1000), fresh(10000);
    for (double& x : cal) x = dist(rng);
    for (double& x : fresh) x = dist(rng);
    std::vector<ScoredSample> scores;
    for (double x : cal) scores.push_back({x, true});
    std::vector<ScoredSample> test;
    for (double x : fresh) test.push_back({x, true});

    std::string summary;
    for (double eps : default_epsilons) {
        const auto above = calibrate_threshold(scores, eps, Orientation::uncertainty, CalibrationMode::above);
        const auto want_above = oracle::calibrate_above(cal, eps);
        o.check(above.achieved_fpr == want_above.fpr && above.threshold == want_above.threshold && !above.degenerate,
                "mode=above eps " + detail::fmt_g(eps));
        const auto at_most = calibrate_threshold(scores, eps, Orientation::uncertainty, CalibrationMode::at_most);
        const auto want_at_most = oracle::calibrate_at_most(cal, eps);
        o.check(at_most.achieved_fpr == want_at_most.fpr && at_most.threshold == want_at_most.threshold,
                "mode=at-most eps " + detail::fmt_g(eps));
        const double test_fpr = empirical_fpr(test, Orientation::uncertainty, above.threshold);
        o.check(std::abs(test_fpr - above.achieved_fpr) <= 0.02, "fresh-draw FPR at eps " + detail::fmt_g(eps));
        char buf[96];
        std::snprintf(buf, sizeof buf, "%seps %.2f: cal %.3f test %.4f", summary.empty() ? "" : ", ", eps,
                      above.achieved_fpr, test_fpr);
        summary += buf;
    }
    o.detail += (o.detail.empty() ? "" : "; ") + summary;
    return o;
}

Outcome effectiveness() {
    Outcome o;
    SynthOptions opts;
    opts.n_validation = 2000;
    opts.n_test = 2000;
    opts.seed = 11;
    const Dataset point = synthesize(opts);
    opts.samples = 20;
    const Dataset sampled = synthesize(opts);

    double min_gain_at_01 = 1.0;
    for (auto q : all_quantifiers) {
        if (q == QuantifierId::PRED_VAR || q == QuantifierId::MEAN_VAR) continue;
        const Dataset& d = (q == QuantifierId::SM || q == QuantifierId::PCS || q == QuantifierId::SME) ? point : sampled;
        for (double eps : default_epsilons) {
            PipelineOptions po;
            po.quantifier = q;
            po.epsilon = eps;
            const auto res = run_pipeline(d, po);
            const auto& rep = res.report;
            const std::string tag = std::string(to_string(q)) + " eps " + detail::fmt_g(eps);
            o.check(rep.supervised_objective.has_value(), tag + " defined");
            if (!rep.supervised_objective) continue;
            const double gain = *rep.supervised_objective - *rep.unsupervised_objective;
            o.check(gain >= 0.0, tag + " ACC_bar >= ACC");
            if (eps == 0.1) {
                o.check(gain >= 0.03, tag + " gain >= 0.03");
                min_gain_at_01 = std::min(min_gain_at_01, gain);
            }
        }
    }

    // Uninformative quantifier: every input gets the same score.
    const Dataset val = filter_split(point, Split::validation), test = filter_split(point, Split::test);
    std::vector<QuantifiedPrediction> val_q, test_q;
    for (const auto& r : val.records) val_q.push_back({r.input_id, quantify(r, QuantifierId::SM).predicted, 0.5,
                                                       Orientation::uncertainty});
    for (const auto& r : test.records) test_q.push_back({r.input_id, quantify(r, QuantifierId::SM).predicted, 0.5,
                                                         Orientation::uncertainty});
    bool constant_ok = true;
    for (double eps : default_epsilons) {
        const auto cfg = calibrate_threshold(QuantifierId::PE, calibration_scores(val_q, val.records), eps);
        const auto rep = evaluate(cfg, test_q, test.records);
        constant_ok = constant_ok && rep.supervised_objective == rep.unsupervised_objective;
    }
    o.check(constant_ok, "constant quantifier ACC_bar == ACC");
    char buf[96];
    std::snprintf(buf, sizeof buf, "smallest ACC_bar - ACC at eps 0.1: %.4f; constant quantifier equal: %s", min_gain_at_01,
                  constant_ok ? "yes" : "no");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string(buf);
    return o;
}

Outcome invariant_suites() {
    Outcome o;
    std::mt19937_64 rng(5);
    const int n = 1000;
    int suites = 0;

    // entropy bounds, MI in [0, PE], VR discreteness, sample permutation invariance
    for (int i = 0; i < n; ++i) {
        const std::size_t c = 2 + rng() % 4, t = 2 + rng() % 8;
        oracle::Samples s;
        for (std::size_t k = 0; k < t; ++k) s.push_back(gen::coarse_distribution(rng, c));
        const auto r = cls_record(s);
        const double pe = quantify(r, QuantifierId::PE).score, mi = quantify(r, QuantifierId::MI).score;
        const double sme = quantify(cls_record({s[0]}), QuantifierId::SME).score;
        const double log_c = std::log(static_cast<double>(c));
        o.check(pe >= 0 && pe <= log_c + 1e-12 && sme >= 0 && sme <= log_c + 1e-12, "entropy bounds");
        o.check(mi >= 0 && mi <= pe + 1e-12, "MI in [0, PE]");
        const double vr = quantify(r, QuantifierId::VR).score * static_cast<double>(t);
        o.check(std::abs(vr - std::round(vr)) < 1e-9, "VR multiple of 1/T");
        auto shuffled = s;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto rs = cls_record(shuffled);
        for (auto q : {QuantifierId::VR, QuantifierId::PE, QuantifierId::MI, QuantifierId::MS})
            o.check(std::abs(quantify(r, q).score - quantify(rs, q).score) < 1e-12, "sample permutation");
    }
    suites += 4;

    // monotone-transform decision invariance
    for (int i = 0; i < n; ++i) {
        const double t = std::uniform_real_distribution<double>(-2, 2)(rng);
        SupervisorConfig cfg = manual_config(QuantifierId::PE, t), ecfg = manual_config(QuantifierId::PE, std::exp(t));
        std::vector<QuantifiedPrediction> qs, eq;
        for (int k = 0; k < 30; ++k) {
            const double s = (rng() % 2) ? t : std::uniform_real_distribution<double>(-3, 3)(rng);
            qs.push_back({"i", std::size_t{0}, s, Orientation::uncertainty});
            eq.push_back({"i", std::size_t{0}, std::exp(s), Orientation::uncertainty});
        }
        const auto a = uqsup::apply(cfg, qs), b = uqsup::apply(ecfg, eq);
        for (std::size_t k = 0; k < a.size(); ++k) o.check(a[k].accepted == b[k].accepted, "monotone transform");
    }
    ++suites;

    // TPR + FNR = 1, TNR + FPR = 1
    for (int i = 0; i < n; ++i) {
        std::vector<Decision> d;
        std::vector<std::optional<bool>> m;
        for (int k = 0; k < 20; ++k) {
            d.push_back({"i", static_cast<bool>(rng() % 2), 0.0});
            m.push_back(static_cast<bool>(rng() % 2));
        }
        const auto b = binary_supervisor_metrics(d, m);
        if (b.tpr) o.check(*b.tpr + *b.fnr == 1.0, "TPR + FNR = 1");
        if (b.fpr) o.check(*b.tnr + *b.fpr == 1.0, "TNR + FPR = 1");
    }
    ++suites;

    // rank-sum identity
    for (int i = 0; i < n; ++i) {
        std::vector<RankEntry> e;
        const std::size_t k = 1 + rng() % 9;
        for (std::size_t q = 0; q < k; ++q) e.push_back({"q" + std::to_string(q), "g", (rng() % 4) / 3.0});
        const auto t = rank_order(e);
        double sum = 0;
        for (const auto& row : t.ranks) sum += *row[0];
        o.check(sum == static_cast<double>(k * (k + 1)) / 2.0, "rank-sum identity");
    }
    ++suites;

    // read/write round-trips
    for (int i = 0; i < n; ++i) {
        Dataset d;
        d.metadata["subject"] = "s" + std::to_string(i);
        const std::size_t c = 2 + rng() % 3, t = 1 + rng() % 4;
        for (std::size_t j = 0; j < rng() % 6; ++j) {
            oracle::Samples s;
            for (std::size_t k = 0; k < t; ++k) s.push_back(gen::coarse_distribution(rng, c));
            auto r = cls_record(s, "r" + std::to_string(j));
            if (rng() % 2) r.ground_truth = static_cast<std::size_t>(rng() % c);
            d.records.push_back(r);
        }
        const auto text = io::records_to_string(d);
        o.check(io::records_to_string(io::records_from_string(text)) == text, "record round-trip");

        SupervisorConfig cfg = manual_config(QuantifierId::MI, std::uniform_real_distribution<double>(0, 2)(rng));
        cfg.epsilon = 0.05;
        const auto back = io::config_from_json(io::parse_json(io::config_to_json(cfg).dump(), 0));
        o.check(back.threshold == cfg.threshold && back.epsilon == cfg.epsilon, "config round-trip");
    }
    ++suites;

    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(suites) + " property suites x " + std::to_string(n) +
                " cases";
    return o;
}

Outcome threshold_free_oracles() {
    Outcome o;
    std::mt19937_64 rng(6);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<double> s(n);
        std::vector<bool> pos(n);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = (i % 2) ? static_cast<double>(rng() % 10) : std::uniform_real_distribution<double>(0, 1)(rng);
            pos[k] = rng() % 4 == 0;
        }
        pos[0] = true;
        pos[1] = false;
        std::vector<LabeledScore> ls;
        for (std::size_t k = 0; k < n; ++k) ls.push_back({s[k], pos[k]});
        o.check(std::abs(auroc(ls) - oracle::auroc(s, pos)) <= 1e-12, "AUROC set " + std::to_string(i));
        o.check(std::abs(avgpr(ls) - oracle::avgpr(s, pos)) <= 1e-12, "AVGPR set " + std::to_string(i));
    }
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("500 score sets, n <= 200");
    return o;
}

Outcome sweep_consistency() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::string pairs;
    for (int i = 0; i < 5; ++i) {
        SynthOptions so;
        so.samples = 3 + rng() % 10;
        so.n_validation = 200;
        so.n_test = 200;
        so.seed = rng();
        const Dataset d = synthesize(so);
        const std::size_t s = 2 + rng() % (so.samples - 1);
        PipelineOptions po;
        po.quantifier = std::array{QuantifierId::VR, QuantifierId::PE, QuantifierId::MI, QuantifierId::MS}[rng() % 4];
        po.epsilon = default_epsilons[rng() % default_epsilons.size()];
        const auto sweep = sample_size_sweep(d, po, std::vector<std::size_t>{s}).at(s);

        Dataset truncated = d;
        for (auto& r : truncated.records) r.outputs.erase(r.outputs.begin() + static_cast<long>(s), r.outputs.end());
        const auto direct = run_pipeline(truncated, po);
        const auto same = io::report_to_json(sweep.report).dump() == io::report_to_json(direct.report).dump() &&
                          sweep.config.threshold == direct.config.threshold &&
                          sweep.report.supervised_objective == direct.report.supervised_objective &&
                          sweep.report.auroc == direct.report.auroc;
        o.check(same, "pair " + std::to_string(i));
        pairs += (pairs.empty() ? "" : ", ") + std::string(to_string(po.quantifier)) + " T=" +
                 std::to_string(so.samples) + " s=" + std::to_string(s);
    }
    o.detail += (o.detail.empty() ? "" : "; ") + pairs;
    return o;
}

Outcome sensitivity_machinery() {
    Outcome o;
    Grid flat(10, 12);
    for (auto& c : flat.cells) c = 0.73;
    const auto maps = neighborhood_stats(flat);
    for (const auto& c : maps.stddev.cells) o.check(c && *c == 0.0, "constant grid std");

    std::mt19937_64 rng(8);
    Grid mean(10, 12), stddev(10, 12);
    for (std::size_t i = 0; i < mean.cells.size(); ++i) {
        mean.cells[i] = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
        stddev.cells[i] = 0.5 - 0.4 * *mean.cells[i];
    }
    const auto corr = sensitivity_correlation(mean, stddev);
    o.check(std::abs(corr.r + 1.0) <= 1e-9, "linear grid r");
    char buf[64];
    std::snprintf(buf, sizeof buf, "constant grid std 0; r = %.12f", corr.r);
    o.detail += (o.detail.empty() ? "" : "; ") + std::string(buf);
    return o;
}

} // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"S-score arithmetic reproduction", s_score_reproduction},
        {"quantifier oracle equivalence", quantifier_oracles},
        {"calibration contract", calibration_contract},
        {"effectiveness on informative synthetic data", effectiveness},
        {"invariant suites", invariant_suites},
        {"threshold-free metric oracles", threshold_free_oracles},
        {"sweep consistency", sweep_consistency},
        {"sensitivity machinery", sensitivity_machinery},
    };
    bool all = true;
    int id = 1;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s) [%.2fs]: %s\n", o.pass ? "PASS" : "FAIL", id++, name, secs,
                    o.detail.c_str());
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
