#pragma once

// Straight-from-definition reference implementations used only by the tests.
// They deliberately share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using Dist = std::vector<double>;
using Samples = std::vector<Dist>;

inline std::size_t first_argmax(const Dist& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// H(p) = -sum p log p, skipping zero entries (0 log 0 = 0).
inline double entropy(const Dist& p) {
    long double h = 0;
    for (double x : p)
        if (x != 0.0) h += -static_cast<long double>(x) * std::log(static_cast<long double>(x));
    return static_cast<double>(h);
}

inline Dist column_mean(const Samples& s) {
    Dist m(s.front().size());
    for (std::size_t c = 0; c < m.size(); ++c) {
        long double acc = 0;
        for (const auto& d : s) acc += d[c];
        m[c] = static_cast<double>(acc / s.size());
    }
    return m;
}

struct Out {
    std::size_t cls;
    double score;
};

inline Out sm(const Dist& p) { return {first_argmax(p), p[first_argmax(p)]}; }

inline Out pcs(const Dist& p) {
    Dist sorted = p;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return {first_argmax(p), sorted[0] - sorted[1]};
}

inline Out sme(const Dist& p) { return {first_argmax(p), entropy(p)}; }

inline Out vr(const Samples& s) {
    std::map<std::size_t, std::size_t> votes;
    for (const auto& d : s) votes[first_argmax(d)]++;
    std::size_t mode = 0, best = 0;
    for (auto [cls, n] : votes) // ascending class order: strict > keeps lowest index on ties
        if (n > best) {
            best = n;
            mode = cls;
        }
    std::size_t disagree = 0;
    for (const auto& d : s)
        if (first_argmax(d) != mode) ++disagree;
    return {mode, static_cast<double>(disagree) / static_cast<double>(s.size())};
}

inline Out pe(const Samples& s) {
    const Dist m = column_mean(s);
    return {first_argmax(m), entropy(m)};
}

inline Out mi(const Samples& s) {
    const Dist m = column_mean(s);
    long double mean_h = 0;
    for (const auto& d : s) mean_h += entropy(d);
    mean_h /= s.size();
    return {first_argmax(m), entropy(m) - static_cast<double>(mean_h)};
}

inline Out ms(const Samples& s) {
    Dist sums(s.front().size(), 0.0);
    for (std::size_t c = 0; c < sums.size(); ++c)
        for (const auto& d : s) sums[c] += d[c];
    const std::size_t k = first_argmax(sums);
    long double avg = 0;
    for (const auto& d : s) avg += d[k];
    return {k, static_cast<double>(avg / s.size())};
}

// Pairwise AUROC: P(pos > neg) + 0.5 P(pos == neg).
inline double auroc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    long double wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1;
            else if (scores[i] == scores[j])
                wins += 0.5L;
        }
    }
    return static_cast<double>(wins / pairs);
}

// Average precision by sweeping every distinct observed score as a threshold
// (score >= t flagged positive) in descending order, recomputing counts from scratch.
inline double avgpr(const std::vector<double>& scores, const std::vector<bool>& positive) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t total_pos = 0;
    for (bool p : positive) total_pos += p;
    double prev_recall = 0.0, ap = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, flagged = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= t) {
                ++flagged;
                tp += positive[i];
            }
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(flagged);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// (M1 - M0) / s_pop * sqrt(p q) for a 0/1 variable.
inline double point_biserial(const std::vector<double>& binary, const std::vector<double>& y) {
    double m1 = 0, m0 = 0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (binary[i] != 0.0) {
            m1 += y[i];
            ++n1;
        } else {
            m0 += y[i];
            ++n0;
        }
    m1 /= n1;
    m0 /= n0;
    double mean = 0;
    for (double v : y) mean += v;
    mean /= y.size();
    double var = 0;
    for (double v : y) var += (v - mean) * (v - mean);
    const double s = std::sqrt(var / y.size());
    const double p = static_cast<double>(n1) / y.size();
    return (m1 - m0) / s * std::sqrt(p * (1 - p));
}

// Brute-force calibration over uncertainty scores: enumerate every candidate
// threshold (each observed score and +inf), compute its FPR by counting.
struct Calib {
    double threshold;
    double fpr;
    bool fallback;
};

inline std::vector<std::pair<double, double>> candidate_fprs(const std::vector<double>& benign) {
    std::vector<double> cands = benign;
    cands.push_back(std::numeric_limits<double>::infinity());
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    std::vector<std::pair<double, double>> out;
    for (double t : cands) {
        std::size_t rejected = 0;
        for (double u : benign)
            if (!(u < t)) ++rejected;
        out.emplace_back(t, static_cast<double>(rejected) / benign.size());
    }
    return out;
}

inline Calib calibrate_above(const std::vector<double>& benign, double eps) {
    std::optional<std::pair<double, double>> best, largest_below_one;
    for (auto [t, f] : candidate_fprs(benign)) {
        if (f >= 1.0) continue;
        if (f >= eps && (!best || f < best->second)) best = {t, f};
        if (!largest_below_one || f > largest_below_one->second) largest_below_one = {t, f};
    }
    if (best) return {best->first, best->second, false};
    return {largest_below_one->first, largest_below_one->second, true};
}

inline Calib calibrate_at_most(const std::vector<double>& benign, double eps) {
    std::optional<std::pair<double, double>> best;
    for (auto [t, f] : candidate_fprs(benign))
        if (f < 1.0 && f <= eps && (!best || f > best->second)) best = {t, f};
    return {best->first, best->second, false};
}

} // namespace oracle

namespace gen {

// Coarse-grid probability vector: integer weights 0..grid, renormalized.
inline std::vector<double> coarse_distribution(std::mt19937_64& rng, std::size_t c, int grid = 10) {
    std::uniform_int_distribution<int> w(0, grid);
    std::vector<int> weights(c);
    int total = 0;
    while (total == 0) {
        total = 0;
        for (auto& x : weights) {
            x = w(rng);
            total += x;
        }
    }
    std::vector<double> p(c);
    for (std::size_t i = 0; i < c; ++i) p[i] = static_cast<double>(weights[i]) / total;
    return p;
}

} // namespace gen
