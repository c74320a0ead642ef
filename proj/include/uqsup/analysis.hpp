#pragma once

// Study-level analyses: rank-order comparison of quantifiers by S1,
// sample-count sweeps, and neighborhood sensitivity over hyperparameter grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "uqsup/errors.hpp"
#include "uqsup/pipeline.hpp"

namespace uqsup {

// ---------------------------------------------------------------------------
// Rank order

struct RankEntry {
    std::string row;   // quantifier, optionally with a model-type tag
    std::string group; // e.g. "cifar10/nominal/0.01"
    double s1 = 0.0;
};

struct RankTable {
    std::vector<std::string> rows;    // first-appearance order
    std::vector<std::string> columns; // first-appearance order
    std::vector<std::vector<std::optional<double>>> ranks; // [row][column]
    std::vector<double> average_rank;
    std::vector<std::size_t> n; // groups each row was ranked in
};

// Higher S1 ranks better (1). Ties share the mean of their rank positions.
inline RankTable rank_order(std::span<const RankEntry> results) {
    if (results.empty()) throw precondition_error("rank_order needs at least one result");
    RankTable table;
    std::map<std::string, std::size_t> row_index, col_index;
    for (const auto& e : results) {
        if (row_index.try_emplace(e.row, table.rows.size()).second) table.rows.push_back(e.row);
        if (col_index.try_emplace(e.group, table.columns.size()).second) table.columns.push_back(e.group);
    }
    table.ranks.assign(table.rows.size(), std::vector<std::optional<double>>(table.columns.size()));

    std::vector<std::vector<std::pair<double, std::size_t>>> by_group(table.columns.size());
    for (const auto& e : results) {
        const std::size_t r = row_index[e.row], c = col_index[e.group];
        if (table.ranks[r][c])
            throw precondition_error("duplicate result for '" + e.row + "' in group '" + e.group + "'");
        table.ranks[r][c] = 0.0; // placeholder marking presence
        by_group[c].emplace_back(e.s1, r);
    }

    for (std::size_t c = 0; c < by_group.size(); ++c) {
        auto& g = by_group[c];
        std::stable_sort(g.begin(), g.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; i < g.size();) {
            std::size_t j = i;
            while (j < g.size() && g[j].first == g[i].first) ++j;
            const double mid = static_cast<double>(i + 1 + j) / 2.0; // positions i+1..j
            for (std::size_t k = i; k < j; ++k) table.ranks[g[k].second][c] = mid;
            i = j;
        }
    }

    table.average_rank.assign(table.rows.size(), 0.0);
    table.n.assign(table.rows.size(), 0);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        double sum = 0.0;
        for (const auto& cell : table.ranks[r])
            if (cell) {
                sum += *cell;
                ++table.n[r];
            }
        table.average_rank[r] = sum / static_cast<double>(table.n[r]);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Sample-size sweep

// For each size s: truncate every record to its first s samples, recalibrate
// on the validation split and evaluate on the test split.
inline std::map<std::size_t, PipelineResult> sample_size_sweep(const Dataset& d, const PipelineOptions& opts,
                                                               std::span<const std::size_t> sizes) {
    std::size_t t_max = std::numeric_limits<std::size_t>::max();
    for (const auto& r : d.records) t_max = std::min(t_max, r.outputs.size());
    for (std::size_t s : sizes) {
        if (s < 2) throw precondition_error("sweep sizes must be >= 2, got " + std::to_string(s));
        if (!d.empty() && s > t_max)
            throw precondition_error("sweep size " + std::to_string(s) + " exceeds T_max=" + std::to_string(t_max));
    }
    std::map<std::size_t, PipelineResult> out;
    for (std::size_t s : sizes) out.emplace(s, run_pipeline(truncate_samples(d, s), opts));
    return out;
}

// ---------------------------------------------------------------------------
// Grids

// Row-major rectangular grid; nullopt cells are holes.
struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::optional<double>> cells;

    Grid() = default;
    Grid(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c) {}

    std::optional<double>& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
    const std::optional<double>& at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
    bool operator==(const Grid&) const = default;
};

// Metric values over axis1 (e.g. training epoch) x axis2 (e.g. sample count).
struct SweepGrid {
    std::vector<long> axis1;
    std::vector<long> axis2;
    Grid values;
    std::string metric = "supervised_objective";
    std::map<std::string, std::string> metadata;

    bool operator==(const SweepGrid&) const = default;
};

struct NeighborhoodMaps {
    Grid mean;
    Grid stddev;
};

// Mean and population std over the window x window neighborhood of each
// cell. Windows are truncated at the border; holes are skipped.
inline NeighborhoodMaps neighborhood_stats(const Grid& grid, std::size_t window = 5) {
    if (window < 3 || window % 2 == 0) throw precondition_error("window must be odd and >= 3");
    if (grid.rows < window || grid.cols < window)
        throw precondition_error("grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                                 " is smaller than the " + std::to_string(window) + "x" + std::to_string(window) +
                                 " window");
    const long half = static_cast<long>(window / 2);
    NeighborhoodMaps out{Grid(grid.rows, grid.cols), Grid(grid.rows, grid.cols)};
    std::vector<double> vals;
    for (long r = 0; r < static_cast<long>(grid.rows); ++r) {
        for (long c = 0; c < static_cast<long>(grid.cols); ++c) {
            vals.clear();
            for (long dr = -half; dr <= half; ++dr)
                for (long dc = -half; dc <= half; ++dc) {
                    const long rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(grid.rows) || cc >= static_cast<long>(grid.cols))
                        continue;
                    if (const auto& v = grid.at(rr, cc)) vals.push_back(*v);
                }
            if (vals.empty()) continue;
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            // Rounding can nudge the mean outside the value range of a constant window.
            const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
            mean = std::clamp(mean, *lo, *hi);
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            out.mean.at(r, c) = mean;
            out.stddev.at(r, c) = std::sqrt(ss / static_cast<double>(vals.size()));
        }
    }
    return out;
}

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

inline double two_sided_p_value(double r, std::size_t n) {
    if (n < 3) throw precondition_error("p-value needs n >= 3");
    if (std::abs(r) >= 1.0) return 0.0;
    const double dof = static_cast<double>(n - 2);
    const double t = std::abs(r) * std::sqrt(dof / (1.0 - r * r));
    boost::math::students_t dist(dof);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

// Pearson correlation over cells present in both grids, with a two-sided
// t-test p-value on n - 2 degrees of freedom.
inline Correlation sensitivity_correlation(const Grid& a, const Grid& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw precondition_error("grids are not congruent");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < a.cells.size(); ++i)
        if (a.cells[i] && b.cells[i]) {
            x.push_back(*a.cells[i]);
            y.push_back(*b.cells[i]);
        }
    if (x.size() < 3) throw undefined_metric_error("undefined correlation: fewer than 3 paired cells");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw undefined_metric_error("undefined correlation: zero variance");
    Correlation out;
    out.n = x.size();
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    out.p_value = two_sided_p_value(out.r, out.n);
    return out;
}

// Stacks single-row (or multi-row) grids sharing axis2 into one grid ordered
// by axis1. Duplicate axis1 values are rejected.
inline SweepGrid merge_rows(std::span<const SweepGrid> parts) {
    if (parts.empty()) throw precondition_error("no grids to merge");
    SweepGrid out;
    out.axis2 = parts.front().axis2;
    out.metric = parts.front().metric;
    out.metadata = parts.front().metadata;
    std::map<long, std::vector<std::optional<double>>> rows;
    for (const auto& g : parts) {
        if (g.axis2 != out.axis2) throw precondition_error("grids disagree on axis2");
        for (std::size_t r = 0; r < g.axis1.size(); ++r) {
            std::vector<std::optional<double>> row(g.values.cols);
            for (std::size_t c = 0; c < g.values.cols; ++c) row[c] = g.values.at(r, c);
            if (!rows.emplace(g.axis1[r], std::move(row)).second)
                throw precondition_error("duplicate axis1 value " + std::to_string(g.axis1[r]));
        }
    }
    out.values = Grid(rows.size(), out.axis2.size());
    std::size_t r = 0;
    for (auto& [key, row] : rows) {
        out.axis1.push_back(key);
        for (std::size_t c = 0; c < row.size(); ++c) out.values.at(r, c) = row[c];
        ++r;
    }
    return out;
}

} // namespace uqsup
