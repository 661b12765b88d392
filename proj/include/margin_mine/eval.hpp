#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "margin_mine/core.hpp"

namespace margin_mine {

using GoldAlignment = std::set<PairKey>;

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t n_pred = 0;
    std::size_t n_gold = 0;
    std::size_t n_correct = 0;

    static EvalReport
    from_counts(std::size_t n_pred, std::size_t n_gold, std::size_t n_correct) {
        EvalReport r;
        r.n_pred = n_pred;
        r.n_gold = n_gold;
        r.n_correct = n_correct;
        r.precision = n_pred == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_pred);
        r.recall = n_gold == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_gold);
        const double pr = r.precision + r.recall;
        r.f1 = pr == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / pr;
        return r;
    }
};

/// Scores predicted pairs against gold pairs by exact key matching.
inline EvalReport
evaluate(const PairSet& pred, const GoldAlignment& gold) {
    if (gold.empty()) {
        throw Error(ErrorCode::EmptyGold, "gold alignment is empty");
    }
    std::size_t correct = 0;
    for (const auto& [key, _] : pred) {
        correct += gold.count(key);
    }
    return EvalReport::from_counts(pred.size(), gold.size(), correct);
}

struct MarginHistogram {
    std::vector<double> bin_edges;  // bins + 1 ascending edges
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    std::size_t clamped = 0;  // scores outside [lo, hi] folded into the edge bins
};

/// Uniform-width histogram of pair scores over [lo, hi] (observed range by
/// default). The last bin is closed on the right.
inline MarginHistogram
histogram(const PairSet& pairs, std::size_t bins, std::optional<std::pair<double, double>> range = std::nullopt) {
    if (bins < 1) {
        throw Error(ErrorCode::InvalidConfig, "histogram needs at least one bin");
    }
    if (pairs.empty()) {
        throw Error(ErrorCode::EmptyPairSet, "cannot histogram an empty pair set");
    }
    double lo = 0.0;
    double hi = 0.0;
    if (range) {
        std::tie(lo, hi) = *range;
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
            throw Error(ErrorCode::InvalidConfig, "histogram range must satisfy lo < hi");
        }
    } else {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const auto& [_, p] : pairs) {
            lo = std::min(lo, p.score);
            hi = std::max(hi, p.score);
        }
        if (lo == hi) {
            hi = lo + 1.0;
        }
    }
    MarginHistogram h;
    h.bin_edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) {
        h.bin_edges[i] = lo + width * static_cast<double>(i);
    }
    h.bin_edges.back() = hi;
    h.counts.assign(bins, 0);
    for (const auto& [_, p] : pairs) {
        std::size_t bin = 0;
        if (p.score < lo) {
            h.clamped++;
        } else if (p.score >= hi) {
            bin = bins - 1;
            if (p.score > hi) {
                h.clamped++;
            }
        } else {
            auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), p.score);
            bin = static_cast<std::size_t>(it - h.bin_edges.begin()) - 1;
            bin = std::min(bin, bins - 1);
        }
        h.counts[bin]++;
        h.total++;
    }
    return h;
}

struct MethodSummary {
    std::string method;
    double mean_delta_f1 = 0.0;  // mean over languages of F1(method) - F1(baseline)
    std::size_t best_count = 0;  // languages where the method attains the top F1
    std::size_t languages = 0;
    std::map<std::string, double> mean_delta_by_level;
};

/// language -> method -> report
using MethodGrid = std::map<std::string, std::map<std::string, EvalReport>>;

/// Per-method F1 deltas against a baseline method plus how often each method
/// is best. `levels` optionally maps language -> resource level for a
/// per-level breakdown.
inline std::vector<MethodSummary>
summarize_methods(const MethodGrid& grid, const std::string& baseline,
                  const std::map<std::string, std::string>* levels = nullptr) {
    std::map<std::string, MethodSummary> rows;
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> level_sums;
    for (const auto& [lang, methods] : grid) {
        auto base = methods.find(baseline);
        if (base == methods.end()) {
            throw Error(ErrorCode::MissingBaseline, "baseline '" + baseline + "' missing for '" + lang + "'");
        }
        double best = -1.0;
        for (const auto& [_, r] : methods) {
            best = std::max(best, r.f1);
        }
        for (const auto& [method, r] : methods) {
            auto& row = rows[method];
            row.method = method;
            const double delta = r.f1 - base->second.f1;
            row.mean_delta_f1 += delta;
            row.languages++;
            if (r.f1 == best) {
                row.best_count++;
            }
            if (levels) {
                if (auto lv = levels->find(lang); lv != levels->end()) {
                    auto& acc = level_sums[method][lv->second];
                    acc.first += delta;
                    acc.second++;
                }
            }
        }
    }
    if (grid.empty()) {
        throw Error(ErrorCode::MissingBaseline, "no results to summarize");
    }
    std::vector<MethodSummary> out;
    for (auto& [method, row] : rows) {
        row.mean_delta_f1 /= static_cast<double>(row.languages);
        for (const auto& [level, acc] : level_sums[method]) {
            row.mean_delta_by_level[level] = acc.first / static_cast<double>(acc.second);
        }
        out.push_back(std::move(row));
    }
    return out;
}

/// Single-language convenience form.
inline std::vector<MethodSummary>
summarize_methods(const std::map<std::string, EvalReport>& reports, const std::string& baseline) {
    return summarize_methods(MethodGrid{{"all", reports}}, baseline);
}

}  // namespace margin_mine
