#pragma once

// Per-pair diagnostic rows matching the benchmark table layout: regime
// indicators, both costs, the signed gap, and the distances of each cost from
// its shared quadratic expansion.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gmmflow/bounds.hpp"
#include "gmmflow/gaussian.hpp"
#include "gmmflow/spd.hpp"

namespace gmmflow {

struct ReportRow {
    std::string name;
    int dim = 0;
    double rho_hat = 0.0;
    double kappa = 0.0;
    double dsigma_norm = 0.0;
    double comm = 0.0;
    double w2sq = 0.0;
    double c = 0.0;
    double gap = 0.0;   // c - w2sq, signed
    double err_w = 0.0; // |w2sq - (||dmu||^2 + Q)|
    double err_c = 0.0; // |c - (||dmu||^2 + Q)|
};

inline ReportRow make_report_row(const std::string& name, const Gaussian& src,
                                 const Gaussian& dst) {
    const SymMatrix delta(dst.cov.entries() - src.cov.entries());
    const RegimeIndicators ind = regime_indicators(src.cov, delta);
    const WhitenedPerturbation wp = whitened_perturbation(src.cov, delta);
    const PairCostReport costs = pair_report(src, dst);
    ReportRow row;
    row.name = name;
    row.dim = src.dim();
    row.rho_hat = wp.rho_hat;
    row.kappa = ind.kappa;
    row.dsigma_norm = ind.delta_norm;
    row.comm = ind.comm;
    row.w2sq = costs.w2_total;
    row.c = costs.surrogate_total;
    row.gap = costs.gap;
    const double expansion = costs.mean_term + costs.quadratic_proxy;
    row.err_w = std::abs(costs.w2_total - expansion);
    row.err_c = std::abs(costs.surrogate_total - expansion);
    return row;
}

// Diagnose output: a ReportRow per component pair plus the regime
// recommendation and the splitting requirement.
struct DiagnoseRow {
    ReportRow base;
    int src_index = 0;
    int dst_index = 0;
    bool commuting = false;
    std::optional<double> bound_value; // absent when rho_hat >= 1
    int min_segments = 1;
    std::string recommendation; // "A" or "B"
};

struct DiagnoseOptions {
    double rho_max = 1.0;
    double comm_max = 0.05;
    // Bound budget; bound_value above this forces "B".  Infinite by default.
    double bound_budget = std::numeric_limits<double>::infinity();
};

inline DiagnoseRow diagnose_pair(int i, int j, const Gaussian& src, const Gaussian& dst,
                                 const DiagnoseOptions& opts = {}) {
    DiagnoseRow row;
    row.src_index = i;
    row.dst_index = j;
    row.base = make_report_row("pair(" + std::to_string(i) + "," + std::to_string(j) + ")",
                               src, dst);
    const GapBound bound = cubic_gap_bound(src, dst);
    row.commuting = bound.commuting;
    row.bound_value = bound.bound_value;
    row.min_segments = min_segments(src, dst);
    const bool local = row.base.rho_hat < opts.rho_max;
    const bool commuting_enough = row.base.comm < opts.comm_max;
    const bool affordable =
        bound.bound_value.has_value() && *bound.bound_value <= opts.bound_budget;
    row.recommendation = (local && commuting_enough && affordable) ? "A" : "B";
    return row;
}

} // namespace gmmflow
