#pragma once

// Wall-clock benchmark of the transport-construction pipeline, staged as:
//   cost        - pairwise cost matrix
//   sinkhorn    - entropic coupling of the mixture weights
//   fields      - construction of the pairwise velocity-field paths
//   global-eval - evaluation of the global field u(t,x) at probe points
// ODE integration is excluded on purpose; timings isolate construction.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "gmmflow/mixture.hpp"
#include "gmmflow/scenarios.hpp"
#include "gmmflow/trajectory.hpp"

namespace gmmflow {

struct RuntimeRow {
    int dim = 0;
    Method method = Method::A;
    std::string stage;
    double median_seconds = 0.0;
};

namespace bench_detail {

struct StageSeconds {
    double cost = 0.0;
    double sinkhorn = 0.0;
    double fields = 0.0;
    double global_eval = 0.0;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline StageSeconds time_pipeline(const GmmPair& pair, Method method, double epsilon,
                                  const MatrixXd& probes) {
    using clock = std::chrono::steady_clock;
    StageSeconds out;

    auto t0 = clock::now();
    const MatrixXd cost = cost_matrix(pair.src, pair.dst, method);
    out.cost = seconds_since(t0);

    t0 = clock::now();
    Coupling coupling = sinkhorn(pair.src.weights(), pair.dst.weights(), cost,
                                 SinkhornOptions{epsilon, 5000, 1e-9});
    out.sinkhorn = seconds_since(t0);

    t0 = clock::now();
    MixtureFlow flow;
    flow.method = method;
    flow.k0 = pair.src.size();
    flow.k1 = pair.dst.size();
    flow.coupling = std::move(coupling);
    flow.pair_paths.reserve(static_cast<std::size_t>(flow.k0 * flow.k1));
    for (int i = 0; i < flow.k0; ++i)
        for (int j = 0; j < flow.k1; ++j)
            flow.pair_paths.push_back(
                method == Method::A
                    ? GaussianPath::linear(pair.src.component(i), pair.dst.component(j))
                    : GaussianPath::geodesic(pair.src.component(i), pair.dst.component(j)));
    out.fields = seconds_since(t0);

    t0 = clock::now();
    double sink = 0.0;
    for (double t : {0.25, 0.5, 0.75}) {
        const FlowSnapshot snap = flow_snapshot(flow, t);
        for (Eigen::Index p = 0; p < probes.rows(); ++p)
            sink += snap.velocity(probes.row(p).transpose()).sum();
    }
    out.global_eval = seconds_since(t0);
    // Keep the evaluation loop observable.
    if (!std::isfinite(sink)) throw NumericalError("bench: non-finite field evaluation");
    return out;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace bench_detail

// Medians over `repeats` timed runs per (dim, method, stage).  Runs are
// sequential; the mixtures are K0 = K1 = 2 with the scenario's geometry.
inline std::vector<RuntimeRow> run_runtime_bench(const std::vector<int>& dims,
                                                 int scenario_id, int repeats,
                                                 double epsilon = 5e-2,
                                                 std::uint64_t seed = 2026) {
    if (repeats < 1) throw ValidationError("run_runtime_bench: repeats must be >= 1");
    std::vector<RuntimeRow> rows;
    for (int d : dims) {
        const GmmPair pair = runtime_scenario(scenario_id, d, seed);
        const MatrixXd probes = sample_source(pair.src, 8, seed ^ 0xABCDu).positions;
        for (Method method : {Method::A, Method::B}) {
            std::vector<double> cost_s, sink_s, field_s, eval_s;
            for (int r = 0; r < repeats; ++r) {
                const auto stages = bench_detail::time_pipeline(pair, method, epsilon, probes);
                cost_s.push_back(stages.cost);
                sink_s.push_back(stages.sinkhorn);
                field_s.push_back(stages.fields);
                eval_s.push_back(stages.global_eval);
            }
            rows.push_back({d, method, "cost", bench_detail::median(cost_s)});
            rows.push_back({d, method, "sinkhorn", bench_detail::median(sink_s)});
            rows.push_back({d, method, "fields", bench_detail::median(field_s)});
            rows.push_back({d, method, "global-eval", bench_detail::median(eval_s)});
        }
    }
    return rows;
}

} // namespace gmmflow
