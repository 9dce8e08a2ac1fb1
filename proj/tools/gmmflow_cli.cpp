// gmmflow command-line front end.
//
// Subcommands:
//   diagnose      per-pair cost/regime table with method recommendation
//   transport     build a mixture flow, couple, integrate particles, emit CSV
//   bench-table   the 10-scenario cost table (builtin or from a scenario file)
//   bench-runtime staged wall-clock scaling of both methods over dimensions
//   split         path-splitting diagnostics for a single Gaussian pair
//
// Exit codes: 0 success, 2 validation error, 3 numerical error, 4 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmmflow/gmmflow.hpp"

namespace {

using namespace gmmflow;

std::string opt_str(const std::optional<double>& v) {
    return v ? format_full(*v) : std::string();
}

void emit(const std::string& text, const std::string& out_path) {
    std::fputs(text.c_str(), stdout);
    if (!out_path.empty()) save_text(out_path, text);
}

std::vector<std::string> report_header() {
    return {"name", "dim", "rho_hat", "kappa", "dsigma_norm", "comm",
            "w2sq", "c",   "gap",     "err_w", "err_c"};
}

std::vector<std::string> report_fields(const ReportRow& r) {
    return {r.name,
            std::to_string(r.dim),
            format_full(r.rho_hat),
            format_full(r.kappa),
            format_full(r.dsigma_norm),
            format_full(r.comm),
            format_full(r.w2sq),
            format_full(r.c),
            format_full(r.gap),
            format_full(r.err_w),
            format_full(r.err_c)};
}

nlohmann::json report_json(const ReportRow& r) {
    return {{"name", r.name},          {"dim", r.dim},
            {"rho_hat", r.rho_hat},    {"kappa", r.kappa},
            {"dsigma_norm", r.dsigma_norm}, {"comm", r.comm},
            {"w2sq", r.w2sq},          {"c", r.c},
            {"gap", r.gap},            {"err_w", r.err_w},
            {"err_c", r.err_c}};
}

// Paper-style table: two decimals, aligned columns.
std::string pretty_table(const std::vector<ReportRow>& rows) {
    const std::vector<std::string> head = report_header();
    std::vector<std::vector<std::string>> cells;
    cells.push_back(head);
    for (const auto& r : rows) {
        cells.push_back({r.name, std::to_string(r.dim), format_fixed(r.rho_hat),
                         format_fixed(r.kappa), format_fixed(r.dsigma_norm),
                         format_fixed(r.comm), format_fixed(r.w2sq), format_fixed(r.c),
                         format_fixed(r.gap), format_fixed(r.err_w), format_fixed(r.err_c)});
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& row : cells)
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += "  ";
            out += row[i];
            out.append(width[i] - row[i].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

int cmd_diagnose(const std::string& src_path, const std::string& dst_path,
                 const std::string& format, const std::string& out_path,
                 const DiagnoseOptions& opts) {
    std::string note;
    const Gmm src = load_gmm(src_path, &note);
    if (!note.empty()) std::fprintf(stderr, "note: %s: %s\n", src_path.c_str(), note.c_str());
    note.clear();
    const Gmm dst = load_gmm(dst_path, &note);
    if (!note.empty()) std::fprintf(stderr, "note: %s: %s\n", dst_path.c_str(), note.c_str());

    std::vector<DiagnoseRow> rows;
    for (int i = 0; i < src.size(); ++i)
        for (int j = 0; j < dst.size(); ++j)
            rows.push_back(diagnose_pair(i, j, src.component(i), dst.component(j), opts));

    if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json item = report_json(r.base);
            item["src_component"] = r.src_index;
            item["dst_component"] = r.dst_index;
            item["commuting"] = r.commuting;
            if (r.bound_value) item["bound_value"] = *r.bound_value;
            item["min_segments"] = r.min_segments;
            item["recommendation"] = r.recommendation;
            arr.push_back(std::move(item));
        }
        emit(arr.dump(2) + "\n", out_path);
        return 0;
    }

    std::vector<std::string> header = {"src_component", "dst_component"};
    for (const auto& h : report_header()) header.push_back(h);
    header.insert(header.end(), {"commuting", "bound_value", "min_segments", "recommendation"});
    CsvWriter csv(header);
    for (const auto& r : rows) {
        std::vector<std::string> f = {std::to_string(r.src_index), std::to_string(r.dst_index)};
        for (auto& s : report_fields(r.base)) f.push_back(std::move(s));
        f.push_back(r.commuting ? "true" : "false");
        f.push_back(opt_str(r.bound_value));
        f.push_back(std::to_string(r.min_segments));
        f.push_back(r.recommendation);
        csv.add_row(std::move(f));
    }
    emit(csv.str(), out_path);
    return 0;
}

int cmd_transport(const std::string& src_path, const std::string& dst_path,
                  const std::string& method_str, double epsilon, int particles, int steps,
                  std::uint64_t seed, const std::vector<double>& snapshot_times,
                  const std::string& out_dir) {
    const Gmm src = load_gmm(src_path);
    const Gmm dst = load_gmm(dst_path);
    const Method method = method_str == "B" ? Method::B : Method::A;
    const MixtureFlow flow = build_flow(src, dst, method, epsilon);

    const std::string prefix = out_dir.empty() ? "" : out_dir + "/";

    CsvWriter coupling_csv({"src_component", "dst_component", "pi"});
    CsvWriter costs_csv({"src_component", "dst_component", "cost"});
    double total_cost = 0.0;
    for (int i = 0; i < flow.k0; ++i)
        for (int j = 0; j < flow.k1; ++j) {
            coupling_csv.add_row({std::to_string(i), std::to_string(j),
                                  format_full(flow.coupling.plan(i, j))});
            costs_csv.add_row({std::to_string(i), std::to_string(j),
                               format_full(flow.coupling.cost(i, j))});
            total_cost += flow.coupling.plan(i, j) * flow.coupling.cost(i, j);
        }
    coupling_csv.save(prefix + "coupling.csv");
    costs_csv.save(prefix + "pair_costs.csv");

    if (particles > 0) {
        std::vector<double> snaps = snapshot_times;
        if (snaps.empty()) snaps = {0.0, 1.0};
        const ParticleSet start = sample_source(src, particles, seed);
        const IntegrationResult res = integrate(flow, start, IntegratorConfig{steps}, snaps);
        std::vector<std::string> header = {"particle_id", "t"};
        for (int a = 1; a <= flow.dim(); ++a) header.push_back("x_" + std::to_string(a));
        CsvWriter particles_csv(header);
        for (std::size_t s = 0; s < res.snapshots.size(); ++s)
            for (int p = 0; p < particles; ++p) {
                std::vector<std::string> row = {std::to_string(p),
                                                format_full(res.snapshot_times[s])};
                for (int a = 0; a < flow.dim(); ++a)
                    row.push_back(format_full(res.snapshots[s](p, a)));
                particles_csv.add_row(std::move(row));
            }
        particles_csv.save(prefix + "particles.csv");
    }

    std::printf("method=%s marginal_error=%s iterations=%d total_cost=%s\n",
                method_name(method), format_full(flow.coupling.marginal_error).c_str(),
                flow.coupling.iterations_used, format_full(total_cost).c_str());
    return 0;
}

int cmd_bench_table(const std::string& scenarios, const std::string& format,
                    const std::string& out_path) {
    std::vector<GaussianPairScenario> pairs;
    if (scenarios == "builtin") {
        pairs = builtin_table_scenarios();
    } else {
        for (const auto& spec : load_scenarios(scenarios)) pairs.push_back(make_scenario(spec));
    }
    std::vector<ReportRow> rows;
    rows.reserve(pairs.size());
    for (const auto& sc : pairs) rows.push_back(make_report_row(sc.name, sc.src, sc.dst));

    if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) arr.push_back(report_json(r));
        emit(arr.dump(2) + "\n", out_path);
    } else if (format == "table") {
        emit(pretty_table(rows), out_path);
    } else {
        CsvWriter csv(report_header());
        for (const auto& r : rows) csv.add_row(report_fields(r));
        emit(csv.str(), out_path);
    }
    return 0;
}

int cmd_bench_runtime(const std::vector<int>& dims, int scenario, int repeats,
                      std::uint64_t seed, const std::string& out_path) {
    const auto rows = run_runtime_bench(dims, scenario, repeats, 5e-2, seed);
    CsvWriter csv({"dim", "method", "stage", "median_seconds"});
    for (const auto& r : rows)
        csv.add_row({std::to_string(r.dim), method_name(r.method), r.stage,
                     format_full(r.median_seconds)});
    emit(csv.str(), out_path);
    return 0;
}

int cmd_split(const std::string& src_path, const std::string& dst_path, int segments,
              const std::string& format, const std::string& out_path) {
    const Gmm src = load_gmm(src_path);
    const Gmm dst = load_gmm(dst_path);
    if (src.size() != 1 || dst.size() != 1)
        throw ValidationError("split: expects single-component GMM files "
                              "(a single Gaussian pair)");
    const Gaussian& a = src.component(0);
    const Gaussian& b = dst.component(0);
    const int n_min = min_segments(a, b);
    const int n = segments > 0 ? segments : n_min;
    const SplitPlan plan = split_path(a, b, n);
    const SegmentBoundSum sum = segmentwise_bound_sum(plan);

    if (format == "json") {
        nlohmann::json doc;
        doc["min_segments"] = n_min;
        doc["n_segments"] = plan.n_segments;
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& s : plan.per_segment) {
            nlohmann::json item = {{"rho_k", s.rho_hat},
                                   {"delta_norm", s.delta_norm},
                                   {"valid", s.valid},
                                   {"commuting", s.commuting}};
            if (s.b_c) item["b_c"] = *s.b_c;
            if (s.b_w) item["b_w"] = *s.b_w;
            if (s.bound_value) item["bound_value"] = *s.bound_value;
            segs.push_back(std::move(item));
        }
        doc["segments"] = std::move(segs);
        if (sum.total) doc["bound_sum"] = *sum.total;
        doc["invalid_segments"] = sum.invalid_segments;
        emit(doc.dump(2) + "\n", out_path);
        return 0;
    }

    CsvWriter csv({"segment", "rho_k", "delta_norm", "valid", "commuting", "b_c", "b_w",
                   "bound_value"});
    for (int k = 0; k < plan.n_segments; ++k) {
        const GapBound& s = plan.per_segment[static_cast<std::size_t>(k)];
        csv.add_row({std::to_string(k), format_full(s.rho_hat), format_full(s.delta_norm),
                     s.valid ? "true" : "false", s.commuting ? "true" : "false",
                     opt_str(s.b_c), opt_str(s.b_w), opt_str(s.bound_value)});
    }
    emit(csv.str(), out_path);
    if (sum.total) {
        std::fprintf(stderr, "min_segments=%d bound_sum=%s\n", n_min,
                     format_full(*sum.total).c_str());
    } else {
        std::string bad;
        for (int k : sum.invalid_segments) bad += (bad.empty() ? "" : ",") + std::to_string(k);
        std::fprintf(stderr, "min_segments=%d invalid_segments=%s\n", n_min, bad.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free flow matching between Gaussian mixture models"};
    app.require_subcommand(1);

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Per-pair cost and regime diagnostics");
    std::string diag_src, diag_dst, diag_format = "csv", diag_out;
    DiagnoseOptions diag_opts;
    diag->add_option("src", diag_src, "Source GMM JSON file")->required();
    diag->add_option("dst", diag_dst, "Target GMM JSON file")->required();
    diag->add_option("--format", diag_format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    diag->add_option("--out", diag_out, "Also write the output to this file");
    diag->add_option("--rho-max", diag_opts.rho_max, "Locality threshold for recommending A");
    diag->add_option("--comm-max", diag_opts.comm_max,
                     "Commutator threshold for recommending A");
    diag->add_option("--bound-budget", diag_opts.bound_budget,
                     "Largest acceptable cubic bound for recommending A");

    // transport
    auto* tr = app.add_subcommand("transport", "Build a transport flow and move particles");
    std::string tr_src, tr_dst, tr_method = "A", tr_out_dir;
    double tr_eps = 5e-2;
    int tr_particles = 1000, tr_steps = 100;
    std::uint64_t tr_seed = 42;
    std::vector<double> tr_snapshots;
    tr->add_option("src", tr_src, "Source GMM JSON file")->required();
    tr->add_option("dst", tr_dst, "Target GMM JSON file")->required();
    tr->add_option("--method", tr_method, "Pairwise path construction: A or B")
        ->check(CLI::IsMember({"A", "B"}));
    tr->add_option("--epsilon", tr_eps, "Sinkhorn temperature");
    tr->add_option("--particles", tr_particles, "Number of particles (0 disables)");
    tr->add_option("--steps", tr_steps, "RK4 steps");
    tr->add_option("--seed", tr_seed, "Sampling seed");
    tr->add_option("--snapshots", tr_snapshots,
                   "Snapshot times in [0,1] (rounded to the RK4 grid)");
    tr->add_option("--out-dir", tr_out_dir, "Directory for the output CSV files");

    // bench-table
    auto* bt = app.add_subcommand("bench-table", "Cost table across Gaussian scenarios");
    std::string bt_scenarios = "builtin", bt_format = "csv", bt_out;
    bt->add_option("--scenarios", bt_scenarios, "'builtin' or a scenario JSON file");
    bt->add_option("--format", bt_format, "Output format: csv, json or table")
        ->check(CLI::IsMember({"csv", "json", "table"}));
    bt->add_option("--out", bt_out, "Also write the output to this file");

    // bench-runtime
    auto* br = app.add_subcommand("bench-runtime", "Staged runtime scaling over dimension");
    std::vector<int> br_dims = {2, 50, 100, 200, 300};
    int br_scenario = 1, br_repeats = 5;
    std::uint64_t br_seed = 2026;
    std::string br_out;
    br->add_option("--dims", br_dims, "Dimensions to sweep");
    br->add_option("--scenario", br_scenario, "Builtin scenario: 1, 2 or 3")
        ->check(CLI::Range(1, 3));
    br->add_option("--repeats", br_repeats, "Repeats per timing (median is reported)");
    br->add_option("--seed", br_seed, "Scenario seed");
    br->add_option("--out", br_out, "Also write the output to this file");

    // split
    auto* sp = app.add_subcommand("split", "Path-splitting bound for a Gaussian pair");
    std::string sp_src, sp_dst, sp_format = "csv", sp_out;
    int sp_segments = 0;
    sp->add_option("src", sp_src, "Source GMM JSON file (single component)")->required();
    sp->add_option("dst", sp_dst, "Target GMM JSON file (single component)")->required();
    sp->add_option("--segments", sp_segments, "Segment count (default: min_segments)");
    sp->add_option("--format", sp_format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sp->add_option("--out", sp_out, "Also write the output to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (diag->parsed())
            return cmd_diagnose(diag_src, diag_dst, diag_format, diag_out, diag_opts);
        if (tr->parsed())
            return cmd_transport(tr_src, tr_dst, tr_method, tr_eps, tr_particles, tr_steps,
                                 tr_seed, tr_snapshots, tr_out_dir);
        if (bt->parsed()) return cmd_bench_table(bt_scenarios, bt_format, bt_out);
        if (br->parsed())
            return cmd_bench_runtime(br_dims, br_scenario, br_repeats, br_seed, br_out);
        if (sp->parsed()) return cmd_split(sp_src, sp_dst, sp_segments, sp_format, sp_out);
    } catch (const gmmflow::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const gmmflow::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const gmmflow::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const gmmflow::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
