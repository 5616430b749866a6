// finrank: command-line front end for the finite-rank perturbation lab.
//
// Subcommands: model-gen, verify, sweep, boxdim. Seeded runs are
// reproducible: identical (command, config, seed) produce byte-identical
// outputs (timings are only emitted under --timings).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "finrank/cartography.hpp"
#include "finrank/invariants.hpp"
#include "finrank/model_io.hpp"
#include "finrank/verify.hpp"
#include "finrank/version.hpp"

namespace {

using finrank::Complex;
using finrank::Hermitian;
using finrank::Json;
using finrank::Matrix;

constexpr int kExitPass = 0;
constexpr int kExitInvariantFailure = 1;
constexpr int kExitUsage = 2;

Hermitian hermitian_from_json(const Json& j, Eigen::Index d, const char* what) {
    if (j.contains("diag")) {
        const auto& diag = j["diag"];
        if (!diag.is_array() || diag.size() != static_cast<std::size_t>(d))
            throw finrank::Error(std::string(what) + ": diag must have d entries");
        finrank::RealVector v(d);
        for (Eigen::Index i = 0; i < d; ++i) v(i) = diag[static_cast<std::size_t>(i)].get<double>();
        return Hermitian::FromDiagonal(v);
    }
    if (!j.contains("re") || !j.contains("im"))
        throw finrank::Error(std::string(what) + ": expected {re, im} or {diag}");
    return Hermitian(finrank::detail::matrix_from_parts(j["re"], j["im"], d, d, what));
}

Json hermitian_to_json(const Hermitian& h) {
    return Json{{"re", finrank::detail::matrix_part_to_json(h.mat(), false)},
                {"im", finrank::detail::matrix_part_to_json(h.mat(), true)}};
}

Json parse_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw finrank::Error(std::string(what) + ": cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw finrank::Error(std::string(what) + ": parse error: " + e.what());
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw finrank::Error("cannot open output file " + path);
    out << text;
}

Json suite_report_to_json(const finrank::SuiteReport& report) {
    Json checks = Json::array();
    for (const auto& c : report.checks) {
        Json item{{"name", c.name},
                  {"measured", c.measured},
                  {"threshold", c.threshold},
                  {"pass", c.pass}};
        if (!c.note.empty()) item["note"] = c.note;
        checks.push_back(std::move(item));
    }
    return Json{{"suite", report.suite}, {"pass", report.pass()}, {"checks", std::move(checks)}};
}

struct CommonOptions {
    std::uint64_t seed = 1;
    double tol_atom_merge = 1e-8;
    double tol_rank = 1e-9;
    std::string out;
    unsigned threads = 0;
    bool timings = false;

    finrank::Tolerances tolerances() const {
        finrank::Tolerances tol;
        tol.atom_merge = tol_atom_merge;
        tol.rank_rel = tol_rank;
        tol.validate();
        return tol;
    }
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool with_threads = false) {
    cmd->add_option("--seed", opt.seed, "RNG seed for randomized steps");
    cmd->add_option("--tol-atom-merge", opt.tol_atom_merge, "eigenvalue clustering width");
    cmd->add_option("--tol-rank", opt.tol_rank, "relative singular-value rank cutoff");
    cmd->add_option("--out", opt.out, "output path ('-' for stdout)");
    if (with_threads)
        cmd->add_option("--threads", opt.threads, "worker threads (0 = auto)");
}

int run_model_gen(const std::string& kind, int n, int d, int base_dim, int copies,
                  const std::string& label, const CommonOptions& opt) {
    const auto tol = opt.tolerances();
    Hermitian a;
    Matrix b;
    std::string final_label = label;
    if (kind == "random") {
        if (n < 1 || d < 1) throw finrank::Error("model-gen random: need --n and --d");
        const auto model = finrank::random_model(n, d, opt.seed, tol);
        a = model.a();
        b = model.b();
        if (final_label.empty())
            final_label = "random n=" + std::to_string(n) + " d=" + std::to_string(d);
    } else if (kind == "rank-one") {
        if (n < 1) throw finrank::Error("model-gen rank-one: need --n");
        const auto model = finrank::rank_one_model(n, opt.seed, tol);
        a = model.a();
        b = model.b();
        if (final_label.empty()) final_label = "rank-one n=" + std::to_string(n);
    } else if (kind == "direct-sum") {
        if (base_dim < 1 || copies < 2)
            throw finrank::Error("model-gen direct-sum: need --base-dim and --copies >= 2");
        const auto model = finrank::direct_sum_model(base_dim, copies, opt.seed, tol);
        a = model.a();
        b = model.b();
        if (final_label.empty())
            final_label = "direct-sum base=" + std::to_string(base_dim) +
                          " copies=" + std::to_string(copies);
    } else {
        throw finrank::Error("model-gen: unknown kind " + kind);
    }
    const std::string path = opt.out.empty() ? "model.json" : opt.out;
    finrank::save_model_file(path, a, b, final_label);
    std::cerr << "wrote " << path << "\n";
    return kExitPass;
}

int run_verify(const std::string& model_path, const std::string& suite,
               const std::string& alpha_json, const CommonOptions& opt) {
    const auto tol = opt.tolerances();
    // Permissive load: the orthogonality/a2 suites exercise the non-cyclic
    // negative control, whose verdict must be exit 1, not a load error.
    const auto loaded = finrank::load_model_file(model_path, tol, /*require_cyclic=*/false);
    const auto& model = loaded.model;

    std::vector<Hermitian> alphas;
    if (!alpha_json.empty()) {
        alphas.push_back(
            hermitian_from_json(Json::parse(alpha_json), model.d(), "verify --alpha"));
    } else {
        alphas = finrank::random_alphas(model.d(), opt.seed + 3, 3);
    }

    finrank::SuiteReport report;
    if (suite == "resolvent") {
        if (!model.is_cyclic()) throw finrank::Error("resolvent suite requires a cyclic model");
        report = finrank::run_resolvent_suite(model, opt.seed, tol);
    } else if (suite == "ad-rank-one") {
        report = finrank::run_ad_rank_one_suite(model, opt.seed, tol);
    } else if (suite == "orthogonality") {
        report = finrank::run_orthogonality_suite(model, alphas, tol);
    } else if (suite == "a2") {
        report = finrank::run_a2_suite(model, alphas, tol);
    } else if (suite == "carriers") {
        if (!model.is_cyclic()) throw finrank::Error("carriers suite requires a cyclic model");
        report = finrank::run_carriers_suite(model, opt.seed, tol);
    } else {
        throw finrank::Error("verify: unknown suite " + suite);
    }

    Json j = suite_report_to_json(report);
    j["version"] = finrank::kVersion;
    j["model_hash"] = loaded.hash;
    j["label"] = loaded.label;
    j["cyclic"] = model.is_cyclic();
    j["seed"] = opt.seed;
    j["tolerances"] = finrank::tolerances_to_json(tol);
    write_text(opt.out.empty() ? "-" : opt.out, j.dump(2) + "\n");
    return report.pass() ? kExitPass : kExitInvariantFailure;
}

int run_sweep(const std::string& model_path, const std::string& mode,
              const std::string& spec_path, const std::string& nu_path,
              const CommonOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tol = opt.tolerances();
    const auto loaded = finrank::load_model_file(model_path, tol);  // strict load
    const auto& model = loaded.model;
    const auto nu = finrank::load_nu_file(nu_path, tol);
    const Json spec = parse_json_file(spec_path, "sweep spec");

    const std::string base = opt.out.empty() ? "sweep" : opt.out;
    std::ostringstream csv;
    Json summary;
    summary["version"] = finrank::kVersion;
    summary["model_hash"] = loaded.hash;
    summary["tolerances"] = finrank::tolerances_to_json(tol);
    summary["mode"] = mode;
    summary["seed"] = opt.seed;
    summary["nu"] = finrank::nu_to_json(nu);

    if (mode == "line") {
        finrank::LineSpec line;
        line.alpha0 = spec.contains("alpha0")
                          ? hermitian_from_json(spec["alpha0"], model.d(), "line alpha0")
                          : Hermitian::Zero(model.d());
        line.direction =
            spec.contains("direction")
                ? hermitian_from_json(spec["direction"], model.d(), "line direction")
                : Hermitian::Identity(model.d());
        if (!spec.contains("t_min") || !spec.contains("t_max") || !spec.contains("resolution"))
            throw finrank::Error("line spec needs t_min, t_max, resolution");
        line.t_min = spec["t_min"].get<double>();
        line.t_max = spec["t_max"].get<double>();
        line.resolution = spec["resolution"].get<int>();
        line.validate(tol);  // rejects non-positive-definite directions: exit 2

        const auto hits = finrank::line_exceptional_ts(model, line, nu, tol);
        csv << "t,exceptional,nearest_hit_t\n";
        const double h = (line.t_max - line.t_min) / static_cast<double>(line.resolution - 1);
        std::size_t flagged = 0;
        for (int i = 0; i < line.resolution; ++i) {
            const double t = line.t_min + h * i;
            const Hermitian alpha(line.alpha0.mat() + t * line.direction.mat());
            const bool exceptional =
                finrank::in_extended_exceptional(model, alpha, nu, tol);
            flagged += exceptional ? 1 : 0;
            double nearest = std::numeric_limits<double>::quiet_NaN();
            if (!hits.empty()) {
                nearest = hits.front();
                for (double root : hits)
                    if (std::abs(root - t) < std::abs(nearest - t)) nearest = root;
            }
            csv << finrank::format_double(t) << "," << (exceptional ? 1 : 0) << ","
                << finrank::format_double(nearest) << "\n";
        }
        Json ts = Json::array();
        for (double root : hits) ts.push_back(root);
        summary["exceptional_ts"] = std::move(ts);
        summary["counts"] = Json{{"grid", line.resolution},
                                 {"grid_exceptional", flagged},
                                 {"roots", hits.size()}};
    } else if (mode == "slice") {
        if (!spec.contains("axes")) throw finrank::Error("slice spec needs axes");
        std::vector<Hermitian> axes;
        for (const auto& ax : spec["axes"])
            axes.push_back(hermitian_from_json(ax, model.d(), "slice axis"));
        Hermitian base_pt = spec.contains("base")
                                ? hermitian_from_json(spec["base"], model.d(), "slice base")
                                : Hermitian::Zero(model.d());
        std::vector<std::pair<double, double>> ranges;
        for (const auto& r : spec["ranges"])
            ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
        std::vector<int> counts;
        for (const auto& c : spec["counts"]) counts.push_back(c.get<int>());
        finrank::SliceSpec slice(base_pt, axes, ranges, counts);

        const auto sweep = finrank::slice_sweep(model, slice, nu, tol, opt.threads);
        const std::size_t m = sweep.shape.size();
        for (std::size_t i = 0; i < m; ++i) csv << "c" << i << ",";
        csv << "exceptional\n";
        for (std::size_t idx = 0; idx < sweep.flags.size(); ++idx) {
            std::size_t rem = idx;
            std::vector<double> coords(m);
            for (std::size_t i = m; i-- > 0;) {
                const auto c = static_cast<std::size_t>(sweep.shape[i]);
                coords[i] = sweep.axis_grids[i][rem % c];
                rem /= c;
            }
            for (std::size_t i = 0; i < m; ++i) csv << finrank::format_double(coords[i]) << ",";
            csv << (sweep.flags[idx] ? 1 : 0) << "\n";
        }
        summary["counts"] = Json{{"grid", sweep.flags.size()},
                                 {"exceptional", sweep.exceptional_points.size()}};
        Json pts = Json::array();
        for (const auto& p : sweep.exceptional_points) pts.push_back(p);
        summary["exceptional_points"] = std::move(pts);
    } else {
        throw finrank::Error("sweep: unknown mode " + mode);
    }

    if (opt.timings) {
        summary["runtime_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    write_text(base + ".csv", csv.str());
    write_text(base + ".json", summary.dump(2) + "\n");
    std::cerr << "wrote " << base << ".csv and " << base << ".json\n";
    return kExitPass;
}

int run_boxdim(const std::string& points_path, const std::vector<double>& scales,
               const CommonOptions& opt) {
    std::ifstream in(points_path);
    if (!in) throw finrank::Error("boxdim: cannot open " + points_path);
    std::vector<std::vector<double>> points;
    std::string linebuf;
    while (std::getline(in, linebuf)) {
        if (linebuf.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(linebuf);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                row.push_back(v);
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (numeric && !row.empty()) points.push_back(std::move(row));
        // non-numeric rows (headers) are skipped
    }
    if (points.empty()) throw finrank::Error("boxdim: no numeric rows in " + points_path);

    Json j;
    j["version"] = finrank::kVersion;
    j["tolerances"] = finrank::tolerances_to_json(opt.tolerances());
    try {
        const auto est = finrank::box_counting_dimension(points, scales);
        j["scales"] = est.scales;
        j["counts"] = est.counts;
        j["slope"] = est.slope;
        j["r_squared"] = est.r_squared;
    } catch (const finrank::DegenerateInput&) {
        // All points identical: dimension-0 cloud by convention.
        std::vector<double> sorted = scales;
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        j["scales"] = sorted;
        j["counts"] = std::vector<std::size_t>(sorted.size(), 1);
        j["slope"] = 0.0;
        j["r_squared"] = 1.0;
        j["note"] = "degenerate input: all points identical";
    }
    write_text(opt.out.empty() ? "-" : opt.out, j.dump(2) + "\n");
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finrank: finite-rank self-adjoint perturbation laboratory"};
    app.set_version_flag("--version", finrank::kVersion);
    app.require_subcommand(1);

    CommonOptions gen_opt, verify_opt, sweep_opt, box_opt;

    auto* gen = app.add_subcommand("model-gen", "generate a ModelFile");
    std::string kind = "random", label;
    int n = 0, d = 1, base_dim = 0, copies = 2;
    gen->add_option("--kind", kind, "random | direct-sum | rank-one")->required();
    gen->add_option("--n", n, "ambient dimension (random / rank-one)");
    gen->add_option("--d", d, "perturbation rank (random)");
    gen->add_option("--base-dim", base_dim, "block dimension (direct-sum)");
    gen->add_option("--copies", copies, "number of blocks = d (direct-sum)");
    gen->add_option("--label", label, "optional label stored in the file");
    add_common_flags(gen, gen_opt);

    auto* verify = app.add_subcommand("verify", "run an invariant suite on a model");
    std::string verify_model, suite, alpha_json;
    verify->add_option("model", verify_model, "ModelFile path")->required();
    verify->add_option("--suite", suite,
                       "resolvent | ad-rank-one | orthogonality | a2 | carriers")
        ->required();
    verify->add_option("--alpha", alpha_json,
                       "inline JSON Hermitian parameter ({re,im} or {diag})");
    add_common_flags(verify, verify_opt);

    auto* sweep = app.add_subcommand("sweep", "line or slice sweep of the parameter space");
    std::string sweep_model, mode, spec_path, nu_path;
    sweep->add_option("model", sweep_model, "ModelFile path")->required();
    sweep->add_option("--mode", mode, "line | slice")->required();
    sweep->add_option("--spec", spec_path, "JSON line/slice spec")->required();
    sweep->add_option("--nu", nu_path, "JSON nu atom list")->required();
    sweep->add_flag("--timings", sweep_opt.timings, "include runtime in the summary");
    add_common_flags(sweep, sweep_opt, /*with_threads=*/true);

    auto* box = app.add_subcommand("boxdim", "box-counting dimension of a point cloud");
    std::string points_path;
    std::vector<double> scales;
    box->add_option("points", points_path, "CSV of coordinates")->required();
    box->add_option("--scale", scales, "box size (repeat >= 4 times, spanning >= 2 decades)")
        ->required();
    add_common_flags(box, box_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (*gen) return run_model_gen(kind, n, d, base_dim, copies, label, gen_opt);
        if (*verify) return run_verify(verify_model, suite, alpha_json, verify_opt);
        if (*sweep) return run_sweep(sweep_model, mode, spec_path, nu_path, sweep_opt);
        if (*box) return run_boxdim(points_path, scales, box_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
