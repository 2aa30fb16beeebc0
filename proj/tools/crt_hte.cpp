// crt-hte: power, sample size and Monte Carlo verification for parallel
// cluster randomized trials designed to detect treatment-effect
// heterogeneity with the ICC left out of the calculation.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "crthte/casestudy.hpp"
#include "crthte/io.hpp"
#include "crthte/power.hpp"
#include "crthte/randomization.hpp"
#include "crthte/sim.hpp"
#include "crthte/stats.hpp"
#include "crthte/tables.hpp"
#include "crthte/types.hpp"

namespace {

using crthte::Error;
using crthte::ErrorCode;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::EnumerationTooLarge:
        case ErrorCode::NoRootInBracket:
            return 3;
        default:
            return 2;
    }
}

int default_threads() {
    if (const char* env = std::getenv("CRT_HTE_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

struct CsvFile {
    std::ofstream out;

    CsvFile(const std::string& path, const std::string& manifest_hash) {
        out.open(path, std::ios::binary);  // LF line endings everywhere
        if (!out) {
            crthte::fail(ErrorCode::IoError, "cannot write " + path);
        }
        out << "# manifest=" << manifest_hash << "\n";
    }

    void header(const std::vector<std::string>& cols) { row_strings(cols); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(crthte::format_double(v));
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ",";
            out << cells[i];
        }
        out << "\n";
    }

    void comment(const std::string& text) { out << "# " << text << "\n"; }
};

void finish_manifest(crthte::RunManifest& manifest, const std::string& explicit_path,
                     std::chrono::steady_clock::time_point start) {
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::string path = explicit_path;
    if (path.empty()) {
        path = manifest.outputs.empty() ? manifest.command + ".manifest.json"
                                        : manifest.outputs.front() + ".manifest.json";
    }
    manifest.write(path);
}

crthte::TrialDesign load_and_validate(const std::string& config) {
    auto design = crthte::load_design(config);
    const auto report = crthte::validate_design(design);
    if (!report.ok()) {
        crthte::fail(report.violations.front().code, report.summary());
    }
    return design;
}

// Method resolution for psi: exact under the cap, otherwise the series when
// the arms are balanced, otherwise sampling.
crthte::PsiEstimate resolve_psi(const crthte::TrialDesign& design,
                                const std::string& method, std::int64_t cap,
                                int replicates, std::uint64_t seed) {
    const int I = design.clusters.count();
    if (method == "exact") return crthte::psi_exact(design.clusters, design.i1, cap);
    if (method == "series") return crthte::psi_approx(design.clusters);
    if (method == "sampled") {
        return crthte::psi_sampled(design.clusters, design.i1, replicates, seed);
    }
    if (crthte::assignment_count(I, design.i1, cap) <= cap) {
        return crthte::psi_exact(design.clusters, design.i1, cap);
    }
    if (design.i1 * 2 == I && I >= 4) return crthte::psi_approx(design.clusters);
    return crthte::psi_sampled(design.clusters, design.i1, replicates, seed);
}

json psi_to_json(const crthte::PsiEstimate& psi) {
    json j;
    j["value"] = psi.value;
    j["method"] = crthte::psi_method_name(psi.method);
    j["cv2"] = psi.cv2;
    j["kurtosis"] = psi.kurtosis;
    j["assignments_evaluated"] = psi.assignments_evaluated;
    if (psi.method == crthte::PsiMethod::Sampled) j["std_error"] = psi.std_error;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommand state
// ---------------------------------------------------------------------------
struct CommonOpts {
    std::string config;
    std::string out;
    std::string manifest_path;
    std::uint64_t seed = 20240809;
    int threads = default_threads();
};

int cmd_psi(const CommonOpts& common, const std::string& method,
            std::int64_t cap, int replicates) {
    const auto start = std::chrono::steady_clock::now();
    const auto design = load_and_validate(common.config);
    const auto psi = resolve_psi(design, method, cap, replicates, common.seed);

    crthte::RunManifest manifest;
    manifest.command = "psi";
    manifest.config_path = common.config;
    manifest.seed = common.seed;
    manifest.resolved_params = {{"design", crthte::design_to_json(design)},
                                {"method", method},
                                {"cap", cap},
                                {"replicates", replicates}};

    json report = psi_to_json(psi);
    report["command"] = "psi";
    report["manifest_hash"] = manifest.hash();
    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return 0;
}

int cmd_power(const CommonOpts& common, std::vector<double> deltas,
              double alpha, std::string method, const std::string& sweep,
              const std::string& psi_method) {
    const auto start = std::chrono::steady_clock::now();
    const auto design = load_and_validate(common.config);
    const auto psi = resolve_psi(design, psi_method, crthte::kDefaultEnumerationCap,
                                 100000, common.seed);
    const int p = design.subgroups.p();
    if (method.empty()) method = (p == 1) ? "wald" : "chisq";
    if (deltas.empty()) {
        crthte::fail(ErrorCode::DomainError, "--delta is required");
    }

    crthte::RunManifest manifest;
    manifest.command = "power";
    manifest.config_path = common.config;
    manifest.seed = common.seed;
    manifest.resolved_params = {{"design", crthte::design_to_json(design)},
                                {"delta", deltas},
                                {"alpha", alpha},
                                {"method", method},
                                {"psi_method", psi_method},
                                {"sweep", sweep}};

    const auto power_at = [&](const std::vector<double>& d) {
        if (method == "wald") {
            if (p != 1) {
                crthte::fail(ErrorCode::NotUnivariate,
                             "--method wald requires a single subgroup");
            }
            return crthte::power_wald_1d(design, psi.value, d[0], alpha);
        }
        return crthte::power_chisq(design, psi.value, d, alpha);
    };

    json report;
    report["command"] = "power";
    report["psi"] = psi_to_json(psi);
    report["method"] = method;
    report["alpha"] = alpha;
    report["power"] = power_at(deltas);
    report["manifest_hash"] = manifest.hash();

    if (!sweep.empty()) {
        double lo = 0, hi = 0, step = 0;
        if (std::sscanf(sweep.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
            step <= 0 || hi < lo) {
            crthte::fail(ErrorCode::DomainError, "--sweep expects lo:hi:step");
        }
        const std::string path =
            common.out.empty() ? "power_sweep.csv" : common.out;
        manifest.outputs.push_back(path);
        CsvFile csv(path, manifest.hash());
        csv.header({"delta", "power"});
        std::vector<double> d = deltas;
        for (double x = lo; x <= hi + 1e-12; x += step) {
            for (auto& di : d) di = x;
            csv.row({x, power_at(d)});
        }
        report["sweep_csv"] = path;
    }

    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return 0;
}

int cmd_samplesize(const CommonOpts& common, double delta, double alpha,
                   double target_power, std::int64_t multiple,
                   const std::string& round_mode, const std::string& psi_method) {
    const auto start = std::chrono::steady_clock::now();
    const auto design = load_and_validate(common.config);
    if (design.subgroups.p() != 1) {
        crthte::fail(ErrorCode::NotUnivariate, "samplesize requires p = 1");
    }
    const auto psi = resolve_psi(design, psi_method, crthte::kDefaultEnumerationCap,
                                 100000, common.seed);
    const auto mode = round_mode == "up" ? crthte::RoundingMode::Up
                                         : crthte::RoundingMode::Nearest;
    const double theta = design.subgroups.theta[0];
    const int I = design.clusters.count();
    const auto size = crthte::min_avg_cluster_size(
        delta, theta, design.sigma_eps, I, psi.value, alpha, target_power,
        multiple, mode);

    // Predicted power at the rounded size; psi is scale-free so only the
    // total I*mbar changes.
    const double se2 = psi.value * design.sigma_eps * design.sigma_eps /
                       (static_cast<double>(I) * size.rounded * theta *
                        (1.0 - theta));
    const double predicted = crthte::normal_cdf(
        crthte::normal_quantile(alpha / 2) + std::abs(delta) / std::sqrt(se2));

    crthte::RunManifest manifest;
    manifest.command = "samplesize";
    manifest.config_path = common.config;
    manifest.seed = common.seed;
    manifest.resolved_params = {{"design", crthte::design_to_json(design)},
                                {"delta", delta},
                                {"alpha", alpha},
                                {"target_power", target_power},
                                {"multiple", multiple},
                                {"round_mode", round_mode},
                                {"psi_method", psi_method}};

    json report;
    report["command"] = "samplesize";
    report["m_bar_raw"] = size.raw;
    report["m_bar"] = size.rounded;
    report["predicted_power"] = predicted;
    report["psi"] = psi_to_json(psi);
    report["manifest_hash"] = manifest.hash();
    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return 0;
}

int cmd_dropout(const CommonOpts& common, double rate, double delta,
                double alpha, double target_power, double theta, int q,
                double sigma_eps, std::int64_t multiple,
                const std::string& solver_bracket,
                const std::string& power_bracket) {
    const auto start = std::chrono::steady_clock::now();
    if (multiple == 0) {
        multiple = 1;
        if (rate == 0.2) multiple = 10;
        if (rate == 0.25) multiple = 4;
        if (rate == 0.3) multiple = 20;
    }
    const double psi = crthte::psi_approx(crthte::build_simulation_pattern(q, 20.0)).value;
    const double inv_sum = crthte::pattern_inverse_size_sum(q);
    const int I = 8 * q;

    const auto bracket_of = [](const std::string& name) {
        if (name == "full") return crthte::DropoutBracket::FullCorrection;
        if (name == "halved") return crthte::DropoutBracket::HalvedCorrection;
        crthte::fail(ErrorCode::DomainError, "bracket must be full or halved");
    };

    const auto size = crthte::dropout_min_size(
        {rate}, delta, theta, sigma_eps, I, psi, inv_sum, alpha, target_power,
        multiple, bracket_of(solver_bracket));
    const double predicted = crthte::dropout_power(
        {rate}, static_cast<double>(size.rounded), delta, theta, sigma_eps, I,
        psi, inv_sum, alpha, bracket_of(power_bracket));

    crthte::RunManifest manifest;
    manifest.command = "dropout";
    manifest.seed = common.seed;
    manifest.resolved_params = {{"rate", rate},
                                {"delta", delta},
                                {"alpha", alpha},
                                {"target_power", target_power},
                                {"theta", theta},
                                {"q", q},
                                {"sigma_eps", sigma_eps},
                                {"multiple", multiple},
                                {"solver_bracket", solver_bracket},
                                {"power_bracket", power_bracket}};

    json report;
    report["command"] = "dropout";
    report["m_bar_raw"] = size.raw;
    report["m_bar"] = size.rounded;
    report["predicted_power"] = predicted;
    report["psi"] = psi;
    report["manifest_hash"] = manifest.hash();
    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return 0;
}

int cmd_simulate_table(const CommonOpts& common, int table_id, int replicates) {
    const auto start = std::chrono::steady_clock::now();
    crthte::TableOptions options;
    options.replicates = replicates;
    options.seed = common.seed;
    options.threads = common.threads;

    crthte::RunManifest manifest;
    manifest.command = "simulate";
    manifest.seed = common.seed;
    manifest.resolved_params = {{"table", table_id},
                                {"replicates", replicates},
                                {"rhos", options.rhos}};
    const std::string path = common.out.empty()
                                 ? "table" + std::to_string(table_id) + ".csv"
                                 : common.out;
    manifest.outputs.push_back(path);

    const auto table = crthte::reproduce_table(table_id, options);

    CsvFile csv(path, manifest.hash());
    auto cols = table.columns;
    cols.push_back("within_tolerance");
    csv.header(cols);
    bool batch_failure = false;
    const int failed_col = static_cast<int>(table.columns.size()) - 1;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto row = table.rows[r];
        row.push_back(table.within_tolerance[r] ? 1.0 : 0.0);
        csv.row(row);
        if (table.rows[r][failed_col] >= replicates) batch_failure = true;
    }
    csv.comment("out_of_tolerance=" + std::to_string(table.out_of_tolerance()));

    json report;
    report["command"] = "simulate";
    report["table"] = table_id;
    report["rows"] = table.rows.size();
    report["out_of_tolerance"] = table.out_of_tolerance();
    report["csv"] = path;
    report["manifest_hash"] = manifest.hash();
    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return batch_failure ? 4 : 0;
}

int cmd_simulate_custom(const CommonOpts& common, int replicates, double beta4,
                        std::vector<double> rhos, double dropout_rate,
                        double alpha) {
    const auto start = std::chrono::steady_clock::now();
    const auto design = load_and_validate(common.config);
    if (rhos.empty()) rhos = {0.05, 0.5, 0.95};

    crthte::SimOptions sim;
    sim.replicates = replicates;
    sim.alpha = alpha;
    sim.seed = common.seed;
    sim.threads = common.threads;
    sim.dropout_rate = dropout_rate;

    crthte::ModelParams params = crthte::table_params(beta4, rhos.front());
    const auto sweep =
        crthte::rho_sweep_characteristics(design, params, rhos, sim);

    crthte::RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_path = common.config;
    manifest.seed = common.seed;
    manifest.resolved_params = {{"design", crthte::design_to_json(design)},
                                {"replicates", replicates},
                                {"beta4", beta4},
                                {"rhos", rhos},
                                {"dropout", dropout_rate},
                                {"alpha", alpha}};
    const std::string path = common.out.empty() ? "simulate.csv" : common.out;
    manifest.outputs.push_back(path);

    CsvFile csv(path, manifest.hash());
    csv.header({"rho", "esd", "se_bar", "type1", "power", "failed"});
    bool batch_failure = false;
    for (const auto& oc : sweep) {
        csv.row({oc.rho, oc.esd, oc.se_bar, oc.type1, oc.power,
                 static_cast<double>(oc.failed)});
        if (oc.failed >= replicates) batch_failure = true;
    }

    json report;
    report["command"] = "simulate";
    report["csv"] = path;
    report["manifest_hash"] = manifest.hash();
    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return batch_failure ? 4 : 0;
}

int cmd_casestudy(const CommonOpts& common, const std::string& name,
                  const std::string& variant) {
    const auto start = std::chrono::steady_clock::now();

    crthte::RunManifest manifest;
    manifest.command = "casestudy";
    manifest.seed = common.seed;
    manifest.resolved_params = {{"name", name}, {"variant", variant}};
    const std::string path =
        common.out.empty() ? "casestudy_" + name + "_" + variant + ".csv"
                           : common.out;
    manifest.outputs.push_back(path);

    json report;
    report["command"] = "casestudy";
    report["study"] = name;
    report["variant"] = variant;
    report["csv"] = path;

    if (variant == "theta-sweep") {
        if (name != "epic") {
            crthte::fail(ErrorCode::DomainError,
                         "theta-sweep is an epic variant");
        }
        CsvFile csv(path, manifest.hash());
        csv.header({"delta", "theta", "power"});
        for (const auto& pt : crthte::epic_theta_sweep()) {
            csv.row({pt.delta, pt.theta, pt.power});
        }
    } else {
        const auto curve = crthte::casestudy_curve(name, variant);
        CsvFile csv(path, manifest.hash());
        csv.header({"delta", "power", "mbar_required"});
        for (const auto& pt : curve.points) {
            csv.row({pt.delta, pt.power, pt.mbar_required});
        }
        report["threshold_grid"] = curve.threshold_grid;
        report["threshold_exact"] = curve.threshold_exact;
        report["grid_step"] = curve.grid_step;
        report["target_power"] = curve.target_power;
    }

    report["manifest_hash"] = manifest.hash();
    std::cout << report.dump(2) << "\n";
    finish_manifest(manifest, common.manifest_path, start);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "crt-hte: HTE power and sample size for ICC-ignorable parallel "
        "cluster randomized trials"};
    app.require_subcommand(1);

    CommonOpts common;

    // --- psi -----------------------------------------------------------
    auto* psi_cmd = app.add_subcommand(
        "psi", "Randomization variance inflation factor psi(P; m)");
    std::string psi_method = "auto";
    std::int64_t cap = crthte::kDefaultEnumerationCap;
    int psi_replicates = 100000;
    psi_cmd->add_option("--config", common.config, "design JSON")->required();
    psi_cmd->add_option("--method", psi_method, "exact|series|sampled|auto");
    psi_cmd->add_option("--cap", cap, "enumeration cap");
    psi_cmd->add_option("--replicates", psi_replicates, "draws for sampled");
    psi_cmd->add_option("--seed", common.seed, "seed for sampled");

    // --- power ----------------------------------------------------------
    auto* power_cmd =
        app.add_subcommand("power", "Predicted power for given HTE delta");
    std::vector<double> deltas;
    double alpha = 0.05;
    std::string power_method;
    std::string sweep;
    std::string power_psi_method = "auto";
    power_cmd->add_option("--config", common.config, "design JSON")->required();
    power_cmd->add_option("--delta", deltas, "HTE alternative (one per subgroup)");
    power_cmd->add_option("--alpha", alpha, "two-sided significance level");
    power_cmd->add_option("--method", power_method, "wald|chisq");
    power_cmd->add_option("--sweep", sweep, "lo:hi:step delta grid -> CSV");
    power_cmd->add_option("--psi-method", power_psi_method,
                          "exact|series|sampled|auto");
    power_cmd->add_option("--out", common.out, "CSV path for --sweep");
    power_cmd->add_option("--seed", common.seed, "seed");

    // --- samplesize -------------------------------------------------------
    auto* size_cmd = app.add_subcommand(
        "samplesize", "Smallest average cluster size for target power");
    double ss_delta = 0.0;
    double ss_power = 0.8;
    std::int64_t multiple = 1;
    std::string round_mode = "nearest";
    std::string ss_psi_method = "auto";
    size_cmd->add_option("--config", common.config, "design JSON")->required();
    size_cmd->add_option("--delta", ss_delta, "HTE alternative")->required();
    size_cmd->add_option("--alpha", alpha, "significance level");
    size_cmd->add_option("--power", ss_power, "target power");
    size_cmd->add_option("--round", multiple, "rounding multiple");
    size_cmd->add_option("--round-mode", round_mode, "nearest|up");
    size_cmd->add_option("--psi-method", ss_psi_method, "exact|series|sampled|auto");

    // --- dropout ---------------------------------------------------------
    auto* dropout_cmd = app.add_subcommand(
        "dropout", "Required size and power under completely-random drop-out");
    double rate = 0.0, d_delta = 0.0, d_power = 0.8, d_theta = 0.5,
           d_sigma = 1.0;
    int d_q = 1;
    std::int64_t d_multiple = 0;
    std::string solver_bracket = "halved";
    std::string power_bracket = "full";
    dropout_cmd->add_option("--rate", rate, "drop-out rate in (0,1)")->required();
    dropout_cmd->add_option("--delta", d_delta, "HTE alternative")->required();
    dropout_cmd->add_option("--alpha", alpha, "significance level");
    dropout_cmd->add_option("--power", d_power, "target power");
    dropout_cmd->add_option("--theta", d_theta, "subgroup proportion");
    dropout_cmd->add_option("--q", d_q, "pattern repeats (I = 8q)");
    dropout_cmd->add_option("--sigma", d_sigma, "residual SD");
    dropout_cmd->add_option("--multiple", d_multiple,
                            "rounding multiple (0 = preset for the rate)");
    dropout_cmd->add_option("--solver-bracket", solver_bracket,
                            "halved|full drop-out correction in the solver");
    dropout_cmd->add_option("--power-bracket", power_bracket,
                            "halved|full correction in the power formula");

    // --- simulate ----------------------------------------------------------
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Monte Carlo verification (tables or a custom design)");
    int table_id = 0;
    int replicates = 10000;
    double sim_beta4 = 0.35;
    double sim_dropout = 0.0;
    std::vector<double> sim_rhos;
    sim_cmd->add_option("--table", table_id, "reproduce table 1|2|3|4");
    sim_cmd->add_option("--custom", common.config, "custom design JSON");
    sim_cmd->add_option("--replicates", replicates, "replicates per cell");
    sim_cmd->add_option("--seed", common.seed, "master seed");
    sim_cmd->add_option("--threads", common.threads, "worker threads");
    sim_cmd->add_option("--beta4", sim_beta4, "HTE used with --custom");
    sim_cmd->add_option("--rho", sim_rhos, "ICC values with --custom");
    sim_cmd->add_option("--dropout", sim_dropout, "drop-out rate with --custom");
    sim_cmd->add_option("--alpha", alpha, "significance level");
    sim_cmd->add_option("--out", common.out, "output CSV path");

    // --- casestudy ----------------------------------------------------------
    auto* case_cmd =
        app.add_subcommand("casestudy", "Worked trial examples as CSV curves");
    std::string cs_name, cs_variant = "equal";
    case_cmd->add_option("--name", cs_name, "recode|partner|epic")->required();
    case_cmd->add_option("--variant", cs_variant,
                         "equal|extreme|nodropout|theta-sweep");
    case_cmd->add_option("--out", common.out, "output CSV path");

    for (auto* cmd : {psi_cmd, power_cmd, size_cmd, dropout_cmd, sim_cmd, case_cmd}) {
        cmd->add_option("--manifest", common.manifest_path, "manifest path");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (psi_cmd->parsed()) {
            return cmd_psi(common, psi_method, cap, psi_replicates);
        }
        if (power_cmd->parsed()) {
            return cmd_power(common, deltas, alpha, power_method, sweep,
                             power_psi_method);
        }
        if (size_cmd->parsed()) {
            return cmd_samplesize(common, ss_delta, alpha, ss_power, multiple,
                                  round_mode, ss_psi_method);
        }
        if (dropout_cmd->parsed()) {
            return cmd_dropout(common, rate, d_delta, alpha, d_power, d_theta,
                               d_q, d_sigma, d_multiple, solver_bracket,
                               power_bracket);
        }
        if (sim_cmd->parsed()) {
            if (table_id != 0) {
                return cmd_simulate_table(common, table_id, replicates);
            }
            if (common.config.empty()) {
                crthte::fail(ErrorCode::DomainError,
                             "simulate needs --table or --custom");
            }
            return cmd_simulate_custom(common, replicates, sim_beta4, sim_rhos,
                                       sim_dropout, alpha);
        }
        if (case_cmd->parsed()) {
            return cmd_casestudy(common, cs_name, cs_variant);
        }
    } catch (const Error& e) {
        json err;
        err["error"] = e.what();
        err["code"] = crthte::error_code_name(e.code());
        std::cerr << err.dump(2) << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
