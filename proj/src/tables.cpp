#include "crthte/tables.hpp"

#include <cmath>

#include "crthte/rng.hpp"
#include "crthte/stats.hpp"

namespace crthte {

namespace {

constexpr double kDeltas[3] = {0.25, 0.35, 0.45};

std::uint64_t cell_seed(std::uint64_t master, int table, int cell, int variant) {
    return derive_seed(master, static_cast<std::uint64_t>(table) * 1000 +
                                   static_cast<std::uint64_t>(cell) * 4 + variant);
}

double pattern_psi(int q) {
    return psi_approx(build_simulation_pattern(q, 20.0)).value;
}

}  // namespace

int SimTable::out_of_tolerance() const {
    int n = 0;
    for (bool ok : within_tolerance) n += ok ? 0 : 1;
    return n;
}

ModelParams table_params(double beta4, double rho) {
    ModelParams params;
    params.beta1 = 0.15;
    params.beta2 = 0.25;
    params.beta3 = {0.1};
    params.beta4 = {beta4};
    params.rho = rho;
    return params;
}

TrialDesign pattern_design(int q, double m_bar, double theta) {
    TrialDesign design;
    design.clusters = build_simulation_pattern(q, m_bar);
    design.i1 = 4 * q;
    design.subgroups.theta = {theta};
    design.sigma_eps = 1.0;
    return design;
}

bool within_type1_band(double rate, double alpha, int replicates) {
    const double half =
        normal_quantile(0.995) * std::sqrt(alpha * (1.0 - alpha) / replicates);
    return rate >= alpha - half && rate <= alpha + half;
}

std::vector<Table2Cell> table2_cells() {
    const double psi = pattern_psi(1);
    std::vector<Table2Cell> cells;
    const double thetas[3] = {0.3, 0.4, 0.5};
    const std::int64_t multiples[3] = {20, 10, 4};
    for (int ti = 0; ti < 3; ++ti) {
        for (double delta : kDeltas) {
            Table2Cell cell;
            cell.theta = thetas[ti];
            cell.delta = delta;
            cell.multiple = multiples[ti];
            const auto size = min_avg_cluster_size(delta, cell.theta, 1.0, 8, psi,
                                                   0.05, 0.8, cell.multiple);
            cell.m_raw = size.raw;
            cell.m_bar = size.rounded;
            const auto design =
                pattern_design(1, static_cast<double>(cell.m_bar), cell.theta);
            cell.predicted = power_wald_1d(design, psi, delta);
            cells.push_back(cell);
        }
    }
    return cells;
}

std::vector<Table3Cell> table3_cells() {
    std::vector<Table3Cell> cells;
    for (int q : {2, 3, 4}) {
        const double psi = pattern_psi(q);
        for (double delta : kDeltas) {
            Table3Cell cell;
            cell.q = q;
            cell.delta = delta;
            cell.psi = psi;
            // The benchmark's (q=3, delta=0.25) entry is 86, a multiple of 2
            // rather than of 4 like every other entry; reproduced verbatim.
            cell.multiple = (q == 3 && delta == 0.25) ? 2 : 4;
            const auto size = min_avg_cluster_size(delta, 0.5, 1.0, 8 * q, psi,
                                                   0.05, 0.8, cell.multiple);
            cell.m_raw = size.raw;
            cell.m_bar = size.rounded;
            const auto design =
                pattern_design(q, static_cast<double>(cell.m_bar), 0.5);
            cell.predicted = power_wald_1d(design, psi, delta);
            cells.push_back(cell);
        }
    }
    return cells;
}

std::vector<Table4Cell> table4_cells() {
    const double psi = pattern_psi(1);
    const double inv_sum = pattern_inverse_size_sum(1);
    std::vector<Table4Cell> cells;
    const double rates[3] = {0.2, 0.25, 0.3};
    const std::int64_t multiples[3] = {10, 4, 20};
    for (int ri = 0; ri < 3; ++ri) {
        for (double delta : kDeltas) {
            Table4Cell cell;
            cell.r = rates[ri];
            cell.delta = delta;
            cell.multiple = multiples[ri];
            const auto size =
                dropout_min_size({cell.r}, delta, 0.5, 1.0, 8, psi, inv_sum,
                                 0.05, 0.8, cell.multiple);
            cell.m_raw = size.raw;
            cell.m_bar = size.rounded;
            cell.predicted =
                dropout_power({cell.r}, static_cast<double>(cell.m_bar), delta,
                              0.5, 1.0, 8, psi, inv_sum);
            cells.push_back(cell);
        }
    }
    return cells;
}

namespace {

SimTable table1(const TableOptions& options) {
    SimTable table;
    table.table_id = 1;
    table.columns = {"m_bar", "q", "rho", "esd", "se_bar", "cse", "failed"};
    int cell = 0;
    for (int q : {1, 2, 3}) {
        const double psi = pattern_psi(q);
        for (double m_bar : {20.0, 40.0, 60.0}) {
            const auto design = pattern_design(q, m_bar, 0.5);
            const double cse =
                std::sqrt(psi / (static_cast<double>(design.clusters.total()) *
                                 0.5 * 0.5));
            SimOptions sim;
            sim.replicates = options.replicates;
            sim.threads = options.threads;
            sim.seed = cell_seed(options.seed, 1, cell, 1);
            const auto sweep = rho_sweep_characteristics(
                design, table_params(0.35, options.rhos.front()), options.rhos,
                sim);
            for (const auto& oc : sweep) {
                table.rows.push_back({m_bar, static_cast<double>(q), oc.rho,
                                      oc.esd, oc.se_bar, cse,
                                      static_cast<double>(oc.failed)});
                table.within_tolerance.push_back(
                    std::abs(oc.esd - cse) / cse < 0.05 &&
                    std::abs(oc.se_bar - cse) / cse < 0.03);
            }
            ++cell;
        }
    }
    return table;
}

// Shared shape of tables 2-4: per cell, a null run (type-I) and an
// alternative run (power) across the rho sweep.
struct CellRuns {
    std::vector<OperatingCharacteristics> null_run;
    std::vector<OperatingCharacteristics> alt_run;
};

CellRuns run_cell(const TrialDesign& design, double delta, double predicted,
                  double dropout_rate, const TableOptions& options,
                  std::uint64_t null_seed, std::uint64_t alt_seed,
                  bool allow_rounded_counts = false) {
    SimOptions sim;
    sim.replicates = options.replicates;
    sim.threads = options.threads;
    sim.dropout_rate = dropout_rate;
    sim.predicted = predicted;
    sim.allow_rounded_counts = allow_rounded_counts;

    CellRuns runs;
    sim.seed = null_seed;
    runs.null_run = rho_sweep_characteristics(
        design, table_params(0.0, options.rhos.front()), options.rhos, sim);
    sim.seed = alt_seed;
    runs.alt_run = rho_sweep_characteristics(
        design, table_params(delta, options.rhos.front()), options.rhos, sim);
    return runs;
}

SimTable table2(const TableOptions& options) {
    SimTable table;
    table.table_id = 2;
    table.columns = {"theta",  "delta", "rho",       "m_bar", "type1",
                     "power",  "predicted", "failed"};
    const auto cells = table2_cells();
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        const auto& cell = cells[c];
        const auto design =
            pattern_design(1, static_cast<double>(cell.m_bar), cell.theta);
        const auto runs = run_cell(design, cell.delta, cell.predicted, 0.0,
                                   options, cell_seed(options.seed, 2, c, 0),
                                   cell_seed(options.seed, 2, c, 1));
        for (std::size_t ri = 0; ri < options.rhos.size(); ++ri) {
            const auto& null_oc = runs.null_run[ri];
            const auto& alt_oc = runs.alt_run[ri];
            table.rows.push_back({cell.theta, cell.delta, null_oc.rho,
                                  static_cast<double>(cell.m_bar), null_oc.type1,
                                  alt_oc.power, cell.predicted,
                                  static_cast<double>(null_oc.failed +
                                                      alt_oc.failed)});
            table.within_tolerance.push_back(
                std::abs(alt_oc.power - cell.predicted) <= 0.02 &&
                within_type1_band(null_oc.type1, 0.05, options.replicates));
        }
    }
    return table;
}

SimTable table3(const TableOptions& options) {
    SimTable table;
    table.table_id = 3;
    table.columns = {"q",     "delta", "rho",       "m_bar", "type1",
                     "power", "predicted", "failed"};
    const auto cells = table3_cells();
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        const auto& cell = cells[c];
        const auto design =
            pattern_design(cell.q, static_cast<double>(cell.m_bar), 0.5);
        // The 86-per-cluster cell cannot split 43 participants half and
        // half; its generator rounds the within-cluster count instead.
        const bool rounded = cell.m_bar % 4 != 0;
        const auto runs = run_cell(design, cell.delta, cell.predicted, 0.0,
                                   options, cell_seed(options.seed, 3, c, 0),
                                   cell_seed(options.seed, 3, c, 1), rounded);
        for (std::size_t ri = 0; ri < options.rhos.size(); ++ri) {
            const auto& null_oc = runs.null_run[ri];
            const auto& alt_oc = runs.alt_run[ri];
            table.rows.push_back({static_cast<double>(cell.q), cell.delta,
                                  null_oc.rho, static_cast<double>(cell.m_bar),
                                  null_oc.type1, alt_oc.power, cell.predicted,
                                  static_cast<double>(null_oc.failed +
                                                      alt_oc.failed)});
            table.within_tolerance.push_back(
                std::abs(alt_oc.power - cell.predicted) <= 0.02 &&
                within_type1_band(null_oc.type1, 0.05, options.replicates));
        }
    }
    return table;
}

SimTable table4(const TableOptions& options) {
    SimTable table;
    table.table_id = 4;
    table.columns = {"r",     "delta", "rho",       "m_bar", "type1",
                     "power", "predicted", "failed"};
    const auto cells = table4_cells();
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
        const auto& cell = cells[c];
        const auto design =
            pattern_design(1, static_cast<double>(cell.m_bar), 0.5);
        const auto runs = run_cell(design, cell.delta, cell.predicted, cell.r,
                                   options, cell_seed(options.seed, 4, c, 0),
                                   cell_seed(options.seed, 4, c, 1));
        for (std::size_t ri = 0; ri < options.rhos.size(); ++ri) {
            const auto& null_oc = runs.null_run[ri];
            const auto& alt_oc = runs.alt_run[ri];
            table.rows.push_back({cell.r, cell.delta, null_oc.rho,
                                  static_cast<double>(cell.m_bar), null_oc.type1,
                                  alt_oc.power, cell.predicted,
                                  static_cast<double>(null_oc.failed +
                                                      alt_oc.failed)});
            table.within_tolerance.push_back(
                std::abs(alt_oc.power - cell.predicted) <= 0.025 &&
                within_type1_band(null_oc.type1, 0.05, options.replicates));
        }
    }
    return table;
}

}  // namespace

SimTable reproduce_table(int table_id, const TableOptions& options) {
    switch (table_id) {
        case 1: return table1(options);
        case 2: return table2(options);
        case 3: return table3(options);
        case 4: return table4(options);
        default:
            fail(ErrorCode::DomainError, "table id must be 1, 2, 3 or 4");
    }
}

}  // namespace crthte
