#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crthte/sim.hpp"

namespace crthte {

// ---------------------------------------------------------------------------
// Reproduction of the four simulation-study tables. Each call returns one
// row per (cell, rho) with predicted and empirical columns plus a
// within-tolerance flag, so the CLI can emit a CSV and a summary count.
// ---------------------------------------------------------------------------
struct SimTable {
    int table_id = 0;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<bool> within_tolerance;

    int out_of_tolerance() const;
};

struct TableOptions {
    int replicates = 10000;
    std::uint64_t seed = 20240809;
    int threads = 1;
    std::vector<double> rhos = {0.05, 0.5, 0.95};
};

// Data-generating coefficients shared by all table presets.
ModelParams table_params(double beta4, double rho);

// Design used throughout the simulation study: q pattern blocks, balanced
// arms, one subgroup at proportion theta, unit residual SD.
TrialDesign pattern_design(int q, double m_bar, double theta);

// table_id in {1,2,3,4}.
SimTable reproduce_table(int table_id, const TableOptions& options);

// Formula-only layer (no simulation), exposed for the acceptance suite.
struct Table2Cell {
    double theta;
    double delta;
    std::int64_t multiple;
    double m_raw;
    std::int64_t m_bar;
    double predicted;
};
struct Table3Cell {
    int q;
    double delta;
    std::int64_t multiple;
    double m_raw;
    std::int64_t m_bar;
    double predicted;
    double psi;
};
struct Table4Cell {
    double r;
    double delta;
    std::int64_t multiple;
    double m_raw;
    std::int64_t m_bar;
    double predicted;
};
std::vector<Table2Cell> table2_cells();
std::vector<Table3Cell> table3_cells();
std::vector<Table4Cell> table4_cells();

// Central 99% binomial acceptance band around the nominal alpha.
bool within_type1_band(double rate, double alpha, int replicates);

}  // namespace crthte
