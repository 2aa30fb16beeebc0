#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "crthte/power.hpp"
#include "crthte/randomization.hpp"
#include "crthte/types.hpp"

namespace crthte {

// ---------------------------------------------------------------------------
// Dataset — one simulated trial
// ---------------------------------------------------------------------------
struct ClusterData {
    int arm = 0;                         // W_i
    Eigen::MatrixXd x;                   // m_i x p binary, exclusive dummies
    Eigen::VectorXd y;

    std::int64_t size() const { return x.rows(); }
};

struct Dataset {
    std::vector<ClusterData> clusters;
    int i1 = 0;
    int p = 0;

    std::int64_t n() const;
};

// ---------------------------------------------------------------------------
// FitResult — closed-form GLS with profile-ML rho
// ---------------------------------------------------------------------------
struct FitResult {
    Eigen::VectorXd beta;                // (beta1, beta2, beta3[., p], beta4[., p])
    std::vector<double> se_beta4;
    Eigen::MatrixXd cov_beta4;           // model-based p x p block
    double rho_hat = 0.0;
    double sigma2_y_hat = 0.0;           // ML estimate of sigma^2_{y|x}
    double loglik = 0.0;
    bool converged = false;

    int p() const { return static_cast<int>(se_beta4.size()); }
    double beta4(int l) const { return beta(2 + p() + l); }
};

// Draws W by the random allocation rule, fills each cluster with exactly
// m_i*theta_l members of subgroup l at uniformly permuted positions, and
// generates outcomes from the linear mixed model. Deterministic given seed.
Dataset generate_dataset(const TrialDesign& design, const ModelParams& params,
                         std::uint64_t seed);

// Survivor model: K ~ hypergeometric(I*mbar, I*mbar*theta, I*mbar*(1-r));
// per-cluster target/reference survivor counts multinomial with weights
// m_i/(I*mbar). p = 1 designs only. r = 0 delegates to generate_dataset.
Dataset dropout_dataset(const TrialDesign& design, const ModelParams& params,
                        double dropout_rate, std::uint64_t seed);

// GLS at a fixed working rho via the rank-one compound-symmetry inverse;
// model covariance uses the ML residual scale at that rho.
FitResult gls_given_rho(const Dataset& data, double rho);

// Maximizes the 1-D profile likelihood over rho in [0, 0.9999] (coarse grid
// scan, then golden-section to 1e-8). converged=false when the optimum sits
// on the boundary.
FitResult fit_lmm(const Dataset& data);

// ---------------------------------------------------------------------------
// Operating characteristics
// ---------------------------------------------------------------------------
struct OperatingCharacteristics {
    double esd = 0.0;        // SD of replicate estimates, n-1 denominator
    double se_bar = 0.0;     // mean model SE
    double type1 = -1.0;     // rejection rate when beta4 = 0, else -1
    double power = -1.0;     // rejection rate when beta4 != 0, else -1
    double predicted = -1.0;
    double rho = 0.0;
    int replicates = 0;
    std::uint64_t seed = 0;
    int failed = 0;
};

struct SimOptions {
    int replicates = 10000;
    double alpha = 0.05;
    std::uint64_t seed = 20240809;
    int threads = 1;
    double dropout_rate = 0.0;   // 0 disables the survivor model
    double predicted = -1.0;     // carried through to the output
    // Accept designs where some m_i * theta_l is fractional and generate
    // with the count rounded to the nearest integer. Needed for benchmark
    // cells whose printed sizes cannot split exactly (e.g. 43 at theta=1/2);
    // the prevalence condition then holds only approximately.
    bool allow_rounded_counts = false;
};

// Runs replicates at params.rho only.
OperatingCharacteristics operating_characteristics(const TrialDesign& design,
                                                   const ModelParams& params,
                                                   const SimOptions& options);

// Runs the same replicates across several rho values with common base draws
// per replicate: W, X (or survivor counts), the standardized cluster effects
// and residuals are drawn once; only the cluster-effect scale changes with
// rho. Reproduces the across-rho-identical ESD rows of the source tables.
std::vector<OperatingCharacteristics> rho_sweep_characteristics(
    const TrialDesign& design, const ModelParams& params,
    const std::vector<double>& rhos, const SimOptions& options);

}  // namespace crthte
