#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>

#include "crthte/randomization.hpp"
#include "crthte/types.hpp"

namespace crthte {

// ---------------------------------------------------------------------------
// Requests / small records
// ---------------------------------------------------------------------------
struct PowerRequest {
    std::vector<double> delta;     // HTE alternative, one entry per subgroup
    double alpha = 0.05;
    double target_power = 0.8;
};

struct DropoutSpec {
    double r;                      // drop-out rate, 0 < r < 1
};

enum class RoundingMode { Nearest, Up };

struct SampleSizeResult {
    double raw = 0.0;              // real-valued solution
    std::int64_t rounded = 0;      // snapped to the requested multiple
};

struct VarBeta2 {
    double value = 0.0;
    double lower = 0.0;            // psi_rho * sigma2_gamma / I
    double upper = 0.0;            // psi_rho * sigma2_{y|x} / I
};

// ---------------------------------------------------------------------------
// Variance of the HTE estimator (ICC-free under fixed prevalence)
// ---------------------------------------------------------------------------

// (diag(theta) - theta theta')^{-1} = diag(theta)^{-1} + J_p / (1 - sum(theta)).
Eigen::MatrixXd theta_precision(const SubgroupSpec& subgroups);

// Conditional variance of beta4_hat given (W, X): exact at any I,
//   sigma_eps^2 / (I mbar Wbar (1 - Wbar)) * theta_precision.
Eigen::MatrixXd var_beta4_conditional(const TrialDesign& design,
                                      const Assignment& w);

// Unconditional variance Omega4 / I, Omega4 = (sigma_eps^2/mbar) psi * precision.
Eigen::MatrixXd var_beta4_unconditional(const TrialDesign& design,
                                        const PsiEstimate& psi);

// Reference variances for the equal/unequal size formulas the exact result
// is benchmarked against. Literal evaluations; denominators must be positive.
double sigma4_equal_reference(std::int64_t m, double rho, double rho_x,
                              double wbar_mean, double sigma2_y_given_x,
                              double sigma2_x);
double sigma4_unequal_reference(std::span<const double> sizes, double rho,
                                double rho_x, double wbar_mean,
                                double sigma2_y_given_x, double sigma2_x);
// Per-cluster within-cluster correlation (fixed prevalence gives -1/(m_i-1)).
double sigma4_unequal_reference(std::span<const double> sizes, double rho,
                                const std::function<double(double)>& rho_x_of_m,
                                double wbar_mean, double sigma2_y_given_x,
                                double sigma2_x);

// Variance of the treatment main effect; unlike beta4 this one keeps the ICC.
VarBeta2 var_beta2(const TrialDesign& design, double rho,
                   std::int64_t cap = kDefaultEnumerationCap);

// ---------------------------------------------------------------------------
// Power
// ---------------------------------------------------------------------------

// One-tail Wald approximation Phi(z_{alpha/2} + |delta|/SE) with
// SE^2 = psi sigma_eps^2 / (I mbar theta(1-theta)). p = 1 designs only.
double power_wald_1d(const TrialDesign& design, double psi, double delta,
                     double alpha = 0.05);

// Exact two-sided chi-square power from the noncentral tail, any p.
double noncentrality(const TrialDesign& design, double psi,
                     std::span<const double> delta);
double power_chisq(const TrialDesign& design, double psi,
                   std::span<const double> delta, double alpha = 0.05);

// ---------------------------------------------------------------------------
// Sample size
// ---------------------------------------------------------------------------

// Smallest average cluster size with predicted power >= target:
//   mbar = psi sigma_eps^2 (z_{1-alpha/2} + z_power)^2 / (I theta(1-theta) delta^2),
// snapped to `multiple` (nearest with half-up, or ceiling).
SampleSizeResult min_avg_cluster_size(double delta, double theta,
                                      double sigma_eps, int n_clusters,
                                      double psi, double alpha,
                                      double target_power,
                                      std::int64_t multiple,
                                      RoundingMode mode = RoundingMode::Nearest);

// Total-size identity I*mbar*theta(1-theta)*delta^2 = psi sigma^2 z^2.
double required_total_size(double delta, double theta, double sigma_eps,
                           double psi, double alpha, double target_power);

// Solves the identity for the largest cluster size with the others fixed;
// psi is re-evaluated through the series at each candidate. Bracketed
// bisection on [max(fixed), bracket_hi], relative tolerance 1e-8.
double solve_equalizer_last_cluster(std::span<const double> fixed_sizes,
                                    double delta, double theta,
                                    double sigma_eps, double alpha,
                                    double target_power,
                                    double bracket_hi = 1e6);

// ---------------------------------------------------------------------------
// Drop-out (completely at random; hypergeometric/multinomial survivor model)
// ---------------------------------------------------------------------------

// The size-vector constant entering the drop-out correction:
//   s = sum_i(mbar/m_i), so (1/I) sum_i (I*mbar - m_i)/m_i = s - 1.
// Scale-free; equals I for equal sizes and 11.9q for the simulation pattern.
double inverse_size_sum(std::span<const double> sizes);

// Two readings of the correction constant; see dropout_bracket_constant.
// FullCorrection uses s - 1, HalvedCorrection uses (s - 1)/2. The benchmark
// size tables are reproduced by the halved form while the matching power
// values and the EPIC formulas follow the full form, so the solver and the
// power evaluation default differently.
enum class DropoutBracket { FullCorrection, HalvedCorrection };

double dropout_bracket_constant(double inv_size_sum, DropoutBracket bracket);

// Average planned cluster size solving
//   mbar = A {1/(theta(1-theta)) + [theta^3+(1-theta)^3](r + C) /
//              (I mbar (1-r) theta^2 (1-theta)^2)},
// A = psi sigma^2 z^2/(I (1-r) delta^2): a quadratic in mbar (positive root).
SampleSizeResult dropout_min_size(const DropoutSpec& drop, double delta,
                                  double theta, double sigma_eps,
                                  int n_clusters, double psi,
                                  double inv_size_sum, double alpha,
                                  double target_power, std::int64_t multiple,
                                  DropoutBracket bracket = DropoutBracket::HalvedCorrection);

// Predicted power at planned average size m_bar under drop-out rate r.
double dropout_power(const DropoutSpec& drop, double m_bar, double delta,
                     double theta, double sigma_eps, int n_clusters,
                     double psi, double inv_size_sum, double alpha = 0.05,
                     DropoutBracket bracket = DropoutBracket::FullCorrection);

// ---------------------------------------------------------------------------
// EPIC-style preset (16 clusters, 25% drop-out, sigma_eps = 10, psi = 4,
// planned average size 40 -> 30 analyzed). Thin wrappers over the general
// drop-out formulas with the full correction.
// ---------------------------------------------------------------------------
double epic_preset_power(double theta, double delta);
double epic_preset_size(double theta, double delta);           // planned size
double epic_nodropout_power(double theta, double delta, double m_bar = 30.0);
double epic_nodropout_size(double theta, double delta);

}  // namespace crthte
