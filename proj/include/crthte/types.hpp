#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crthte/error.hpp"

namespace crthte {

// ---------------------------------------------------------------------------
// ClusterSizes — participants per cluster, m_i >= 1, at least two clusters
// ---------------------------------------------------------------------------
struct ClusterSizes {
    std::vector<std::int64_t> sizes;

    int count() const { return static_cast<int>(sizes.size()); }
    std::int64_t total() const;
    double mean() const;
    std::vector<double> as_doubles() const;
};

// ---------------------------------------------------------------------------
// SubgroupSpec — proportions of the p non-reference subgroups
// ---------------------------------------------------------------------------
struct SubgroupSpec {
    std::vector<double> theta;

    int p() const { return static_cast<int>(theta.size()); }
    double sum() const;
};

// ---------------------------------------------------------------------------
// TrialDesign — everything a variance/power formula consumes
// ---------------------------------------------------------------------------
struct TrialDesign {
    ClusterSizes clusters;
    int i1 = 0;                // clusters in the intervention arm
    SubgroupSpec subgroups;
    double sigma_eps = 1.0;    // residual SD

    int i0() const { return clusters.count() - i1; }
};

// ---------------------------------------------------------------------------
// ModelParams — data-generating coefficients and the ICC
// ---------------------------------------------------------------------------
struct ModelParams {
    double beta1 = 0.0;
    double beta2 = 0.0;
    std::vector<double> beta3;
    std::vector<double> beta4;
    double rho = 0.0;          // in [0, 1)

    // sigma^2_{y|x} = sigma^2_eps / (1 - rho); sigma^2_gamma = sigma^2_eps rho/(1-rho)
    double sigma_gamma(double sigma_eps) const;
    double sigma2_y_given_x(double sigma_eps) const;
};

enum class PsiMethod { Exact, Series, Sampled };

const char* psi_method_name(PsiMethod method);

// ---------------------------------------------------------------------------
// PsiEstimate — psi(P; m) with provenance and size diagnostics
// ---------------------------------------------------------------------------
struct PsiEstimate {
    double value = 0.0;
    PsiMethod method = PsiMethod::Exact;
    double cv2 = 0.0;
    double kurtosis = 0.0;
    std::int64_t assignments_evaluated = 0;
    double std_error = 0.0;    // nonzero only for the sampled method
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------
struct Violation {
    ErrorCode code;
    int cluster = -1;          // 1-based where applicable, -1 otherwise
    int subgroup = -1;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

// Checks every type invariant; integrality of m_i * theta_l uses a 1e-9
// tolerance so decimal inputs like 1/3 validate. The per-cluster integrality
// condition applies to fixed-prevalence data generation; the drop-out
// survivor model draws per-cluster counts instead and only needs the totals
// integral, so it validates with check_integral_counts = false.
ValidationReport validate_design(const TrialDesign& design,
                                 bool check_integral_counts = true);

// Same checks, throwing on the first violation. Idempotent on valid designs.
const TrialDesign& require_valid(const TrialDesign& design,
                                 bool check_integral_counts = true);

// ---------------------------------------------------------------------------
// Simulation-study size pattern: q repeats of
//   [m/2 m/2 m/2 m/2 m 5m/2 2m m/2]
// Mean is exactly m; the caller must pick m so every entry is integral.
// ---------------------------------------------------------------------------
ClusterSizes build_simulation_pattern(int q, double m_bar);

// Scale-free pattern diagnostics used by the drop-out solver: the constant
// sum_i(mbar/m_i) for one pattern block is 11.9, independent of mbar.
double pattern_inverse_size_sum(int q);

}  // namespace crthte
