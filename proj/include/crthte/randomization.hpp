#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crthte/types.hpp"

namespace crthte {

// ---------------------------------------------------------------------------
// Random allocation rule: W in {0,1}^I with sum(W) = i1, uniform over all
// C(I, i1) such vectors, all-zeros/all-ones excluded.
// ---------------------------------------------------------------------------
struct Assignment {
    std::vector<std::uint8_t> w;

    int count() const { return static_cast<int>(w.size()); }
    int ones() const;
};

struct SizeMoments {
    double cv2 = 0.0;       // empirical squared coefficient of variation
    double kurt = 0.0;      // empirical kurtosis (standard definition)
    double var_wbar = 0.0;  // Var(Wbar_m) under the random allocation rule
    double m4_wbar = 0.0;   // 4th central moment of Wbar_m
};

// Kurtosis definition used by the series approximation. `Standard` is
// mu4/mu2^2 with 1/I weights. `ScaleDependent` subtracts 3*mbar^4/I instead
// of 3*mbar^4 in the numerator; the result changes under size rescaling and
// is exposed only for comparison with calculators that use it.
enum class KurtosisDef { Standard, ScaleDependent };

double empirical_cv2(std::span<const double> sizes);
double empirical_kurtosis(std::span<const double> sizes,
                          KurtosisDef def = KurtosisDef::Standard);

// Size-weighted intervention fraction Wbar_m = m'W / m'1.
double wbar(const ClusterSizes& m, const Assignment& w);

// d_i(rho)-weighted analogue; reduces to wbar at rho = 0 and to i1/I for
// equal sizes at any rho.
double wbar_rho(const ClusterSizes& m, const Assignment& w, double rho);

// Exact randomization moments of Wbar_m (requires I >= 4 for the 4th moment).
SizeMoments size_moments(const ClusterSizes& m, int i1);

constexpr std::int64_t kDefaultEnumerationCap = 10'000'000;

// Number of assignments C(I, i1); saturates at cap+1 to signal overflow.
std::int64_t assignment_count(int I, int i1, std::int64_t cap = kDefaultEnumerationCap);

// Visits every member of the random-allocation support in lexicographic
// order of the included-index set. Throws EnumerationTooLarge past the cap.
void for_each_assignment(int I, int i1,
                         const std::function<void(const std::vector<int>&)>& visit,
                         std::int64_t cap = kDefaultEnumerationCap);

// psi(P; m) = E[ 1 / (Wbar_m (1 - Wbar_m)) ] under the random allocation rule.
PsiEstimate psi_exact(const ClusterSizes& m, int i1,
                      std::int64_t cap = kDefaultEnumerationCap);

// Geometric-series approximation
//   psi ~= 4 (1 + CV^2/(I-1) + [3(I-2) - 2 Kurt] CV^4 / (I(I-1)(I-3)));
// valid for i1 = i0 = I/2, I >= 4.
PsiEstimate psi_approx(const ClusterSizes& m,
                       KurtosisDef def = KurtosisDef::Standard);

// Same series over real-valued sizes; used by solvers that treat one
// cluster size as a continuous unknown.
double psi_series_real(std::span<const double> sizes,
                       KurtosisDef def = KurtosisDef::Standard);

// Monte Carlo fallback: mean over `replicates` uniform draws from the
// support. Deterministic given the seed; std_error reported.
PsiEstimate psi_sampled(const ClusterSizes& m, int i1, int replicates,
                        std::uint64_t seed);

// E[ 1 / (Wbar_m(rho)(1 - Wbar_m(rho))) ] by exact enumeration.
double psi_rho(const ClusterSizes& m, int i1, double rho,
               std::int64_t cap = kDefaultEnumerationCap);

// One uniform draw from the support.
Assignment sample_allocation(const ClusterSizes& m, int i1, std::uint64_t seed);
Assignment sample_allocation(int I, int i1, class Rng& rng);

}  // namespace crthte
