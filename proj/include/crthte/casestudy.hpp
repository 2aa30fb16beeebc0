#pragma once

#include <string>
#include <vector>

#include "crthte/power.hpp"

namespace crthte {

// ---------------------------------------------------------------------------
// Worked trial designs: power and required-size curves over a delta grid,
// plus the smallest grid delta reaching the target power. The grid step
// matches the precision the curves are read at, so the reported threshold is
// the value a reader takes off the figure (the exact root is also returned).
// ---------------------------------------------------------------------------
struct CaseStudyPoint {
    double delta = 0.0;
    double power = 0.0;
    double mbar_required = 0.0;  // average cluster size reaching target power
};

struct CaseStudyCurve {
    std::string study;
    std::string variant;
    double grid_step = 0.0;
    double target_power = 0.8;
    double threshold_grid = 0.0;   // smallest grid delta with power >= target
    double threshold_exact = 0.0;  // root of power(delta) = target
    std::vector<CaseStudyPoint> points;
};

// study in {recode, partner, epic}; variants:
//   recode/partner: equal | extreme
//   epic:           equal (25% drop-out) | nodropout
CaseStudyCurve casestudy_curve(const std::string& study,
                               const std::string& variant);

// EPIC prevalence sweep: power over theta for |delta| in {2.5, 5, 7.5, 10}.
struct ThetaSweepPoint {
    double delta = 0.0;
    double theta = 0.0;
    double power = 0.0;
};
std::vector<ThetaSweepPoint> epic_theta_sweep();

// Fixed ingredients of each study, exposed for tests.
struct CaseStudyConfig {
    int n_clusters = 0;
    double theta = 0.0;
    double sigma_eps = 0.0;
    double m_bar_equal = 0.0;       // equal-size variant
    ClusterSizes extreme_sizes;     // extreme variant (empty for epic)
};
CaseStudyConfig casestudy_config(const std::string& study);

}  // namespace crthte
