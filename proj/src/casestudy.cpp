#include "crthte/casestudy.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "crthte/stats.hpp"

namespace crthte {

namespace {

struct CurveFns {
    std::function<double(double)> power;          // of |delta|
    std::function<double(double)> mbar_required;  // of |delta|
    double grid_step;
    double grid_max;
};

// Required equal-size average, ceiling-rounded to the multiple that keeps
// m_i * theta integral (3 for theta = 1/3, 4 for theta = 1/4).
double equal_required(double delta, const CaseStudyConfig& cfg,
                      std::int64_t multiple) {
    const auto size = min_avg_cluster_size(delta, cfg.theta, cfg.sigma_eps,
                                           cfg.n_clusters, 4.0, 0.05, 0.8,
                                           multiple, RoundingMode::Up);
    return static_cast<double>(size.rounded);
}

double extreme_required_mbar(double delta, const CaseStudyConfig& cfg) {
    const auto fixed = cfg.extreme_sizes.as_doubles();
    std::vector<double> head(fixed.begin(), fixed.end() - 1);
    double fixed_total = 0.0;
    for (double m : head) fixed_total += m;
    const double last = solve_equalizer_last_cluster(
        head, delta, cfg.theta, cfg.sigma_eps, 0.05, 0.8);
    return (fixed_total + last) / cfg.n_clusters;
}

double wald_power(double delta, double n_total, double theta, double sigma_eps,
                  double psi) {
    const double se2 =
        psi * sigma_eps * sigma_eps / (n_total * theta * (1.0 - theta));
    return normal_cdf(normal_quantile(0.025) + std::abs(delta) / std::sqrt(se2));
}

CurveFns curve_functions(const std::string& study, const std::string& variant,
                         const CaseStudyConfig& cfg) {
    CurveFns fns;
    if (study == "epic") {
        fns.grid_step = 0.01;
        fns.grid_max = 15.0;
        if (variant == "equal") {
            fns.power = [](double d) { return epic_preset_power(0.25, d); };
            fns.mbar_required = [](double d) { return epic_preset_size(0.25, d); };
        } else if (variant == "nodropout") {
            fns.power = [](double d) { return epic_nodropout_power(0.25, d); };
            fns.mbar_required = [](double d) { return epic_nodropout_size(0.25, d); };
        } else {
            fail(ErrorCode::DomainError,
                 "epic variants: equal | nodropout | theta-sweep");
        }
        return fns;
    }

    fns.grid_step = 0.001;
    fns.grid_max = 1.0;
    const std::int64_t multiple = (study == "recode") ? 3 : 4;
    if (variant == "equal") {
        const double n_total = cfg.n_clusters * cfg.m_bar_equal;
        fns.power = [=](double d) {
            return wald_power(d, n_total, cfg.theta, cfg.sigma_eps, 4.0);
        };
        fns.mbar_required = [=](double d) {
            return equal_required(d, cfg, multiple);
        };
    } else if (variant == "extreme") {
        const double psi = psi_approx(cfg.extreme_sizes).value;
        const double n_total = static_cast<double>(cfg.extreme_sizes.total());
        fns.power = [=](double d) {
            return wald_power(d, n_total, cfg.theta, cfg.sigma_eps, psi);
        };
        fns.mbar_required = [cfg](double d) {
            return extreme_required_mbar(d, cfg);
        };
    } else {
        fail(ErrorCode::DomainError, "variants: equal | extreme");
    }
    return fns;
}

}  // namespace

CaseStudyConfig casestudy_config(const std::string& study) {
    CaseStudyConfig cfg;
    if (study == "recode") {
        cfg.n_clusters = 40;
        cfg.theta = 1.0 / 3.0;
        cfg.sigma_eps = 0.49;
        cfg.m_bar_equal = 27.0;
        cfg.extreme_sizes.sizes.assign(39, 3);
        cfg.extreme_sizes.sizes.push_back(963);
    } else if (study == "partner") {
        cfg.n_clusters = 22;
        cfg.theta = 0.25;
        cfg.sigma_eps = 0.91;
        cfg.m_bar_equal = 40.0;
        cfg.extreme_sizes.sizes.assign(21, 4);
        cfg.extreme_sizes.sizes.push_back(796);
    } else if (study == "epic") {
        cfg.n_clusters = 16;
        cfg.theta = 0.25;
        cfg.sigma_eps = 10.0;
        cfg.m_bar_equal = 30.0;  // analyzed size after 25% drop-out
    } else {
        fail(ErrorCode::DomainError, "study must be recode, partner or epic");
    }
    return cfg;
}

CaseStudyCurve casestudy_curve(const std::string& study,
                               const std::string& variant) {
    const CaseStudyConfig cfg = casestudy_config(study);
    const CurveFns fns = curve_functions(study, variant, cfg);

    CaseStudyCurve curve;
    curve.study = study;
    curve.variant = variant;
    curve.grid_step = fns.grid_step;

    curve.threshold_grid = 0.0;
    const int n_points = static_cast<int>(std::llround(fns.grid_max / fns.grid_step));
    curve.points.reserve(n_points);
    for (int k = 1; k <= n_points; ++k) {
        CaseStudyPoint pt;
        pt.delta = k * fns.grid_step;
        pt.power = fns.power(pt.delta);
        try {
            pt.mbar_required = fns.mbar_required(pt.delta);
        } catch (const Error&) {
            // Below the feasibility threshold no finite largest-cluster size
            // reaches the target power; the required-size curve is undefined.
            pt.mbar_required = std::numeric_limits<double>::quiet_NaN();
        }
        if (curve.threshold_grid == 0.0 && pt.power >= curve.target_power) {
            curve.threshold_grid = pt.delta;
        }
        curve.points.push_back(pt);
    }

    // Exact root of power(delta) = target by bisection (power is increasing).
    double lo = fns.grid_step * 1e-3;
    double hi = fns.grid_max;
    if (fns.power(hi) >= curve.target_power) {
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (fns.power(mid) < curve.target_power) {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo < 1e-10 * hi) break;
        }
        curve.threshold_exact = 0.5 * (lo + hi);
    }
    return curve;
}

std::vector<ThetaSweepPoint> epic_theta_sweep() {
    std::vector<ThetaSweepPoint> out;
    for (double delta : {2.5, 5.0, 7.5, 10.0}) {
        for (int k = 1; k <= 499; ++k) {
            ThetaSweepPoint pt;
            pt.delta = delta;
            pt.theta = k * 0.002;
            pt.power = epic_preset_power(pt.theta, delta);
            out.push_back(pt);
        }
    }
    return out;
}

}  // namespace crthte
