#include "crthte/power.hpp"

#include <cmath>

#include "crthte/stats.hpp"

namespace crthte {

namespace {

double z_pair_squared(double alpha, double target_power) {
    const double z = normal_quantile(1.0 - alpha / 2) + normal_quantile(target_power);
    return z * z;
}

std::int64_t snap_to_multiple(double raw, std::int64_t multiple, RoundingMode mode) {
    if (multiple < 1) fail(ErrorCode::DomainError, "rounding multiple must be >= 1");
    double k;
    if (mode == RoundingMode::Nearest) {
        k = std::floor(raw / multiple + 0.5);
    } else {
        k = std::ceil(raw / multiple - 1e-12);
    }
    if (k < 1.0) k = 1.0;
    return static_cast<std::int64_t>(k) * multiple;
}

void check_theta_scalar(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) {
        fail(ErrorCode::SingularTheta, "theta must lie in (0, 1)");
    }
}

}  // namespace

Eigen::MatrixXd theta_precision(const SubgroupSpec& subgroups) {
    const int p = subgroups.p();
    if (p < 1) fail(ErrorCode::InvalidSubgroupSpec, "theta must be nonempty");
    double sum = 0.0;
    for (double t : subgroups.theta) {
        if (!(t > 0.0 && t < 1.0)) {
            fail(ErrorCode::SingularTheta, "theta_l must lie in (0, 1)");
        }
        sum += t;
    }
    if (!(sum < 1.0)) {
        fail(ErrorCode::SingularTheta, "sum(theta) must be < 1");
    }
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Constant(p, p, 1.0 / (1.0 - sum));
    for (int l = 0; l < p; ++l) out(l, l) += 1.0 / subgroups.theta[l];
    return out;
}

Eigen::MatrixXd var_beta4_conditional(const TrialDesign& design,
                                      const Assignment& w) {
    const double wb = wbar(design.clusters, w);
    const double scale = design.sigma_eps * design.sigma_eps /
                         (static_cast<double>(design.clusters.total()) * wb *
                          (1.0 - wb));
    return scale * theta_precision(design.subgroups);
}

Eigen::MatrixXd var_beta4_unconditional(const TrialDesign& design,
                                        const PsiEstimate& psi) {
    const double scale = design.sigma_eps * design.sigma_eps * psi.value /
                         static_cast<double>(design.clusters.total());
    return scale * theta_precision(design.subgroups);
}

double sigma4_equal_reference(std::int64_t m, double rho, double rho_x,
                              double wbar_mean, double sigma2_y_given_x,
                              double sigma2_x) {
    const double md = static_cast<double>(m);
    const double num = sigma2_y_given_x * (1.0 - rho) * (1.0 + (md - 1.0) * rho);
    const double den = md * sigma2_x * wbar_mean * (1.0 - wbar_mean) *
                       (1.0 + (md - 2.0) * rho - (md - 1.0) * rho_x * rho);
    if (!(den > 0.0)) {
        fail(ErrorCode::DegenerateDenominator, "sigma4_equal_reference denominator <= 0");
    }
    return num / den;
}

double sigma4_unequal_reference(std::span<const double> sizes, double rho,
                                const std::function<double(double)>& rho_x_of_m,
                                double wbar_mean, double sigma2_y_given_x,
                                double sigma2_x) {
    double bracket = 0.0;
    for (double mi : sizes) {
        const double rx = rho_x_of_m(mi);
        const double d = 1.0 + (mi - 1.0) * rho;
        bracket += mi - (1.0 - rx) * mi * rho / d - rx * mi * mi * rho / d;
    }
    bracket /= static_cast<double>(sizes.size());
    const double den = sigma2_x * wbar_mean * (1.0 - wbar_mean) * bracket;
    if (!(den > 0.0)) {
        fail(ErrorCode::DegenerateDenominator,
             "sigma4_unequal_reference denominator <= 0");
    }
    return sigma2_y_given_x * (1.0 - rho) / den;
}

double sigma4_unequal_reference(std::span<const double> sizes, double rho,
                                double rho_x, double wbar_mean,
                                double sigma2_y_given_x, double sigma2_x) {
    return sigma4_unequal_reference(
        sizes, rho, [rho_x](double) { return rho_x; }, wbar_mean,
        sigma2_y_given_x, sigma2_x);
}

VarBeta2 var_beta2(const TrialDesign& design, double rho, std::int64_t cap) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        fail(ErrorCode::InvalidRho, "rho must lie in [0, 1)");
    }
    const double s2e = design.sigma_eps * design.sigma_eps;
    const double s2g = s2e * rho / (1.0 - rho);
    const double psi = psi_rho(design.clusters, design.i1, rho, cap);

    double harmonic = 0.0;
    for (auto mi : design.clusters.sizes) {
        harmonic += 1.0 / (s2e / static_cast<double>(mi) + s2g);
    }
    const int I = design.clusters.count();
    VarBeta2 out;
    out.value = psi / harmonic;
    out.lower = psi * s2g / I;
    out.upper = psi * (s2g + s2e) / I;
    return out;
}

double power_wald_1d(const TrialDesign& design, double psi, double delta,
                     double alpha) {
    if (design.subgroups.p() != 1) {
        fail(ErrorCode::NotUnivariate, "the Wald power path requires p = 1");
    }
    const double theta = design.subgroups.theta[0];
    check_theta_scalar(theta);
    const double se2 = psi * design.sigma_eps * design.sigma_eps /
                       (static_cast<double>(design.clusters.total()) * theta *
                        (1.0 - theta));
    return normal_cdf(normal_quantile(alpha / 2) +
                      std::abs(delta) / std::sqrt(se2));
}

double noncentrality(const TrialDesign& design, double psi,
                     std::span<const double> delta) {
    const int p = design.subgroups.p();
    if (static_cast<int>(delta.size()) != p) {
        fail(ErrorCode::DomainError, "delta length must equal the number of subgroups");
    }
    Eigen::VectorXd d(p);
    for (int l = 0; l < p; ++l) d(l) = delta[l];
    Eigen::MatrixXd M = -Eigen::VectorXd::Map(design.subgroups.theta.data(), p) *
                        Eigen::VectorXd::Map(design.subgroups.theta.data(), p)
                            .transpose();
    for (int l = 0; l < p; ++l) M(l, l) += design.subgroups.theta[l];
    const double quad = d.dot(M * d);
    return static_cast<double>(design.clusters.total()) * quad /
           (psi * design.sigma_eps * design.sigma_eps);
}

double power_chisq(const TrialDesign& design, double psi,
                   std::span<const double> delta, double alpha) {
    const int p = design.subgroups.p();
    const double crit = chisq_quantile(1.0 - alpha, p);
    return noncentral_chisq_sf(crit, p, noncentrality(design, psi, delta));
}

SampleSizeResult min_avg_cluster_size(double delta, double theta,
                                      double sigma_eps, int n_clusters,
                                      double psi, double alpha,
                                      double target_power,
                                      std::int64_t multiple,
                                      RoundingMode mode) {
    check_theta_scalar(theta);
    if (delta == 0.0) fail(ErrorCode::DomainError, "delta must be nonzero");
    SampleSizeResult out;
    out.raw = psi * sigma_eps * sigma_eps * z_pair_squared(alpha, target_power) /
              (n_clusters * theta * (1.0 - theta) * delta * delta);
    out.rounded = snap_to_multiple(out.raw, multiple, mode);
    return out;
}

double required_total_size(double delta, double theta, double sigma_eps,
                           double psi, double alpha, double target_power) {
    check_theta_scalar(theta);
    return psi * sigma_eps * sigma_eps * z_pair_squared(alpha, target_power) /
           (theta * (1.0 - theta) * delta * delta);
}

double solve_equalizer_last_cluster(std::span<const double> fixed_sizes,
                                    double delta, double theta,
                                    double sigma_eps, double alpha,
                                    double target_power, double bracket_hi) {
    check_theta_scalar(theta);
    if (fixed_sizes.size() < 3) {
        fail(ErrorCode::TooFewClusters,
             "equalizer solve needs at least 3 fixed clusters (series needs I >= 4)");
    }
    std::vector<double> sizes(fixed_sizes.begin(), fixed_sizes.end());
    sizes.push_back(0.0);

    double fixed_total = 0.0;
    double lo = 1.0;
    for (double mi : fixed_sizes) {
        fixed_total += mi;
        lo = std::max(lo, mi);
    }

    // excess(m) > 0 once the design over-delivers the target power.
    const auto excess = [&](double m_last) {
        sizes.back() = m_last;
        const double psi = psi_series_real(sizes);
        return (fixed_total + m_last) * theta * (1.0 - theta) * delta * delta -
               psi * sigma_eps * sigma_eps * z_pair_squared(alpha, target_power);
    };

    if (excess(lo) >= 0.0) return lo;  // already adequate at the smallest size
    double hi = bracket_hi;
    if (excess(hi) < 0.0) {
        fail(ErrorCode::NoRootInBracket,
             "no cluster size in the bracket reaches the target power");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-8 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

double inverse_size_sum(std::span<const double> sizes) {
    double mean = 0.0;
    for (double mi : sizes) mean += mi;
    mean /= static_cast<double>(sizes.size());
    double s = 0.0;
    for (double mi : sizes) {
        if (!(mi > 0.0)) fail(ErrorCode::DomainError, "sizes must be positive");
        s += mean / mi;
    }
    return s;
}

double dropout_bracket_constant(double inv_size_sum, DropoutBracket bracket) {
    const double literal = inv_size_sum - 1.0;  // (1/I) sum (I*mbar - m_i)/m_i
    return bracket == DropoutBracket::FullCorrection ? literal : 0.5 * literal;
}

namespace {

struct DropoutTerms {
    double c0;  // 1/(theta(1-theta))
    double c1;  // [theta^3+(1-theta)^3](r + C) / (I (1-r) theta^2 (1-theta)^2)
};

DropoutTerms dropout_terms(const DropoutSpec& drop, double theta,
                           int n_clusters, double inv_size_sum,
                           DropoutBracket bracket) {
    check_theta_scalar(theta);
    if (!(drop.r > 0.0 && drop.r < 1.0)) {
        fail(ErrorCode::DomainError, "drop-out rate must lie in (0, 1)");
    }
    const double th = theta;
    const double om = 1.0 - theta;
    const double c = drop.r + dropout_bracket_constant(inv_size_sum, bracket);
    DropoutTerms t;
    t.c0 = 1.0 / (th * om);
    t.c1 = (th * th * th + om * om * om) * c /
           (n_clusters * (1.0 - drop.r) * th * th * om * om);
    return t;
}

}  // namespace

SampleSizeResult dropout_min_size(const DropoutSpec& drop, double delta,
                                  double theta, double sigma_eps,
                                  int n_clusters, double psi,
                                  double inv_size_sum, double alpha,
                                  double target_power, std::int64_t multiple,
                                  DropoutBracket bracket) {
    if (delta == 0.0) fail(ErrorCode::DomainError, "delta must be nonzero");
    const auto t = dropout_terms(drop, theta, n_clusters, inv_size_sum, bracket);
    const double a = psi * sigma_eps * sigma_eps *
                     z_pair_squared(alpha, target_power) /
                     (n_clusters * (1.0 - drop.r) * delta * delta);
    // mbar = a (c0 + c1/mbar)  <=>  mbar^2 - a c0 mbar - a c1 = 0.
    const double disc = a * a * t.c0 * t.c0 + 4.0 * a * t.c1;
    if (!(disc > 0.0)) {
        fail(ErrorCode::NonPositiveDiscriminant,
             "drop-out quadratic has no positive root");
    }
    SampleSizeResult out;
    out.raw = 0.5 * (a * t.c0 + std::sqrt(disc));
    out.rounded = snap_to_multiple(out.raw, multiple, RoundingMode::Nearest);
    return out;
}

double dropout_power(const DropoutSpec& drop, double m_bar, double delta,
                     double theta, double sigma_eps, int n_clusters,
                     double psi, double inv_size_sum, double alpha,
                     DropoutBracket bracket) {
    const auto t = dropout_terms(drop, theta, n_clusters, inv_size_sum, bracket);
    const double braces = t.c0 + t.c1 / m_bar;
    const double arg2 = n_clusters * (1.0 - drop.r) * m_bar /
                        (psi * sigma_eps * sigma_eps * braces);
    return normal_cdf(normal_quantile(alpha / 2) +
                      std::abs(delta) * std::sqrt(arg2));
}

// EPIC preset: I = 16, r = 0.25, sigma_eps = 10, psi = 4 (Wbar pinned at 1/2),
// equal planned sizes so inv_size_sum = I.
double epic_preset_power(double theta, double delta) {
    return dropout_power({0.25}, 40.0, delta, theta, 10.0, 16, 4.0, 16.0, 0.05,
                         DropoutBracket::FullCorrection);
}

double epic_preset_size(double theta, double delta) {
    return dropout_min_size({0.25}, delta, theta, 10.0, 16, 4.0, 16.0, 0.05,
                            0.8, 1, DropoutBracket::FullCorrection)
        .raw;
}

double epic_nodropout_power(double theta, double delta, double m_bar) {
    check_theta_scalar(theta);
    const double se2 = 4.0 * 100.0 / (16.0 * m_bar * theta * (1.0 - theta));
    return normal_cdf(normal_quantile(0.025) +
                      std::abs(delta) / std::sqrt(se2));
}

double epic_nodropout_size(double theta, double delta) {
    check_theta_scalar(theta);
    return 4.0 * 100.0 * z_pair_squared(0.05, 0.8) /
           (16.0 * theta * (1.0 - theta) * delta * delta);
}

}  // namespace crthte
