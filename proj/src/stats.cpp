#include "crthte/stats.hpp"

#include <cmath>
#include <limits>

#include "crthte/error.hpp"

namespace crthte {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Regularized lower incomplete gamma by its power series, for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by modified Lentz continued fraction,
// for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double normal_cdf(double x) {
    if (!std::isfinite(x)) {
        if (std::isnan(x)) return x;
        return x > 0 ? 1.0 : 0.0;
    }
    // erfc keeps full relative accuracy in the lower tail.
    return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        fail(ErrorCode::DomainError, "normal_quantile requires p in (0, 1)");
    }

    // Acklam's rational approximation as the initial guess (~1e-9), then
    // Halley refinement against the erfc-based CDF.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    for (int iter = 0; iter < 3; ++iter) {
        const double e = normal_cdf(x) - p;
        const double u = e / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);  // Halley step
        if (std::abs(e) < 1e-15) break;
    }
    return x;
}

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) fail(ErrorCode::DomainError, "gamma_p domain");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) fail(ErrorCode::DomainError, "gamma_q domain");
    if (x == 0.0) return 1.0;
    return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chisq_cdf(double x, int df) {
    if (df < 1) fail(ErrorCode::DomainError, "chisq_cdf requires df >= 1");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(double x, int df) {
    if (df < 1) fail(ErrorCode::DomainError, "chisq_sf requires df >= 1");
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double chisq_quantile(double p, int df) {
    if (!(p > 0.0 && p < 1.0)) {
        fail(ErrorCode::DomainError, "chisq_quantile requires p in (0, 1)");
    }
    if (df < 1) fail(ErrorCode::DomainError, "chisq_quantile requires df >= 1");

    const double a = 0.5 * df;

    // Wilson-Hilferty starting point.
    const double z = normal_quantile(p);
    const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    double x = df * t * t * t;
    if (!(x > 0.0)) x = 0.5;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chisq_cdf(x, df) - p;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        if (std::abs(f) < 1e-14) break;
        const double pdf =
            0.5 * std::exp((a - 1.0) * std::log(0.5 * x) - 0.5 * x - std::lgamma(a));
        double step = (pdf > 0.0) ? f / pdf : 0.0;
        double next = x - step;
        if (!(next > lo && (next < hi))) {
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * x;  // bisect
        }
        if (next == x) break;
        x = next;
    }
    return x;
}

double noncentral_chisq_sf(double x, int df, double lambda) {
    if (df < 1) fail(ErrorCode::DomainError, "noncentral_chisq_sf requires df >= 1");
    if (lambda < 0.0) {
        fail(ErrorCode::DomainError, "noncentral_chisq_sf requires lambda >= 0");
    }
    if (x <= 0.0) return 1.0;
    if (!std::isfinite(x)) return 0.0;
    if (lambda == 0.0) return chisq_sf(x, df);

    // Poisson(lambda/2) mixture of central chi-square tails, with the tail
    // recurrence Q_{k+2}(x) = Q_k(x) + (x/2)^{k/2} e^{-x/2} / Gamma(k/2 + 1).
    const double half_lambda = 0.5 * lambda;
    if (half_lambda > 600.0) {
        // The j = 0 Poisson mass underflows long before this point; switch
        // to the moment-matched normal tail (mean df + lambda, variance
        // 2(df + 2 lambda)), which is ample at this noncentrality.
        return normal_cdf((df + lambda - x) / std::sqrt(2.0 * (df + 2.0 * lambda)));
    }
    const double half_x = 0.5 * x;
    const double half_df = 0.5 * df;

    double weight = std::exp(-half_lambda);          // Poisson mass at j = 0
    double cum_weight = weight;
    double tail = chisq_sf(x, df);                   // Q_{df + 2j}(x) at j = 0
    double tau = std::exp(half_df * std::log(half_x) - half_x -
                          std::lgamma(half_df + 1.0));
    double sum = weight * tail;

    for (int j = 1; j < 100000; ++j) {
        tail += tau;
        if (tail > 1.0) tail = 1.0;
        tau *= half_x / (half_df + j);
        weight *= half_lambda / j;
        cum_weight += weight;
        sum += weight * tail;
        // Remaining Poisson mass bounds the truncation error since tails <= 1.
        if (1.0 - cum_weight < 1e-12 && j > half_lambda) break;
    }
    if (sum < 0.0) return 0.0;
    if (sum > 1.0) return 1.0;
    return sum;
}

}  // namespace crthte
