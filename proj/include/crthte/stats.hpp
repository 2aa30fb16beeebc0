#pragma once

namespace crthte {

// ---------------------------------------------------------------------------
// Special functions needed by the power formulas. Self-contained (libm only).
// ---------------------------------------------------------------------------

// Standard normal CDF. Absolute error well below 1e-12 over the real line.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse normal CDF for p in (0,1); normal_cdf(normal_quantile(p)) = p
// to ~1e-15. Throws DomainError outside (0,1).
double normal_quantile(double p);

// Regularized incomplete gamma functions P(a,x) (lower) and Q(a,x) (upper).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Central chi-square CDF / survival / quantile with integer df >= 1.
double chisq_cdf(double x, int df);
double chisq_sf(double x, int df);
double chisq_quantile(double p, int df);

// Upper tail of the noncentral chi-square chi2(df, lambda), evaluated as a
// Poisson mixture of central chi-squares, truncated when the remaining
// Poisson mass drops below 1e-12. lambda = 0 gives the central tail.
double noncentral_chisq_sf(double x, int df, double lambda);

struct NoncentralChiSq {
    int df;
    double lambda;

    double sf(double x) const { return noncentral_chisq_sf(x, df, lambda); }
};

}  // namespace crthte
