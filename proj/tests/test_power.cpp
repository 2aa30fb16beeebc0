#include <doctest.h>

#include <cmath>

#include "crthte/power.hpp"
#include "crthte/rng.hpp"
#include "crthte/stats.hpp"
#include "oracles.hpp"

using namespace crthte;

namespace {

TrialDesign make_design(std::vector<std::int64_t> sizes, int i1,
                        std::vector<double> theta, double sigma = 1.0) {
    TrialDesign d;
    d.clusters.sizes = std::move(sizes);
    d.i1 = i1;
    d.subgroups.theta = std::move(theta);
    d.sigma_eps = sigma;
    return d;
}

TrialDesign pattern_design(int q, double m_bar, double theta) {
    TrialDesign d;
    d.clusters = build_simulation_pattern(q, m_bar);
    d.i1 = 4 * q;
    d.subgroups.theta = {theta};
    d.sigma_eps = 1.0;
    return d;
}

PsiEstimate psi_of(const TrialDesign& d) { return psi_approx(d.clusters); }

}  // namespace

TEST_CASE("theta_precision closed form") {
    SubgroupSpec half{{0.5}};
    CHECK(theta_precision(half)(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
    SubgroupSpec point3{{0.3}};
    CHECK(theta_precision(point3)(0, 0) ==
          doctest::Approx(4.761905).epsilon(1e-6));

    SubgroupSpec two{{0.3, 0.3}};
    const auto m = theta_precision(two);
    CHECK(m(0, 0) == doctest::Approx(1.0 / 0.3 + 2.5).epsilon(1e-12));
    CHECK(m(0, 1) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(m(1, 0) == doctest::Approx(2.5).epsilon(1e-12));

    // Against direct numerical inversion of diag(theta) - theta theta'.
    Eigen::MatrixXd direct(2, 2);
    direct << 0.3 - 0.09, -0.09, -0.09, 0.3 - 0.09;
    const Eigen::MatrixXd inv = direct.inverse();
    CHECK((m - inv).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(theta_precision(SubgroupSpec{{0.5, 0.5}}), Error);
    CHECK_THROWS_AS(theta_precision(SubgroupSpec{{0.0}}), Error);
}

TEST_CASE("conditional variance of the HTE estimator (exact at any I)") {
    auto d = make_design(std::vector<std::int64_t>(8, 20), 4, {0.5});
    Assignment w;
    w.w = {1, 1, 1, 1, 0, 0, 0, 0};
    CHECK(var_beta4_conditional(d, w)(0, 0) ==
          doctest::Approx(0.1).epsilon(1e-12));

    d.subgroups.theta = {0.3};
    CHECK(var_beta4_conditional(d, w)(0, 0) ==
          doctest::Approx(1.0 / (160 * 0.25 * 0.21)).epsilon(1e-12));
}

TEST_CASE("conditional variance equals the brute-force information inverse") {
    // Exactness check on one p = 2 design across the rho grid.
    auto d = make_design({10, 20, 30, 10, 20, 40}, 3, {0.3, 0.2});
    REQUIRE(validate_design(d).ok());
    Assignment w;
    w.w = {1, 0, 1, 0, 1, 0};
    const auto layout = oracles::fixed_prevalence_layout(d);
    const auto expect = var_beta4_conditional(d, w);
    for (double rho : {0.0, 0.05, 0.37, 0.5, 0.95}) {
        const double sigma2_y = d.sigma_eps * d.sigma_eps / (1.0 - rho);
        const Eigen::MatrixXd info =
            oracles::information_matrix_brute(d, layout, w, rho);
        const Eigen::MatrixXd cov = sigma2_y * info.inverse();
        const Eigen::MatrixXd block = cov.block(4, 4, 2, 2);
        CHECK((block - expect).cwiseAbs().maxCoeff() <
              1e-10 * expect.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("unconditional variance matches the table-1 standard errors") {
    const auto d = pattern_design(1, 20, 0.5);
    PsiEstimate psi = psi_of(d);
    const double var = var_beta4_unconditional(d, psi)(0, 0);
    CHECK(var == doctest::Approx(4.380022 / (8 * 20 * 0.25)).epsilon(1e-6));
    CHECK(std::sqrt(var) == doctest::Approx(0.3309).epsilon(2e-4));

    // Doubling I at fixed psi halves the variance.
    const auto d2 = pattern_design(2, 20, 0.5);
    CHECK(var_beta4_unconditional(d2, psi)(0, 0) ==
          doctest::Approx(var / 2).epsilon(1e-12));
}

TEST_CASE("equal sizes with psi = 4 recover the constant-size variance") {
    const auto d = make_design(std::vector<std::int64_t>(10, 30), 5, {0.5});
    PsiEstimate psi = psi_exact(d.clusters, 5);
    CHECK(psi.value == 4.0);
    const double var = var_beta4_unconditional(d, psi)(0, 0);
    // sigma_eps^2 / (m theta(1-theta) Wbar(1-Wbar)) / I with Wbar = 1/2.
    CHECK(var == doctest::Approx(1.0 / (30 * 0.25 * 0.25) / 10).epsilon(1e-12));
}

TEST_CASE("equal-size reference variance reductions") {
    const int m = 10;
    // Fixed prevalence: rho_x = -1/(m-1) removes rho entirely.
    const double rho_x = -1.0 / (m - 1);
    const double s2x = 0.25;
    for (double rho : {0.0, 0.2, 0.8}) {
        const double s2yx = 1.0 / (1.0 - rho);  // sigma_eps = 1
        CHECK(sigma4_equal_reference(m, rho, rho_x, 0.5, s2yx, s2x) ==
              doctest::Approx(1.0 / (m * s2x * 0.25)).epsilon(1e-12));
    }
    // rho = 0 leaves the individually randomized form.
    CHECK(sigma4_equal_reference(m, 0.0, 0.1, 0.5, 1.0, 0.25) ==
          doctest::Approx(1.0 / (m * 0.25 * 0.25)).epsilon(1e-12));
    // Hand evaluation at m=10, rho=0.2, rho_x=0.1, Wbar=0.5.
    const double num = 1.0 * 0.8 * (1.0 + 9 * 0.2);
    const double den = 10 * 0.25 * 0.25 * (1.0 + 8 * 0.2 - 9 * 0.1 * 0.2);
    CHECK(sigma4_equal_reference(10, 0.2, 0.1, 0.5, 1.0, 0.25) ==
          doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("unequal-size reference variance") {
    const std::vector<double> constant(6, 12.0);
    for (double rho : {0.0, 0.3, 0.7}) {
        CHECK(sigma4_unequal_reference(constant, rho, 0.1, 0.4, 1.3, 0.21) ==
              doctest::Approx(sigma4_equal_reference(12, rho, 0.1, 0.4, 1.3, 0.21))
                  .epsilon(1e-12));
    }

    // Per-cluster rho_x = -1/(m_i - 1) collapses the bracket to mbar.
    const std::vector<double> sizes = {5, 8, 12, 20, 35};
    double mbar = 0.0;
    for (double s : sizes) mbar += s;
    mbar /= sizes.size();
    for (double rho : {0.05, 0.5, 0.9}) {
        const double got = sigma4_unequal_reference(
            sizes, rho, [](double mi) { return -1.0 / (mi - 1.0); }, 0.5, 2.0,
            0.25);
        CHECK(got == doctest::Approx(2.0 * (1.0 - rho) / (mbar * 0.25 * 0.25))
                         .epsilon(1e-10));
    }
}

TEST_CASE("reduction chain: per-cluster rho_x matches the exact variance scale") {
    // On constant sizes the heuristic equals the exact result with
    // 1/(Wbar(1-Wbar)) evaluated at the mean.
    const std::vector<double> sizes(8, 14.0);
    const double theta = 0.25;
    const double s2x = theta * (1 - theta);
    for (double rho : {0.0, 0.4, 0.9}) {
        const double s2yx = 1.0 / (1.0 - rho);
        const double heuristic = sigma4_unequal_reference(
            sizes, rho, [](double mi) { return -1.0 / (mi - 1.0); }, 0.5, s2yx,
            s2x);
        CHECK(heuristic ==
              doctest::Approx(1.0 / (14.0 * s2x * 0.25)).epsilon(1e-10));
    }
}

TEST_CASE("variance of the treatment main effect keeps the ICC") {
    auto d = make_design({10, 20, 30, 40}, 2, {0.5});

    SUBCASE("rho = 0 collapses the harmonic sum") {
        const auto v = var_beta2(d, 0.0);
        const double psi0 = psi_rho(d.clusters, 2, 0.0);
        CHECK(v.value == doctest::Approx(psi0 / 100.0).epsilon(1e-12));
        CHECK(v.lower == 0.0);
        CHECK(v.value < v.upper);
    }

    SUBCASE("equal sizes give the closed form") {
        auto eq = make_design(std::vector<std::int64_t>(6, 15), 3, {0.5});
        const double rho = 0.4;
        const double s2g = rho / (1.0 - rho);
        const auto v = var_beta2(eq, rho);
        CHECK(v.value ==
              doctest::Approx(4.0 * (1.0 / 15.0 + s2g) / 6.0).epsilon(1e-12));
    }

    SUBCASE("bounds hold strictly when sigma_gamma > 0") {
        for (double rho : {0.05, 0.3, 0.8}) {
            const auto v = var_beta2(d, rho);
            CHECK(v.lower < v.value);
            CHECK(v.value < v.upper);
        }
    }
}

TEST_CASE("Wald power reproduces the published predicted powers") {
    const double psi = psi_approx(build_simulation_pattern(1, 20)).value;
    CHECK(power_wald_1d(pattern_design(1, 140, 0.5), psi, 0.35) ==
          doctest::Approx(0.7991).epsilon(5e-4 / 0.8));
    CHECK(power_wald_1d(pattern_design(1, 320, 0.3), psi, 0.25) ==
          doctest::Approx(0.7910).epsilon(5e-4 / 0.8));
    // Delta = 0 exposes the single-tail approximation: alpha/2, not alpha.
    CHECK(power_wald_1d(pattern_design(1, 140, 0.5), psi, 0.0) ==
          doctest::Approx(0.025).epsilon(1e-10));
    CHECK_THROWS_AS(
        power_wald_1d(make_design({10, 10}, 1, {0.2, 0.2}), 4.0, 0.3), Error);
}

TEST_CASE("chi-square power: null level, df=1 identity, p=2 arithmetic") {
    const auto d = pattern_design(1, 140, 0.5);
    const double psi = psi_approx(d.clusters).value;

    const std::vector<double> null_delta = {0.0};
    CHECK(power_chisq(d, psi, null_delta) == doctest::Approx(0.05).epsilon(1e-9));

    // p = 1: equals the two-sided normal power identity exactly, and the
    // one-tail Wald value to ~1e-3 whenever power is moderate.
    for (double delta : {0.2, 0.3, 0.35, 0.5}) {
        const std::vector<double> dv = {delta};
        const double theta_hit = noncentrality(d, psi, dv);
        const double z975 = normal_quantile(0.975);
        const double identity = normal_cdf(-z975 + std::sqrt(theta_hit)) +
                                normal_cdf(-z975 - std::sqrt(theta_hit));
        const double chisq = power_chisq(d, psi, dv);
        CHECK(chisq == doctest::Approx(identity).scale(1).epsilon(1e-6));
        if (power_wald_1d(d, psi, delta) >= 0.5) {
            CHECK(std::abs(chisq - power_wald_1d(d, psi, delta)) < 1e-3);
        }
    }

    // p = 2 hand arithmetic: theta = (0.3, 0.3), delta = (0.3, 0.3).
    auto d2 = make_design(std::vector<std::int64_t>(16, 60), 8, {0.3, 0.3});
    const std::vector<double> dv2 = {0.3, 0.3};
    const double quad = 0.09 * (0.3 - 0.09) * 2 + 2 * (0.09 * -0.09);
    const double expect_nc = 16 * 60 * quad / 4.165;
    CHECK(noncentrality(d2, 4.165, dv2) ==
          doctest::Approx(expect_nc).epsilon(1e-12));
    CHECK(power_chisq(d2, 4.165, dv2) ==
          doctest::Approx(noncentral_chisq_sf(chisq_quantile(0.95, 2), 2,
                                              expect_nc))
              .epsilon(1e-12));
}

TEST_CASE("power is monotone in delta, total size, and 1/psi") {
    const double psi = 4.38;
    double prev = 0.0;
    for (double delta : {0.1, 0.2, 0.3, 0.4}) {
        const double p = power_wald_1d(pattern_design(1, 100, 0.5), psi, delta);
        CHECK(p > prev);
        prev = p;
    }
    prev = 0.0;
    for (double mbar : {20.0, 60.0, 100.0, 200.0}) {
        const double p = power_wald_1d(pattern_design(1, mbar, 0.5), psi, 0.3);
        CHECK(p > prev);
        prev = p;
    }
    prev = 0.0;
    for (int q : {1, 2, 4}) {
        const double p = power_wald_1d(pattern_design(q, 60, 0.5), psi, 0.3);
        CHECK(p > prev);
        prev = p;
    }
    prev = 1.0;
    for (double psi_v : {4.0, 4.4, 6.0, 9.9}) {
        const double p = power_wald_1d(pattern_design(1, 100, 0.5), psi_v, 0.3);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("power over theta peaks at one half") {
    const double psi = 4.38;
    const double at_half = power_wald_1d(pattern_design(1, 100, 0.5), psi, 0.3);
    for (double theta : {0.1, 0.25, 0.4, 0.45}) {
        TrialDesign d = pattern_design(1, 100, theta);
        d.subgroups.theta = {theta};
        CHECK(power_wald_1d(d, psi, 0.3) < at_half);
        TrialDesign mirrored = pattern_design(1, 100, 1.0 - theta);
        CHECK(power_wald_1d(mirrored, psi, 0.3) ==
              doctest::Approx(power_wald_1d(d, psi, 0.3)).epsilon(1e-12));
    }
}

TEST_CASE("sample size solver reproduces the table-2 sizes") {
    const double psi = psi_approx(build_simulation_pattern(1, 20)).value;
    struct Case { double theta, delta; std::int64_t mult, expect; };
    const Case cases[] = {
        {0.3, 0.25, 20, 320}, {0.3, 0.35, 20, 160}, {0.3, 0.45, 20, 100},
        {0.4, 0.25, 10, 290}, {0.4, 0.35, 10, 150}, {0.4, 0.45, 10, 90},
        {0.5, 0.25, 4, 276},  {0.5, 0.35, 4, 140},  {0.5, 0.45, 4, 84},
    };
    for (const auto& c : cases) {
        const auto r =
            min_avg_cluster_size(c.delta, c.theta, 1.0, 8, psi, 0.05, 0.8, c.mult);
        CHECK(r.rounded == c.expect);
    }
    // Spot raw values quoted alongside the table.
    const auto raw1 = min_avg_cluster_size(0.35, 0.5, 1.0, 8, psi, 0.05, 0.8, 4);
    CHECK(raw1.raw == doctest::Approx(140.32).epsilon(1e-4));
    const auto raw2 = min_avg_cluster_size(0.25, 0.3, 1.0, 8, psi, 0.05, 0.8, 20);
    CHECK(raw2.raw == doctest::Approx(327.4).epsilon(1e-3));
}

TEST_CASE("sample size solver reproduces the table-3 sizes") {
    struct Case { int q; double delta; std::int64_t mult, expect; };
    const Case cases[] = {
        {2, 0.25, 4, 132}, {2, 0.35, 4, 68}, {2, 0.45, 4, 40},
        {3, 0.25, 2, 86},  {3, 0.35, 4, 44}, {3, 0.45, 4, 28},
        {4, 0.25, 4, 64},  {4, 0.35, 4, 32}, {4, 0.45, 4, 20},
    };
    for (const auto& c : cases) {
        const double psi = psi_approx(build_simulation_pattern(c.q, 20)).value;
        const auto r = min_avg_cluster_size(c.delta, 0.5, 1.0, 8 * c.q, psi,
                                            0.05, 0.8, c.mult);
        CHECK(r.rounded == c.expect);
    }
    // q = 2, delta = 0.25 raw value.
    const double psi2 = psi_approx(build_simulation_pattern(2, 20)).value;
    CHECK(min_avg_cluster_size(0.25, 0.5, 1.0, 16, psi2, 0.05, 0.8, 4).raw ==
          doctest::Approx(130.8).epsilon(1e-3));
}

TEST_CASE("total-size identity is nearly constant across the cluster count") {
    // I mbar theta(1-theta) delta^2 = psi sigma^2 z^2, checked through the
    // rounded table-3 sizes: totals differ by at most one rounding multiple
    // times the larger cluster count.
    const std::int64_t totals_025[] = {16 * 132, 24 * 86, 32 * 64};
    const std::int64_t totals_035[] = {16 * 68, 24 * 44, 32 * 32};
    const std::int64_t totals_045[] = {16 * 40, 24 * 28, 32 * 20};
    for (const auto* totals : {totals_025, totals_035, totals_045}) {
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                const std::int64_t span = std::abs(totals[a] - totals[b]);
                CHECK(span <= 32 * 4);
            }
        }
    }
}

TEST_CASE("equalizer solve: equal sizes reduce to the closed form") {
    // With psi pinned at 4 the required total matches min_avg_cluster_size.
    const double total = required_total_size(0.3, 0.5, 1.0, 4.0, 0.05, 0.8);
    const auto direct = min_avg_cluster_size(0.3, 0.5, 1.0, 40, 4.0, 0.05, 0.8, 1);
    CHECK(total / 40.0 == doctest::Approx(direct.raw).epsilon(1e-12));
}

TEST_CASE("equalizer solve pins the case-study extreme designs") {
    // At the published 80%-power thresholds the solved largest cluster is the
    // actual trial's largest cluster.
    std::vector<double> recode_fixed(39, 3.0);
    const double m40 = solve_equalizer_last_cluster(recode_fixed, 0.2753787,
                                                    1.0 / 3.0, 0.49, 0.05, 0.8);
    CHECK(m40 == doctest::Approx(963.0).epsilon(5e-3));

    std::vector<double> partner_fixed(21, 4.0);
    const double m22 = solve_equalizer_last_cluster(partner_fixed, 0.6233597,
                                                    0.25, 0.91, 0.05, 0.8);
    CHECK(m22 == doctest::Approx(796.0).epsilon(5e-3));

    // Tiny effects are infeasible inside the bracket.
    CHECK_THROWS_AS(solve_equalizer_last_cluster(recode_fixed, 0.01, 1.0 / 3.0,
                                                 0.49, 0.05, 0.8),
                    Error);
}

TEST_CASE("drop-out solver reproduces the table-4 sizes") {
    const double psi = psi_approx(build_simulation_pattern(1, 20)).value;
    const double s = pattern_inverse_size_sum(1);
    CHECK(s == doctest::Approx(11.9).epsilon(1e-12));
    CHECK(dropout_bracket_constant(s, DropoutBracket::FullCorrection) ==
          doctest::Approx(10.9).epsilon(1e-12));
    CHECK(dropout_bracket_constant(s, DropoutBracket::HalvedCorrection) ==
          doctest::Approx(5.45).epsilon(1e-12));

    struct Case { double r, delta; std::int64_t mult, expect; };
    const Case cases[] = {
        {0.2, 0.25, 10, 340},  {0.2, 0.35, 10, 180},  {0.2, 0.45, 10, 110},
        {0.25, 0.25, 4, 368},  {0.25, 0.35, 4, 188},  {0.25, 0.45, 4, 116},
        {0.3, 0.25, 20, 400},  {0.3, 0.35, 20, 200},  {0.3, 0.45, 20, 120},
    };
    for (const auto& c : cases) {
        const auto r = dropout_min_size({c.r}, c.delta, 0.5, 1.0, 8, psi, s,
                                        0.05, 0.8, c.mult);
        CHECK(r.rounded == c.expect);
    }
    CHECK(dropout_min_size({0.2}, 0.35, 0.5, 1.0, 8, psi, s, 0.05, 0.8, 10).raw ==
          doctest::Approx(176.3).epsilon(1e-3));
}

TEST_CASE("drop-out predicted power matches the table-4 column") {
    const double psi = psi_approx(build_simulation_pattern(1, 20)).value;
    const double s = pattern_inverse_size_sum(1);
    struct Case { double r, delta; std::int64_t m; double expect; };
    const Case cases[] = {
        {0.2, 0.25, 340, 0.7936},  {0.2, 0.35, 180, 0.8064},
        {0.2, 0.45, 110, 0.8079},  {0.25, 0.25, 368, 0.7994},
        {0.25, 0.35, 188, 0.7980}, {0.25, 0.45, 116, 0.8034},
        {0.3, 0.25, 400, 0.8051},  {0.3, 0.35, 200, 0.7952},
        {0.3, 0.45, 120, 0.7893},
    };
    for (const auto& c : cases) {
        const double phi = dropout_power({c.r}, static_cast<double>(c.m),
                                         c.delta, 0.5, 1.0, 8, psi, s);
        CHECK(phi == doctest::Approx(c.expect).scale(1).epsilon(2e-3));
    }
    // The halved reading disagrees most at (0.3, 0.45); both are exposed.
    const double halved = dropout_power({0.3}, 120.0, 0.45, 0.5, 1.0, 8, psi,
                                        s, 0.05, DropoutBracket::HalvedCorrection);
    CHECK(halved > 0.79);
    CHECK(halved != dropout_power({0.3}, 120.0, 0.45, 0.5, 1.0, 8, psi, s));
}

TEST_CASE("drop-out power approaches the Wald power as r -> 0 and mbar grows") {
    const double psi = psi_approx(build_simulation_pattern(1, 20)).value;
    const double s = pattern_inverse_size_sum(1);
    for (double mbar : {200.0, 2000.0, 20000.0}) {
        const double with_dropout =
            dropout_power({1e-12}, mbar, 0.02, 0.5, 1.0, 8, psi, s);
        const double wald = power_wald_1d(pattern_design(1, mbar, 0.5), psi, 0.02);
        // The finite-size bracket correction decays like 1/mbar.
        CHECK(std::abs(with_dropout - wald) < 10.0 / mbar);
    }
}

TEST_CASE("drop-out solver approaches the no-drop-out size as r -> 0") {
    const double psi = psi_approx(build_simulation_pattern(1, 20)).value;
    const double s = pattern_inverse_size_sum(1);
    const double raw =
        dropout_min_size({1e-9}, 0.35, 0.5, 1.0, 8, psi, s, 0.05, 0.8, 1).raw;
    // Limit form: mbar = a0 (4 + 5.45/(2 mbar)), a0 the no-drop-out prefactor.
    const double a0 = min_avg_cluster_size(0.35, 0.5, 1.0, 8, psi, 0.05, 0.8, 1).raw / 4.0;
    const double expect = 2.0 * a0 + std::sqrt(4.0 * a0 * a0 + a0 * 5.45 / 2.0);
    CHECK(raw == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("epic preset formulas") {
    // 80% detectable effects quoted for the study.
    CHECK(epic_preset_power(0.25, 6.13) == doctest::Approx(0.80).scale(1).epsilon(2e-3));
    CHECK(epic_nodropout_power(0.25, 5.91) ==
          doctest::Approx(0.80).scale(1).epsilon(2e-3));

    // The planned size solves to the actual 40-per-cluster design at the
    // exact 80% threshold.
    const double thr = oracles::bisect(
        [](double d) { return epic_preset_power(0.25, d); }, 0.8, 0.1, 15.0);
    CHECK(thr == doctest::Approx(6.1213).epsilon(1e-4));
    CHECK(epic_preset_size(0.25, thr) == doctest::Approx(40.0).epsilon(1e-4));

    const double thr0 = oracles::bisect(
        [](double d) { return epic_nodropout_power(0.25, d); }, 0.8, 0.1, 15.0);
    CHECK(thr0 == doctest::Approx(5.9063).epsilon(1e-4));

    // Prevalence sweep: symmetric around 1/2 and maximized there.
    for (double th : {0.1, 0.2, 0.3, 0.45}) {
        CHECK(epic_preset_power(th, 7.5) ==
              doctest::Approx(epic_preset_power(1.0 - th, 7.5)).epsilon(1e-12));
        CHECK(epic_preset_power(th, 7.5) < epic_preset_power(0.5, 7.5));
    }
    // Published sweep end points: Delta = 7.5 detectable on [0.158, 0.842].
    CHECK(epic_preset_power(0.158, 7.5) >= 0.8 - 2e-3);
    CHECK(epic_preset_power(0.157, 7.5) < 0.8);
    CHECK(epic_preset_power(0.842, 7.5) >= 0.8 - 2e-3);
}
