#include <doctest.h>

#include <cmath>

#include "crthte/rng.hpp"
#include "crthte/sim.hpp"
#include "crthte/stats.hpp"
#include "crthte/tables.hpp"
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

ModelParams params_p1(double beta4, double rho) {
    return table_params(beta4, rho);
}

// Random design satisfying the fixed-prevalence condition: sizes are
// multiples of denom, theta_l = k_l/denom.
TrialDesign random_fixed_prevalence(Rng& rng, int p) {
    const int denom = 4 + static_cast<int>(rng.uniform_below(5));  // 4..8
    const int I = 4 + static_cast<int>(rng.uniform_below(7));
    TrialDesign d;
    for (int i = 0; i < I; ++i) {
        d.clusters.sizes.push_back(denom * (1 + static_cast<std::int64_t>(
                                                    rng.uniform_below(6))));
    }
    d.i1 = 1 + static_cast<int>(rng.uniform_below(I - 1));
    // Distinct positive numerators summing below denom.
    std::vector<int> numerators;
    int used = 0;
    for (int l = 0; l < p; ++l) {
        numerators.push_back(1);
        ++used;
    }
    while (used < denom - 1 && rng.uniform() < 0.5) {
        ++numerators[static_cast<std::size_t>(rng.uniform_below(p))];
        ++used;
    }
    for (int l = 0; l < p; ++l) {
        d.subgroups.theta.push_back(static_cast<double>(numerators[l]) / denom);
    }
    d.sigma_eps = 0.5 + rng.uniform();
    return d;
}

ModelParams random_params(Rng& rng, int p, double rho) {
    ModelParams params;
    params.beta1 = rng.normal();
    params.beta2 = rng.normal();
    for (int l = 0; l < p; ++l) {
        params.beta3.push_back(rng.normal());
        params.beta4.push_back(rng.normal());
    }
    params.rho = rho;
    return params;
}

}  // namespace

TEST_CASE("generate_dataset: exact column sums across seeds") {
    auto d = make_design({12, 24, 36, 12}, 2, {0.25, 0.5});
    Rng seeder(5);
    ModelParams params = random_params(seeder, 2, 0.3);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto data = generate_dataset(d, params, seed);
        REQUIRE(data.clusters.size() == 4);
        int arms = 0;
        for (int i = 0; i < 4; ++i) {
            arms += data.clusters[i].arm;
            const Eigen::VectorXd sums = data.clusters[i].x.colwise().sum();
            CHECK(sums(0) == doctest::Approx(0.25 * d.clusters.sizes[i]));
            CHECK(sums(1) == doctest::Approx(0.5 * d.clusters.sizes[i]));
        }
        CHECK(arms == 2);
    }
}

TEST_CASE("generate_dataset: noiseless limit hits the fixed-effect means") {
    auto d = make_design({8, 8, 8, 8}, 2, {0.5}, 1e-9);
    ModelParams params = params_p1(0.35, 0.0);
    const auto data = generate_dataset(d, params, 77);
    for (const auto& cl : data.clusters) {
        for (std::int64_t j = 0; j < cl.size(); ++j) {
            const double expect = params.beta1 + params.beta2 * cl.arm +
                                  cl.x(j, 0) * (0.1 + 0.35 * cl.arm);
            CHECK(cl.y(j) == doctest::Approx(expect).scale(1).epsilon(1e-6));
        }
    }
}

TEST_CASE("generate_dataset: grand mean matches expectation arithmetic") {
    // Equal sizes and balanced arms pin Wbar at 1/2 for every draw.
    auto d = make_design(std::vector<std::int64_t>(100, 1000), 50, {0.5});
    ModelParams params = params_p1(0.35, 0.2);
    const auto data = generate_dataset(d, params, 2024);
    double sum = 0.0;
    for (const auto& cl : data.clusters) sum += cl.y.sum();
    const double mean = sum / 100000.0;
    const double expect = 0.15 + 0.25 / 2 + 0.5 * 0.1 + 0.5 * 0.35 / 2;
    const double s2g = params.sigma_gamma(1.0) * params.sigma_gamma(1.0);
    const double se = std::sqrt(s2g / 100 + 1.0 / 100000.0);
    CHECK(std::abs(mean - expect) < 3 * se);
}

TEST_CASE("generate_dataset is deterministic in the seed") {
    auto d = make_design({12, 24, 36, 12}, 2, {0.25}, 1.3);
    ModelParams params = params_p1(0.2, 0.6);
    const auto a = generate_dataset(d, params, 31415);
    const auto b = generate_dataset(d, params, 31415);
    const auto c = generate_dataset(d, params, 31416);
    bool same = true, differs = false;
    for (int i = 0; i < 4; ++i) {
        same = same && a.clusters[i].y == b.clusters[i].y &&
               a.clusters[i].arm == b.clusters[i].arm;
        differs = differs || a.clusters[i].y != c.clusters[i].y;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("dropout_dataset: survivor totals and the r = 0 limit") {
    auto d = make_design(std::vector<std::int64_t>(8, 40), 4, {0.5});
    ModelParams params = params_p1(0.35, 0.5);

    SUBCASE("r = 0 reproduces the fixed counts exactly") {
        const auto drop = dropout_dataset(d, params, 0.0, 99);
        const auto fixed = generate_dataset(d, params, 99);
        REQUIRE(drop.clusters.size() == fixed.clusters.size());
        for (std::size_t i = 0; i < drop.clusters.size(); ++i) {
            CHECK(drop.clusters[i].y == fixed.clusters[i].y);
            CHECK(drop.clusters[i].x.colwise().sum()(0) == 20.0);
        }
    }

    SUBCASE("survivor count is I*mbar*(1-r) on every draw") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto data = dropout_dataset(d, params, 0.25, seed);
            CHECK(data.n() == 240);
        }
    }

    SUBCASE("target-survivor mean matches the hypergeometric moments") {
        const double total = 320, survivors = 240, theta = 0.5;
        double sum = 0.0;
        const int draws = 10000;
        for (int seed = 0; seed < draws; ++seed) {
            const auto data = dropout_dataset(d, params, 0.25, seed + 1000);
            double k = 0.0;
            for (const auto& cl : data.clusters) {
                if (cl.size() > 0) k += cl.x.col(0).sum();
            }
            sum += k;
        }
        const double mean_k = sum / draws;
        const double expect = survivors * theta;
        const double var_k = total * total * (survivors / total) *
                             (1 - survivors / total) * theta * (1 - theta) /
                             (total - 1);
        const double se = std::sqrt(var_k / draws);
        CHECK(std::abs(mean_k - expect) < 3 * se + 1e-9);
    }
}

TEST_CASE("gls at rho = 0 equals stacked ordinary least squares") {
    Rng rng(314);
    for (int trial = 0; trial < 8; ++trial) {
        const int p = 1 + static_cast<int>(rng.uniform_below(3));
        const auto d = random_fixed_prevalence(rng, p);
        const auto params = random_params(rng, p, 0.4);
        const auto data = generate_dataset(d, params, 555 + trial);
        const auto fit = gls_given_rho(data, 0.0);
        const Eigen::VectorXd ols = oracles::ols_stacked(data);
        CHECK((fit.beta - ols).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("beta4 estimate is invariant to the working rho on fixed-prevalence data") {
    Rng rng(2718);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + static_cast<int>(rng.uniform_below(2));
        const auto d = random_fixed_prevalence(rng, p);
        const auto params = random_params(rng, p, 0.5);
        const auto data = generate_dataset(d, params, 7000 + trial);
        const auto fit0 = gls_given_rho(data, 0.0);
        const auto fit9 = gls_given_rho(data, 0.9);
        for (int l = 0; l < p; ++l) {
            CHECK(fit0.beta4(l) ==
                  doctest::Approx(fit9.beta4(l)).scale(1).epsilon(1e-8));
        }
    }
}

TEST_CASE("model-based variance at the true scale equals the exact formula") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int p = 1 + static_cast<int>(rng.uniform_below(3));
        const auto d = random_fixed_prevalence(rng, p);
        const auto params = random_params(rng, p, 0.37);
        const auto data = generate_dataset(d, params, 4200 + trial);

        Assignment w;
        for (const auto& cl : data.clusters) {
            w.w.push_back(static_cast<std::uint8_t>(cl.arm));
        }
        const auto expect = var_beta4_conditional(d, w);

        const auto fit = gls_given_rho(data, params.rho);
        const double true_s2yx = params.sigma2_y_given_x(d.sigma_eps);
        const Eigen::MatrixXd rescaled =
            fit.cov_beta4 * (true_s2yx / fit.sigma2_y_hat);
        CHECK((rescaled - expect).cwiseAbs().maxCoeff() <
              1e-10 * expect.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("profile fit recovers a near-zero ICC when none is present") {
    auto d = make_design(std::vector<std::int64_t>(16, 60), 8, {0.5});
    ModelParams params = params_p1(0.35, 0.0);  // sigma_gamma = 0
    int small = 0;
    const int seeds = 200;
    for (int seed = 0; seed < seeds; ++seed) {
        const auto fit = fit_lmm(generate_dataset(d, params, 90000 + seed));
        if (fit.rho_hat <= 0.05) ++small;
    }
    CHECK(small >= static_cast<int>(0.95 * seeds));
}

TEST_CASE("profile optimum dominates a rho grid") {
    auto d = make_design({20, 40, 20, 40, 60, 20}, 3, {0.5});
    ModelParams params = params_p1(0.35, 0.5);
    const auto data = generate_dataset(d, params, 12);
    const auto fit = fit_lmm(data);
    for (double rho = 0.0; rho < 0.96; rho += 0.05) {
        CHECK(fit.loglik >= gls_given_rho(data, rho).loglik - 1e-7);
    }
}

TEST_CASE("fit surfaces the estimated ICC sensibly at moderate sizes") {
    auto d = make_design(std::vector<std::int64_t>(24, 50), 12, {0.5});
    ModelParams params = params_p1(0.35, 0.5);
    double sum = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
        sum += fit_lmm(generate_dataset(d, params, 333 + seed)).rho_hat;
    }
    CHECK(sum / 50 == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("operating characteristics are deterministic and thread-invariant") {
    auto d = make_design({10, 10, 20, 20, 30, 30, 40, 40}, 4, {0.5});
    ModelParams params = params_p1(0.35, 0.5);
    SimOptions options;
    options.replicates = 300;
    options.seed = 424242;

    options.threads = 1;
    const auto serial = operating_characteristics(d, params, options);
    options.threads = 4;
    const auto parallel = operating_characteristics(d, params, options);
    CHECK(serial.esd == parallel.esd);
    CHECK(serial.se_bar == parallel.se_bar);
    CHECK(serial.power == parallel.power);
    CHECK(serial.failed == parallel.failed);
    CHECK(serial.type1 == -1.0);
    CHECK(serial.power >= 0.0);
}

TEST_CASE("rho sweep shares base draws: identical ESD, stable power") {
    auto d = pattern_design(1, 40, 0.5);
    ModelParams params = params_p1(0.35, 0.05);
    SimOptions options;
    options.replicates = 500;
    options.seed = 777;
    options.threads = 2;
    const auto sweep =
        rho_sweep_characteristics(d, params, {0.05, 0.5, 0.95}, options);
    REQUIRE(sweep.size() == 3);
    for (int i = 1; i < 3; ++i) {
        CHECK(std::abs(sweep[i].esd - sweep[0].esd) < 1e-10);
        CHECK(std::abs(sweep[i].power - sweep[0].power) < 0.005);
    }
    // A null run reports type1 instead of power.
    ModelParams null_params = params_p1(0.0, 0.05);
    const auto null_sweep =
        rho_sweep_characteristics(d, null_params, {0.05, 0.5}, options);
    CHECK(null_sweep[0].power == -1.0);
    CHECK(null_sweep[0].type1 >= 0.0);
}

TEST_CASE("model-reported SE tracks the computed SE at the table design") {
    auto d = pattern_design(1, 40, 0.5);
    ModelParams params = params_p1(0.35, 0.5);
    SimOptions options;
    options.replicates = 500;
    options.seed = 20240809;
    options.threads = 2;
    const auto oc = operating_characteristics(d, params, options);
    const double cse = std::sqrt(
        psi_approx(d.clusters).value /
        (static_cast<double>(d.clusters.total()) * 0.25));
    CHECK(std::abs(oc.se_bar - cse) / cse < 0.05);
    CHECK(std::abs(oc.esd - cse) / cse < 0.15);  // 500 replicates
    CHECK(oc.failed == 0);
}

TEST_CASE("rounded-count generation covers designs that cannot split exactly") {
    // 43 participants cannot hold exactly half and half; the lenient mode
    // rounds the subgroup count (here to 22) instead of rejecting.
    auto d = pattern_design(3, 86, 0.5);
    ModelParams params = params_p1(0.25, 0.5);
    SimOptions options;
    options.replicates = 50;
    options.seed = 5150;
    CHECK_THROWS_AS(operating_characteristics(d, params, options), Error);
    options.allow_rounded_counts = true;
    const auto oc = operating_characteristics(d, params, options);
    CHECK(oc.failed == 0);
    CHECK(oc.power >= 0.0);
}

TEST_CASE("table-1 standard errors round to the published column") {
    struct Cell { int q; double m_bar, cse; };
    const Cell cells[] = {{1, 20, 0.3309}, {1, 40, 0.2340}, {1, 60, 0.1911},
                          {2, 20, 0.2282}, {2, 40, 0.1613}, {2, 60, 0.1317},
                          {3, 20, 0.1849}, {3, 40, 0.1308}, {3, 60, 0.1068}};
    for (const auto& cell : cells) {
        const double psi = psi_approx(build_simulation_pattern(cell.q, 20)).value;
        const double cse = std::sqrt(4.0 * psi / (8 * cell.q * cell.m_bar));
        CHECK(std::floor(cse * 1e4 + 0.5) / 1e4 == doctest::Approx(cell.cse));
    }
}

TEST_CASE("table recipes expose the published design cells") {
    const auto t2 = table2_cells();
    REQUIRE(t2.size() == 9);
    CHECK(t2[0].m_bar == 320);
    CHECK(t2[8].m_bar == 84);
    const auto t3 = table3_cells();
    CHECK(t3[3].m_bar == 86);
    CHECK(t3[8].m_bar == 20);
    CHECK(t3[8].predicted == doctest::Approx(0.8049).epsilon(2e-3));
    const auto t4 = table4_cells();
    CHECK(t4[6].m_bar == 400);
    CHECK(t4[6].predicted == doctest::Approx(0.8051).epsilon(2e-3));
}
