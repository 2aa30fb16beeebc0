#include "crthte/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "crthte/rng.hpp"
#include "crthte/stats.hpp"

namespace crthte {

namespace {

constexpr double kRhoHi = 0.9999;
constexpr double kGoldenTol = 1e-8;

struct Kahan {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

// ---------------------------------------------------------------------------
// Sufficient statistics: everything the profile-likelihood search needs.
// Columns of X are exclusive dummies, so X'X = diag(X'1); kept as a full
// matrix only for datasets supplied from outside.
// ---------------------------------------------------------------------------
struct ClusterStats {
    double n = 0.0;
    double w = 0.0;
    double sy = 0.0;
    double syy = 0.0;
    Eigen::VectorXd sx;
    Eigen::VectorXd sxy;
    Eigen::MatrixXd sxx;
};

struct StatsSet {
    std::vector<ClusterStats> clusters;
    std::int64_t n_total = 0;
    int p = 0;

    int dim() const { return 2 + 2 * p; }
};

StatsSet stats_from_dataset(const Dataset& data) {
    StatsSet set;
    set.p = data.p;
    for (const auto& cl : data.clusters) {
        if (cl.size() == 0) continue;
        ClusterStats s;
        s.n = static_cast<double>(cl.size());
        s.w = static_cast<double>(cl.arm);
        s.sy = cl.y.sum();
        s.syy = cl.y.squaredNorm();
        s.sx = cl.x.colwise().sum().transpose();
        s.sxy = cl.x.transpose() * cl.y;
        s.sxx = cl.x.transpose() * cl.x;
        set.n_total += cl.size();
        set.clusters.push_back(std::move(s));
    }
    return set;
}

// Design-matrix column order: [1, W, X, W*X].
Eigen::VectorXd cluster_zt1(const ClusterStats& s, int p) {
    Eigen::VectorXd g(2 + 2 * p);
    g(0) = s.n;
    g(1) = s.w * s.n;
    g.segment(2, p) = s.sx;
    g.segment(2 + p, p) = s.w * s.sx;
    return g;
}

struct FitCore {
    bool ok = false;
    Eigen::VectorXd beta;
    Eigen::MatrixXd info_inverse;  // (sum Z'R^-1 Z)^-1
    double q = 0.0;                // GLS residual sum of squares
    double lndet = 0.0;            // sum log det R_i
};

FitCore fit_at_rho(const StatsSet& set, double rho) {
    const int p = set.p;
    const int d = set.dim();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    double yry = 0.0;
    double lndet = 0.0;

    FitCore core;
    for (const auto& s : set.clusters) {
        const double di = 1.0 / (1.0 - rho + s.n * rho);
        const double coef = rho * di;

        Eigen::MatrixXd ztz(d, d);
        ztz(0, 0) = s.n;
        ztz(0, 1) = ztz(1, 0) = ztz(1, 1) = s.w * s.n;
        for (int l = 0; l < p; ++l) {
            ztz(0, 2 + l) = ztz(2 + l, 0) = s.sx(l);
            const double wx = s.w * s.sx(l);
            ztz(0, 2 + p + l) = ztz(2 + p + l, 0) = wx;
            ztz(1, 2 + l) = ztz(2 + l, 1) = wx;
            ztz(1, 2 + p + l) = ztz(2 + p + l, 1) = wx;
        }
        ztz.block(2, 2, p, p) = s.sxx;
        ztz.block(2, 2 + p, p, p) = s.w * s.sxx;
        ztz.block(2 + p, 2, p, p) = s.w * s.sxx;
        ztz.block(2 + p, 2 + p, p, p) = s.w * s.sxx;

        Eigen::VectorXd g = cluster_zt1(s, p);
        Eigen::VectorXd zty(d);
        zty(0) = s.sy;
        zty(1) = s.w * s.sy;
        zty.segment(2, p) = s.sxy;
        zty.segment(2 + p, p) = s.w * s.sxy;

        a.noalias() += ztz - coef * g * g.transpose();
        b.noalias() += zty - coef * s.sy * g;
        yry += s.syy - coef * s.sy * s.sy;
        lndet += (s.n - 1.0) * std::log(1.0 - rho) + std::log(1.0 - rho + s.n * rho);
    }
    const double inv1mr = 1.0 / (1.0 - rho);
    a *= inv1mr;
    b *= inv1mr;
    yry *= inv1mr;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return core;
    core.beta = ldlt.solve(b);
    core.info_inverse = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    core.q = yry - core.beta.dot(b);
    core.lndet = lndet;
    if (!(core.q > 0.0) || !core.beta.allFinite() ||
        !core.info_inverse.allFinite()) {
        return core;
    }
    core.ok = true;
    return core;
}

// -2 profile log-likelihood up to constants: N log Q(rho) + sum log det R_i.
double profile_objective(const StatsSet& set, double rho) {
    const FitCore core = fit_at_rho(set, rho);
    if (!core.ok) return std::numeric_limits<double>::infinity();
    return static_cast<double>(set.n_total) * std::log(core.q) + core.lndet;
}

FitResult finalize_fit(const StatsSet& set, double rho, bool converged) {
    const FitCore core = fit_at_rho(set, rho);
    if (!core.ok) {
        fail(ErrorCode::SingularInformation,
             "GLS information matrix is singular for this dataset");
    }
    const double n = static_cast<double>(set.n_total);
    constexpr double kTwoPi = 6.283185307179586476925;
    FitResult fit;
    fit.beta = core.beta;
    fit.rho_hat = rho;
    fit.sigma2_y_hat = core.q / n;
    fit.loglik = -0.5 * (n * std::log(kTwoPi * fit.sigma2_y_hat) +
                         core.lndet + n);
    fit.converged = converged;
    fit.cov_beta4 = fit.sigma2_y_hat *
                    core.info_inverse.block(2 + set.p, 2 + set.p, set.p, set.p);
    fit.se_beta4.resize(set.p);
    for (int l = 0; l < set.p; ++l) {
        const double v = fit.cov_beta4(l, l);
        if (!(v >= 0.0)) {
            fail(ErrorCode::SingularInformation, "negative variance estimate");
        }
        fit.se_beta4[l] = std::sqrt(v);
    }
    return fit;
}

FitResult fit_lmm_stats(const StatsSet& set) {
    // Coarse scan brackets the optimum, golden section refines it.
    constexpr int kGridPoints = 21;
    double best = std::numeric_limits<double>::infinity();
    int best_idx = 0;
    double grid[kGridPoints];
    for (int g = 0; g < kGridPoints; ++g) {
        grid[g] = kRhoHi * g / (kGridPoints - 1);
        const double f = profile_objective(set, grid[g]);
        if (f < best) {
            best = f;
            best_idx = g;
        }
    }
    if (!std::isfinite(best)) {
        fail(ErrorCode::SingularInformation,
             "profile likelihood undefined everywhere on the rho grid");
    }
    double lo = grid[std::max(0, best_idx - 1)];
    double hi = grid[std::min(kGridPoints - 1, best_idx + 1)];

    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = profile_objective(set, x1);
    double f2 = profile_objective(set, x2);
    while (hi - lo > kGoldenTol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = profile_objective(set, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = profile_objective(set, x2);
        }
    }
    double rho_hat = 0.5 * (lo + hi);
    // Snap to the boundary when the maximum sits there.
    if (rho_hat < 1e-6 && profile_objective(set, 0.0) <= profile_objective(set, rho_hat)) {
        rho_hat = 0.0;
    }
    const bool interior = rho_hat > 1e-6 && rho_hat < kRhoHi - 1e-6;
    return finalize_fit(set, rho_hat, interior);
}

// ---------------------------------------------------------------------------
// Base draws shared across a rho sweep: everything except the cluster-effect
// scale. labels[i][j] is the subgroup of member j of cluster i (-1 reference).
// ---------------------------------------------------------------------------
struct ReplicateBase {
    Assignment w;
    std::vector<std::vector<std::int8_t>> labels;
    std::vector<double> gamma_std;             // one N(0,1) per cluster
    std::vector<std::vector<double>> eps_std;  // one N(0,1) per member
};

std::vector<std::vector<std::int8_t>> fixed_prevalence_labels(
    const TrialDesign& design) {
    const int p = design.subgroups.p();
    std::vector<std::vector<std::int8_t>> labels(design.clusters.count());
    for (int i = 0; i < design.clusters.count(); ++i) {
        const std::int64_t mi = design.clusters.sizes[i];
        auto& lab = labels[i];
        lab.reserve(mi);
        for (int l = 0; l < p; ++l) {
            const auto k = static_cast<std::int64_t>(
                std::llround(static_cast<double>(mi) * design.subgroups.theta[l]));
            lab.insert(lab.end(), k, static_cast<std::int8_t>(l));
        }
        if (static_cast<std::int64_t>(lab.size()) > mi) {
            fail(ErrorCode::NonIntegerSubgroupCount,
                 "subgroup counts exceed the cluster size");
        }
        lab.insert(lab.end(), mi - lab.size(), std::int8_t{-1});
    }
    return labels;
}

ReplicateBase draw_base(const TrialDesign& design, double dropout_rate,
                        Rng& rng) {
    const int I = design.clusters.count();
    ReplicateBase base;
    base.w = sample_allocation(I, design.i1, rng);

    if (dropout_rate == 0.0) {
        base.labels = fixed_prevalence_labels(design);
        for (auto& lab : base.labels) rng.shuffle(lab);
    } else {
        if (design.subgroups.p() != 1) {
            fail(ErrorCode::NotUnivariate, "the drop-out model requires p = 1");
        }
        const double total = static_cast<double>(design.clusters.total());
        const double theta = design.subgroups.theta[0];
        const double survivors_real = total * (1.0 - dropout_rate);
        const double marked_real = total * theta;
        if (std::abs(survivors_real - std::round(survivors_real)) > 1e-6 ||
            std::abs(marked_real - std::round(marked_real)) > 1e-6) {
            fail(ErrorCode::NonIntegerSubgroupCount,
                 "I*mbar*(1-r) and I*mbar*theta must be integers");
        }
        const auto survivors = static_cast<std::int64_t>(std::llround(survivors_real));
        const auto marked = static_cast<std::int64_t>(std::llround(marked_real));
        const std::int64_t k =
            rng.hypergeometric(design.clusters.total(), marked, survivors);
        const auto weights = design.clusters.as_doubles();
        const auto target_counts = rng.multinomial(k, weights);
        const auto reference_counts = rng.multinomial(survivors - k, weights);
        base.labels.resize(I);
        for (int i = 0; i < I; ++i) {
            auto& lab = base.labels[i];
            lab.insert(lab.end(), target_counts[i], std::int8_t{0});
            lab.insert(lab.end(), reference_counts[i], std::int8_t{-1});
        }
    }

    base.gamma_std.resize(I);
    for (int i = 0; i < I; ++i) base.gamma_std[i] = rng.normal();
    base.eps_std.resize(I);
    for (int i = 0; i < I; ++i) {
        base.eps_std[i].resize(base.labels[i].size());
        for (auto& e : base.eps_std[i]) e = rng.normal();
    }
    return base;
}

StatsSet stats_from_base(const TrialDesign& design, const ModelParams& params,
                         const ReplicateBase& base) {
    const int p = design.subgroups.p();
    const double sigma_gamma = params.sigma_gamma(design.sigma_eps);
    StatsSet set;
    set.p = p;
    for (std::size_t i = 0; i < base.labels.size(); ++i) {
        const auto& lab = base.labels[i];
        if (lab.empty()) continue;
        ClusterStats s;
        s.n = static_cast<double>(lab.size());
        s.w = static_cast<double>(base.w.w[i]);
        s.sx = Eigen::VectorXd::Zero(p);
        s.sxy = Eigen::VectorXd::Zero(p);
        const double cluster_shift = sigma_gamma * base.gamma_std[i];
        const double arm_effect = params.beta1 + params.beta2 * s.w;
        for (std::size_t j = 0; j < lab.size(); ++j) {
            double mu = arm_effect;
            const int l = lab[j];
            if (l >= 0) {
                mu += params.beta3[l] + params.beta4[l] * s.w;
            }
            const double y =
                mu + cluster_shift + design.sigma_eps * base.eps_std[i][j];
            s.sy += y;
            s.syy += y * y;
            if (l >= 0) {
                s.sx(l) += 1.0;
                s.sxy(l) += y;
            }
        }
        s.sxx = s.sx.asDiagonal();  // exclusive dummies
        set.n_total += lab.size();
        set.clusters.push_back(std::move(s));
    }
    return set;
}

Dataset materialize(const TrialDesign& design, const ModelParams& params,
                    const ReplicateBase& base) {
    const int p = design.subgroups.p();
    const double sigma_gamma = params.sigma_gamma(design.sigma_eps);
    Dataset data;
    data.i1 = design.i1;
    data.p = p;
    data.clusters.resize(base.labels.size());
    for (std::size_t i = 0; i < base.labels.size(); ++i) {
        const auto& lab = base.labels[i];
        auto& cl = data.clusters[i];
        cl.arm = base.w.w[i];
        cl.x = Eigen::MatrixXd::Zero(lab.size(), p);
        cl.y = Eigen::VectorXd::Zero(lab.size());
        const double cluster_shift = sigma_gamma * base.gamma_std[i];
        for (std::size_t j = 0; j < lab.size(); ++j) {
            double mu = params.beta1 + params.beta2 * cl.arm;
            const int l = lab[j];
            if (l >= 0) {
                cl.x(j, l) = 1.0;
                mu += params.beta3[l] + params.beta4[l] * cl.arm;
            }
            cl.y(j) = mu + cluster_shift + design.sigma_eps * base.eps_std[i][j];
        }
    }
    return data;
}

void check_params(const TrialDesign& design, const ModelParams& params,
                  bool fixed_prevalence) {
    require_valid(design, /*check_integral_counts=*/fixed_prevalence);
    if (!(params.rho >= 0.0 && params.rho < 1.0)) {
        fail(ErrorCode::InvalidRho, "rho must lie in [0, 1)");
    }
    const auto p = static_cast<std::size_t>(design.subgroups.p());
    if (params.beta3.size() != p || params.beta4.size() != p) {
        fail(ErrorCode::DomainError, "beta3/beta4 length must equal p");
    }
}

// Per-replicate, per-rho record; aggregation happens in replicate order so
// results do not depend on the worker count.
struct RepRecord {
    double beta4 = 0.0;
    double se = 0.0;
    bool reject = false;
    bool ok = false;
};

bool wald_reject(const FitResult& fit, double alpha) {
    const int p = fit.p();
    if (p == 1) {
        return std::abs(fit.beta4(0)) >
               normal_quantile(1.0 - alpha / 2) * fit.se_beta4[0];
    }
    // Multivariate Wald against the chi-square critical value.
    Eigen::VectorXd b4(p);
    for (int l = 0; l < p; ++l) b4(l) = fit.beta4(l);
    const double stat = b4.dot(fit.cov_beta4.ldlt().solve(b4));
    return stat > chisq_quantile(1.0 - alpha, p);
}

}  // namespace

std::int64_t Dataset::n() const {
    std::int64_t total = 0;
    for (const auto& cl : clusters) total += cl.size();
    return total;
}

Dataset generate_dataset(const TrialDesign& design, const ModelParams& params,
                         std::uint64_t seed) {
    check_params(design, params, /*fixed_prevalence=*/true);
    Rng rng(seed);
    const auto base = draw_base(design, 0.0, rng);
    return materialize(design, params, base);
}

Dataset dropout_dataset(const TrialDesign& design, const ModelParams& params,
                        double dropout_rate, std::uint64_t seed) {
    check_params(design, params, /*fixed_prevalence=*/dropout_rate == 0.0);
    if (dropout_rate == 0.0) return generate_dataset(design, params, seed);
    if (!(dropout_rate > 0.0 && dropout_rate < 1.0)) {
        fail(ErrorCode::DomainError, "dropout rate must lie in [0, 1)");
    }
    Rng rng(seed);
    const auto base = draw_base(design, dropout_rate, rng);
    return materialize(design, params, base);
}

FitResult gls_given_rho(const Dataset& data, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        fail(ErrorCode::InvalidRho, "rho must lie in [0, 1)");
    }
    return finalize_fit(stats_from_dataset(data), rho, true);
}

FitResult fit_lmm(const Dataset& data) {
    return fit_lmm_stats(stats_from_dataset(data));
}

std::vector<OperatingCharacteristics> rho_sweep_characteristics(
    const TrialDesign& design, const ModelParams& params,
    const std::vector<double>& rhos, const SimOptions& options) {
    check_params(design, params,
                 /*fixed_prevalence=*/options.dropout_rate == 0.0 &&
                     !options.allow_rounded_counts);
    if (rhos.empty()) fail(ErrorCode::DomainError, "rho sweep needs >= 1 value");
    if (options.replicates < 1) {
        fail(ErrorCode::DomainError, "need at least one replicate");
    }
    const int reps = options.replicates;
    const int n_rhos = static_cast<int>(rhos.size());

    std::vector<RepRecord> records(static_cast<std::size_t>(reps) * n_rhos);

    const auto worker = [&](int tid, int stride) {
        ModelParams local = params;
        for (int k = tid; k < reps; k += stride) {
            Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(k)));
            ReplicateBase base;
            try {
                base = draw_base(design, options.dropout_rate, rng);
            } catch (const Error&) {
                continue;  // records stay !ok
            }
            for (int ri = 0; ri < n_rhos; ++ri) {
                local.rho = rhos[ri];
                auto& rec = records[static_cast<std::size_t>(k) * n_rhos + ri];
                try {
                    const StatsSet set = stats_from_base(design, local, base);
                    const FitResult fit = fit_lmm_stats(set);
                    rec.beta4 = fit.beta4(0);
                    rec.se = fit.se_beta4[0];
                    rec.reject = wald_reject(fit, options.alpha);
                    rec.ok = true;
                } catch (const Error&) {
                    rec.ok = false;
                }
            }
        }
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker, t, threads);
        }
        for (auto& th : pool) th.join();
    }

    const bool is_null = std::all_of(params.beta4.begin(), params.beta4.end(),
                                     [](double b) { return b == 0.0; });
    std::vector<OperatingCharacteristics> out(n_rhos);
    for (int ri = 0; ri < n_rhos; ++ri) {
        auto& oc = out[ri];
        oc.rho = rhos[ri];
        oc.replicates = reps;
        oc.seed = options.seed;
        oc.predicted = options.predicted;

        // Two-pass moments with compensated sums over successful replicates.
        Kahan sum;
        int n_ok = 0;
        for (int k = 0; k < reps; ++k) {
            const auto& rec = records[static_cast<std::size_t>(k) * n_rhos + ri];
            if (!rec.ok) continue;
            sum.add(rec.beta4);
            ++n_ok;
        }
        oc.failed = reps - n_ok;
        if (n_ok > 1) {
            const double mean = sum.sum / n_ok;
            Kahan ss, se_sum;
            std::int64_t rejections = 0;
            for (int k = 0; k < reps; ++k) {
                const auto& rec =
                    records[static_cast<std::size_t>(k) * n_rhos + ri];
                if (!rec.ok) continue;
                const double d = rec.beta4 - mean;
                ss.add(d * d);
                se_sum.add(rec.se);
                rejections += rec.reject ? 1 : 0;
            }
            oc.esd = std::sqrt(ss.sum / (n_ok - 1));
            oc.se_bar = se_sum.sum / n_ok;
            const double rate = static_cast<double>(rejections) / n_ok;
            (is_null ? oc.type1 : oc.power) = rate;
        }
    }
    return out;
}

OperatingCharacteristics operating_characteristics(const TrialDesign& design,
                                                   const ModelParams& params,
                                                   const SimOptions& options) {
    return rho_sweep_characteristics(design, params, {params.rho}, options)[0];
}

}  // namespace crthte
