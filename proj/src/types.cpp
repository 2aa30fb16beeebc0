#include "crthte/types.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace crthte {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyDesign: return "EmptyDesign";
        case ErrorCode::ArmCountOutOfRange: return "ArmCountOutOfRange";
        case ErrorCode::NonIntegerSubgroupCount: return "NonIntegerSubgroupCount";
        case ErrorCode::NonIntegerPatternEntry: return "NonIntegerPatternEntry";
        case ErrorCode::InvalidSubgroupSpec: return "InvalidSubgroupSpec";
        case ErrorCode::InvalidSigma: return "InvalidSigma";
        case ErrorCode::InvalidRho: return "InvalidRho";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::DegenerateAssignment: return "DegenerateAssignment";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::TooFewClusters: return "TooFewClusters";
        case ErrorCode::UnequalArms: return "UnequalArms";
        case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
        case ErrorCode::SingularTheta: return "SingularTheta";
        case ErrorCode::SingularInformation: return "SingularInformation";
        case ErrorCode::NotUnivariate: return "NotUnivariate";
        case ErrorCode::NoRootInBracket: return "NoRootInBracket";
        case ErrorCode::NonPositiveDiscriminant: return "NonPositiveDiscriminant";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

const char* psi_method_name(PsiMethod method) {
    switch (method) {
        case PsiMethod::Exact: return "exact";
        case PsiMethod::Series: return "series";
        case PsiMethod::Sampled: return "sampled";
    }
    return "unknown";
}

std::int64_t ClusterSizes::total() const {
    return std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
}

double ClusterSizes::mean() const {
    return sizes.empty() ? 0.0 : static_cast<double>(total()) / count();
}

std::vector<double> ClusterSizes::as_doubles() const {
    return std::vector<double>(sizes.begin(), sizes.end());
}

double SubgroupSpec::sum() const {
    return std::accumulate(theta.begin(), theta.end(), 0.0);
}

double ModelParams::sigma_gamma(double sigma_eps) const {
    return sigma_eps * std::sqrt(rho / (1.0 - rho));
}

double ModelParams::sigma2_y_given_x(double sigma_eps) const {
    return sigma_eps * sigma_eps / (1.0 - rho);
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << error_code_name(v.code);
        if (v.cluster >= 1) os << "(cluster " << v.cluster;
        if (v.subgroup >= 1) os << ", subgroup " << v.subgroup;
        if (v.cluster >= 1) os << ")";
        os << ": " << v.message << "\n";
    }
    return os.str();
}

namespace {

constexpr double kIntegralityTol = 1e-9;

bool near_integer(double x) {
    return std::abs(x - std::round(x)) <= kIntegralityTol * std::max(1.0, std::abs(x));
}

}  // namespace

ValidationReport validate_design(const TrialDesign& design,
                                 bool check_integral_counts) {
    ValidationReport report;
    const int I = design.clusters.count();

    if (I < 2) {
        report.violations.push_back(
            {ErrorCode::EmptyDesign, -1, -1, "need at least 2 clusters"});
        return report;
    }
    for (int i = 0; i < I; ++i) {
        if (design.clusters.sizes[i] < 1) {
            report.violations.push_back({ErrorCode::EmptyDesign, i + 1, -1,
                                         "cluster size must be >= 1"});
        }
    }
    if (design.i1 < 1 || design.i1 > I - 1) {
        report.violations.push_back(
            {ErrorCode::ArmCountOutOfRange, -1, -1,
             "i1 must satisfy 1 <= i1 <= I-1 (all-one-arm assignments are "
             "excluded from the randomization support)"});
    }

    const auto& theta = design.subgroups.theta;
    if (theta.empty()) {
        report.violations.push_back(
            {ErrorCode::InvalidSubgroupSpec, -1, -1, "theta must be nonempty"});
    }
    double theta_sum = 0.0;
    for (int l = 0; l < static_cast<int>(theta.size()); ++l) {
        if (!(theta[l] > 0.0 && theta[l] < 1.0)) {
            report.violations.push_back({ErrorCode::InvalidSubgroupSpec, -1, l + 1,
                                         "theta_l must lie in (0, 1)"});
        }
        theta_sum += theta[l];
    }
    if (!theta.empty() && !(theta_sum < 1.0)) {
        report.violations.push_back(
            {ErrorCode::InvalidSubgroupSpec, -1, -1,
             "sum(theta) must be < 1 so the reference subgroup has positive share"});
    }

    if (!(design.sigma_eps > 0.0)) {
        report.violations.push_back(
            {ErrorCode::InvalidSigma, -1, -1, "sigma_eps must be positive"});
    }

    // Fixed-prevalence condition: m_i * theta_l integral for every (i, l).
    for (int i = 0; check_integral_counts && i < I; ++i) {
        for (int l = 0; l < static_cast<int>(theta.size()); ++l) {
            const double k = static_cast<double>(design.clusters.sizes[i]) * theta[l];
            if (!near_integer(k)) {
                std::ostringstream os;
                os << "m_" << (i + 1) << " * theta_" << (l + 1) << " = " << k
                   << " is not an integer";
                report.violations.push_back(
                    {ErrorCode::NonIntegerSubgroupCount, i + 1, l + 1, os.str()});
            }
        }
    }
    return report;
}

const TrialDesign& require_valid(const TrialDesign& design,
                                 bool check_integral_counts) {
    ValidationReport report = validate_design(design, check_integral_counts);
    if (!report.ok()) {
        const auto& first = report.violations.front();
        fail(first.code, report.summary());
    }
    return design;
}

ClusterSizes build_simulation_pattern(int q, double m_bar) {
    if (q < 1) fail(ErrorCode::DomainError, "q must be a positive integer");
    if (!(m_bar > 0.0)) fail(ErrorCode::DomainError, "m_bar must be positive");

    const double block[8] = {m_bar / 2, m_bar / 2, m_bar / 2, m_bar / 2,
                             m_bar,     5 * m_bar / 2, 2 * m_bar, m_bar / 2};
    ClusterSizes out;
    out.sizes.reserve(8 * static_cast<std::size_t>(q));
    for (int rep = 0; rep < q; ++rep) {
        for (double entry : block) {
            if (std::abs(entry - std::round(entry)) > 1e-9) {
                std::ostringstream os;
                os << "pattern entry " << entry << " is not an integer; "
                   << "m_bar must be an even integer";
                fail(ErrorCode::NonIntegerPatternEntry, os.str());
            }
            out.sizes.push_back(static_cast<std::int64_t>(std::llround(entry)));
        }
    }
    return out;
}

double pattern_inverse_size_sum(int q) {
    // sum(mbar/m_i) over one block: 5*2 + 1 + 2/5 + 1/2 = 11.9
    return 11.9 * q;
}

}  // namespace crthte
