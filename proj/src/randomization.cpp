#include "crthte/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crthte/rng.hpp"

namespace crthte {

namespace {

// Kahan-compensated accumulator; enumeration sums can run to millions of terms.
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

void check_assignment(const ClusterSizes& m, const Assignment& w) {
    if (w.count() != m.count()) {
        fail(ErrorCode::DegenerateAssignment, "assignment length != cluster count");
    }
    const int ones = w.ones();
    if (ones == 0 || ones == w.count()) {
        fail(ErrorCode::DegenerateAssignment,
             "all-control and all-intervention assignments are excluded");
    }
}

struct CentralMoments {
    double mean;
    double mu2;
    double mu3;
    double mu4;
};

CentralMoments central_moments(std::span<const double> sizes) {
    const int I = static_cast<int>(sizes.size());
    Kahan s1;
    for (double x : sizes) s1.add(x);
    const double mean = s1.sum / I;
    Kahan s2, s3, s4;
    for (double x : sizes) {
        const double d = x - mean;
        const double d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    return {mean, s2.sum / I, s3.sum / I, s4.sum / I};
}

double series_value(double cv2, double kurt, int I) {
    return 4.0 * (1.0 + cv2 / (I - 1) +
                  (3.0 * (I - 2) - 2.0 * kurt) * cv2 * cv2 /
                      (static_cast<double>(I) * (I - 1) * (I - 3)));
}

}  // namespace

int Assignment::ones() const {
    return static_cast<int>(std::count(w.begin(), w.end(), std::uint8_t{1}));
}

double empirical_cv2(std::span<const double> sizes) {
    const auto m = central_moments(sizes);
    return m.mu2 / (m.mean * m.mean);
}

double empirical_kurtosis(std::span<const double> sizes, KurtosisDef def) {
    const auto m = central_moments(sizes);
    if (m.mu2 == 0.0) return 0.0;
    if (def == KurtosisDef::Standard) {
        return m.mu4 / (m.mu2 * m.mu2);
    }
    // As printed: (1/I)(S4 - 4 mbar S3 + 6 mbar^2 S2 - 3 mbar^4) / mu2^2.
    // Differs from the standard 4th central moment by (3 - 3/I) mbar^4 / mu2^2.
    const int I = static_cast<int>(sizes.size());
    const double mbar4 = m.mean * m.mean * m.mean * m.mean;
    const double num = m.mu4 + 3.0 * mbar4 - 3.0 * mbar4 / I;
    return num / (m.mu2 * m.mu2);
}

double wbar(const ClusterSizes& m, const Assignment& w) {
    check_assignment(m, w);
    std::int64_t num = 0;
    for (int i = 0; i < m.count(); ++i) {
        if (w.w[i]) num += m.sizes[i];
    }
    return static_cast<double>(num) / static_cast<double>(m.total());
}

double wbar_rho(const ClusterSizes& m, const Assignment& w, double rho) {
    check_assignment(m, w);
    if (!(rho >= 0.0 && rho < 1.0)) {
        fail(ErrorCode::InvalidRho, "rho must lie in [0, 1)");
    }
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < m.count(); ++i) {
        const double mi = static_cast<double>(m.sizes[i]);
        const double weight = mi / (1.0 - rho + mi * rho);  // m_i d_i(rho)
        den += weight;
        if (w.w[i]) num += weight;
    }
    return num / den;
}

SizeMoments size_moments(const ClusterSizes& m, int i1) {
    const int I = m.count();
    if (I < 4) {
        fail(ErrorCode::TooFewClusters,
             "the 4th-moment formula requires at least 4 clusters");
    }
    if (i1 < 1 || i1 > I - 1) {
        fail(ErrorCode::ArmCountOutOfRange, "i1 must satisfy 1 <= i1 <= I-1");
    }
    const auto sizes = m.as_doubles();
    SizeMoments out;
    out.cv2 = empirical_cv2(sizes);
    out.kurt = empirical_kurtosis(sizes);

    const double i0 = I - i1;
    const double cv4 = out.cv2 * out.cv2;
    out.var_wbar = i1 * i0 * out.cv2 / (static_cast<double>(I) * I * (I - 1));
    out.m4_wbar =
        ((static_cast<double>(I) * I - 6.0 * i1 * i0 + I) / I * out.kurt +
         3.0 * (i1 - 1) * (i0 - 1)) *
        i1 * i0 * cv4 /
        (static_cast<double>(I) * I * I * (I - 1) * (I - 2) * (I - 3));
    return out;
}

std::int64_t assignment_count(int I, int i1, std::int64_t cap) {
    if (i1 < 1 || i1 > I - 1) {
        fail(ErrorCode::ArmCountOutOfRange, "i1 must satisfy 1 <= i1 <= I-1");
    }
    const int k = std::min(i1, I - i1);
    // c is C(I-k+j, j) after step j, always integral; saturate once past cap.
    unsigned __int128 c = 1;
    for (int j = 1; j <= k; ++j) {
        c = c * static_cast<unsigned>(I - k + j) / static_cast<unsigned>(j);
        if (c > static_cast<unsigned __int128>(cap)) return cap + 1;
    }
    return static_cast<std::int64_t>(c);
}

void for_each_assignment(int I, int i1,
                         const std::function<void(const std::vector<int>&)>& visit,
                         std::int64_t cap) {
    const std::int64_t n = assignment_count(I, i1, cap);
    if (n > cap) {
        fail(ErrorCode::EnumerationTooLarge,
             "C(I, i1) exceeds the enumeration cap; use the series or sampled method");
    }
    std::vector<int> idx(i1);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        visit(idx);
        // Advance to the next combination in lexicographic order.
        int j = i1 - 1;
        while (j >= 0 && idx[j] == I - i1 + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int t = j + 1; t < i1; ++t) idx[t] = idx[t - 1] + 1;
    }
}

PsiEstimate psi_exact(const ClusterSizes& m, int i1, std::int64_t cap) {
    const double total = static_cast<double>(m.total());
    Kahan acc;
    std::int64_t n = 0;
    for_each_assignment(m.count(), i1, [&](const std::vector<int>& idx) {
        std::int64_t num = 0;
        for (int i : idx) num += m.sizes[i];
        const double wb = static_cast<double>(num) / total;
        acc.add(1.0 / (wb * (1.0 - wb)));
        ++n;
    }, cap);

    PsiEstimate out;
    out.value = acc.sum / n;
    out.method = PsiMethod::Exact;
    out.assignments_evaluated = n;
    const auto sizes = m.as_doubles();
    out.cv2 = empirical_cv2(sizes);
    out.kurtosis = empirical_kurtosis(sizes);
    return out;
}

double psi_series_real(std::span<const double> sizes, KurtosisDef def) {
    const int I = static_cast<int>(sizes.size());
    if (I < 4) {
        fail(ErrorCode::TooFewClusters, "series approximation requires I >= 4");
    }
    return series_value(empirical_cv2(sizes), empirical_kurtosis(sizes, def), I);
}

PsiEstimate psi_approx(const ClusterSizes& m, KurtosisDef def) {
    const int I = m.count();
    if (I % 2 != 0) {
        fail(ErrorCode::UnequalArms,
             "series approximation assumes i1 = i0 = I/2; I must be even");
    }
    if (I < 4) {
        fail(ErrorCode::TooFewClusters, "series approximation requires I >= 4");
    }
    const auto sizes = m.as_doubles();
    PsiEstimate out;
    out.cv2 = empirical_cv2(sizes);
    out.kurtosis = empirical_kurtosis(sizes, def);
    out.value = series_value(out.cv2, out.kurtosis, I);
    out.method = PsiMethod::Series;
    out.assignments_evaluated = 0;
    return out;
}

PsiEstimate psi_sampled(const ClusterSizes& m, int i1, int replicates,
                        std::uint64_t seed) {
    if (replicates < 1) {
        fail(ErrorCode::DomainError, "psi_sampled requires replicates >= 1");
    }
    if (i1 < 1 || i1 > m.count() - 1) {
        fail(ErrorCode::ArmCountOutOfRange, "i1 must satisfy 1 <= i1 <= I-1");
    }
    const double total = static_cast<double>(m.total());
    Rng rng(seed);
    std::vector<int> idx(m.count());
    Kahan acc, acc2;
    for (int rep = 0; rep < replicates; ++rep) {
        std::iota(idx.begin(), idx.end(), 0);
        // Partial Fisher-Yates: the first i1 slots are a uniform subset.
        for (int j = 0; j < i1; ++j) {
            const int k = j + static_cast<int>(rng.uniform_below(idx.size() - j));
            std::swap(idx[j], idx[k]);
        }
        std::int64_t num = 0;
        for (int j = 0; j < i1; ++j) num += m.sizes[idx[j]];
        const double wb = static_cast<double>(num) / total;
        const double v = 1.0 / (wb * (1.0 - wb));
        acc.add(v);
        acc2.add(v * v);
    }
    PsiEstimate out;
    out.value = acc.sum / replicates;
    out.method = PsiMethod::Sampled;
    out.assignments_evaluated = replicates;
    const auto sizes = m.as_doubles();
    out.cv2 = empirical_cv2(sizes);
    out.kurtosis = empirical_kurtosis(sizes);
    if (replicates > 1) {
        const double var =
            (acc2.sum - replicates * out.value * out.value) / (replicates - 1);
        out.std_error = std::sqrt(std::max(0.0, var) / replicates);
    }
    return out;
}

double psi_rho(const ClusterSizes& m, int i1, double rho, std::int64_t cap) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        fail(ErrorCode::InvalidRho, "rho must lie in [0, 1)");
    }
    std::vector<double> weight(m.count());
    double weight_total = 0.0;
    for (int i = 0; i < m.count(); ++i) {
        const double mi = static_cast<double>(m.sizes[i]);
        weight[i] = mi / (1.0 - rho + mi * rho);
        weight_total += weight[i];
    }
    Kahan acc;
    std::int64_t n = 0;
    for_each_assignment(m.count(), i1, [&](const std::vector<int>& idx) {
        double num = 0.0;
        for (int i : idx) num += weight[i];
        const double wb = num / weight_total;
        acc.add(1.0 / (wb * (1.0 - wb)));
        ++n;
    }, cap);
    return acc.sum / n;
}

Assignment sample_allocation(int I, int i1, Rng& rng) {
    if (i1 < 1 || i1 > I - 1) {
        fail(ErrorCode::ArmCountOutOfRange, "i1 must satisfy 1 <= i1 <= I-1");
    }
    std::vector<int> idx(I);
    std::iota(idx.begin(), idx.end(), 0);
    Assignment out;
    out.w.assign(I, 0);
    for (int j = 0; j < i1; ++j) {
        const int k = j + static_cast<int>(rng.uniform_below(idx.size() - j));
        std::swap(idx[j], idx[k]);
        out.w[idx[j]] = 1;
    }
    return out;
}

Assignment sample_allocation(const ClusterSizes& m, int i1, std::uint64_t seed) {
    Rng rng(seed);
    return sample_allocation(m.count(), i1, rng);
}

}  // namespace crthte
