#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace smcheck {

/// Streaming mean and sum of squared deviations (Welford recurrence).
///
/// A value type: copy it, merge it, never share it between writers.
class SampleAccumulator {
public:
    SampleAccumulator() = default;

    /// Rebuilds an accumulator from summary statistics (n, mean, unbiased variance).
    static SampleAccumulator from_summary(std::uint64_t count, double mean, double variance);

    void add(double x) noexcept;
    void merge(const SampleAccumulator& other) noexcept;

    std::uint64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    double m2() const noexcept { return m2_; }

    /// Unbiased variance m2 / (n - 1). Throws DomainError when n < 2.
    double variance() const;

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Confidence requirement: significance level alpha and maximal full CI width delta.
struct CiSpec {
    double alpha = 0.05;
    double delta = 1.0;

    /// Throws DomainError unless alpha in (0,1) and delta > 0.
    void validate() const;
};

struct WelchResult {
    double t_stat = 0.0;
    double dof = 0.0;
    double p_two_sided = 1.0;
};

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Student-t cumulative distribution function.
double t_cdf(double dof, double x);

/// Upper tail P(T > x) of the Student-t distribution, accurate for large x.
double t_upper_tail(double dof, double x);

/// p-quantile of the Student-t distribution with `dof` degrees of freedom.
double t_quantile(double dof, double p);

double normal_cdf(double x);
double normal_quantile(double p);

/// Half-width t_{n-1,1-alpha/2} * sqrt(s^2 / n) of the two-sided (1-alpha) CI.
double ci_halfwidth(const SampleAccumulator& acc, double alpha);

/// Welch's unequal-variance two-sample t-test with Welch-Satterthwaite dof.
///
/// Zero standard error is resolved by continuity: equal means give p = 1,
/// different means give p = 0.
WelchResult welch_test(const SampleAccumulator& a, const SampleAccumulator& b);

/// Lag-1 sample autocorrelation. Returns 0 for a constant series.
double lag1_autocorrelation(std::span<const double> xs);

/// Jarque-Bera normality test p-value (chi-square with 2 dof). Returns 1 for a constant series.
double jarque_bera_pvalue(std::span<const double> xs);

}  // namespace smcheck
