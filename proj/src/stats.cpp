#include "smcheck/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "smcheck/error.hpp"

namespace smcheck {

SampleAccumulator SampleAccumulator::from_summary(std::uint64_t count, double mean, double variance)
{
    if (variance < 0.0) {
        throw DomainError("negative variance in summary statistics");
    }
    SampleAccumulator acc;
    acc.count_ = count;
    acc.mean_ = count > 0 ? mean : 0.0;
    acc.m2_ = count > 1 ? variance * static_cast<double>(count - 1) : 0.0;
    return acc;
}

void SampleAccumulator::add(double x) noexcept
{
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
    if (m2_ < 0.0) {
        m2_ = 0.0;
    }
}

void SampleAccumulator::merge(const SampleAccumulator& other) noexcept
{
    if (other.count_ == 0) {
        return;
    }
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const double d = other.mean_ - mean_;
    mean_ += d * nb / n;
    m2_ = std::max(0.0, m2_ + other.m2_ + d * d * na * nb / n);
    count_ += other.count_;
}

double SampleAccumulator::variance() const
{
    if (count_ < 2) {
        throw DomainError("variance requires at least two samples");
    }
    return m2_ / static_cast<double>(count_ - 1);
}

void CiSpec::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("alpha must lie in (0, 1)");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw DomainError("delta must be a positive finite number");
    }
}

namespace {

// Continued fraction for I_x(a,b) (modified Lentz). Valid for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) {
            return h;
        }
    }
    return h;
}

// Stirling remainder: lgamma(z) - [(z - 1/2) log z - z + log(2 pi)/2], for z >= 10.
double stirling_tail(double z)
{
    const double r = 1.0 / (z * z);
    return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / z;
}

// log B(a, b) without the cancellation of lgamma differences at large arguments.
double log_beta(double a, double b)
{
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    if (hi < 10.0) {
        return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    }
    const double corr = stirling_tail(hi) - stirling_tail(lo + hi);
    if (lo < 10.0) {
        return std::lgamma(lo) + corr - (hi - 0.5) * std::log1p(lo / hi) - lo * std::log(lo + hi) + lo;
    }
    return 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(lo) + corr + stirling_tail(lo) +
           (hi - 0.5) * std::log(hi / (lo + hi)) + lo * std::log(lo / (lo + hi));
}

// log(u) where v = 1 - u is known to full precision.
double log_of(double u, double v)
{
    return u > 0.5 ? std::log1p(-v) : std::log(u);
}

// I_x(a,b) with y = 1 - x supplied separately so callers can avoid cancellation.
double incomplete_beta_xy(double a, double b, double x, double y)
{
    if (x <= 0.0) {
        return 0.0;
    }
    if (y <= 0.0) {
        return 1.0;
    }
    const double log_front = a * log_of(x, y) + b * log_of(y, x) - log_beta(a, b);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

double t_pdf(double dof, double x)
{
    const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                            0.5 * std::log(dof * std::numbers::pi);
    return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(x * x / dof));
}

constexpr double normal_dof_cutoff = 1e8;

void check_dof(double dof)
{
    if (!(dof > 0.0) || std::isnan(dof)) {
        throw DomainError("degrees of freedom must be positive");
    }
}

}  // namespace

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DomainError("incomplete beta requires a > 0 and b > 0");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("incomplete beta requires x in [0, 1]");
    }
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double t_upper_tail(double dof, double x)
{
    check_dof(dof);
    if (std::isnan(x)) {
        throw DomainError("t distribution evaluated at NaN");
    }
    if (std::isinf(x)) {
        return x > 0 ? 0.0 : 1.0;
    }
    if (dof > normal_dof_cutoff) {
        return normal_cdf(-x);
    }
    const double x2 = x * x;
    const double tail = 0.5 * incomplete_beta_xy(0.5 * dof, 0.5, dof / (dof + x2), x2 / (dof + x2));
    return x >= 0.0 ? tail : 1.0 - tail;
}

double t_cdf(double dof, double x)
{
    return t_upper_tail(dof, -x);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("quantile probability must lie in (0, 1)");
    }
    // Acklam's rational approximation, refined by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double t_quantile(double dof, double p)
{
    check_dof(dof);
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("quantile probability must lie in (0, 1)");
    }
    if (p == 0.5) {
        return 0.0;
    }
    if (dof > normal_dof_cutoff) {
        return normal_quantile(p);
    }
    // Solve P(T > x) = q for x > 0, then restore the sign.
    const bool upper = p > 0.5;
    const double q = upper ? 1.0 - p : p;

    double lo = 0.0;
    double hi = 1.0;
    while (t_upper_tail(dof, hi) > q) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            break;
        }
    }

    double x = std::clamp(-normal_quantile(q), lo, hi);
    if (!(x > lo && x < hi)) {
        x = 0.5 * (lo + hi);
    }
    for (int iter = 0; iter < 300; ++iter) {
        const double f = t_upper_tail(dof, x) - q;
        if (f > 0.0) {
            lo = x;
        } else if (f < 0.0) {
            hi = x;
        } else {
            break;
        }
        const double slope = -t_pdf(dof, x);
        double next = slope != 0.0 ? x - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const double step = std::fabs(next - x);
        x = next;
        if (step <= 1e-13 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, x)) {
            break;
        }
    }
    return upper ? x : -x;
}

double ci_halfwidth(const SampleAccumulator& acc, double alpha)
{
    if (acc.count() < 2) {
        throw DomainError("confidence interval requires at least two samples");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("alpha must lie in (0, 1)");
    }
    const double var = acc.variance();
    if (var == 0.0) {
        return 0.0;
    }
    const double n = static_cast<double>(acc.count());
    return t_quantile(n - 1.0, 1.0 - alpha / 2.0) * std::sqrt(var / n);
}

WelchResult welch_test(const SampleAccumulator& a, const SampleAccumulator& b)
{
    if (a.count() < 2 || b.count() < 2) {
        throw DomainError("Welch's test requires at least two samples per group");
    }
    const double na = static_cast<double>(a.count());
    const double nb = static_cast<double>(b.count());
    const double va = a.variance() / na;
    const double vb = b.variance() / nb;
    const double se2 = va + vb;
    const double diff = a.mean() - b.mean();

    WelchResult r;
    if (se2 == 0.0) {
        r.dof = na + nb - 2.0;
        if (diff == 0.0) {
            r.t_stat = 0.0;
            r.p_two_sided = 1.0;
        } else {
            r.t_stat = diff > 0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
            r.p_two_sided = 0.0;
        }
        return r;
    }
    r.t_stat = diff / std::sqrt(se2);
    r.dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p_two_sided = std::clamp(2.0 * t_upper_tail(r.dof, std::fabs(r.t_stat)), 0.0, 1.0);
    return r;
}

double lag1_autocorrelation(std::span<const double> xs)
{
    if (xs.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= static_cast<double>(xs.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - mean;
        den += d * d;
        if (i + 1 < xs.size()) {
            num += d * (xs[i + 1] - mean);
        }
    }
    // Rounding noise around a constant level is treated as constant.
    if (den <= 1e-24 * mean * mean * static_cast<double>(xs.size()) || den == 0.0) {
        return 0.0;
    }
    return num / den;
}

double jarque_bera_pvalue(std::span<const double> xs)
{
    const double n = static_cast<double>(xs.size());
    if (xs.size() < 3) {
        return 1.0;
    }
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= n;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 <= 1e-24 * mean * mean || m2 <= 1e-300) {
        return 1.0;
    }
    const double skew = m3 / std::pow(m2, 1.5);
    const double excess = m4 / (m2 * m2) - 3.0;
    const double jb = n / 6.0 * (skew * skew + 0.25 * excess * excess);
    return std::exp(-0.5 * jb);
}

}  // namespace smcheck
