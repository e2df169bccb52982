#include "skelxai/stats.hpp"

#include <cmath>
#include <limits>

namespace skelxai {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = std::numeric_limits<double>::epsilon();
    constexpr double kTiny = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 10.0 * kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ConfigError("incomplete beta needs positive parameters");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // the continued fraction converges fast for x < (a+1)/(a+b+2)
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0.0) throw ConfigError("degrees of freedom must be positive");
    if (t == 0.0) return 1.0;
    const double x = dof / (dof + t * t);
    return regularized_incomplete_beta(0.5 * dof, 0.5, x);
}

TTestResult unpaired_ttest(const std::vector<double>& sample_a,
                           const std::vector<double>& sample_b) {
    const int na = static_cast<int>(sample_a.size());
    const int nb = static_cast<int>(sample_b.size());
    if (na < 2 || nb < 2) throw InsufficientSamples("t-test needs at least two values per sample");

    auto mean_var = [](const std::vector<double>& s) {
        double mean = 0.0;
        for (double x : s) mean += x;
        mean /= s.size();
        double ss = 0.0;
        for (double x : s) ss += (x - mean) * (x - mean);
        return std::pair<double, double>{mean, ss / (s.size() - 1)};
    };
    const auto [ma, va] = mean_var(sample_a);
    const auto [mb, vb] = mean_var(sample_b);

    TTestResult res;
    res.n1 = na;
    res.n2 = nb;
    const double sa = va / na, sb = vb / nb;
    if (sa + sb == 0.0) {
        // identical constant samples: t is undefined by the formula
        res.degenerate = true;
        res.t_statistic = 0.0;
        res.p_value = 1.0;
        res.dof = static_cast<double>(na + nb - 2);
        return res;
    }
    res.t_statistic = (ma - mb) / std::sqrt(sa + sb);
    res.dof = (sa + sb) * (sa + sb) /
              (sa * sa / (na - 1) + sb * sb / (nb - 1));  // Welch-Satterthwaite
    res.p_value = student_t_two_sided_p(res.t_statistic, res.dof);
    return res;
}

}  // namespace skelxai
