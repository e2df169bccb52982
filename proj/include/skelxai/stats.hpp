#pragma once

#include <vector>

#include "skelxai/common.hpp"

namespace skelxai {

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
    int n1 = 0, n2 = 0;
    bool degenerate = false;  // identical constant samples; t reported as 0, p as 1
};

// Welch's unequal-variance t-test with a two-sided p-value from the Student-t
// CDF (regularized incomplete beta, continued-fraction evaluation).
TTestResult unpaired_ttest(const std::vector<double>& sample_a,
                           const std::vector<double>& sample_b);

double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double dof);

}  // namespace skelxai
