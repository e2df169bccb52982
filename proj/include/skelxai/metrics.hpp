#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skelxai/attribution.hpp"
#include "skelxai/common.hpp"
#include "skelxai/model.hpp"
#include "skelxai/perturb.hpp"
#include "skelxai/skeleton.hpp"

namespace skelxai {

struct MetricConfig {
    double p_norm = 2.0;
    double epsilon_min = 1e-6;  // floor on the whole stability denominator
    double denom_guard = 1e-8;  // floor on each element-wise relative division
    int k_min = 1;
    int k_max = 19;

    void validate() const;
};

enum class MetricKind { pgi, pgu, risp, risv, risb, ros, rrs };

inline constexpr MetricKind kAllMetrics[] = {MetricKind::pgi,  MetricKind::pgu,
                                             MetricKind::risp, MetricKind::risv,
                                             MetricKind::risb, MetricKind::ros, MetricKind::rrs};

std::string to_string(MetricKind k);
MetricKind metric_from_string(const std::string& s);

struct MetricRecord {
    MetricKind metric;
    Method method;
    std::string window_id;
    int k = 0;
    double value = 0.0;
    int n_valid = 0;  // perturbations surviving the prediction-consistency filter
};

struct AggregateRecord {
    MetricKind metric;
    Method method;
    double auc_mean = 0.0;
    double auc_std = 0.0;
    int n_windows = 0;
};

// Mean absolute prediction gap over a perturbation family.
double pgi(double f_orig, std::span<const double> f_perturbed);
double pgu(double f_orig, std::span<const double> f_perturbed);

// p-norm of the element-wise guarded relative difference (a - b) / max(|a|, guard).
double relative_change(std::span<const double> a, std::span<const double> b, double guard,
                       double p_norm = 2.0);

struct StabilityResult {
    double value = 0.0;
    int n_valid = 0;
};

// max over prediction-consistent perturbations of
//   relative_change(e_orig, e_family[i]) / max(relative_change(denom pair i), epsilon_min)
StabilityResult stability(const std::vector<double>& e_orig,
                          const std::vector<std::vector<double>>& e_family,
                          const std::vector<std::pair<std::vector<double>, std::vector<double>>>&
                              denom_family,
                          const MetricConfig& cfg, const std::vector<char>& pred_consistent);

// Trapezoidal mean over the k sweep; values must cover every k in
// [k_min, k_max] exactly once.
double auc_over_k(const std::vector<std::pair<int, double>>& k_values, int k_min, int k_max);

AggregateRecord aggregate(MetricKind metric, Method method, const std::vector<double>& aucs);

// ------------------------------------------------------- window evaluation

// Evaluation scope: the whole ensemble (member < 0) or one member.
struct EvalScope {
    const Ensemble* ensemble = nullptr;
    int member = -1;

    bool is_ensemble() const { return member < 0; }
};

struct WindowEvaluation {
    bool prediction_correct = false;
    int predicted_class = 0;
    double prob = 0.0;  // class-1 probability (CP risk)
    AttributionMap explanation;
    std::vector<MetricRecord> records;
    std::vector<std::string> skipped;  // "metric: reason" markers
};

// Runs the full per-window procedure for one attribution method: original
// prediction and explanation, the all-joint stability family, and the top-k /
// non-top-k faithfulness sweep over k = k_min..k_max.
WindowEvaluation evaluate_window(const Window& w, const JointRegistry& reg, const EvalScope& scope,
                                 Method method, const MetricConfig& cfg,
                                 const PerturbationSpec& spec_template,
                                 std::uint64_t attribution_seed, bool center_scale = true);

}  // namespace skelxai
