#include "skelxai/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace skelxai {

void MetricConfig::validate() const {
    if (p_norm < 1.0) throw ConfigError("p_norm must be >= 1");
    if (epsilon_min <= 0.0) throw ConfigError("epsilon_min must be positive");
    if (denom_guard <= 0.0) throw ConfigError("denom_guard must be positive");
    if (k_min < 1 || k_max < k_min) throw ConfigError("bad k range");
}

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::pgi: return "pgi";
        case MetricKind::pgu: return "pgu";
        case MetricKind::risp: return "risp";
        case MetricKind::risv: return "risv";
        case MetricKind::risb: return "risb";
        case MetricKind::ros: return "ros";
        case MetricKind::rrs: return "rrs";
    }
    return "?";
}

MetricKind metric_from_string(const std::string& s) {
    for (MetricKind k : kAllMetrics)
        if (to_string(k) == s) return k;
    throw ConfigError("unknown metric: " + s);
}

double pgi(double f_orig, std::span<const double> f_perturbed) {
    if (f_perturbed.empty()) throw EmptyFamily("prediction gap over an empty family");
    double acc = 0.0;
    for (double f : f_perturbed) acc += std::abs(f_orig - f);
    return acc / static_cast<double>(f_perturbed.size());
}

double pgu(double f_orig, std::span<const double> f_perturbed) {
    return pgi(f_orig, f_perturbed);
}

double relative_change(std::span<const double> a, std::span<const double> b, double guard,
                       double p_norm) {
    if (a.size() != b.size()) throw ShapeMismatch("relative_change over different shapes");
    double acc = 0.0;
    if (p_norm == 2.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double r = (a[i] - b[i]) / std::max(std::abs(a[i]), guard);
            acc += r * r;
        }
        return std::sqrt(acc);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double r = std::abs(a[i] - b[i]) / std::max(std::abs(a[i]), guard);
        acc += std::pow(r, p_norm);
    }
    return std::pow(acc, 1.0 / p_norm);
}

StabilityResult stability(const std::vector<double>& e_orig,
                          const std::vector<std::vector<double>>& e_family,
                          const std::vector<std::pair<std::vector<double>, std::vector<double>>>&
                              denom_family,
                          const MetricConfig& cfg, const std::vector<char>& pred_consistent) {
    if (e_family.empty()) throw EmptyFamily("stability over an empty family");
    if (e_family.size() != denom_family.size() || e_family.size() != pred_consistent.size())
        throw ShapeMismatch("stability families are not aligned");

    StabilityResult out;
    bool any = false;
    for (std::size_t i = 0; i < e_family.size(); ++i) {
        if (!pred_consistent[i]) continue;
        const double num = relative_change(e_orig, e_family[i], cfg.denom_guard, cfg.p_norm);
        const double den = std::max(
            relative_change(denom_family[i].first, denom_family[i].second, cfg.denom_guard,
                            cfg.p_norm),
            cfg.epsilon_min);
        const double ratio = num / den;
        if (!any || ratio > out.value) out.value = ratio;
        any = true;
        ++out.n_valid;
    }
    if (!any)
        throw NoConsistentPerturbation("every perturbation flipped the predicted class");
    return out;
}

double auc_over_k(const std::vector<std::pair<int, double>>& k_values, int k_min, int k_max) {
    const int span = k_max - k_min + 1;
    if (span < 1) throw ConfigError("bad k range");
    std::vector<double> v(span);
    std::vector<char> seen(span, 0);
    for (const auto& [k, val] : k_values) {
        if (k < k_min || k > k_max || seen[k - k_min])
            throw MissingK("k sweep has gaps or duplicates");
        v[k - k_min] = val;
        seen[k - k_min] = 1;
    }
    for (char s : seen)
        if (!s) throw MissingK("k sweep has gaps or duplicates");
    if (span == 1) return v[0];
    double acc = 0.0;
    for (int i = 0; i + 1 < span; ++i) acc += 0.5 * (v[i] + v[i + 1]);
    return acc / static_cast<double>(span - 1);  // normalized: mean height over the sweep
}

AggregateRecord aggregate(MetricKind metric, Method method, const std::vector<double>& aucs) {
    if (aucs.empty()) throw InsufficientSamples("aggregate over zero windows");
    AggregateRecord rec;
    rec.metric = metric;
    rec.method = method;
    rec.n_windows = static_cast<int>(aucs.size());
    double mean = 0.0;
    for (double a : aucs) mean += a;
    mean /= aucs.size();
    rec.auc_mean = mean;
    if (aucs.size() > 1) {
        double ss = 0.0;
        for (double a : aucs) ss += (a - mean) * (a - mean);
        rec.auc_std = std::sqrt(ss / (aucs.size() - 1));
    }
    return rec;
}

// ------------------------------------------------------- window evaluation

namespace {

struct ScopePrediction {
    double prob = 0.0;  // class-1 probability
    int predicted_class = 0;
    std::vector<double> representation;
    std::vector<ForwardTrace> traces;  // one per member; single entry in member scope
};

ScopePrediction scope_predict(const EvalScope& scope, const StreamSet& streams) {
    if (!scope.ensemble || scope.ensemble->members.empty())
        throw EmptyEnsemble("evaluation scope has no models");
    ScopePrediction out;
    if (scope.is_ensemble()) {
        EnsemblePrediction p = ensemble_predict(*scope.ensemble, streams);
        out.prob = p.prob;
        out.predicted_class = p.prob > 0.5 ? 1 : 0;
        out.representation = ensemble_representation(p.traces);
        out.traces = std::move(p.traces);
    } else {
        const auto& m = scope.ensemble->members.at(scope.member);
        ForwardTrace t = forward(m, streams);
        out.prob = t.probs[1];
        out.predicted_class = t.predicted_class;
        out.representation = t.logits;
        out.traces.push_back(std::move(t));
    }
    return out;
}

AttributionMap scope_attribution(const EvalScope& scope, const ScopePrediction& pred,
                                 Method method, int class_idx, const std::string& window_id,
                                 std::uint64_t draw_seed, int joints) {
    if (method == Method::random) return random_attribution(joints, window_id, draw_seed);
    if (scope.is_ensemble()) {
        std::vector<AttributionMap> maps;
        maps.reserve(pred.traces.size());
        for (std::size_t i = 0; i < pred.traces.size(); ++i) {
            const auto& m = scope.ensemble->members[i];
            maps.push_back(method == Method::cam
                               ? cam(pred.traces[i], m, class_idx, window_id)
                               : gradcam(pred.traces[i], m, class_idx, window_id));
        }
        return ensemble_attribution(maps);
    }
    const auto& m = scope.ensemble->members.at(scope.member);
    return method == Method::cam ? cam(pred.traces[0], m, class_idx, window_id)
                                 : gradcam(pred.traces[0], m, class_idx, window_id);
}

}  // namespace

WindowEvaluation evaluate_window(const Window& w, const JointRegistry& reg, const EvalScope& scope,
                                 Method method, const MetricConfig& cfg,
                                 const PerturbationSpec& spec_template,
                                 std::uint64_t attribution_seed, bool center_scale) {
    cfg.validate();
    spec_template.validate();
    const int V = w.joints;
    if (cfg.k_max > V) throw KOutOfRange("k_max exceeds the joint count");
    const std::string wid = w.id();

    WindowEvaluation eval;
    const StreamSet streams = derive_streams(w, reg, center_scale);
    const ScopePrediction orig = scope_predict(scope, streams);
    eval.prob = orig.prob;
    eval.predicted_class = orig.predicted_class;
    eval.prediction_correct = orig.predicted_class == w.label;
    if (!eval.prediction_correct) return eval;  // correct-prediction filter

    const int explained = orig.predicted_class;
    eval.explanation =
        scope_attribution(scope, orig, method, explained, wid, attribution_seed, V);

    const double height = median_height(w, reg);

    // ---- stability: all joints perturbed; k-independent, computed once ----
    PerturbationSpec spec_all = spec_template;
    spec_all.target = PerturbTarget::all;
    const auto family = perturbation_family(w, spec_all, height);

    std::vector<std::vector<double>> e_family;
    std::vector<char> consistent;
    using Pair = std::pair<std::vector<double>, std::vector<double>>;
    std::vector<Pair> denom_pos, denom_vel, denom_bone, denom_out, denom_rep;
    e_family.reserve(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const StreamSet ps = derive_streams(family[i].coords, reg, center_scale);
        const ScopePrediction p = scope_predict(scope, ps);
        consistent.push_back(p.predicted_class == orig.predicted_class ? 1 : 0);
        const std::uint64_t draw_seed = mix64(attribution_seed, static_cast<std::uint64_t>(i) + 1);
        e_family.push_back(
            scope_attribution(scope, p, method, explained, wid, draw_seed, V).scores);
        denom_pos.emplace_back(streams.position.data.data, ps.position.data.data);
        denom_vel.emplace_back(streams.velocity.data.data, ps.velocity.data.data);
        denom_bone.emplace_back(streams.bone.data.data, ps.bone.data.data);
        denom_out.emplace_back(std::vector<double>{orig.prob}, std::vector<double>{p.prob});
        denom_rep.emplace_back(orig.representation, p.representation);
    }

    struct StabilityTask {
        MetricKind kind;
        const std::vector<Pair>* denoms;
    };
    const StabilityTask tasks[] = {{MetricKind::risp, &denom_pos},
                                   {MetricKind::risv, &denom_vel},
                                   {MetricKind::risb, &denom_bone},
                                   {MetricKind::ros, &denom_out},
                                   {MetricKind::rrs, &denom_rep}};
    std::vector<std::pair<MetricKind, StabilityResult>> stable;
    for (const auto& task : tasks) {
        try {
            stable.emplace_back(task.kind,
                                stability(eval.explanation.scores, e_family, *task.denoms, cfg,
                                          consistent));
        } catch (const NoConsistentPerturbation&) {
            eval.skipped.push_back(to_string(task.kind) + ": no prediction-consistent perturbation");
        }
    }

    // ---- faithfulness sweep over k ----
    const int n = spec_template.n;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        const JointRanking ranking = rank(eval.explanation, k);

        PerturbationSpec spec_top = spec_template;
        spec_top.target = PerturbTarget::topk;
        spec_top.ranking = ranking;
        std::vector<double> f_top;
        f_top.reserve(n);
        for (const auto& pw : perturbation_family(w, spec_top, height))
            f_top.push_back(scope_predict(scope, derive_streams(pw.coords, reg, center_scale)).prob);
        eval.records.push_back({MetricKind::pgi, method, wid, k, pgi(orig.prob, f_top), n});

        double pgu_value = 0.0;  // empty complement (k = joints) leaves predictions untouched
        if (k < V) {
            PerturbationSpec spec_non = spec_template;
            spec_non.target = PerturbTarget::non_topk;
            spec_non.ranking = ranking;
            std::vector<double> f_non;
            f_non.reserve(n);
            for (const auto& pw : perturbation_family(w, spec_non, height))
                f_non.push_back(
                    scope_predict(scope, derive_streams(pw.coords, reg, center_scale)).prob);
            pgu_value = pgu(orig.prob, f_non);
        }
        eval.records.push_back({MetricKind::pgu, method, wid, k, pgu_value, n});

        for (const auto& [kind, res] : stable)
            eval.records.push_back({kind, method, wid, k, res.value, res.n_valid});
    }
    return eval;
}

}  // namespace skelxai
