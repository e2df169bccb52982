#include "skelxai/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace skelxai {

std::string to_string(Method m) {
    switch (m) {
        case Method::cam: return "cam";
        case Method::gradcam: return "gradcam";
        case Method::random: return "random";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "cam") return Method::cam;
    if (s == "gradcam") return Method::gradcam;
    if (s == "random") return Method::random;
    throw ConfigError("unknown attribution method: " + s);
}

std::vector<double> min_max_normalize(const std::vector<double>& raw) {
    if (raw.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(raw.size(), 0.0);
    if (hi == lo) return out;  // degenerate all-equal map
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) * inv;
    return out;
}

AttributionMap cam(const ForwardTrace& trace, const ModelInstance& m, int class_idx,
                   const std::string& window_id) {
    if (class_idx < 0 || class_idx >= m.classes) throw KOutOfRange("class index out of range");
    const Tensor3& fm = trace.feature_maps;
    const int C = fm.c, T = fm.t, V = fm.v;
    if (static_cast<std::size_t>(C) * m.classes != m.fc_weight.size())
        throw ShapeMismatch("trace does not match model head");
    AttributionMap map;
    map.method = Method::cam;
    map.class_idx = class_idx;
    map.window_id = window_id;
    map.raw.assign(V, 0.0);
    for (int n = 0; n < C; ++n) {
        const double w = m.fc_weight[static_cast<std::size_t>(class_idx) * C + n];
        if (w == 0.0) continue;
        for (int t = 0; t < T; ++t) {
            const double* x = fm.plane(n, t);
            for (int v = 0; v < V; ++v) map.raw[v] += w * x[v];
        }
    }
    for (double& s : map.raw) s /= T;
    map.scores = min_max_normalize(map.raw);
    return map;
}

AttributionMap gradcam(const ForwardTrace& trace, const ModelInstance& m, int class_idx,
                       const std::string& window_id, bool rectify) {
    const Tensor3& fm = trace.feature_maps;
    const int C = fm.c, T = fm.t, V = fm.v;
    const Tensor3 grad = grad_feature_maps(m, trace, class_idx);

    // alpha_n = mean_(t,v) of d logit / d F[n,t,v]
    std::vector<double> alpha(C, 0.0);
    const double inv_tv = 1.0 / (static_cast<double>(T) * V);
    for (int n = 0; n < C; ++n) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t) {
            const double* g = grad.plane(n, t);
            for (int v = 0; v < V; ++v) acc += g[v];
        }
        alpha[n] = acc * inv_tv;
    }

    AttributionMap map;
    map.method = Method::gradcam;
    map.class_idx = class_idx;
    map.window_id = window_id;
    map.raw.assign(V, 0.0);
    for (int t = 0; t < T; ++t) {
        for (int v = 0; v < V; ++v) {
            double acc = 0.0;
            for (int n = 0; n < C; ++n) acc += alpha[n] * fm.at(n, t, v);
            if (rectify && acc < 0.0) acc = 0.0;
            map.raw[v] += acc;
        }
    }
    for (double& s : map.raw) s /= T;
    map.scores = min_max_normalize(map.raw);
    return map;
}

AttributionMap random_attribution(int joints, const std::string& window_id,
                                  std::uint64_t rng_seed) {
    if (joints < 1) throw ConfigError("random attribution needs at least one joint");
    AttributionMap map;
    map.method = Method::random;
    map.window_id = window_id;
    map.raw.resize(joints);
    Prng rng(mix64(rng_seed, fnv1a64(window_id)));
    for (double& s : map.raw) s = rng.uniform();
    map.scores = min_max_normalize(map.raw);
    return map;
}

AttributionMap ensemble_attribution(const std::vector<AttributionMap>& maps) {
    if (maps.empty()) throw EmptyEnsemble("no attribution maps to fuse");
    const auto& first = maps.front();
    for (const auto& m : maps) {
        if (m.method != first.method || m.window_id != first.window_id)
            throw MixedMethods("attribution maps disagree on method or window");
        if (m.scores.size() != first.scores.size())
            throw ShapeMismatch("attribution maps disagree on joint count");
    }
    AttributionMap out;
    out.method = first.method;
    out.class_idx = first.class_idx;
    out.window_id = first.window_id;
    const std::size_t V = first.scores.size();
    out.raw.resize(V);
    std::vector<double> member(maps.size());
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t i = 0; i < maps.size(); ++i) member[i] = maps[i].scores[v];
        out.raw[v] = median(member);
    }
    out.scores = min_max_normalize(out.raw);
    return out;
}

JointRanking rank(const AttributionMap& map, int k) {
    const int V = static_cast<int>(map.scores.size());
    if (k < 1 || k > V) throw KOutOfRange("k must lie in [1, joints]");
    JointRanking r;
    r.k = k;
    r.order.resize(V);
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        if (map.scores[a] != map.scores[b]) return map.scores[a] > map.scores[b];
        return a < b;
    });
    return r;
}

}  // namespace skelxai
