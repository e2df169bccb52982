#include "skelxai/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace skelxai {

void PerturbationSpec::validate() const {
    if (r_fraction <= 0.0) throw ConfigError("r_fraction must be positive");
    if (n < 1) throw ConfigError("perturbation count must be >= 1");
}

std::vector<int> target_joints(const PerturbationSpec& spec, int joints) {
    std::vector<int> out;
    if (spec.target == PerturbTarget::all) {
        out.resize(joints);
        for (int j = 0; j < joints; ++j) out[j] = j;
        return out;
    }
    if (static_cast<int>(spec.ranking.order.size()) != joints)
        throw ShapeMismatch("ranking does not cover the joint set");
    const int k = spec.ranking.k;
    if (k < 1 || k > joints) throw KOutOfRange("ranking cut point out of range");
    if (spec.target == PerturbTarget::topk)
        out.assign(spec.ranking.order.begin(), spec.ranking.order.begin() + k);
    else
        out.assign(spec.ranking.order.begin() + k, spec.ranking.order.end());
    std::sort(out.begin(), out.end());
    return out;
}

double perturbation_angle(std::uint64_t rng_seed, const std::string& window_id, int draw_idx,
                          int joint) {
    std::uint64_t key = mix64(rng_seed, fnv1a64(window_id));
    key = mix64(key, static_cast<std::uint64_t>(draw_idx));
    key = mix64(key, static_cast<std::uint64_t>(joint));
    return 2.0 * std::numbers::pi * unit_double(splitmix64(key));
}

PerturbedWindow apply_offsets(const Window& w, const std::vector<std::array<double, 2>>& offsets,
                              const std::vector<char>& targeted) {
    if (static_cast<int>(offsets.size()) != w.joints ||
        static_cast<int>(targeted.size()) != w.joints)
        throw ShapeMismatch("offset list does not cover the joint set");
    PerturbedWindow out;
    out.coords = w;
    out.offsets = offsets;
    out.targeted = targeted;
    for (int j = 0; j < w.joints; ++j) {
        if (!targeted[j]) continue;
        for (int f = 0; f < w.frames(); ++f) {
            out.coords.x(f, j) += offsets[j][0];
            out.coords.y(f, j) += offsets[j][1];
        }
    }
    return out;
}

PerturbedWindow perturb(const Window& w, const PerturbationSpec& spec, double height,
                        int draw_idx) {
    spec.validate();
    if (height <= 0.0) throw NonPositiveHeight("median height must be positive");
    const double r = spec.r_fraction * height;

    std::vector<std::array<double, 2>> offsets(w.joints, {0.0, 0.0});
    std::vector<char> targeted(w.joints, 0);
    const std::string wid = w.id();
    for (int j : target_joints(spec, w.joints)) {
        const double theta = perturbation_angle(spec.rng_seed, wid, draw_idx, j);
        offsets[j] = {r * std::cos(theta), r * std::sin(theta)};
        targeted[j] = 1;
    }
    return apply_offsets(w, offsets, targeted);
}

std::vector<PerturbedWindow> perturbation_family(const Window& w, const PerturbationSpec& spec,
                                                 double height) {
    spec.validate();
    std::vector<PerturbedWindow> out;
    out.reserve(spec.n);
    for (int i = 0; i < spec.n; ++i) out.push_back(perturb(w, spec, height, i));
    return out;
}

}  // namespace skelxai
