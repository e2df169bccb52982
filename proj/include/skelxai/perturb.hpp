#pragma once

#include <array>
#include <vector>

#include "skelxai/attribution.hpp"
#include "skelxai/common.hpp"
#include "skelxai/skeleton.hpp"

namespace skelxai {

enum class PerturbTarget { topk, non_topk, all };

// One family of kinematics-preserving perturbations: every targeted joint is
// displaced by a fixed-magnitude offset r = r_fraction * median height, at a
// random azimuthal angle, held constant across all frames of the window.
struct PerturbationSpec {
    double r_fraction = 0.01;
    int n = 50;
    PerturbTarget target = PerturbTarget::all;
    JointRanking ranking;  // consulted for topk / non_topk targets
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct PerturbedWindow {
    Window coords;  // perturbed copy of the base window
    std::vector<std::array<double, 2>> offsets;
    std::vector<char> targeted;
};

std::vector<int> target_joints(const PerturbationSpec& spec, int joints);

// Angle for one (seed, window, draw, joint) tuple; exposed so tests can pin it.
double perturbation_angle(std::uint64_t rng_seed, const std::string& window_id, int draw_idx,
                          int joint);

PerturbedWindow apply_offsets(const Window& w, const std::vector<std::array<double, 2>>& offsets,
                              const std::vector<char>& targeted);

PerturbedWindow perturb(const Window& w, const PerturbationSpec& spec, double height,
                        int draw_idx);

std::vector<PerturbedWindow> perturbation_family(const Window& w, const PerturbationSpec& spec,
                                                 double height);

}  // namespace skelxai
