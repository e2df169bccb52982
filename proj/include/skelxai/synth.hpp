#pragma once

#include <vector>

#include "skelxai/common.hpp"
#include "skelxai/skeleton.hpp"

namespace skelxai {

// Synthetic stand-in for clinical data: smooth forward-kinematic skeletons
// whose class label is encoded in the oscillation amplitude of the signal
// joints (label 1 amplified, label 0 damped, everything else at the base
// amplitude). That gives faithfulness tests a known top-k ground truth for
// both classes.
struct SynthConfig {
    int n_sequences = 160;
    double fps = 8.0;
    double duration_s = 15.0;
    std::vector<int> signal_joints = {5, 8};  // left_wrist, right_wrist in infant19
    double noise_sigma = 0.5;                 // pixels, smooth correlated jitter
    std::uint64_t rng_seed = 7;
    double class_balance = 0.15;  // fraction of label-1 sequences

    double base_amplitude_px = 8.0;
    double signal_boost = 1.75;  // label-1 signal amplitude = base * (1 + boost)
    double signal_damp = 0.625;  // label-0 signal amplitude = base * (1 - damp)

    void validate(const JointRegistry& reg) const;
};

std::vector<SkeletonSequence> generate(const SynthConfig& cfg, const JointRegistry& reg);

}  // namespace skelxai
