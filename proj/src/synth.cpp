#include "skelxai/synth.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace skelxai {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

struct RestBone {
    double angle;  // image coordinates, y down; -90 deg points toward the head
    double length;
};

// Rest pose for the default infant layout, keyed by child joint name.
const std::map<std::string, RestBone>& infant_rest_pose() {
    static const std::map<std::string, RestBone> pose = {
        {"chest", {-90 * kDeg, 55}},        {"neck", {-90 * kDeg, 50}},
        {"head", {-90 * kDeg, 42}},         {"nose", {90 * kDeg, 16}},
        {"left_ear", {170 * kDeg, 18}},     {"right_ear", {10 * kDeg, 18}},
        {"left_shoulder", {175 * kDeg, 38}},{"right_shoulder", {5 * kDeg, 38}},
        {"left_elbow", {135 * kDeg, 42}},   {"right_elbow", {45 * kDeg, 42}},
        {"left_wrist", {110 * kDeg, 40}},   {"right_wrist", {70 * kDeg, 40}},
        {"left_hip", {160 * kDeg, 25}},     {"right_hip", {20 * kDeg, 25}},
        {"left_knee", {105 * kDeg, 52}},    {"right_knee", {75 * kDeg, 52}},
        {"left_ankle", {95 * kDeg, 48}},    {"right_ankle", {85 * kDeg, 48}},
    };
    return pose;
}

RestBone rest_bone_for(const JointRegistry& reg, int child) {
    const auto& pose = infant_rest_pose();
    auto it = pose.find(reg.names[child]);
    if (it != pose.end()) return it->second;
    // unknown layout: spread children radially
    return {(-90.0 + 360.0 * child / reg.count()) * kDeg, 40.0};
}

struct Sinusoid {
    double amp, freq, phase;
    double eval(double t) const { return amp * std::sin(2.0 * kPi * freq * t + phase); }
};

}  // namespace

void SynthConfig::validate(const JointRegistry& reg) const {
    if (n_sequences < 0) throw ConfigError("n_sequences must be non-negative");
    if (fps <= 0.0) throw ConfigError("fps must be positive");
    if (duration_s <= 0.0) throw ConfigError("duration_s must be positive");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
    if (!(class_balance > 0.0 && class_balance < 1.0))
        throw ConfigError("class_balance must lie in (0, 1)");
    for (int j : signal_joints)
        if (j < 0 || j >= reg.count()) throw ConfigError("signal joint index out of range");
    if (signal_damp >= 1.0 || signal_damp < 0.0 || signal_boost < 0.0)
        throw ConfigError("signal_boost must be >= 0 and signal_damp in [0, 1)");
}

std::vector<SkeletonSequence> generate(const SynthConfig& cfg, const JointRegistry& reg) {
    cfg.validate(reg);
    const int frames = static_cast<int>(std::lround(cfg.duration_s * cfg.fps));
    if (frames < 2) throw ConfigError("duration too short for two frames");
    const int V = reg.count();

    std::vector<bool> is_signal(V, false);
    for (int j : cfg.signal_joints) is_signal[j] = true;

    std::vector<SkeletonSequence> out;
    out.reserve(cfg.n_sequences);
    for (int i = 0; i < cfg.n_sequences; ++i) {
        // Bresenham spread keeps the label-1 count at floor(n * balance) and
        // interleaves classes evenly across the sequence index.
        const int label = static_cast<int>(std::floor((i + 1) * cfg.class_balance)) -
                                  static_cast<int>(std::floor(i * cfg.class_balance)) >
                              0
                          ? 1
                          : 0;

        Prng rng(mix64(cfg.rng_seed, static_cast<std::uint64_t>(i)));
        const double root_x = 320.0 + rng.uniform(-25.0, 25.0);
        const double root_y = 260.0 + rng.uniform(-20.0, 20.0);
        std::array<Sinusoid, 2> drift_x{{{3.0, rng.uniform(0.05, 0.2), rng.uniform(0.0, 2 * kPi)},
                                         {1.5, rng.uniform(0.2, 0.5), rng.uniform(0.0, 2 * kPi)}}};
        std::array<Sinusoid, 2> drift_y{{{3.0, rng.uniform(0.05, 0.2), rng.uniform(0.0, 2 * kPi)},
                                         {1.5, rng.uniform(0.2, 0.5), rng.uniform(0.0, 2 * kPi)}}};

        struct BoneMotion {
            RestBone rest;
            Sinusoid main, harmonic;
            Sinusoid length_mod;
            std::array<Sinusoid, 3> noise;
        };
        std::vector<BoneMotion> motion(reg.bones.size());
        for (std::size_t b = 0; b < reg.bones.size(); ++b) {
            const int child = reg.bones[b].second;
            BoneMotion m;
            m.rest = rest_bone_for(reg, child);
            double amp_px = cfg.base_amplitude_px;
            if (is_signal[child])
                amp_px = label == 1 ? cfg.base_amplitude_px * (1.0 + cfg.signal_boost)
                                    : cfg.base_amplitude_px * (1.0 - cfg.signal_damp);
            const double amp_rad = amp_px / m.rest.length;
            const double f0 = rng.uniform(0.7, 1.6);
            m.main = {0.8 * amp_rad, f0, rng.uniform(0.0, 2 * kPi)};
            m.harmonic = {0.35 * amp_rad, 2.0 * f0, rng.uniform(0.0, 2 * kPi)};
            m.length_mod = {0.003, rng.uniform(0.2, 0.8), rng.uniform(0.0, 2 * kPi)};
            const double noise_rad =
                cfg.noise_sigma * std::sqrt(2.0 / 3.0) / m.rest.length;
            for (auto& nz : m.noise)
                nz = {noise_rad, rng.uniform(0.3, 2.8), rng.uniform(0.0, 2 * kPi)};
            motion[b] = m;
        }

        SkeletonSequence seq;
        seq.id = "synth_" + std::to_string(10000 + i).substr(1);
        seq.fps = cfg.fps;
        seq.label = label;
        seq.frames = frames;
        seq.joints = V;
        seq.xy.assign(static_cast<std::size_t>(frames) * V * 2, 0.0);

        std::vector<double> px(V), py(V);
        for (int f = 0; f < frames; ++f) {
            const double t = f / cfg.fps;
            px[reg.root] = root_x + drift_x[0].eval(t) + drift_x[1].eval(t);
            py[reg.root] = root_y + drift_y[0].eval(t) + drift_y[1].eval(t);
            for (int b : reg.bone_topo) {
                const auto [parent, child] = reg.bones[b];
                const BoneMotion& m = motion[b];
                double angle = m.rest.angle + m.main.eval(t) + m.harmonic.eval(t);
                for (const auto& nz : m.noise) angle += nz.eval(t);
                const double len = m.rest.length * (1.0 + m.length_mod.eval(t));
                px[child] = px[parent] + len * std::cos(angle);
                py[child] = py[parent] + len * std::sin(angle);
            }
            for (int j = 0; j < V; ++j) {
                seq.x(f, j) = px[j];
                seq.y(f, j) = py[j];
            }
        }
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace skelxai
