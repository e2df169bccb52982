#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "skelxai/common.hpp"

namespace skelxai {

// Joint layout shared by every sequence in a run: ordered joint names plus the
// bone tree as (parent, child) index pairs. The tree must be connected and
// acyclic, and must contain "head" and "left_ankle" (the height endpoints).
struct JointRegistry {
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> bones;

    int head = -1;
    int left_ankle = -1;
    int pelvis = -1;  // optional; window centering falls back to all joints
    int root = -1;
    std::vector<int> parent;     // parent[j]; -1 at the root
    std::vector<int> bone_topo;  // bone indices ordered parents-before-children

    int count() const { return static_cast<int>(names.size()); }
    int index_of(const std::string& name) const;

    // Resolves head/left_ankle/pelvis/root/parent and checks the invariants.
    void finalize();

    static JointRegistry infant19();
};

JointRegistry registry_from_json_file(const std::string& path);

// Fixed-rate 2D joint trajectory with a class label. Coordinates are pixels,
// stored (frame, joint, xy) with xy fastest.
struct SkeletonSequence {
    std::string id;
    double fps = 0.0;
    int label = 0;  // 0 = No CP, 1 = CP
    int frames = 0;
    int joints = 0;
    std::vector<double> xy;

    double x(int f, int j) const { return xy[(static_cast<std::size_t>(f) * joints + j) * 2]; }
    double y(int f, int j) const { return xy[(static_cast<std::size_t>(f) * joints + j) * 2 + 1]; }
    double& x(int f, int j) { return xy[(static_cast<std::size_t>(f) * joints + j) * 2]; }
    double& y(int f, int j) { return xy[(static_cast<std::size_t>(f) * joints + j) * 2 + 1]; }

    void validate(const JointRegistry& reg) const;
};

// A fixed-length slice of one sequence; the unit of evaluation.
struct Window {
    std::string source_id;
    int start_frame = 0;
    int end_frame = 0;
    double fps = 0.0;
    int label = 0;
    int joints = 0;
    std::vector<double> xy;  // (frames, joint, xy)

    int frames() const { return end_frame - start_frame; }
    double x(int f, int j) const { return xy[(static_cast<std::size_t>(f) * joints + j) * 2]; }
    double y(int f, int j) const { return xy[(static_cast<std::size_t>(f) * joints + j) * 2 + 1]; }
    double& x(int f, int j) { return xy[(static_cast<std::size_t>(f) * joints + j) * 2]; }
    double& y(int f, int j) { return xy[(static_cast<std::size_t>(f) * joints + j) * 2 + 1]; }

    std::string id() const;
};

struct WindowPolicy {
    double window_seconds = 5.0;
    int guard_frames = -1;     // < 0 means one window length on each side
    int max_per_sequence = 1;  // <= 0 means no cap
};

// Non-overlapping windows from the guarded interior of the sequence. Slots are
// consecutive window-length segments after the leading guard; when more slots
// fit than the cap allows, the kept subset is a seeded draw.
std::vector<Window> extract_windows(const SkeletonSequence& seq, const WindowPolicy& policy,
                                    std::uint64_t rng_seed);

// Median over frames of the head to left-ankle pixel distance.
double median_height(const Window& w, const JointRegistry& reg);

enum class StreamKind { position, velocity, bone };

struct StreamTensor {
    StreamKind kind;
    Tensor3 data;  // (channels, frames, joints)
};

// The three model input streams for one window, plus the centering/scaling
// constants needed to invert the position stream.
struct StreamSet {
    StreamTensor position;  // 2 channels
    StreamTensor velocity;  // 2 channels, frame difference, last frame repeated
    StreamTensor bone;      // 1 channel, length of the bone from the parent
    double center_x = 0.0;
    double center_y = 0.0;
    double scale = 1.0;
};

// center_scale = true subtracts the window-mean pelvis coordinate and divides
// by the median height; false leaves raw pixels (pure reshape).
StreamSet derive_streams(const Window& w, const JointRegistry& reg, bool center_scale = true);

// ------------------------------------------------------------ ingestion IO

SkeletonSequence sequence_from_json_file(const std::string& path);
void sequence_to_json_file(const SkeletonSequence& seq, const JointRegistry& reg,
                           const std::string& path);
// CSV rows are frame,joint,x,y (joint by index or by name); the sidecar JSON
// carries {"id","fps","label","joints"}.
SkeletonSequence sequence_from_csv_file(const std::string& csv_path,
                                        const std::string& sidecar_json_path);

}  // namespace skelxai
