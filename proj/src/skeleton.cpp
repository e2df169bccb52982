#include "skelxai/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skelxai {

using nlohmann::json;

// ------------------------------------------------------------- registry

int JointRegistry::index_of(const std::string& name) const {
    for (int i = 0; i < count(); ++i)
        if (names[i] == name) return i;
    return -1;
}

void JointRegistry::finalize() {
    const int n = count();
    if (n < 2) throw ConfigError("joint registry needs at least two joints");
    head = index_of("head");
    left_ankle = index_of("left_ankle");
    pelvis = index_of("pelvis");
    if (head < 0 || left_ankle < 0)
        throw ConfigError("joint registry must name 'head' and 'left_ankle'");
    if (static_cast<int>(bones.size()) != n - 1)
        throw ConfigError("bone list must form a spanning tree (count-1 edges)");

    parent.assign(n, -1);
    std::vector<int> degree(n, 0);
    for (auto [p, c] : bones) {
        if (p < 0 || p >= n || c < 0 || c >= n) throw ConfigError("bone index out of range");
        if (parent[c] != -1) throw ConfigError("joint has two parents (bone graph not a tree)");
        if (p == c) throw ConfigError("self-loop bone");
        parent[c] = p;
        ++degree[p];
        ++degree[c];
    }
    root = -1;
    for (int j = 0; j < n; ++j) {
        if (parent[j] == -1) {
            if (root != -1) throw ConfigError("bone graph is disconnected (two roots)");
            root = j;
        }
    }
    if (root == -1) throw ConfigError("bone graph contains a cycle");
    // walk up from each joint: cycles or disconnection would loop past n steps
    std::vector<int> depth(n, 0);
    for (int j = 0; j < n; ++j) {
        int cur = j, steps = 0;
        while (cur != root) {
            cur = parent[cur];
            if (cur < 0 || ++steps > n) throw ConfigError("bone graph is not a connected tree");
        }
        depth[j] = steps;
    }
    bone_topo.resize(bones.size());
    for (std::size_t b = 0; b < bones.size(); ++b) bone_topo[b] = static_cast<int>(b);
    std::stable_sort(bone_topo.begin(), bone_topo.end(),
                     [&](int a, int b) { return depth[bones[a].second] < depth[bones[b].second]; });
}

JointRegistry JointRegistry::infant19() {
    JointRegistry reg;
    reg.names = {
        "head",          "nose",        "neck",        "left_shoulder", "left_elbow",
        "left_wrist",    "right_shoulder", "right_elbow", "right_wrist", "chest",
        "pelvis",        "left_hip",    "left_knee",   "left_ankle",    "right_hip",
        "right_knee",    "right_ankle", "left_ear",    "right_ear",
    };
    auto b = [&](const char* p, const char* c) {
        reg.bones.emplace_back(reg.index_of(p), reg.index_of(c));
    };
    b("pelvis", "chest");
    b("chest", "neck");
    b("neck", "head");
    b("head", "nose");
    b("head", "left_ear");
    b("head", "right_ear");
    b("neck", "left_shoulder");
    b("left_shoulder", "left_elbow");
    b("left_elbow", "left_wrist");
    b("neck", "right_shoulder");
    b("right_shoulder", "right_elbow");
    b("right_elbow", "right_wrist");
    b("pelvis", "left_hip");
    b("left_hip", "left_knee");
    b("left_knee", "left_ankle");
    b("pelvis", "right_hip");
    b("right_hip", "right_knee");
    b("right_knee", "right_ankle");
    reg.finalize();
    return reg;
}

JointRegistry registry_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open registry file: " + path);
    json doc = json::parse(in);
    JointRegistry reg;
    reg.names = doc.at("joints").get<std::vector<std::string>>();
    for (const auto& bone : doc.at("bones"))
        reg.bones.emplace_back(bone.at(0).get<int>(), bone.at(1).get<int>());
    reg.finalize();
    return reg;
}

// ------------------------------------------------------------- sequences

void SkeletonSequence::validate(const JointRegistry& reg) const {
    if (frames < 2) throw DataError("sequence '" + id + "' has fewer than 2 frames");
    if (joints != reg.count()) throw DataError("sequence '" + id + "' joint count mismatch");
    if (fps <= 0.0) throw DataError("sequence '" + id + "' has non-positive fps");
    if (label != 0 && label != 1) throw DataError("sequence '" + id + "' label must be 0 or 1");
    for (double v : xy)
        if (!std::isfinite(v)) throw DataError("sequence '" + id + "' has non-finite coordinates");
}

std::string Window::id() const {
    return source_id + ":" + std::to_string(start_frame) + "-" + std::to_string(end_frame);
}

std::vector<Window> extract_windows(const SkeletonSequence& seq, const WindowPolicy& policy,
                                    std::uint64_t rng_seed) {
    const int win = static_cast<int>(std::lround(policy.window_seconds * seq.fps));
    if (win < 2) throw ConfigError("window length below 2 frames");
    const int guard = policy.guard_frames >= 0 ? policy.guard_frames : win;
    const int usable = seq.frames - 2 * guard;
    const int slots = usable / win;
    if (slots < 1)
        throw SequenceTooShort("sequence '" + seq.id + "' has no full window after trimming " +
                               std::to_string(guard) + "-frame guards");

    int keep = slots;
    if (policy.max_per_sequence > 0) keep = std::min(keep, policy.max_per_sequence);

    // seeded draw of `keep` distinct slots (partial Fisher-Yates), then sorted
    std::vector<int> slot_ids(slots);
    for (int i = 0; i < slots; ++i) slot_ids[i] = i;
    Prng rng(mix64(rng_seed, fnv1a64(seq.id)));
    for (int i = 0; i < keep; ++i) {
        int j = i + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(slots - i));
        std::swap(slot_ids[i], slot_ids[j]);
    }
    slot_ids.resize(keep);
    std::sort(slot_ids.begin(), slot_ids.end());

    std::vector<Window> out;
    out.reserve(keep);
    for (int s : slot_ids) {
        Window w;
        w.source_id = seq.id;
        w.start_frame = guard + s * win;
        w.end_frame = w.start_frame + win;
        w.fps = seq.fps;
        w.label = seq.label;
        w.joints = seq.joints;
        w.xy.assign(seq.xy.begin() + static_cast<std::size_t>(w.start_frame) * seq.joints * 2,
                    seq.xy.begin() + static_cast<std::size_t>(w.end_frame) * seq.joints * 2);
        out.push_back(std::move(w));
    }
    return out;
}

double median_height(const Window& w, const JointRegistry& reg) {
    std::vector<double> heights(w.frames());
    for (int f = 0; f < w.frames(); ++f) {
        const double dx = w.x(f, reg.head) - w.x(f, reg.left_ankle);
        const double dy = w.y(f, reg.head) - w.y(f, reg.left_ankle);
        heights[f] = std::hypot(dx, dy);
    }
    return median(std::move(heights));
}

StreamSet derive_streams(const Window& w, const JointRegistry& reg, bool center_scale) {
    const int T = w.frames();
    const int V = w.joints;
    if (V != reg.count()) throw ShapeMismatch("window joint count differs from registry");
    for (double c : w.xy)
        if (!std::isfinite(c)) throw DataError("window has non-finite coordinates");

    StreamSet s;
    s.position = {StreamKind::position, Tensor3(2, T, V)};
    s.velocity = {StreamKind::velocity, Tensor3(2, T, V)};
    s.bone = {StreamKind::bone, Tensor3(1, T, V)};

    if (center_scale) {
        double cx = 0.0, cy = 0.0;
        if (reg.pelvis >= 0) {
            for (int f = 0; f < T; ++f) {
                cx += w.x(f, reg.pelvis);
                cy += w.y(f, reg.pelvis);
            }
            cx /= T;
            cy /= T;
        } else {
            for (int f = 0; f < T; ++f)
                for (int j = 0; j < V; ++j) {
                    cx += w.x(f, j);
                    cy += w.y(f, j);
                }
            cx /= static_cast<double>(T) * V;
            cy /= static_cast<double>(T) * V;
        }
        const double h = median_height(w, reg);
        s.center_x = cx;
        s.center_y = cy;
        s.scale = h > 0.0 ? h : 1.0;
    }

    const double inv = 1.0 / s.scale;
    for (int f = 0; f < T; ++f)
        for (int j = 0; j < V; ++j) {
            s.position.data.at(0, f, j) = (w.x(f, j) - s.center_x) * inv;
            s.position.data.at(1, f, j) = (w.y(f, j) - s.center_y) * inv;
        }

    for (int f = 0; f < T; ++f) {
        const int a = (f < T - 1) ? f : T - 2;  // duplicate the last difference
        for (int j = 0; j < V; ++j) {
            s.velocity.data.at(0, f, j) =
                s.position.data.at(0, a + 1, j) - s.position.data.at(0, a, j);
            s.velocity.data.at(1, f, j) =
                s.position.data.at(1, a + 1, j) - s.position.data.at(1, a, j);
        }
    }

    for (int f = 0; f < T; ++f)
        for (int j = 0; j < V; ++j) {
            const int p = reg.parent[j];
            if (p < 0) {
                s.bone.data.at(0, f, j) = 0.0;
            } else {
                const double dx = s.position.data.at(0, f, j) - s.position.data.at(0, f, p);
                const double dy = s.position.data.at(1, f, j) - s.position.data.at(1, f, p);
                s.bone.data.at(0, f, j) = std::hypot(dx, dy);
            }
        }
    return s;
}

// ------------------------------------------------------------- ingestion IO

SkeletonSequence sequence_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sequence file: " + path);
    json doc = json::parse(in);
    SkeletonSequence seq;
    seq.id = doc.at("id").get<std::string>();
    seq.fps = doc.at("fps").get<double>();
    seq.label = doc.at("label").get<int>();
    const auto& frames = doc.at("frames");
    seq.frames = static_cast<int>(frames.size());
    seq.joints = doc.at("joints").size();
    seq.xy.reserve(static_cast<std::size_t>(seq.frames) * seq.joints * 2);
    for (const auto& frame : frames) {
        if (static_cast<int>(frame.size()) != seq.joints)
            throw DataError("frame joint count mismatch in " + path);
        for (const auto& pt : frame) {
            seq.xy.push_back(pt.at(0).get<double>());
            seq.xy.push_back(pt.at(1).get<double>());
        }
    }
    return seq;
}

void sequence_to_json_file(const SkeletonSequence& seq, const JointRegistry& reg,
                           const std::string& path) {
    json doc;
    doc["id"] = seq.id;
    doc["fps"] = seq.fps;
    doc["label"] = seq.label;
    doc["joints"] = reg.names;
    json frames = json::array();
    for (int f = 0; f < seq.frames; ++f) {
        json frame = json::array();
        for (int j = 0; j < seq.joints; ++j) frame.push_back({seq.x(f, j), seq.y(f, j)});
        frames.push_back(std::move(frame));
    }
    doc["frames"] = std::move(frames);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write sequence file: " + path);
    out << doc.dump() << "\n";
}

SkeletonSequence sequence_from_csv_file(const std::string& csv_path,
                                        const std::string& sidecar_json_path) {
    std::ifstream meta_in(sidecar_json_path);
    if (!meta_in) throw DataError("cannot open sidecar file: " + sidecar_json_path);
    json meta = json::parse(meta_in);
    SkeletonSequence seq;
    seq.id = meta.at("id").get<std::string>();
    seq.fps = meta.at("fps").get<double>();
    seq.label = meta.at("label").get<int>();
    const auto names = meta.at("joints").get<std::vector<std::string>>();
    seq.joints = static_cast<int>(names.size());

    std::ifstream in(csv_path);
    if (!in) throw DataError("cannot open csv file: " + csv_path);
    std::string line;
    struct Row {
        int frame, joint;
        double x, y;
    };
    std::vector<Row> rows;
    int max_frame = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string frame_s, joint_s, x_s, y_s;
        if (!std::getline(ss, frame_s, ',') || !std::getline(ss, joint_s, ',') ||
            !std::getline(ss, x_s, ',') || !std::getline(ss, y_s, ','))
            throw DataError("bad csv row in " + csv_path + ": " + line);
        if (frame_s == "frame") continue;  // header
        Row r;
        r.frame = std::stoi(frame_s);
        try {
            r.joint = std::stoi(joint_s);
        } catch (const std::exception&) {
            r.joint = -1;
            for (int j = 0; j < seq.joints; ++j)
                if (names[j] == joint_s) r.joint = j;
            if (r.joint < 0) throw DataError("unknown joint name in csv: " + joint_s);
        }
        r.x = std::stod(x_s);
        r.y = std::stod(y_s);
        if (r.joint < 0 || r.joint >= seq.joints) throw DataError("csv joint index out of range");
        rows.push_back(r);
        max_frame = std::max(max_frame, r.frame);
    }
    seq.frames = max_frame + 1;
    if (seq.frames < 1 || rows.size() != static_cast<std::size_t>(seq.frames) * seq.joints)
        throw DataError("csv file " + csv_path + " does not cover every (frame, joint) pair");
    seq.xy.assign(static_cast<std::size_t>(seq.frames) * seq.joints * 2, 0.0);
    for (const Row& r : rows) {
        seq.x(r.frame, r.joint) = r.x;
        seq.y(r.frame, r.joint) = r.y;
    }
    return seq;
}

}  // namespace skelxai
