#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "skelxai/skeleton.hpp"

using namespace skelxai;

namespace {

JointRegistry two_joint_registry() {
    JointRegistry reg;
    reg.names = {"head", "left_ankle"};
    reg.bones = {{0, 1}};
    reg.finalize();
    return reg;
}

SkeletonSequence flat_sequence(const JointRegistry& reg, int frames, double fps,
                               const std::string& id = "seq") {
    SkeletonSequence seq;
    seq.id = id;
    seq.fps = fps;
    seq.label = 0;
    seq.frames = frames;
    seq.joints = reg.count();
    seq.xy.assign(static_cast<std::size_t>(frames) * reg.count() * 2, 0.0);
    for (int f = 0; f < frames; ++f)
        for (int j = 0; j < reg.count(); ++j) {
            seq.x(f, j) = 10.0 * j + 0.01 * f;
            seq.y(f, j) = 5.0 * j;
        }
    return seq;
}

Window window_from_coords(const std::vector<std::vector<std::pair<double, double>>>& frames,
                          double fps = 30.0) {
    Window w;
    w.source_id = "test";
    w.start_frame = 0;
    w.end_frame = static_cast<int>(frames.size());
    w.fps = fps;
    w.joints = static_cast<int>(frames[0].size());
    w.xy.resize(frames.size() * frames[0].size() * 2);
    for (std::size_t f = 0; f < frames.size(); ++f)
        for (std::size_t j = 0; j < frames[f].size(); ++j) {
            w.x(static_cast<int>(f), static_cast<int>(j)) = frames[f][j].first;
            w.y(static_cast<int>(f), static_cast<int>(j)) = frames[f][j].second;
        }
    return w;
}

}  // namespace

TEST_CASE("registry: infant19 is a valid 19-joint tree") {
    const JointRegistry reg = JointRegistry::infant19();
    CHECK(reg.count() == 19);
    CHECK(reg.bones.size() == 18);
    CHECK(reg.head == 0);
    CHECK(reg.names[reg.left_ankle] == "left_ankle");
    CHECK(reg.names[reg.root] == "pelvis");
    int roots = 0;
    for (int j = 0; j < reg.count(); ++j)
        if (reg.parent[j] < 0) ++roots;
    CHECK(roots == 1);
}

TEST_CASE("registry: invalid layouts are rejected") {
    JointRegistry reg;
    reg.names = {"head", "left_ankle", "other"};
    reg.bones = {{0, 1}};  // disconnected: "other" unreachable
    CHECK_THROWS_AS(reg.finalize(), ConfigError);

    reg.bones = {{0, 1}, {1, 2}, {2, 0}};  // cycle
    CHECK_THROWS_AS(reg.finalize(), ConfigError);

    JointRegistry no_head;
    no_head.names = {"a", "left_ankle"};
    no_head.bones = {{0, 1}};
    CHECK_THROWS_AS(no_head.finalize(), ConfigError);
}

TEST_CASE("extract_windows: single middle window when exactly one fits") {
    const JointRegistry reg = two_joint_registry();
    const auto seq = flat_sequence(reg, 450, 30.0);
    WindowPolicy policy;
    policy.guard_frames = 150;
    policy.max_per_sequence = 0;
    const auto windows = extract_windows(seq, policy, 1);
    REQUIRE(windows.size() == 1);
    CHECK(windows[0].start_frame == 150);
    CHECK(windows[0].end_frame == 300);
    CHECK(windows[0].frames() == 150);
}

TEST_CASE("extract_windows: zero-length sequence is too short") {
    const JointRegistry reg = two_joint_registry();
    SkeletonSequence seq;
    seq.id = "empty";
    seq.fps = 30.0;
    seq.frames = 0;
    seq.joints = reg.count();
    CHECK_THROWS_AS(extract_windows(seq, WindowPolicy{}, 1), SequenceTooShort);
}

TEST_CASE("extract_windows: capped draw stays disjoint (brute-force check)") {
    const JointRegistry reg = two_joint_registry();
    const auto seq = flat_sequence(reg, 1350, 30.0);
    WindowPolicy policy;
    policy.guard_frames = 150;
    policy.max_per_sequence = 3;
    const auto windows = extract_windows(seq, policy, 99);
    REQUIRE(windows.size() == 3);
    for (const auto& w : windows) {
        CHECK(w.start_frame >= 150);
        CHECK(w.end_frame <= 1200);
        CHECK(w.frames() == 150);
    }
    for (std::size_t i = 0; i < windows.size(); ++i)
        for (std::size_t j = i + 1; j < windows.size(); ++j) {
            const bool overlap = windows[i].start_frame < windows[j].end_frame &&
                                 windows[j].start_frame < windows[i].end_frame;
            CHECK_FALSE(overlap);
        }
}

TEST_CASE("extract_windows: property over random sequences") {
    const JointRegistry reg = two_joint_registry();
    Prng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const double fps = 5.0 + 25.0 * rng.uniform();
        const int frames = 120 + static_cast<int>(rng.next_u64() % 2000);
        const auto seq = flat_sequence(reg, frames, fps, "t" + std::to_string(trial));
        WindowPolicy policy;
        policy.max_per_sequence = 1 + static_cast<int>(rng.next_u64() % 5);
        const int win = static_cast<int>(std::lround(policy.window_seconds * fps));
        const int guard = win;
        try {
            const auto windows = extract_windows(seq, policy, trial);
            CHECK(!windows.empty());
            CHECK(static_cast<int>(windows.size()) <= policy.max_per_sequence);
            for (const auto& w : windows) {
                CHECK(w.frames() == win);
                CHECK(w.start_frame >= guard);
                CHECK(w.end_frame <= frames - guard);
            }
            for (std::size_t i = 0; i < windows.size(); ++i)
                for (std::size_t j = i + 1; j < windows.size(); ++j) {
                    const bool overlap = windows[i].start_frame < windows[j].end_frame &&
                                         windows[j].start_frame < windows[i].end_frame;
                    CHECK_FALSE(overlap);
                }
        } catch (const SequenceTooShort&) {
            CHECK(frames < 3 * win);  // only genuinely short sequences may throw
        }
    }
}

TEST_CASE("extract_windows: deterministic given the seed") {
    const JointRegistry reg = two_joint_registry();
    const auto seq = flat_sequence(reg, 2000, 30.0);
    WindowPolicy policy;
    policy.max_per_sequence = 4;
    const auto a = extract_windows(seq, policy, 7);
    const auto b = extract_windows(seq, policy, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].start_frame == b[i].start_frame);
}

TEST_CASE("median_height: trivial and derived cases") {
    const JointRegistry reg = two_joint_registry();

    auto w = window_from_coords({{{0, 100}, {0, 0}}, {{0, 100}, {0, 0}}});
    CHECK(median_height(w, reg) == doctest::Approx(100.0).epsilon(1e-12));

    // per-frame heights {90, 100, 110} -> odd-count median 100
    auto w3 = window_from_coords({{{0, 90}, {0, 0}}, {{0, 100}, {0, 0}}, {{0, 110}, {0, 0}}});
    CHECK(median_height(w3, reg) == doctest::Approx(100.0).epsilon(1e-12));

    // random window vs a sort-based oracle
    Prng rng(5);
    std::vector<std::vector<std::pair<double, double>>> frames;
    std::vector<double> heights;
    for (int f = 0; f < 40; ++f) {
        const double hx = rng.uniform(-50, 50), hy = rng.uniform(-50, 50);
        const double ax = rng.uniform(-50, 50), ay = rng.uniform(-50, 50);
        frames.push_back({{hx, hy}, {ax, ay}});
        heights.push_back(std::hypot(hx - ax, hy - ay));
    }
    auto wr = window_from_coords(frames);
    std::sort(heights.begin(), heights.end());
    const double oracle = 0.5 * (heights[19] + heights[20]);
    CHECK(median_height(wr, reg) == doctest::Approx(oracle).epsilon(1e-12));

    // permutation invariance over frames
    auto frames_shuffled = frames;
    std::reverse(frames_shuffled.begin(), frames_shuffled.end());
    auto wp = window_from_coords(frames_shuffled);
    CHECK(median_height(wp, reg) == doctest::Approx(median_height(wr, reg)).epsilon(1e-15));
}

TEST_CASE("derive_streams: stationary skeleton has zero velocity") {
    const JointRegistry reg = two_joint_registry();
    auto w = window_from_coords({{{1, 2}, {3, 4}}, {{1, 2}, {3, 4}}, {{1, 2}, {3, 4}}});
    const StreamSet s = derive_streams(w, reg, false);
    for (double v : s.velocity.data.data) CHECK(v == 0.0);
}

TEST_CASE("derive_streams: 3-4-5 bone length at the child joint") {
    const JointRegistry reg = two_joint_registry();
    auto w = window_from_coords({{{0, 0}, {3, 4}}, {{0, 0}, {3, 4}}});
    const StreamSet s = derive_streams(w, reg, false);
    CHECK(s.bone.data.at(0, 0, 1) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(s.bone.data.at(0, 0, 0) == 0.0);  // root carries 0
}

TEST_CASE("derive_streams: velocity equals the frame difference (direct recomputation)") {
    const JointRegistry reg = JointRegistry::infant19();
    Prng rng(11);
    Window w;
    w.source_id = "rand";
    w.start_frame = 0;
    w.end_frame = 10;
    w.fps = 2.0;
    w.joints = reg.count();
    w.xy.resize(10 * reg.count() * 2);
    for (double& c : w.xy) c = rng.uniform(-100, 100);

    const StreamSet s = derive_streams(w, reg, false);
    for (int t = 0; t < 9; ++t)
        for (int j = 0; j < reg.count(); ++j) {
            CHECK(s.velocity.data.at(0, t, j) ==
                  doctest::Approx(w.x(t + 1, j) - w.x(t, j)).epsilon(1e-15));
            CHECK(s.velocity.data.at(1, t, j) ==
                  doctest::Approx(w.y(t + 1, j) - w.y(t, j)).epsilon(1e-15));
        }
    // duplicated last frame
    for (int j = 0; j < reg.count(); ++j) {
        CHECK(s.velocity.data.at(0, 9, j) == s.velocity.data.at(0, 8, j));
        CHECK(s.velocity.data.at(1, 9, j) == s.velocity.data.at(1, 8, j));
    }

    // bone invariants on random data
    for (int t = 0; t < 10; ++t)
        for (int j = 0; j < reg.count(); ++j) {
            CHECK(s.bone.data.at(0, t, j) >= 0.0);
            if (reg.parent[j] < 0) CHECK(s.bone.data.at(0, t, j) == 0.0);
        }
}

TEST_CASE("derive_streams: deterministic, idempotent, invertible") {
    const JointRegistry reg = JointRegistry::infant19();
    Prng rng(12);
    Window w;
    w.source_id = "rand";
    w.start_frame = 5;
    w.end_frame = 25;
    w.fps = 4.0;
    w.joints = reg.count();
    w.xy.resize(20 * reg.count() * 2);
    for (double& c : w.xy) c = rng.uniform(0, 300);

    const StreamSet a = derive_streams(w, reg, true);
    const StreamSet b = derive_streams(w, reg, true);
    CHECK(a.position.data.data == b.position.data.data);  // bit-identical
    CHECK(a.velocity.data.data == b.velocity.data.data);
    CHECK(a.bone.data.data == b.bone.data.data);

    // raw mode: position is a pure reshape, inversion is exact
    const StreamSet raw = derive_streams(w, reg, false);
    for (int t = 0; t < 20; ++t)
        for (int j = 0; j < reg.count(); ++j) {
            CHECK(raw.position.data.at(0, t, j) == w.x(t, j));
            CHECK(raw.position.data.at(1, t, j) == w.y(t, j));
        }

    // center-scale mode inverts to the original coordinates
    for (int t = 0; t < 20; ++t)
        for (int j = 0; j < reg.count(); ++j) {
            const double x = a.position.data.at(0, t, j) * a.scale + a.center_x;
            const double y = a.position.data.at(1, t, j) * a.scale + a.center_y;
            CHECK(x == doctest::Approx(w.x(t, j)).epsilon(1e-12));
            CHECK(y == doctest::Approx(w.y(t, j)).epsilon(1e-12));
        }
}

TEST_CASE("ingestion: json round trip and csv sidecar") {
    namespace fs = std::filesystem;
    const JointRegistry reg = two_joint_registry();
    const auto seq = flat_sequence(reg, 12, 30.0, "io_check");

    const fs::path dir = fs::temp_directory_path() / "skelxai_io_test";
    fs::create_directories(dir);
    const std::string json_path = (dir / "seq.json").string();
    sequence_to_json_file(seq, reg, json_path);
    const SkeletonSequence loaded = sequence_from_json_file(json_path);
    CHECK(loaded.id == seq.id);
    CHECK(loaded.fps == seq.fps);
    CHECK(loaded.label == seq.label);
    CHECK(loaded.xy == seq.xy);  // bit-exact

    // csv alternative with a sidecar
    const std::string csv_path = (dir / "seq.csv").string();
    const std::string sidecar_path = (dir / "seq.meta.json").string();
    {
        FILE* f = std::fopen(csv_path.c_str(), "w");
        std::fprintf(f, "frame,joint,x,y\n");
        for (int fr = 0; fr < seq.frames; ++fr)
            for (int j = 0; j < seq.joints; ++j)
                std::fprintf(f, "%d,%s,%.17g,%.17g\n", fr, j == 0 ? "head" : "1", seq.x(fr, j),
                             seq.y(fr, j));
        std::fclose(f);
        FILE* m = std::fopen(sidecar_path.c_str(), "w");
        std::fprintf(m, "{\"id\":\"io_check\",\"fps\":30.0,\"label\":0,"
                        "\"joints\":[\"head\",\"left_ankle\"]}\n");
        std::fclose(m);
    }
    const SkeletonSequence from_csv = sequence_from_csv_file(csv_path, sidecar_path);
    CHECK(from_csv.xy == seq.xy);
    fs::remove_all(dir);
}
