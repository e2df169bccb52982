#pragma once

#include <string>
#include <vector>

#include "skelxai/attribution.hpp"
#include "skelxai/metrics.hpp"
#include "skelxai/model.hpp"
#include "skelxai/svg.hpp"
#include "skelxai/synth.hpp"

#include <json.hpp>

namespace skelxai {

enum class RunScope { ensemble, per_model, both };

std::string to_string(RunScope s);
RunScope scope_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 300;
    double lr = 0.5;
};

struct ReportConfig {
    double color_threshold = 0.3;
    int skeleton_windows = 2;  // windows rendered as colored skeletons
};

// Everything one run needs; serializes to/from a single JSON document.
struct RunConfig {
    std::string data_dir;  // empty -> <out_dir>/dataset
    std::string model_dir;  // empty -> <out_dir>/models
    std::string out_dir = "out";
    std::string registry_file;  // empty -> built-in infant19 layout

    SynthConfig synth;
    std::vector<MiniGcnConfig> roster;  // empty -> default_roster(rng_seed)
    WindowPolicy windows;

    double perturb_r_fraction = 0.01;
    int perturb_n = 50;
    MetricConfig metrics;

    std::vector<Method> methods = {Method::cam, Method::gradcam, Method::random};
    RunScope scope = RunScope::ensemble;
    std::uint64_t rng_seed = 7;
    int workers = 2;
    bool center_scale = true;

    TrainConfig train;
    ReportConfig report;
};

// Ten small architecture variants along the width/depth/kernel/nonlinearity
// axes, seeded per member.
std::vector<MiniGcnConfig> default_roster(std::uint64_t rng_seed);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

// 16-hex digest of the canonical config JSON; embedded in every output file.
std::string config_hash(const RunConfig& cfg);

// Fills empty data/model dirs from out_dir; every command applies this first.
void resolve_paths(RunConfig& cfg);

JointRegistry load_registry(const RunConfig& cfg);

// ------------------------------------------------------------- commands

void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);
void cmd_ttest(const RunConfig& cfg);

// ------------------------------------------------------------- shared IO

std::vector<SkeletonSequence> load_dataset(const RunConfig& cfg, const JointRegistry& reg);
Ensemble load_ensemble(const RunConfig& cfg);

struct WindowSet {
    std::vector<Window> windows;            // sorted by window id
    std::vector<std::string> too_short;     // skipped sequence ids
    int sequences_in = 0;
};
WindowSet collect_windows(const std::vector<SkeletonSequence>& seqs, const WindowPolicy& policy,
                          std::uint64_t rng_seed);

}  // namespace skelxai
