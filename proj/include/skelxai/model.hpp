#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "skelxai/common.hpp"
#include "skelxai/skeleton.hpp"

#include <json.hpp>

namespace skelxai {

enum class Nonlinearity { relu, swish };

std::string to_string(Nonlinearity n);
Nonlinearity nonlinearity_from_string(const std::string& s);

// Architecture axes of the reduced GCN family: three per-stream branches of
// graph-conv blocks, channel-concatenated into a fused trunk, then GAP + FC.
struct MiniGcnConfig {
    int branch_width = 3;
    int n_branch_blocks = 1;
    int main_width = 6;
    int n_main_blocks = 1;
    int temporal_kernel = 5;  // odd
    Nonlinearity nonlinearity = Nonlinearity::relu;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

// One block: graph conv (joint mixing by the normalized adjacency + 1x1
// channel mixing) -> depthwise temporal conv with bias -> nonlinearity.
struct BlockParams {
    int in_ch = 0, out_ch = 0, kernel = 1;
    std::vector<double> mix;      // (out_ch, in_ch)
    std::vector<double> tkernel;  // (out_ch, kernel)
    std::vector<double> tbias;    // (out_ch)
};

struct ModelInstance {
    MiniGcnConfig config;
    int joints = 0;
    int classes = 2;
    std::vector<double> adjacency;                 // (V, V) D^-1/2 (A+I) D^-1/2
    std::array<std::vector<BlockParams>, 3> branch;  // position, velocity, bone
    std::vector<BlockParams> trunk;
    std::vector<double> fc_weight;  // (classes, trunk_out)
    std::vector<double> fc_bias;    // (classes)

    int trunk_out_channels() const { return trunk.empty() ? 0 : trunk.back().out_ch; }
    void validate() const;
};

std::vector<double> normalized_adjacency(const JointRegistry& reg);
ModelInstance make_model(const MiniGcnConfig& cfg, const JointRegistry& reg);

struct ForwardTrace {
    Tensor3 feature_maps;  // final trunk activations (channels, frames, joints)
    std::vector<double> pooled;
    std::vector<double> logits;
    std::vector<double> probs;
    int predicted_class = 0;
};

// Per-block activation record kept only when training needs the backward pass.
struct BlockTrace {
    Tensor3 input;
    Tensor3 graph_mid;  // intermediate of whichever mixing ran first
    bool adjacency_first = true;
    Tensor3 graph_out;
    Tensor3 pre_activation;
    Tensor3 output;
};

struct FullTrace {
    std::array<std::vector<BlockTrace>, 3> branch;
    std::vector<BlockTrace> trunk;
};

ForwardTrace forward(const ModelInstance& m, const StreamSet& streams, FullTrace* full = nullptr);

// d logits[class_idx] / d feature_maps, reverse-mode through the GAP+FC head.
Tensor3 grad_feature_maps(const ModelInstance& m, const StreamSet& streams, int class_idx);
Tensor3 grad_feature_maps(const ModelInstance& m, const ForwardTrace& trace, int class_idx);

// ------------------------------------------------------------- training

struct BlockGrads {
    std::vector<double> mix, tkernel, tbias;
};

struct ParamGrads {
    std::array<std::vector<BlockGrads>, 3> branch;
    std::vector<BlockGrads> trunk;
    std::vector<double> fc_weight, fc_bias;
};

ParamGrads zero_grads(const ModelInstance& m);

struct InputGrads {
    Tensor3 position, velocity, bone;
};

// Cross-entropy of one sample; adds dLoss/dParams into `grads`. When
// `input_grads` is given, also fills dLoss/dStreams.
double accumulate_loss_gradients(const ModelInstance& m, const StreamSet& streams, int label,
                                 ParamGrads& grads, InputGrads* input_grads = nullptr);

void apply_gradients(ModelInstance& m, const ParamGrads& grads, double step);

// Aligned flat views over parameters/gradients, for finite-difference probing
// and generic updates.
struct ParamView {
    std::string name;
    std::vector<double>* values;
};
std::vector<ParamView> parameter_views(ModelInstance& m);
std::vector<ParamView> gradient_views(ParamGrads& g, const ModelInstance& m);

// ------------------------------------------------------------- ensemble

struct Ensemble {
    std::vector<ModelInstance> members;
};

struct EnsemblePrediction {
    double prob;  // median class-1 probability across members
    std::vector<ForwardTrace> traces;
};

EnsemblePrediction ensemble_predict(const Ensemble& e, const StreamSet& streams);

// Member logits concatenated in member order; length members * classes.
std::vector<double> ensemble_representation(const std::vector<ForwardTrace>& traces);

struct MemberTrainStats {
    int member = 0;
    int held_out_portion = 0;
    double final_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainResult {
    Ensemble ensemble;
    std::vector<MemberTrainStats> stats;
};

// Full-batch gradient descent on cross-entropy. Each member trains on all
// portions except its own (round-robin portion assignment over a seeded
// shuffle); a single-member ensemble trains on everything.
TrainResult train_toy(const Ensemble& init, const std::vector<std::pair<StreamSet, int>>& data,
                      int epochs, double lr, std::uint64_t rng_seed, int workers = 1);

// ------------------------------------------------------------- serialization

nlohmann::json model_to_json(const ModelInstance& m);
ModelInstance model_from_json(const nlohmann::json& doc);
void save_model(const ModelInstance& m, const std::string& path);
ModelInstance load_model(const std::string& path);

}  // namespace skelxai
