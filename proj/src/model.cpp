#include "skelxai/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace skelxai {

using nlohmann::json;

std::string to_string(Nonlinearity n) { return n == Nonlinearity::relu ? "relu" : "swish"; }

Nonlinearity nonlinearity_from_string(const std::string& s) {
    if (s == "relu") return Nonlinearity::relu;
    if (s == "swish") return Nonlinearity::swish;
    throw ConfigError("unknown nonlinearity: " + s);
}

void MiniGcnConfig::validate() const {
    if (branch_width < 1 || main_width < 1) throw ConfigError("widths must be >= 1");
    if (n_branch_blocks < 1 || n_main_blocks < 1) throw ConfigError("block counts must be >= 1");
    if (temporal_kernel < 1 || temporal_kernel % 2 == 0)
        throw ConfigError("temporal_kernel must be odd and >= 1");
}

void ModelInstance::validate() const {
    if (joints < 1 || classes < 1) throw ConfigError("model needs joints and classes");
    if (adjacency.size() != static_cast<std::size_t>(joints) * joints)
        throw ShapeMismatch("adjacency shape mismatch");
    int concat = 0;
    for (const auto& blocks : branch) {
        if (blocks.empty()) throw ConfigError("every branch needs at least one block");
        concat += blocks.back().out_ch;
    }
    if (trunk.empty()) throw ConfigError("trunk needs at least one block");
    if (trunk.front().in_ch != concat) throw ShapeMismatch("trunk input != concatenated branches");
    if (fc_weight.size() != static_cast<std::size_t>(classes) * trunk_out_channels())
        throw ShapeMismatch("fc weight shape mismatch");
    if (fc_bias.size() != static_cast<std::size_t>(classes))
        throw ShapeMismatch("fc bias shape mismatch");
    for (const auto& blocks : {&branch[0], &branch[1], &branch[2], &trunk})
        for (const auto& b : *blocks) {
            if (b.mix.size() != static_cast<std::size_t>(b.out_ch) * b.in_ch ||
                b.tkernel.size() != static_cast<std::size_t>(b.out_ch) * b.kernel ||
                b.tbias.size() != static_cast<std::size_t>(b.out_ch))
                throw ShapeMismatch("block parameter shape mismatch");
            for (double x : b.mix)
                if (!std::isfinite(x)) throw DataError("non-finite parameter");
        }
}

std::vector<double> normalized_adjacency(const JointRegistry& reg) {
    const int V = reg.count();
    std::vector<double> a(static_cast<std::size_t>(V) * V, 0.0);
    for (int j = 0; j < V; ++j) a[static_cast<std::size_t>(j) * V + j] = 1.0;  // self loops
    for (auto [p, c] : reg.bones) {
        a[static_cast<std::size_t>(p) * V + c] = 1.0;
        a[static_cast<std::size_t>(c) * V + p] = 1.0;
    }
    std::vector<double> dinv(V);
    for (int u = 0; u < V; ++u) {
        double deg = 0.0;
        for (int v = 0; v < V; ++v) deg += a[static_cast<std::size_t>(u) * V + v];
        dinv[u] = 1.0 / std::sqrt(deg);
    }
    for (int u = 0; u < V; ++u)
        for (int v = 0; v < V; ++v) a[static_cast<std::size_t>(u) * V + v] *= dinv[u] * dinv[v];
    return a;
}

namespace {

BlockParams init_block(int in_ch, int out_ch, int kernel, Prng& rng) {
    BlockParams b;
    b.in_ch = in_ch;
    b.out_ch = out_ch;
    b.kernel = kernel;
    b.mix.resize(static_cast<std::size_t>(out_ch) * in_ch);
    const double mix_std = std::sqrt(2.0 / in_ch);
    for (double& w : b.mix) w = mix_std * rng.gaussian();
    b.tkernel.assign(static_cast<std::size_t>(out_ch) * kernel, 0.0);
    for (int o = 0; o < out_ch; ++o)
        for (int k = 0; k < kernel; ++k) {
            double w = 0.15 * rng.gaussian() / std::sqrt(static_cast<double>(kernel));
            if (k == kernel / 2) w += 1.0;  // start near an identity-in-time kernel
            b.tkernel[static_cast<std::size_t>(o) * kernel + k] = w;
        }
    b.tbias.resize(out_ch);
    for (double& x : b.tbias) x = 0.05 * rng.gaussian();
    return b;
}

}  // namespace

ModelInstance make_model(const MiniGcnConfig& cfg, const JointRegistry& reg) {
    cfg.validate();
    ModelInstance m;
    m.config = cfg;
    m.joints = reg.count();
    m.adjacency = normalized_adjacency(reg);

    Prng rng(mix64(cfg.rng_seed, 0x6cdf00d5u));
    const int stream_channels[3] = {2, 2, 1};  // position, velocity, bone
    for (int s = 0; s < 3; ++s) {
        int in_ch = stream_channels[s];
        for (int i = 0; i < cfg.n_branch_blocks; ++i) {
            m.branch[s].push_back(init_block(in_ch, cfg.branch_width, cfg.temporal_kernel, rng));
            in_ch = cfg.branch_width;
        }
    }
    int in_ch = 3 * cfg.branch_width;
    for (int i = 0; i < cfg.n_main_blocks; ++i) {
        m.trunk.push_back(init_block(in_ch, cfg.main_width, cfg.temporal_kernel, rng));
        in_ch = cfg.main_width;
    }
    m.fc_weight.resize(static_cast<std::size_t>(m.classes) * cfg.main_width);
    const double fc_std = 0.5 / std::sqrt(static_cast<double>(cfg.main_width));
    for (double& w : m.fc_weight) w = fc_std * rng.gaussian();
    m.fc_bias.assign(m.classes, 0.0);
    m.validate();
    return m;
}

// ---------------------------------------------------------------- layer ops

namespace {

// out[c,t,v] = sum_u in[c,t,u] * A[u,v]
void adjacency_mix(const Tensor3& in, const std::vector<double>& a, Tensor3& out) {
    const int V = in.v;
    out = Tensor3(in.c, in.t, V);
    for (int c = 0; c < in.c; ++c)
        for (int t = 0; t < in.t; ++t) {
            const double* x = in.plane(c, t);
            double* y = out.plane(c, t);
            for (int u = 0; u < V; ++u) {
                const double xu = x[u];
                const double* row = a.data() + static_cast<std::size_t>(u) * V;
                for (int v = 0; v < V; ++v) y[v] += xu * row[v];
            }
        }
}

// out[c,t,u] = sum_v in[c,t,v] * A[u,v]   (adjoint of adjacency_mix)
void adjacency_mix_adjoint(const Tensor3& in, const std::vector<double>& a, Tensor3& out) {
    const int V = in.v;
    out = Tensor3(in.c, in.t, V);
    for (int c = 0; c < in.c; ++c)
        for (int t = 0; t < in.t; ++t) {
            const double* g = in.plane(c, t);
            double* y = out.plane(c, t);
            for (int u = 0; u < V; ++u) {
                const double* row = a.data() + static_cast<std::size_t>(u) * V;
                double acc = 0.0;
                for (int v = 0; v < V; ++v) acc += row[v] * g[v];
                y[u] = acc;
            }
        }
}

// out[o,t,v] = sum_c mix[o,c] * in[c,t,v]
void channel_mix(const Tensor3& in, const std::vector<double>& mix, int out_ch, Tensor3& out) {
    out = Tensor3(out_ch, in.t, in.v);
    for (int o = 0; o < out_ch; ++o)
        for (int c = 0; c < in.c; ++c) {
            const double w = mix[static_cast<std::size_t>(o) * in.c + c];
            if (w == 0.0) continue;
            for (int t = 0; t < in.t; ++t) {
                const double* x = in.plane(c, t);
                double* y = out.plane(o, t);
                for (int v = 0; v < in.v; ++v) y[v] += w * x[v];
            }
        }
}

// d_in[c] = sum_o mix[o,c] * d_out[o]
void channel_mix_adjoint(const Tensor3& d_out, const std::vector<double>& mix, int in_ch,
                         Tensor3& d_in) {
    d_in = Tensor3(in_ch, d_out.t, d_out.v);
    for (int o = 0; o < d_out.c; ++o)
        for (int c = 0; c < in_ch; ++c) {
            const double w = mix[static_cast<std::size_t>(o) * in_ch + c];
            if (w == 0.0) continue;
            for (int t = 0; t < d_out.t; ++t) {
                const double* g = d_out.plane(o, t);
                double* y = d_in.plane(c, t);
                for (int v = 0; v < d_out.v; ++v) y[v] += w * g[v];
            }
        }
}

// d_mix[o,c] += sum_{t,v} d_out[o,t,v] * in[c,t,v]
void channel_mix_weight_grad(const Tensor3& d_out, const Tensor3& in, std::vector<double>& d_mix) {
    for (int o = 0; o < d_out.c; ++o)
        for (int c = 0; c < in.c; ++c) {
            double acc = 0.0;
            for (int t = 0; t < in.t; ++t) {
                const double* g = d_out.plane(o, t);
                const double* x = in.plane(c, t);
                for (int v = 0; v < in.v; ++v) acc += g[v] * x[v];
            }
            d_mix[static_cast<std::size_t>(o) * in.c + c] += acc;
        }
}

// Depthwise temporal conv, zero padded to keep the frame count.
void temporal_conv(const Tensor3& in, const BlockParams& p, Tensor3& out) {
    const int K = p.kernel, off = K / 2, T = in.t, V = in.v;
    out = Tensor3(in.c, T, V);
    for (int c = 0; c < in.c; ++c) {
        const double* tk = p.tkernel.data() + static_cast<std::size_t>(c) * K;
        const double bias = p.tbias[c];
        for (int t = 0; t < T; ++t) {
            double* y = out.plane(c, t);
            for (int v = 0; v < V; ++v) y[v] = bias;
            for (int k = 0; k < K; ++k) {
                const int src = t + k - off;
                if (src < 0 || src >= T) continue;
                const double w = tk[k];
                const double* x = in.plane(c, src);
                for (int v = 0; v < V; ++v) y[v] += w * x[v];
            }
        }
    }
}

void temporal_conv_backward(const Tensor3& d_out, const Tensor3& in, const BlockParams& p,
                            std::vector<double>& d_tkernel, std::vector<double>& d_tbias,
                            Tensor3& d_in) {
    const int K = p.kernel, off = K / 2, T = in.t, V = in.v;
    d_in = Tensor3(in.c, T, V);
    for (int c = 0; c < in.c; ++c) {
        const double* tk = p.tkernel.data() + static_cast<std::size_t>(c) * K;
        double* dk = d_tkernel.data() + static_cast<std::size_t>(c) * K;
        double bias_acc = 0.0;
        for (int t = 0; t < T; ++t) {
            const double* g = d_out.plane(c, t);
            for (int v = 0; v < V; ++v) bias_acc += g[v];
            for (int k = 0; k < K; ++k) {
                const int src = t + k - off;
                if (src < 0 || src >= T) continue;
                const double* x = in.plane(c, src);
                double* dx = d_in.plane(c, src);
                const double w = tk[k];
                double kw_acc = 0.0;
                for (int v = 0; v < V; ++v) {
                    kw_acc += g[v] * x[v];
                    dx[v] += w * g[v];
                }
                dk[k] += kw_acc;
            }
        }
        d_tbias[c] += bias_acc;
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void apply_nonlinearity(const Tensor3& pre, Nonlinearity n, Tensor3& out) {
    out = Tensor3(pre.c, pre.t, pre.v);
    if (n == Nonlinearity::relu) {
        for (std::size_t i = 0; i < pre.size(); ++i)
            out.data[i] = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < pre.size(); ++i) out.data[i] = pre.data[i] * sigmoid(pre.data[i]);
    }
}

void nonlinearity_backward(const Tensor3& d_out, const Tensor3& pre, Nonlinearity n, Tensor3& d_pre) {
    d_pre = Tensor3(pre.c, pre.t, pre.v);
    if (n == Nonlinearity::relu) {
        for (std::size_t i = 0; i < pre.size(); ++i)
            d_pre.data[i] = pre.data[i] > 0.0 ? d_out.data[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < pre.size(); ++i) {
            const double s = sigmoid(pre.data[i]);
            d_pre.data[i] = d_out.data[i] * s * (1.0 + pre.data[i] * (1.0 - s));
        }
    }
}

// graph conv -> temporal conv -> nonlinearity
void block_forward(const BlockParams& p, const std::vector<double>& adjacency, Nonlinearity nonlin,
                   const Tensor3& in, BlockTrace& tr, bool keep_input) {
    if (in.c != p.in_ch) throw ShapeMismatch("block input channel mismatch");
    tr.adjacency_first = p.in_ch <= p.out_ch;  // cheaper side runs the V x V mix
    if (tr.adjacency_first) {
        adjacency_mix(in, adjacency, tr.graph_mid);
        channel_mix(tr.graph_mid, p.mix, p.out_ch, tr.graph_out);
    } else {
        channel_mix(in, p.mix, p.out_ch, tr.graph_mid);
        adjacency_mix(tr.graph_mid, adjacency, tr.graph_out);
    }
    temporal_conv(tr.graph_out, p, tr.pre_activation);
    apply_nonlinearity(tr.pre_activation, nonlin, tr.output);
    if (keep_input) tr.input = in;
}

void block_backward(const BlockParams& p, const std::vector<double>& adjacency, Nonlinearity nonlin,
                    const BlockTrace& tr, const Tensor3& d_out, BlockGrads& g, Tensor3& d_in) {
    Tensor3 d_pre;
    nonlinearity_backward(d_out, tr.pre_activation, nonlin, d_pre);
    Tensor3 d_graph_out;
    temporal_conv_backward(d_pre, tr.graph_out, p, g.tkernel, g.tbias, d_graph_out);
    if (tr.adjacency_first) {
        // forward was channel_mix(adjacency_mix(x))
        channel_mix_weight_grad(d_graph_out, tr.graph_mid, g.mix);
        Tensor3 d_mid;
        channel_mix_adjoint(d_graph_out, p.mix, p.in_ch, d_mid);
        adjacency_mix_adjoint(d_mid, adjacency, d_in);
    } else {
        // forward was adjacency_mix(channel_mix(x))
        Tensor3 d_mid;
        adjacency_mix_adjoint(d_graph_out, adjacency, d_mid);
        channel_mix_weight_grad(d_mid, tr.input, g.mix);
        channel_mix_adjoint(d_mid, p.mix, p.in_ch, d_in);
    }
}

void softmax_into(const std::vector<double>& logits, std::vector<double>& probs) {
    probs.resize(logits.size());
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - m);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
}

}  // namespace

ForwardTrace forward(const ModelInstance& m, const StreamSet& streams, FullTrace* full) {
    const Tensor3* inputs[3] = {&streams.position.data, &streams.velocity.data, &streams.bone.data};
    const int expected_ch[3] = {2, 2, 1};
    const int T = inputs[0]->t;
    for (int s = 0; s < 3; ++s) {
        if (inputs[s]->c != expected_ch[s] || inputs[s]->t != T || inputs[s]->v != m.joints)
            throw ShapeMismatch("stream tensor shape does not match model");
    }

    const bool keep = full != nullptr;
    FullTrace local;
    FullTrace& ft = full ? *full : local;
    for (int s = 0; s < 3; ++s) ft.branch[s].resize(m.branch[s].size());
    ft.trunk.resize(m.trunk.size());

    Tensor3 concat;
    {
        int concat_ch = 0;
        for (int s = 0; s < 3; ++s) concat_ch += m.branch[s].back().out_ch;
        concat = Tensor3(concat_ch, T, m.joints);
        int ch_base = 0;
        for (int s = 0; s < 3; ++s) {
            const Tensor3* cur = inputs[s];
            for (std::size_t i = 0; i < m.branch[s].size(); ++i) {
                block_forward(m.branch[s][i], m.adjacency, m.config.nonlinearity, *cur,
                              ft.branch[s][i], keep);
                cur = &ft.branch[s][i].output;
            }
            std::copy(cur->data.begin(), cur->data.end(),
                      concat.data.begin() + static_cast<std::size_t>(ch_base) * T * m.joints);
            ch_base += cur->c;
        }
    }

    const Tensor3* cur = &concat;
    for (std::size_t i = 0; i < m.trunk.size(); ++i) {
        block_forward(m.trunk[i], m.adjacency, m.config.nonlinearity, *cur, ft.trunk[i], keep);
        cur = &ft.trunk[i].output;
    }

    ForwardTrace out;
    out.feature_maps = *cur;
    const int C = cur->c;
    out.pooled.assign(C, 0.0);
    const double inv = 1.0 / (static_cast<double>(T) * m.joints);
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t) {
            const double* x = cur->plane(c, t);
            for (int v = 0; v < m.joints; ++v) acc += x[v];
        }
        out.pooled[c] = acc * inv;
    }
    out.logits.assign(m.classes, 0.0);
    for (int k = 0; k < m.classes; ++k) {
        double acc = m.fc_bias[k];
        for (int c = 0; c < C; ++c) acc += m.fc_weight[static_cast<std::size_t>(k) * C + c] * out.pooled[c];
        out.logits[k] = acc;
    }
    softmax_into(out.logits, out.probs);
    out.predicted_class = static_cast<int>(
        std::max_element(out.logits.begin(), out.logits.end()) - out.logits.begin());
    return out;
}

Tensor3 grad_feature_maps(const ModelInstance& m, const ForwardTrace& trace, int class_idx) {
    if (class_idx < 0 || class_idx >= m.classes) throw KOutOfRange("class index out of range");
    const int C = trace.feature_maps.c, T = trace.feature_maps.t, V = trace.feature_maps.v;
    // adjoint of logits[class] = fc_b + fc_w . mean_{t,v}(F)
    Tensor3 g(C, T, V);
    const double inv = 1.0 / (static_cast<double>(T) * V);
    for (int c = 0; c < C; ++c) {
        const double val = m.fc_weight[static_cast<std::size_t>(class_idx) * C + c] * inv;
        for (int t = 0; t < T; ++t) {
            double* row = g.plane(c, t);
            for (int v = 0; v < V; ++v) row[v] = val;
        }
    }
    return g;
}

Tensor3 grad_feature_maps(const ModelInstance& m, const StreamSet& streams, int class_idx) {
    return grad_feature_maps(m, forward(m, streams), class_idx);
}

ParamGrads zero_grads(const ModelInstance& m) {
    ParamGrads g;
    auto zero_blocks = [](const std::vector<BlockParams>& blocks) {
        std::vector<BlockGrads> out(blocks.size());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            out[i].mix.assign(blocks[i].mix.size(), 0.0);
            out[i].tkernel.assign(blocks[i].tkernel.size(), 0.0);
            out[i].tbias.assign(blocks[i].tbias.size(), 0.0);
        }
        return out;
    };
    for (int s = 0; s < 3; ++s) g.branch[s] = zero_blocks(m.branch[s]);
    g.trunk = zero_blocks(m.trunk);
    g.fc_weight.assign(m.fc_weight.size(), 0.0);
    g.fc_bias.assign(m.fc_bias.size(), 0.0);
    return g;
}

double accumulate_loss_gradients(const ModelInstance& m, const StreamSet& streams, int label,
                                 ParamGrads& grads, InputGrads* input_grads) {
    if (label < 0 || label >= m.classes) throw ConfigError("label out of range");
    FullTrace ft;
    ForwardTrace head = forward(m, streams, &ft);
    const double loss = -std::log(head.probs[label]);

    // d loss / d logits = probs - onehot(label)
    std::vector<double> d_logits = head.probs;
    d_logits[label] -= 1.0;

    const int C = m.trunk_out_channels();
    const int T = streams.position.data.t;
    const int V = m.joints;
    std::vector<double> d_pooled(C, 0.0);
    for (int k = 0; k < m.classes; ++k) {
        grads.fc_bias[k] += d_logits[k];
        for (int c = 0; c < C; ++c) {
            grads.fc_weight[static_cast<std::size_t>(k) * C + c] += d_logits[k] * head.pooled[c];
            d_pooled[c] += m.fc_weight[static_cast<std::size_t>(k) * C + c] * d_logits[k];
        }
    }
    Tensor3 d_fm(C, T, V);
    const double inv = 1.0 / (static_cast<double>(T) * V);
    for (int c = 0; c < C; ++c) {
        const double val = d_pooled[c] * inv;
        for (int t = 0; t < T; ++t) {
            double* row = d_fm.plane(c, t);
            for (int v = 0; v < V; ++v) row[v] = val;
        }
    }

    Tensor3 d_cur = std::move(d_fm);
    for (int i = static_cast<int>(m.trunk.size()) - 1; i >= 0; --i) {
        Tensor3 d_in;
        block_backward(m.trunk[i], m.adjacency, m.config.nonlinearity, ft.trunk[i], d_cur,
                       grads.trunk[i], d_in);
        d_cur = std::move(d_in);
    }

    // split the concat gradient back into the three branches
    int ch_base = 0;
    for (int s = 0; s < 3; ++s) {
        const int bc = m.branch[s].back().out_ch;
        Tensor3 d_branch(bc, T, V);
        std::copy(d_cur.data.begin() + static_cast<std::size_t>(ch_base) * T * V,
                  d_cur.data.begin() + static_cast<std::size_t>(ch_base + bc) * T * V,
                  d_branch.data.begin());
        ch_base += bc;
        for (int i = static_cast<int>(m.branch[s].size()) - 1; i >= 0; --i) {
            Tensor3 d_in;
            block_backward(m.branch[s][i], m.adjacency, m.config.nonlinearity, ft.branch[s][i],
                           d_branch, grads.branch[s][i], d_in);
            d_branch = std::move(d_in);
        }
        if (input_grads) {
            Tensor3& slot = s == 0   ? input_grads->position
                            : s == 1 ? input_grads->velocity
                                     : input_grads->bone;
            slot = std::move(d_branch);
        }
    }
    return loss;
}

void apply_gradients(ModelInstance& m, const ParamGrads& grads, double step) {
    auto upd = [step](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= step * g[i];
    };
    for (int s = 0; s < 3; ++s)
        for (std::size_t i = 0; i < m.branch[s].size(); ++i) {
            upd(m.branch[s][i].mix, grads.branch[s][i].mix);
            upd(m.branch[s][i].tkernel, grads.branch[s][i].tkernel);
            upd(m.branch[s][i].tbias, grads.branch[s][i].tbias);
        }
    for (std::size_t i = 0; i < m.trunk.size(); ++i) {
        upd(m.trunk[i].mix, grads.trunk[i].mix);
        upd(m.trunk[i].tkernel, grads.trunk[i].tkernel);
        upd(m.trunk[i].tbias, grads.trunk[i].tbias);
    }
    upd(m.fc_weight, grads.fc_weight);
    upd(m.fc_bias, grads.fc_bias);
}

std::vector<ParamView> parameter_views(ModelInstance& m) {
    std::vector<ParamView> out;
    const char* branch_names[3] = {"position", "velocity", "bone"};
    for (int s = 0; s < 3; ++s)
        for (std::size_t i = 0; i < m.branch[s].size(); ++i) {
            const std::string base = std::string(branch_names[s]) + "." + std::to_string(i) + ".";
            out.push_back({base + "mix", &m.branch[s][i].mix});
            out.push_back({base + "tkernel", &m.branch[s][i].tkernel});
            out.push_back({base + "tbias", &m.branch[s][i].tbias});
        }
    for (std::size_t i = 0; i < m.trunk.size(); ++i) {
        const std::string base = "trunk." + std::to_string(i) + ".";
        out.push_back({base + "mix", &m.trunk[i].mix});
        out.push_back({base + "tkernel", &m.trunk[i].tkernel});
        out.push_back({base + "tbias", &m.trunk[i].tbias});
    }
    out.push_back({"fc_weight", &m.fc_weight});
    out.push_back({"fc_bias", &m.fc_bias});
    return out;
}

std::vector<ParamView> gradient_views(ParamGrads& g, const ModelInstance& m) {
    std::vector<ParamView> out;
    const char* branch_names[3] = {"position", "velocity", "bone"};
    for (int s = 0; s < 3; ++s)
        for (std::size_t i = 0; i < m.branch[s].size(); ++i) {
            const std::string base = std::string(branch_names[s]) + "." + std::to_string(i) + ".";
            out.push_back({base + "mix", &g.branch[s][i].mix});
            out.push_back({base + "tkernel", &g.branch[s][i].tkernel});
            out.push_back({base + "tbias", &g.branch[s][i].tbias});
        }
    for (std::size_t i = 0; i < g.trunk.size(); ++i) {
        const std::string base = "trunk." + std::to_string(i) + ".";
        out.push_back({base + "mix", &g.trunk[i].mix});
        out.push_back({base + "tkernel", &g.trunk[i].tkernel});
        out.push_back({base + "tbias", &g.trunk[i].tbias});
    }
    out.push_back({"fc_weight", &g.fc_weight});
    out.push_back({"fc_bias", &g.fc_bias});
    return out;
}

// ------------------------------------------------------------- ensemble

EnsemblePrediction ensemble_predict(const Ensemble& e, const StreamSet& streams) {
    if (e.members.empty()) throw EmptyEnsemble("ensemble has no members");
    EnsemblePrediction out;
    out.traces.reserve(e.members.size());
    std::vector<double> class1;
    class1.reserve(e.members.size());
    for (const auto& m : e.members) {
        out.traces.push_back(forward(m, streams));
        class1.push_back(out.traces.back().probs[1]);
    }
    out.prob = median(std::move(class1));
    return out;
}

std::vector<double> ensemble_representation(const std::vector<ForwardTrace>& traces) {
    if (traces.empty()) throw EmptyEnsemble("no traces to flatten");
    std::vector<double> rep;
    rep.reserve(traces.size() * traces.front().logits.size());
    for (const auto& t : traces) rep.insert(rep.end(), t.logits.begin(), t.logits.end());
    return rep;
}

TrainResult train_toy(const Ensemble& init, const std::vector<std::pair<StreamSet, int>>& data,
                      int epochs, double lr, std::uint64_t rng_seed, int workers) {
    if (init.members.empty()) throw EmptyEnsemble("cannot train an empty ensemble");
    if (data.empty()) throw ConfigError("training data is empty");
    for (const auto& [streams, label] : data)
        if (label != 0 && label != 1) throw ConfigError("labels must be 0 or 1");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");

    const int M = static_cast<int>(init.members.size());
    const int N = static_cast<int>(data.size());

    // seeded shuffle, then portion p = position % M (round-robin)
    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    Prng rng(mix64(rng_seed, 0xf01df01du));
    for (int i = N - 1; i > 0; --i) {
        int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }

    TrainResult result;
    result.ensemble = init;
    result.stats.assign(M, {});

    parallel_for(M, workers, [&](int mi) {
        ModelInstance& model = result.ensemble.members[mi];
        std::vector<int> fold;
        for (int pos = 0; pos < N; ++pos)
            if (M == 1 || pos % M != mi) fold.push_back(order[pos]);
        if (fold.empty()) fold.push_back(order[0]);

        double loss = 0.0;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            ParamGrads grads = zero_grads(model);
            loss = 0.0;
            for (int idx : fold)
                loss += accumulate_loss_gradients(model, data[idx].first, data[idx].second, grads);
            loss /= fold.size();
            if (!std::isfinite(loss))
                throw DivergedLoss("member " + std::to_string(mi) + " diverged at epoch " +
                                   std::to_string(epoch));
            apply_gradients(model, grads, lr / fold.size());
        }

        int correct = 0;
        for (int idx : fold) {
            ForwardTrace t = forward(model, data[idx].first);
            if (t.predicted_class == data[idx].second) ++correct;
        }
        result.stats[mi] = {mi, mi % M, loss,
                            static_cast<double>(correct) / static_cast<double>(fold.size())};
    });
    return result;
}

// ------------------------------------------------------------- serialization

namespace {

json tensor_entry(const std::vector<double>& data, std::vector<int> shape) {
    json j;
    j["shape"] = shape;
    j["data"] = data;
    return j;
}

std::vector<double> read_tensor(const json& j, std::vector<int> expect_shape, const char* what) {
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (shape != expect_shape) throw DataError(std::string("unexpected shape for ") + what);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != n) throw DataError(std::string("shape/data mismatch for ") + what);
    return data;
}

json blocks_to_json(const std::vector<BlockParams>& blocks) {
    json arr = json::array();
    for (const auto& b : blocks) {
        json j;
        j["in_ch"] = b.in_ch;
        j["out_ch"] = b.out_ch;
        j["kernel"] = b.kernel;
        j["mix"] = tensor_entry(b.mix, {b.out_ch, b.in_ch});
        j["tkernel"] = tensor_entry(b.tkernel, {b.out_ch, b.kernel});
        j["tbias"] = tensor_entry(b.tbias, {b.out_ch});
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<BlockParams> blocks_from_json(const json& arr) {
    std::vector<BlockParams> out;
    for (const auto& j : arr) {
        BlockParams b;
        b.in_ch = j.at("in_ch").get<int>();
        b.out_ch = j.at("out_ch").get<int>();
        b.kernel = j.at("kernel").get<int>();
        b.mix = read_tensor(j.at("mix"), {b.out_ch, b.in_ch}, "mix");
        b.tkernel = read_tensor(j.at("tkernel"), {b.out_ch, b.kernel}, "tkernel");
        b.tbias = read_tensor(j.at("tbias"), {b.out_ch}, "tbias");
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace

json model_to_json(const ModelInstance& m) {
    json doc;
    doc["format_version"] = 1;
    doc["kind"] = "skelxai-model";
    doc["config"] = {{"branch_width", m.config.branch_width},
                     {"n_branch_blocks", m.config.n_branch_blocks},
                     {"main_width", m.config.main_width},
                     {"n_main_blocks", m.config.n_main_blocks},
                     {"temporal_kernel", m.config.temporal_kernel},
                     {"nonlinearity", to_string(m.config.nonlinearity)},
                     {"rng_seed", m.config.rng_seed}};
    doc["joints"] = m.joints;
    doc["classes"] = m.classes;
    doc["adjacency"] = tensor_entry(m.adjacency, {m.joints, m.joints});
    doc["branches"] = {{"position", blocks_to_json(m.branch[0])},
                       {"velocity", blocks_to_json(m.branch[1])},
                       {"bone", blocks_to_json(m.branch[2])}};
    doc["trunk"] = blocks_to_json(m.trunk);
    doc["fc_weight"] = tensor_entry(m.fc_weight, {m.classes, m.trunk_out_channels()});
    doc["fc_bias"] = tensor_entry(m.fc_bias, {m.classes});
    return doc;
}

ModelInstance model_from_json(const json& doc) {
    if (doc.at("kind").get<std::string>() != "skelxai-model")
        throw DataError("not a model document");
    if (doc.at("format_version").get<int>() != 1)
        throw DataError("unsupported model format version");
    ModelInstance m;
    const auto& c = doc.at("config");
    m.config.branch_width = c.at("branch_width").get<int>();
    m.config.n_branch_blocks = c.at("n_branch_blocks").get<int>();
    m.config.main_width = c.at("main_width").get<int>();
    m.config.n_main_blocks = c.at("n_main_blocks").get<int>();
    m.config.temporal_kernel = c.at("temporal_kernel").get<int>();
    m.config.nonlinearity = nonlinearity_from_string(c.at("nonlinearity").get<std::string>());
    m.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    m.joints = doc.at("joints").get<int>();
    m.classes = doc.at("classes").get<int>();
    m.adjacency = read_tensor(doc.at("adjacency"), {m.joints, m.joints}, "adjacency");
    m.branch[0] = blocks_from_json(doc.at("branches").at("position"));
    m.branch[1] = blocks_from_json(doc.at("branches").at("velocity"));
    m.branch[2] = blocks_from_json(doc.at("branches").at("bone"));
    m.trunk = blocks_from_json(doc.at("trunk"));
    m.fc_weight = read_tensor(doc.at("fc_weight"), {m.classes, m.trunk_out_channels()}, "fc_weight");
    m.fc_bias = read_tensor(doc.at("fc_bias"), {m.classes}, "fc_bias");
    m.validate();
    return m;
}

void save_model(const ModelInstance& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << model_to_json(m).dump() << "\n";
}

ModelInstance load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    return model_from_json(json::parse(in));
}

}  // namespace skelxai
