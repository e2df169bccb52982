#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "skelxai/model.hpp"

using namespace skelxai;

namespace {

JointRegistry chain_registry(int joints) {
    JointRegistry reg;
    reg.names.push_back("head");
    for (int i = 1; i + 1 < joints; ++i) reg.names.push_back("j" + std::to_string(i));
    reg.names.push_back("left_ankle");
    for (int i = 0; i + 1 < joints; ++i) reg.bones.emplace_back(i, i + 1);
    reg.finalize();
    return reg;
}

StreamSet random_streams(int T, int V, std::uint64_t seed, bool positive = false) {
    StreamSet s;
    s.position = {StreamKind::position, Tensor3(2, T, V)};
    s.velocity = {StreamKind::velocity, Tensor3(2, T, V)};
    s.bone = {StreamKind::bone, Tensor3(1, T, V)};
    Prng rng(seed);
    auto fill = [&](Tensor3& t) {
        for (double& x : t.data) x = positive ? rng.uniform(0.05, 1.0) : rng.uniform(-1.0, 1.0);
    };
    fill(s.position.data);
    fill(s.velocity.data);
    fill(s.bone.data);
    return s;
}

double loss_of(const ModelInstance& m, const StreamSet& s, int label) {
    return -std::log(forward(m, s).probs[label]);
}

void zero_parameters(ModelInstance& m) {
    for (auto& view : parameter_views(m))
        std::fill(view.values->begin(), view.values->end(), 0.0);
}

std::vector<double> identity_mix(int n) {
    std::vector<double> mix(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) mix[static_cast<std::size_t>(i) * n + i] = 1.0;
    return mix;
}

BlockParams identity_block(int ch) {
    BlockParams b;
    b.in_ch = b.out_ch = ch;
    b.kernel = 1;
    b.mix = identity_mix(ch);
    b.tkernel.assign(ch, 1.0);
    b.tbias.assign(ch, 0.0);
    return b;
}

// passthrough model: identity blocks, identity adjacency, GAP + FC
ModelInstance identity_model(int joints) {
    ModelInstance m;
    m.config.nonlinearity = Nonlinearity::relu;
    m.joints = joints;
    m.adjacency.assign(static_cast<std::size_t>(joints) * joints, 0.0);
    for (int v = 0; v < joints; ++v) m.adjacency[static_cast<std::size_t>(v) * joints + v] = 1.0;
    m.branch[0] = {identity_block(2)};
    m.branch[1] = {identity_block(2)};
    m.branch[2] = {identity_block(1)};
    m.trunk = {identity_block(5)};
    m.fc_weight.assign(2 * 5, 0.0);
    m.fc_bias.assign(2, 0.0);
    return m;
}

}  // namespace

TEST_CASE("forward: all-zero parameters give bias logits and uniform probs") {
    const JointRegistry reg = chain_registry(5);
    MiniGcnConfig cfg;
    cfg.branch_width = 2;
    cfg.main_width = 3;
    cfg.temporal_kernel = 3;
    ModelInstance m = make_model(cfg, reg);
    zero_parameters(m);
    const ForwardTrace t = forward(m, random_streams(6, 5, 1));
    CHECK(t.logits[0] == 0.0);
    CHECK(t.logits[1] == 0.0);
    CHECK(t.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.probs[1] == doctest::Approx(0.5).epsilon(1e-12));

    m.fc_bias = {0.3, -0.2};
    const ForwardTrace t2 = forward(m, random_streams(6, 5, 1));
    CHECK(t2.logits[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(t2.logits[1] == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(t2.predicted_class == 0);
}

TEST_CASE("forward: identity model pools the per-channel input mean (direct oracle)") {
    const int V = 4, T = 6;
    ModelInstance m = identity_model(V);
    const StreamSet s = random_streams(T, V, 42, /*positive=*/true);

    const ForwardTrace t = forward(m, s);
    const Tensor3* inputs[3] = {&s.position.data, &s.velocity.data, &s.bone.data};
    int ch = 0;
    for (const Tensor3* in : inputs)
        for (int c = 0; c < in->c; ++c, ++ch) {
            double mean = 0.0;
            for (int f = 0; f < T; ++f)
                for (int v = 0; v < V; ++v) mean += in->at(c, f, v);
            mean /= T * V;
            CHECK(t.pooled[ch] == doctest::Approx(mean).epsilon(1e-12));
        }
}

TEST_CASE("forward: softmax normalization and argmax invariants") {
    const JointRegistry reg = JointRegistry::infant19();
    MiniGcnConfig cfg;
    cfg.rng_seed = 3;
    const ModelInstance m = make_model(cfg, reg);
    for (int i = 0; i < 10; ++i) {
        const ForwardTrace t = forward(m, random_streams(12, 19, 100 + i));
        double sum = 0.0;
        for (double p : t.probs) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-9);
        CHECK(t.predicted_class ==
              static_cast<int>(std::max_element(t.logits.begin(), t.logits.end()) -
                               t.logits.begin()));
    }
}

TEST_CASE("forward: doubling an FC row with positive evidence raises that class prob") {
    const JointRegistry reg = chain_registry(5);
    MiniGcnConfig cfg;
    cfg.branch_width = 2;
    cfg.main_width = 3;
    ModelInstance m = make_model(cfg, reg);
    const StreamSet s = random_streams(8, 5, 9, /*positive=*/true);
    ForwardTrace t = forward(m, s);
    // arrange a positive dot product for class 1
    double dot = 0.0;
    for (int c = 0; c < 3; ++c) dot += m.fc_weight[3 + c] * t.pooled[c];
    if (dot < 0.0)
        for (int c = 0; c < 3; ++c) m.fc_weight[3 + c] = -m.fc_weight[3 + c];
    t = forward(m, s);
    const double before = t.probs[1];
    for (int c = 0; c < 3; ++c) m.fc_weight[3 + c] *= 2.0;
    CHECK(forward(m, s).probs[1] > before);
}

TEST_CASE("grad_feature_maps: GAP+FC head gives w/(T*V) everywhere") {
    const JointRegistry reg = chain_registry(6);
    MiniGcnConfig cfg;
    cfg.branch_width = 2;
    cfg.main_width = 4;
    ModelInstance m = make_model(cfg, reg);
    const int T = 7;
    const StreamSet s = random_streams(T, 6, 21);
    const Tensor3 g = grad_feature_maps(m, s, 1);
    REQUIRE(g.c == 4);
    for (int n = 0; n < g.c; ++n) {
        const double expect = m.fc_weight[static_cast<std::size_t>(g.c) + n] / (T * 6);
        for (int t = 0; t < g.t; ++t)
            for (int v = 0; v < g.v; ++v)
                CHECK(g.at(n, t, v) == doctest::Approx(expect).epsilon(1e-15));
    }

    // zero FC row -> zero gradient for that class
    for (int n = 0; n < 4; ++n) m.fc_weight[n] = 0.0;
    const Tensor3 g0 = grad_feature_maps(m, s, 0);
    for (double x : g0.data) CHECK(x == 0.0);
}

TEST_CASE("gradients: finite-difference agreement across architectures") {
    const JointRegistry reg = chain_registry(5);
    const int T = 6;
    int probes_done = 0;
    for (int variant = 0; variant < 4; ++variant) {
        MiniGcnConfig cfg;
        cfg.branch_width = 2;
        cfg.main_width = 3;
        cfg.n_branch_blocks = variant % 2 == 0 ? 1 : 2;
        cfg.n_main_blocks = variant < 2 ? 1 : 2;
        cfg.temporal_kernel = 3;
        cfg.nonlinearity = variant % 2 == 0 ? Nonlinearity::swish : Nonlinearity::relu;
        cfg.rng_seed = 31 + variant;
        ModelInstance m = make_model(cfg, reg);
        const StreamSet s = random_streams(T, 5, 77 + variant);
        const int label = variant % 2;

        ParamGrads grads = zero_grads(m);
        InputGrads igrads;
        accumulate_loss_gradients(m, s, label, grads, &igrads);

        auto views = parameter_views(m);
        auto gviews = gradient_views(grads, m);
        REQUIRE(views.size() == gviews.size());

        Prng rng(500 + variant);
        const double h = 1e-4;
        for (int probe = 0; probe < 8; ++probe) {
            const int vi = static_cast<int>(rng.next_u64() % views.size());
            if (views[vi].values->empty()) continue;
            const int ei = static_cast<int>(rng.next_u64() % views[vi].values->size());
            const double saved = (*views[vi].values)[ei];
            (*views[vi].values)[ei] = saved + h;
            const double up = loss_of(m, s, label);
            (*views[vi].values)[ei] = saved - h;
            const double down = loss_of(m, s, label);
            (*views[vi].values)[ei] = saved;
            const double fd = (up - down) / (2 * h);
            const double analytic = (*gviews[vi].values)[ei];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            CHECK(std::abs(fd - analytic) / denom < 1e-3);
            ++probes_done;
        }

        // input-side gradients against finite differences on the streams
        StreamSet sm = s;
        Tensor3* tensors[3] = {&sm.position.data, &sm.velocity.data, &sm.bone.data};
        const Tensor3* gtensors[3] = {&igrads.position, &igrads.velocity, &igrads.bone};
        for (int probe = 0; probe < 4; ++probe) {
            const int ti = static_cast<int>(rng.next_u64() % 3);
            const int ei = static_cast<int>(rng.next_u64() % tensors[ti]->size());
            const double saved = tensors[ti]->data[ei];
            tensors[ti]->data[ei] = saved + h;
            const double up = loss_of(m, sm, label);
            tensors[ti]->data[ei] = saved - h;
            const double down = loss_of(m, sm, label);
            tensors[ti]->data[ei] = saved;
            const double fd = (up - down) / (2 * h);
            const double analytic = gtensors[ti]->data[ei];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            CHECK(std::abs(fd - analytic) / denom < 1e-3);
            ++probes_done;
        }
    }
    CHECK(probes_done >= 20);
}

TEST_CASE("forward: permutation equivariance over joint relabeling") {
    const JointRegistry reg = JointRegistry::infant19();
    const int V = reg.count(), T = 10;
    MiniGcnConfig cfg;
    cfg.rng_seed = 8;
    const ModelInstance m = make_model(cfg, reg);
    const StreamSet s = random_streams(T, V, 55);

    std::vector<int> perm(V);
    for (int i = 0; i < V; ++i) perm[i] = i;
    Prng rng(77);
    for (int i = V - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }

    ModelInstance mp = m;
    for (int u = 0; u < V; ++u)
        for (int v = 0; v < V; ++v)
            mp.adjacency[static_cast<std::size_t>(perm[u]) * V + perm[v]] =
                m.adjacency[static_cast<std::size_t>(u) * V + v];
    StreamSet sp = s;
    auto permute = [&](const Tensor3& in, Tensor3& out) {
        out = in;
        for (int c = 0; c < in.c; ++c)
            for (int t = 0; t < in.t; ++t)
                for (int v = 0; v < V; ++v) out.at(c, t, perm[v]) = in.at(c, t, v);
    };
    permute(s.position.data, sp.position.data);
    permute(s.velocity.data, sp.velocity.data);
    permute(s.bone.data, sp.bone.data);

    const ForwardTrace t0 = forward(m, s);
    const ForwardTrace t1 = forward(mp, sp);
    for (int k = 0; k < 2; ++k) CHECK(t1.logits[k] == doctest::Approx(t0.logits[k]).epsilon(1e-9));
    for (int c = 0; c < t0.feature_maps.c; ++c)
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v)
                CHECK(t1.feature_maps.at(c, t, perm[v]) ==
                      doctest::Approx(t0.feature_maps.at(c, t, v)).epsilon(1e-9));
}

TEST_CASE("ensemble_predict: median fusion") {
    const JointRegistry reg = chain_registry(4);
    MiniGcnConfig cfg;
    cfg.branch_width = 1;
    cfg.main_width = 1;
    cfg.temporal_kernel = 1;

    auto member_with_prob = [&](double p) {
        ModelInstance m = make_model(cfg, reg);
        zero_parameters(m);
        m.fc_bias[1] = std::log(p / (1.0 - p));
        return m;
    };

    const StreamSet s = random_streams(5, 4, 6);

    Ensemble single;
    single.members.push_back(member_with_prob(0.73));
    CHECK(ensemble_predict(single, s).prob == doctest::Approx(0.73).epsilon(1e-12));

    Ensemble odd;
    for (double p : {0.2, 0.8, 0.5}) odd.members.push_back(member_with_prob(p));
    CHECK(ensemble_predict(odd, s).prob == doctest::Approx(0.5).epsilon(1e-12));

    Ensemble even;
    for (double p : {0.2, 0.4, 0.6, 0.8}) even.members.push_back(member_with_prob(p));
    const double fused = ensemble_predict(even, s).prob;
    // sort-based oracle for the even-count median
    std::vector<double> probs;
    for (const auto& m : even.members) probs.push_back(forward(m, s).probs[1]);
    std::sort(probs.begin(), probs.end());
    CHECK(fused == doctest::Approx(0.5 * (probs[1] + probs[2])).epsilon(1e-12));
    CHECK(fused == doctest::Approx(0.5).epsilon(1e-9));

    Ensemble empty;
    CHECK_THROWS_AS(ensemble_predict(empty, s), EmptyEnsemble);
}

TEST_CASE("ensemble_representation: member-ordered concatenation") {
    ForwardTrace a, b;
    a.logits = {1.0, 2.0};
    b.logits = {3.0, 4.0};
    CHECK(ensemble_representation({a, b}) == std::vector<double>({1.0, 2.0, 3.0, 4.0}));
    CHECK(ensemble_representation({a}) == std::vector<double>({1.0, 2.0}));
    CHECK(ensemble_representation({a, b}) == ensemble_representation({a, b}));
    CHECK_THROWS_AS(ensemble_representation({}), EmptyEnsemble);
}

TEST_CASE("train_toy: zero lr and zero epochs leave parameters bit-identical") {
    const JointRegistry reg = chain_registry(5);
    MiniGcnConfig cfg;
    cfg.branch_width = 2;
    cfg.main_width = 2;
    Ensemble init;
    init.members.push_back(make_model(cfg, reg));

    std::vector<std::pair<StreamSet, int>> data;
    for (int i = 0; i < 4; ++i) data.emplace_back(random_streams(6, 5, 900 + i), i % 2);

    const TrainResult by_lr = train_toy(init, data, 3, 0.0, 1);
    const TrainResult by_epochs = train_toy(init, data, 0, 0.5, 1);
    for (const TrainResult* r : {&by_lr, &by_epochs}) {
        ModelInstance got = r->ensemble.members[0];
        ModelInstance want = init.members[0];
        auto gv = parameter_views(got);
        auto wv = parameter_views(want);
        for (std::size_t i = 0; i < gv.size(); ++i) CHECK(*gv[i].values == *wv[i].values);
    }
}

TEST_CASE("train_toy: deterministic and accurate on a separable toy problem") {
    const JointRegistry reg = chain_registry(5);
    MiniGcnConfig cfg;
    cfg.branch_width = 2;
    cfg.main_width = 3;
    cfg.rng_seed = 17;
    Ensemble init;
    init.members.push_back(make_model(cfg, reg));

    // class 1 = larger velocity magnitudes
    std::vector<std::pair<StreamSet, int>> data;
    for (int i = 0; i < 12; ++i) {
        StreamSet s = random_streams(6, 5, 300 + i);
        const int label = i % 2;
        for (double& v : s.velocity.data.data) v *= label == 1 ? 2.0 : 0.2;
        data.emplace_back(std::move(s), label);
    }

    const TrainResult a = train_toy(init, data, 150, 0.4, 5);
    const TrainResult b = train_toy(init, data, 150, 0.4, 5);
    ModelInstance ma = a.ensemble.members[0];
    ModelInstance mb = b.ensemble.members[0];
    auto av = parameter_views(ma);
    auto bv = parameter_views(mb);
    for (std::size_t i = 0; i < av.size(); ++i) CHECK(*av[i].values == *bv[i].values);

    CHECK(a.stats[0].train_accuracy >= 0.9);

    std::vector<std::pair<StreamSet, int>> bad = data;
    bad[0].second = 3;
    CHECK_THROWS_AS(train_toy(init, bad, 1, 0.1, 1), ConfigError);
}

TEST_CASE("train_toy: runaway step size raises DivergedLoss") {
    const JointRegistry reg = chain_registry(5);
    MiniGcnConfig cfg;
    cfg.branch_width = 2;
    cfg.main_width = 2;
    Ensemble init;
    init.members.push_back(make_model(cfg, reg));
    std::vector<std::pair<StreamSet, int>> data;
    for (int i = 0; i < 4; ++i) data.emplace_back(random_streams(6, 5, 40 + i), i % 2);
    CHECK_THROWS_AS(train_toy(init, data, 5, 1e300, 1), DivergedLoss);
}

TEST_CASE("serialization: bit-exact json round trip") {
    namespace fs = std::filesystem;
    const JointRegistry reg = JointRegistry::infant19();
    MiniGcnConfig cfg;
    cfg.branch_width = 3;
    cfg.main_width = 5;
    cfg.n_main_blocks = 2;
    cfg.nonlinearity = Nonlinearity::swish;
    cfg.rng_seed = 99;
    ModelInstance m = make_model(cfg, reg);

    ModelInstance back = model_from_json(model_to_json(m));
    auto mv = parameter_views(m);
    auto bv = parameter_views(back);
    REQUIRE(mv.size() == bv.size());
    for (std::size_t i = 0; i < mv.size(); ++i) CHECK(*mv[i].values == *bv[i].values);
    CHECK(back.adjacency == m.adjacency);
    CHECK(back.config.temporal_kernel == m.config.temporal_kernel);
    CHECK(to_string(back.config.nonlinearity) == "swish");

    const fs::path dir = fs::temp_directory_path() / "skelxai_model_test";
    fs::create_directories(dir);
    const std::string path = (dir / "m.json").string();
    save_model(m, path);
    ModelInstance loaded = load_model(path);
    auto lv = parameter_views(loaded);
    for (std::size_t i = 0; i < mv.size(); ++i) CHECK(*mv[i].values == *lv[i].values);
    fs::remove_all(dir);

    // identical forward traces after the round trip
    const StreamSet s = random_streams(9, 19, 1234);
    const ForwardTrace t0 = forward(m, s);
    const ForwardTrace t1 = forward(loaded, s);
    CHECK(t0.logits == t1.logits);
    CHECK(t0.probs == t1.probs);
}
