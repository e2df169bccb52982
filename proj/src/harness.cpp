#include "skelxai/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace skelxai {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

constexpr std::uint64_t kWindowSeedTag = 0x817d0;
constexpr std::uint64_t kTrainSeedTag = 0x7ea1;
constexpr std::uint64_t kPerturbSeedTag = 0x9e27;
constexpr std::uint64_t kAttributionSeedTag = 0xa77b;

std::string sanitize(const std::string& id) {
    std::string out = id;
    for (char& c : out)
        if (c == ':' || c == '/' || c == '\\') c = '_';
    return out;
}

std::string provenance_line(const RunConfig& cfg) {
    return "skelxai format_version=" + std::to_string(kFormatVersion) +
           " config_hash=" + config_hash(cfg) + " auc=normalized_trapezoid";
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << body;
}

// minimal CSV reader: '#' lines are comments, first remaining row is a header
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw DataError("missing csv column: " + name);
    }
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open csv file: " + path);
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (table.header.empty())
            table.header = std::move(fields);
        else
            table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) throw DataError("csv file has no header: " + path);
    return table;
}

}  // namespace

std::string to_string(RunScope s) {
    switch (s) {
        case RunScope::ensemble: return "ensemble";
        case RunScope::per_model: return "per_model";
        case RunScope::both: return "both";
    }
    return "?";
}

RunScope scope_from_string(const std::string& s) {
    if (s == "ensemble") return RunScope::ensemble;
    if (s == "per_model") return RunScope::per_model;
    if (s == "both") return RunScope::both;
    throw ConfigError("unknown scope: " + s);
}

std::vector<MiniGcnConfig> default_roster(std::uint64_t rng_seed) {
    const int branch_widths[10] = {3, 4, 3, 4, 3, 4, 3, 4, 3, 4};
    const int main_widths[10] = {6, 8, 8, 6, 8, 6, 6, 8, 8, 6};
    const int kernels[10] = {5, 3, 5, 7, 3, 5, 7, 3, 5, 3};
    std::vector<MiniGcnConfig> roster(10);
    for (int i = 0; i < 10; ++i) {
        roster[i].branch_width = branch_widths[i];
        roster[i].main_width = main_widths[i];
        roster[i].n_branch_blocks = i == 7 ? 2 : 1;
        roster[i].n_main_blocks = i == 8 ? 2 : 1;
        roster[i].temporal_kernel = kernels[i];
        roster[i].nonlinearity = i % 2 == 0 ? Nonlinearity::relu : Nonlinearity::swish;
        roster[i].rng_seed = mix64(rng_seed, 1000 + static_cast<std::uint64_t>(i));
    }
    return roster;
}

json run_config_to_json(const RunConfig& cfg) {
    json doc;
    doc["data_dir"] = cfg.data_dir;
    doc["model_dir"] = cfg.model_dir;
    doc["out_dir"] = cfg.out_dir;
    doc["registry_file"] = cfg.registry_file;
    doc["seed"] = cfg.rng_seed;
    doc["workers"] = cfg.workers;
    doc["scope"] = to_string(cfg.scope);
    doc["center_scale"] = cfg.center_scale;
    json methods = json::array();
    for (Method m : cfg.methods) methods.push_back(to_string(m));
    doc["methods"] = methods;
    doc["synth"] = {{"n_sequences", cfg.synth.n_sequences},
                    {"fps", cfg.synth.fps},
                    {"duration_s", cfg.synth.duration_s},
                    {"signal_joints", cfg.synth.signal_joints},
                    {"noise_sigma", cfg.synth.noise_sigma},
                    {"rng_seed", cfg.synth.rng_seed},
                    {"class_balance", cfg.synth.class_balance},
                    {"base_amplitude_px", cfg.synth.base_amplitude_px},
                    {"signal_boost", cfg.synth.signal_boost},
                    {"signal_damp", cfg.synth.signal_damp}};
    doc["windows"] = {{"window_seconds", cfg.windows.window_seconds},
                      {"guard_frames", cfg.windows.guard_frames},
                      {"max_per_sequence", cfg.windows.max_per_sequence}};
    json roster = json::array();
    for (const auto& m : cfg.roster)
        roster.push_back({{"branch_width", m.branch_width},
                          {"n_branch_blocks", m.n_branch_blocks},
                          {"main_width", m.main_width},
                          {"n_main_blocks", m.n_main_blocks},
                          {"temporal_kernel", m.temporal_kernel},
                          {"nonlinearity", to_string(m.nonlinearity)},
                          {"rng_seed", m.rng_seed}});
    doc["roster"] = roster;
    doc["perturbation"] = {{"r_fraction", cfg.perturb_r_fraction}, {"n", cfg.perturb_n}};
    doc["metrics"] = {{"p_norm", cfg.metrics.p_norm},
                      {"epsilon_min", cfg.metrics.epsilon_min},
                      {"denom_guard", cfg.metrics.denom_guard},
                      {"k_min", cfg.metrics.k_min},
                      {"k_max", cfg.metrics.k_max}};
    doc["train"] = {{"epochs", cfg.train.epochs}, {"lr", cfg.train.lr}};
    doc["report"] = {{"color_threshold", cfg.report.color_threshold},
                     {"skeleton_windows", cfg.report.skeleton_windows}};
    return doc;
}

RunConfig run_config_from_json(const json& doc) {
    RunConfig cfg;
    cfg.data_dir = doc.value("data_dir", cfg.data_dir);
    cfg.model_dir = doc.value("model_dir", cfg.model_dir);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    cfg.registry_file = doc.value("registry_file", cfg.registry_file);
    cfg.rng_seed = doc.value("seed", cfg.rng_seed);
    cfg.workers = doc.value("workers", cfg.workers);
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    if (doc.contains("scope")) cfg.scope = scope_from_string(doc.at("scope").get<std::string>());
    cfg.center_scale = doc.value("center_scale", cfg.center_scale);
    if (doc.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : doc.at("methods"))
            cfg.methods.push_back(method_from_string(m.get<std::string>()));
        if (cfg.methods.empty()) throw ConfigError("methods list must not be empty");
    }
    if (doc.contains("synth")) {
        const auto& s = doc.at("synth");
        cfg.synth.n_sequences = s.value("n_sequences", cfg.synth.n_sequences);
        cfg.synth.fps = s.value("fps", cfg.synth.fps);
        cfg.synth.duration_s = s.value("duration_s", cfg.synth.duration_s);
        if (s.contains("signal_joints"))
            cfg.synth.signal_joints = s.at("signal_joints").get<std::vector<int>>();
        cfg.synth.noise_sigma = s.value("noise_sigma", cfg.synth.noise_sigma);
        cfg.synth.rng_seed = s.value("rng_seed", mix64(cfg.rng_seed, 0x5e9));
        cfg.synth.class_balance = s.value("class_balance", cfg.synth.class_balance);
        cfg.synth.base_amplitude_px = s.value("base_amplitude_px", cfg.synth.base_amplitude_px);
        cfg.synth.signal_boost = s.value("signal_boost", cfg.synth.signal_boost);
        cfg.synth.signal_damp = s.value("signal_damp", cfg.synth.signal_damp);
    } else {
        cfg.synth.rng_seed = mix64(cfg.rng_seed, 0x5e9);
    }
    if (doc.contains("windows")) {
        const auto& w = doc.at("windows");
        cfg.windows.window_seconds = w.value("window_seconds", cfg.windows.window_seconds);
        cfg.windows.guard_frames = w.value("guard_frames", cfg.windows.guard_frames);
        cfg.windows.max_per_sequence = w.value("max_per_sequence", cfg.windows.max_per_sequence);
    }
    if (doc.contains("roster")) {
        for (const auto& r : doc.at("roster")) {
            MiniGcnConfig m;
            m.branch_width = r.value("branch_width", m.branch_width);
            m.n_branch_blocks = r.value("n_branch_blocks", m.n_branch_blocks);
            m.main_width = r.value("main_width", m.main_width);
            m.n_main_blocks = r.value("n_main_blocks", m.n_main_blocks);
            m.temporal_kernel = r.value("temporal_kernel", m.temporal_kernel);
            if (r.contains("nonlinearity"))
                m.nonlinearity = nonlinearity_from_string(r.at("nonlinearity").get<std::string>());
            m.rng_seed = r.value("rng_seed", mix64(cfg.rng_seed, 1000 + cfg.roster.size()));
            m.validate();
            cfg.roster.push_back(m);
        }
    }
    if (doc.contains("perturbation")) {
        const auto& p = doc.at("perturbation");
        cfg.perturb_r_fraction = p.value("r_fraction", cfg.perturb_r_fraction);
        cfg.perturb_n = p.value("n", cfg.perturb_n);
    }
    if (doc.contains("metrics")) {
        const auto& m = doc.at("metrics");
        cfg.metrics.p_norm = m.value("p_norm", cfg.metrics.p_norm);
        cfg.metrics.epsilon_min = m.value("epsilon_min", cfg.metrics.epsilon_min);
        cfg.metrics.denom_guard = m.value("denom_guard", cfg.metrics.denom_guard);
        cfg.metrics.k_min = m.value("k_min", cfg.metrics.k_min);
        cfg.metrics.k_max = m.value("k_max", cfg.metrics.k_max);
    }
    if (doc.contains("train")) {
        cfg.train.epochs = doc.at("train").value("epochs", cfg.train.epochs);
        cfg.train.lr = doc.at("train").value("lr", cfg.train.lr);
    }
    if (doc.contains("report")) {
        cfg.report.color_threshold =
            doc.at("report").value("color_threshold", cfg.report.color_threshold);
        cfg.report.skeleton_windows =
            doc.at("report").value("skeleton_windows", cfg.report.skeleton_windows);
    }
    cfg.metrics.validate();
    if (cfg.perturb_r_fraction <= 0.0 || cfg.perturb_n < 1)
        throw ConfigError("bad perturbation settings");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return run_config_from_json(doc);
}

std::string config_hash(const RunConfig& cfg) {
    const std::uint64_t h = fnv1a64(run_config_to_json(cfg).dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void resolve_paths(RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("out_dir must not be empty");
    if (cfg.data_dir.empty()) cfg.data_dir = (fs::path(cfg.out_dir) / "dataset").string();
    if (cfg.model_dir.empty()) cfg.model_dir = (fs::path(cfg.out_dir) / "models").string();
}

JointRegistry load_registry(const RunConfig& cfg) {
    if (cfg.registry_file.empty()) return JointRegistry::infant19();
    return registry_from_json_file(cfg.registry_file);
}

// ------------------------------------------------------------- generate

void cmd_generate(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    resolve_paths(cfg);
    const JointRegistry reg = load_registry(cfg);
    fs::create_directories(cfg.data_dir);
    const auto seqs = generate(cfg.synth, reg);

    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["kind"] = "skelxai-dataset";
    manifest["config_hash"] = config_hash(cfg);
    manifest["seed"] = cfg.synth.rng_seed;
    manifest["n_sequences"] = static_cast<int>(seqs.size());
    manifest["joints"] = reg.names;
    json bones = json::array();
    for (auto [p, c] : reg.bones) bones.push_back({p, c});
    manifest["bones"] = bones;
    int label1 = 0;
    json files = json::array();
    for (const auto& seq : seqs) {
        const std::string file = seq.id + ".json";
        sequence_to_json_file(seq, reg, (fs::path(cfg.data_dir) / file).string());
        files.push_back({{"file", file},
                         {"id", seq.id},
                         {"label", seq.label},
                         {"frames", seq.frames},
                         {"fps", seq.fps}});
        label1 += seq.label;
    }
    manifest["files"] = files;
    manifest["label_counts"] = {{"0", static_cast<int>(seqs.size()) - label1}, {"1", label1}};
    write_text((fs::path(cfg.data_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

// ------------------------------------------------------------- shared IO

std::vector<SkeletonSequence> load_dataset(const RunConfig& cfg, const JointRegistry& reg) {
    const fs::path manifest_path = fs::path(cfg.data_dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw MissingInput("dataset manifest not found: " + manifest_path.string());
    json manifest = json::parse(in);
    std::vector<SkeletonSequence> seqs;
    for (const auto& f : manifest.at("files")) {
        auto seq = sequence_from_json_file(
            (fs::path(cfg.data_dir) / f.at("file").get<std::string>()).string());
        seq.validate(reg);
        seqs.push_back(std::move(seq));
    }
    return seqs;
}

Ensemble load_ensemble(const RunConfig& cfg) {
    const fs::path manifest_path = fs::path(cfg.model_dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw MissingInput("model manifest not found: " + manifest_path.string());
    json manifest = json::parse(in);
    Ensemble e;
    for (const auto& m : manifest.at("members"))
        e.members.push_back(
            load_model((fs::path(cfg.model_dir) / m.at("file").get<std::string>()).string()));
    if (e.members.empty()) throw DataError("model manifest lists no members");
    return e;
}

WindowSet collect_windows(const std::vector<SkeletonSequence>& seqs, const WindowPolicy& policy,
                          std::uint64_t rng_seed) {
    WindowSet out;
    out.sequences_in = static_cast<int>(seqs.size());
    for (const auto& seq : seqs) {
        try {
            auto ws = extract_windows(seq, policy, rng_seed);
            for (auto& w : ws) out.windows.push_back(std::move(w));
        } catch (const SequenceTooShort&) {
            out.too_short.push_back(seq.id);
        }
    }
    std::sort(out.windows.begin(), out.windows.end(),
              [](const Window& a, const Window& b) { return a.id() < b.id(); });
    return out;
}

// ------------------------------------------------------------- train

void cmd_train(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    resolve_paths(cfg);
    const JointRegistry reg = load_registry(cfg);
    const auto seqs = load_dataset(cfg, reg);
    const WindowSet ws = collect_windows(seqs, cfg.windows, mix64(cfg.rng_seed, kWindowSeedTag));
    if (ws.windows.empty()) throw DataError("no training windows available");

    std::vector<std::pair<StreamSet, int>> data;
    data.reserve(ws.windows.size());
    for (const auto& w : ws.windows)
        data.emplace_back(derive_streams(w, reg, cfg.center_scale), w.label);

    const auto roster = cfg.roster.empty() ? default_roster(cfg.rng_seed) : cfg.roster;
    Ensemble init;
    for (const auto& mc : roster) init.members.push_back(make_model(mc, reg));

    TrainResult result = train_toy(init, data, cfg.train.epochs, cfg.train.lr,
                                   mix64(cfg.rng_seed, kTrainSeedTag), cfg.workers);

    fs::create_directories(cfg.model_dir);
    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["kind"] = "skelxai-ensemble";
    manifest["config_hash"] = config_hash(cfg);
    manifest["n_windows"] = static_cast<int>(ws.windows.size());
    json members = json::array();
    json representatives = json::array();
    for (std::size_t i = 0; i < result.ensemble.members.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%02zu.json", i);
        save_model(result.ensemble.members[i], (fs::path(cfg.model_dir) / name).string());
        const auto& st = result.stats[i];
        members.push_back({{"file", name},
                           {"member", st.member},
                           {"held_out_portion", st.held_out_portion},
                           {"final_loss", st.final_loss},
                           {"train_accuracy", st.train_accuracy}});
        // one architecture variant per member, so each member represents itself
        representatives.push_back(static_cast<int>(i));
    }
    manifest["members"] = members;
    manifest["variant_representatives"] = representatives;
    write_text((fs::path(cfg.model_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

// ------------------------------------------------------------- evaluate

namespace {

struct ScopeSpec {
    std::string label;
    EvalScope scope;
};

std::vector<ScopeSpec> scope_list(const RunConfig& cfg, const Ensemble& ensemble) {
    std::vector<ScopeSpec> scopes;
    if (cfg.scope == RunScope::ensemble || cfg.scope == RunScope::both)
        scopes.push_back({"ensemble", {&ensemble, -1}});
    if (cfg.scope == RunScope::per_model || cfg.scope == RunScope::both)
        for (int i = 0; i < static_cast<int>(ensemble.members.size()); ++i)
            scopes.push_back({"model_" + std::to_string(i), {&ensemble, i}});
    return scopes;
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    resolve_paths(cfg);
    const JointRegistry reg = load_registry(cfg);
    const auto seqs = load_dataset(cfg, reg);
    const WindowSet ws = collect_windows(seqs, cfg.windows, mix64(cfg.rng_seed, kWindowSeedTag));
    if (ws.windows.empty()) throw DataError("no windows to evaluate");
    const Ensemble ensemble = load_ensemble(cfg);
    const auto scopes = scope_list(cfg, ensemble);

    MetricConfig mcfg = cfg.metrics;
    mcfg.k_max = std::min(mcfg.k_max, reg.count());
    PerturbationSpec spec;
    spec.r_fraction = cfg.perturb_r_fraction;
    spec.n = cfg.perturb_n;
    spec.rng_seed = mix64(cfg.rng_seed, kPerturbSeedTag);
    const std::uint64_t attribution_seed = mix64(cfg.rng_seed, kAttributionSeedTag);

    struct Item {
        int scope_idx, window_idx, method_idx;
    };
    std::vector<Item> items;
    for (int s = 0; s < static_cast<int>(scopes.size()); ++s)
        for (int w = 0; w < static_cast<int>(ws.windows.size()); ++w)
            for (int m = 0; m < static_cast<int>(cfg.methods.size()); ++m)
                items.push_back({s, w, m});

    std::vector<WindowEvaluation> results(items.size());
    parallel_for(static_cast<int>(items.size()), cfg.workers, [&](int i) {
        const Item& it = items[i];
        results[i] = evaluate_window(ws.windows[it.window_idx], reg, scopes[it.scope_idx].scope,
                                     cfg.methods[it.method_idx], mcfg, spec, attribution_seed,
                                     cfg.center_scale);
    });

    fs::create_directories(cfg.out_dir);
    const std::string prov = "# " + provenance_line(cfg) + "\n";
    json summary;
    summary["format_version"] = kFormatVersion;
    summary["kind"] = "skelxai-run-summary";
    summary["config_hash"] = config_hash(cfg);
    summary["auc_convention"] = "normalized_trapezoid";
    summary["sequences_in"] = ws.sequences_in;
    summary["sequences_too_short"] = ws.too_short;
    json scope_summaries = json::object();

    for (int s = 0; s < static_cast<int>(scopes.size()); ++s) {
        const std::string& label = scopes[s].label;
        const fs::path attr_dir = fs::path(cfg.out_dir) / "attributions" / label;
        fs::create_directories(attr_dir);

        std::ostringstream metrics_csv, auc_csv, agg_csv, skips_csv;
        metrics_csv << prov << "metric,method,window_id,k,value,n_valid\n";
        auc_csv << prov << "metric,method,window_id,auc\n";
        agg_csv << prov << "metric,method,auc_mean,auc_std,n_windows\n";
        skips_csv << prov << "window_id,method,reason\n";

        std::set<std::string> evaluated, misclassified;
        // canonical accumulation order: metric, then method, then window, then k
        std::map<std::string, std::map<int, std::vector<std::pair<int, double>>>> sweep_by_mm;

        for (MetricKind metric : kAllMetrics) {
            for (int m = 0; m < static_cast<int>(cfg.methods.size()); ++m) {
                for (int w = 0; w < static_cast<int>(ws.windows.size()); ++w) {
                    const int idx =
                        (s * static_cast<int>(ws.windows.size()) + w) *
                            static_cast<int>(cfg.methods.size()) +
                        m;
                    const WindowEvaluation& ev = results[idx];
                    const std::string wid = ws.windows[w].id();
                    if (!ev.prediction_correct) {
                        misclassified.insert(wid);
                        continue;
                    }
                    evaluated.insert(wid);
                    std::vector<std::pair<int, double>> sweep;
                    for (const auto& rec : ev.records) {
                        if (rec.metric != metric) continue;
                        metrics_csv << to_string(rec.metric) << ',' << to_string(rec.method) << ','
                                    << rec.window_id << ',' << rec.k << ','
                                    << format_double(rec.value) << ',' << rec.n_valid << "\n";
                        sweep.emplace_back(rec.k, rec.value);
                    }
                    if (!sweep.empty()) {
                        const double auc = auc_over_k(sweep, mcfg.k_min, mcfg.k_max);
                        auc_csv << to_string(metric) << ',' << to_string(cfg.methods[m]) << ','
                                << wid << ',' << format_double(auc) << "\n";
                        sweep_by_mm[to_string(metric)][m].emplace_back(w, auc);
                    }
                }
            }
        }

        // aggregates in canonical order
        for (MetricKind metric : kAllMetrics) {
            auto mit = sweep_by_mm.find(to_string(metric));
            if (mit == sweep_by_mm.end()) continue;
            for (int m = 0; m < static_cast<int>(cfg.methods.size()); ++m) {
                auto vit = mit->second.find(m);
                if (vit == mit->second.end()) continue;
                std::vector<double> aucs;
                aucs.reserve(vit->second.size());
                for (const auto& [w, a] : vit->second) aucs.push_back(a);
                const AggregateRecord rec = aggregate(metric, cfg.methods[m], aucs);
                agg_csv << to_string(rec.metric) << ',' << to_string(rec.method) << ','
                        << format_double(rec.auc_mean) << ',' << format_double(rec.auc_std) << ','
                        << rec.n_windows << "\n";
            }
        }

        // skip log + attribution exports, canonical window-then-method order
        for (int w = 0; w < static_cast<int>(ws.windows.size()); ++w) {
            const std::string wid = ws.windows[w].id();
            for (int m = 0; m < static_cast<int>(cfg.methods.size()); ++m) {
                const int idx = (s * static_cast<int>(ws.windows.size()) + w) *
                                    static_cast<int>(cfg.methods.size()) +
                                m;
                const WindowEvaluation& ev = results[idx];
                if (!ev.prediction_correct) {
                    if (m == 0) skips_csv << wid << ",-,misclassified\n";
                    continue;
                }
                for (const auto& reason : ev.skipped)
                    skips_csv << wid << ',' << to_string(cfg.methods[m]) << ',' << reason << "\n";
                json attr;
                attr["format_version"] = kFormatVersion;
                attr["config_hash"] = config_hash(cfg);
                attr["window_id"] = wid;
                attr["method"] = to_string(cfg.methods[m]);
                attr["class_idx"] = ev.explanation.class_idx;
                attr["scores"] = ev.explanation.scores;
                write_text((attr_dir /
                            (sanitize(wid) + "__" + to_string(cfg.methods[m]) + ".json"))
                               .string(),
                           attr.dump() + "\n");
            }
        }

        const std::string base = (fs::path(cfg.out_dir) / ("metrics_" + label)).string();
        write_text(base + ".csv", metrics_csv.str());
        write_text((fs::path(cfg.out_dir) / ("auc_" + label + ".csv")).string(), auc_csv.str());
        write_text((fs::path(cfg.out_dir) / ("aggregates_" + label + ".csv")).string(),
                   agg_csv.str());
        write_text((fs::path(cfg.out_dir) / ("skips_" + label + ".csv")).string(),
                   skips_csv.str());

        scope_summaries[label] = {{"windows_in", static_cast<int>(ws.windows.size())},
                                  {"windows_evaluated", static_cast<int>(evaluated.size())},
                                  {"windows_skipped", static_cast<int>(misclassified.size())}};
    }
    summary["scopes"] = scope_summaries;
    write_text((fs::path(cfg.out_dir) / "run_summary.json").string(), summary.dump(2) + "\n");
}

// ------------------------------------------------------------- ttest

namespace {

struct AucTable {
    // metric -> method -> per-window AUCs (window-id order)
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
};

AucTable read_auc_csv(const std::string& path) {
    const CsvTable csv = read_csv(path);
    const int c_metric = csv.column("metric"), c_method = csv.column("method"),
              c_auc = csv.column("auc");
    AucTable out;
    for (const auto& row : csv.rows)
        out.values[row[c_metric]][row[c_method]].push_back(std::stod(row[c_auc]));
    return out;
}

std::vector<std::string> scope_labels_present(const RunConfig& cfg) {
    std::vector<std::string> labels;
    if (cfg.scope == RunScope::ensemble || cfg.scope == RunScope::both)
        labels.push_back("ensemble");
    if (cfg.scope == RunScope::per_model || cfg.scope == RunScope::both) {
        for (int i = 0;; ++i) {
            const fs::path p = fs::path(cfg.out_dir) / ("auc_model_" + std::to_string(i) + ".csv");
            if (!fs::exists(p)) break;
            labels.push_back("model_" + std::to_string(i));
        }
    }
    return labels;
}

}  // namespace

void cmd_ttest(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    resolve_paths(cfg);
    std::ostringstream csv;
    csv << "# " << provenance_line(cfg) << " variant=welch\n";
    csv << "comparison,metric,scope,t_statistic,p_value,dof\n";
    bool any = false;
    for (const std::string& label : scope_labels_present(cfg)) {
        const AucTable table =
            read_auc_csv((fs::path(cfg.out_dir) / ("auc_" + label + ".csv")).string());
        std::vector<std::string> methods;
        for (Method m : cfg.methods) methods.push_back(to_string(m));
        if (methods.size() < 2)
            throw InsufficientSamples("t-tests need at least two methods");
        for (std::size_t i = 0; i < methods.size(); ++i)
            for (std::size_t j = i + 1; j < methods.size(); ++j)
                for (MetricKind metric : kAllMetrics) {
                    auto mit = table.values.find(to_string(metric));
                    if (mit == table.values.end()) continue;
                    auto a = mit->second.find(methods[i]);
                    auto b = mit->second.find(methods[j]);
                    if (a == mit->second.end() || b == mit->second.end()) continue;
                    const TTestResult res = unpaired_ttest(a->second, b->second);
                    csv << methods[i] << "_vs_" << methods[j] << ',' << to_string(metric) << ','
                        << label << ',' << format_double(res.t_statistic) << ','
                        << format_double(res.p_value) << ',' << format_double(res.dof) << "\n";
                    any = true;
                }
    }
    if (!any) throw InsufficientSamples("no AUC data found for t-tests");
    fs::create_directories(cfg.out_dir);
    write_text((fs::path(cfg.out_dir) / "ttests.csv").string(), csv.str());
}

// ------------------------------------------------------------- report

void cmd_report(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    resolve_paths(cfg);
    const JointRegistry reg = load_registry(cfg);
    const fs::path report_dir = fs::path(cfg.out_dir) / "report";
    fs::create_directories(report_dir);
    const std::string prov = provenance_line(cfg);
    const ColorRule rule{cfg.report.color_threshold};

    std::ostringstream md;
    md << "# Evaluation report\n\n<!-- " << prov << " -->\n\n";

    for (const std::string& label : scope_labels_present(cfg)) {
        const fs::path auc_path = fs::path(cfg.out_dir) / ("auc_" + label + ".csv");
        const fs::path agg_path = fs::path(cfg.out_dir) / ("aggregates_" + label + ".csv");
        if (!fs::exists(agg_path))
            throw MissingInput("aggregate csv not found: " + agg_path.string());
        const AucTable aucs = read_auc_csv(auc_path.string());
        const CsvTable agg = read_csv(agg_path.string());
        const int c_metric = agg.column("metric"), c_method = agg.column("method"),
                  c_mean = agg.column("auc_mean"), c_std = agg.column("auc_std"),
                  c_n = agg.column("n_windows");

        std::map<std::string, std::vector<MethodStat>> stats_by_metric;
        std::map<std::string, std::map<std::string, std::pair<double, double>>> table_cells;
        std::map<std::string, int> n_by_metric;
        for (const auto& row : agg.rows) {
            MethodStat st{method_from_string(row[c_method]), std::stod(row[c_mean]),
                          std::stod(row[c_std])};
            stats_by_metric[row[c_metric]].push_back(st);
            table_cells[row[c_metric]][row[c_method]] = {st.mean, st.stdev};
            n_by_metric[row[c_metric]] = std::stoi(row[c_n]);
        }

        std::vector<PanelData> panels;
        for (MetricKind metric : kAllMetrics) {
            auto it = stats_by_metric.find(to_string(metric));
            if (it == stats_by_metric.end()) continue;
            PanelData p;
            p.metric = metric;
            p.direction = metric == MetricKind::pgi   ? "\xE2\x86\x91"
                          : metric == MetricKind::pgu ? "\xE2\x86\x93"
                                                      : "\xE2\x86\x92 0";
            p.log_scale = metric == MetricKind::ros || metric == MetricKind::rrs;
            p.stats = it->second;
            auto mit = aucs.values.find(to_string(metric));
            if (mit != aucs.values.end()) {
                auto a = mit->second.find("cam");
                auto b = mit->second.find("gradcam");
                if (a != mit->second.end() && b != mit->second.end() && a->second.size() >= 2 &&
                    b->second.size() >= 2)
                    p.cam_vs_gradcam = unpaired_ttest(a->second, b->second);
            }
            panels.push_back(std::move(p));
        }
        if (panels.empty()) throw MissingInput("no aggregate rows for scope " + label);
        render_metric_panels((report_dir / ("metrics_" + label + ".svg")).string(), panels, prov);

        // markdown: AUC table per metric
        md << "## Scope: " << label << "\n\n";
        md << "AUC over k (normalized trapezoid), mean \xC2\xB1 std over " << "windows.\n\n";
        md << "| metric | n |";
        for (Method m : cfg.methods) md << ' ' << to_string(m) << " |";
        md << "\n|---|---|";
        for (std::size_t i = 0; i < cfg.methods.size(); ++i) md << "---|";
        md << "\n";
        for (MetricKind metric : kAllMetrics) {
            auto it = table_cells.find(to_string(metric));
            if (it == table_cells.end()) continue;
            md << "| " << to_string(metric) << " | " << n_by_metric[to_string(metric)] << " |";
            for (Method m : cfg.methods) {
                auto cell = it->second.find(to_string(m));
                if (cell == it->second.end())
                    md << " - |";
                else
                    md << ' ' << format_double(cell->second.first) << " \xC2\xB1 "
                       << format_double(cell->second.second) << " |";
            }
            md << "\n";
        }
        md << "\n";

        // markdown: pairwise t-tests
        for (std::size_t i = 0; i < cfg.methods.size(); ++i)
            for (std::size_t j = i + 1; j < cfg.methods.size(); ++j) {
                const std::string ma = to_string(cfg.methods[i]), mb = to_string(cfg.methods[j]);
                md << "### " << ma << " vs " << mb << " (" << label << ")\n\n";
                md << "| metric | t | p | dof |\n|---|---|---|---|\n";
                for (MetricKind metric : kAllMetrics) {
                    auto mit = aucs.values.find(to_string(metric));
                    if (mit == aucs.values.end()) continue;
                    auto a = mit->second.find(ma);
                    auto b = mit->second.find(mb);
                    if (a == mit->second.end() || b == mit->second.end()) continue;
                    if (a->second.size() < 2 || b->second.size() < 2) continue;
                    const TTestResult res = unpaired_ttest(a->second, b->second);
                    md << "| " << to_string(metric) << " | " << format_double(res.t_statistic)
                       << " | " << format_double(res.p_value) << " | "
                       << format_double(res.dof) << " |\n";
                }
                md << "\n";
            }

        // skeleton renderings for the first evaluated windows
        const auto seqs = load_dataset(cfg, reg);
        const WindowSet ws =
            collect_windows(seqs, cfg.windows, mix64(cfg.rng_seed, kWindowSeedTag));
        std::set<std::string> evaluated;
        {
            const CsvTable auc_csv = read_csv(auc_path.string());
            const int c_w = auc_csv.column("window_id");
            for (const auto& row : auc_csv.rows) evaluated.insert(row[c_w]);
        }
        int rendered = 0;
        for (const auto& w : ws.windows) {
            if (rendered >= cfg.report.skeleton_windows) break;
            if (!evaluated.count(w.id())) continue;
            for (Method m : cfg.methods) {
                const fs::path attr_path = fs::path(cfg.out_dir) / "attributions" / label /
                                           (sanitize(w.id()) + "__" + to_string(m) + ".json");
                if (!fs::exists(attr_path)) continue;
                std::ifstream in(attr_path);
                json attr = json::parse(in);
                AttributionMap map;
                map.method = m;
                map.window_id = attr.at("window_id").get<std::string>();
                map.class_idx = attr.at("class_idx").get<int>();
                map.scores = attr.at("scores").get<std::vector<double>>();
                map.raw = map.scores;
                render_skeleton_svg((report_dir / ("skeleton_" + label + "_" + sanitize(w.id()) +
                                                   "_" + to_string(m) + ".svg"))
                                        .string(),
                                    w, w.frames() / 2, reg, map, rule, prov);
            }
            ++rendered;
        }
    }
    write_text((report_dir / "tables.md").string(), md.str());
}

}  // namespace skelxai
