#pragma once

// Experiment commands behind the command-line tool. Every command takes one
// resolved JSON config, writes all of its outputs under config["out"], and
// echoes the config to <out>/manifest.json so the run can be replayed.

#include "advpath/adversarial.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace advpath::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

/// Malformed or invalid configuration. The tool exits with status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A required input artifact is missing or incompatible.
class PrerequisiteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::vector<AttackConfig> default_attack_grid()
{
    std::vector<AttackConfig> grid;
    AttackConfig fgsm;
    fgsm.method = AttackMethod::fgsm;
    grid.push_back(fgsm);
    for (Projection p : {Projection::l2, Projection::linf})
        for (double alpha : {0.5, 1.0, 2.0})
            for (double eps : {2.0, 5.0, 10.0}) {
                AttackConfig c;
                c.alpha = alpha;
                c.epsilon = eps;
                c.projection = p;
                grid.push_back(c);
            }
    return grid;
}

inline json default_config()
{
    CorpusSpec corpus;
    json corpus_json = corpus;
    corpus_json["cutoff"] = corpus.drift_timestamp;

    ClassifierTrainConfig robust_train;
    robust_train.epochs = 3;
    AttackConfig train_attack;
    train_attack.iterations = 10;

    AttackConfig eval_attack;
    return {
        {"threads", 1},
        {"out", "run"},
        {"inputs",
         {{"train", ""}, {"test", ""}, {"autoencoder", ""}, {"classifier", ""}, {"models", json::object()}, {"runs", json::array()}}},
        {"corpus", corpus_json},
        {"autoencoder", {{"model", AutoencoderConfig{}}, {"train", AutoencoderTrainConfig{}}, {"holdout_size", 1000}}},
        {"classifier", {{"model", ClassifierConfig{}}, {"train", ClassifierTrainConfig{}}, {"replicates", 1}}},
        {"robust", {{"mode", "full"}, {"train", robust_train}, {"attack", train_attack}, {"replicates", 1}}},
        {"attack", {{"grid", default_attack_grid()}, {"max_bags", 0}, {"examples", 5}}},
        {"cross_eval", {{"attack", eval_attack}, {"max_bags", 0}}},
    };
}

/// Applies "a.b.c=value" onto cfg. The value is parsed as JSON when possible, else taken as a string.
inline void apply_override(json& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    try {
        cfg[json::json_pointer(pointer)] = value;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("override '" + assignment + "': " + e.what());
    }
}

/// Sets the seed of every stochastic component.
inline void apply_seed(json& cfg, std::uint64_t seed)
{
    cfg["seed"] = seed;
    cfg["corpus"]["seed"] = seed;
    cfg["autoencoder"]["model"]["seed"] = seed;
    cfg["autoencoder"]["train"]["seed"] = seed;
    cfg["classifier"]["model"]["seed"] = seed;
    cfg["classifier"]["train"]["seed"] = seed;
    cfg["robust"]["train"]["seed"] = seed;
}

/// Defaults merged with a user config (the user's keys win).
inline json resolve_config(const json& user)
{
    json cfg = default_config();
    cfg.merge_patch(user);
    return cfg;
}

template <class V>
V get_section(const json& cfg, const char* key)
{
    try {
        return cfg.at(key).get<V>();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config section '") + key + "': " + e.what());
    }
}

inline std::size_t threads_of(const json& cfg) { return std::max<std::size_t>(1, cfg.value("threads", std::size_t{1})); }

inline fs::path out_dir(const json& cfg)
{
    fs::path out = cfg.value("out", std::string("run"));
    fs::create_directories(out);
    return out;
}

inline std::ofstream open_out(const fs::path& p)
{
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    return os;
}

inline void write_manifest(const json& cfg, const std::string& command)
{
    json m = cfg;
    m["command"] = command;
    auto os = open_out(out_dir(cfg) / "manifest.json");
    os << m.dump(2) << '\n';
}

inline std::string input_path(const json& cfg, const char* key, const std::string& hint)
{
    std::string p = cfg.at("inputs").value(key, std::string());
    if (p.empty()) throw PrerequisiteError("missing input '" + std::string(key) + "': " + hint);
    if (!fs::exists(p)) throw PrerequisiteError("input '" + std::string(key) + "' not found at '" + p + "': " + hint);
    return p;
}

inline std::vector<Bag> load_split(const json& cfg, const char* key)
{
    auto bags = read_dataset(input_path(cfg, key, "run gen-data first and pass --" + std::string(key) + " FILE"));
    if (bags.empty()) throw PrerequisiteError(std::string("dataset '") + key + "' is empty");
    return bags;
}

inline AutoencoderModel<Real> load_codec(const json& cfg)
{
    return AutoencoderModel<Real>::load(
        input_path(cfg, "autoencoder", "run train-autoencoder first and pass --autoencoder FILE"));
}

inline void check_compatible(const AutoencoderModel<Real>& codec, const ClassifierModel<Real>& clf,
                             const std::string& what)
{
    if (codec.latent_size() != clf.input_size()) {
        throw PrerequisiteError(what + ": classifier expects latent size " + std::to_string(clf.input_size())
                                + " but the autoencoder produces " + std::to_string(codec.latent_size()));
    }
}

inline ClassifierModel<Real> load_classifier(const std::string& path, const AutoencoderModel<Real>& codec)
{
    auto clf = ClassifierModel<Real>::load(path);
    check_compatible(codec, clf, "classifier '" + path + "'");
    return clf;
}

inline std::string num(double v) { return format_fixed(v, 6); }

inline std::vector<Bag> first_bags(std::vector<Bag> bags, std::size_t max_bags)
{
    if (max_bags > 0 && bags.size() > max_bags) bags.resize(max_bags);
    return bags;
}

inline std::string checkpoint_name(const std::string& stem, std::size_t replicate, std::size_t replicates)
{
    return replicates <= 1 ? stem + ".ckpt" : stem + "_r" + std::to_string(replicate) + ".ckpt";
}

// ---- gen-data ---------------------------------------------------------------

inline void cmd_gen_data(const json& cfg)
{
    CorpusSpec spec;
    std::int64_t cutoff = 0;
    try {
        spec = cfg.at("corpus").get<CorpusSpec>();
        spec.validate();
        cutoff = cfg.at("corpus").value("cutoff", spec.drift_timestamp);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("corpus spec: ") + e.what());
    } catch (const CorpusError& e) {
        throw ConfigError(e.what());
    }
    auto bags = generate(spec);
    auto split = temporal_split(bags, cutoff);
    auto out = out_dir(cfg);
    write_dataset((out / "train.jsonl").string(), split.train);
    write_dataset((out / "test.jsonl").string(), split.test);

    auto os = open_out(out / "corpus_stats.tsv");
    os << "split\tbags\tmalicious\tpaths\tmean_path_length\tmax_path_length\n";
    for (const auto* part : {&split.train, &split.test}) {
        std::size_t mal = 0, paths = 0, longest = 0, chars = 0;
        for (const auto& b : *part) {
            mal += b.label == kMalicious;
            for (const auto& p : b.paths) {
                ++paths;
                chars += p.size();
                longest = std::max(longest, p.size());
            }
        }
        os << (part == &split.train ? "train" : "test") << '\t' << part->size() << '\t' << mal << '\t' << paths << '\t'
           << num(double(chars) / double(paths)) << '\t' << longest << '\n';
    }
    write_manifest(cfg, "gen-data");
}

// ---- train-autoencoder ------------------------------------------------------

struct AutoencoderSlices {
    std::vector<std::string> train;
    std::vector<std::string> holdout;
};

/// Holds out a seeded random sample of distinct paths; every occurrence of a
/// held-out path is removed from the training list.
inline AutoencoderSlices autoencoder_slices(const std::vector<Bag>& bags, std::size_t holdout_size, std::uint64_t seed)
{
    auto all = flatten_paths(bags);
    std::vector<std::string> distinct = all;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
    std::shuffle(distinct.begin(), distinct.end(), rng);
    holdout_size = std::min(holdout_size, distinct.size() / 2);
    AutoencoderSlices out;
    out.holdout.assign(distinct.begin(), distinct.begin() + holdout_size);
    std::vector<std::string> held = out.holdout;
    std::sort(held.begin(), held.end());
    for (auto& p : all)
        if (!std::binary_search(held.begin(), held.end(), p)) out.train.push_back(std::move(p));
    return out;
}

inline void cmd_train_autoencoder(const json& cfg)
{
    auto model_cfg = get_section<json>(cfg, "autoencoder").at("model").get<AutoencoderConfig>();
    auto train_cfg = get_section<json>(cfg, "autoencoder").at("train").get<AutoencoderTrainConfig>();
    const std::size_t holdout = cfg.at("autoencoder").value("holdout_size", std::size_t{1000});
    auto bags = load_split(cfg, "train");
    auto slices = autoencoder_slices(bags, holdout, train_cfg.seed);
    auto out = out_dir(cfg);

    auto metrics = open_out(out / "autoencoder_epochs.tsv");
    metrics << "epoch\tmean_loss\tsampling_rate\tholdout_char_accuracy\n";
    auto trained = train_autoencoder<Real>(slices.train, slices.holdout, model_cfg, train_cfg, [&](const AutoencoderEpoch& e) {
        metrics << e.epoch << '\t' << num(e.mean_loss) << '\t' << num(e.sampling_rate) << '\t' << num(e.holdout_accuracy)
                << '\n';
        metrics.flush();
        std::cerr << "autoencoder epoch " << e.epoch << " loss " << e.mean_loss << " holdout accuracy "
                  << e.holdout_accuracy << " (" << e.seconds << " s)\n";
    });
    trained.model.save((out / "autoencoder.ckpt").string());
    json summary = {{"train_paths", slices.train.size()},
                    {"holdout_paths", slices.holdout.size()},
                    {"holdout_char_accuracy", trained.report.epochs.empty() ? 0.0 : trained.report.epochs.back().holdout_accuracy}};
    open_out(out / "autoencoder_summary.json") << summary.dump(2) << '\n';
    write_manifest(cfg, "train-autoencoder");
}

// ---- train-classifier / adv-train -------------------------------------------

struct EncodedSplits {
    LatentDataset<Real> train;
    LatentDataset<Real> test;
};

inline EncodedSplits encode_splits(const json& cfg, const AutoencoderModel<Real>& codec)
{
    return {encode_bags(codec, load_split(cfg, "train")), encode_bags(codec, load_split(cfg, "test"))};
}

inline constexpr const char* kEpochHeader = "replicate\tepoch\ttrain_loss\ttrain_accuracy\ttest_accuracy\t"
                                            "attack_invocations\tattack_successes\tadversarial_examples\n";

inline void write_epoch_row(std::ostream& os, std::size_t replicate, const ClassifierEpoch& e)
{
    os << replicate << '\t' << e.epoch << '\t' << num(e.train_loss) << '\t' << num(e.train_accuracy) << '\t'
       << num(e.test_accuracy) << '\t' << e.attack_invocations << '\t' << e.attack_successes << '\t'
       << e.adversarial_examples << '\n';
}

inline void write_accuracy_table(const fs::path& path, const std::string& model, const std::vector<double>& acc)
{
    auto os = open_out(path);
    os << "model\treplicate\tstandard_accuracy\n";
    for (std::size_t r = 0; r < acc.size(); ++r) os << model << '\t' << r << '\t' << num(acc[r]) << '\n';
    auto ms = mean_std(std::span<const double>(acc));
    os << model << "\tmean\t" << num(ms.mean) << '\n' << model << "\tstd\t" << num(ms.std) << '\n';
}

inline void cmd_train_classifier(const json& cfg)
{
    auto codec = load_codec(cfg);
    auto model_cfg = get_section<json>(cfg, "classifier").at("model").get<ClassifierConfig>();
    auto train_cfg = cfg.at("classifier").at("train").get<ClassifierTrainConfig>();
    const std::size_t replicates = std::max<std::size_t>(1, cfg.at("classifier").value("replicates", std::size_t{1}));
    model_cfg.input_size = codec.latent_size();
    auto data = encode_splits(cfg, codec);
    auto out = out_dir(cfg);

    auto metrics = open_out(out / "classifier_epochs.tsv");
    metrics << kEpochHeader;
    std::vector<double> acc;
    for (std::size_t r = 0; r < replicates; ++r) {
        auto mc = model_cfg;
        auto tc = train_cfg;
        mc.seed += r;
        tc.seed += r;
        auto trained = train_classifier(ClassifierModel<Real>(mc), data.train, data.test, tc, [&](const ClassifierEpoch& e) {
            write_epoch_row(metrics, r, e);
            std::cerr << "classifier r" << r << " epoch " << e.epoch << " loss " << e.train_loss << " test accuracy "
                      << e.test_accuracy << " (" << e.seconds << " s)\n";
        });
        acc.push_back(accuracy(trained.model, data.test));
        trained.model.save((out / checkpoint_name("classifier", r, replicates)).string());
    }
    write_accuracy_table(out / "standard_accuracy.tsv", "non-robust", acc);
    write_manifest(cfg, "train-classifier");
}

/// Checkpoint paths named by an input key; a plain string or a list, one per replicate.
inline std::vector<std::string> checkpoint_list(const json& v)
{
    if (v.is_string()) {
        std::vector<std::string> out;
        std::stringstream ss(v.get<std::string>());
        for (std::string item; std::getline(ss, item, ',');)
            if (!item.empty()) out.push_back(item);
        return out;
    }
    return v.get<std::vector<std::string>>();
}

inline void cmd_adv_train(const json& cfg)
{
    auto codec = load_codec(cfg);
    const std::string hint = "run train-classifier first and pass --classifier FILE";
    auto inits = checkpoint_list(cfg.at("inputs").at("classifier"));
    if (inits.empty()) throw PrerequisiteError("missing input 'classifier': " + hint);
    for (const auto& p : inits)
        if (!fs::exists(p)) throw PrerequisiteError("input 'classifier' not found at '" + p + "': " + hint);

    RobustTrainConfig rc;
    try {
        const auto& r = cfg.at("robust");
        rc.mode = parse_train_mode(r.value("mode", std::string("full")));
        rc.train = r.at("train").get<ClassifierTrainConfig>();
        rc.attack = r.at("attack").get<AttackConfig>();
        rc.attack.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("robust config: ") + e.what());
    }
    rc.threads = threads_of(cfg);
    const std::size_t replicates = std::max<std::size_t>(1, cfg.at("robust").value("replicates", std::size_t{1}));
    auto data = encode_splits(cfg, codec);
    auto out = out_dir(cfg);

    auto metrics = open_out(out / "classifier_epochs.tsv");
    metrics << kEpochHeader;
    std::vector<double> acc;
    for (std::size_t r = 0; r < replicates; ++r) {
        auto init = load_classifier(inits[r % inits.size()], codec);
        auto c = rc;
        c.train.seed += r;
        auto trained = train_robust(std::move(init), data.train, data.test, codec, c, [&](const ClassifierEpoch& e) {
            write_epoch_row(metrics, r, e);
            metrics.flush();
            std::cerr << to_string(c.mode) << " r" << r << " epoch " << e.epoch << " loss " << e.train_loss
                      << " test accuracy " << e.test_accuracy << " attacks " << e.attack_successes << "/"
                      << e.attack_invocations << " (" << e.seconds << " s)\n";
        });
        acc.push_back(accuracy(trained.model, data.test));
        trained.model.save((out / checkpoint_name("classifier", r, replicates)).string());
    }
    write_accuracy_table(out / "standard_accuracy.tsv", to_string(rc.mode), acc);
    write_manifest(cfg, "adv-train");
}

// ---- attack -----------------------------------------------------------------

inline std::string appendix_dump(const AttackResult<Real>& r)
{
    std::ostringstream os;
    os << (r.label == kMalicious ? "malicious" : "benign") << " bag, " << r.iterations << " iteration(s), eps "
       << num(r.epsilon_used) << ", RLD "
       << num(bag_rld(std::span<const std::string>(r.original), std::span<const std::string>(r.adversarial)).value)
       << '\n';
    for (std::size_t i = 0; i < r.original.size(); ++i) {
        os << "  - " << r.original[i] << '\n';
        os << "  + " << (r.adversarial[i].empty() ? std::string("(empty)") : render_diff(r.original[i], r.adversarial[i]))
           << '\n';
    }
    return os.str();
}

inline void cmd_attack(const json& cfg)
{
    auto codec = load_codec(cfg);
    auto clf = load_classifier(input_path(cfg, "classifier", "run train-classifier first and pass --classifier FILE"), codec);
    std::vector<AttackConfig> grid;
    std::size_t max_bags = 0, examples = 0;
    try {
        grid = cfg.at("attack").at("grid").get<std::vector<AttackConfig>>();
        for (const auto& g : grid) g.validate();
        max_bags = cfg.at("attack").value("max_bags", std::size_t{0});
        examples = cfg.at("attack").value("examples", std::size_t{5});
    } catch (const std::exception& e) {
        throw ConfigError(std::string("attack config: ") + e.what());
    }
    if (grid.empty()) throw ConfigError("attack config: empty grid");
    auto bags = first_bags(load_split(cfg, "test"), max_bags);
    auto eval = encode_bags(codec, bags);
    auto out = out_dir(cfg);

    std::vector<MethodPoint> points;
    auto counts = open_out(out / "attack_counts.tsv");
    counts << "method\tbags\talready_misclassified\tsuccesses\tfailures\tsuccess_rate\tmean_rld\tempty_instance_successes\n";
    auto dump = open_out(out / "adversarial_examples.txt");
    for (std::size_t m = 0; m < grid.size(); ++m) {
        auto res = batch_attack(clf, codec, eval, grid[m], threads_of(cfg));
        const auto& s = res.summary;
        std::cerr << s.label << ": success rate " << rate_text(s.success_rate) << ", mean RLD " << rate_text(s.mean_rld)
                  << '\n';
        counts << s.label << '\t' << s.bags << '\t' << s.already_misclassified << '\t' << s.successes << '\t'
               << s.failures << '\t' << rate_text(s.success_rate, 6) << '\t' << rate_text(s.mean_rld, 6) << '\t'
               << s.empty_instance_successes << '\n';
        if (s.success_rate) points.push_back(method_point(s));
        auto trace = open_out(out / ("trace_" + std::to_string(m) + ".jsonl"));
        write_trace(trace, res.results, grid[m]);
        if (!s.rlds.empty()) {
            auto e = open_out(out / ("ecdf_" + std::to_string(m) + ".tsv"));
            write_ecdf(e, ecdf(s.rlds));
        }
        dump << "== " << s.label << '\n';
        std::size_t shown = 0;
        for (const auto& r : res.results) {
            if (shown >= examples) break;
            if (r.outcome != AttackOutcome::success) continue;
            dump << appendix_dump(r) << '\n';
            ++shown;
        }
    }
    auto table = open_out(out / "attack_table.tsv");
    write_method_table(table, points);
    write_manifest(cfg, "attack");
}

// ---- cross-eval -------------------------------------------------------------

inline std::string mean_pm(const std::vector<double>& xs)
{
    auto ms = mean_std(std::span<const double>(xs));
    return num(ms.mean) + " +- " + num(ms.std);
}

inline void cmd_cross_eval(const json& cfg)
{
    auto codec = load_codec(cfg);
    const auto& models_json = cfg.at("inputs").at("models");
    if (!models_json.is_object() || models_json.size() < 2)
        throw PrerequisiteError("cross-eval needs at least two models (--model NAME=CKPT[,CKPT...])");
    std::vector<std::string> names;
    std::vector<std::vector<ClassifierModel<Real>>> groups;
    for (const auto& [name, paths] : models_json.items()) {
        names.push_back(name);
        auto& g = groups.emplace_back();
        for (const auto& p : checkpoint_list(paths)) {
            if (!fs::exists(p)) throw PrerequisiteError("model '" + name + "': checkpoint '" + p + "' not found");
            g.push_back(load_classifier(p, codec));
        }
        if (g.empty()) throw PrerequisiteError("model '" + name + "' has no checkpoints");
    }
    AttackConfig attack;
    try {
        attack = cfg.at("cross_eval").at("attack").get<AttackConfig>();
        attack.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("cross_eval config: ") + e.what());
    }
    const std::size_t max_bags = cfg.at("cross_eval").value("max_bags", std::size_t{0});
    auto eval = encode_bags(codec, first_bags(load_split(cfg, "test"), max_bags));
    auto out = out_dir(cfg);
    const std::size_t threads = threads_of(cfg);

    auto acc_table = open_out(out / "standard_accuracy.tsv");
    acc_table << "model\tstandard_accuracy\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<double> acc;
        for (const auto& m : groups[i]) acc.push_back(accuracy(m, eval));
        acc_table << names[i] << '\t' << mean_pm(acc) << '\n';
    }

    // Replicate r of an attacker is paired with replicate r of each target; on the
    // diagonal with r+1 (when there are several), so a model type is scored against
    // an independently trained copy rather than against its own successes.
    std::size_t replicates = 0;
    for (const auto& g : groups) replicates = std::max(replicates, g.size());
    auto longform = open_out(out / "cross_eval_runs.tsv");
    longform << "attacker\ttarget\treplicate\tattacker_successes\ttarget_fooled\trobustness\tzero_support\n";
    std::vector<std::vector<std::vector<double>>> cells(names.size(), std::vector<std::vector<double>>(names.size()));
    for (std::size_t a = 0; a < names.size(); ++a) {
        for (std::size_t r = 0; r < replicates; ++r) {
            const auto& attacker = groups[a][r % groups[a].size()];
            auto attacks = batch_attack(attacker, codec, eval, attack, threads);
            for (std::size_t t = 0; t < names.size(); ++t) {
                const std::size_t shift = a == t && groups[t].size() > 1 ? 1 : 0;
                auto res = score_target(groups[t][(r + shift) % groups[t].size()], codec, attacks.results, threads);
                cells[a][t].push_back(res.robustness);
                longform << names[a] << '\t' << names[t] << '\t' << r << '\t' << res.attacker_successes << '\t'
                         << res.target_fooled << '\t' << num(res.robustness) << '\t' << (res.zero_support ? 1 : 0)
                         << '\n';
            }
            std::cerr << "cross-eval attacker " << names[a] << " r" << r << " done\n";
        }
    }
    auto matrix = open_out(out / "cross_eval.tsv");
    matrix << "attacker \\ target";
    for (const auto& n : names) matrix << '\t' << n;
    matrix << '\n';
    for (std::size_t a = 0; a < names.size(); ++a) {
        matrix << names[a];
        for (std::size_t t = 0; t < names.size(); ++t) matrix << '\t' << mean_pm(cells[a][t]);
        matrix << '\n';
    }
    write_manifest(cfg, "cross-eval");
}

// ---- report -----------------------------------------------------------------

/// Collects the metric tables of earlier runs into one text report.
inline void cmd_report(const json& cfg)
{
    std::vector<std::string> runs;
    try {
        runs = cfg.at("inputs").at("runs").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("report: inputs.runs must be a list of run directories: ") + e.what());
    }
    if (runs.empty()) throw PrerequisiteError("report needs at least one run directory (--run DIR)");
    auto out = out_dir(cfg);
    auto os = open_out(out / "report.md");
    os << "# Experiment report\n";
    for (const auto& dir : runs) {
        const fs::path manifest = fs::path(dir) / "manifest.json";
        if (!fs::exists(manifest)) throw PrerequisiteError("run directory '" + dir + "' has no manifest.json");
        json m = json::parse(std::ifstream(manifest));
        os << "\n## " << dir << " (" << m.value("command", std::string("?")) << ")\n";
        std::vector<fs::path> tables;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".tsv" && entry.path().filename().string().rfind("ecdf_", 0) != 0)
                tables.push_back(entry.path());
        std::sort(tables.begin(), tables.end());
        for (const auto& t : tables) {
            os << "\n### " << t.filename().string() << "\n\n```\n";
            std::ifstream is(t);
            os << is.rdbuf() << "```\n";
        }
    }
    write_manifest(cfg, "report");
}

} // namespace advpath::pipeline
