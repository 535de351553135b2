// Command-line front end: one subcommand per experiment step.

#include "advpath/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using advpath::pipeline::ConfigError;
using nlohmann::json;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> threads;
    std::vector<std::string> overrides;
};

json load_user_config(const std::string& path)
{
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    try {
        json j = json::parse(is);
        if (!j.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
        j.erase("command");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adversarial attacks and robust training for bags of file-path strings"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> models, runs;
    std::string mode;
    std::optional<double> alpha;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "JSON config or manifest of an earlier run");
        sub->add_option("--seed", flags.seed, "Seed for every stochastic component");
        sub->add_option("--out", flags.out, "Output directory");
        sub->add_option("--threads", flags.threads, "Worker threads for attacks");
        sub->add_option("--set", flags.overrides, "Override a config key: section.key=value (repeatable)");
    };
    auto add_input = [&](CLI::App* sub, const std::string& name, const std::string& help) {
        sub->add_option_function<std::string>("--" + name, [&inputs, name](const std::string& v) { inputs[name] = v; }, help);
    };

    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus and its temporal split");
    auto* tae = app.add_subcommand("train-autoencoder", "Train the character autoencoder");
    auto* tcl = app.add_subcommand("train-classifier", "Train the bag classifier on frozen latents");
    auto* adv = app.add_subcommand("adv-train", "Adversarially fine-tune a classifier");
    auto* atk = app.add_subcommand("attack", "Run an attack grid against a classifier");
    auto* xev = app.add_subcommand("cross-eval", "Robustness matrix of attacker/target pairs");
    auto* rep = app.add_subcommand("report", "Collect metric tables of earlier runs");
    for (auto* s : {gen, tae, tcl, adv, atk, xev, rep}) add_common(s);
    for (auto* s : {tae, tcl, adv, atk, xev}) add_input(s, "train", "Training split (train.jsonl)");
    for (auto* s : {tcl, adv, atk, xev}) {
        add_input(s, "test", "Test split (test.jsonl)");
        add_input(s, "autoencoder", "Autoencoder checkpoint");
    }
    add_input(adv, "classifier", "Initial classifier checkpoint(s), comma separated");
    add_input(atk, "classifier", "Classifier checkpoint to attack");
    adv->add_option("--mode", mode, "Training mode: latent or full");
    adv->add_option("--alpha", alpha, "Inner attack step size");
    xev->add_option("--model", models, "NAME=CKPT[,CKPT...] (repeatable, at least two)");
    rep->add_option("--run", runs, "Run directory to include (repeatable)");

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        json user = load_user_config(flags.config);
        json cfg = advpath::pipeline::resolve_config(user);
        if (flags.seed) advpath::pipeline::apply_seed(cfg, *flags.seed);
        if (!flags.out.empty()) cfg["out"] = flags.out;
        if (flags.threads) cfg["threads"] = *flags.threads;
        for (const auto& [k, v] : inputs) cfg["inputs"][k] = v;
        if (!mode.empty()) cfg["robust"]["mode"] = mode;
        if (alpha) cfg["robust"]["attack"]["alpha"] = *alpha;
        if (!models.empty()) {
            cfg["inputs"]["models"] = json::object();
            for (const auto& m : models) {
                const auto eq = m.find('=');
                if (eq == std::string::npos || eq == 0) throw ConfigError("--model expects NAME=CKPT, got '" + m + "'");
                cfg["inputs"]["models"][m.substr(0, eq)] = m.substr(eq + 1);
            }
        }
        if (!runs.empty()) cfg["inputs"]["runs"] = runs;
        for (const auto& o : flags.overrides) advpath::pipeline::apply_override(cfg, o);

        using namespace advpath::pipeline;
        if (command == "gen-data") cmd_gen_data(cfg);
        else if (command == "train-autoencoder") cmd_train_autoencoder(cfg);
        else if (command == "train-classifier") cmd_train_classifier(cfg);
        else if (command == "adv-train") cmd_adv_train(cfg);
        else if (command == "attack") cmd_attack(cfg);
        else if (command == "cross-eval") cmd_cross_eval(cfg);
        else cmd_report(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "advpath " << command << ": configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "advpath " << command << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
