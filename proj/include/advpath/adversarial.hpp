#pragma once

// Robust classifier training with an inner attack per correctly classified
// example, plus cross-model robustness evaluation.

#include "advpath/attack.hpp"

#include <string>
#include <vector>

namespace advpath {

enum class TrainMode { standard, latent, full };

inline std::string to_string(TrainMode m)
{
    switch (m) {
    case TrainMode::standard: return "standard";
    case TrainMode::latent: return "latent";
    default: return "full";
    }
}

inline TrainMode parse_train_mode(const std::string& s)
{
    if (s == "standard") return TrainMode::standard;
    if (s == "latent" || s == "adversarial-latent") return TrainMode::latent;
    if (s == "full" || s == "adversarial-full") return TrainMode::full;
    throw std::invalid_argument("unknown training mode '" + s + "' (expected standard, latent or full)");
}

struct RobustTrainConfig {
    ClassifierTrainConfig train;
    TrainMode mode = TrainMode::full;
    /// Inner attack. Latent mode runs plain projected ascent for `iterations` steps.
    AttackConfig attack;
    std::size_t threads = 1;
};

inline void to_json(nlohmann::json& j, const RobustTrainConfig& c)
{
    j = {{"train", c.train}, {"mode", to_string(c.mode)}, {"attack", c.attack}, {"threads", c.threads}};
}

inline void from_json(const nlohmann::json& j, RobustTrainConfig& c)
{
    if (j.contains("train")) c.train = j.at("train").get<ClassifierTrainConfig>();
    c.mode = parse_train_mode(j.value("mode", to_string(c.mode)));
    if (j.contains("attack")) c.attack = j.at("attack").get<AttackConfig>();
    c.threads = j.value("threads", c.threads);
}

template <class T>
struct AdversarialInput {
    /// Empty when every generated string decoded to nothing.
    std::optional<Tensor<T>> latents;
    /// Latent mode has no decode step, so every perturbation counts.
    bool attack_succeeded = false;
};

/// Adversarial latents for one correctly classified example. Full mode
/// re-encodes the strings generated at the attack's final iterate, whether or
/// not they flipped the label.
template <class T>
AdversarialInput<T> adversarial_input(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec,
                                      const LatentExample<T>& ex, TrainMode mode, const AttackConfig& attack)
{
    if (mode == TrainMode::latent) return {added(ex.latents, latent_pgd(model, ex.latents, ex.label, attack)), true};
    auto res = run_attack(model, codec, ex, attack);
    AdversarialInput<T> out;
    out.attack_succeeded = res.outcome == AttackOutcome::success;
    if (res.outcome == AttackOutcome::already_misclassified) return out;
    auto strings = out.attack_succeeded
                       ? res.adversarial
                       : decode_bag(codec, added(ex.latents, res.perturbation), std::span<const std::string>(ex.paths));
    auto kept = realizable(std::span<const std::string>(strings));
    if (!kept.empty()) out.latents = encode_batch(codec, std::span<const std::string>(kept));
    return out;
}

/// Batch hook adding the adversarial loss sum for every example the live model
/// classifies correctly.
template <class T>
BatchHook<T> adversarial_hook(const AutoencoderModel<T>& codec, const LatentDataset<T>& data,
                              const RobustTrainConfig& cfg)
{
    if (cfg.mode == TrainMode::standard) return {};
    cfg.attack.validate();
    return [&codec, &data, cfg](ClassifierModel<T>& model, std::span<const std::size_t> batch,
                                std::span<const int> predictions, ClassifierEpoch& rep) {
        std::vector<std::size_t> guarded;
        for (std::size_t r = 0; r < batch.size(); ++r)
            if (predictions[r] == data[batch[r]].label) guarded.push_back(batch[r]);
        rep.attack_invocations += guarded.size();
        if (guarded.empty()) return;

        std::vector<AdversarialInput<T>> inputs(guarded.size());
        const ClassifierModel<T>& frozen = model;
        parallel_for(guarded.size(), cfg.threads, [&](std::size_t i) {
            inputs[i] = adversarial_input(frozen, codec, data[guarded[i]], cfg.mode, cfg.attack);
        });

        Tape<T> tape;
        std::vector<Var> vars;
        std::vector<int> targets;
        for (std::size_t i = 0; i < guarded.size(); ++i) {
            rep.attack_successes += inputs[i].attack_succeeded;
            if (!inputs[i].latents) continue;
            vars.push_back(tape.constant_ref(*inputs[i].latents));
            targets.push_back(data[guarded[i]].label);
        }
        rep.adversarial_examples += vars.size();
        if (vars.empty()) return;
        std::vector<T> ones(vars.size(), T(1));
        tape.backward(tape.softmax_cross_entropy(classifier_logits<T>(tape, model, vars), targets, ones));
    };
}

/// Robust training from an initial model (fresh or pre-trained).
template <class T>
TrainedClassifier<T> train_robust(ClassifierModel<T> model, const LatentDataset<T>& train,
                                  const LatentDataset<T>& test, const AutoencoderModel<T>& codec,
                                  const RobustTrainConfig& cfg,
                                  const std::function<void(const ClassifierEpoch&)>& on_epoch = {})
{
    if (codec.latent_size() != model.input_size())
        throw ShapeError("train_robust: codec latent size does not match classifier input size");
    return run_classifier_training(std::move(model), train, test, cfg.train, adversarial_hook(codec, train, cfg),
                                   on_epoch);
}

// ---- cross evaluation -------------------------------------------------------

struct CrossResult {
    std::size_t attacker_successes = 0;
    std::size_t target_fooled = 0;
    /// 1 - fooled/successes; 1.0 when the attacker had no successes.
    double robustness = 1.0;
    bool zero_support = false;
};

/// Target labels for each successful adversarial bag of an attacker run.
template <class T>
CrossResult score_target(const ClassifierModel<T>& target, const AutoencoderModel<T>& codec,
                         const std::vector<AttackResult<T>>& attacks, std::size_t threads = 1)
{
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < attacks.size(); ++i)
        if (attacks[i].outcome == AttackOutcome::success) hits.push_back(i);
    CrossResult out;
    out.attacker_successes = hits.size();
    if (hits.empty()) {
        out.zero_support = true;
        return out;
    }
    std::vector<std::uint8_t> fooled(hits.size(), 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) {
        const auto& r = attacks[hits[i]];
        auto label = classify_strings(target, codec, std::span<const std::string>(r.adversarial));
        fooled[i] = label && *label != r.label;
    });
    for (auto f : fooled) out.target_fooled += f;
    out.robustness = 1.0 - double(out.target_fooled) / double(hits.size());
    return out;
}

template <class T>
CrossResult cross_evaluate(const ClassifierModel<T>& attacker, const ClassifierModel<T>& target,
                           const LatentDataset<T>& bags, const AutoencoderModel<T>& codec, const AttackConfig& cfg,
                           std::size_t threads = 1)
{
    if (attacker.input_size() != codec.latent_size() || target.input_size() != codec.latent_size())
        throw ShapeError("cross_evaluate: model input size does not match codec latent size");
    auto attacks = batch_attack(attacker, codec, bags, cfg, threads);
    return score_target(target, codec, attacks.results, threads);
}

/// Rows are attackers, columns targets. Each attacker's bags are generated once.
template <class T>
std::vector<std::vector<CrossResult>> cross_matrix(std::span<const ClassifierModel<T>* const> models,
                                                   const LatentDataset<T>& bags, const AutoencoderModel<T>& codec,
                                                   const AttackConfig& cfg, std::size_t threads = 1)
{
    std::vector<std::vector<CrossResult>> out;
    for (const auto* attacker : models) {
        auto attacks = batch_attack(*attacker, codec, bags, cfg, threads);
        auto& row = out.emplace_back();
        for (const auto* target : models) row.push_back(score_target(*target, codec, attacks.results, threads));
    }
    return out;
}

} // namespace advpath
