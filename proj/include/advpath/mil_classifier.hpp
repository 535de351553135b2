#pragma once

// Multiple-instance classifier over bags of latent string vectors.
//
// Attention aggregation for one bag E (k x m):
//   K = E W_K (k x d),  V = E W_V (k x d),  A = softmax_rows(W_Q K^T) (h x k)
//   o = vec(A V)  (length h*d)
// The feed-forward head maps o to two logits (benign, malicious).

#include "advpath/corpus.hpp"
#include "advpath/layers.hpp"
#include "advpath/optim.hpp"
#include "advpath/string_codec.hpp"

#include <array>
#include <chrono>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace advpath {

/// k x m matrix of instance latents.
template <class T>
using LatentBag = Tensor<T>;

enum class AggregatorKind { attention, mean_max };

inline std::string to_string(AggregatorKind k) { return k == AggregatorKind::attention ? "attention" : "mean_max"; }

inline AggregatorKind parse_aggregator(const std::string& s)
{
    if (s == "attention") return AggregatorKind::attention;
    if (s == "mean_max" || s == "mean+max") return AggregatorKind::mean_max;
    throw std::invalid_argument("unknown aggregator '" + s + "' (expected attention or mean_max)");
}

struct ClassifierConfig {
    std::size_t input_size = 128;
    std::size_t hidden_size = 128;
    std::size_t heads = 8;
    std::size_t head_hidden = 256;
    AggregatorKind aggregator = AggregatorKind::attention;
    std::uint64_t seed = 1;
};

inline void to_json(nlohmann::json& j, const ClassifierConfig& c)
{
    j = {{"input_size", c.input_size}, {"hidden_size", c.hidden_size}, {"heads", c.heads},
         {"head_hidden", c.head_hidden}, {"aggregator", to_string(c.aggregator)}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ClassifierConfig& c)
{
    c.input_size = j.value("input_size", c.input_size);
    c.hidden_size = j.value("hidden_size", c.hidden_size);
    c.heads = j.value("heads", c.heads);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    c.aggregator = parse_aggregator(j.value("aggregator", to_string(c.aggregator)));
    c.seed = j.value("seed", c.seed);
}

template <class T>
class ClassifierModel {
public:
    explicit ClassifierModel(ClassifierConfig cfg) : cfg_(cfg)
    {
        if (cfg.input_size == 0 || cfg.hidden_size == 0 || cfg.heads == 0 || cfg.head_hidden == 0)
            throw std::invalid_argument("classifier: all sizes must be positive");
        std::mt19937_64 rng(cfg.seed);
        const std::size_t m = cfg.input_size, d = cfg.hidden_size, h = cfg.heads;
        w_key = Tensor<T>::matrix(m, d);
        w_value = Tensor<T>::matrix(m, d);
        w_query = Tensor<T>::matrix(h, d);
        glorot_uniform(w_key, m, d, rng);
        glorot_uniform(w_value, m, d, rng);
        glorot_uniform(w_query, h, d, rng);
        hidden = Linear<T>(feature_size(), cfg.head_hidden, rng);
        output = Linear<T>(cfg.head_hidden, 2, rng);
    }

    const ClassifierConfig& config() const { return cfg_; }
    std::size_t input_size() const { return cfg_.input_size; }

    std::size_t feature_size() const
    {
        return cfg_.aggregator == AggregatorKind::attention ? cfg_.heads * cfg_.hidden_size : 2 * cfg_.input_size;
    }

    ParameterList<T> parameters()
    {
        ParameterList<T> out;
        if (cfg_.aggregator == AggregatorKind::attention) {
            out.push_back({"aggregator.w_key", &w_key});
            out.push_back({"aggregator.w_value", &w_value});
            out.push_back({"aggregator.w_query", &w_query});
        }
        hidden.collect(out, "head.hidden");
        output.collect(out, "head.output");
        return out;
    }

    void save(const std::string& path)
    {
        nlohmann::json hp = cfg_;
        save_checkpoint<T>(path, "classifier", hp, parameters());
    }

    static ClassifierModel load(const std::string& path)
    {
        Checkpoint ck = load_checkpoint(path);
        if (ck.kind != "classifier")
            throw CheckpointError("checkpoint '" + path + "' holds a " + ck.kind + " model, expected classifier");
        ClassifierModel m(ck.hyperparameters.get<ClassifierConfig>());
        ck.load_into(m.parameters());
        return m;
    }

    Tensor<T> w_key;    // m x d
    Tensor<T> w_value;  // m x d
    Tensor<T> w_query;  // h x d
    Linear<T> hidden;   // feature -> head_hidden, tanh
    Linear<T> output;   // head_hidden -> 2

private:
    ClassifierConfig cfg_;
};

namespace detail {

template <class T>
void check_bag_width(const ClassifierModel<T>& model, const Tensor<T>& e)
{
    if (e.cols() != model.input_size()) {
        throw ShapeError("classify: bag instance width " + std::to_string(e.cols())
                         + " does not match classifier input size " + std::to_string(model.input_size()));
    }
}

} // namespace detail

/// Attention pooling of a single bag already on the tape; returns (1 x h*d).
template <class T>
Var aggregate(Tape<T>& tape, const ClassifierModel<T>& model, Var bag)
{
    const auto& cfg = model.config();
    detail::check_bag_width(model, tape.value(bag));
    Var keys = tape.matmul(bag, tape.param(model.w_key));
    Var values = tape.matmul(bag, tape.param(model.w_value));
    Var weights = tape.softmax_rows(tape.matmul(tape.param(model.w_query), tape.transpose(keys)));
    return tape.reshape(tape.matmul(weights, values), 1, cfg.heads * cfg.hidden_size);
}

/// Bag features for a batch of bags on the tape: (B x feature_size).
/// Key/value projections run once over all instances of the batch.
template <class T>
Var bag_features(Tape<T>& tape, const ClassifierModel<T>& model, std::span<const Var> bags)
{
    if (bags.empty()) throw ShapeError("bag_features: empty batch");
    const auto& cfg = model.config();
    std::vector<Var> rows;
    rows.reserve(bags.size());
    if (cfg.aggregator == AggregatorKind::mean_max) {
        for (Var b : bags) {
            detail::check_bag_width(model, tape.value(b));
            Var parts[] = {tape.mean_rows(b), tape.max_rows(b)};
            rows.push_back(tape.concat_cols(parts));
        }
        return tape.concat_rows(rows);
    }
    for (Var b : bags) detail::check_bag_width(model, tape.value(b));
    Var all = bags.size() == 1 ? bags[0] : tape.concat_rows(bags);
    Var keys = tape.matmul(all, tape.param(model.w_key));
    Var values = tape.matmul(all, tape.param(model.w_value));
    Var query = tape.param(model.w_query);
    std::size_t offset = 0;
    for (Var b : bags) {
        const std::size_t k = tape.value(b).rows();
        Var kb = bags.size() == 1 ? keys : tape.slice_rows(keys, offset, offset + k);
        Var vb = bags.size() == 1 ? values : tape.slice_rows(values, offset, offset + k);
        Var weights = tape.softmax_rows(tape.matmul(query, tape.transpose(kb)));
        rows.push_back(tape.reshape(tape.matmul(weights, vb), 1, cfg.heads * cfg.hidden_size));
        offset += k;
    }
    return rows.size() == 1 ? rows[0] : tape.concat_rows(rows);
}

template <class T>
Var head_logits(Tape<T>& tape, const ClassifierModel<T>& model, Var features)
{
    return model.output(tape, tape.tanh(model.hidden(tape, features)));
}

/// (B x 2) logits for a batch of bags.
template <class T>
Var classifier_logits(Tape<T>& tape, const ClassifierModel<T>& model, std::span<const Var> bags)
{
    return head_logits(tape, model, bag_features(tape, model, bags));
}

/// Predicted label from two logits; ties are benign.
template <class T>
int predicted_label(T benign_logit, T malicious_logit)
{
    return malicious_logit > benign_logit ? kMalicious : kBenign;
}

template <class T>
struct Classification {
    std::array<T, 2> logits{};
    int label = kBenign;
};

template <class T>
Classification<T> classify(const ClassifierModel<T>& model, const LatentBag<T>& bag)
{
    if (bag.empty()) throw ShapeError("classify: empty bag");
    Tape<T> tape(false);
    Var b = tape.constant_ref(bag);
    const auto& lv = tape.value(classifier_logits<T>(tape, model, std::span<const Var>(&b, 1)));
    return {{lv[0], lv[1]}, predicted_label(lv[0], lv[1])};
}

/// One labelled bag in latent form, keeping the strings it came from.
template <class T>
struct LatentExample {
    LatentBag<T> latents;
    int label = kBenign;
    std::vector<std::string> paths;
};

template <class T>
using LatentDataset = std::vector<LatentExample<T>>;

/// Encodes every bag with the (frozen) codec in large chunks.
template <class T>
LatentDataset<T> encode_bags(const AutoencoderModel<T>& codec, const std::vector<Bag>& bags)
{
    LatentDataset<T> out;
    if (bags.empty()) return out;
    auto all = flatten_paths(bags);
    Tensor<T> z = encode_batch(codec, std::span<const std::string>(all));
    const std::size_t d = codec.latent_size();
    std::size_t row = 0;
    for (const auto& b : bags) {
        LatentExample<T> ex;
        ex.label = b.label;
        ex.paths = b.paths;
        std::vector<T> vals(z.raw() + row * d, z.raw() + (row + b.paths.size()) * d);
        ex.latents = Tensor<T>(Shape{b.paths.size(), d}, std::move(vals));
        row += b.paths.size();
        out.push_back(std::move(ex));
    }
    return out;
}

/// Labels predicted for each example, evaluated in batches.
template <class T>
std::vector<int> predict_all(const ClassifierModel<T>& model, const LatentDataset<T>& data, std::size_t batch = 64)
{
    std::vector<int> out;
    out.reserve(data.size());
    for (std::size_t begin = 0; begin < data.size(); begin += batch) {
        const std::size_t end = std::min(data.size(), begin + batch);
        Tape<T> tape(false);
        std::vector<Var> vars;
        for (std::size_t i = begin; i < end; ++i) vars.push_back(tape.constant_ref(data[i].latents));
        const auto& lv = tape.value(classifier_logits<T>(tape, model, vars));
        for (std::size_t i = 0; i < end - begin; ++i) out.push_back(predicted_label(lv[2 * i], lv[2 * i + 1]));
    }
    return out;
}

template <class T>
double accuracy(const ClassifierModel<T>& model, const LatentDataset<T>& data)
{
    if (data.empty()) return 0.0;
    auto pred = predict_all(model, data);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hits += pred[i] == data[i].label;
    return double(hits) / double(data.size());
}

// ---- training ---------------------------------------------------------------

struct ClassifierTrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    OptimizerConfig optimizer{"adam", 1e-3, 0.0};
    std::uint64_t seed = 1;
};

inline void to_json(nlohmann::json& j, const ClassifierTrainConfig& c)
{
    j = {{"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"optimizer", c.optimizer.kind},
         {"learning_rate", c.optimizer.learning_rate},
         {"clip_norm", c.optimizer.clip_norm},
         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ClassifierTrainConfig& c)
{
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.optimizer.kind = j.value("optimizer", c.optimizer.kind);
    c.optimizer.learning_rate = j.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.clip_norm = j.value("clip_norm", c.optimizer.clip_norm);
    c.seed = j.value("seed", c.seed);
}

struct ClassifierEpoch {
    std::size_t epoch = 0;
    double train_loss = 0;
    double train_accuracy = 0;
    double test_accuracy = 0;
    std::size_t attack_invocations = 0;
    std::size_t attack_successes = 0;
    /// Adversarial inputs that entered the loss.
    std::size_t adversarial_examples = 0;
    double seconds = 0;
};

struct ClassifierReport {
    std::vector<ClassifierEpoch> epochs;
    std::vector<double> first_epoch_losses;
};

/// Result of the clean forward/backward over one batch.
struct CleanBatch {
    double loss_sum = 0;
    std::vector<int> predictions;
};

/// Accumulates sum over the batch of grad_theta loss(f(x), y) into the parameter gradients.
template <class T>
CleanBatch accumulate_clean_gradients(ClassifierModel<T>& model, const LatentDataset<T>& data,
                                      std::span<const std::size_t> batch)
{
    Tape<T> tape;
    std::vector<Var> vars;
    std::vector<int> targets;
    for (auto i : batch) {
        vars.push_back(tape.constant_ref(data[i].latents));
        targets.push_back(data[i].label);
    }
    Var logits = classifier_logits<T>(tape, model, vars);
    std::vector<T> ones(batch.size(), T(1));
    Var loss = tape.softmax_cross_entropy(logits, targets, ones);
    tape.backward(loss);
    CleanBatch out;
    out.loss_sum = tape.value(loss)[0];
    const auto& lv = tape.value(logits);
    for (std::size_t r = 0; r < batch.size(); ++r) out.predictions.push_back(predicted_label(lv[2 * r], lv[2 * r + 1]));
    return out;
}

/// Shuffled mini-batches of example indices.
template <class Rng>
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size, Rng& rng)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t b = 0; b < n; b += batch_size)
        out.emplace_back(order.begin() + b, order.begin() + std::min(n, b + batch_size));
    return out;
}

inline void require_both_classes(std::span<const int> labels)
{
    bool seen[2] = {false, false};
    for (int y : labels) seen[y == kMalicious] = true;
    if (!seen[0] || !seen[1]) throw InvalidInput("training data must contain both benign and malicious bags");
}

template <class T>
void require_both_classes(const LatentDataset<T>& data)
{
    std::vector<int> labels;
    for (const auto& e : data) labels.push_back(e.label);
    require_both_classes(labels);
}

template <class T>
struct TrainedClassifier {
    ClassifierModel<T> model;
    ClassifierReport report;
};

/// Extra per-batch gradient source run after the clean pass, before the update.
/// Receives the batch indices and the live model's clean predictions; adds its
/// loss sum into the parameter gradients and may bump the epoch counters.
template <class T>
using BatchHook = std::function<void(ClassifierModel<T>&, std::span<const std::size_t>, std::span<const int>,
                                     ClassifierEpoch&)>;

/// Mini-batch loop shared by plain and adversarial training. Each step applies
/// (clean gradient sum + hook gradient sum) / |batch|.
template <class T>
TrainedClassifier<T> run_classifier_training(ClassifierModel<T> model, const LatentDataset<T>& train,
                                             const LatentDataset<T>& test, const ClassifierTrainConfig& cfg,
                                             const BatchHook<T>& hook,
                                             const std::function<void(const ClassifierEpoch&)>& on_epoch)
{
    require_both_classes(train);
    std::mt19937_64 rng(cfg.seed);
    auto opt = make_optimizer<T>(cfg.optimizer);
    auto params = model.parameters();
    ClassifierReport report;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        ClassifierEpoch rep;
        rep.epoch = epoch + 1;
        std::size_t hits = 0;
        for (const auto& batch : shuffled_batches(train.size(), cfg.batch_size, rng)) {
            zero_grads(params);
            auto clean = accumulate_clean_gradients(model, train, batch);
            if (hook) hook(model, batch, clean.predictions, rep);
            opt->step(params, T(1) / T(batch.size()));
            rep.train_loss += clean.loss_sum;
            for (std::size_t r = 0; r < batch.size(); ++r) hits += clean.predictions[r] == train[batch[r]].label;
            if (epoch == 0) report.first_epoch_losses.push_back(clean.loss_sum / double(batch.size()));
        }
        rep.train_loss /= double(train.size());
        rep.train_accuracy = double(hits) / double(train.size());
        rep.test_accuracy = test.empty() ? 0.0 : accuracy(model, test);
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.epochs.push_back(rep);
        if (on_epoch) on_epoch(rep);
    }
    for (const auto& p : params) p.tensor->drop_grad();
    return {std::move(model), std::move(report)};
}

/// Plain mini-batch training on clean latent bags.
template <class T>
TrainedClassifier<T> train_classifier(ClassifierModel<T> model, const LatentDataset<T>& train,
                                      const LatentDataset<T>& test, const ClassifierTrainConfig& cfg,
                                      const std::function<void(const ClassifierEpoch&)>& on_epoch = {})
{
    return run_classifier_training(std::move(model), train, test, cfg, BatchHook<T>{}, on_epoch);
}

} // namespace advpath
