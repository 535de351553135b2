#pragma once

// Convolutional-recurrent sequence autoencoder over bytes.
//
// Encoder: byte embeddings -> non-overlapping width-w convolution (stride w)
// -> gated recurrent cell; the final hidden state is the latent vector.
// Decoder: gated recurrent cell started from the latent; each step consumes
// the embeddings of the w bytes emitted by the previous step and a transposed
// convolution expands its state into w byte distributions.

#include "advpath/checkpoint.hpp"
#include "advpath/layers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace advpath {

inline constexpr std::size_t kVocabSize = 256;
/// Pad, terminator and start symbol all use byte 0, which never occurs in paths.
inline constexpr int kPadByte = 0;
inline constexpr int kStartByte = 0;

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <class T>
using LatentVector = std::vector<T>;

struct AutoencoderConfig {
    std::size_t embedding_size = 32;
    std::size_t latent_size = 128;
    std::size_t conv_channels = 128;
    std::size_t kernel_width = 5;
    std::size_t max_length = 256;
    std::uint64_t seed = 1;
};

inline void to_json(nlohmann::json& j, const AutoencoderConfig& c)
{
    j = {{"embedding_size", c.embedding_size}, {"latent_size", c.latent_size},
         {"conv_channels", c.conv_channels},   {"kernel_width", c.kernel_width},
         {"max_length", c.max_length},         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, AutoencoderConfig& c)
{
    c.embedding_size = j.value("embedding_size", c.embedding_size);
    c.latent_size = j.value("latent_size", c.latent_size);
    c.conv_channels = j.value("conv_channels", c.conv_channels);
    c.kernel_width = j.value("kernel_width", c.kernel_width);
    c.max_length = j.value("max_length", c.max_length);
    c.seed = j.value("seed", c.seed);
}

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

template <class T>
class AutoencoderModel {
public:
    explicit AutoencoderModel(AutoencoderConfig cfg) : cfg_(cfg)
    {
        if (cfg.kernel_width == 0 || cfg.embedding_size == 0 || cfg.latent_size == 0 || cfg.conv_channels == 0)
            throw std::invalid_argument("autoencoder: all sizes must be positive");
        std::mt19937_64 rng(cfg.seed);
        embedding = Tensor<T>::matrix(kVocabSize, cfg.embedding_size);
        normal_fill(embedding, 0.5, rng);
        conv = Linear<T>(cfg.kernel_width * cfg.embedding_size, cfg.conv_channels, rng);
        encoder = GruCell<T>(cfg.conv_channels, cfg.latent_size, rng);
        decoder = GruCell<T>(cfg.kernel_width * cfg.embedding_size, cfg.latent_size, rng);
        decoder_latent = Tensor<T>::matrix(cfg.latent_size, 3 * cfg.latent_size);
        glorot_uniform(decoder_latent, cfg.latent_size, cfg.latent_size, rng);
        deconv = Linear<T>(cfg.latent_size, cfg.kernel_width * kVocabSize, rng);
    }

    const AutoencoderConfig& config() const { return cfg_; }
    std::size_t latent_size() const { return cfg_.latent_size; }
    std::size_t kernel_width() const { return cfg_.kernel_width; }

    ParameterList<T> parameters()
    {
        ParameterList<T> out{{"embedding", &embedding}};
        conv.collect(out, "conv");
        encoder.collect(out, "encoder");
        decoder.collect(out, "decoder");
        out.push_back({"decoder.w_latent", &decoder_latent});
        deconv.collect(out, "deconv");
        return out;
    }

    void validate(std::string_view s) const
    {
        if (s.empty()) throw InvalidInput("encode: empty string");
        if (s.size() > cfg_.max_length)
            throw InvalidInput("encode: string of length " + std::to_string(s.size()) + " exceeds max length "
                               + std::to_string(cfg_.max_length));
    }

    void save(const std::string& path)
    {
        nlohmann::json hp = cfg_;
        save_checkpoint<T>(path, "autoencoder", hp, parameters());
    }

    static AutoencoderModel load(const std::string& path)
    {
        Checkpoint ck = load_checkpoint(path);
        if (ck.kind != "autoencoder")
            throw CheckpointError("checkpoint '" + path + "' holds a " + ck.kind + " model, expected autoencoder");
        AutoencoderModel m(ck.hyperparameters.get<AutoencoderConfig>());
        ck.load_into(m.parameters());
        return m;
    }

    Tensor<T> embedding;  // 256 x l
    Linear<T> conv;       // (w*l) -> c
    GruCell<T> encoder;   // c -> d
    GruCell<T> decoder;   // (w*l) -> d
    Tensor<T> decoder_latent;  // d x 3d, the latent as an extra decoder input at every step
    Linear<T> deconv;     // d -> (w*256)

private:
    AutoencoderConfig cfg_;
};

/// Decoder step: previous block embeddings plus the latent's own input projection.
template <class T>
Var decoder_step(Tape<T>& tape, const AutoencoderModel<T>& model, Var x, Var latent_proj, Var h)
{
    return model.decoder.step_projected(tape, tape.add(model.decoder.project_input(tape, x), latent_proj), h);
}

/// Encoder over a batch; returns the (B x d) latent matrix. Rows are
/// independent: a string's latent does not depend on its batch neighbours.
template <class T>
Var encoder_forward(Tape<T>& tape, const AutoencoderModel<T>& model, std::span<const std::string_view> batch)
{
    const std::size_t B = batch.size();
    const std::size_t w = model.kernel_width();
    std::vector<std::size_t> steps(B);
    std::size_t S = 0;
    for (std::size_t b = 0; b < B; ++b) {
        model.validate(batch[b]);
        steps[b] = ceil_div(batch[b].size(), w);
        S = std::max(S, steps[b]);
    }
    std::vector<int> ids(S * B * w, kPadByte);
    for (std::size_t t = 0; t < S; ++t)
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < w; ++j) {
                const std::size_t pos = t * w + j;
                if (pos < batch[b].size()) ids[(t * B + b) * w + j] = static_cast<unsigned char>(batch[b][pos]);
            }

    const std::size_t l = model.config().embedding_size;
    Var emb = tape.gather_rows(tape.param(model.embedding), ids);
    Var windows = tape.reshape(emb, S * B, w * l);
    Var feats = tape.tanh(model.conv(tape, windows));
    Var gx = model.encoder.project_input(tape, feats);

    Var h = tape.constant(Tensor<T>::matrix(B, model.latent_size()));
    std::vector<std::uint8_t> active(B);
    for (std::size_t t = 0; t < S; ++t) {
        Var next = model.encoder.step_projected(tape, tape.slice_rows(gx, t * B, (t + 1) * B), h);
        bool all = true;
        for (std::size_t b = 0; b < B; ++b) {
            active[b] = t < steps[b];
            all = all && active[b];
        }
        h = all ? next : tape.blend_rows(next, h, active);
    }
    return h;
}

/// (n x d) latents for n strings, computed in chunks.
template <class T>
Tensor<T> encode_batch(const AutoencoderModel<T>& model, std::span<const std::string> strings, std::size_t chunk = 256)
{
    if (strings.empty()) throw InvalidInput("encode_batch: no strings");
    const std::size_t d = model.latent_size();
    Tensor<T> out = Tensor<T>::matrix(strings.size(), d);
    for (std::size_t begin = 0; begin < strings.size(); begin += chunk) {
        const std::size_t end = std::min(strings.size(), begin + chunk);
        std::vector<std::string_view> views(strings.begin() + begin, strings.begin() + end);
        Tape<T> tape(false);
        const auto& h = tape.value(encoder_forward(tape, model, views));
        std::copy(h.data().begin(), h.data().end(), out.raw() + begin * d);
    }
    return out;
}

template <class T>
LatentVector<T> encode(const AutoencoderModel<T>& model, std::string_view s)
{
    std::string_view one[] = {s};
    Tape<T> tape(false);
    const auto& h = tape.value(encoder_forward(tape, model, one));
    return LatentVector<T>(h.data().begin(), h.data().end());
}

/// Greedy argmax over a logit row; ties go to the lowest byte id.
template <class T>
int argmax_byte(const T* row, std::size_t n = kVocabSize)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return static_cast<int>(best);
}

/// Free-running greedy decode of every row of Z; row r emits at most max_lengths[r] bytes
/// and stops at the first terminator.
template <class T>
std::vector<std::string> decode_batch(const AutoencoderModel<T>& model, const Tensor<T>& latents,
                                      std::span<const std::size_t> max_lengths)
{
    const std::size_t B = latents.rows();
    const std::size_t d = model.latent_size();
    const std::size_t w = model.kernel_width();
    const std::size_t l = model.config().embedding_size;
    if (latents.cols() != d) {
        throw ShapeError("decode: latent width " + std::to_string(latents.cols()) + " != model latent size "
                         + std::to_string(d));
    }
    if (max_lengths.size() != B) throw ShapeError("decode: one max length per latent row required");
    for (T x : latents.data())
        if (!std::isfinite(x)) throw InvalidInput("decode: non-finite latent entry");

    std::size_t S = 0;
    for (auto m : max_lengths) S = std::max(S, ceil_div(m, w));
    std::vector<std::string> out(B);
    std::vector<std::uint8_t> done(B, 0);
    for (std::size_t b = 0; b < B; ++b) done[b] = max_lengths[b] == 0;

    Tape<T> tape(false);
    Var h = tape.constant_ref(latents);
    Var latent_proj = tape.matmul(h, tape.param(model.decoder_latent));
    std::vector<int> prev(B * w, kStartByte);
    for (std::size_t t = 0; t < S; ++t) {
        if (std::all_of(done.begin(), done.end(), [](auto x) { return x != 0; })) break;
        Var x = tape.reshape(tape.gather_rows(tape.param(model.embedding), prev), B, w * l);
        h = decoder_step(tape, model, x, latent_proj, h);
        const auto& logits = tape.value(model.deconv(tape, h));
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < w; ++j) {
                const int c = argmax_byte(logits.raw() + (b * w + j) * kVocabSize);
                prev[b * w + j] = c;
                if (done[b]) continue;
                if (c == kPadByte || out[b].size() >= max_lengths[b]) {
                    done[b] = 1;
                    continue;
                }
                out[b].push_back(static_cast<char>(c));
            }
            if (!done[b] && out[b].size() >= max_lengths[b]) done[b] = 1;
        }
    }
    return out;
}

template <class T>
std::string decode(const AutoencoderModel<T>& model, std::span<const T> latent, std::size_t max_length)
{
    Tensor<T> z(Shape{1, latent.size()}, std::vector<T>(latent.begin(), latent.end()));
    const std::size_t caps[] = {max_length};
    return decode_batch(model, z, caps).front();
}

/// Decode cap used when the source string is known: twice its padded length.
inline std::size_t decode_cap(std::size_t source_length, std::size_t kernel_width)
{
    return 2 * kernel_width * ceil_div(source_length, kernel_width);
}

/// Aligned per-character accuracy; overhang of the longer string counts as wrong.
inline double char_accuracy(std::string_view original, std::string_view decoded)
{
    const std::size_t n = std::max(original.size(), decoded.size());
    if (n == 0) return 1.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(original.size(), decoded.size()); ++i) hits += original[i] == decoded[i];
    return double(hits) / double(n);
}

template <class T>
double reconstruction_accuracy(const AutoencoderModel<T>& model, std::span<const std::string> corpus,
                               std::size_t chunk = 256)
{
    if (corpus.empty()) return 0.0;
    double total = 0;
    for (std::size_t begin = 0; begin < corpus.size(); begin += chunk) {
        const std::size_t end = std::min(corpus.size(), begin + chunk);
        std::span<const std::string> part = corpus.subspan(begin, end - begin);
        Tensor<T> z = encode_batch(model, part);
        std::vector<std::size_t> caps;
        for (const auto& s : part) caps.push_back(decode_cap(s.size(), model.kernel_width()));
        auto decoded = decode_batch(model, z, caps);
        for (std::size_t i = 0; i < part.size(); ++i) total += char_accuracy(part[i], decoded[i]);
    }
    return total / double(corpus.size());
}

// ---- training ---------------------------------------------------------------

struct AutoencoderTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 3e-3;
    double clip_norm = 5.0;
    /// Learning rate of the last epoch relative to the first; linear in between.
    double final_lr_fraction = 0.1;
    /// Fraction of epochs trained with full teacher forcing before scheduled sampling starts.
    double teacher_forcing_epochs = 0.5;
    /// Probability of feeding the model's own previous step once scheduled sampling starts.
    double sampling_rate = 0.5;
    std::uint64_t seed = 1;
};

inline void to_json(nlohmann::json& j, const AutoencoderTrainConfig& c)
{
    j = {{"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"clip_norm", c.clip_norm},
         {"final_lr_fraction", c.final_lr_fraction},
         {"teacher_forcing_epochs", c.teacher_forcing_epochs},
         {"sampling_rate", c.sampling_rate},
         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, AutoencoderTrainConfig& c)
{
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
    c.teacher_forcing_epochs = j.value("teacher_forcing_epochs", c.teacher_forcing_epochs);
    c.sampling_rate = j.value("sampling_rate", c.sampling_rate);
    c.seed = j.value("seed", c.seed);
}

struct AutoencoderEpoch {
    std::size_t epoch = 0;
    double mean_loss = 0;
    double holdout_accuracy = 0;
    double sampling_rate = 0;
    double seconds = 0;
};

struct AutoencoderReport {
    std::vector<AutoencoderEpoch> epochs;
    /// Per-batch losses of the first epoch.
    std::vector<double> first_epoch_losses;
};

/// Teacher-forced / scheduled-sampling reconstruction loss: mean per-character
/// cross-entropy over every position up to and including the terminator.
template <class T, class Rng>
Var reconstruction_loss(Tape<T>& tape, const AutoencoderModel<T>& model, Var latent,
                        std::span<const std::string_view> batch, double sampling_rate, Rng& rng)
{
    const std::size_t B = batch.size();
    const std::size_t w = model.kernel_width();
    const std::size_t l = model.config().embedding_size;
    std::vector<std::size_t> steps(B);
    std::size_t S = 0, positions = 0;
    for (std::size_t b = 0; b < B; ++b) {
        steps[b] = ceil_div(batch[b].size() + 1, w);
        S = std::max(S, steps[b]);
        positions += batch[b].size() + 1;
    }
    const T unit = T(1) / T(positions);
    std::bernoulli_distribution use_own(sampling_rate);

    std::vector<int> prev(B * w, kStartByte), targets(B * w);
    std::vector<T> weights(B * w);
    Var h = latent;
    Var latent_proj = tape.matmul(latent, tape.param(model.decoder_latent));
    Var total{};
    bool have_total = false;
    for (std::size_t t = 0; t < S; ++t) {
        Var x = tape.reshape(tape.gather_rows(tape.param(model.embedding), prev), B, w * l);
        h = decoder_step(tape, model, x, latent_proj, h);
        Var logits = tape.reshape(model.deconv(tape, h), B * w, kVocabSize);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t j = 0; j < w; ++j) {
                const std::size_t pos = t * w + j;
                const std::size_t r = b * w + j;
                targets[r] = pos < batch[b].size() ? static_cast<unsigned char>(batch[b][pos]) : kPadByte;
                weights[r] = pos <= batch[b].size() ? unit : T(0);
            }
        }
        Var step_loss = tape.softmax_cross_entropy(logits, targets, weights);
        total = have_total ? tape.add(total, step_loss) : step_loss;
        have_total = true;

        if (t + 1 == S) break;
        const auto& lv = tape.value(logits);
        for (std::size_t b = 0; b < B; ++b) {
            const bool own = sampling_rate > 0 && use_own(rng);
            for (std::size_t j = 0; j < w; ++j) {
                const std::size_t r = b * w + j;
                prev[r] = own ? argmax_byte(lv.raw() + r * kVocabSize) : targets[r];
            }
        }
    }
    return total;
}

/// Batches of similar length: shuffle, sort within windows, then shuffle batch order.
template <class Rng>
std::vector<std::vector<std::size_t>> length_bucketed_batches(std::span<const std::string> corpus,
                                                              std::size_t batch_size, Rng& rng)
{
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t window = batch_size * 16;
    for (std::size_t begin = 0; begin < order.size(); begin += window) {
        auto first = order.begin() + begin;
        auto last = order.begin() + std::min(order.size(), begin + window);
        std::stable_sort(first, last, [&](auto a, auto b) { return corpus[a].size() < corpus[b].size(); });
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size)
        batches.emplace_back(order.begin() + begin, order.begin() + std::min(order.size(), begin + batch_size));
    std::shuffle(batches.begin(), batches.end(), rng);
    return batches;
}

template <class T>
struct TrainedAutoencoder {
    AutoencoderModel<T> model;
    AutoencoderReport report;
};

template <class T>
TrainedAutoencoder<T> train_autoencoder(std::span<const std::string> corpus, std::span<const std::string> holdout,
                                        const AutoencoderConfig& model_cfg, const AutoencoderTrainConfig& cfg,
                                        const std::function<void(const AutoencoderEpoch&)>& on_epoch = {})
{
    if (corpus.empty()) throw InvalidInput("train_autoencoder: empty corpus");
    TrainedAutoencoder<T> out{AutoencoderModel<T>(model_cfg), {}};
    auto& model = out.model;
    for (const auto& s : corpus) model.validate(s);
    for (const auto& s : holdout) model.validate(s);

    std::mt19937_64 rng(cfg.seed);
    Adam<T> opt(AdamOptions{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.clip_norm});
    auto params = model.parameters();
    const std::size_t forced = static_cast<std::size_t>(std::ceil(cfg.teacher_forcing_epochs * double(cfg.epochs)));

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const double rate = epoch < forced ? 0.0 : cfg.sampling_rate;
        const double progress = cfg.epochs > 1 ? double(epoch) / double(cfg.epochs - 1) : 0.0;
        opt.set_learning_rate(cfg.learning_rate * (1.0 - (1.0 - cfg.final_lr_fraction) * progress));
        double loss_sum = 0;
        auto batches = length_bucketed_batches(corpus, cfg.batch_size, rng);
        for (const auto& idx : batches) {
            std::vector<std::string_view> views;
            for (auto i : idx) views.emplace_back(corpus[i]);
            zero_grads(params);
            Tape<T> tape;
            Var z = encoder_forward(tape, model, views);
            Var loss = reconstruction_loss(tape, model, z, views, rate, rng);
            tape.backward(loss);
            opt.step(params, T(1));
            const double lv = tape.value(loss)[0];
            loss_sum += lv;
            if (epoch == 0) out.report.first_epoch_losses.push_back(lv);
        }
        AutoencoderEpoch rep;
        rep.epoch = epoch + 1;
        rep.mean_loss = loss_sum / double(batches.size());
        rep.sampling_rate = rate;
        rep.holdout_accuracy = holdout.empty() ? 0.0 : reconstruction_accuracy(model, holdout);
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.report.epochs.push_back(rep);
        if (on_epoch) on_epoch(rep);
    }
    for (const auto& p : params) p.tensor->drop_grad();
    return out;
}

} // namespace advpath
