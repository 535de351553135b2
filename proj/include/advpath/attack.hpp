#pragma once

// Latent-space attacks on the bag classifier. Each candidate perturbation is
// decoded to strings, re-encoded and re-classified; only bags whose generated
// strings fool the classifier count as successes.

#include "advpath/metrics.hpp"
#include "advpath/mil_classifier.hpp"
#include "advpath/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advpath {

enum class AttackMethod { pgd, fgsm };
enum class Projection { linf, l2, none };

inline std::string to_string(AttackMethod m) { return m == AttackMethod::pgd ? "pgd" : "fgsm"; }

inline std::string to_string(Projection p)
{
    switch (p) {
    case Projection::linf: return "linf";
    case Projection::l2: return "l2";
    default: return "none";
    }
}

inline AttackMethod parse_attack_method(const std::string& s)
{
    if (s == "pgd" || s == "modified-pgd") return AttackMethod::pgd;
    if (s == "fgsm" || s == "modified-fgsm") return AttackMethod::fgsm;
    throw std::invalid_argument("unknown attack method '" + s + "' (expected pgd or fgsm)");
}

inline Projection parse_projection(const std::string& s)
{
    if (s == "linf") return Projection::linf;
    if (s == "l2") return Projection::l2;
    if (s == "none") return Projection::none;
    throw std::invalid_argument("unknown projection '" + s + "' (expected linf, l2 or none)");
}

struct AttackConfig {
    AttackMethod method = AttackMethod::pgd;
    double alpha = 2.0;
    double epsilon = 10.0;
    double epsilon_max = 1.0;
    double epsilon_step = 0.01;
    std::size_t iterations = 50;
    Projection projection = Projection::linf;
    double gamma = 1e-12;

    void validate() const
    {
        auto bad = [](const std::string& what) { throw std::invalid_argument("attack config: " + what); };
        if (method == AttackMethod::pgd) {
            if (!(alpha > 0)) bad("alpha must be > 0");
            if (!(epsilon > 0)) bad("epsilon must be > 0");
            if (iterations < 1) bad("iterations must be >= 1");
        } else {
            if (!(epsilon_step > 0)) bad("epsilon_step must be > 0");
            if (!(epsilon_max >= epsilon_step)) bad("epsilon_max must be >= epsilon_step");
        }
        if (!(gamma >= 0)) bad("gamma must be >= 0");
    }

    /// Row label used in result tables.
    std::string label() const
    {
        char buf[128];
        if (method == AttackMethod::fgsm)
            std::snprintf(buf, sizeof buf, "FGSM(delta: %.2f, max_eps: %.2f)", epsilon_step, epsilon_max);
        else
            std::snprintf(buf, sizeof buf, "PGD(alpha: %.2f, eps: %.2f, projection: %s)", alpha, epsilon,
                          to_string(projection).c_str());
        return buf;
    }

    /// Number of budgets the FGSM sweep visits: eps_step, 2*eps_step, ... up to eps_max.
    std::size_t fgsm_rounds() const
    {
        return static_cast<std::size_t>(std::floor((epsilon_max - epsilon_step) / epsilon_step + 1e-9)) + 1;
    }
};

inline void to_json(nlohmann::json& j, const AttackConfig& c)
{
    j = {{"method", to_string(c.method)},
         {"alpha", c.alpha},
         {"epsilon", c.epsilon},
         {"epsilon_max", c.epsilon_max},
         {"epsilon_step", c.epsilon_step},
         {"iterations", c.iterations},
         {"projection", to_string(c.projection)},
         {"gamma", c.gamma}};
}

inline void from_json(const nlohmann::json& j, AttackConfig& c)
{
    c.method = parse_attack_method(j.value("method", to_string(c.method)));
    c.alpha = j.value("alpha", c.alpha);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.epsilon_max = j.value("epsilon_max", c.epsilon_max);
    c.epsilon_step = j.value("epsilon_step", c.epsilon_step);
    c.iterations = j.value("iterations", c.iterations);
    c.projection = parse_projection(j.value("projection", to_string(c.projection)));
    c.gamma = j.value("gamma", c.gamma);
}

// ---- projections ------------------------------------------------------------

template <class T>
Tensor<T> project_linf(Tensor<T> delta, T eps)
{
    if (!(eps > 0)) throw std::invalid_argument("project_linf: epsilon must be > 0");
    for (auto& x : delta.data()) x = std::clamp(x, -eps, eps);
    return delta;
}

/// Row-wise: each instance perturbation is scaled back onto its own ball.
template <class T>
Tensor<T> project_l2(Tensor<T> delta, T eps)
{
    if (!(eps > 0)) throw std::invalid_argument("project_l2: epsilon must be > 0");
    for (std::size_t r = 0; r < delta.rows(); ++r) {
        auto row = delta.row(r);
        double ss = 0;
        for (T x : row) ss += double(x) * double(x);
        const double norm = std::sqrt(ss);
        if (norm <= double(eps)) continue;
        const std::vector<T> orig(row.begin(), row.end());
        // rounding in T can leave the scaled row a few ulps outside; shrink until it is in
        for (T scale = T(double(eps) / norm);; scale = std::nextafter(scale, T(0))) {
            ss = 0;
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] = orig[j] * scale;
                ss += double(row[j]) * double(row[j]);
            }
            if (std::sqrt(ss) <= double(eps)) break;
        }
    }
    return delta;
}

template <class T>
Tensor<T> project(Tensor<T> delta, Projection p, T eps)
{
    switch (p) {
    case Projection::linf: return project_linf(std::move(delta), eps);
    case Projection::l2: return project_l2(std::move(delta), eps);
    default: return delta;
    }
}

/// Size of delta in the projection's own norm (max |x| or max row L2).
template <class T>
double ball_norm(const Tensor<T>& delta, Projection p)
{
    double out = 0;
    if (p == Projection::l2) {
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            double ss = 0;
            for (T x : delta.row(r)) ss += double(x) * double(x);
            out = std::max(out, std::sqrt(ss));
        }
        return out;
    }
    for (T x : delta.data()) out = std::max(out, std::abs(double(x)));
    return out;
}

// ---- gradients --------------------------------------------------------------

template <class T>
struct LatentGradient {
    double loss = 0;
    Tensor<T> grad;
};

/// Cross-entropy of the classifier on latents Z and its gradient with respect to Z.
/// Classifier parameters are frozen on this tape.
template <class T>
LatentGradient<T> latent_loss_gradient(const ClassifierModel<T>& model, Tensor<T> z, int label)
{
    Tape<T> tape;
    tape.freeze_parameters();
    Var x = tape.variable(z);
    const int targets[] = {label};
    const T ones[] = {T(1)};
    Var loss = tape.softmax_cross_entropy(classifier_logits<T>(tape, model, std::span<const Var>(&x, 1)), targets, ones);
    tape.backward(loss);
    auto g = z.grad();
    return {double(tape.value(loss)[0]), Tensor<T>(z.shape(), std::vector<T>(g.begin(), g.end()))};
}

template <class T>
Tensor<T> added(const Tensor<T>& a, const Tensor<T>& b)
{
    Tensor<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

/// Plain latent-space PGD with no decode check; returns the final perturbation.
template <class T>
Tensor<T> latent_pgd(const ClassifierModel<T>& model, const Tensor<T>& z, int label, const AttackConfig& cfg)
{
    Tensor<T> delta(z.shape(), T(0));
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        auto g = latent_loss_gradient(model, added(z, delta), label);
        double ss = 0;
        for (T x : g.grad.data()) ss += double(x) * double(x);
        const T scale = T(cfg.alpha / (std::sqrt(ss) + cfg.gamma));
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += scale * g.grad[i];
        delta = project(std::move(delta), cfg.projection, T(cfg.epsilon));
    }
    return delta;
}

// ---- decode / verify --------------------------------------------------------

enum class AttackOutcome { already_misclassified, success, failure };

inline std::string to_string(AttackOutcome o)
{
    switch (o) {
    case AttackOutcome::already_misclassified: return "already_misclassified";
    case AttackOutcome::success: return "success";
    default: return "failure";
    }
}

/// Strings a latent bag decodes to, one per row, in row order (may be empty).
template <class T>
std::vector<std::string> decode_bag(const AutoencoderModel<T>& codec, const Tensor<T>& latents,
                                    std::span<const std::string> originals)
{
    std::vector<std::size_t> caps;
    for (const auto& s : originals)
        caps.push_back(std::min(decode_cap(s.size(), codec.kernel_width()), codec.config().max_length));
    return decode_batch(codec, latents, caps);
}

/// The non-empty strings of a decoded bag; these form the re-encoded bag.
inline std::vector<std::string> realizable(std::span<const std::string> decoded)
{
    std::vector<std::string> out;
    for (const auto& s : decoded)
        if (!s.empty()) out.push_back(s);
    return out;
}

/// Label the classifier gives to a bag of strings, or nullopt if nothing is left to classify.
template <class T>
std::optional<int> classify_strings(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec,
                                    std::span<const std::string> strings)
{
    auto kept = realizable(strings);
    if (kept.empty()) return std::nullopt;
    return classify(model, encode_batch(codec, std::span<const std::string>(kept))).label;
}

template <class T>
struct AttackResult {
    AttackOutcome outcome = AttackOutcome::failure;
    int label = kBenign;
    std::vector<std::string> original;
    /// Decoded strings, positionally paired with `original`. Input paths when already misclassified.
    std::vector<std::string> adversarial;
    std::size_t iterations = 0;
    std::size_t gradient_evaluations = 0;
    double epsilon_used = 0;
    /// Final iterate; on failure the last perturbation tried.
    Tensor<T> perturbation;
    std::vector<double> losses;
    /// Largest ball norm reached by any iterate.
    double max_ball_norm = 0;
    bool empty_instance = false;
};

namespace detail {

/// Decodes Z+delta and checks the re-encoded bag; fills `res` on success.
template <class T>
bool verify(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec, const LatentExample<T>& ex,
            const Tensor<T>& delta, AttackResult<T>& res)
{
    auto decoded = decode_bag(codec, added(ex.latents, delta), std::span<const std::string>(ex.paths));
    auto label = classify_strings(model, codec, std::span<const std::string>(decoded));
    if (!label || *label == ex.label) return false;
    res.outcome = AttackOutcome::success;
    res.empty_instance = std::any_of(decoded.begin(), decoded.end(), [](const auto& s) { return s.empty(); });
    res.adversarial = std::move(decoded);
    res.perturbation = delta;
    return true;
}

template <class T>
bool already_wrong(const ClassifierModel<T>& model, const LatentExample<T>& ex, AttackResult<T>& res)
{
    res.label = ex.label;
    res.original = ex.paths;
    if (classify(model, ex.latents).label == ex.label) return false;
    res.outcome = AttackOutcome::already_misclassified;
    res.adversarial = ex.paths;
    return true;
}

} // namespace detail

template <class T>
using IterateObserver = std::function<void(const Tensor<T>& delta)>;

/// Modified PGD: normalized gradient ascent on the latent bag with projection,
/// stopping at the first iterate whose generated strings are misclassified.
/// `on_iterate` sees every projected perturbation.
template <class T>
AttackResult<T> pgd_attack(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec,
                           const LatentExample<T>& ex, const AttackConfig& cfg,
                           const IterateObserver<T>& on_iterate = {})
{
    if (cfg.method != AttackMethod::pgd) throw std::invalid_argument("pgd_attack: config method is not pgd");
    cfg.validate();
    AttackResult<T> res;
    if (detail::already_wrong(model, ex, res)) return res;

    Tensor<T> delta(ex.latents.shape(), T(0));
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        auto g = latent_loss_gradient(model, added(ex.latents, delta), ex.label);
        ++res.gradient_evaluations;
        res.losses.push_back(g.loss);
        double ss = 0;
        for (T x : g.grad.data()) ss += double(x) * double(x);
        const T scale = T(cfg.alpha / (std::sqrt(ss) + cfg.gamma));
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += scale * g.grad[i];
        delta = project(std::move(delta), cfg.projection, T(cfg.epsilon));
        if (on_iterate) on_iterate(delta);
        res.max_ball_norm = std::max(res.max_ball_norm, ball_norm(delta, cfg.projection));
        res.iterations = it;
        res.epsilon_used = ball_norm(delta, cfg.projection);
        if (detail::verify(model, codec, ex, delta, res)) return res;
    }
    res.outcome = AttackOutcome::failure;
    res.perturbation = std::move(delta);
    return res;
}

/// Modified FGSM: one gradient at the clean latents, then a sweep over
/// budgets eps_step, 2*eps_step, ... <= eps_max along its sign.
template <class T>
AttackResult<T> fgsm_attack(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec,
                            const LatentExample<T>& ex, const AttackConfig& cfg)
{
    if (cfg.method != AttackMethod::fgsm) throw std::invalid_argument("fgsm_attack: config method is not fgsm");
    cfg.validate();
    AttackResult<T> res;
    if (detail::already_wrong(model, ex, res)) return res;

    auto g = latent_loss_gradient(model, ex.latents, ex.label);
    res.gradient_evaluations = 1;
    res.losses.push_back(g.loss);
    Tensor<T> direction = g.grad;
    for (auto& x : direction.data()) x = T((x > 0) - (x < 0));

    const std::size_t rounds = cfg.fgsm_rounds();
    for (std::size_t r = 0; r < rounds; ++r) {
        const double eps = cfg.epsilon_step * double(r + 1);
        Tensor<T> delta = direction;
        for (auto& x : delta.data()) x *= T(eps);
        res.max_ball_norm = std::max(res.max_ball_norm, ball_norm(delta, Projection::linf));
        res.iterations = r + 1;
        res.epsilon_used = eps;
        if (detail::verify(model, codec, ex, delta, res)) return res;
        if (r + 1 == rounds) res.perturbation = std::move(delta);
    }
    res.outcome = AttackOutcome::failure;
    return res;
}

template <class T>
AttackResult<T> run_attack(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec,
                           const LatentExample<T>& ex, const AttackConfig& cfg,
                           const IterateObserver<T>& on_iterate = {})
{
    return cfg.method == AttackMethod::pgd ? pgd_attack(model, codec, ex, cfg, on_iterate)
                                           : fgsm_attack(model, codec, ex, cfg);
}

// ---- batches ----------------------------------------------------------------

struct AttackSummary {
    std::string label;
    std::size_t bags = 0;
    std::size_t already_misclassified = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    std::size_t empty_instance_successes = 0;
    /// successes / (successes + failures); empty when no bag was attackable.
    std::optional<double> success_rate;
    /// Mean bag RLD over successes; empty without successes.
    std::optional<double> mean_rld;
    double rld_std = 0;
    std::vector<double> rlds;
};

inline std::string rate_text(const std::optional<double>& v, int digits = 4)
{
    return v ? format_fixed(*v, digits) : std::string("n/a");
}

template <class T>
AttackSummary summarize(const std::vector<AttackResult<T>>& results, const std::string& label)
{
    AttackSummary s;
    s.label = label;
    s.bags = results.size();
    for (const auto& r : results) {
        switch (r.outcome) {
        case AttackOutcome::already_misclassified: ++s.already_misclassified; break;
        case AttackOutcome::failure: ++s.failures; break;
        case AttackOutcome::success:
            ++s.successes;
            s.empty_instance_successes += r.empty_instance;
            s.rlds.push_back(
                bag_rld(std::span<const std::string>(r.original), std::span<const std::string>(r.adversarial)).value);
            break;
        }
    }
    if (s.successes + s.failures > 0) s.success_rate = double(s.successes) / double(s.successes + s.failures);
    if (!s.rlds.empty()) {
        auto ms = mean_std(std::span<const double>(s.rlds));
        s.mean_rld = ms.mean;
        s.rld_std = ms.std;
    }
    return s;
}

template <class T>
struct BatchAttack {
    std::vector<AttackResult<T>> results;
    AttackSummary summary;
};

template <class T>
BatchAttack<T> batch_attack(const ClassifierModel<T>& model, const AutoencoderModel<T>& codec,
                            const LatentDataset<T>& bags, const AttackConfig& cfg, std::size_t threads = 1)
{
    if (bags.empty()) throw std::invalid_argument("batch_attack: no bags");
    cfg.validate();
    BatchAttack<T> out;
    out.results.resize(bags.size());
    parallel_for(bags.size(), threads, [&](std::size_t i) { out.results[i] = run_attack(model, codec, bags[i], cfg); });
    out.summary = summarize(out.results, cfg.label());
    return out;
}

/// Bytes as Latin-1 code points: decoded strings need not be valid UTF-8, and this
/// keeps every byte recoverable from the JSON text.
inline std::string latin1_to_utf8(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back(static_cast<char>(0xC0 | (c >> 6)));
            out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
        }
    }
    return out;
}

inline std::vector<std::string> latin1_to_utf8(std::span<const std::string> v)
{
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(latin1_to_utf8(s));
    return out;
}

/// One JSON line per attacked bag.
template <class T>
void write_trace(std::ostream& os, const std::vector<AttackResult<T>>& results, const AttackConfig& cfg)
{
    nlohmann::json echo = cfg;
    for (const auto& r : results) {
        nlohmann::json j = {{"config", echo},
                            {"label", r.label},
                            {"outcome", to_string(r.outcome)},
                            {"original", latin1_to_utf8(std::span<const std::string>(r.original))},
                            {"adversarial", latin1_to_utf8(std::span<const std::string>(r.adversarial))},
                            {"iterations", r.iterations},
                            {"epsilon_used", r.epsilon_used},
                            {"losses", r.losses},
                            {"empty_instance", r.empty_instance}};
        if (r.outcome == AttackOutcome::success)
            j["rld"] = bag_rld(std::span<const std::string>(r.original), std::span<const std::string>(r.adversarial)).value;
        os << j.dump() << '\n';
    }
}

inline MethodPoint method_point(const AttackSummary& s)
{
    return {s.label, s.success_rate.value_or(0.0), s.mean_rld.value_or(0.0), 0.0, s.rld_std};
}

} // namespace advpath
