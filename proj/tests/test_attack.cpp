#include "advpath/attack.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace advpath;

namespace {

AutoencoderModel<double> small_codec(std::uint64_t seed = 2)
{
    AutoencoderConfig c;
    c.embedding_size = 6;
    c.latent_size = 12;
    c.conv_channels = 12;
    c.max_length = 64;
    c.seed = seed;
    return AutoencoderModel<double>(c);
}

ClassifierModel<double> small_classifier(std::size_t input, std::uint64_t seed = 4)
{
    ClassifierConfig c;
    c.input_size = input;
    c.hidden_size = 6;
    c.heads = 2;
    c.head_hidden = 8;
    c.seed = seed;
    return ClassifierModel<double>(c);
}

Tensor<double> normal_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0)
{
    Tensor<double> t = Tensor<double>::matrix(r, c);
    std::normal_distribution<double> n(0, scale);
    for (auto& x : t.data()) x = n(rng);
    return t;
}

// Bags of real strings, labelled with the classifier's own clean prediction so
// every bag is attackable.
LatentDataset<double> attackable_bags(const ClassifierModel<double>& model, const AutoencoderModel<double>& codec,
                                      std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ch('a', 'z');
    std::uniform_int_distribution<std::size_t> len(3, 14), size(2, 4);
    LatentDataset<double> out;
    for (std::size_t b = 0; b < n; ++b) {
        LatentExample<double> ex;
        ex.paths.resize(size(rng));
        for (auto& p : ex.paths) {
            p = "C:\\";
            for (std::size_t i = len(rng); i > 0; --i) p.push_back(static_cast<char>(ch(rng)));
        }
        ex.latents = encode_batch(codec, std::span<const std::string>(ex.paths));
        ex.label = classify(model, ex.latents).label;
        out.push_back(std::move(ex));
    }
    return out;
}

AttackConfig pgd(double alpha, double eps, Projection p, std::size_t iterations = 20)
{
    AttackConfig c;
    c.method = AttackMethod::pgd;
    c.alpha = alpha;
    c.epsilon = eps;
    c.projection = p;
    c.iterations = iterations;
    return c;
}

AttackConfig fgsm(double step, double max)
{
    AttackConfig c;
    c.method = AttackMethod::fgsm;
    c.epsilon_step = step;
    c.epsilon_max = max;
    return c;
}

} // namespace

TEST(Projection, LinfClampsEveryEntry)
{
    Tensor<double> d(Shape{2, 3}, std::vector<double>{-3, 0.5, 2, 1, -1, 0});
    auto p = project_linf(d, 1.0);
    EXPECT_EQ(p.data()[0], -1.0);
    EXPECT_EQ(p.data()[1], 0.5);
    EXPECT_EQ(p.data()[2], 1.0);
    EXPECT_EQ(ball_norm(p, Projection::linf), 1.0);
    auto again = project_linf(p, 1.0);
    EXPECT_TRUE(std::equal(p.data().begin(), p.data().end(), again.data().begin()));
}

TEST(Projection, L2ScalesOnlyRowsOutsideTheBall)
{
    Tensor<double> d(Shape{2, 2}, std::vector<double>{3, 4, 0.3, 0.4});
    auto p = project_l2(d, 1.0);
    EXPECT_NEAR(p(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(p(0, 1), 0.8, 1e-15);
    EXPECT_EQ(p(1, 0), 0.3);
    EXPECT_EQ(p(1, 1), 0.4);
    EXPECT_NEAR(ball_norm(p, Projection::l2), 1.0, 1e-15);
}

TEST(Projection, L2InFloatNeverLeavesTheBall)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<float> n(0.f, 3.f);
    Tensor<float> d(Shape{2000, 32}, 0.f);
    for (auto& x : d.data()) x = n(rng);
    auto p = project_l2(d, 5.f);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double ss = 0;
        for (float x : p.row(r)) ss += double(x) * double(x);
        EXPECT_LE(std::sqrt(ss), 5.0);
        EXPECT_GT(std::sqrt(ss), 5.0 - 1e-5);
    }
}

TEST(Projection, RejectsNonPositiveRadius)
{
    Tensor<double> d(Shape{1, 1}, 1.0);
    EXPECT_THROW(project_linf(d, 0.0), std::invalid_argument);
    EXPECT_THROW(project_l2(d, -1.0), std::invalid_argument);
    auto none = project(d, Projection::none, 0.5);
    EXPECT_EQ(none[0], 1.0);
}

TEST(LatentGradient, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(1);
    auto model = small_classifier(5);
    auto z = normal_matrix(rng, 3, 5);
    auto g = latent_loss_gradient(model, z, kMalicious);
    const double h = 1e-5;
    for (std::size_t i = 0; i < z.size(); ++i) {
        auto zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        const double num =
            (latent_loss_gradient(model, zp, kMalicious).loss - latent_loss_gradient(model, zm, kMalicious).loss) / (2 * h);
        EXPECT_NEAR(g.grad[i], num, 1e-8 * std::max(1.0, std::abs(num)));
    }
    for (const auto& p : model.parameters()) EXPECT_FALSE(p.tensor->has_grad()) << p.name;
}

TEST(LatentPgd, IteratesStayInTheBallAndRaiseTheLoss)
{
    std::mt19937_64 rng(2);
    auto model = small_classifier(5);
    for (auto proj : {Projection::linf, Projection::l2}) {
        auto z = normal_matrix(rng, 4, 5);
        const int y = classify(model, z).label;
        auto cfg = pgd(0.5, 0.3, proj, 10);
        auto delta = latent_pgd(model, z, y, cfg);
        EXPECT_LE(ball_norm(delta, proj), 0.3 + 1e-12);
        EXPECT_GT(latent_loss_gradient(model, added(z, delta), y).loss, latent_loss_gradient(model, z, y).loss);
    }
}

TEST(AttackConfig, FgsmRoundCountAndLabels)
{
    EXPECT_EQ(fgsm(0.01, 1.0).fgsm_rounds(), 100u);
    EXPECT_EQ(fgsm(0.25, 1.0).fgsm_rounds(), 4u);
    EXPECT_EQ(fgsm(0.3, 1.0).fgsm_rounds(), 3u);
    EXPECT_EQ(fgsm(0.5, 0.5).fgsm_rounds(), 1u);
    EXPECT_EQ(fgsm(0.01, 1.0).label(), "FGSM(delta: 0.01, max_eps: 1.00)");
    EXPECT_EQ(pgd(2, 10, Projection::linf).label(), "PGD(alpha: 2.00, eps: 10.00, projection: linf)");
}

TEST(AttackConfig, ValidationNamesTheBadField)
{
    auto expect_bad = [](const AttackConfig& c, const std::string& field) {
        try {
            c.validate();
            ADD_FAILURE() << "expected rejection of " << field;
        } catch (const std::invalid_argument& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    expect_bad(pgd(0, 1, Projection::linf), "alpha");
    expect_bad(pgd(1, -1, Projection::linf), "epsilon");
    expect_bad(pgd(1, 1, Projection::linf, 0), "iterations");
    expect_bad(fgsm(0, 1), "epsilon_step");
    expect_bad(fgsm(0.5, 0.1), "epsilon_max");
}

TEST(Attack, AlreadyMisclassifiedBagsAreReturnedUntouched)
{
    auto codec = small_codec();
    auto model = small_classifier(codec.latent_size());
    auto bags = attackable_bags(model, codec, 3, 5);
    for (auto& ex : bags) {
        ex.label = 1 - ex.label;
        for (const auto& cfg : {pgd(1, 1, Projection::linf), fgsm(0.1, 0.5)}) {
            auto r = run_attack(model, codec, ex, cfg);
            EXPECT_EQ(r.outcome, AttackOutcome::already_misclassified);
            EXPECT_EQ(r.adversarial, ex.paths);
            EXPECT_EQ(r.gradient_evaluations, 0u);
        }
    }
}

TEST(Attack, FgsmTakesOneGradientAndMovesAlongItsSign)
{
    auto codec = small_codec();
    auto model = small_classifier(codec.latent_size());
    auto bags = attackable_bags(model, codec, 10, 6);
    for (const auto& ex : bags) {
        auto cfg = fgsm(0.05, 0.5);
        auto r = fgsm_attack(model, codec, ex, cfg);
        EXPECT_EQ(r.gradient_evaluations, 1u);
        EXPECT_LE(r.iterations, cfg.fgsm_rounds());
        if (r.outcome != AttackOutcome::success) continue;
        auto g = latent_loss_gradient(model, ex.latents, ex.label);
        for (std::size_t i = 0; i < g.grad.size(); ++i) {
            const double s = (g.grad[i] > 0) - (g.grad[i] < 0);
            EXPECT_NEAR(r.perturbation[i], s * r.epsilon_used, 1e-12);
        }
    }
}

TEST(Attack, EverySuccessIsMisclassifiedAfterDecodeAndReencode)
{
    auto codec = small_codec(3);
    auto model = small_classifier(codec.latent_size(), 8);
    auto bags = attackable_bags(model, codec, 30, 7);
    std::size_t successes = 0;
    for (const auto& cfg : {pgd(2, 10, Projection::linf), pgd(0.5, 1, Projection::l2), fgsm(0.1, 1.0)}) {
        for (const auto& ex : bags) {
            auto r = run_attack(model, codec, ex, cfg);
            ASSERT_NE(r.outcome, AttackOutcome::already_misclassified);
            if (cfg.method == AttackMethod::pgd) {
                EXPECT_LE(r.max_ball_norm, cfg.epsilon + 1e-9);
                EXPECT_LE(r.iterations, cfg.iterations);
                EXPECT_EQ(r.losses.size(), r.iterations);
            }
            if (r.outcome != AttackOutcome::success) continue;
            ++successes;
            ASSERT_EQ(r.adversarial.size(), ex.paths.size());
            auto again = classify_strings(model, codec, std::span<const std::string>(r.adversarial));
            ASSERT_TRUE(again.has_value());
            EXPECT_NE(*again, ex.label);
            const bool any_empty =
                std::any_of(r.adversarial.begin(), r.adversarial.end(), [](const auto& s) { return s.empty(); });
            EXPECT_EQ(r.empty_instance, any_empty);
        }
    }
    EXPECT_GT(successes, 0u);
}

TEST(Attack, ThreadCountDoesNotChangeResults)
{
    auto codec = small_codec();
    auto model = small_classifier(codec.latent_size());
    auto bags = attackable_bags(model, codec, 12, 9);
    auto cfg = pgd(1, 3, Projection::linf, 8);
    auto one = batch_attack(model, codec, bags, cfg, 1);
    auto four = batch_attack(model, codec, bags, cfg, 4);
    std::ostringstream a, b;
    write_trace(a, one.results, cfg);
    write_trace(b, four.results, cfg);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(one.summary.successes, four.summary.successes);
}

TEST(Summary, EmptyDenominatorIsReportedAsNotAvailable)
{
    std::vector<AttackResult<double>> results(3);
    for (auto& r : results) r.outcome = AttackOutcome::already_misclassified;
    auto s = summarize(results, "x");
    EXPECT_FALSE(s.success_rate.has_value());
    EXPECT_FALSE(s.mean_rld.has_value());
    EXPECT_EQ(rate_text(s.success_rate), "n/a");
    EXPECT_EQ(s.already_misclassified, 3u);
}

TEST(Summary, RatesAndRldFollowTheOutcomes)
{
    std::vector<AttackResult<double>> results(4);
    results[0].outcome = AttackOutcome::already_misclassified;
    results[1].outcome = AttackOutcome::failure;
    results[2].outcome = AttackOutcome::success;
    results[2].original = {"abcd", "xy"};
    results[2].adversarial = {"abed", "xy"};
    results[3].outcome = AttackOutcome::success;
    results[3].original = {"abcd"};
    results[3].adversarial = {""};
    results[3].empty_instance = true;
    auto s = summarize(results, "x");
    ASSERT_TRUE(s.success_rate.has_value());
    EXPECT_DOUBLE_EQ(*s.success_rate, 2.0 / 3.0);
    EXPECT_EQ(s.empty_instance_successes, 1u);
    ASSERT_EQ(s.rlds.size(), 2u);
    EXPECT_DOUBLE_EQ(s.rlds[0], bag_rld(std::span<const std::string>(results[2].original),
                                        std::span<const std::string>(results[2].adversarial)).value);
    EXPECT_DOUBLE_EQ(s.rlds[1], 1.0);
    EXPECT_DOUBLE_EQ(*s.mean_rld, (s.rlds[0] + s.rlds[1]) / 2);
}

TEST(Trace, OneParsableLinePerBag)
{
    auto codec = small_codec();
    auto model = small_classifier(codec.latent_size());
    auto bags = attackable_bags(model, codec, 4, 10);
    auto cfg = fgsm(0.2, 1.0);
    auto out = batch_attack(model, codec, bags, cfg);
    std::ostringstream os;
    write_trace(os, out.results, cfg);
    std::istringstream is(os.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j.at("original").size(), bags[n].paths.size());
        EXPECT_EQ(j.at("config").at("method"), "fgsm");
        ++n;
    }
    EXPECT_EQ(n, bags.size());
}

TEST(Trace, NonUtf8BytesSurviveAsLatin1)
{
    std::string raw = "a\xff\x80z";
    auto text = latin1_to_utf8(raw);
    auto parsed = nlohmann::json::parse(nlohmann::json(text).dump()).get<std::string>();
    EXPECT_EQ(parsed, "a\xc3\xbf\xc2\x80z");
    EXPECT_EQ(latin1_to_utf8(std::string_view("C:\\x.dll")), "C:\\x.dll");
}
