#include "gradient_cases.hpp"

#include "advpath/checkpoint.hpp"
#include "advpath/kernels.hpp"
#include "advpath/optim.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace advpath {
namespace {

using testing::random_matrix;

// Naive triple loop, the reference for the tiled kernel.
std::vector<double> naive_gemm(const std::vector<double>& a, const std::vector<double>& b, std::size_t m, std::size_t k,
                               std::size_t n)
{
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
    return c;
}

TEST(Gemm, MatchesNaiveProductOnAwkwardShapes)
{
    std::mt19937_64 rng(3);
    for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {3, 7, 5}, {4, 16, 33}, {9, 130, 67}, {17, 5, 300}}) {
        auto a = random_matrix(rng, m, k);
        auto b = random_matrix(rng, k, n);
        std::vector<double> c(m * n);
        kernels::gemm(a.raw(), b.raw(), c.data(), m, k, n);
        auto ref = naive_gemm({a.data().begin(), a.data().end()}, {b.data().begin(), b.data().end()}, m, k, n);
        for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], ref[i], 1e-12 * (1 + std::abs(ref[i])));
    }
}

TEST(Gemm, RowsDoNotDependOnTheirNeighbours)
{
    std::mt19937_64 rng(5);
    const std::size_t m = 11, k = 37, n = 70;
    Tensor<float> a = random_matrix(rng, m, k).cast<float>();
    Tensor<float> b = random_matrix(rng, k, n).cast<float>();
    std::vector<float> all(m * n), one(n);
    kernels::gemm(a.raw(), b.raw(), all.data(), m, k, n);
    for (std::size_t r = 0; r < m; ++r) {
        kernels::gemm(a.raw() + r * k, b.raw(), one.data(), 1, k, n);
        for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(all[r * n + j], one[j]) << "row " << r;
    }
}

TEST(Tensor, RejectsZeroSizedDimensions)
{
    EXPECT_THROW(Tensor<float>(Shape{0, 3}), ShapeError);
    EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>(3)), ShapeError);
}

// Each op is checked through a scalar read-out sum(f(x) .* R).
struct OpCase {
    const char* name;
    std::function<Var(Tape<double>&, Var a, Var b)> f;
    std::size_t ar, ac, br, bc;
    double step = 1e-2; // smaller where a kink (max) is near
};

class TapeOps : public ::testing::TestWithParam<OpCase> {};

TEST_P(TapeOps, GradientsMatchFiniteDifferences)
{
    const auto& op = GetParam();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        auto a = random_matrix(rng, op.ar, op.ac);
        auto b = random_matrix(rng, op.br, op.bc);
        Tensor<double> readout;
        {
            Tape<double> probe(false);
            auto shape = probe.value(op.f(probe, probe.constant_ref(a), probe.constant_ref(b))).shape();
            readout = random_matrix(rng, shape[0], shape.size() > 1 ? shape[1] : 1);
            readout.reshape(shape);
        }
        LossClosure<double> loss = [&](Tape<double>& t) {
            return t.sum(t.mul(op.f(t, t.constant_ref(a), t.constant_ref(b)), t.constant_ref(readout)));
        };
        EXPECT_LT(finite_difference_check(a, loss, op.step), 1e-6) << op.name << " seed " << seed << " (a)";
        EXPECT_LT(finite_difference_check(b, loss, op.step), 1e-6) << op.name << " seed " << seed << " (b)";
    }
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, TapeOps,
    ::testing::Values(
        OpCase{"matmul", [](Tape<double>& t, Var a, Var b) { return t.matmul(a, b); }, 3, 4, 4, 5},
        OpCase{"add", [](Tape<double>& t, Var a, Var b) { return t.add(a, b); }, 3, 4, 3, 4},
        OpCase{"add_row_broadcast", [](Tape<double>& t, Var a, Var b) { return t.add(a, b); }, 3, 4, 1, 4},
        OpCase{"sub_row_broadcast", [](Tape<double>& t, Var a, Var b) { return t.sub(a, b); }, 3, 4, 1, 4},
        OpCase{"mul", [](Tape<double>& t, Var a, Var b) { return t.mul(a, b); }, 2, 5, 2, 5},
        OpCase{"affine_tanh", [](Tape<double>& t, Var a, Var b) { return t.add(t.tanh(t.affine(a, 0.7, -0.2)), b); }, 2, 3, 2, 3},
        OpCase{"sigmoid", [](Tape<double>& t, Var a, Var b) { return t.mul(t.sigmoid(a), b); }, 3, 3, 3, 3},
        OpCase{"softmax_rows", [](Tape<double>& t, Var a, Var b) { return t.mul(t.softmax_rows(a), b); }, 3, 6, 3, 6},
        OpCase{"transpose", [](Tape<double>& t, Var a, Var b) { return t.matmul(t.transpose(a), b); }, 4, 3, 4, 2},
        OpCase{"concat_cols",
               [](Tape<double>& t, Var a, Var b) {
                   Var parts[] = {a, b, a};
                   return t.concat_cols(parts);
               },
               3, 2, 3, 4},
        OpCase{"concat_rows",
               [](Tape<double>& t, Var a, Var b) {
                   Var parts[] = {b, a};
                   return t.concat_rows(parts);
               },
               2, 4, 3, 4},
        OpCase{"slices",
               [](Tape<double>& t, Var a, Var b) { return t.mul(t.slice_rows(a, 1, 3), t.slice_cols(b, 2, 5)); }, 4, 3, 2, 6},
        OpCase{"reshape", [](Tape<double>& t, Var a, Var b) { return t.add(t.reshape(a, 3, 4), b); }, 2, 6, 3, 4},
        OpCase{"gather_rows",
               [](Tape<double>& t, Var a, Var b) {
                   const int ids[] = {2, 0, 2, 1};
                   return t.mul(t.gather_rows(a, ids), b);
               },
               3, 3, 4, 3},
        OpCase{"blend_rows",
               [](Tape<double>& t, Var a, Var b) {
                   const std::uint8_t take[] = {1, 0, 1};
                   return t.blend_rows(a, b, take);
               },
               3, 2, 3, 2},
        OpCase{"reductions",
               [](Tape<double>& t, Var a, Var b) {
                   Var parts[] = {t.mean_rows(a), t.max_rows(a), t.reshape(t.affine(t.l2_norm(b), 1, 0), 1, 1),
                                  t.reshape(t.mean(b), 1, 1)};
                   return t.concat_cols(parts);
               },
               4, 3, 2, 3, 1e-3},
        OpCase{"softmax_cross_entropy",
               [](Tape<double>& t, Var a, Var b) {
                   const int y[] = {1, 0, 2};
                   const double w[] = {1.0, 0.5, 2.0};
                   return t.add(t.reshape(t.softmax_cross_entropy(a, y, w), 1, 1), t.reshape(t.sum(b), 1, 1));
               },
               3, 3, 1, 2},
        OpCase{"cross_entropy",
               [](Tape<double>& t, Var a, Var b) {
                   const int y[] = {0, 2};
                   const double w[] = {1.0, 1.0};
                   return t.add(t.reshape(t.cross_entropy(t.softmax_rows(a), y, w), 1, 1), t.reshape(t.sum(b), 1, 1));
               },
               2, 3, 1, 1}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(Tape, SignPassesNoGradient)
{
    Tensor<double> x(Shape{1, 3}, std::vector<double>{0.3, -0.2, 0.0});
    Tape<double> t;
    Var v = t.variable(x);
    Var s = t.sign(v);
    EXPECT_EQ(t.value(s).data()[0], 1.0);
    EXPECT_EQ(t.value(s).data()[1], -1.0);
    EXPECT_EQ(t.value(s).data()[2], 0.0);
    t.backward(t.sum(t.add(s, v)));
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Tape, BackwardRequiresScalarOnRecordingTape)
{
    Tensor<double> x(Shape{2, 2}, 1.0);
    Tape<double> t;
    EXPECT_THROW(t.backward(t.tanh(t.variable(x))), ShapeError);
    Tape<double> off(false);
    EXPECT_THROW(off.backward(off.sum(off.variable(x))), std::logic_error);
}

TEST(Tape, RepeatedBackwardAccumulatesIntoParameters)
{
    Tensor<double> w(Shape{1, 2}, std::vector<double>{0.5, -1.0});
    Tape<double> t;
    Var loss = t.sum(t.mul(t.param(w), t.param(w)));
    t.backward(loss);
    t.backward(loss);
    EXPECT_DOUBLE_EQ(w.grad()[0], 2.0);
    EXPECT_DOUBLE_EQ(w.grad()[1], -4.0);
}

TEST(Tape, FrozenParametersReceiveNoGradient)
{
    Tensor<double> w(Shape{2, 2}, 0.5), x(Shape{1, 2}, 1.0);
    Tape<double> t;
    t.freeze_parameters();
    t.backward(t.sum(t.matmul(t.variable(x), t.param(w))));
    EXPECT_FALSE(w.has_grad());
    EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
}

TEST(Tape, ShapeErrorsNameTheOperation)
{
    Tensor<double> a(Shape{2, 3}, 1.0), b(Shape{4, 5}, 1.0);
    Tape<double> t;
    try {
        t.matmul(t.constant_ref(a), t.constant_ref(b));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("(2x3)"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("(4x5)"), std::string::npos) << e.what();
    }
}

TEST(Tape, MaxRowsAndMeanRowsValues)
{
    Tensor<double> a(Shape{3, 2}, std::vector<double>{1, 5, 4, -2, 0, 3});
    Tape<double> t;
    const Var vmx = t.max_rows(t.constant_ref(a));
    const Var vmn = t.mean_rows(t.constant_ref(a));
    const auto& mx = t.value(vmx);
    const auto& mn = t.value(vmn);
    EXPECT_EQ(mx[0], 4);
    EXPECT_EQ(mx[1], 5);
    EXPECT_DOUBLE_EQ(mn[0], 5.0 / 3);
    EXPECT_DOUBLE_EQ(mn[1], 2.0);
}

// Layer checks: every trainable layer, 20 seeds each.
class LayerGradients : public ::testing::TestWithParam<std::size_t> {};

TEST_P(LayerGradients, RelativeErrorWithinTolerance)
{
    const auto c = testing::gradient_cases().at(GetParam());
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        EXPECT_LE(c.worst_error(seed), 1e-4) << c.layer << " seed " << seed;
}

INSTANTIATE_TEST_SUITE_P(AllLayers, LayerGradients, ::testing::Range<std::size_t>(0, testing::gradient_cases().size()),
                         [](const auto& info) {
                             std::string n = testing::gradient_cases()[info.param].layer;
                             for (auto& ch : n)
                                 if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
                             return n;
                         });

TEST(Optimizers, SgdAppliesScaledGradientExactly)
{
    Tensor<double> w(Shape{1, 2}, std::vector<double>{1.0, 2.0});
    w.grad()[0] = 4.0;
    w.grad()[1] = -2.0;
    Sgd<double> sgd(0.1);
    sgd.step({{"w", &w}}, 0.5);
    EXPECT_DOUBLE_EQ(w[0], 1.0 - 0.1 * 2.0);
    EXPECT_DOUBLE_EQ(w[1], 2.0 + 0.1 * 1.0);
}

TEST(Optimizers, AdamFirstStepMovesByLearningRate)
{
    Tensor<double> w(Shape{1, 2}, std::vector<double>{0.0, 0.0});
    w.grad()[0] = 3.0;
    w.grad()[1] = -0.01;
    Adam<double> adam(AdamOptions{0.01, 0.9, 0.999, 1e-12, 0.0});
    adam.step({{"w", &w}}, 1.0);
    EXPECT_NEAR(w[0], -0.01, 1e-9);
    EXPECT_NEAR(w[1], 0.01, 1e-9);
}

TEST(Checkpoint, RoundTripsBothPrecisions)
{
    const auto dir = std::filesystem::temp_directory_path() / "advpath_ckpt_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(9);
    auto w = random_matrix(rng, 3, 4);
    Tensor<float> f = random_matrix(rng, 2, 5).cast<float>();
    save_checkpoint<double>((dir / "d.ckpt").string(), "test", {{"k", 1}}, {{"w", &w}});
    save_checkpoint<float>((dir / "f.ckpt").string(), "test", {{"k", 2}}, {{"f", &f}});

    Tensor<double> w2(Shape{3, 4});
    Tensor<float> f2(Shape{2, 5});
    auto cd = load_checkpoint((dir / "d.ckpt").string());
    cd.load_into(ParameterList<double>{{"w", &w2}});
    load_checkpoint((dir / "f.ckpt").string()).load_into(ParameterList<float>{{"f", &f2}});
    EXPECT_EQ(cd.kind, "test");
    EXPECT_EQ(cd.hyperparameters.at("k"), 1);
    EXPECT_TRUE(w == w2);
    EXPECT_TRUE(f == f2);

    Tensor<double> wrong(Shape{4, 3});
    EXPECT_THROW(cd.load_into(ParameterList<double>{{"w", &wrong}}), CheckpointError);
    EXPECT_THROW(cd.load_into(ParameterList<double>{{"missing", &w2}}), CheckpointError);
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles)
{
    const auto dir = std::filesystem::temp_directory_path() / "advpath_ckpt_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
    EXPECT_THROW(load_checkpoint((dir / "junk.ckpt").string()), CheckpointError);
    EXPECT_THROW(load_checkpoint((dir / "absent.ckpt").string()), CheckpointError);

    Tensor<double> w(Shape{8, 8}, 1.0);
    save_checkpoint<double>((dir / "t.ckpt").string(), "test", {}, {{"w", &w}});
    std::filesystem::resize_file(dir / "t.ckpt", std::filesystem::file_size(dir / "t.ckpt") - 9);
    EXPECT_THROW(load_checkpoint((dir / "t.ckpt").string()), CheckpointError);
}

} // namespace
} // namespace advpath
