#include "advpath/string_codec.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace advpath;

namespace {

AutoencoderConfig small_config(std::uint64_t seed = 7)
{
    AutoencoderConfig c;
    c.embedding_size = 8;
    c.latent_size = 16;
    c.conv_channels = 16;
    c.kernel_width = 5;
    c.max_length = 64;
    c.seed = seed;
    return c;
}

std::vector<std::string> toy_paths()
{
    std::vector<std::string> out;
    const char* dirs[] = {"C:\\Windows\\", "C:\\Temp\\", "D:\\data\\"};
    const char* stems[] = {"a", "bb", "core", "setup", "x9", "readme"};
    const char* exts[] = {".dll", ".exe", ".txt"};
    for (auto* d : dirs)
        for (auto* s : stems)
            for (auto* e : exts) out.push_back(std::string(d) + s + e);
    return out;
}

} // namespace

TEST(Encoder, RejectsEmptyAndOverlongStrings)
{
    AutoencoderModel<float> m(small_config());
    EXPECT_THROW(encode(m, ""), InvalidInput);
    EXPECT_THROW(encode(m, std::string(65, 'a')), InvalidInput);
    EXPECT_NO_THROW(encode(m, std::string(64, 'a')));
}

TEST(Encoder, BatchedEncodingEqualsSingleEncodingBitwise)
{
    AutoencoderModel<float> m(small_config());
    std::vector<std::string> batch = {"a", "C:\\Windows\\system32\\kernel32.dll", "abcde", "abcdef", std::string(64, 'z')};
    Tensor<float> z = encode_batch(m, std::span<const std::string>(batch));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto one = encode(m, batch[i]);
        for (std::size_t j = 0; j < one.size(); ++j) ASSERT_EQ(z(i, j), one[j]) << batch[i];
    }
}

TEST(Encoder, CompanionLengthsDoNotLeakThroughPadding)
{
    AutoencoderModel<double> m(small_config(11));
    const std::string s = "C:\\Temp\\abc.ini";
    std::vector<std::string> with_short = {s, "x"};
    std::vector<std::string> with_long = {s, std::string(60, 'q')};
    Tensor<double> a = encode_batch(m, std::span<const std::string>(with_short));
    Tensor<double> b = encode_batch(m, std::span<const std::string>(with_long));
    for (std::size_t j = 0; j < m.latent_size(); ++j) EXPECT_EQ(a(0, j), b(0, j));
}

TEST(Encoder, LatentEntriesLieInTheOpenUnitBall)
{
    AutoencoderModel<double> m(small_config());
    for (double x : encode(m, "C:\\Program Files\\app\\main.exe")) {
        EXPECT_GT(x, -1.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(Decoder, OutputNeverExceedsItsCap)
{
    AutoencoderModel<float> m(small_config(3));
    std::mt19937_64 rng(1);
    std::normal_distribution<float> n(0, 2);
    Tensor<float> z = Tensor<float>::matrix(6, m.latent_size());
    for (auto& x : z.data()) x = n(rng);
    std::vector<std::size_t> caps = {0, 1, 4, 5, 13, 40};
    auto out = decode_batch(m, z, caps);
    ASSERT_EQ(out.size(), caps.size());
    EXPECT_TRUE(out[0].empty());
    for (std::size_t i = 0; i < caps.size(); ++i) {
        EXPECT_LE(out[i].size(), caps[i]);
        EXPECT_EQ(out[i].find('\0'), std::string::npos);
    }
}

TEST(Decoder, BatchedDecodingEqualsSingleDecoding)
{
    AutoencoderModel<float> m(small_config(5));
    std::vector<std::string> src = {"abc", "C:\\Windows\\notepad.exe", "q"};
    Tensor<float> z = encode_batch(m, std::span<const std::string>(src));
    std::vector<std::size_t> caps = {10, 30, 10};
    auto batch = decode_batch(m, z, caps);
    for (std::size_t i = 0; i < src.size(); ++i) {
        std::span<const float> row(z.raw() + i * m.latent_size(), m.latent_size());
        EXPECT_EQ(batch[i], decode(m, row, caps[i]));
    }
}

TEST(Decoder, RejectsMalformedLatents)
{
    AutoencoderModel<float> m(small_config());
    std::vector<std::size_t> one = {10};
    EXPECT_THROW(decode_batch(m, Tensor<float>::matrix(1, m.latent_size() + 1), one), ShapeError);
    Tensor<float> z = Tensor<float>::matrix(1, m.latent_size());
    z[3] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(decode_batch(m, z, one), InvalidInput);
    std::vector<std::size_t> two = {10, 10};
    EXPECT_THROW(decode_batch(m, Tensor<float>::matrix(1, m.latent_size()), two), ShapeError);
}

TEST(Decoder, CapIsTwiceThePaddedLength)
{
    EXPECT_EQ(decode_cap(1, 5), 10u);
    EXPECT_EQ(decode_cap(5, 5), 10u);
    EXPECT_EQ(decode_cap(6, 5), 20u);
    EXPECT_EQ(decode_cap(64, 5), 130u);
}

TEST(Reconstruction, CharAccuracyCountsOverhangAsWrong)
{
    EXPECT_DOUBLE_EQ(char_accuracy("abcd", "abcd"), 1.0);
    EXPECT_DOUBLE_EQ(char_accuracy("abcd", "abxd"), 0.75);
    EXPECT_DOUBLE_EQ(char_accuracy("abcd", "ab"), 0.5);
    EXPECT_DOUBLE_EQ(char_accuracy("ab", "abcd"), 0.5);
    EXPECT_DOUBLE_EQ(char_accuracy("abcd", ""), 0.0);
}

TEST(Training, TeacherForcedLossFallsAndRunsAreReproducible)
{
    const auto corpus = toy_paths();
    AutoencoderTrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 8;
    cfg.learning_rate = 3e-3;
    cfg.teacher_forcing_epochs = 1.0;
    cfg.seed = 4;
    auto a = train_autoencoder<float>(corpus, corpus, small_config(), cfg);
    auto b = train_autoencoder<float>(corpus, corpus, small_config(), cfg);

    ASSERT_EQ(a.report.epochs.size(), 6u);
    for (std::size_t e = 1; e < a.report.epochs.size(); ++e)
        EXPECT_LT(a.report.epochs[e].mean_loss, a.report.epochs[e - 1].mean_loss) << "epoch " << e + 1;

    for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
        EXPECT_EQ(a.report.epochs[e].mean_loss, b.report.epochs[e].mean_loss);
        EXPECT_EQ(a.report.epochs[e].holdout_accuracy, b.report.epochs[e].holdout_accuracy);
    }
    auto pa = a.model.parameters();
    auto pb = b.model.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pa[i].tensor->size(); ++j) ASSERT_EQ((*pa[i].tensor)[j], (*pb[i].tensor)[j]) << pa[i].name;
}

TEST(Training, RejectsOverlongCorpusEntries)
{
    std::vector<std::string> corpus = {"ok", std::string(65, 'a')};
    std::vector<std::string> none;
    EXPECT_THROW(train_autoencoder<float>(corpus, none, small_config(), AutoencoderTrainConfig{}), InvalidInput);
}

TEST(Checkpoint, AutoencoderRoundTripPreservesEncodings)
{
    AutoencoderModel<float> m(small_config(9));
    const auto path = (std::filesystem::temp_directory_path() / "advpath_ae_roundtrip.ckpt").string();
    m.save(path);
    auto back = AutoencoderModel<float>::load(path);
    std::filesystem::remove(path);
    EXPECT_EQ(encode(m, "C:\\x\\y.dll"), encode(back, "C:\\x\\y.dll"));
    EXPECT_EQ(back.config().latent_size, m.config().latent_size);
}
