#pragma once

// Synthetic Windows filepath bags standing in for sandbox file-access logs.
//
// Benign bags draw from application/system templates. Malicious bags mix
// those with a 30-70% share of dropper-style paths (random stems under
// Temp-like directories). Malicious templates drift after a timestamp so the
// temporal test split contains variants never seen during training.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace advpath {

inline constexpr int kBenign = 0;
inline constexpr int kMalicious = 1;

enum class Split { train, test };

struct Bag {
    std::vector<std::string> paths;
    int label = kBenign;
    Split split = Split::train;
    std::int64_t timestamp = 0;

    friend bool operator==(const Bag&, const Bag&) = default;
};

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CorpusSpec {
    std::uint64_t seed = 7;
    std::size_t bag_count = 8000;
    std::size_t bag_size_min = 4;
    std::size_t bag_size_max = 10;
    double malicious_fraction = 0.5;
    double malicious_share_min = 0.3;
    double malicious_share_max = 0.7;
    std::size_t stem_length_min = 3;
    std::size_t stem_length_max = 8;
    std::int64_t timestamp_min = 0;
    std::int64_t timestamp_max = 1'000'000;
    /// Malicious templates switch to the drift pool (with drift_rate) from here on;
    /// also the default train/test cutoff.
    std::int64_t drift_timestamp = 800'000;
    double drift_rate = 0.5;
    /// Probability that a benign bag contains one installer-style temp file.
    double benign_temp_rate = 0.3;
    /// Fraction of bags whose contents are generated as the other class.
    double ambiguous_rate = 0.03;
    std::size_t max_path_length = 64;

    std::vector<std::string> benign_templates = {
        R"(C:\Program Files\{vendor}\{product}\{word}.{ext})",
        R"(C:\Program Files\{vendor}\{product}\{word}_{lang}.dll)",
        R"(C:\Program Files\Common Files\{vendor}\{word}.dll)",
        R"(C:\WINDOWS\system32\{sys}.dll)",
        R"(C:\WINDOWS\system32\{sys}.{ext})",
        R"(C:\Documents and Settings\{user}\Application Data\{vendor}\{word}.{ext})",
        R"(C:\Users\{user}\AppData\Local\{vendor}\{product}\{word}.{ext})",
        R"(C:\WINDOWS\Temp\GUM{hex3}.tmp\goopdateres_{lang}.dll)",
        R"(C:\WINDOWS\Temp\ns{lower}{hex4}.tmp\System.dll)",
        R"(C:\WINDOWS\Fonts\{word}.ttf)",
    };
    std::vector<std::string> benign_temp_templates = {
        R"(C:\WINDOWS\Temp\{stem}.tmp)",
        R"(C:\WINDOWS\Temp\{stem}.log)",
        R"(C:\Documents and Settings\{user}\Local Settings\Temp\{stem}.tmp)",
    };
    std::vector<std::string> malicious_templates = {
        R"(C:\WINDOWS\Temp\{stem}.{mext})",
        R"(C:\WINDOWS\Temp\{stem}.ini)",
        R"(C:\Documents and Settings\{user}\Local Settings\Temp\{stem}.{mext})",
        R"(C:\WINDOWS\system32\{stem}.{mext})",
        R"(C:\Users\{user}\AppData\Roaming\{stem}\{stem}.{mext})",
        R"(C:\WINDOWS\{stem}.{mext})",
    };
    std::vector<std::string> drift_templates = {
        R"(C:\ProgramData\{stem}\{stem}.{mext})",
        R"(C:\Users\{user}\AppData\Local\Temp\{stem}.{mext})",
        R"(C:\WINDOWS\Temp\{stem}.tmp\{stem}.dll)",
        R"(C:\Users\Public\{stem}.{mext})",
    };

    void validate() const
    {
        if (benign_templates.empty() || malicious_templates.empty())
            throw CorpusError("corpus spec: benign and malicious template pools must be non-empty");
        if (!(malicious_fraction > 0 && malicious_fraction < 1))
            throw CorpusError("corpus spec: malicious_fraction must lie in (0, 1)");
        if (bag_count < 2) throw CorpusError("corpus spec: bag_count must be at least 2");
        if (bag_size_min == 0 || bag_size_min > bag_size_max) throw CorpusError("corpus spec: bad bag size range");
        if (stem_length_min == 0 || stem_length_min > stem_length_max)
            throw CorpusError("corpus spec: bad stem length range");
        if (malicious_share_min < 0 || malicious_share_min > malicious_share_max || malicious_share_max > 1)
            throw CorpusError("corpus spec: bad malicious share range");
        if (timestamp_min >= timestamp_max) throw CorpusError("corpus spec: empty timestamp range");
        if (max_path_length == 0) throw CorpusError("corpus spec: max_path_length must be positive");
    }
};

inline void to_json(nlohmann::json& j, const CorpusSpec& s)
{
    j = {{"seed", s.seed},
         {"bag_count", s.bag_count},
         {"bag_size_min", s.bag_size_min},
         {"bag_size_max", s.bag_size_max},
         {"malicious_fraction", s.malicious_fraction},
         {"malicious_share_min", s.malicious_share_min},
         {"malicious_share_max", s.malicious_share_max},
         {"stem_length_min", s.stem_length_min},
         {"stem_length_max", s.stem_length_max},
         {"timestamp_min", s.timestamp_min},
         {"timestamp_max", s.timestamp_max},
         {"drift_timestamp", s.drift_timestamp},
         {"drift_rate", s.drift_rate},
         {"benign_temp_rate", s.benign_temp_rate},
         {"ambiguous_rate", s.ambiguous_rate},
         {"max_path_length", s.max_path_length},
         {"benign_templates", s.benign_templates},
         {"benign_temp_templates", s.benign_temp_templates},
         {"malicious_templates", s.malicious_templates},
         {"drift_templates", s.drift_templates}};
}

inline void from_json(const nlohmann::json& j, CorpusSpec& s)
{
    s.seed = j.value("seed", s.seed);
    s.bag_count = j.value("bag_count", s.bag_count);
    s.bag_size_min = j.value("bag_size_min", s.bag_size_min);
    s.bag_size_max = j.value("bag_size_max", s.bag_size_max);
    s.malicious_fraction = j.value("malicious_fraction", s.malicious_fraction);
    s.malicious_share_min = j.value("malicious_share_min", s.malicious_share_min);
    s.malicious_share_max = j.value("malicious_share_max", s.malicious_share_max);
    s.stem_length_min = j.value("stem_length_min", s.stem_length_min);
    s.stem_length_max = j.value("stem_length_max", s.stem_length_max);
    s.timestamp_min = j.value("timestamp_min", s.timestamp_min);
    s.timestamp_max = j.value("timestamp_max", s.timestamp_max);
    s.drift_timestamp = j.value("drift_timestamp", s.drift_timestamp);
    s.drift_rate = j.value("drift_rate", s.drift_rate);
    s.benign_temp_rate = j.value("benign_temp_rate", s.benign_temp_rate);
    s.ambiguous_rate = j.value("ambiguous_rate", s.ambiguous_rate);
    s.max_path_length = j.value("max_path_length", s.max_path_length);
    s.benign_templates = j.value("benign_templates", s.benign_templates);
    s.benign_temp_templates = j.value("benign_temp_templates", s.benign_temp_templates);
    s.malicious_templates = j.value("malicious_templates", s.malicious_templates);
    s.drift_templates = j.value("drift_templates", s.drift_templates);
}

namespace detail {

class PathSampler {
public:
    PathSampler(const CorpusSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {}

    std::string sample(const std::vector<std::string>& pool)
    {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            std::string p = expand(pool[pick(pool.size())]);
            if (!p.empty() && p.size() <= spec_.max_path_length) return p;
        }
        throw CorpusError("corpus: templates cannot produce paths within max_path_length");
    }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    template <std::size_t N>
    const char* choose(const char* const (&words)[N])
    {
        return words[pick(N)];
    }

    std::string random_chars(std::string_view alphabet, std::size_t n)
    {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(alphabet.size())]);
        return s;
    }

    std::string fill(std::string_view key)
    {
        static const char* const users[] = {"Administrator", "John", "user", "Owner", "admin", "Maria", "dev", "Peter"};
        static const char* const vendors[] = {"Microsoft", "Google", "Mozilla", "Adobe", "Yandex",
                                              "Oracle",    "Apple",  "Intel",   "NVIDIA", "Realtek"};
        static const char* const products[] = {"Update", "Chrome", "Firefox", "Reader", "Java",
                                               "Common", "Drivers", "Office", "Toolbar", "Helper"};
        static const char* const words[] = {"config", "settings", "cache",  "data", "index",
                                            "history", "profile", "update", "common", "main",
                                            "core",   "ui",       "res",    "lang", "plugin"};
        static const char* const sys[] = {"kernel32", "user32", "ntdll", "advapi32", "shell32", "ole32",
                                          "msvcrt",   "comctl32", "gdi32", "ws2_32", "wininet", "crypt32"};
        static const char* const ext[] = {"dll", "dat", "ini", "log", "xml", "db", "txt", "cfg"};
        static const char* const mext[] = {"exe", "scr", "bat", "vbs", "pif", "cmd", "com"};
        static const char* const langs[] = {"en", "uk", "de", "fr", "es", "zh-TW", "en-GB", "ru", "pl", "ja"};
        constexpr std::string_view alnum = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        constexpr std::string_view hex = "0123456789ABCDEF";

        if (key == "user") return choose(users);
        if (key == "vendor") return choose(vendors);
        if (key == "product") return choose(products);
        if (key == "word") return choose(words);
        if (key == "sys") return choose(sys);
        if (key == "ext") return choose(ext);
        if (key == "mext") return choose(mext);
        if (key == "lang") return choose(langs);
        if (key == "hex3") return random_chars(hex, 3);
        if (key == "hex4") return random_chars(hex, 4);
        if (key == "lower") return random_chars("abcdefghijklmnopqrstuvwxyz", 1);
        if (key == "stem") {
            const auto n = std::uniform_int_distribution<std::size_t>(spec_.stem_length_min, spec_.stem_length_max)(rng_);
            return random_chars(alnum, n);
        }
        throw CorpusError("corpus: unknown template placeholder {" + std::string(key) + "}");
    }

    std::string expand(const std::string& tmpl)
    {
        std::string out;
        for (std::size_t i = 0; i < tmpl.size(); ++i) {
            if (tmpl[i] != '{') {
                out.push_back(tmpl[i]);
                continue;
            }
            const auto close = tmpl.find('}', i);
            if (close == std::string::npos) throw CorpusError("corpus: unterminated placeholder in " + tmpl);
            out += fill(std::string_view(tmpl).substr(i + 1, close - i - 1));
            i = close;
        }
        return out;
    }

    const CorpusSpec& spec_;
    std::mt19937_64& rng_;
};

} // namespace detail

/// Deterministic given spec.seed. Exactly round(bag_count * malicious_fraction) bags are malicious.
/// Split tags are assigned against spec.drift_timestamp.
inline std::vector<Bag> generate(const CorpusSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    detail::PathSampler sampler(spec, rng);

    const auto n_mal = static_cast<std::size_t>(std::llround(double(spec.bag_count) * spec.malicious_fraction));
    std::vector<int> labels(spec.bag_count, kBenign);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_mal), kMalicious);
    std::shuffle(labels.begin(), labels.end(), rng);

    std::uniform_int_distribution<std::int64_t> ts_dist(spec.timestamp_min, spec.timestamp_max - 1);
    std::uniform_int_distribution<std::size_t> size_dist(spec.bag_size_min, spec.bag_size_max);
    std::uniform_real_distribution<double> share_dist(spec.malicious_share_min, spec.malicious_share_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Bag> bags;
    bags.reserve(spec.bag_count);
    for (std::size_t i = 0; i < spec.bag_count; ++i) {
        Bag bag;
        bag.label = labels[i];
        bag.timestamp = ts_dist(rng);
        bag.split = bag.timestamp < spec.drift_timestamp ? Split::train : Split::test;
        const std::size_t k = size_dist(rng);
        int looks_like = bag.label;
        if (unit(rng) < spec.ambiguous_rate) looks_like = 1 - looks_like;

        if (looks_like == kMalicious) {
            auto n_bad = static_cast<std::size_t>(std::llround(share_dist(rng) * double(k)));
            n_bad = std::clamp<std::size_t>(n_bad, 1, k);
            const bool drifted = bag.timestamp >= spec.drift_timestamp && !spec.drift_templates.empty();
            for (std::size_t j = 0; j < n_bad; ++j) {
                const bool use_drift = drifted && unit(rng) < spec.drift_rate;
                bag.paths.push_back(sampler.sample(use_drift ? spec.drift_templates : spec.malicious_templates));
            }
            while (bag.paths.size() < k) bag.paths.push_back(sampler.sample(spec.benign_templates));
        } else {
            std::size_t start = 0;
            if (!spec.benign_temp_templates.empty() && unit(rng) < spec.benign_temp_rate) {
                bag.paths.push_back(sampler.sample(spec.benign_temp_templates));
                start = 1;
            }
            for (std::size_t j = start; j < k; ++j) bag.paths.push_back(sampler.sample(spec.benign_templates));
        }
        std::shuffle(bag.paths.begin(), bag.paths.end(), rng);
        bags.push_back(std::move(bag));
    }
    std::stable_sort(bags.begin(), bags.end(), [](const Bag& a, const Bag& b) { return a.timestamp < b.timestamp; });
    return bags;
}

struct SplitResult {
    std::vector<Bag> train;
    std::vector<Bag> test;
};

/// train = timestamp < cutoff, test = the rest. A cutoff leaving either side empty is an error.
inline SplitResult temporal_split(const std::vector<Bag>& bags, std::int64_t cutoff)
{
    SplitResult out;
    for (const auto& b : bags) {
        Bag c = b;
        c.split = b.timestamp < cutoff ? Split::train : Split::test;
        (c.split == Split::train ? out.train : out.test).push_back(std::move(c));
    }
    if (out.train.empty() || out.test.empty()) {
        throw CorpusError("temporal_split: cutoff " + std::to_string(cutoff) + " leaves the "
                          + (out.train.empty() ? std::string("train") : std::string("test")) + " side empty");
    }
    return out;
}

/// Like temporal_split but tolerates an empty side (boundary inspection).
inline SplitResult temporal_partition(const std::vector<Bag>& bags, std::int64_t cutoff)
{
    SplitResult out;
    for (const auto& b : bags) {
        Bag c = b;
        c.split = b.timestamp < cutoff ? Split::train : Split::test;
        (c.split == Split::train ? out.train : out.test).push_back(std::move(c));
    }
    return out;
}

// ---- dataset file: one JSON object per line ----------------------------------

inline std::string serialize_bag(const Bag& bag)
{
    nlohmann::json j = {{"label", bag.label},
                        {"timestamp", bag.timestamp},
                        {"split", bag.split == Split::train ? "train" : "test"},
                        {"paths", bag.paths}};
    return j.dump();
}

inline Bag parse_bag(const std::string& line)
{
    try {
        auto j = nlohmann::json::parse(line);
        Bag bag;
        bag.label = j.at("label").get<int>();
        if (bag.label != kBenign && bag.label != kMalicious) throw CorpusError("dataset: label must be 0 or 1");
        bag.timestamp = j.at("timestamp").get<std::int64_t>();
        const auto split = j.value("split", std::string("train"));
        if (split != "train" && split != "test") throw CorpusError("dataset: split must be train or test");
        bag.split = split == "train" ? Split::train : Split::test;
        bag.paths = j.at("paths").get<std::vector<std::string>>();
        if (bag.paths.empty()) throw CorpusError("dataset: bag without paths");
        return bag;
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError(std::string("dataset: malformed record: ") + e.what());
    }
}

inline void write_dataset(const std::string& path, const std::vector<Bag>& bags)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CorpusError("dataset: cannot write '" + path + "'");
    for (const auto& b : bags) os << serialize_bag(b) << '\n';
}

inline std::vector<Bag> read_dataset(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CorpusError("dataset: cannot open '" + path + "'");
    std::vector<Bag> bags;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            bags.push_back(parse_bag(line));
        } catch (const CorpusError& e) {
            throw CorpusError("dataset '" + path + "' line " + std::to_string(n) + ": " + e.what());
        }
    }
    return bags;
}

/// All paths of the given bags in bag order.
inline std::vector<std::string> flatten_paths(const std::vector<Bag>& bags)
{
    std::vector<std::string> out;
    for (const auto& b : bags) out.insert(out.end(), b.paths.begin(), b.paths.end());
    return out;
}

} // namespace advpath
