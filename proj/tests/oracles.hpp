#pragma once

// Exhaustive oracles for the metric routines, shared by unit and acceptance tests.

#include "advpath/metrics.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace advpath::testing {

/// Plain recursion over the three edit operations. Equal leading characters
/// are always matched, which never increases the distance.
inline std::size_t levenshtein_recursive(std::string_view a, std::string_view b)
{
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    if (a.front() == b.front()) return levenshtein_recursive(a.substr(1), b.substr(1));
    return 1 + std::min({levenshtein_recursive(a.substr(1), b), levenshtein_recursive(a, b.substr(1)),
                         levenshtein_recursive(a.substr(1), b.substr(1))});
}

/// Every string of length 0..max_len over {a, b}.
inline std::vector<std::string> binary_strings(std::size_t max_len)
{
    std::vector<std::string> out{""};
    std::vector<std::string> layer{""};
    for (std::size_t n = 1; n <= max_len; ++n) {
        std::vector<std::string> next;
        for (const auto& s : layer)
            for (char c : {'a', 'b'}) next.push_back(s + c);
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

/// Number of ordered pairs where the DP disagrees with the recursion.
inline std::size_t levenshtein_mismatches(std::size_t max_len)
{
    const auto all = binary_strings(max_len);
    std::size_t bad = 0;
    for (const auto& a : all)
        for (const auto& b : all) bad += levenshtein(a, b) != levenshtein_recursive(a, b);
    return bad;
}

/// Points nobody dominates, by checking every pair.
inline std::vector<std::string> pareto_brute_force(const std::vector<MethodPoint>& pts)
{
    std::vector<std::string> out;
    for (const auto& p : pts) {
        const bool beaten = std::any_of(pts.begin(), pts.end(), [&](const auto& q) {
            return q.success_rate >= p.success_rate && q.mean_rld <= p.mean_rld
                   && (q.success_rate > p.success_rate || q.mean_rld < p.mean_rld);
        });
        if (!beaten) out.push_back(p.id);
    }
    return out;
}

/// Random point set with coarse coordinates so ties and duplicates occur.
inline std::vector<MethodPoint> random_points(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<int> grid(0, 10);
    std::vector<MethodPoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"p" + std::to_string(i), grid(rng) / 10.0, grid(rng) / 10.0});
    return out;
}

/// Sets (of 1..20 points) on which pareto_front differs from the brute force.
inline std::size_t pareto_mismatches(std::size_t sets, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(1, 20);
    std::size_t bad = 0;
    for (std::size_t s = 0; s < sets; ++s) {
        auto pts = random_points(rng, size(rng));
        std::vector<std::string> got;
        for (const auto& p : pareto_front(std::span<const MethodPoint>(pts))) got.push_back(p.id);
        bad += got != pareto_brute_force(pts);
    }
    return bad;
}

/// True when x strictly increases, F never decreases, stays in (0, 1], and ends at 1.
inline bool ecdf_well_formed(const std::vector<std::pair<double, double>>& steps)
{
    if (steps.empty() || steps.back().second != 1.0) return false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(steps[i].second > 0.0 && steps[i].second <= 1.0)) return false;
        if (i > 0 && !(steps[i].first > steps[i - 1].first && steps[i].second >= steps[i - 1].second)) return false;
    }
    return true;
}

} // namespace advpath::testing
