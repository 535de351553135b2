#pragma once

// String-similarity and experiment metrics.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace advpath {

/// Unit-cost edit distance, two-row dynamic program.
inline std::size_t levenshtein(std::string_view a, std::string_view b)
{
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Edit distance divided by the original's length.
inline double rld(std::string_view original, std::string_view adversarial)
{
    if (original.empty()) throw std::invalid_argument("rld: original string is empty");
    return double(levenshtein(original, adversarial)) / double(original.size());
}

struct BagRld {
    double value = 0;
    /// Set when some adversarial instance decoded to the empty string (scored as full deletion).
    bool has_empty_instance = false;
};

/// Mean RLD over instances paired by position.
inline BagRld bag_rld(std::span<const std::string> original, std::span<const std::string> adversarial)
{
    if (original.empty() || original.size() != adversarial.size())
        throw std::invalid_argument("bag_rld: bags must be non-empty and of equal size");
    BagRld out;
    for (std::size_t i = 0; i < original.size(); ++i) {
        out.value += rld(original[i], adversarial[i]);
        out.has_empty_instance = out.has_empty_instance || adversarial[i].empty();
    }
    out.value /= double(original.size());
    return out;
}

struct MethodPoint {
    std::string id;
    double success_rate = 0;
    double mean_rld = 0;
    double success_rate_std = 0;
    double mean_rld_std = 0;
};

/// a dominates b: at least as good on both axes and strictly better on one.
inline bool dominates(const MethodPoint& a, const MethodPoint& b)
{
    const bool no_worse = a.success_rate >= b.success_rate && a.mean_rld <= b.mean_rld;
    const bool better = a.success_rate > b.success_rate || a.mean_rld < b.mean_rld;
    return no_worse && better;
}

/// Non-dominated points (maximize success rate, minimize mean RLD), input order kept.
/// Sort by rate descending, RLD ascending, then sweep keeping a running minimum RLD.
inline std::vector<MethodPoint> pareto_front(std::span<const MethodPoint> points)
{
    if (points.empty()) throw std::invalid_argument("pareto_front: no points");
    for (const auto& p : points)
        if (!std::isfinite(p.success_rate) || !std::isfinite(p.mean_rld))
            throw std::invalid_argument("pareto_front: non-finite coordinate in '" + p.id + "'");
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (points[a].success_rate != points[b].success_rate) return points[a].success_rate > points[b].success_rate;
        return points[a].mean_rld < points[b].mean_rld;
    });
    std::vector<std::uint8_t> keep(points.size(), 0);
    // best_rld: smallest RLD among points with strictly higher rate.
    double best_rld = INFINITY;
    for (std::size_t g = 0; g < order.size();) {
        std::size_t e = g;
        while (e < order.size() && points[order[e]].success_rate == points[order[g]].success_rate) ++e;
        const double group_min = points[order[g]].mean_rld;
        for (std::size_t i = g; i < e; ++i) {
            const double r = points[order[i]].mean_rld;
            keep[order[i]] = r == group_min && r < best_rld;
        }
        best_rld = std::min(best_rld, group_min);
        g = e;
    }
    std::vector<MethodPoint> out;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (keep[i]) out.push_back(points[i]);
    return out;
}

/// Step points (x, F(x)) at each distinct value.
inline std::vector<std::pair<double, double>> ecdf(std::vector<double> values)
{
    if (values.empty()) throw std::invalid_argument("ecdf: no values");
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    const double n = double(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.emplace_back(values[i], double(i + 1) / n);
    }
    out.back().second = 1.0;
    return out;
}

struct MeanStd {
    double mean = 0;
    double std = 0;
};

/// Sample mean and (n-1) standard deviation; std is 0 for a single value.
inline MeanStd mean_std(std::span<const double> xs)
{
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= double(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / double(xs.size() - 1));
    }
    return out;
}

inline std::string format_fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// One row per method: id, rate, rate std, mean RLD, RLD std, pareto flag.
inline void write_method_table(std::ostream& os, std::span<const MethodPoint> points)
{
    os << "method\tsuccess_rate\tsuccess_rate_std\tmean_rld\tmean_rld_std\tpareto\n";
    auto front = points.empty() ? std::vector<MethodPoint>{} : pareto_front(points);
    for (const auto& p : points) {
        const bool on_front = std::any_of(front.begin(), front.end(), [&](const auto& f) { return f.id == p.id; });
        os << p.id << '\t' << format_fixed(p.success_rate) << '\t' << format_fixed(p.success_rate_std) << '\t'
           << format_fixed(p.mean_rld) << '\t' << format_fixed(p.mean_rld_std) << '\t' << (on_front ? "yes" : "no")
           << '\n';
    }
}

inline void write_ecdf(std::ostream& os, const std::vector<std::pair<double, double>>& steps)
{
    os << "x\tF\n";
    for (const auto& [x, f] : steps) os << format_fixed(x, 6) << '\t' << format_fixed(f, 6) << '\n';
}

/// Character diff of two strings via a longest common subsequence. Deleted
/// runs print as [-...-], inserted runs as {+...+}.
inline std::string render_diff(std::string_view a, std::string_view b)
{
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> L((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return L[i * (m + 1) + j]; };
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            at(i, j) = a[i] == b[j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));

    std::string out, del, ins;
    auto flush = [&] {
        if (!del.empty()) out += "[-" + del + "-]";
        if (!ins.empty()) out += "{+" + ins + "+}";
        del.clear();
        ins.clear();
    };
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j]) {
            flush();
            out += a[i];
            ++i;
            ++j;
        } else if (j < m && (i == n || at(i, j + 1) >= at(i + 1, j))) {
            ins += b[j++];
        } else {
            del += a[i++];
        }
    }
    flush();
    return out;
}

} // namespace advpath
