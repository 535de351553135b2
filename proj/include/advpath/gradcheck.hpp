#pragma once

#include "advpath/tape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace advpath {

template <class T>
using LossClosure = std::function<Var(Tape<T>&)>;

struct GradCheckOptions {
    /// Coordinates to probe; 0 probes every coordinate.
    std::size_t max_coordinates = 0;
    std::uint64_t seed = 0;
};

/// Max over probed coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
/// The numeric derivative uses the fourth-order central stencil
/// (f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / 12h, which tolerates a larger h
/// and so keeps round-off small on coordinates with tiny gradients.
template <class T>
T finite_difference_check(Tensor<T>& parameter, const LossClosure<T>& loss, T step,
                          GradCheckOptions options = {})
{
    parameter.zero_grad();
    {
        Tape<T> tape;
        tape.variable(parameter);
        tape.backward(loss(tape));
    }
    const std::vector<T> analytic(parameter.grad().begin(), parameter.grad().end());

    std::vector<std::size_t> coords(parameter.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coordinates && options.max_coordinates < coords.size()) {
        std::mt19937_64 rng(options.seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.max_coordinates);
    }

    auto evaluate = [&] {
        Tape<T> tape(false);
        return tape.value(loss(tape))[0];
    };

    T worst = T(0);
    for (std::size_t i : coords) {
        const T saved = parameter[i];
        auto at = [&](T offset) {
            parameter[i] = saved + offset;
            return evaluate();
        };
        const T numeric = (at(-2 * step) - 8 * at(-step) + 8 * at(step) - at(2 * step)) / (12 * step);
        parameter[i] = saved;
        const T denom = std::max({std::abs(analytic[i]), std::abs(numeric), T(1e-8)});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    parameter.zero_grad();
    return worst;
}

} // namespace advpath
