#pragma once

#include "advpath/optim.hpp"
#include "advpath/tape.hpp"

#include <string>

namespace advpath {

/// y = x W + b with W: (in x out), b: (1 x out).
template <class T>
struct Linear {
    Tensor<T> weight;
    Tensor<T> bias;

    Linear() = default;
    template <class Rng>
    Linear(std::size_t in, std::size_t out, Rng& rng)
        : weight(Tensor<T>::matrix(in, out)), bias(Tensor<T>::matrix(1, out))
    {
        glorot_uniform(weight, in, out, rng);
    }

    std::size_t in_features() const { return weight.rows(); }
    std::size_t out_features() const { return weight.cols(); }

    Var operator()(Tape<T>& tape, Var x) const
    {
        return tape.add(tape.matmul(x, tape.param(weight)), tape.param(bias));
    }

    void collect(ParameterList<T>& out, const std::string& prefix)
    {
        out.push_back({prefix + ".weight", &weight});
        out.push_back({prefix + ".bias", &bias});
    }
};

/// Gated recurrent cell. Gate blocks are laid out [update | reset | candidate]
/// along the columns of both weight matrices.
///   z = sigmoid(x Wz + h Uz + b), r = sigmoid(x Wr + h Ur + b)
///   n = tanh(x Wn + bn + r * (h Un + cn)),   h' = n + z * (h - n)
template <class T>
struct GruCell {
    Tensor<T> w_input;   // in x 3d
    Tensor<T> w_hidden;  // d x 3d
    Tensor<T> b_input;   // 1 x 3d
    Tensor<T> b_hidden;  // 1 x 3d

    GruCell() = default;
    template <class Rng>
    GruCell(std::size_t in, std::size_t hidden, Rng& rng)
        : w_input(Tensor<T>::matrix(in, 3 * hidden)),
          w_hidden(Tensor<T>::matrix(hidden, 3 * hidden)),
          b_input(Tensor<T>::matrix(1, 3 * hidden)),
          b_hidden(Tensor<T>::matrix(1, 3 * hidden))
    {
        glorot_uniform(w_input, in, hidden, rng);
        glorot_uniform(w_hidden, hidden, hidden, rng);
    }

    std::size_t hidden_size() const { return w_hidden.rows(); }
    std::size_t input_size() const { return w_input.rows(); }

    /// Input projection x W + b; callers may hoist this over all time steps.
    Var project_input(Tape<T>& tape, Var x) const
    {
        return tape.add(tape.matmul(x, tape.param(w_input)), tape.param(b_input));
    }

    /// One step from a pre-projected input (rows x 3d).
    Var step_projected(Tape<T>& tape, Var gx, Var h) const
    {
        const std::size_t d = hidden_size();
        Var gh = tape.add(tape.matmul(h, tape.param(w_hidden)), tape.param(b_hidden));
        Var z = tape.sigmoid(tape.add(tape.slice_cols(gx, 0, d), tape.slice_cols(gh, 0, d)));
        Var r = tape.sigmoid(tape.add(tape.slice_cols(gx, d, 2 * d), tape.slice_cols(gh, d, 2 * d)));
        Var n = tape.tanh(tape.add(tape.slice_cols(gx, 2 * d, 3 * d), tape.mul(r, tape.slice_cols(gh, 2 * d, 3 * d))));
        return tape.add(n, tape.mul(z, tape.sub(h, n)));
    }

    Var step(Tape<T>& tape, Var x, Var h) const { return step_projected(tape, project_input(tape, x), h); }

    void collect(ParameterList<T>& out, const std::string& prefix)
    {
        out.push_back({prefix + ".w_input", &w_input});
        out.push_back({prefix + ".w_hidden", &w_hidden});
        out.push_back({prefix + ".b_input", &b_input});
        out.push_back({prefix + ".b_hidden", &b_hidden});
    }
};

} // namespace advpath
