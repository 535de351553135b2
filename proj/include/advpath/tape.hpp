#pragma once

// Reverse-mode autodiff over 2-D tensors. One Tape records one forward
// trace; it is discarded afterwards.

#include "advpath/kernels.hpp"
#include "advpath/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace advpath {

struct Var {
    std::uint32_t id = 0;
};

template <class T>
class Tape {
public:
    /// record == false builds values only (inference); backward() then fails.
    explicit Tape(bool record = true) : record_(record) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return record_; }

    /// Leaf whose gradient is accumulated into t.grad() by backward().
    /// Binding the same tensor twice returns the same Var.
    Var variable(Tensor<T>& t)
    {
        if (auto it = bound_.find(&t); it != bound_.end()) return it->second;
        Node n;
        n.external = &t;
        n.sink = &t;
        n.needs_grad = record_;
        Var v = push(std::move(n));
        bound_.emplace(&t, v);
        return v;
    }

    /// Model parameter: a gradient leaf on recording tapes unless parameters are
    /// frozen, otherwise a constant. Only recording tapes ever write t.grad().
    Var param(const Tensor<T>& t)
    {
        if (frozen_ || !record_) return constant_ref(t);
        return variable(const_cast<Tensor<T>&>(t));
    }

    /// Parameters bound after this call are treated as constants.
    void freeze_parameters(bool frozen = true) { frozen_ = frozen; }

    /// Constant referring to an external tensor that outlives the tape.
    Var constant_ref(const Tensor<T>& t)
    {
        if (auto it = bound_.find(&t); it != bound_.end()) return it->second;
        Node n;
        n.external = &t;
        Var v = push(std::move(n));
        bound_.emplace(&t, v);
        return v;
    }

    Var constant(Tensor<T> t)
    {
        Node n;
        n.own = std::move(t);
        return push(std::move(n));
    }

    const Tensor<T>& value(Var v) const { return node(v).value(); }

    /// Gradient of the last backward() output w.r.t. v (empty if v is not on a gradient path).
    std::span<const T> grad(Var v) const { return node(v).grad; }

    std::size_t size() const noexcept { return nodes_.size(); }

    void backward(Var out)
    {
        if (!record_) throw std::logic_error("backward: tape was built without recording");
        if (value(out).size() != 1) {
            throw ShapeError("backward: output must be scalar, got shape " + to_string(value(out).shape()));
        }
        for (auto& n : nodes_) n.grad.clear();
        if (!node(out).needs_grad) return;
        node(out).grad.assign(1, T(1));
        for (std::size_t i = out.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.grad.empty()) continue;
            if (n.backward) n.backward();
            if (n.sink) kernels::add_into(n.sink->grad().data(), n.grad.data(), n.grad.size());
        }
    }

    // ---- matrix algebra -------------------------------------------------

    Var matmul(Var a, Var b)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        if (A.cols() != B.rows()) mismatch("matmul", A, B);
        const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
        Tensor<T> out = Tensor<T>::matrix(m, n);
        kernels::gemm(A.raw(), B.raw(), out.raw(), m, k, n);
        return emit(std::move(out), {a, b}, [this, a, b, m, k, n](Var self) {
            const auto& g = node(self).grad;
            if (needs(a)) {
                std::vector<T> bt(k * n), da(m * k);
                kernels::transpose(value(b).raw(), bt.data(), k, n);
                kernels::gemm(g.data(), bt.data(), da.data(), m, n, k);
                kernels::add_into(grad_buffer(a), da.data(), da.size());
            }
            if (needs(b)) {
                std::vector<T> at(m * k), db(k * n);
                kernels::transpose(value(a).raw(), at.data(), m, k);
                kernels::gemm(at.data(), g.data(), db.data(), k, m, n);
                kernels::add_into(grad_buffer(b), db.data(), db.size());
            }
        });
    }

    Var transpose(Var a)
    {
        const auto& A = value(a);
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out = Tensor<T>::matrix(c, r);
        kernels::transpose(A.raw(), out.raw(), r, c);
        return emit(std::move(out), {a}, [this, a, r, c](Var self) {
            std::vector<T> t(r * c);
            kernels::transpose(node(self).grad.data(), t.data(), c, r);
            kernels::add_into(grad_buffer(a), t.data(), t.size());
        });
    }

    /// a + b, where b either matches a or is a single row broadcast over a's rows.
    Var add(Var a, Var b) { return binary_broadcast("add", a, b, T(1)); }
    Var sub(Var a, Var b) { return binary_broadcast("sub", a, b, T(-1)); }

    /// Elementwise product of same-shape operands.
    Var mul(Var a, Var b)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        if (A.shape() != B.shape()) mismatch("mul", A, B);
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
        return emit(std::move(out), {a, b}, [this, a, b](Var self) {
            const auto& g = node(self).grad;
            if (needs(a)) {
                T* ga = grad_buffer(a);
                const auto& B = value(b);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
            }
            if (needs(b)) {
                T* gb = grad_buffer(b);
                const auto& A = value(a);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
            }
        });
    }

    /// scale * a + shift
    Var affine(Var a, T scale, T shift)
    {
        const auto& A = value(a);
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * A[i] + shift;
        return emit(std::move(out), {a}, [this, a, scale](Var self) {
            const auto& g = node(self).grad;
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += scale * g[i];
        });
    }

    Var tanh(Var a)
    {
        const auto& A = value(a);
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(A[i]);
        return emit(std::move(out), {a}, [this, a](Var self) {
            const auto& g = node(self).grad;
            const auto& y = value(self);
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
        });
    }

    Var sigmoid(Var a)
    {
        const auto& A = value(a);
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-A[i]));
        return emit(std::move(out), {a}, [this, a](Var self) {
            const auto& g = node(self).grad;
            const auto& y = value(self);
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
        });
    }

    /// Sign has zero derivative almost everywhere; the result is a constant.
    Var sign(Var a)
    {
        const auto& A = value(a);
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = T((A[i] > T(0)) - (A[i] < T(0)));
        Node n;
        n.own = std::move(out);
        return push(std::move(n));
    }

    /// Row-wise softmax.
    Var softmax_rows(Var a)
    {
        const auto& A = value(a);
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < r; ++i) softmax_row(A.raw() + i * c, out.raw() + i * c, c);
        return emit(std::move(out), {a}, [this, a, r, c](Var self) {
            const auto& g = node(self).grad;
            const auto& y = value(self);
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < r; ++i) {
                T dot = T(0);
                for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
                for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
            }
        });
    }

    /// Scalar sum_i w_i * (-log softmax(logits_i)[target_i]). Rows with w_i == 0 are skipped.
    Var softmax_cross_entropy(Var logits, std::span<const int> targets, std::span<const T> weights)
    {
        const auto& L = value(logits);
        const std::size_t r = L.rows(), c = L.cols();
        if (targets.size() != r || weights.size() != r) {
            throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets / "
                             + std::to_string(weights.size()) + " weights for logits " + to_string(L.shape()));
        }
        std::vector<T> probs(r * c);
        T total = T(0);
        for (std::size_t i = 0; i < r; ++i) {
            if (weights[i] == T(0)) continue;
            check_target("softmax_cross_entropy", targets[i], c);
            const T* row = L.raw() + i * c;
            const T mx = *std::max_element(row, row + c);
            T z = T(0);
            for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
            const T lse = mx + std::log(z);
            for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - lse);
            total += weights[i] * (lse - row[targets[i]]);
        }
        std::vector<int> t(targets.begin(), targets.end());
        std::vector<T> w(weights.begin(), weights.end());
        return emit(Tensor<T>(Shape{1, 1}, total), {logits},
                    [this, logits, r, c, probs = std::move(probs), t = std::move(t), w = std::move(w)](Var self) {
                        const T g = node(self).grad[0];
                        T* gl = grad_buffer(logits);
                        for (std::size_t i = 0; i < r; ++i) {
                            if (w[i] == T(0)) continue;
                            const T s = g * w[i];
                            for (std::size_t j = 0; j < c; ++j) gl[i * c + j] += s * probs[i * c + j];
                            gl[i * c + t[i]] -= s;
                        }
                    });
    }

    /// Scalar sum_i w_i * (-log probs_i[target_i]) for rows that already hold probabilities.
    Var cross_entropy(Var probs, std::span<const int> targets, std::span<const T> weights)
    {
        const auto& P = value(probs);
        const std::size_t r = P.rows(), c = P.cols();
        if (targets.size() != r || weights.size() != r) {
            throw ShapeError("cross_entropy: target count does not match " + to_string(P.shape()));
        }
        T total = T(0);
        for (std::size_t i = 0; i < r; ++i) {
            if (weights[i] == T(0)) continue;
            check_target("cross_entropy", targets[i], c);
            total -= weights[i] * std::log(P[i * c + targets[i]]);
        }
        std::vector<int> t(targets.begin(), targets.end());
        std::vector<T> w(weights.begin(), weights.end());
        return emit(Tensor<T>(Shape{1, 1}, total), {probs},
                    [this, probs, r, c, t = std::move(t), w = std::move(w)](Var self) {
                        const T g = node(self).grad[0];
                        const auto& P = value(probs);
                        T* gp = grad_buffer(probs);
                        for (std::size_t i = 0; i < r; ++i) {
                            if (w[i] == T(0)) continue;
                            gp[i * c + t[i]] -= g * w[i] / P[i * c + t[i]];
                        }
                    });
    }

    // ---- structural ops --------------------------------------------------

    Var concat_cols(std::span<const Var> parts)
    {
        if (parts.empty()) throw ShapeError("concat_cols: no operands");
        const std::size_t r = value(parts[0]).rows();
        std::vector<std::size_t> widths;
        std::size_t total = 0;
        for (Var p : parts) {
            if (value(p).rows() != r) mismatch("concat_cols", value(parts[0]), value(p));
            widths.push_back(value(p).cols());
            total += widths.back();
        }
        Tensor<T> out = Tensor<T>::matrix(r, total);
        std::size_t off = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const auto& P = value(parts[k]);
            for (std::size_t i = 0; i < r; ++i)
                std::copy_n(P.raw() + i * widths[k], widths[k], out.raw() + i * total + off);
            off += widths[k];
        }
        std::vector<Var> ps(parts.begin(), parts.end());
        return emit(std::move(out), ps, [this, ps, widths, r, total](Var self) {
            const auto& g = node(self).grad;
            std::size_t off = 0;
            for (std::size_t k = 0; k < ps.size(); ++k) {
                if (needs(ps[k])) {
                    T* gp = grad_buffer(ps[k]);
                    for (std::size_t i = 0; i < r; ++i)
                        kernels::add_into(gp + i * widths[k], g.data() + i * total + off, widths[k]);
                }
                off += widths[k];
            }
        });
    }

    Var concat_rows(std::span<const Var> parts)
    {
        if (parts.empty()) throw ShapeError("concat_rows: no operands");
        const std::size_t c = value(parts[0]).cols();
        std::size_t total = 0;
        for (Var p : parts) {
            if (value(p).cols() != c) mismatch("concat_rows", value(parts[0]), value(p));
            total += value(p).rows();
        }
        Tensor<T> out = Tensor<T>::matrix(total, c);
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& P = value(p);
            std::copy(P.data().begin(), P.data().end(), out.raw() + off);
            off += P.size();
        }
        std::vector<Var> ps(parts.begin(), parts.end());
        return emit(std::move(out), ps, [this, ps](Var self) {
            const auto& g = node(self).grad;
            std::size_t off = 0;
            for (Var p : ps) {
                const std::size_t n = value(p).size();
                if (needs(p)) kernels::add_into(grad_buffer(p), g.data() + off, n);
                off += n;
            }
        });
    }

    Var slice_rows(Var a, std::size_t begin, std::size_t end)
    {
        const auto& A = value(a);
        if (begin >= end || end > A.rows()) {
            throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of "
                             + to_string(A.shape()));
        }
        const std::size_t c = A.cols();
        Tensor<T> out = Tensor<T>::matrix(end - begin, c);
        std::copy_n(A.raw() + begin * c, out.size(), out.raw());
        return emit(std::move(out), {a}, [this, a, begin, c](Var self) {
            const auto& g = node(self).grad;
            kernels::add_into(grad_buffer(a) + begin * c, g.data(), g.size());
        });
    }

    Var slice_cols(Var a, std::size_t begin, std::size_t end)
    {
        const auto& A = value(a);
        if (begin >= end || end > A.cols()) {
            throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of "
                             + to_string(A.shape()));
        }
        const std::size_t r = A.rows(), c = A.cols(), w = end - begin;
        Tensor<T> out = Tensor<T>::matrix(r, w);
        for (std::size_t i = 0; i < r; ++i) std::copy_n(A.raw() + i * c + begin, w, out.raw() + i * w);
        return emit(std::move(out), {a}, [this, a, begin, r, c, w](Var self) {
            const auto& g = node(self).grad;
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < r; ++i) kernels::add_into(ga + i * c + begin, g.data() + i * w, w);
        });
    }

    /// Row-major reinterpretation with the same element count.
    Var reshape(Var a, std::size_t rows, std::size_t cols)
    {
        const auto& A = value(a);
        if (rows * cols != A.size()) {
            throw ShapeError("reshape: " + to_string(A.shape()) + " -> " + to_string(Shape{rows, cols}));
        }
        Tensor<T> out(Shape{rows, cols}, std::vector<T>(A.data().begin(), A.data().end()));
        return emit(std::move(out), {a}, [this, a](Var self) {
            const auto& g = node(self).grad;
            kernels::add_into(grad_buffer(a), g.data(), g.size());
        });
    }

    /// Row lookup (embedding): out[i] = table[ids[i]].
    Var gather_rows(Var table, std::span<const int> ids)
    {
        const auto& Tb = value(table);
        const std::size_t c = Tb.cols();
        if (ids.empty()) throw ShapeError("gather_rows: no ids");
        Tensor<T> out = Tensor<T>::matrix(ids.size(), c);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= Tb.rows()) {
                throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside table "
                                 + to_string(Tb.shape()));
            }
            std::copy_n(Tb.raw() + ids[i] * c, c, out.raw() + i * c);
        }
        std::vector<int> idx(ids.begin(), ids.end());
        return emit(std::move(out), {table}, [this, table, c, idx = std::move(idx)](Var self) {
            const auto& g = node(self).grad;
            T* gt = grad_buffer(table);
            for (std::size_t i = 0; i < idx.size(); ++i) kernels::add_into(gt + idx[i] * c, g.data() + i * c, c);
        });
    }

    /// Row i of the result is row i of a where take_a[i], else row i of b.
    Var blend_rows(Var a, Var b, std::span<const std::uint8_t> take_a)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        if (A.shape() != B.shape() || take_a.size() != A.rows()) mismatch("blend_rows", A, B);
        const std::size_t c = A.cols();
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < A.rows(); ++i)
            std::copy_n((take_a[i] ? A : B).raw() + i * c, c, out.raw() + i * c);
        std::vector<std::uint8_t> mask(take_a.begin(), take_a.end());
        return emit(std::move(out), {a, b}, [this, a, b, c, mask = std::move(mask)](Var self) {
            const auto& g = node(self).grad;
            for (std::size_t i = 0; i < mask.size(); ++i) {
                Var dst = mask[i] ? a : b;
                if (needs(dst)) kernels::add_into(grad_buffer(dst) + i * c, g.data() + i * c, c);
            }
        });
    }

    // ---- reductions ------------------------------------------------------

    Var sum(Var a)
    {
        const auto& A = value(a);
        T s = T(0);
        for (T x : A.data()) s += x;
        return emit(Tensor<T>(Shape{1, 1}, s), {a}, [this, a](Var self) {
            const T g = node(self).grad[0];
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < value(a).size(); ++i) ga[i] += g;
        });
    }

    Var mean(Var a) { return affine(sum(a), T(1) / T(value(a).size()), T(0)); }

    /// Column means over rows: (r x c) -> (1 x c).
    Var mean_rows(Var a)
    {
        const auto& A = value(a);
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out = Tensor<T>::matrix(1, c);
        for (std::size_t i = 0; i < r; ++i) kernels::add_into(out.raw(), A.raw() + i * c, c);
        for (auto& x : out.data()) x /= T(r);
        return emit(std::move(out), {a}, [this, a, r, c](Var self) {
            const auto& g = node(self).grad;
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j] / T(r);
        });
    }

    /// Column maxima over rows: (r x c) -> (1 x c); ties route to the first row.
    Var max_rows(Var a)
    {
        const auto& A = value(a);
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out = Tensor<T>::matrix(1, c);
        std::vector<std::size_t> arg(c, 0);
        for (std::size_t j = 0; j < c; ++j) {
            out[j] = A[j];
            for (std::size_t i = 1; i < r; ++i) {
                if (A[i * c + j] > out[j]) {
                    out[j] = A[i * c + j];
                    arg[j] = i;
                }
            }
        }
        return emit(std::move(out), {a}, [this, a, c, arg = std::move(arg)](Var self) {
            const auto& g = node(self).grad;
            T* ga = grad_buffer(a);
            for (std::size_t j = 0; j < c; ++j) ga[arg[j] * c + j] += g[j];
        });
    }

    /// Frobenius norm: scalar sqrt(sum a^2). Subgradient 0 at the origin.
    Var l2_norm(Var a)
    {
        const auto& A = value(a);
        T s = T(0);
        for (T x : A.data()) s += x * x;
        const T norm = std::sqrt(s);
        return emit(Tensor<T>(Shape{1, 1}, norm), {a}, [this, a, norm](Var self) {
            if (norm == T(0)) return;
            const T g = node(self).grad[0] / norm;
            const auto& A = value(a);
            T* ga = grad_buffer(a);
            for (std::size_t i = 0; i < A.size(); ++i) ga[i] += g * A[i];
        });
    }

    static void softmax_row(const T* in, T* out, std::size_t n)
    {
        const T mx = *std::max_element(in, in + n);
        T z = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = std::exp(in[j] - mx);
            z += out[j];
        }
        for (std::size_t j = 0; j < n; ++j) out[j] /= z;
    }

private:
    struct Node {
        Tensor<T> own;
        const Tensor<T>* external = nullptr;
        Tensor<T>* sink = nullptr;
        std::vector<T> grad;
        std::function<void()> backward;
        bool needs_grad = false;

        const Tensor<T>& value() const { return external ? *external : own; }
    };

    Node& node(Var v) { return nodes_.at(v.id); }
    const Node& node(Var v) const { return nodes_.at(v.id); }

    bool needs(Var v) const { return node(v).needs_grad; }

    T* grad_buffer(Var v)
    {
        Node& n = node(v);
        if (n.grad.empty()) n.grad.assign(n.value().size(), T(0));
        return n.grad.data();
    }

    Var push(Node n)
    {
        if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) throw std::length_error("tape full");
        nodes_.push_back(std::move(n));
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    template <class F>
    Var emit(Tensor<T> value, std::initializer_list<Var> inputs, F&& fn)
    {
        return emit(std::move(value), std::vector<Var>(inputs), std::forward<F>(fn));
    }

    template <class F>
    Var emit(Tensor<T> value, const std::vector<Var>& inputs, F&& fn)
    {
        Node n;
        n.own = std::move(value);
        if (record_) {
            for (Var in : inputs) n.needs_grad = n.needs_grad || needs(in);
        }
        const bool wire = n.needs_grad;
        Var self = push(std::move(n));
        if (wire) node(self).backward = [fn = std::forward<F>(fn), self]() { fn(self); };
        return self;
    }

    Var binary_broadcast(const char* op, Var a, Var b, T sign_b)
    {
        const auto& A = value(a);
        const auto& B = value(b);
        const bool same = A.shape() == B.shape();
        const bool row_bcast = !same && B.rows() == 1 && B.cols() == A.cols();
        if (!same && !row_bcast) mismatch(op, A, B);
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out(A.shape());
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out[i * c + j] = A[i * c + j] + sign_b * B[same ? i * c + j : j];
        return emit(std::move(out), {a, b}, [this, a, b, r, c, same, sign_b](Var self) {
            const auto& g = node(self).grad;
            if (needs(a)) kernels::add_into(grad_buffer(a), g.data(), g.size());
            if (needs(b)) {
                T* gb = grad_buffer(b);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gb[same ? i * c + j : j] += sign_b * g[i * c + j];
            }
        });
    }

    static void check_target(const char* op, int target, std::size_t classes)
    {
        if (target < 0 || static_cast<std::size_t>(target) >= classes) {
            throw ShapeError(std::string(op) + ": target " + std::to_string(target) + " outside "
                             + std::to_string(classes) + " classes");
        }
    }

    [[noreturn]] static void mismatch(const char* op, const Tensor<T>& a, const Tensor<T>& b)
    {
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }

    std::deque<Node> nodes_; // stable references across push
    std::unordered_map<const void*, Var> bound_;
    bool record_;
    bool frozen_ = false;
};

} // namespace advpath
