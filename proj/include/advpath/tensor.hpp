#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace advpath {

/// Training precision used by every model, checkpoint and CLI pipeline.
/// Gradient checks instantiate the same templates with double.
using Real = float;

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::string to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

inline std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major tensor with an optional gradient buffer of the same shape.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0))
        : shape_(std::move(shape)), data_(element_count(shape_), fill)
    {
        check_shape();
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
    {
        check_shape();
        if (data_.size() != element_count(shape_)) {
            throw ShapeError("tensor: shape " + advpath::to_string(shape_) + " needs "
                             + std::to_string(element_count(shape_)) + " values, got "
                             + std::to_string(data_.size()));
        }
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0))
    {
        return Tensor(Shape{rows, cols}, fill);
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    /// Matrix view: rank-1 tensors are a single row.
    std::size_t rows() const noexcept
    {
        if (shape_.empty()) return 0;
        return shape_.size() == 1 ? 1 : shape_[0];
    }
    std::size_t cols() const noexcept
    {
        if (shape_.empty()) return 0;
        return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
    }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols(), cols()); }
    std::span<const T> row(std::size_t r) const
    {
        return std::span<const T>(data_).subspan(r * cols(), cols());
    }

    bool has_grad() const noexcept { return !grad_.empty(); }

    /// Gradient buffer; allocated (zeroed) on first access.
    std::span<T> grad()
    {
        if (grad_.size() != data_.size()) grad_.assign(data_.size(), T(0));
        return grad_;
    }
    std::span<const T> grad() const noexcept { return grad_; }

    void zero_grad() { grad_.assign(data_.size(), T(0)); }
    void drop_grad() { grad_.clear(); }

    void reshape(Shape shape)
    {
        if (element_count(shape) != data_.size()) {
            throw ShapeError("reshape: " + advpath::to_string(shape_) + " -> "
                             + advpath::to_string(shape));
        }
        shape_ = std::move(shape);
    }

    template <class U>
    Tensor<U> cast() const
    {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b)
    {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void check_shape() const
    {
        for (auto dim : shape_) {
            if (dim == 0) throw ShapeError("tensor: zero-sized dimension in " + advpath::to_string(shape_));
        }
    }

    Shape shape_;
    std::vector<T> data_;
    std::vector<T> grad_;
};

/// A model parameter with a stable name, used by optimizers and checkpoints.
template <class T>
struct NamedParameter {
    std::string name;
    Tensor<T>* tensor;
};

template <class T>
using ParameterList = std::vector<NamedParameter<T>>;

template <class T>
void zero_grads(const ParameterList<T>& params)
{
    for (const auto& p : params) p.tensor->zero_grad();
}

} // namespace advpath
