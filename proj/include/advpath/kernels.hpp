#pragma once

// Dense kernels behind the tape.
//
// Every output element of gemm() is an ascending-k accumulation chain that
// starts at zero, and the code path used for a row never depends on how many
// rows the call has. A row of A therefore produces bit-identical results
// whether it is multiplied alone or inside a batch.

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

namespace advpath::kernels {

namespace detail {

template <class T, std::size_t R, std::size_t C>
inline void micro_tile(const T* a, std::size_t lda, const T* b, std::size_t ldb, std::size_t k, T* c,
                       std::size_t ldc)
{
    T acc[R][C] = {};
    for (std::size_t p = 0; p < k; ++p) {
        const T* bp = b + p * ldb;
        for (std::size_t r = 0; r < R; ++r) {
            const T av = a[r * lda + p];
            for (std::size_t j = 0; j < C; ++j) acc[r][j] += av * bp[j];
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = 0; j < C; ++j) c[r * ldc + j] = acc[r][j];
    }
}

template <class T, std::size_t R>
inline void scalar_tile(const T* a, std::size_t lda, const T* b, std::size_t ldb, std::size_t k, T* c,
                        std::size_t ldc, std::size_t cols)
{
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = 0; j < cols; ++j) {
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p) acc += a[r * lda + p] * b[p * ldb + j];
            c[r * ldc + j] = acc;
        }
    }
}

} // namespace detail

/// C(m x n) = A(m x k) * B(k x n), all row-major and contiguous.
template <class T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n)
{
    constexpr std::size_t R = 4;
    constexpr std::size_t Wide = 128 / sizeof(T);
    constexpr std::size_t Narrow = 64 / sizeof(T);

    std::vector<T> a_pad;
    T tile[R * Wide];

    for (std::size_t i0 = 0; i0 < m; i0 += R) {
        const std::size_t rows = std::min(R, m - i0);
        const T* a_blk = a + i0 * k;
        if (rows < R) {
            a_pad.assign(R * k, T(0));
            std::memcpy(a_pad.data(), a_blk, rows * k * sizeof(T));
            a_blk = a_pad.data();
        }
        const bool direct = rows == R;
        std::size_t j0 = 0;
        for (; j0 + Wide <= n; j0 += Wide) {
            if (direct) {
                detail::micro_tile<T, R, Wide>(a_blk, k, b + j0, n, k, c + i0 * n + j0, n);
            } else {
                detail::micro_tile<T, R, Wide>(a_blk, k, b + j0, n, k, tile, Wide);
                for (std::size_t r = 0; r < rows; ++r)
                    std::memcpy(c + (i0 + r) * n + j0, tile + r * Wide, Wide * sizeof(T));
            }
        }
        for (; j0 + Narrow <= n; j0 += Narrow) {
            if (direct) {
                detail::micro_tile<T, R, Narrow>(a_blk, k, b + j0, n, k, c + i0 * n + j0, n);
            } else {
                detail::micro_tile<T, R, Narrow>(a_blk, k, b + j0, n, k, tile, Narrow);
                for (std::size_t r = 0; r < rows; ++r)
                    std::memcpy(c + (i0 + r) * n + j0, tile + r * Narrow, Narrow * sizeof(T));
            }
        }
        if (j0 < n) {
            const std::size_t cols = n - j0;
            detail::scalar_tile<T, R>(a_blk, k, b + j0, n, k, tile, Narrow, cols);
            for (std::size_t r = 0; r < rows; ++r)
                std::memcpy(c + (i0 + r) * n + j0, tile + r * Narrow, cols * sizeof(T));
        }
    }
}

/// out(cols x rows) = transpose of in(rows x cols).
template <class T>
void transpose(const T* in, T* out, std::size_t rows, std::size_t cols)
{
    constexpr std::size_t B = 16;
    for (std::size_t i0 = 0; i0 < rows; i0 += B) {
        for (std::size_t j0 = 0; j0 < cols; j0 += B) {
            const std::size_t i1 = std::min(rows, i0 + B);
            const std::size_t j1 = std::min(cols, j0 + B);
            for (std::size_t i = i0; i < i1; ++i)
                for (std::size_t j = j0; j < j1; ++j) out[j * rows + i] = in[i * cols + j];
        }
    }
}

template <class T>
void add_into(T* dst, const T* src, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

} // namespace advpath::kernels
