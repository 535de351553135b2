#pragma once

// Model checkpoint container.
//
//   magic        8 bytes  "ADVPCKPT"
//   version      u32
//   kind         u32 length + bytes      ("autoencoder", "classifier")
//   hyperparams  u32 length + JSON text
//   count        u32
//   per tensor:  u32 name length + name, u32 rank, u64 dims[rank],
//                u32 element width (4 or 8), raw little-endian values
//
// All integers are little-endian.

#include "advpath/tensor.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace advpath {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'V', 'P', 'C', 'K', 'P', 'T'};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoredTensor {
    Shape shape;
    std::vector<double> values;
};

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string kind;
    nlohmann::json hyperparameters;
    std::vector<std::string> order;
    std::map<std::string, StoredTensor> tensors;

    template <class T>
    void load_into(const ParameterList<T>& params) const
    {
        for (const auto& p : params) {
            auto it = tensors.find(p.name);
            if (it == tensors.end()) throw CheckpointError("checkpoint (" + kind + "): missing tensor '" + p.name + "'");
            if (it->second.shape != p.tensor->shape()) {
                throw CheckpointError("checkpoint (" + kind + "): tensor '" + p.name + "' has shape "
                                      + to_string(it->second.shape) + ", model expects " + to_string(p.tensor->shape()));
            }
            auto dst = p.tensor->data();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = T(it->second.values[i]);
        }
    }
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class U>
void put(std::ostream& os, U v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

inline void put_string(std::ostream& os, const std::string& s)
{
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class U>
U get(std::istream& is)
{
    U v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(U))) throw CheckpointError("checkpoint: truncated file");
    return v;
}

inline std::string get_string(std::istream& is, std::size_t limit = std::size_t{1} << 28)
{
    const auto n = get<std::uint32_t>(is);
    if (n > limit) throw CheckpointError("checkpoint: implausible string length");
    std::string s(n, '\0');
    if (n && !is.read(s.data(), n)) throw CheckpointError("checkpoint: truncated file");
    return s;
}

} // namespace detail

template <class T>
void save_checkpoint(const std::string& path, const std::string& kind, const nlohmann::json& hyperparameters,
                     const ParameterList<T>& params)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put<std::uint32_t>(os, kCheckpointVersion);
    detail::put_string(os, kind);
    detail::put_string(os, hyperparameters.dump());
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        detail::put_string(os, p.name);
        const auto& shape = p.tensor->shape();
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
        for (auto dim : shape) detail::put<std::uint64_t>(os, dim);
        detail::put<std::uint32_t>(os, sizeof(T));
        os.write(reinterpret_cast<const char*>(p.tensor->raw()), static_cast<std::streamsize>(p.tensor->size() * sizeof(T)));
    }
    if (!os) throw CheckpointError("checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw CheckpointError("checkpoint: '" + path + "' is not a checkpoint file");
    Checkpoint ck;
    ck.version = detail::get<std::uint32_t>(is);
    if (ck.version != kCheckpointVersion)
        throw CheckpointError("checkpoint: unsupported format version " + std::to_string(ck.version));
    ck.kind = detail::get_string(is);
    try {
        ck.hyperparameters = nlohmann::json::parse(detail::get_string(is));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: bad hyperparameter block: ") + e.what());
    }
    const auto count = detail::get<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name = detail::get_string(is, 4096);
        StoredTensor st;
        const auto rank = detail::get<std::uint32_t>(is);
        if (rank == 0 || rank > 8) throw CheckpointError("checkpoint: tensor '" + name + "' has bad rank");
        for (std::uint32_t r = 0; r < rank; ++r) st.shape.push_back(detail::get<std::uint64_t>(is));
        const auto width = detail::get<std::uint32_t>(is);
        const std::size_t n = element_count(st.shape);
        st.values.resize(n);
        if (width == 4) {
            std::vector<float> raw(n);
            if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4)))
                throw CheckpointError("checkpoint: truncated tensor '" + name + "'");
            std::copy(raw.begin(), raw.end(), st.values.begin());
        } else if (width == 8) {
            if (!is.read(reinterpret_cast<char*>(st.values.data()), static_cast<std::streamsize>(n * 8)))
                throw CheckpointError("checkpoint: truncated tensor '" + name + "'");
        } else {
            throw CheckpointError("checkpoint: tensor '" + name + "' has unsupported element width");
        }
        ck.order.push_back(name);
        ck.tensors.emplace(std::move(name), std::move(st));
    }
    return ck;
}

} // namespace advpath
