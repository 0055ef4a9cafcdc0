#include "drdc/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace drdc {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'D', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

float read_f32(std::istream& in) {
    const uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

void Checkpoint::add(const std::string& name, const Tensor& t) {
    for (const auto& [n, _] : arrays_)
        if (n == name) throw std::invalid_argument("checkpoint: duplicate array " + name);
    arrays_.emplace_back(name, t);
}

bool Checkpoint::has(const std::string& name) const {
    for (const auto& [n, _] : arrays_)
        if (n == name) return true;
    return false;
}

const Tensor& Checkpoint::array(const std::string& name) const {
    for (const auto& [n, t] : arrays_)
        if (n == name) return t;
    throw std::out_of_range("checkpoint: no array named " + name);
}

void Checkpoint::save(const std::string& path) const {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
        out.write(kMagic, 8);
        write_u32(out, static_cast<uint32_t>(metadata_json.size()));
        out.write(metadata_json.data(), static_cast<std::streamsize>(metadata_json.size()));
        write_u32(out, static_cast<uint32_t>(arrays_.size()));
        for (const auto& [name, t] : arrays_) {
            write_u32(out, static_cast<uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u32(out, static_cast<uint32_t>(t.ndim()));
            for (int d = 0; d < t.ndim(); ++d) write_u32(out, static_cast<uint32_t>(t.dim(d)));
            for (int64_t i = 0; i < t.numel(); ++i) write_f32(out, static_cast<float>(t[i]));
        }
        if (!out) throw std::runtime_error("checkpoint: write failure on " + tmp.string());
    }
    fs::rename(tmp, target);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);

    Checkpoint ck;
    const uint32_t meta_len = read_u32(in);
    ck.metadata_json.resize(meta_len);
    in.read(ck.metadata_json.data(), meta_len);
    const uint32_t count = read_u32(in);
    for (uint32_t a = 0; a < count; ++a) {
        const uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t ndim = read_u32(in);
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(read_u32(in));
        Tensor t(shape);
        for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(read_f32(in));
        if (!in) throw std::runtime_error("checkpoint: truncated array data in " + path);
        ck.arrays_.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

void Checkpoint::add_params(const std::vector<nn::Param*>& params) {
    for (const nn::Param* p : params) add(p->name, p->value);
}

void Checkpoint::load_params(const std::vector<nn::Param*>& params) const {
    for (nn::Param* p : params) {
        const Tensor& stored = array(p->name);
        if (!stored.same_shape(p->value))
            throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
        p->value = stored;
    }
}

} // namespace drdc
