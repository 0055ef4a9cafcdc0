#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drdc/nn.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

/// Single-file archive of named arrays stored as shape-prefixed 32-bit
/// little-endian floats, plus one JSON metadata entry. Writes go to a
/// temporary file and are renamed into place, so an interrupted run never
/// leaves a loadable half-written checkpoint.
class Checkpoint {
public:
    std::string metadata_json = "{}";

    void add(const std::string& name, const Tensor& t);
    bool has(const std::string& name) const;
    const Tensor& array(const std::string& name) const;
    const std::vector<std::pair<std::string, Tensor>>& arrays() const { return arrays_; }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    /// Convenience for parameter sets: store/restore by Param::name.
    void add_params(const std::vector<nn::Param*>& params);
    void load_params(const std::vector<nn::Param*>& params) const;

private:
    std::vector<std::pair<std::string, Tensor>> arrays_;
};

} // namespace drdc
