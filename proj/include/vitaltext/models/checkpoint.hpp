#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/io.hpp"
#include "vitaltext/numkit/param_store.hpp"

namespace vitaltext::models {

using numkit::ParamStore;

inline constexpr const char* kCheckpointMagic = "VTXCKPT1";

// Named-tensor container plus a key=value config echo so a checkpoint alone
// is enough to reconstruct the model that produced it. The echo block is an
// ordered map, so files are byte-stable for identical inputs.
inline void save_checkpoint(const std::string& path, const ParamStore& ps,
                            const std::map<std::string, std::string>& config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write(kCheckpointMagic, 8);
    io::write_u64(out, config_echo.size());
    for (const auto& [k, v] : config_echo) {
        io::write_string(out, k);
        io::write_string(out, v);
    }
    io::write_u64(out, ps.slot_count());
    for (std::size_t i = 0; i < ps.slot_count(); ++i) {
        const auto& slot = ps.slot_at(i);
        io::write_string(out, slot.name);
        io::write_u64(out, slot.value.rows());
        io::write_u64(out, slot.value.cols());
        for (double v : slot.value.raw()) io::write_f64(out, v);
    }
}

struct Checkpoint {
    std::map<std::string, std::string> config_echo;
    std::vector<std::pair<std::string, numkit::Matrix>> tensors;

    const numkit::Matrix& tensor(const std::string& name) const {
        for (const auto& [n, m] : tensors) {
            if (n == name) return m;
        }
        throw DataError("checkpoint has no tensor named '" + name + "'");
    }
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError(path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != kCheckpointMagic) {
        throw DataError(path + ": not a checkpoint file");
    }
    Checkpoint ck;
    std::uint64_t n_cfg = io::read_u64(in);
    for (std::uint64_t i = 0; i < n_cfg; ++i) {
        std::string k = io::read_string(in);
        ck.config_echo[k] = io::read_string(in);
    }
    std::uint64_t n_tensors = io::read_u64(in);
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        std::string name = io::read_string(in);
        std::uint64_t rows = io::read_u64(in), cols = io::read_u64(in);
        numkit::Matrix m(rows, cols);
        for (double& v : m.raw()) v = io::read_f64(in);
        ck.tensors.emplace_back(std::move(name), std::move(m));
    }
    return ck;
}

// Overwrite a ParamStore's values from a checkpoint (shapes must agree).
inline void restore_params(ParamStore& ps, const Checkpoint& ck) {
    for (std::size_t i = 0; i < ps.slot_count(); ++i) {
        auto& slot = ps.slot_at(i);
        const auto& m = ck.tensor(slot.name);
        if (!m.same_shape(slot.value)) {
            throw DimensionError("checkpoint tensor '" + slot.name + "' is " + m.shape_str() +
                                 ", expected " + slot.value.shape_str());
        }
        slot.value = m;
    }
}

}  // namespace vitaltext::models
