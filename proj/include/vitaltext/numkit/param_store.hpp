#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/matrix.hpp"

namespace vitaltext::numkit {

// Named parameter slots, each pairing a value matrix with a same-shape
// gradient accumulator. Slots iterate in insertion order so optimizer
// sweeps and checkpoints are deterministic.
class ParamStore {
public:
    struct Slot {
        std::string name;
        Matrix value;
        Matrix grad;
    };

    Matrix& create(const std::string& name, std::size_t rows, std::size_t cols) {
        if (index_.count(name)) {
            throw ConfigError(name, "duplicate parameter slot");
        }
        index_[name] = slots_.size();
        slots_.push_back(Slot{name, Matrix(rows, cols), Matrix(rows, cols)});
        return slots_.back().value;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Matrix& param(const std::string& name) { return slot(name).value; }
    const Matrix& param(const std::string& name) const { return slot(name).value; }

    Matrix& grad(const std::string& name) { return slot(name).grad; }
    const Matrix& grad(const std::string& name) const { return slot(name).grad; }

    void zero_grads() {
        for (Slot& s : slots_) s.grad.zero();
    }

    std::size_t slot_count() const { return slots_.size(); }

    std::size_t total_params() const {
        std::size_t n = 0;
        for (const Slot& s : slots_) n += s.value.size();
        return n;
    }

    Slot& slot_at(std::size_t i) { return slots_[i]; }
    const Slot& slot_at(std::size_t i) const { return slots_[i]; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(slots_.size());
        for (const Slot& s : slots_) out.push_back(s.name);
        return out;
    }

    // Deep copy of parameter values only (used for best-epoch snapshots).
    std::vector<Matrix> snapshot_values() const {
        std::vector<Matrix> out;
        out.reserve(slots_.size());
        for (const Slot& s : slots_) out.push_back(s.value);
        return out;
    }

    void restore_values(const std::vector<Matrix>& values) {
        if (values.size() != slots_.size()) {
            throw DimensionError("ParamStore::restore_values: slot count mismatch");
        }
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            check_same_shape(slots_[i].value, values[i], "restore_values " + slots_[i].name);
            slots_[i].value = values[i];
        }
    }

private:
    Slot& slot(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError(name, "unknown parameter slot");
        return slots_[it->second];
    }
    const Slot& slot(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError(name, "unknown parameter slot");
        return slots_[it->second];
    }

    std::vector<Slot> slots_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace vitaltext::numkit
