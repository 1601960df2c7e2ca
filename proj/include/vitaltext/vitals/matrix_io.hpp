#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "vitaltext/errors.hpp"
#include "vitaltext/io.hpp"
#include "vitaltext/numkit/matrix.hpp"

namespace vitaltext::vitals {

using io::read_f64;
using io::read_u64;
using io::write_f64;
using io::write_u64;

// Split tensor file: n_stays, T, L, then row-major values per stay.
inline void write_split_matrix(const std::string& path, const std::vector<numkit::Matrix>& seqs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    std::uint64_t t = seqs.empty() ? 0 : seqs[0].rows();
    std::uint64_t l = seqs.empty() ? 0 : seqs[0].cols();
    write_u64(out, seqs.size());
    write_u64(out, t);
    write_u64(out, l);
    for (const auto& m : seqs) {
        if (m.rows() != t || m.cols() != l) throw DimensionError("ragged sequence batch: " + m.shape_str());
        for (double v : m.raw()) write_f64(out, v);
    }
}

inline std::vector<numkit::Matrix> read_split_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError(path);
    std::uint64_t n = read_u64(in), t = read_u64(in), l = read_u64(in);
    std::vector<numkit::Matrix> seqs;
    seqs.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        numkit::Matrix m(t, l);
        for (double& v : m.raw()) v = read_f64(in);
        seqs.push_back(std::move(m));
    }
    return seqs;
}

// Companion index: one "stay_id<TAB>label" row per stay, same order as the tensor file.
inline void write_stay_index(const std::string& path, const std::vector<std::int64_t>& ids,
                             const std::vector<int>& labels) {
    if (ids.size() != labels.size()) throw DimensionError("ids and labels differ in length");
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << "\t" << labels[i] << "\n";
}

inline void read_stay_index(const std::string& path, std::vector<std::int64_t>& ids,
                            std::vector<int>& labels) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    ids.clear();
    labels.clear();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw DataError(path + ": expected stay_id<TAB>label");
        ids.push_back(std::stoll(line.substr(0, tab)));
        labels.push_back(std::stoi(line.substr(tab + 1)));
    }
}

}  // namespace vitaltext::vitals
