#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/corpus/vocabulary.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/io.hpp"
#include "vitaltext/log.hpp"
#include "vitaltext/numkit/matrix.hpp"
#include "vitaltext/numkit/rng.hpp"

namespace vitaltext::doc2vecc {

using numkit::Matrix;

struct Doc2VecConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    double corruption = 0.9;   // q: drop probability per token in the doc context
    double subsample = 1e-4;   // t: frequent-word threshold on targets; <=0 disables
    std::size_t epochs = 10;
    double lr = 0.025;
};

// Input embeddings U and output embeddings V_out over a fixed vocabulary.
// U rows are what documents average into their vectors.
struct EmbeddingModel {
    corpus::Vocabulary vocab;
    Doc2VecConfig config;
    Matrix u;      // |V| x d
    Matrix v_out;  // |V| x d
    std::vector<double> epoch_loss;  // mean pair loss per epoch, for descent checks
};

struct DocEmbedding {
    std::int64_t stay_id = 0;
    int day = 0;
    std::vector<double> vector;
    bool empty_doc = false;
};

enum class EmbedMode { exact, sampled };

// Mean of input embeddings. Token indices are summed in sorted order, which
// makes the result bitwise permutation-invariant and makes sampled mode with
// q=0 coincide bitwise with exact mode. Empty documents embed to the zero
// vector and are flagged.
inline DocEmbedding embed_document(const std::vector<std::string>& tokens,
                                   const EmbeddingModel& model, EmbedMode mode = EmbedMode::exact,
                                   numkit::Rng* rng = nullptr) {
    DocEmbedding out;
    out.vector.assign(model.config.dim, 0.0);
    if (tokens.empty()) {
        out.empty_doc = true;
        log::warn("embedding an empty document: falling back to the zero vector");
        return out;
    }
    const double q = mode == EmbedMode::sampled ? model.config.corruption : 0.0;
    std::vector<std::size_t> indices;
    indices.reserve(tokens.size());
    for (const auto& tok : tokens) {
        std::size_t idx = model.vocab.encode(tok);
        if (mode == EmbedMode::sampled) {
            if (rng == nullptr) throw ConfigError("rng", "sampled embedding mode needs an rng");
            if (q > 0.0 && rng->uniform() < q) continue;
        }
        indices.push_back(idx);
    }
    std::sort(indices.begin(), indices.end());
    for (std::size_t idx : indices) {
        const double* row = model.u.row(idx);
        for (std::size_t j = 0; j < model.config.dim; ++j) out.vector[j] += row[j];
    }
    const double denom = static_cast<double>(tokens.size()) * (1.0 - q);
    for (double& v : out.vector) v /= denom;
    return out;
}

inline constexpr const char* kEmbeddingMagic = "VTXD2VC1";

inline void save_model(const std::string& path, const EmbeddingModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write(kEmbeddingMagic, 8);
    io::write_u64(out, m.config.dim);
    io::write_u64(out, m.vocab.size());
    io::write_u64(out, m.config.window);
    io::write_u64(out, m.config.negatives);
    io::write_f64(out, m.config.corruption);
    io::write_f64(out, m.config.subsample);
    io::write_u64(out, m.config.epochs);
    io::write_f64(out, m.config.lr);
    for (std::size_t i = 0; i < m.vocab.size(); ++i) {
        io::write_string(out, m.vocab.decode(i));
        io::write_u64(out, static_cast<std::uint64_t>(m.vocab.count(i)));
    }
    for (double v : m.u.raw()) io::write_f64(out, v);
    for (double v : m.v_out.raw()) io::write_f64(out, v);
}

inline EmbeddingModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError(path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != kEmbeddingMagic) {
        throw DataError(path + ": not an embedding model file");
    }
    EmbeddingModel m;
    m.config.dim = io::read_u64(in);
    std::uint64_t vocab_size = io::read_u64(in);
    m.config.window = io::read_u64(in);
    m.config.negatives = io::read_u64(in);
    m.config.corruption = io::read_f64(in);
    m.config.subsample = io::read_f64(in);
    m.config.epochs = io::read_u64(in);
    m.config.lr = io::read_f64(in);

    std::vector<std::pair<std::string, std::int64_t>> rows;
    rows.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        std::string tok = io::read_string(in);
        auto count = static_cast<std::int64_t>(io::read_u64(in));
        rows.emplace_back(std::move(tok), count);
    }
    m.vocab = corpus::Vocabulary::from_rows(rows);
    m.u = Matrix(vocab_size, m.config.dim);
    m.v_out = Matrix(vocab_size, m.config.dim);
    for (double& v : m.u.raw()) v = io::read_f64(in);
    for (double& v : m.v_out.raw()) v = io::read_f64(in);
    return m;
}

// Text export for inspection: "token v1 ... vd" per line.
inline void export_text(const std::string& path, const EmbeddingModel& m) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.precision(17);
    for (std::size_t i = 0; i < m.vocab.size(); ++i) {
        out << m.vocab.decode(i);
        for (std::size_t j = 0; j < m.config.dim; ++j) out << " " << m.u(i, j);
        out << "\n";
    }
}

inline void write_doc_embeddings(const std::string& path, const std::vector<DocEmbedding>& embs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& e : embs) {
        nlohmann::json j{
            {"stay_id", e.stay_id}, {"day", e.day}, {"vector", e.vector}, {"empty_doc", e.empty_doc}};
        out << j.dump() << "\n";
    }
}

inline std::vector<DocEmbedding> read_doc_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<DocEmbedding> embs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        DocEmbedding e;
        e.stay_id = j.at("stay_id").get<std::int64_t>();
        e.day = j.at("day").get<int>();
        e.vector = j.at("vector").get<std::vector<double>>();
        e.empty_doc = j.value("empty_doc", false);
        embs.push_back(std::move(e));
    }
    return embs;
}

}  // namespace vitaltext::doc2vecc
