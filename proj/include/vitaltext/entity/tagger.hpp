#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitaltext/entity/types.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/io.hpp"
#include "vitaltext/models/lstm.hpp"
#include "vitaltext/numkit/grad_check.hpp"
#include "vitaltext/numkit/losses.hpp"
#include "vitaltext/numkit/matrix.hpp"
#include "vitaltext/numkit/optim.hpp"
#include "vitaltext/numkit/param_store.hpp"
#include "vitaltext/numkit/rng.hpp"

namespace vitaltext::entity {

using numkit::Matrix;
using numkit::ParamStore;
using numkit::Rng;

struct TaggedSentence {
    std::vector<std::string> words;
    std::vector<int> tags;
};

// Line-delimited records: {"tokens": [...], "tags": ["B-condition", ...]}.
inline void write_tagged_sentences(const std::string& path, const std::vector<TaggedSentence>& ss) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open tagged-corpus file for writing: " + path);
    for (const auto& s : ss) {
        nlohmann::json j;
        j["tokens"] = s.words;
        std::vector<std::string> names;
        names.reserve(s.tags.size());
        for (int t : s.tags) names.push_back(tag_name(t));
        j["tags"] = names;
        out << j.dump() << '\n';
    }
}

inline std::vector<TaggedSentence> read_tagged_sentences(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<TaggedSentence> ss;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        TaggedSentence s;
        s.words = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& name : j.at("tags")) s.tags.push_back(tag_from_name(name.get<std::string>()));
        if (s.words.size() != s.tags.size())
            throw DataError(path + ":" + std::to_string(line_no) + ": token/tag count mismatch");
        ss.push_back(std::move(s));
    }
    return ss;
}

// Gold sequences must be BIO-consistent; predictions are decoded leniently
// instead (see spans_from_tags).
inline void validate_gold_tags(const std::vector<TaggedSentence>& ss) {
    for (std::size_t si = 0; si < ss.size(); ++si) {
        const auto& s = ss[si];
        if (s.words.size() != s.tags.size())
            throw DataError("sentence " + std::to_string(si) + ": token/tag count mismatch");
        for (std::size_t i = 0; i < s.tags.size(); ++i) {
            TagInfo info = tag_info(s.tags[i]);  // throws on out-of-range ids
            if (info.outside || info.begin) continue;
            bool ok = false;
            if (i > 0) {
                TagInfo prev = tag_info(s.tags[i - 1]);
                ok = !prev.outside && prev.type == info.type && prev.negated == info.negated;
            }
            if (!ok)
                throw DataError("sentence " + std::to_string(si) + ": I tag '" +
                                tag_name(s.tags[i]) + "' at position " + std::to_string(i) +
                                " without a matching B/I before it");
        }
    }
}

struct TaggerConfig {
    std::size_t char_emb = 16;
    std::size_t char_filters = 32;
    std::size_t char_width = 3;  // must be odd (symmetric zero padding)
    std::size_t word_emb = 16;
    std::size_t enc_hidden = 32;
    std::size_t dec_hidden = 32;
    std::size_t tag_emb = 8;
    double dropout = 0.25;       // between the two char-CNN layers, training only
    double word_dropout = 0.5;   // word index -> UNK, training only

    // Residual input->output connection per conv layer, applied where the
    // dims line up: layer 2 always (filters->filters); layer 1 only if the
    // char embedding width happens to equal the filter count.
    bool residual_flag(std::size_t layer) const {
        return layer == 0 ? char_emb == char_filters : true;
    }
};

struct TaggerTrainConfig {
    std::size_t epochs = 200;
    double lr = 1e-4;
    bool adam = false;
    double target_acc = 0.0;  // stop once training accuracy reaches this (0 = run all epochs)
    std::uint64_t seed = 1;
};

struct TaggerTrainHistory {
    std::vector<double> epoch_loss;  // mean per-token teacher-forced CE seen during the epoch
    std::vector<double> eval_loss;   // dropout-free corpus loss: [0] before training, then one per epoch
    std::vector<double> epoch_acc;   // greedy token accuracy on the training set
    std::size_t epochs_run = 0;
    bool reached_target = false;
};

class Tagger {
public:
    static constexpr int kGoSymbol = kNumTags;  // extra row in the tag embedding

    Tagger(TaggerConfig cfg, const std::string& char_syms, const std::vector<std::string>& word_syms,
           std::uint64_t seed)
        : cfg_(cfg), char_syms_(char_syms), word_syms_(word_syms) {
        if (cfg_.char_width % 2 == 0)
            throw ConfigError("char_width", "convolution width must be odd");
        for (std::size_t i = 0; i < char_syms_.size(); ++i) {
            if (!char_index_.emplace(char_syms_[i], i + 1).second)
                throw ConfigError("char_vocab", std::string("duplicate char symbol '") + char_syms_[i] + "'");
        }
        for (std::size_t i = 0; i < word_syms_.size(); ++i) {
            if (!word_index_.emplace(word_syms_[i], i + 1).second)
                throw ConfigError("word_vocab", "duplicate word symbol '" + word_syms_[i] + "'");
        }
        Rng rng(seed, 0x7a99e);
        numkit::fill_glorot(ps_.create("char.emb", char_syms_.size() + 1, cfg_.char_emb), rng);
        numkit::fill_glorot(ps_.create("char.conv1.W", cfg_.char_filters, cfg_.char_width * cfg_.char_emb), rng);
        ps_.create("char.conv1.b", 1, cfg_.char_filters);
        numkit::fill_glorot(ps_.create("char.conv2.W", cfg_.char_filters, cfg_.char_width * cfg_.char_filters), rng);
        ps_.create("char.conv2.b", 1, cfg_.char_filters);
        numkit::fill_glorot(ps_.create("word.emb", word_syms_.size() + 1, cfg_.word_emb), rng);
        models::lstm_init_params(ps_, "enc", {cfg_.char_filters + cfg_.word_emb, cfg_.enc_hidden}, rng);
        numkit::fill_glorot(ps_.create("tag.emb", kNumTags + 1, cfg_.tag_emb), rng);
        models::lstm_init_params(ps_, "dec", {cfg_.tag_emb + cfg_.enc_hidden, cfg_.dec_hidden}, rng);
        numkit::fill_glorot(ps_.create("out.W", kNumTags, cfg_.dec_hidden), rng);
        ps_.create("out.b", 1, kNumTags);
    }

    // Vocabularies harvested from the training corpus (sorted for determinism);
    // index 0 in both tables is reserved for unknowns.
    static Tagger build(const std::vector<TaggedSentence>& corpus, const TaggerConfig& cfg,
                        std::uint64_t seed) {
        std::set<char> chars;
        std::set<std::string> words;
        for (const auto& s : corpus)
            for (const auto& w : s.words) {
                words.insert(w);
                for (char c : w) chars.insert(c);
            }
        return Tagger(cfg, std::string(chars.begin(), chars.end()),
                      std::vector<std::string>(words.begin(), words.end()), seed);
    }

    const TaggerConfig& config() const { return cfg_; }
    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }
    std::size_t char_index(char c) const {
        auto it = char_index_.find(c);
        return it == char_index_.end() ? 0 : it->second;
    }
    std::size_t word_index(const std::string& w) const {
        auto it = word_index_.find(w);
        return it == word_index_.end() ? 0 : it->second;
    }

    // Greedy decode: per-word tag distributions (rows sum to 1).
    Matrix forward(const std::vector<std::string>& words) const {
        if (words.empty()) throw DomainError("tagger forward: empty sentence");
        const std::size_t n = words.size();
        std::vector<Matrix> xs_enc = encoder_inputs(words, /*training=*/false, nullptr, nullptr);
        models::LstmCache enc = models::lstm_forward(xs_enc, ps_, "enc");

        const Matrix& tag_emb = ps_.param("tag.emb");
        Matrix probs(n, kNumTags);
        Matrix h(1, cfg_.dec_hidden), c(1, cfg_.dec_hidden);
        int prev = kGoSymbol;
        for (std::size_t i = 0; i < n; ++i) {
            Matrix x(1, cfg_.tag_emb + cfg_.enc_hidden);
            for (std::size_t k = 0; k < cfg_.tag_emb; ++k)
                x(0, k) = tag_emb(static_cast<std::size_t>(prev), k);
            for (std::size_t k = 0; k < cfg_.enc_hidden; ++k)
                x(0, cfg_.tag_emb + k) = enc.h[i](0, k);
            models::lstm_step(x, h, c, ps_, "dec");
            Matrix logits = numkit::affine(h, ps_.param("out.W"), ps_.param("out.b"));
            numkit::softmax(logits.row(0), kNumTags, probs.row(i));
            prev = 0;
            for (int t = 1; t < kNumTags; ++t)
                if (probs(i, static_cast<std::size_t>(t)) > probs(i, static_cast<std::size_t>(prev))) prev = t;
        }
        return probs;
    }

    std::vector<int> predict(const std::vector<std::string>& words) const {
        Matrix probs = forward(words);
        std::vector<int> tags(probs.rows(), 0);
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            int best = 0;
            for (int t = 1; t < kNumTags; ++t)
                if (probs(i, static_cast<std::size_t>(t)) > probs(i, static_cast<std::size_t>(best))) best = t;
            tags[i] = best;
        }
        return tags;
    }

    // Teacher-forced mean per-token cross-entropy over the batch. When
    // `accumulate` is set, parameter gradients for that loss are added to the
    // store (callers step the optimizer). Pass training=false for a
    // deterministic loss (no dropout), as grad_check requires.
    double batch_loss(const std::vector<TaggedSentence>& batch, bool training, Rng* rng,
                      bool accumulate = true) {
        if (batch.empty()) throw DomainError("tagger batch_loss: empty batch");
        std::size_t total_tokens = 0;
        for (const auto& s : batch) {
            if (s.words.empty()) throw DomainError("tagger batch_loss: empty sentence");
            total_tokens += s.words.size();
        }
        const double scale = 1.0 / static_cast<double>(total_tokens);
        double total_loss = 0.0;
        for (const auto& s : batch) total_loss += sentence_loss(s, scale, training, rng, accumulate);
        return total_loss * scale;
    }

    TaggerTrainHistory train(const std::vector<TaggedSentence>& corpus, const TaggerTrainConfig& tc) {
        if (corpus.empty()) throw ConfigError("corpus", "tagger train: empty corpus");
        validate_gold_tags(corpus);
        Rng rng(tc.seed, 0x7a6);
        numkit::AdamState adam;
        if (tc.adam) adam.init(ps_);
        std::vector<std::size_t> order(corpus.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        TaggerTrainHistory hist;
        if (tc.epochs > 0) hist.eval_loss.push_back(batch_loss(corpus, false, nullptr, false));
        for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
            rng.shuffle(order);
            double ep_loss = 0.0;
            for (std::size_t idx : order) {
                ep_loss += batch_loss({corpus[idx]}, /*training=*/true, &rng);
                if (tc.adam)
                    numkit::adam_step(ps_, adam, tc.lr);
                else
                    numkit::sgd_step(ps_, tc.lr);
            }
            hist.epoch_loss.push_back(ep_loss / static_cast<double>(corpus.size()));
            hist.eval_loss.push_back(batch_loss(corpus, false, nullptr, false));
            double acc = token_accuracy(corpus);
            hist.epoch_acc.push_back(acc);
            ++hist.epochs_run;
            if (tc.target_acc > 0.0 && acc >= tc.target_acc) {
                hist.reached_target = true;
                break;
            }
        }
        return hist;
    }

    double token_accuracy(const std::vector<TaggedSentence>& corpus) const {
        std::size_t hit = 0, total = 0;
        for (const auto& s : corpus) {
            std::vector<int> pred = predict(s.words);
            for (std::size_t i = 0; i < s.tags.size(); ++i) {
                ++total;
                if (pred[i] == s.tags[i]) ++hit;
            }
        }
        return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open tagger file for writing: " + path);
        out.write("VTXTAGR1", 8);
        io::write_u64(out, cfg_.char_emb);
        io::write_u64(out, cfg_.char_filters);
        io::write_u64(out, cfg_.char_width);
        io::write_u64(out, cfg_.word_emb);
        io::write_u64(out, cfg_.enc_hidden);
        io::write_u64(out, cfg_.dec_hidden);
        io::write_u64(out, cfg_.tag_emb);
        io::write_f64(out, cfg_.dropout);
        io::write_f64(out, cfg_.word_dropout);
        io::write_string(out, char_syms_);
        io::write_u64(out, word_syms_.size());
        for (const auto& w : word_syms_) io::write_string(out, w);
        io::write_u64(out, ps_.slot_count());
        for (std::size_t si = 0; si < ps_.slot_count(); ++si) {
            const auto& slot = ps_.slot_at(si);
            io::write_string(out, slot.name);
            io::write_u64(out, slot.value.rows());
            io::write_u64(out, slot.value.cols());
            for (std::size_t k = 0; k < slot.value.size(); ++k) io::write_f64(out, slot.value.data()[k]);
        }
        if (!out) throw Error("short write to tagger file: " + path);
    }

    static Tagger load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw MissingFileError(path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::string(magic, 8) != "VTXTAGR1")
            throw DataError("not a tagger file: " + path);
        TaggerConfig cfg;
        cfg.char_emb = io::read_u64(in);
        cfg.char_filters = io::read_u64(in);
        cfg.char_width = io::read_u64(in);
        cfg.word_emb = io::read_u64(in);
        cfg.enc_hidden = io::read_u64(in);
        cfg.dec_hidden = io::read_u64(in);
        cfg.tag_emb = io::read_u64(in);
        cfg.dropout = io::read_f64(in);
        cfg.word_dropout = io::read_f64(in);
        std::string char_syms = io::read_string(in);
        std::size_t n_words = io::read_u64(in);
        std::vector<std::string> words(n_words);
        for (auto& w : words) w = io::read_string(in);
        Tagger tagger(cfg, char_syms, words, /*seed=*/0);
        std::size_t n_slots = io::read_u64(in);
        if (n_slots != tagger.ps_.slot_count()) throw DataError("tagger file slot count mismatch: " + path);
        for (std::size_t si = 0; si < n_slots; ++si) {
            std::string name = io::read_string(in);
            std::size_t rows = io::read_u64(in), cols = io::read_u64(in);
            Matrix& value = tagger.ps_.param(name);
            if (value.rows() != rows || value.cols() != cols)
                throw DataError("tagger file shape mismatch for slot '" + name + "': " + path);
            for (std::size_t k = 0; k < value.size(); ++k) value.data()[k] = io::read_f64(in);
        }
        if (!in) throw DataError("truncated tagger file: " + path);
        return tagger;
    }

private:
    struct CharCache {
        std::vector<std::size_t> idx;  // char row per position
        Matrix emb;                    // m x char_emb
        Matrix a1, y1;                 // conv1 preactivation; layer-1 output fed to conv2
        Matrix mask;                   // dropout multipliers (empty when eval)
        Matrix a2, y2;                 // conv2 preactivation; post-residual output
        std::vector<std::size_t> argmax;
    };

    // conv over rows of `in` (m x c_in) with symmetric zero padding:
    // out(p, f) = b(f) + sum_{d,e} W(f, d*c_in + e) * in(p + d - half, e)
    Matrix conv(const Matrix& in, const Matrix& w, const Matrix& b) const {
        const std::size_t m = in.rows(), c_in = in.cols(), half = cfg_.char_width / 2;
        Matrix out(m, w.rows());
        for (std::size_t p = 0; p < m; ++p) {
            double* orow = out.row(p);
            for (std::size_t f = 0; f < w.rows(); ++f) {
                const double* wrow = w.row(f);
                double acc = b(0, f);
                for (std::size_t d = 0; d < cfg_.char_width; ++d) {
                    std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + d) - static_cast<std::ptrdiff_t>(half);
                    if (q < 0 || q >= static_cast<std::ptrdiff_t>(m)) continue;
                    const double* irow = in.row(static_cast<std::size_t>(q));
                    const double* wseg = wrow + d * c_in;
                    for (std::size_t e = 0; e < c_in; ++e) acc += wseg[e] * irow[e];
                }
                orow[f] = acc;
            }
        }
        return out;
    }

    // d(conv)/d(in), d(conv)/dW, d(conv)/db given dout; accumulates.
    void conv_backward(const Matrix& in, const Matrix& w, const Matrix& dout, Matrix& dw, Matrix& db,
                       Matrix& din) const {
        const std::size_t m = in.rows(), c_in = in.cols(), half = cfg_.char_width / 2;
        for (std::size_t p = 0; p < m; ++p) {
            const double* drow = dout.row(p);
            for (std::size_t f = 0; f < w.rows(); ++f) {
                const double g = drow[f];
                if (g == 0.0) continue;
                db(0, f) += g;
                const double* wrow = w.row(f);
                double* dwrow = dw.row(f);
                for (std::size_t d = 0; d < cfg_.char_width; ++d) {
                    std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + d) - static_cast<std::ptrdiff_t>(half);
                    if (q < 0 || q >= static_cast<std::ptrdiff_t>(m)) continue;
                    const double* irow = in.row(static_cast<std::size_t>(q));
                    double* dirow = din.row(static_cast<std::size_t>(q));
                    const double* wseg = wrow + d * c_in;
                    double* dwseg = dwrow + d * c_in;
                    for (std::size_t e = 0; e < c_in; ++e) {
                        dwseg[e] += g * irow[e];
                        dirow[e] += g * wseg[e];
                    }
                }
            }
        }
    }

    // Char-CNN: embed chars, two convolutions with ReLU (+residual where the
    // dims allow), dropout between the layers in training mode, max-pool over
    // positions.
    Matrix char_feature(const std::string& word, bool training, Rng* rng, CharCache* cache) const {
        const std::size_t m = word.size();
        if (m == 0) throw DomainError("tagger: empty word");
        const Matrix& emb_table = ps_.param("char.emb");
        CharCache local;
        CharCache& cc = cache ? *cache : local;
        cc.idx.resize(m);
        cc.emb = Matrix(m, cfg_.char_emb);
        for (std::size_t p = 0; p < m; ++p) {
            cc.idx[p] = char_index(word[p]);
            for (std::size_t e = 0; e < cfg_.char_emb; ++e) cc.emb(p, e) = emb_table(cc.idx[p], e);
        }

        cc.a1 = conv(cc.emb, ps_.param("char.conv1.W"), ps_.param("char.conv1.b"));
        Matrix r1 = numkit::relu(cc.a1);
        if (cfg_.residual_flag(0)) add_inplace(r1, cc.emb);
        if (training && cfg_.dropout > 0.0) {
            if (!rng) throw ConfigError("rng", "training-mode char dropout needs an rng");
            cc.mask = Matrix(m, cfg_.char_filters);
            const double keep = 1.0 - cfg_.dropout;
            for (std::size_t k = 0; k < cc.mask.size(); ++k)
                cc.mask.raw()[k] = rng->uniform() < keep ? 1.0 / keep : 0.0;
            cc.y1 = Matrix(m, cfg_.char_filters);
            for (std::size_t k = 0; k < cc.y1.size(); ++k)
                cc.y1.raw()[k] = r1.raw()[k] * cc.mask.raw()[k];
        } else {
            cc.y1 = std::move(r1);
        }

        cc.a2 = conv(cc.y1, ps_.param("char.conv2.W"), ps_.param("char.conv2.b"));
        cc.y2 = numkit::relu(cc.a2);
        if (cfg_.residual_flag(1)) add_inplace(cc.y2, cc.y1);

        Matrix feat(1, cfg_.char_filters);
        cc.argmax.assign(cfg_.char_filters, 0);
        for (std::size_t f = 0; f < cfg_.char_filters; ++f) {
            double best = cc.y2(0, f);
            std::size_t arg = 0;
            for (std::size_t p = 1; p < m; ++p)
                if (cc.y2(p, f) > best) {
                    best = cc.y2(p, f);
                    arg = p;
                }
            feat(0, f) = best;
            cc.argmax[f] = arg;
        }
        return feat;
    }

    void char_feature_backward(const CharCache& cc, const double* dfeat) {
        const std::size_t m = cc.emb.rows();
        Matrix dy2(m, cfg_.char_filters);
        for (std::size_t f = 0; f < cfg_.char_filters; ++f) dy2(cc.argmax[f], f) += dfeat[f];

        Matrix da2(m, cfg_.char_filters);
        Matrix dy1(m, cfg_.char_filters);
        for (std::size_t k = 0; k < dy2.size(); ++k) {
            da2.raw()[k] = cc.a2.raw()[k] > 0.0 ? dy2.raw()[k] : 0.0;
            if (cfg_.residual_flag(1)) dy1.raw()[k] = dy2.raw()[k];
        }
        conv_backward(cc.y1, ps_.param("char.conv2.W"), da2, ps_.grad("char.conv2.W"),
                      ps_.grad("char.conv2.b"), dy1);

        if (cc.mask.size() > 0)
            for (std::size_t k = 0; k < dy1.size(); ++k) dy1.raw()[k] *= cc.mask.raw()[k];

        Matrix da1(m, cfg_.char_filters);
        for (std::size_t k = 0; k < da1.size(); ++k)
            da1.raw()[k] = cc.a1.raw()[k] > 0.0 ? dy1.raw()[k] : 0.0;
        Matrix demb(m, cfg_.char_emb);
        if (cfg_.residual_flag(0))
            for (std::size_t k = 0; k < demb.size(); ++k) demb.raw()[k] = dy1.raw()[k];
        conv_backward(cc.emb, ps_.param("char.conv1.W"), da1, ps_.grad("char.conv1.W"),
                      ps_.grad("char.conv1.b"), demb);

        Matrix& demb_table = ps_.grad("char.emb");
        for (std::size_t p = 0; p < m; ++p) {
            double* drow = demb_table.row(cc.idx[p]);
            for (std::size_t e = 0; e < cfg_.char_emb; ++e) drow[e] += demb(p, e);
        }
    }

    // Encoder step inputs: [char feature ; word embedding], with 50% word
    // dropout to UNK in training mode.
    std::vector<Matrix> encoder_inputs(const std::vector<std::string>& words, bool training, Rng* rng,
                                       std::vector<CharCache>* caches,
                                       std::vector<std::size_t>* used_word_idx = nullptr) const {
        const std::size_t n = words.size();
        const Matrix& word_table = ps_.param("word.emb");
        if (caches) caches->resize(n);
        std::vector<Matrix> xs;
        xs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            Matrix feat = char_feature(words[i], training, rng, caches ? &(*caches)[i] : nullptr);
            std::size_t wi = word_index(words[i]);
            if (training && cfg_.word_dropout > 0.0) {
                if (!rng) throw ConfigError("rng", "training-mode word dropout needs an rng");
                if (rng->uniform() < cfg_.word_dropout) wi = 0;
            }
            if (used_word_idx) (*used_word_idx)[i] = wi;
            Matrix x(1, cfg_.char_filters + cfg_.word_emb);
            for (std::size_t k = 0; k < cfg_.char_filters; ++k) x(0, k) = feat(0, k);
            for (std::size_t k = 0; k < cfg_.word_emb; ++k)
                x(0, cfg_.char_filters + k) = word_table(wi, k);
            xs.push_back(std::move(x));
        }
        return xs;
    }

    double sentence_loss(const TaggedSentence& s, double scale, bool training, Rng* rng,
                         bool accumulate) {
        const std::size_t n = s.words.size();
        std::vector<CharCache> ccaches;
        std::vector<std::size_t> used_word_idx(n, 0);
        std::vector<Matrix> xs_enc =
            encoder_inputs(s.words, training, rng, accumulate ? &ccaches : nullptr, &used_word_idx);
        models::LstmCache enc = models::lstm_forward(xs_enc, ps_, "enc");

        const Matrix& tag_emb = ps_.param("tag.emb");
        std::vector<int> prev_tag(n, kGoSymbol);
        for (std::size_t i = 1; i < n; ++i) prev_tag[i] = s.tags[i - 1];
        std::vector<Matrix> xs_dec;
        xs_dec.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            Matrix x(1, cfg_.tag_emb + cfg_.enc_hidden);
            for (std::size_t k = 0; k < cfg_.tag_emb; ++k)
                x(0, k) = tag_emb(static_cast<std::size_t>(prev_tag[i]), k);
            for (std::size_t k = 0; k < cfg_.enc_hidden; ++k)
                x(0, cfg_.tag_emb + k) = enc.h[i](0, k);
            xs_dec.push_back(std::move(x));
        }
        models::LstmCache dec = models::lstm_forward(xs_dec, ps_, "dec");

        const Matrix& out_w = ps_.param("out.W");
        const Matrix& out_b = ps_.param("out.b");
        double loss_sum = 0.0;
        std::vector<Matrix> dh_dec(n, Matrix(1, cfg_.dec_hidden));
        std::vector<double> probs(kNumTags);
        for (std::size_t i = 0; i < n; ++i) {
            Matrix logits = numkit::affine(dec.h[i], out_w, out_b);
            const std::size_t target = static_cast<std::size_t>(s.tags[i]);
            loss_sum += numkit::softmax_cross_entropy_probs(logits.row(0), kNumTags, target, probs.data());
            if (!accumulate) continue;
            Matrix dlogits(1, kNumTags);
            for (std::size_t t = 0; t < static_cast<std::size_t>(kNumTags); ++t)
                dlogits(0, t) = (probs[t] - (t == target ? 1.0 : 0.0)) * scale;
            numkit::affine_backward(dec.h[i], out_w, dlogits, ps_.grad("out.W"), ps_.grad("out.b"),
                                    &dh_dec[i]);
        }
        if (!accumulate) return loss_sum;

        std::vector<Matrix> dx_dec(n, Matrix(1, cfg_.tag_emb + cfg_.enc_hidden));
        models::lstm_backward(dec, dh_dec, ps_, "dec", &dx_dec);

        Matrix& dtag_emb = ps_.grad("tag.emb");
        std::vector<Matrix> dh_enc(n, Matrix(1, cfg_.enc_hidden));
        for (std::size_t i = 0; i < n; ++i) {
            double* trow = dtag_emb.row(static_cast<std::size_t>(prev_tag[i]));
            for (std::size_t k = 0; k < cfg_.tag_emb; ++k) trow[k] += dx_dec[i](0, k);
            for (std::size_t k = 0; k < cfg_.enc_hidden; ++k)
                dh_enc[i](0, k) = dx_dec[i](0, cfg_.tag_emb + k);
        }

        std::vector<Matrix> dx_enc(n, Matrix(1, cfg_.char_filters + cfg_.word_emb));
        models::lstm_backward(enc, dh_enc, ps_, "enc", &dx_enc);

        Matrix& dword_emb = ps_.grad("word.emb");
        for (std::size_t i = 0; i < n; ++i) {
            char_feature_backward(ccaches[i], dx_enc[i].row(0));
            double* wrow = dword_emb.row(used_word_idx[i]);
            for (std::size_t k = 0; k < cfg_.word_emb; ++k)
                wrow[k] += dx_enc[i](0, cfg_.char_filters + k);
        }
        return loss_sum;
    }

    TaggerConfig cfg_;
    std::string char_syms_;
    std::vector<std::string> word_syms_;
    std::map<char, std::size_t> char_index_;
    std::map<std::string, std::size_t> word_index_;
    ParamStore ps_;
};

}  // namespace vitaltext::entity
