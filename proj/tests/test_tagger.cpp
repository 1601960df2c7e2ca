#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "vitaltext/entity/tagger.hpp"
#include "vitaltext/entity/types.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/numkit/grad_check.hpp"

using namespace vitaltext;
using namespace vitaltext::entity;
using numkit::Matrix;
using numkit::ParamStore;
using numkit::Rng;

namespace oracle {

// Straight-line reimplementation of the tagger forward pass on plain vectors,
// sharing only the parameter values with the production code.
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat grab(const ParamStore& ps, const std::string& name) {
    const Matrix& m = ps.param(name);
    Mat out(m.rows(), Vec(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    return out;
}

Mat conv(const Mat& in, const Mat& w, const Vec& b, std::size_t width) {
    const std::size_t m = in.size(), c_in = in[0].size(), half = width / 2, nf = w.size();
    Mat out(m, Vec(nf));
    for (std::size_t p = 0; p < m; ++p)
        for (std::size_t f = 0; f < nf; ++f) {
            double acc = b[f];
            for (std::size_t d = 0; d < width; ++d) {
                std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + d) - static_cast<std::ptrdiff_t>(half);
                if (q < 0 || q >= static_cast<std::ptrdiff_t>(m)) continue;
                for (std::size_t e = 0; e < c_in; ++e)
                    acc += w[f][d * c_in + e] * in[static_cast<std::size_t>(q)][e];
            }
            out[p][f] = acc;
        }
    return out;
}

// One peephole-LSTM step; h and c updated in place.
void lstm_step(const Vec& x, Vec& h, Vec& c, const ParamStore& ps, const std::string& pre) {
    Mat wxi = grab(ps, pre + ".W_xi"), whi = grab(ps, pre + ".W_hi");
    Mat wxf = grab(ps, pre + ".W_xf"), whf = grab(ps, pre + ".W_hf");
    Mat wxc = grab(ps, pre + ".W_xc"), whc = grab(ps, pre + ".W_hc");
    Mat wxo = grab(ps, pre + ".W_xo"), who = grab(ps, pre + ".W_ho");
    Mat bi = grab(ps, pre + ".b_i"), bf = grab(ps, pre + ".b_f");
    Mat bc = grab(ps, pre + ".b_c"), bo = grab(ps, pre + ".b_o");
    Mat pci = grab(ps, pre + ".w_ci"), pcf = grab(ps, pre + ".w_cf"), pco = grab(ps, pre + ".w_co");
    const std::size_t H = h.size();
    Vec c_new(H);
    for (std::size_t j = 0; j < H; ++j) {
        double ai = bi[0][j] + pci[0][j] * c[j];
        double af = bf[0][j] + pcf[0][j] * c[j];
        double ag = bc[0][j];
        for (std::size_t k = 0; k < x.size(); ++k) {
            ai += wxi[j][k] * x[k];
            af += wxf[j][k] * x[k];
            ag += wxc[j][k] * x[k];
        }
        for (std::size_t k = 0; k < H; ++k) {
            ai += whi[j][k] * h[k];
            af += whf[j][k] * h[k];
            ag += whc[j][k] * h[k];
        }
        c_new[j] = sig(af) * c[j] + sig(ai) * std::tanh(ag);
    }
    Vec h_new(H);
    for (std::size_t j = 0; j < H; ++j) {
        double ao = bo[0][j] + pco[0][j] * c_new[j];
        for (std::size_t k = 0; k < x.size(); ++k) ao += wxo[j][k] * x[k];
        for (std::size_t k = 0; k < H; ++k) ao += who[j][k] * h[k];
        h_new[j] = sig(ao) * std::tanh(c_new[j]);
    }
    h = h_new;
    c = c_new;
}

Mat tagger_forward(const Tagger& tg, const std::vector<std::string>& words) {
    const TaggerConfig& cfg = tg.config();
    const ParamStore& ps = tg.params();
    Mat char_table = grab(ps, "char.emb");
    Mat w1 = grab(ps, "char.conv1.W"), w2 = grab(ps, "char.conv2.W");
    Vec b1 = grab(ps, "char.conv1.b")[0], b2 = grab(ps, "char.conv2.b")[0];
    Mat word_table = grab(ps, "word.emb");
    Mat tag_table = grab(ps, "tag.emb");
    Mat out_w = grab(ps, "out.W");
    Vec out_b = grab(ps, "out.b")[0];

    Mat xs_enc;
    for (const auto& word : words) {
        Mat emb;
        for (char ch : word) emb.push_back(char_table[tg.char_index(ch)]);
        Mat a1 = conv(emb, w1, b1, cfg.char_width);
        Mat r1 = a1;
        for (auto& r : r1)
            for (auto& v : r) v = v > 0.0 ? v : 0.0;
        if (cfg.residual_flag(0))
            for (std::size_t p = 0; p < r1.size(); ++p)
                for (std::size_t e = 0; e < r1[p].size(); ++e) r1[p][e] += emb[p][e];
        Mat a2 = conv(r1, w2, b2, cfg.char_width);
        Mat y2 = a2;
        for (auto& r : y2)
            for (auto& v : r) v = v > 0.0 ? v : 0.0;
        if (cfg.residual_flag(1))
            for (std::size_t p = 0; p < y2.size(); ++p)
                for (std::size_t e = 0; e < y2[p].size(); ++e) y2[p][e] += r1[p][e];
        Vec x;
        for (std::size_t f = 0; f < cfg.char_filters; ++f) {
            double best = y2[0][f];
            for (std::size_t p = 1; p < y2.size(); ++p) best = std::max(best, y2[p][f]);
            x.push_back(best);
        }
        const Vec& wrow = word_table[tg.word_index(word)];
        x.insert(x.end(), wrow.begin(), wrow.end());
        xs_enc.push_back(std::move(x));
    }

    Mat enc_h;
    {
        Vec h(cfg.enc_hidden), c(cfg.enc_hidden);
        for (const auto& x : xs_enc) {
            lstm_step(x, h, c, ps, "enc");
            enc_h.push_back(h);
        }
    }

    Mat probs;
    Vec h(cfg.dec_hidden), c(cfg.dec_hidden);
    int prev = Tagger::kGoSymbol;
    for (std::size_t i = 0; i < words.size(); ++i) {
        Vec x = tag_table[static_cast<std::size_t>(prev)];
        x.insert(x.end(), enc_h[i].begin(), enc_h[i].end());
        lstm_step(x, h, c, ps, "dec");
        Vec logits(kNumTags);
        for (int t = 0; t < kNumTags; ++t) {
            double acc = out_b[static_cast<std::size_t>(t)];
            for (std::size_t k = 0; k < cfg.dec_hidden; ++k)
                acc += out_w[static_cast<std::size_t>(t)][k] * h[k];
            logits[static_cast<std::size_t>(t)] = acc;
        }
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double sum = 0.0;
        Vec p(kNumTags);
        for (std::size_t t = 0; t < p.size(); ++t) {
            p[t] = std::exp(logits[t] - mx);
            sum += p[t];
        }
        for (double& v : p) v /= sum;
        prev = 0;
        for (int t = 1; t < kNumTags; ++t)
            if (p[static_cast<std::size_t>(t)] > p[static_cast<std::size_t>(prev)]) prev = t;
        probs.push_back(std::move(p));
    }
    return probs;
}

}  // namespace oracle

namespace {

const int kO = kOutsideTag;
const int kBCond = tag_id(EntityType::kCondition, true, false);
const int kICond = tag_id(EntityType::kCondition, false, false);
const int kBCondNeg = tag_id(EntityType::kCondition, true, true);
const int kICondNeg = tag_id(EntityType::kCondition, false, true);
const int kBMed = tag_id(EntityType::kMedication, true, false);
const int kBTest = tag_id(EntityType::kTest, true, false);
const int kITest = tag_id(EntityType::kTest, false, false);
const int kBTreat = tag_id(EntityType::kTreatment, true, false);
const int kBProc = tag_id(EntityType::kProcedure, true, false);

std::vector<TaggedSentence> toy_corpus() {
    return {
        {{"patient", "has", "fever"}, {kO, kO, kBCond}},
        {{"no", "chest", "pain"}, {kO, kBCondNeg, kICondNeg}},
        {{"gave", "aspirin", "today"}, {kO, kBMed, kO}},
        {{"chest", "xray", "done"}, {kBTest, kITest, kO}},
        {{"started", "dialysis"}, {kO, kBTreat}},
        {{"intubation", "performed"}, {kBProc, kO}},
        {{"denies", "cough", "now"}, {kO, kBCondNeg, kO}},
        {{"stable", "overnight"}, {kBCond, kO}},
        {{"repeat", "chest", "xray"}, {kO, kBTest, kITest}},
        {{"fever", "resolved"}, {kBCond, kO}},
        {{"aspirin", "held"}, {kBMed, kO}},
        {{"dialysis", "tomorrow"}, {kBTreat, kO}},
    };
}

TaggerConfig small_config(std::size_t char_emb = 6, std::size_t filters = 7) {
    TaggerConfig cfg;
    cfg.char_emb = char_emb;
    cfg.char_filters = filters;
    cfg.word_emb = 5;
    cfg.enc_hidden = 8;
    cfg.dec_hidden = 8;
    cfg.tag_emb = 4;
    return cfg;
}

std::string temp_path(const std::string& name) {
    return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + name;
}

}  // namespace

TEST_CASE("all-zero params give a uniform tag distribution") {
    Tagger tg = Tagger::build(toy_corpus(), small_config(), 1);
    for (std::size_t si = 0; si < tg.params().slot_count(); ++si) tg.params().slot_at(si).value.zero();
    Matrix probs = tg.forward({"fever"});
    REQUIRE(probs.rows() == 1);
    REQUIRE(probs.cols() == static_cast<std::size_t>(kNumTags));
    for (std::size_t t = 0; t < probs.cols(); ++t)
        CHECK(probs(0, t) == Catch::Approx(1.0 / kNumTags).margin(1e-12));
    CHECK(tg.predict({"fever"}) == std::vector<int>{kO});
}

TEST_CASE("forward matches the straight-line oracle") {
    // Covers both residual configurations: layer-1 skip inactive (6 -> 7
    // filters) and active (8 -> 8).
    for (auto [char_emb, filters] : {std::pair<std::size_t, std::size_t>{6, 7}, {8, 8}}) {
        for (std::uint64_t seed : {11u, 23u, 37u}) {
            Tagger tg = Tagger::build(toy_corpus(), small_config(char_emb, filters), seed);
            Rng noise(seed, 99);
            for (std::size_t si = 0; si < tg.params().slot_count(); ++si)
                numkit::fill_uniform(tg.params().slot_at(si).value, noise, -0.6, 0.6);
            for (const std::vector<std::string>& words :
                 {std::vector<std::string>{"no", "fever"}, {"chest", "xray", "zz9"}}) {
                Matrix got = tg.forward(words);
                oracle::Mat want = oracle::tagger_forward(tg, words);
                REQUIRE(got.rows() == want.size());
                for (std::size_t i = 0; i < got.rows(); ++i)
                    for (std::size_t t = 0; t < got.cols(); ++t)
                        CHECK(got(i, t) == Catch::Approx(want[i][t]).margin(1e-10));
            }
        }
    }
}

TEST_CASE("unknown characters and words map to the UNK rows") {
    Tagger tg = Tagger::build(toy_corpus(), small_config(), 3);
    CHECK(tg.char_index('q') == 0);  // not in the toy corpus
    CHECK(tg.word_index("zzzz") == 0);
    CHECK(tg.char_index('f') > 0);
    CHECK(tg.word_index("fever") > 0);
    Matrix probs = tg.forward({"qqqq"});  // all-unknown word still tags
    CHECK(probs.rows() == 1);
}

TEST_CASE("training-mode word dropout replaces word embeddings with UNK") {
    TaggerConfig cfg = small_config();
    cfg.dropout = 0.0;  // isolate the word-level mechanism

    SECTION("probability 1: every word reads the UNK row") {
        cfg.word_dropout = 1.0;
        Tagger tg = Tagger::build(toy_corpus(), cfg, 5);
        std::vector<TaggedSentence> batch = {toy_corpus()[0], toy_corpus()[3]};
        Rng rng(7, 7);
        double loss_train = tg.batch_loss(batch, true, &rng, false);
        Matrix& word_emb = tg.params().param("word.emb");
        for (const auto& s : batch)
            for (const auto& w : s.words) {
                std::size_t wi = tg.word_index(w);
                for (std::size_t k = 0; k < word_emb.cols(); ++k) word_emb(wi, k) = word_emb(0, k);
            }
        double loss_unk = tg.batch_loss(batch, false, nullptr, false);
        CHECK(loss_train == Catch::Approx(loss_unk).margin(1e-14));
    }
    SECTION("probability 0: training equals evaluation") {
        cfg.word_dropout = 0.0;
        Tagger tg = Tagger::build(toy_corpus(), cfg, 5);
        std::vector<TaggedSentence> batch = {toy_corpus()[1]};
        Rng rng(7, 7);
        CHECK(tg.batch_loss(batch, true, &rng, false) ==
              Catch::Approx(tg.batch_loss(batch, false, nullptr, false)).margin(1e-14));
    }
}

TEST_CASE("tagger gradients pass the finite-difference check") {
    std::vector<TaggedSentence> batch = {toy_corpus()[1], toy_corpus()[8]};
    for (auto [char_emb, filters] : {std::pair<std::size_t, std::size_t>{6, 7}, {6, 6}}) {
        for (std::uint64_t seed : {2u, 9u}) {
            Tagger tg = Tagger::build(toy_corpus(), small_config(char_emb, filters), seed);
            tg.params().zero_grads();
            tg.batch_loss(batch, false, nullptr, true);
            auto report = numkit::grad_check(
                tg.params(), [&] { return tg.batch_loss(batch, false, nullptr, false); });
            INFO("config " << char_emb << "/" << filters << " seed " << seed << " worst "
                           << report.worst_rel_err);
            for (const auto& name : report.flagged(1e-4)) INFO("flagged: " << name);
            CHECK(report.ok(1e-4));
            tg.params().zero_grads();
        }
    }
}

TEST_CASE("teacher-forced loss decreases over the first epoch") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Tagger tg = Tagger::build(toy_corpus(), small_config(), seed);
        TaggerTrainConfig tc;  // default lr, SGD
        tc.epochs = 2;
        tc.seed = seed;
        TaggerTrainHistory hist = tg.train(toy_corpus(), tc);
        REQUIRE(hist.eval_loss.size() == 3);  // init, after epoch 0, after epoch 1
        INFO("seed " << seed << " losses " << hist.eval_loss[0] << " -> " << hist.eval_loss[1]
                     << " -> " << hist.eval_loss[2]);
        CHECK(hist.eval_loss[1] < hist.eval_loss[0]);
        CHECK(hist.eval_loss[2] < hist.eval_loss[1]);
    }
}

TEST_CASE("zero epochs leave the initialization untouched") {
    Tagger tg = Tagger::build(toy_corpus(), small_config(), 4);
    std::vector<Matrix> before = tg.params().snapshot_values();
    TaggerTrainConfig tc;
    tc.epochs = 0;
    TaggerTrainHistory hist = tg.train(toy_corpus(), tc);
    CHECK(hist.epochs_run == 0);
    std::vector<Matrix> after = tg.params().snapshot_values();
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i)
        for (std::size_t k = 0; k < before[i].size(); ++k)
            CHECK(before[i].data()[k] == after[i].data()[k]);
}

TEST_CASE("tagger overfits a small corpus and round-trips spans") {
    std::vector<TaggedSentence> corpus = toy_corpus();
    Tagger tg = Tagger::build(corpus, small_config(), 17);
    TaggerTrainConfig tc;
    tc.epochs = 200;
    tc.lr = 5e-3;
    tc.adam = true;
    tc.target_acc = 0.999;
    tc.seed = 17;
    TaggerTrainHistory hist = tg.train(corpus, tc);
    INFO("epochs " << hist.epochs_run << " final acc " << hist.epoch_acc.back());
    CHECK(hist.reached_target);
    CHECK(tg.token_accuracy(corpus) >= 0.999);
    for (const auto& s : corpus) {
        std::vector<int> pred = tg.predict(s.words);
        CHECK(spans_from_tags(pred, s.words) == spans_from_tags(s.tags, s.words));
    }
}

TEST_CASE("gold BIO violations are rejected with the sentence index") {
    std::vector<TaggedSentence> corpus = toy_corpus();
    corpus.insert(corpus.begin() + 1, {{"pain", "gone"}, {kICond, kO}});  // I without B
    Tagger tg = Tagger::build(corpus, small_config(), 1);
    TaggerTrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_MATCHES(tg.train(corpus, tc), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("sentence 1")));

    std::vector<TaggedSentence> mismatch = {{{"a", "b"}, {kO}}};
    CHECK_THROWS_AS(validate_gold_tags(mismatch), DataError);

    std::vector<TaggedSentence> variant = {{{"no", "pain", "felt"}, {kO, kBCondNeg, kICond}}};
    CHECK_THROWS_AS(validate_gold_tags(variant), DataError);  // variant switch mid-span
}

TEST_CASE("tagged-corpus files round-trip") {
    std::vector<TaggedSentence> corpus = toy_corpus();
    std::string path = temp_path("vt_tagged.jsonl");
    write_tagged_sentences(path, corpus);
    std::vector<TaggedSentence> back = read_tagged_sentences(path);
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].words == corpus[i].words);
        CHECK(back[i].tags == corpus[i].tags);
    }
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_tagged_sentences(temp_path("vt_absent_tagged.jsonl")), MissingFileError);
    {
        std::ofstream out(path);
        out << "{\"tokens\": [\"a\"], \"tags\"\n";
    }
    CHECK_THROWS_AS(read_tagged_sentences(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("tagger save/load round-trips predictions") {
    std::vector<TaggedSentence> corpus = toy_corpus();
    Tagger tg = Tagger::build(corpus, small_config(), 8);
    TaggerTrainConfig tc;
    tc.epochs = 3;
    tc.adam = true;
    tc.lr = 1e-3;
    tg.train(corpus, tc);

    std::string path = temp_path("vt_tagger.bin");
    tg.save(path);
    Tagger back = Tagger::load(path);
    std::remove(path.c_str());

    REQUIRE(back.params().slot_count() == tg.params().slot_count());
    for (std::size_t si = 0; si < tg.params().slot_count(); ++si) {
        const Matrix& a = tg.params().slot_at(si).value;
        const Matrix& b = back.params().slot_at(si).value;
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a.data()[k] == b.data()[k]);
    }
    for (const auto& s : corpus) CHECK(back.predict(s.words) == tg.predict(s.words));
    CHECK_THROWS_AS(Tagger::load(temp_path("vt_absent_tagger.bin")), MissingFileError);
}

TEST_CASE("degenerate tagger inputs are rejected") {
    Tagger tg = Tagger::build(toy_corpus(), small_config(), 1);
    CHECK_THROWS_AS(tg.forward({}), DomainError);
    CHECK_THROWS_AS(tg.batch_loss({}, false, nullptr, false), DomainError);
    TaggerTrainConfig tc;
    CHECK_THROWS_AS(tg.train({}, tc), ConfigError);
    TaggerConfig even = small_config();
    even.char_width = 4;
    CHECK_THROWS_AS(Tagger::build(toy_corpus(), even, 1), ConfigError);
}
