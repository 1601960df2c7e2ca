#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vitaltext/cli/config.hpp"
#include "vitaltext/corpus/day_document.hpp"
#include "vitaltext/corpus/note_event.hpp"
#include "vitaltext/corpus/vocabulary.hpp"
#include "vitaltext/doc2vecc/model.hpp"
#include "vitaltext/doc2vecc/train.hpp"
#include "vitaltext/entity/negation.hpp"
#include "vitaltext/errors.hpp"
#include "vitaltext/log.hpp"
#include "vitaltext/models/checkpoint.hpp"
#include "vitaltext/models/classifier.hpp"
#include "vitaltext/numkit/rng.hpp"
#include "vitaltext/pipeline/bootstrap.hpp"
#include "vitaltext/pipeline/metrics.hpp"
#include "vitaltext/pipeline/protocol.hpp"
#include "vitaltext/pipeline/tsne.hpp"
#include "vitaltext/stay.hpp"
#include "vitaltext/synthgen/cohort.hpp"
#include "vitaltext/vitals/matrix_io.hpp"
#include "vitaltext/vitals/sequence.hpp"
#include "vitaltext/vitals/split.hpp"

namespace vitaltext::cli {

namespace detail {

namespace fs = std::filesystem;

inline std::string artifact(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.outdir) / name).string();
}

// Short tag for per-variant artifact names, so several feature/structure
// combinations can share one output directory.
inline std::string model_slug(const ExperimentConfig& cfg) {
    std::string feat = cfg.feature_set == "vital+note_emb"     ? "note"
                       : cfg.feature_set == "vital+entity_emb" ? "entity"
                                                               : "vital";
    return feat + "_" + cfg.structure;
}

// Minimal stay table: one "stay_id<TAB>patient_id<TAB>label" row per stay.
// Its row order anchors the ordering of every downstream artifact.
struct StayRow {
    std::int64_t stay_id = 0;
    std::int64_t patient_id = 0;
    int label = 0;
};

inline void write_stays_tsv(const std::string& path, const std::vector<StayRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& r : rows) out << r.stay_id << "\t" << r.patient_id << "\t" << r.label << "\n";
}

inline std::vector<StayRow> read_stays_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<StayRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        StayRow r;
        if (!(ss >> r.stay_id >> r.patient_id >> r.label))
            throw DataError(path + ":" + std::to_string(lineno) + ": expected stay_id patient_id label");
        rows.push_back(r);
    }
    if (rows.empty()) throw DataError(path + ": no stays");
    return rows;
}

inline void write_splits_tsv(const std::string& path, const std::vector<StayRecord>& stays) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& s : stays) out << s.stay_id << "\t" << split_name(s.split) << "\n";
}

inline std::vector<std::pair<std::int64_t, Split>> read_splits_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::vector<std::pair<std::int64_t, Split>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected stay_id<TAB>split");
        rows.emplace_back(std::stoll(line.substr(0, tab)), split_from_name(line.substr(tab + 1)));
    }
    if (rows.empty()) throw DataError(path + ": no split rows");
    return rows;
}

// Append-only provenance trail inside the output directory.
inline void log_run(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& overrides) {
    fs::create_directories(cfg.outdir);
    const std::string path = artifact(cfg, "run.log");
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "$ vitaltext " << command << "\n";
    for (const auto& o : overrides) out << "override: " << o << "\n";
    out << resolved_config(cfg) << "\n";
    log::info("vitaltext " + command + " -> " + cfg.outdir);
    for (const auto& o : overrides) log::info("override: " + o);
}

inline std::string embedding_file(const ExperimentConfig& cfg) {
    if (cfg.feature_set == "vital+note_emb") return artifact(cfg, "note_emb.jsonl");
    if (cfg.feature_set == "vital+entity_emb") return artifact(cfg, "entity_emb.jsonl");
    throw ConfigError("run.feature_set", "the vital feature set has no embeddings");
}

inline models::ModelConfig model_config(const ExperimentConfig& cfg, std::size_t emb_dim) {
    models::ModelConfig mc;
    if (cfg.feature_set == "vital") {
        mc.kind = models::ModelKind::vital_lstm;
    } else if (cfg.structure == "lstm") {
        mc.kind = models::ModelKind::concat_lstm;
    } else {
        mc.kind = models::ModelKind::multimodal;
    }
    mc.input_dim = vitals::kSignals;
    mc.emb_dim = mc.kind == models::ModelKind::vital_lstm ? 0 : emb_dim;
    mc.hidden = cfg.hidden;
    mc.text_hidden = cfg.text_hidden;
    mc.joint_hidden = cfg.joint_hidden;
    mc.visibility = cfg.visibility == "end_of_day" ? models::EmbeddingVisibility::end_of_day
                                                   : models::EmbeddingVisibility::from_start;
    mc.steps = vitals::kSteps;
    return mc;
}

// Load one split as a model-ready dataset: standardized vitals plus the two
// daily embeddings (absent or empty documents contribute zero vectors).
struct SplitData {
    std::vector<std::int64_t> ids;
    std::vector<int> labels;
    models::Dataset data;
};

inline SplitData load_split(const ExperimentConfig& cfg, const std::string& split,
                            std::size_t emb_dim,
                            const std::map<std::pair<std::int64_t, int>, const std::vector<double>*>* emb) {
    SplitData out;
    vitals::read_stay_index(artifact(cfg, "index_" + split + ".tsv"), out.ids, out.labels);
    std::vector<numkit::Matrix> mats = vitals::read_split_matrix(artifact(cfg, "vitals_" + split + ".bin"));
    if (mats.size() != out.ids.size())
        throw DataError("vitals_" + split + ".bin and index_" + split + ".tsv disagree on stay count");
    out.data.reserve(mats.size());
    for (std::size_t i = 0; i < mats.size(); ++i) {
        models::Example ex;
        ex.x = std::move(mats[i]);
        ex.label = out.labels[i];
        if (emb != nullptr) {
            for (int day = 0; day < 2; ++day) {
                auto it = emb->find({out.ids[i], day});
                std::vector<double>& dst = day == 0 ? ex.e1 : ex.e2;
                if (it == emb->end()) {
                    log::debug("no embedding for stay " + std::to_string(out.ids[i]) + " day " +
                               std::to_string(day) + "; using the zero vector");
                    dst.assign(emb_dim, 0.0);
                } else {
                    dst = *it->second;
                }
            }
        }
        out.data.push_back(std::move(ex));
    }
    return out;
}

struct EmbeddingTable {
    std::vector<doc2vecc::DocEmbedding> rows;
    std::map<std::pair<std::int64_t, int>, const std::vector<double>*> index;
    std::size_t dim = 0;
};

inline EmbeddingTable load_embeddings(const std::string& path) {
    EmbeddingTable t;
    t.rows = doc2vecc::read_doc_embeddings(path);
    if (t.rows.empty()) throw DataError(path + ": no embeddings");
    t.dim = t.rows.front().vector.size();
    for (const auto& e : t.rows) {
        if (e.vector.size() != t.dim) throw DataError(path + ": inconsistent embedding dimensions");
        t.index[{e.stay_id, e.day}] = &e.vector;
    }
    return t;
}

// --- commands ---------------------------------------------------------------

inline void cmd_synth(const ExperimentConfig& cfg) {
    synthgen::Cohort cohort = synthgen::generate(cfg.cohort);

    std::vector<StayRow> rows;
    std::vector<corpus::NoteEvent> notes;
    std::vector<vitals::VitalEvent> vital_events;
    for (const auto& stay : cohort.stays) {
        rows.push_back({stay.stay_id, stay.patient_id, stay.label});
        notes.insert(notes.end(), stay.notes.begin(), stay.notes.end());
        vital_events.insert(vital_events.end(), stay.vital_events.begin(), stay.vital_events.end());
    }
    write_stays_tsv(artifact(cfg, "stays.tsv"), rows);
    corpus::write_note_events(artifact(cfg, "notes.jsonl"), notes);
    vitals::write_vital_events(artifact(cfg, "vitals.jsonl"), vital_events);
    synthgen::write_ground_truth(artifact(cfg, "truth.json"), cohort.truth);
    cohort.lexicon.lexicon.save(artifact(cfg, "lexicon.tsv"));
    entity::save_triggers(artifact(cfg, "triggers.txt"), entity::NegationConfig::defaults().triggers);
    log::info("synth: " + std::to_string(rows.size()) + " stays, " + std::to_string(notes.size()) +
              " notes, " + std::to_string(vital_events.size()) + " vital events");
}

inline void cmd_preprocess(const ExperimentConfig& cfg) {
    const std::vector<StayRow> rows = read_stays_tsv(artifact(cfg, "stays.tsv"));
    const auto notes = corpus::read_note_events(artifact(cfg, "notes.jsonl"));
    const auto vital_events = vitals::read_vital_events(artifact(cfg, "vitals.jsonl"));
    const entity::Lexicon lexicon = entity::Lexicon::load(artifact(cfg, "lexicon.tsv"));
    entity::NegationConfig neg = entity::NegationConfig::defaults();
    neg.triggers = entity::load_triggers(artifact(cfg, "triggers.txt"));

    std::unordered_map<std::int64_t, std::size_t> row_of;
    std::vector<StayRecord> stays(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        stays[i].stay_id = rows[i].stay_id;
        stays[i].patient_id = rows[i].patient_id;
        stays[i].label = rows[i].label;
        row_of[rows[i].stay_id] = i;
    }
    for (const auto& n : notes) {
        auto it = row_of.find(n.stay_id);
        if (it == row_of.end()) throw DataError("note for unknown stay " + std::to_string(n.stay_id));
        stays[it->second].notes.push_back(n);
    }
    for (const auto& e : vital_events) {
        auto it = row_of.find(e.stay_id);
        if (it == row_of.end())
            throw DataError("vital event for unknown stay " + std::to_string(e.stay_id));
        stays[it->second].vital_events.push_back(e);
    }

    vitals::split_cohort(stays, cfg.f_train, cfg.f_val, cfg.f_test, cfg.split_seed);
    write_splits_tsv(artifact(cfg, "splits.tsv"), stays);

    // vitals: discretize everything, fit stats on train only, then transform
    std::vector<vitals::VitalSequence> seqs;
    seqs.reserve(stays.size());
    for (const auto& s : stays) seqs.push_back(vitals::discretize(s.vital_events, s.stay_id));

    std::vector<vitals::VitalSequence> train_seqs;
    std::vector<Split> train_tags;
    for (std::size_t i = 0; i < stays.size(); ++i) {
        if (stays[i].split != Split::train) continue;
        train_seqs.push_back(seqs[i]);
        train_tags.push_back(Split::train);
    }
    const vitals::PopulationStats stats = vitals::compute_population_stats(train_seqs, train_tags);
    stats.save(artifact(cfg, "pop_stats.json"));

    for (const char* name : {"train", "val", "test"}) {
        const Split tag = split_from_name(name);
        std::vector<numkit::Matrix> mats;
        std::vector<std::int64_t> ids;
        std::vector<int> labels;
        for (std::size_t i = 0; i < stays.size(); ++i) {
            if (stays[i].split != tag) continue;
            mats.push_back(vitals::standardize(vitals::impute(seqs[i], stats), stats).values);
            ids.push_back(stays[i].stay_id);
            labels.push_back(stays[i].label);
        }
        vitals::write_split_matrix(artifact(cfg, std::string("vitals_") + name + ".bin"), mats);
        vitals::write_stay_index(artifact(cfg, std::string("index_") + name + ".tsv"), ids, labels);
    }

    // text: day documents for the note path, entity documents for the entity path
    std::vector<corpus::DayDocument> day_docs, entity_docs;
    for (const auto& s : stays) {
        auto days = corpus::aggregate_daily(s.notes, s.stay_id);
        for (auto& d : days) {
            entity_docs.push_back(entity::entity_document(d, lexicon, neg, cfg.filter_negated));
            day_docs.push_back(std::move(d));
        }
    }
    corpus::write_day_documents(artifact(cfg, "day_docs.jsonl"), day_docs);
    corpus::write_day_documents(artifact(cfg, "entity_docs.jsonl"), entity_docs);
    log::info("preprocess: " + std::to_string(stays.size()) + " stays split and featurized");
}

inline void cmd_embed(const ExperimentConfig& cfg, const std::string& mode) {
    const std::string doc_file = mode == "note" ? "day_docs.jsonl" : "entity_docs.jsonl";
    const auto docs = corpus::read_day_documents(artifact(cfg, doc_file));
    const auto splits = read_splits_tsv(artifact(cfg, "splits.tsv"));

    std::unordered_map<std::int64_t, Split> split_of;
    for (const auto& [id, tag] : splits) split_of[id] = tag;

    std::vector<std::vector<std::string>> train_docs;
    for (const auto& d : docs) {
        auto it = split_of.find(d.stay_id);
        if (it == split_of.end())
            throw DataError("document for stay " + std::to_string(d.stay_id) + " missing from splits.tsv");
        if (it->second == Split::train) train_docs.push_back(d.tokens);
    }
    if (train_docs.empty()) throw DataError(doc_file + ": no training documents");

    const corpus::Vocabulary vocab = corpus::Vocabulary::build(train_docs, cfg.min_count);
    numkit::Rng rng(cfg.embed_seed, mode == "note" ? 0xd0c1 : 0xd0c2);
    const doc2vecc::EmbeddingModel model = doc2vecc::train(train_docs, vocab, cfg.embed, rng);

    std::vector<doc2vecc::DocEmbedding> embs;
    embs.reserve(docs.size());
    for (const auto& d : docs) {
        doc2vecc::DocEmbedding e = doc2vecc::embed_document(d.tokens, model);
        e.stay_id = d.stay_id;
        e.day = d.day;
        embs.push_back(std::move(e));
    }
    doc2vecc::save_model(artifact(cfg, mode + "_model.bin"), model);
    doc2vecc::write_doc_embeddings(artifact(cfg, mode + "_emb.jsonl"), embs);
    log::info("embed --mode " + mode + ": vocabulary " + std::to_string(vocab.size()) + ", " +
              std::to_string(embs.size()) + " documents embedded");
}

inline void cmd_train(const ExperimentConfig& cfg) {
    const bool uses_text = cfg.feature_set != "vital";
    EmbeddingTable emb;
    if (uses_text) emb = load_embeddings(embedding_file(cfg));
    const std::size_t emb_dim = uses_text ? emb.dim : 0;
    const auto* emb_index = uses_text ? &emb.index : nullptr;

    const SplitData train = load_split(cfg, "train", emb_dim, emb_index);
    const SplitData val = load_split(cfg, "val", emb_dim, emb_index);
    const models::ModelConfig mc = model_config(cfg, emb_dim);

    std::vector<std::unique_ptr<models::Classifier>> fitted(cfg.n_seeds);
    auto train_fn = [&](std::uint64_t run) -> pipeline::RunResult {
        auto clf = std::make_unique<models::Classifier>(mc, numkit::mix_seed(cfg.master_seed, run));
        models::TrainConfig tc;
        tc.batch_size = cfg.batch_size;
        tc.max_epochs = cfg.max_epochs;
        tc.patience = cfg.patience;
        tc.lr = cfg.lr;
        tc.use_adam = cfg.use_adam;
        tc.seed = numkit::mix_seed(cfg.master_seed, run);
        const models::TrainHistory hist = clf->train(train.data, val.data, tc);

        pipeline::RunResult r;
        r.seed = run;
        r.failed = hist.failed;
        r.train_loss = hist.train_loss;
        if (!hist.failed) {
            const std::vector<double> scores = clf->predict(val.data);
            r.val_f1 = pipeline::f1(scores, val.labels, cfg.threshold);
            r.val_auroc = pipeline::auroc(scores, val.labels);
            r.val_auprc = pipeline::auprc(scores, val.labels);
        }
        fitted[run] = std::move(clf);
        return r;
    };
    const pipeline::ProtocolResult proto = pipeline::run_protocol(train_fn, cfg.n_seeds, cfg.jobs);

    const std::string slug = model_slug(cfg);
    std::map<std::string, std::string> echo;
    echo["kind"] = models::model_kind_name(mc.kind);
    echo["feature_set"] = cfg.feature_set;
    echo["structure"] = cfg.structure;
    echo["input_dim"] = std::to_string(mc.input_dim);
    echo["emb_dim"] = std::to_string(mc.emb_dim);
    echo["hidden"] = std::to_string(mc.hidden);
    echo["text_hidden"] = std::to_string(mc.text_hidden);
    echo["joint_hidden"] = std::to_string(mc.joint_hidden);
    echo["visibility"] = cfg.visibility;
    echo["steps"] = std::to_string(mc.steps);
    echo["master_seed"] = std::to_string(cfg.master_seed);
    echo["selected_seed"] = std::to_string(proto.selected_run().seed);
    models::save_checkpoint(artifact(cfg, "model_" + slug + ".bin"),
                            fitted[proto.selected]->params(), echo);

    nlohmann::json pj;
    pj["selected"] = proto.selected;
    pj["runs"] = nlohmann::json::array();
    for (const auto& r : proto.runs) {
        pj["runs"].push_back({{"seed", r.seed},
                              {"failed", r.failed},
                              {"val_f1", r.val_f1},
                              {"val_auroc", r.val_auroc},
                              {"val_auprc", r.val_auprc},
                              {"train_loss", r.train_loss}});
    }
    const std::string proto_path = artifact(cfg, "protocol_" + slug + ".json");
    std::ofstream out(proto_path);
    if (!out) throw DataError("cannot open for writing: " + proto_path);
    out << pj.dump(2) << "\n";
    log::info("train: selected seed " + std::to_string(proto.selected_run().seed) + " with val F1 " +
              std::to_string(proto.selected_run().val_f1));
}

inline void cmd_evaluate(const ExperimentConfig& cfg, const std::string& out_override) {
    const std::string slug = model_slug(cfg);
    const models::Checkpoint ck = models::load_checkpoint(artifact(cfg, "model_" + slug + ".bin"));

    auto echo = [&](const std::string& key) {
        auto it = ck.config_echo.find(key);
        if (it == ck.config_echo.end()) throw DataError("checkpoint lacks config key " + key);
        return it->second;
    };
    if (echo("feature_set") != cfg.feature_set)
        throw ConfigError("run.feature_set", "checkpoint was trained with " + echo("feature_set"));
    if (echo("structure") != cfg.structure)
        throw ConfigError("run.structure", "checkpoint was trained with " + echo("structure"));

    const auto emb_dim = static_cast<std::size_t>(std::stoull(echo("emb_dim")));
    const bool uses_text = cfg.feature_set != "vital";
    EmbeddingTable emb;
    if (uses_text) {
        emb = load_embeddings(embedding_file(cfg));
        if (emb.dim != emb_dim)
            throw DataError("embedding dimension " + std::to_string(emb.dim) +
                            " does not match checkpoint emb_dim " + std::to_string(emb_dim));
    }
    const SplitData test = load_split(cfg, "test", emb_dim, uses_text ? &emb.index : nullptr);

    models::Classifier clf(model_config(cfg, emb_dim), 0);
    models::restore_params(clf.params(), ck);

    const std::vector<double> scores = clf.predict(test.data);
    pipeline::EvalReport report = pipeline::bootstrap_eval(cfg.feature_set + "/" + cfg.structure,
                                                           scores, test.labels, cfg.n_resamples,
                                                           cfg.eval_seed);
    report.feature_set = cfg.feature_set;
    report.structure = cfg.structure;

    std::string out_path = out_override.empty() ? artifact(cfg, "eval_" + slug + ".json")
                           : fs::path(out_override).is_absolute()
                               ? out_override
                               : artifact(cfg, out_override);
    pipeline::write_eval_report(out_path, report);
    log::info("evaluate: " + report.model_id + " test AUROC " + std::to_string(report.auroc_mean) +
              " +- " + std::to_string(report.auroc_std));
}

inline void cmd_tsne(const ExperimentConfig& cfg) {
    const EmbeddingTable emb = load_embeddings(embedding_file(cfg));
    const std::vector<StayRow> rows = read_stays_tsv(artifact(cfg, "stays.tsv"));

    numkit::Matrix x(rows.size(), emb.dim);
    std::vector<std::int64_t> ids;
    std::vector<int> labels;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ids.push_back(rows[i].stay_id);
        labels.push_back(rows[i].label);
        for (int day = 0; day < 2; ++day) {
            auto it = emb.index.find({rows[i].stay_id, day});
            if (it == emb.index.end()) continue;
            for (std::size_t j = 0; j < emb.dim; ++j) x(i, j) += (*it->second)[j] / 2.0;
        }
    }
    const pipeline::TsneResult res = pipeline::tsne(x, cfg.tsne);
    pipeline::write_tsne_csv(artifact(cfg, "tsne.csv"), ids, res.coords, labels);
    pipeline::write_tsne_svg(artifact(cfg, "tsne.svg"), res.coords, labels);
    log::info("tsne: " + std::to_string(rows.size()) + " stays, final KL " +
              std::to_string(res.final_kl));
}

inline void cmd_report(const std::vector<std::string>& files) {
    std::vector<pipeline::EvalReport> reports;
    reports.reserve(files.size());
    for (const auto& f : files) reports.push_back(pipeline::read_eval_report(f));
    std::cout << pipeline::render_report_table(reports);
}

}  // namespace detail

// In-process CLI entry point; returns the process exit code.
// Exit codes: 0 success, 1 runtime failure, 2 missing input file, 3 bad
// configuration or usage.
inline int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"vital-signs + clinical-text mortality pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand name

    std::string config_path, outdir_flag, mode, eval_out;
    std::uint64_t seed_flag = 0;
    std::uint64_t jobs_flag = 0;
    std::vector<std::string> set_flags, report_files;

    app.add_option("--config", config_path, "experiment config file");
    auto* opt_outdir = app.add_option("--outdir", outdir_flag, "output directory");
    auto* opt_seed = app.add_option("--seed", seed_flag, "master seed");
    auto* opt_jobs = app.add_option("--jobs", jobs_flag, "parallel training runs");
    app.add_option("--set", set_flags, "override a config entry, as section.key=value")
        ->allow_extra_args(false);

    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic cohort");
    CLI::App* c_pre = app.add_subcommand("preprocess", "split the cohort and build features");
    CLI::App* c_embed = app.add_subcommand("embed", "train document embeddings");
    c_embed->add_option("--mode", mode, "document stream: note or entity")
        ->required()
        ->check(CLI::IsMember({"note", "entity"}));
    CLI::App* c_train = app.add_subcommand("train", "train the classifier over seeds");
    CLI::App* c_eval = app.add_subcommand("evaluate", "bootstrap test-set evaluation");
    c_eval->add_option("--out", eval_out, "report path (relative paths land in the outdir)");
    CLI::App* c_tsne = app.add_subcommand("tsne", "project embeddings to 2-D");
    CLI::App* c_report = app.add_subcommand("report", "render evaluation reports as one table");
    c_report->add_option("files", report_files, "eval report JSON files")->required();

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.push_back("vitaltext");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(argv_store.size());
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        IniFile ini;
        if (!config_path.empty()) ini = IniFile::load(config_path);

        std::vector<std::string> overrides;
        for (const auto& s : set_flags) {
            const auto eq = s.find('=');
            const auto dot = s.find('.');
            if (eq == std::string::npos || dot == std::string::npos || dot > eq)
                throw ConfigError("--set", "expected section.key=value, got '" + s + "'");
            const std::string sec = s.substr(0, dot);
            const std::string key = s.substr(dot + 1, eq - dot - 1);
            const std::string value = s.substr(eq + 1);
            ini.set(sec, key, value);
            overrides.push_back(sec + "." + key + " = " + value);
        }
        if (opt_outdir->count() > 0) {
            ini.set("run", "outdir", outdir_flag);
            overrides.push_back("run.outdir = " + outdir_flag);
        }
        if (opt_seed->count() > 0) {
            ini.set("run", "master_seed", std::to_string(seed_flag));
            overrides.push_back("run.master_seed = " + std::to_string(seed_flag));
        }
        if (opt_jobs->count() > 0) {
            ini.set("run", "jobs", std::to_string(jobs_flag));
            overrides.push_back("run.jobs = " + std::to_string(jobs_flag));
        }
        const ExperimentConfig cfg = experiment_from_ini(ini);

        if (c_synth->parsed()) {
            detail::log_run(cfg, "synth", overrides);
            detail::cmd_synth(cfg);
        } else if (c_pre->parsed()) {
            detail::log_run(cfg, "preprocess", overrides);
            detail::cmd_preprocess(cfg);
        } else if (c_embed->parsed()) {
            detail::log_run(cfg, "embed --mode " + mode, overrides);
            detail::cmd_embed(cfg, mode);
        } else if (c_train->parsed()) {
            detail::log_run(cfg, "train", overrides);
            detail::cmd_train(cfg);
        } else if (c_eval->parsed()) {
            detail::log_run(cfg, "evaluate", overrides);
            detail::cmd_evaluate(cfg, eval_out);
        } else if (c_tsne->parsed()) {
            detail::log_run(cfg, "tsne", overrides);
            detail::cmd_tsne(cfg);
        } else if (c_report->parsed()) {
            detail::log_run(cfg, "report", overrides);
            detail::cmd_report(report_files);
        }
        return 0;
    } catch (const MissingFileError& e) {
        log::error(e.what());
        return 2;
    } catch (const ConfigError& e) {
        log::error(e.what());
        return 3;
    } catch (const std::exception& e) {
        log::error(e.what());
        return 1;
    }
}

}  // namespace vitaltext::cli
