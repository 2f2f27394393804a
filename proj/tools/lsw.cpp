// lsw: synthesize corpora, train section-weighted multi-label classifiers,
// evaluate them and export the learned section weights.
//
// Exit codes: 0 success, 2 usage/input error, 3 numeric failure,
// 4 compatibility failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsw/checkpoint.hpp"
#include "lsw/data.hpp"
#include "lsw/errors.hpp"
#include "lsw/manifest.hpp"
#include "lsw/metrics.hpp"
#include "lsw/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCompat = 4;

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct SynthArgs {
    lsw::SynthSpec spec;
    std::string out = "corpus.jsonl";
};

int cmd_synth(const SynthArgs& a) {
    lsw::RunManifest manifest;
    manifest.command = "synth";
    manifest.started_at = lsw::timestamp_utc();
    manifest.seed = a.spec.seed;

    lsw::SynthResult result = lsw::gen_synthetic(a.spec);
    lsw::save_synthetic(a.out, a.spec, result);

    manifest.add("sections", std::to_string(a.spec.sections));
    manifest.add("classes", std::to_string(a.spec.classes));
    manifest.add("docs", std::to_string(a.spec.docs));
    manifest.add("informative", std::to_string(a.spec.informative_section));
    manifest.add("noise", std::to_string(a.spec.noise));
    manifest.add("tokens_per_section", std::to_string(a.spec.tokens_per_section));
    manifest.add("out", a.out);
    manifest.input_checksums.emplace_back(a.out, lsw::file_checksum(a.out));
    manifest.artifacts = {a.out, a.out + ".gen.json"};
    manifest.finished_at = lsw::timestamp_utc();
    lsw::write_manifest(a.out + ".run.json", manifest);

    std::cout << "wrote " << a.spec.docs << " documents to " << a.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    lsw::TrainConfig config;
    std::string corpus;
    std::string model = "lsw";
    std::string output_activation = "sigmoid";
    std::string sections;  // optional comma-separated declared order
    std::string resume_from;
    std::string config_file;
    bool verbose = false;
};

// Flat key=value config file; values apply only where the matching flag was
// not given on the command line, so flags always win.
void apply_config_file(TrainArgs& a, const CLI::App& cmd) {
    std::ifstream in(a.config_file);
    if (!in) {
        throw std::invalid_argument("cannot open config file '" + a.config_file + "'");
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config file line " + std::to_string(line_no) +
                                        ": expected key=value");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const bool overridden = cmd.count("--" + key) > 0;
        if (overridden) continue;
        if (key == "corpus") a.corpus = value;
        else if (key == "model") a.model = value;
        else if (key == "epochs") a.config.epochs = std::stoi(value);
        else if (key == "batch") a.config.batch = std::stoi(value);
        else if (key == "lr") a.config.lr = std::stod(value);
        else if (key == "seed") a.config.seed = std::stoull(value);
        else if (key == "d") a.config.d = std::stoi(value);
        else if (key == "p") a.config.p = std::stoi(value);
        else if (key == "output") a.output_activation = value;
        else if (key == "min_count") a.config.min_count = std::stoi(value);
        else if (key == "val_fraction") a.config.val_fraction = std::stod(value);
        else if (key == "threshold") a.config.threshold = std::stod(value);
        else if (key == "sections") a.sections = value;
        else if (key == "checkpoint") a.config.checkpoint_path = value;
        else if (key == "resume") a.resume_from = value;
        else if (key == "mask_empty_sections") a.config.mask_empty_sections = value == "true";
        else if (key == "weight_head_relu") a.config.weight_head_relu = value == "true";
        else if (key == "verbose") a.verbose = value == "true";
        else {
            throw std::invalid_argument("config file line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
    }
}

int cmd_train(TrainArgs& a, const CLI::App& cmd) {
    if (!a.config_file.empty()) {
        apply_config_file(a, cmd);
    }
    if (a.corpus.empty()) {
        throw std::invalid_argument("train needs --corpus (flag or config file)");
    }
    a.config.kind = lsw::model_kind_from(a.model);
    a.config.output = lsw::output_from(a.output_activation);
    a.config.quiet = !a.verbose;
    if (a.config.checkpoint_path.empty()) {
        a.config.checkpoint_path = "model.ckpt";
    }

    lsw::RunManifest manifest;
    manifest.command = "train";
    manifest.started_at = lsw::timestamp_utc();
    manifest.seed = a.config.seed;
    manifest.input_checksums.emplace_back(a.corpus, lsw::file_checksum(a.corpus));

    lsw::LoadResult loaded = lsw::load_corpus(a.corpus, split_csv_list(a.sections));
    for (const std::string& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    if (loaded.missing_section_fills > 0) {
        std::cerr << "note: filled " << loaded.missing_section_fills
                  << " missing sections with empty text\n";
    }

    lsw::TrainResult result;
    if (a.resume_from.empty()) {
        result = lsw::train(a.config, loaded.records);
    } else {
        result = lsw::resume(a.resume_from, a.config, loaded.records);
    }

    const std::string log_path = a.config.checkpoint_path + ".log.csv";
    lsw::write_epoch_log_csv(log_path, result.logs);
    const std::string vocab_path = a.config.checkpoint_path + ".vocab";
    result.vocab.save(vocab_path);

    if (!result.logs.empty()) {
        const std::uint64_t final_sum = lsw::encoder_checksum(result.encoder);
        std::cout << "encoder_checksum initial=" << result.initial_encoder_checksum
                  << " final=" << final_sum;
        if (result.model_config.kind == lsw::ModelKind::kBaseline3) {
            std::cout << (final_sum == result.initial_encoder_checksum
                              ? " (frozen: unchanged)"
                              : " (FROZEN ENCODER CHANGED)");
        }
        std::cout << "\n";
        std::cout << "best epoch " << result.best_epoch
                  << " val_micro_f1=" << result.best_val_micro_f1 << "\n";
    }
    std::cout << "checkpoint: " << a.config.checkpoint_path << " (+ .last for resume)\n";

    manifest.add("model", a.model);
    manifest.add("epochs", std::to_string(a.config.epochs));
    manifest.add("batch", std::to_string(a.config.batch));
    manifest.add("lr", std::to_string(a.config.lr));
    manifest.add("d", std::to_string(a.config.d));
    manifest.add("p", std::to_string(a.config.p));
    manifest.add("output", a.output_activation);
    manifest.add("corpus", a.corpus);
    if (!a.resume_from.empty()) manifest.add("resume", a.resume_from);
    manifest.artifacts = {a.config.checkpoint_path, a.config.checkpoint_path + ".last",
                          log_path, vocab_path};
    manifest.finished_at = lsw::timestamp_utc();
    lsw::write_manifest(a.config.checkpoint_path + ".run.json", manifest);
    return kExitOk;
}

std::vector<lsw::DocumentRecord> select_split(const lsw::Checkpoint& ckpt,
                                              std::vector<lsw::DocumentRecord> records,
                                              const std::string& which) {
    if (which == "all") return records;
    lsw::Split parts = lsw::split(records, lsw::SplitSpec{ckpt.val_fraction, ckpt.train_seed});
    if (which == "train") return std::move(parts.train);
    if (which == "val") return std::move(parts.validation);
    throw std::invalid_argument("--split must be all, train or val");
}

struct EvalArgs {
    std::string checkpoint;
    std::string corpus;
    std::string out = "metrics.csv";
    std::string split_name = "all";
    std::string method;
    std::vector<std::string> compare;  // two metrics CSVs
    double threshold = 0.5;
};

int cmd_eval(const EvalArgs& a) {
    lsw::RunManifest manifest;
    manifest.command = "eval";
    manifest.started_at = lsw::timestamp_utc();

    if (!a.compare.empty()) {
        if (a.compare.size() != 2) {
            throw std::invalid_argument("--compare needs exactly two metrics CSV files");
        }
        const auto rows_a = lsw::read_metrics_csv(a.compare[0]);
        const auto rows_b = lsw::read_metrics_csv(a.compare[1]);
        lsw::write_compare_csv(a.out, rows_a.front(), rows_b.front());
        manifest.input_checksums.emplace_back(a.compare[0], lsw::file_checksum(a.compare[0]));
        manifest.input_checksums.emplace_back(a.compare[1], lsw::file_checksum(a.compare[1]));
        manifest.artifacts = {a.out};
        manifest.finished_at = lsw::timestamp_utc();
        lsw::write_manifest(a.out + ".run.json", manifest);
        std::cout << "wrote comparison to " << a.out << "\n";
        return kExitOk;
    }

    if (a.checkpoint.empty() || a.corpus.empty()) {
        throw std::invalid_argument("eval needs --checkpoint and --corpus (or --compare)");
    }
    lsw::Checkpoint ckpt = lsw::load_checkpoint(a.checkpoint);
    lsw::LoadResult loaded = lsw::load_corpus(a.corpus, ckpt.config.section_names);
    std::vector<lsw::DocumentRecord> docs =
        select_split(ckpt, std::move(loaded.records), a.split_name);

    lsw::EvalResult result = lsw::evaluate(ckpt, docs, a.threshold);
    const std::string method = a.method.empty() ? lsw::to_string(ckpt.config.kind) : a.method;
    lsw::write_metrics_csv(a.out, method, result.metrics);

    std::cout << method << " on " << docs.size() << " docs (" << a.split_name
              << "): loss=" << result.loss << " macro_f1=" << result.metrics.macro_f1
              << " micro_f1=" << result.metrics.micro_f1 << "\n";

    manifest.seed = ckpt.train_seed;
    manifest.add("checkpoint", a.checkpoint);
    manifest.add("corpus", a.corpus);
    manifest.add("split", a.split_name);
    manifest.add("threshold", std::to_string(a.threshold));
    manifest.input_checksums.emplace_back(a.checkpoint, lsw::file_checksum(a.checkpoint));
    manifest.input_checksums.emplace_back(a.corpus, lsw::file_checksum(a.corpus));
    manifest.artifacts = {a.out};
    manifest.finished_at = lsw::timestamp_utc();
    lsw::write_manifest(a.out + ".run.json", manifest);
    return kExitOk;
}

struct ExplainArgs {
    std::string checkpoint;
    std::string corpus;
    std::string out_prefix = "weights";
    std::string doc_id;
    std::string split_name = "all";
    double bin_width = 0.05;
};

int cmd_explain(const ExplainArgs& a) {
    lsw::RunManifest manifest;
    manifest.command = "explain";
    manifest.started_at = lsw::timestamp_utc();

    lsw::Checkpoint ckpt = lsw::load_checkpoint(a.checkpoint);
    lsw::LoadResult loaded = lsw::load_corpus(a.corpus, ckpt.config.section_names);
    std::vector<lsw::DocumentRecord> docs =
        select_split(ckpt, std::move(loaded.records), a.split_name);
    if (!a.doc_id.empty()) {
        std::vector<lsw::DocumentRecord> one;
        for (auto& d : docs) {
            if (d.id == a.doc_id) one.push_back(std::move(d));
        }
        if (one.empty()) {
            throw lsw::CompatError("explain: document id '" + a.doc_id + "' not in corpus");
        }
        docs = std::move(one);
    }

    lsw::LabelIndex labels = lsw::LabelIndex::from_labels(ckpt.label_names);
    lsw::WeightReport report = lsw::export_weights(docs, ckpt.vocab, ckpt.encoder, ckpt.model,
                                                   ckpt.config, labels, a.bin_width);
    const std::string per_doc = a.out_prefix + ".docs.csv";
    const std::string summary = a.out_prefix + ".summary.csv";
    lsw::write_weight_csvs(report, per_doc, summary);

    std::cout << "section weight means:";
    for (std::size_t k = 0; k < report.section_names.size(); ++k) {
        std::cout << ' ' << report.section_names[k] << '=' << report.mean[k];
    }
    std::cout << "\n";

    manifest.seed = ckpt.train_seed;
    manifest.add("checkpoint", a.checkpoint);
    manifest.add("corpus", a.corpus);
    manifest.add("split", a.split_name);
    if (!a.doc_id.empty()) manifest.add("doc_id", a.doc_id);
    manifest.input_checksums.emplace_back(a.checkpoint, lsw::file_checksum(a.checkpoint));
    manifest.input_checksums.emplace_back(a.corpus, lsw::file_checksum(a.corpus));
    manifest.artifacts = {per_doc, summary};
    manifest.finished_at = lsw::timestamp_utc();
    lsw::write_manifest(a.out_prefix + ".run.json", manifest);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Section-weighted multi-label document classification"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic JSONL corpus");
    synth_cmd->add_option("--sections", synth.spec.sections, "Number of sections")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--classes", synth.spec.classes, "Number of classes")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--docs", synth.spec.docs, "Number of documents")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--informative", synth.spec.informative_section,
                          "Index of the informative section");
    synth_cmd->add_option("--noise", synth.spec.noise, "Noise level in [0,1]");
    synth_cmd->add_option("--seed", synth.spec.seed, "Generator seed");
    synth_cmd->add_option("--section-len", synth.spec.tokens_per_section, "Tokens per section");
    synth_cmd->add_option("--sig-tokens", synth.spec.signature_tokens_per_class,
                          "Signature tokens per class");
    synth_cmd->add_option("--noise-pool", synth.spec.noise_pool, "Shared noise token pool size");
    synth_cmd->add_option("--extra-label-prob", synth.spec.extra_label_prob,
                          "Chance of each additional label");
    synth_cmd->add_option("--out", synth.out, "Output JSONL path");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model on a JSONL corpus");
    train_cmd->add_option("--config", train.config_file,
                          "key=value config file; flags override file values");
    train_cmd->add_option("--corpus", train.corpus, "Corpus JSONL path");
    train_cmd->add_option("--model", train.model, "lsw | baseline1 | baseline2 | baseline3");
    train_cmd->add_option("--epochs", train.config.epochs, "Training epochs");
    train_cmd->add_option("--batch", train.config.batch, "Minibatch size");
    train_cmd->add_option("--lr", train.config.lr, "Adam learning rate");
    train_cmd->add_option("--seed", train.config.seed, "Master seed");
    train_cmd->add_option("--d", train.config.d, "Section vector width");
    train_cmd->add_option("--p", train.config.p, "Hidden width");
    train_cmd->add_option("--output", train.output_activation, "sigmoid | softmax");
    train_cmd->add_option("--min-count", train.config.min_count, "Vocabulary min frequency");
    train_cmd->add_option("--val-fraction", train.config.val_fraction, "Validation fraction");
    train_cmd->add_option("--threshold", train.config.threshold, "Decision threshold");
    train_cmd->add_option("--sections", train.sections,
                          "Declared section order, comma separated");
    train_cmd->add_option("--checkpoint", train.config.checkpoint_path, "Checkpoint output path");
    train_cmd->add_option("--resume", train.resume_from, "Resume from a .last checkpoint");
    train_cmd->add_flag("--mask-empty-sections", train.config.mask_empty_sections,
                        "Exclude empty sections from the weight softmax");
    train_cmd->add_flag("!--no-weight-head-relu", train.config.weight_head_relu,
                        "Disable the relu on per-section scores");
    train_cmd->add_flag("--verbose", train.verbose, "Per-epoch progress on stdout");

    EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint / compare runs");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint path");
    eval_cmd->add_option("--corpus", eval.corpus, "Corpus JSONL path");
    eval_cmd->add_option("--threshold", eval.threshold, "Decision threshold");
    eval_cmd->add_option("--split", eval.split_name, "all | train | val");
    eval_cmd->add_option("--method", eval.method, "Method name for the CSV row");
    eval_cmd->add_option("--out", eval.out, "Metrics CSV output path");
    eval_cmd->add_option("--compare", eval.compare, "Two metrics CSVs to diff")->expected(2);

    ExplainArgs explain;
    CLI::App* explain_cmd =
        app.add_subcommand("explain", "Export learned section weights for an LSW checkpoint");
    explain_cmd->add_option("--checkpoint", explain.checkpoint, "LSW checkpoint path")->required();
    explain_cmd->add_option("--corpus", explain.corpus, "Corpus JSONL path")->required();
    explain_cmd->add_option("--out-prefix", explain.out_prefix, "Output CSV prefix");
    explain_cmd->add_option("--doc-id", explain.doc_id, "Only this document id");
    explain_cmd->add_option("--split", explain.split_name, "all | train | val");
    explain_cmd->add_option("--bin-width", explain.bin_width, "Histogram bin width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (train_cmd->parsed()) return cmd_train(train, *train_cmd);
        if (eval_cmd->parsed()) return cmd_eval(eval);
        if (explain_cmd->parsed()) return cmd_explain(explain);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const lsw::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const lsw::CompatError& e) {
        std::cerr << "compatibility failure: " << e.what() << "\n";
        return kExitCompat;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
