#include "lsw/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lsw/errors.hpp"
#include "lsw/rng.hpp"

namespace lsw {

int tuned_epochs(ModelKind kind, CorpusStyle style) {
    if (style == CorpusStyle::kTwoSection) return 10;
    switch (kind) {
        case ModelKind::kLsw: return 5;
        case ModelKind::kBaseline1: return 10;
        case ModelKind::kBaseline2: return 5;
        case ModelKind::kBaseline3: return 4;
    }
    return 10;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
    if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("train config: learning rate must be positive");
    if (d < 1 || p < 1) throw std::invalid_argument("train config: d and p must be positive");
    if (min_count < 1) throw std::invalid_argument("train config: min_count must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("train config: validation fraction must be in (0,1)");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("train config: threshold must be in (0,1)");
    }
}

void write_epoch_log_csv(const std::string& path, const std::vector<EpochLog>& logs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("epoch log: cannot open '" + path + "'");
    }
    out << "epoch,train_loss,val_loss,macro_f1,macro_precision,macro_recall,"
           "micro_f1,micro_precision,micro_recall,seconds\n";
    out.setf(std::ios::fixed);
    for (const EpochLog& l : logs) {
        out.precision(6);
        out << l.epoch << ',' << l.train_loss << ',' << l.val_loss << ',';
        out.precision(4);
        out << l.val_metrics.macro_f1 << ',' << l.val_metrics.macro_precision << ','
            << l.val_metrics.macro_recall << ',' << l.val_metrics.micro_f1 << ','
            << l.val_metrics.micro_precision << ',' << l.val_metrics.micro_recall << ',';
        out.precision(3);
        out << l.seconds << "\n";
    }
}

std::uint64_t encoder_checksum(const EncoderParams& enc) {
    return params_checksum({&enc.embedding, &enc.projection});
}

namespace {

struct EvalPass {
    double loss = 0;
    std::vector<Tensor1> probs;
    std::vector<Tensor1> gold;
};

EvalPass eval_docs(const std::vector<TokenizedDoc>& docs, EncoderParams& enc, LswParams& params,
                   const ModelConfig& cfg) {
    EvalPass out;
    out.probs.reserve(docs.size());
    out.gold.reserve(docs.size());
    double total = 0.0;
    for (const TokenizedDoc& doc : docs) {
        ForwardTrace trace = forward(doc, enc, params, cfg);
        Tape::NodeId loss = add_loss(trace, doc.targets, cfg);
        total += trace.tape.scalar(loss);
        out.probs.push_back(trace.probabilities);
        out.gold.push_back(doc.targets);
    }
    out.loss = docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
    return out;
}

Checkpoint snapshot(const ModelConfig& cfg, const LabelIndex& labels, const Vocab& vocab,
                    const EncoderParams& enc, const LswParams& params, const TrainConfig& tc) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.label_names = labels.names;
    ckpt.min_count = tc.min_count;
    ckpt.val_fraction = tc.val_fraction;
    ckpt.train_seed = tc.seed;
    ckpt.vocab = vocab;
    ckpt.encoder = enc;
    ckpt.model = params;
    return ckpt;
}

std::string norms_snapshot(const std::vector<ParamGroup*>& groups) {
    std::ostringstream os;
    for (const ParamGroup* g : groups) {
        os << " " << g->name << "|w|=" << g->weight_l2() << " |g|max=" << g->grad_max_abs();
    }
    return os.str();
}

// Runs `config.epochs - start_epoch` additional epochs in place. The shuffle
// for epoch e depends only on (seed, e), so a resumed run replays the exact
// batch order of a straight run.
TrainResult run_training(TrainConfig config, const std::vector<DocumentRecord>& corpus,
                         ModelConfig cfg, Vocab vocab, LabelIndex labels, EncoderParams enc,
                         LswParams params, AdamState adam, int start_epoch,
                         double best_so_far) {
    config.validate();

    Split parts = split(corpus, SplitSpec{config.val_fraction, config.seed});

    std::vector<TokenizedDoc> train_docs;
    train_docs.reserve(parts.train.size());
    for (const DocumentRecord& r : parts.train) {
        train_docs.push_back(tokenize_document(r, vocab, cfg, labels));
    }
    std::vector<TokenizedDoc> val_docs;
    val_docs.reserve(parts.validation.size());
    for (const DocumentRecord& r : parts.validation) {
        val_docs.push_back(tokenize_document(r, vocab, cfg, labels));
    }

    std::vector<ParamGroup*> groups = trainable_groups(enc, params, cfg.kind);

    TrainResult result;
    result.best_val_micro_f1 = best_so_far;
    result.initial_encoder_checksum = encoder_checksum(enc);

    for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<std::size_t> order(train_docs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(mix64(config.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1))));
        shuffle_rng.shuffle(order);

        double epoch_loss_sum = 0.0;
        const std::size_t B = static_cast<std::size_t>(config.batch);
        for (std::size_t begin = 0; begin < order.size(); begin += B) {
            const std::size_t end = std::min(begin + B, order.size());
            const double inv_batch = 1.0 / static_cast<double>(end - begin);

            for (ParamGroup* g : groups) g->zero_grad();
            double batch_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                const TokenizedDoc& doc = train_docs[order[i]];
                ForwardTrace trace = forward(doc, enc, params, cfg);
                const Tape::NodeId loss = add_loss(trace, doc.targets, cfg);
                batch_loss += trace.tape.scalar(loss);
                trace.tape.backward(loss, inv_batch);
            }
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss)) {
                std::string ids;
                for (std::size_t i = begin; i < end; ++i) {
                    ids += (ids.empty() ? "" : ",") + train_docs[order[i]].id;
                }
                throw NumericError("non-finite loss in epoch " + std::to_string(epoch) +
                                   " batch [" + ids + "];" + norms_snapshot(groups));
            }
            epoch_loss_sum += batch_loss * static_cast<double>(end - begin);
            adam_step(groups, adam);
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = train_docs.empty() ? 0.0
                                            : epoch_loss_sum / static_cast<double>(train_docs.size());
        EvalPass val = eval_docs(val_docs, enc, params, cfg);
        log.val_loss = val.loss;
        log.val_metrics = compute_metrics(val.probs, val.gold, config.threshold);
        log.encoder_checksum = encoder_checksum(enc);
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!config.quiet) {
            std::cout << "epoch " << epoch << " train_loss=" << log.train_loss
                      << " val_loss=" << log.val_loss
                      << " val_micro_f1=" << log.val_metrics.micro_f1
                      << " encoder_checksum=" << log.encoder_checksum << "\n";
        }
        result.logs.push_back(log);

        if (log.val_metrics.micro_f1 > result.best_val_micro_f1) {
            result.best_val_micro_f1 = log.val_metrics.micro_f1;
            result.best_epoch = epoch;
            result.best_checkpoint = snapshot(cfg, labels, vocab, enc, params, config);
        }
    }

    result.model_config = cfg;
    result.vocab = std::move(vocab);
    result.labels = std::move(labels);
    result.encoder = std::move(enc);
    result.params = std::move(params);
    result.adam = std::move(adam);
    result.epochs_done = std::max(config.epochs, start_epoch);
    result.seed = config.seed;
    if (result.best_epoch < 0 && result.best_val_micro_f1 < 0) {
        // zero additional epochs: keep the current parameters as "best"
        result.best_checkpoint = snapshot(result.model_config, result.labels, result.vocab,
                                          result.encoder, result.params, config);
    }

    if (!config.checkpoint_path.empty()) {
        if (result.best_epoch >= 0) {
            save_checkpoint(config.checkpoint_path, result.best_checkpoint);
        }
        Checkpoint last = snapshot(result.model_config, result.labels, result.vocab,
                                   result.encoder, result.params, config);
        last.has_train_state = true;
        last.adam = result.adam;
        last.epochs_done = result.epochs_done;
        last.best_val_micro_f1 = result.best_val_micro_f1;
        last.train_seed = config.seed;
        save_checkpoint(config.checkpoint_path + ".last", last);
    }
    return result;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<DocumentRecord>& corpus) {
    config.validate();
    if (corpus.empty()) {
        throw std::invalid_argument("train: empty corpus");
    }

    Split parts = split(corpus, SplitSpec{config.val_fraction, config.seed});
    Vocab vocab = build_vocab(parts.train, config.min_count);

    std::set<std::string> label_set;
    for (const DocumentRecord& r : corpus) {
        for (const std::string& l : r.labels) label_set.insert(l);
    }
    LabelIndex labels =
        LabelIndex::from_labels(std::vector<std::string>(label_set.begin(), label_set.end()));

    ModelConfig cfg;
    cfg.d = config.d;
    cfg.p = config.p;
    cfg.m = labels.size();
    cfg.kind = config.kind;
    cfg.output = config.output;
    cfg.weight_head_relu = config.weight_head_relu;
    cfg.mask_empty_sections = config.mask_empty_sections;
    for (const auto& [name, text] : corpus.front().sections) {
        (void)text;
        cfg.section_names.push_back(name);
    }
    cfg.validate();

    EncoderParams enc = EncoderParams::init(vocab.size(), cfg.d, config.seed);
    LswParams params = LswParams::init(cfg, config.seed);
    if (config.kind == ModelKind::kBaseline3) {
        enc.set_frozen(true);
    }
    AdamState adam(AdamConfig{config.lr, config.beta1, config.beta2, config.adam_eps},
                   trainable_groups(enc, params, cfg.kind));

    return run_training(config, corpus, std::move(cfg), std::move(vocab), std::move(labels),
                        std::move(enc), std::move(params), std::move(adam), 0, -1.0);
}

TrainResult resume(const std::string& checkpoint_path, const TrainConfig& config,
                   const std::vector<DocumentRecord>& corpus) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (!ckpt.has_train_state) {
        throw CompatError("resume: '" + checkpoint_path +
                          "' is a model checkpoint without train state");
    }
    if (ckpt.config.kind != config.kind) {
        throw CompatError(std::string("resume: model kind mismatch: checkpoint ") +
                          to_string(ckpt.config.kind) + ", config " + to_string(config.kind));
    }
    if (ckpt.config.d != config.d) {
        throw CompatError("resume: d mismatch: checkpoint " + std::to_string(ckpt.config.d) +
                          ", config " + std::to_string(config.d));
    }
    if (ckpt.config.p != config.p) {
        throw CompatError("resume: p mismatch: checkpoint " + std::to_string(ckpt.config.p) +
                          ", config " + std::to_string(config.p));
    }

    // corpus must reproduce the label space and sections the model was built on
    std::set<std::string> label_set;
    for (const DocumentRecord& r : corpus) {
        for (const std::string& l : r.labels) label_set.insert(l);
    }
    std::vector<std::string> label_names(label_set.begin(), label_set.end());
    if (static_cast<int>(label_names.size()) != ckpt.config.m) {
        throw CompatError("resume: m mismatch: checkpoint " + std::to_string(ckpt.config.m) +
                          " classes, corpus " + std::to_string(label_names.size()));
    }
    if (label_names != ckpt.label_names) {
        throw CompatError("resume: label names mismatch between checkpoint and corpus");
    }
    std::vector<std::string> corpus_sections;
    for (const auto& [name, text] : corpus.front().sections) {
        (void)text;
        corpus_sections.push_back(name);
    }
    if (corpus_sections != ckpt.config.section_names) {
        throw CompatError("resume: K/section names mismatch between checkpoint and corpus");
    }
    if (config.epochs < ckpt.epochs_done) {
        throw CompatError("resume: config asks for " + std::to_string(config.epochs) +
                          " total epochs but checkpoint already trained " +
                          std::to_string(ckpt.epochs_done));
    }

    TrainConfig effective = config;
    effective.seed = ckpt.train_seed;  // authoritative: replays the original batch order
    effective.min_count = ckpt.min_count;
    effective.val_fraction = ckpt.val_fraction;
    effective.output = ckpt.config.output;
    effective.weight_head_relu = ckpt.config.weight_head_relu;
    effective.mask_empty_sections = ckpt.config.mask_empty_sections;
    effective.lr = ckpt.adam.config.lr;
    effective.beta1 = ckpt.adam.config.beta1;
    effective.beta2 = ckpt.adam.config.beta2;
    effective.adam_eps = ckpt.adam.config.eps;

    LabelIndex labels = LabelIndex::from_labels(label_names);
    return run_training(effective, corpus, ckpt.config, std::move(ckpt.vocab), std::move(labels),
                        std::move(ckpt.encoder), std::move(ckpt.model), std::move(ckpt.adam),
                        ckpt.epochs_done, ckpt.best_val_micro_f1);
}

EvalResult evaluate(Checkpoint& ckpt, const std::vector<DocumentRecord>& docs, double threshold) {
    if (docs.empty()) {
        throw std::invalid_argument("evaluate: no documents");
    }
    LabelIndex labels = LabelIndex::from_labels(ckpt.label_names);
    for (const DocumentRecord& r : docs) {
        for (const std::string& l : r.labels) {
            if (labels.lookup(l) < 0) {
                throw CompatError("evaluate: corpus label '" + l +
                                  "' is not in the checkpoint label space");
            }
        }
    }
    EvalResult out;
    double total = 0.0;
    std::vector<Tensor1> gold;
    for (const DocumentRecord& r : docs) {
        TokenizedDoc doc = tokenize_document(r, ckpt.vocab, ckpt.config, labels);
        ForwardTrace trace = forward(doc, ckpt.encoder, ckpt.model, ckpt.config);
        Tape::NodeId loss = add_loss(trace, doc.targets, ckpt.config);
        total += trace.tape.scalar(loss);
        out.probabilities.push_back(trace.probabilities);
        out.doc_ids.push_back(r.id);
        gold.push_back(std::move(doc.targets));
    }
    out.loss = total / static_cast<double>(docs.size());
    out.metrics = compute_metrics(out.probabilities, gold, threshold);
    return out;
}

}  // namespace lsw
