// Shared test fixtures and independent oracles. Everything here recomputes
// expectations through a different route than the library (naive loops,
// central finite differences, hand-stepped updates) and must stay independent
// of the implementation paths it checks.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lsw/adam.hpp"
#include "lsw/data.hpp"
#include "lsw/encoder.hpp"
#include "lsw/model.hpp"
#include "lsw/rng.hpp"
#include "lsw/tensor.hpp"

namespace testutil {

inline double rel_err(double analytic, double numeric) {
    // Central differences at h=1e-5 carry ~1e-11 absolute roundoff, so
    // differences below 1e-9 are indistinguishable from noise in f64 and
    // count as agreement (the usual atol+rtol gradcheck form).
    const double diff = std::fabs(analytic - numeric);
    if (diff < 1e-9) return 0.0;
    return diff / std::max(std::fabs(analytic), std::fabs(numeric));
}

// Naive matvec: independent of dense_forward.
inline lsw::Tensor1 naive_matvec(const lsw::Tensor2& w, const lsw::Tensor1& x,
                                 const lsw::Tensor1& b) {
    lsw::Tensor1 out(w.rows, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) {
            out[r] += w.at(r, c) * x[c];
        }
        if (b.len() > 0) out[r] += b[r];
    }
    return out;
}

// Unfused BCE with clamped probabilities.
inline double naive_bce(const lsw::Tensor1& logits, const lsw::Tensor1& targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < logits.len(); ++i) {
        double p = 1.0 / (1.0 + std::exp(-logits[i]));
        p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
        total += -(targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
    }
    return total / static_cast<double>(logits.len());
}

// Max relative error between analytic gradients (already accumulated in the
// groups' grad buffers) and central finite differences of `loss` over every
// entry of every group.
inline double gradcheck(const std::function<double()>& loss,
                        const std::vector<lsw::ParamGroup*>& groups, double h = 1e-5) {
    double worst = 0.0;
    for (lsw::ParamGroup* g : groups) {
        for (std::size_t i = 0; i < g->weight.v.size() + g->bias.v.size(); ++i) {
            double* entry = i < g->weight.v.size() ? &g->weight.v[i]
                                                   : &g->bias.v[i - g->weight.v.size()];
            const double analytic = i < g->weight.v.size()
                                        ? g->grad_weight.v[i]
                                        : g->grad_bias.v[i - g->weight.v.size()];
            const double saved = *entry;
            *entry = saved + h;
            const double up = loss();
            *entry = saved - h;
            const double down = loss();
            *entry = saved;
            const double numeric = (up - down) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic, numeric));
        }
    }
    return worst;
}

// Small random model + document for gradient checks and invariants.
struct TinyModel {
    lsw::ModelConfig cfg;
    lsw::Vocab vocab;
    lsw::EncoderParams encoder;
    lsw::LswParams params;
    lsw::TokenizedDoc doc;
};

inline lsw::Vocab tiny_vocab(int n_tokens) {
    lsw::Vocab v;
    v.tokens = {"<unk>", "<pad>"};
    for (int i = 2; i < n_tokens; ++i) v.tokens.push_back("tok" + std::to_string(i));
    for (std::size_t i = 0; i < v.tokens.size(); ++i) {
        v.index.emplace(v.tokens[i], static_cast<int>(i));
    }
    return v;
}

inline TinyModel tiny_model(int d, int p, int K, int m, int vocab_size, std::uint64_t seed,
                            lsw::ModelKind kind = lsw::ModelKind::kLsw,
                            lsw::OutputActivation out = lsw::OutputActivation::kSigmoid) {
    TinyModel t;
    t.cfg.d = d;
    t.cfg.p = p;
    t.cfg.m = m;
    t.cfg.kind = kind;
    t.cfg.output = out;
    for (int k = 0; k < K; ++k) t.cfg.section_names.push_back("sec_" + std::to_string(k));
    t.vocab = tiny_vocab(vocab_size);
    t.encoder = lsw::EncoderParams::init(vocab_size, d, seed);
    t.params = lsw::LswParams::init(t.cfg, seed);

    lsw::Rng rng(lsw::mix64(seed ^ 0xD0C5EEDULL));
    t.doc.id = "tiny";
    for (int k = 0; k < K; ++k) {
        std::vector<int> ids;
        const std::size_t n = 3 + rng.index(5);
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(vocab_size))));
        }
        t.doc.section_ids.push_back(std::move(ids));
    }
    t.doc.targets = lsw::Tensor1(static_cast<std::size_t>(m), 0.0);
    for (int c = 0; c < m; ++c) {
        if (rng.uniform() < 0.4) t.doc.targets[static_cast<std::size_t>(c)] = 1.0;
    }
    if (t.doc.targets.sum() == 0.0) t.doc.targets[0] = 1.0;
    return t;
}

// Per-class confusion counting with plain nested loops, then the metric
// formulas; the counting path is independent of compute_metrics.
struct OracleMetrics {
    double macro_f1, macro_p, macro_r, micro_f1, micro_p, micro_r;
};

inline OracleMetrics brute_force_metrics(const std::vector<lsw::Tensor1>& probs,
                                         const std::vector<lsw::Tensor1>& gold,
                                         double threshold) {
    const std::size_t n = probs.size();
    const std::size_t m = probs[0].len();
    OracleMetrics out{};
    long tp_all = 0, fp_all = 0, fn_all = 0;
    for (std::size_t c = 0; c < m; ++c) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = probs[i][c] >= threshold;
            const bool g = gold[i][c] >= 0.5;
            if (pred && g) ++tp;
            if (pred && !g) ++fp;
            if (!pred && g) ++fn;
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fn;
        const double p = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
        const double r = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
        out.macro_p += p;
        out.macro_r += r;
        out.macro_f1 += (p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r));
    }
    out.macro_p /= double(m);
    out.macro_r /= double(m);
    out.macro_f1 /= double(m);
    out.micro_p = tp_all + fp_all == 0 ? 0.0 : double(tp_all) / double(tp_all + fp_all);
    out.micro_r = tp_all + fn_all == 0 ? 0.0 : double(tp_all) / double(tp_all + fn_all);
    out.micro_f1 = out.micro_p + out.micro_r == 0.0
                       ? 0.0
                       : 2.0 * out.micro_p * out.micro_r / (out.micro_p + out.micro_r);
    return out;
}

inline lsw::DocumentRecord make_record(std::string id,
                                       std::vector<std::pair<std::string, std::string>> sections,
                                       std::vector<std::string> labels) {
    lsw::DocumentRecord r;
    r.id = std::move(id);
    r.sections = std::move(sections);
    r.labels = std::move(labels);
    return r;
}

}  // namespace testutil
