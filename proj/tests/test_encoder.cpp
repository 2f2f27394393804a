#include <doctest.h>

#include <cstdio>
#include <cstring>

#include "lsw/adam.hpp"
#include "lsw/encoder.hpp"
#include "lsw/rng.hpp"
#include "lsw/tape.hpp"

#include <stdexcept>

#include "common.hpp"

using namespace lsw;

TEST_CASE("tokenize: lowercase, whitespace split, punctuation strip") {
    const auto t = tokenize("Deep Learning, today!");
    REQUIRE(t.size() == 3);
    CHECK(t[0] == "deep");
    CHECK(t[1] == "learning");
    CHECK(t[2] == "today");

    CHECK(tokenize("").empty());
    CHECK(tokenize("   \t\n ").empty());
    CHECK(tokenize("!!! ... ---").empty());

    const auto inner = tokenize("don't stop");
    REQUIRE(inner.size() == 2);
    CHECK(inner[0] == "don't");  // only leading/trailing punctuation is stripped

    // non-breaking space (U+00A0) and ideographic space (U+3000) both split
    const auto uni = tokenize(std::string("alpha\xc2\xa0") + "beta\xe3\x80\x80gamma");
    REQUIRE(uni.size() == 3);
    CHECK(uni[1] == "beta");
}

TEST_CASE("tokenize is idempotent on its own joined output") {
    const std::vector<std::string> texts = {
        "Deep Learning, today!", "A.B.  (c) [d] e-f", "MiXeD CaSe;  and, SO on..."};
    for (const auto& text : texts) {
        const auto once = tokenize(text);
        std::string joined;
        for (const auto& tok : once) {
            if (!joined.empty()) joined += ' ';
            joined += tok;
        }
        CHECK(tokenize(joined) == once);
    }
}

TEST_CASE("build_vocab: min_count filter and reserved entries") {
    std::vector<DocumentRecord> docs{
        testutil::make_record("d1", {{"body", "a a b"}}, {"x"}),
    };
    const Vocab v1 = build_vocab(docs, 1);
    REQUIRE(v1.size() == 4);
    CHECK(v1.tokens[0] == "<unk>");
    CHECK(v1.tokens[1] == "<pad>");
    CHECK(v1.tokens[2] == "a");  // frequency 2 before "b" with 1
    CHECK(v1.tokens[3] == "b");
    CHECK(v1.lookup("a") == 2);
    CHECK(v1.lookup("zzz") == Vocab::kUnknown);

    const Vocab v2 = build_vocab(docs, 2);
    REQUIRE(v2.size() == 3);
    CHECK(v2.tokens[2] == "a");

    CHECK_THROWS_AS(build_vocab({}, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_vocab(docs, 0), std::invalid_argument);
}

TEST_CASE("build_vocab is deterministic across document order") {
    std::vector<DocumentRecord> a{
        testutil::make_record("1", {{"s", "red green blue red"}}, {"x"}),
        testutil::make_record("2", {{"s", "green blue blue"}}, {"x"}),
    };
    std::vector<DocumentRecord> b{a[1], a[0]};
    const Vocab va = build_vocab(a, 1);
    const Vocab vb = build_vocab(b, 1);
    CHECK(va.tokens == vb.tokens);
    // ties broken lexicographically: blue(3) red(2) green(2)
    CHECK(va.tokens[2] == "blue");
    CHECK(va.tokens[3] == "green");
    CHECK(va.tokens[4] == "red");
}

TEST_CASE("vocab save/load round-trips") {
    std::vector<DocumentRecord> docs{
        testutil::make_record("d", {{"s", "alpha beta alpha"}}, {"x"})};
    const Vocab v = build_vocab(docs, 1);
    const std::string path = "test_vocab.txt";
    v.save(path);
    const Vocab loaded = Vocab::load(path);
    CHECK(loaded.tokens == v.tokens);
    CHECK(loaded.min_count == v.min_count);
    CHECK(loaded.lookup("beta") == v.lookup("beta"));
    std::remove(path.c_str());
}

TEST_CASE("encode_section: empty input gives relu(projection bias)") {
    const Vocab v = testutil::tiny_vocab(10);
    const EncoderParams enc = EncoderParams::init(v.size(), 4, 77);
    const SectionVector sv = encode_section({}, v, enc);
    const Tensor1 expect = relu(enc.projection.bias);
    REQUIRE(sv.values.len() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(sv.values[i] == expect[i]);
}

TEST_CASE("encode_section: single token equals relu(projection(embedding row))") {
    const Vocab v = testutil::tiny_vocab(10);
    const EncoderParams enc = EncoderParams::init(v.size(), 4, 78);
    const SectionVector sv = encode_section({"tok3"}, v, enc);
    const int id = v.lookup("tok3");
    Tensor1 row(4);
    for (std::size_t c = 0; c < 4; ++c) row[c] = enc.embedding.weight.at(id, c);
    const Tensor1 expect = relu(dense_forward(enc.projection, row));
    for (std::size_t i = 0; i < 4; ++i) CHECK(sv.values[i] == expect[i]);
}

TEST_CASE("encode_section: mean pooling is order invariant; OOV maps to <unk>") {
    const Vocab v = testutil::tiny_vocab(12);
    const EncoderParams enc = EncoderParams::init(v.size(), 6, 79);
    const SectionVector a = encode_section({"tok2", "tok5", "tok9"}, v, enc);
    const SectionVector b = encode_section({"tok9", "tok2", "tok5"}, v, enc);
    for (std::size_t i = 0; i < a.values.len(); ++i) CHECK(a.values[i] == b.values[i]);

    const SectionVector oov = encode_section({"not-in-vocab"}, v, enc);
    const SectionVector unk = encode_section({"<unk>"}, v, enc);
    for (std::size_t i = 0; i < oov.values.len(); ++i) CHECK(oov.values[i] == unk.values[i]);
}

TEST_CASE("shared encoder: the same tokens encode identically for any section name") {
    const Vocab v = testutil::tiny_vocab(10);
    const EncoderParams enc = EncoderParams::init(v.size(), 5, 80);
    const SectionVector title = encode_section({"tok2", "tok3"}, v, enc, "title");
    const SectionVector abstract = encode_section({"tok2", "tok3"}, v, enc, "abstract");
    for (std::size_t i = 0; i < title.values.len(); ++i) {
        CHECK(title.values[i] == abstract.values[i]);
    }
}

TEST_CASE("freeze property: frozen encoder is bit-identical after optimizer steps") {
    testutil::TinyModel t = testutil::tiny_model(6, 4, 2, 3, 20, 123);
    t.encoder.set_frozen(true);

    std::vector<double> emb_before = t.encoder.embedding.weight.v;
    std::vector<double> proj_before = t.encoder.projection.weight.v;

    auto groups = trainable_groups(t.encoder, t.params, t.cfg.kind);
    AdamState adam(AdamConfig{0.05, 0.9, 0.999, 1e-8}, groups);
    for (int step = 0; step < 10; ++step) {
        for (ParamGroup* g : groups) g->zero_grad();
        ForwardTrace trace = forward(t.doc, t.encoder, t.params, t.cfg);
        const auto loss = add_loss(trace, t.doc.targets, t.cfg);
        trace.tape.backward(loss);
        adam_step(groups, adam);
    }
    CHECK(std::memcmp(t.encoder.embedding.weight.v.data(), emb_before.data(),
                      emb_before.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(t.encoder.projection.weight.v.data(), proj_before.data(),
                      proj_before.size() * sizeof(double)) == 0);
    // the classifier must still have moved
    const LswParams fresh = LswParams::init(t.cfg, 123);
    CHECK(params_checksum({&t.params.classifier_out}) !=
          params_checksum({&fresh.classifier_out}));
}

TEST_CASE("unfrozen property: used token embeddings receive nonzero gradients") {
    testutil::TinyModel t = testutil::tiny_model(6, 4, 2, 3, 20, 321);
    auto groups = trainable_groups(t.encoder, t.params, t.cfg.kind);
    for (ParamGroup* g : groups) g->zero_grad();

    ForwardTrace trace = forward(t.doc, t.encoder, t.params, t.cfg);
    const auto loss = add_loss(trace, t.doc.targets, t.cfg);
    trace.tape.backward(loss);

    CHECK(t.encoder.embedding.has_grad);
    const int used_token = t.doc.section_ids[0][0];
    double max_abs = 0.0;
    for (std::size_t c = 0; c < t.encoder.embedding.grad_weight.cols; ++c) {
        max_abs = std::max(max_abs,
                           std::fabs(t.encoder.embedding.grad_weight.at(used_token, c)));
    }
    CHECK(max_abs > 0.0);

    // and a token that never occurs has an exactly-zero gradient row
    std::vector<bool> used(static_cast<std::size_t>(t.vocab.size()), false);
    for (const auto& ids : t.doc.section_ids) {
        for (int id : ids) used[static_cast<std::size_t>(id)] = true;
    }
    for (std::size_t row = 0; row < used.size(); ++row) {
        if (used[row]) continue;
        for (std::size_t c = 0; c < t.encoder.embedding.grad_weight.cols; ++c) {
            CHECK(t.encoder.embedding.grad_weight.at(row, c) == 0.0);
        }
    }
}
