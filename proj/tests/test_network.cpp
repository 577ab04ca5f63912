#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "seqlab/network.hpp"
#include "seqlab/synth.hpp"

using namespace seqlab;

namespace {

Hyper tiny_hyper() {
    Hyper h;
    h.word_dim = 8;
    h.lstm_dim = 6;
    h.head_dim = 4;
    h.char_dim = 4;
    h.char_lstm_dim = 3;
    return h;
}

Corpus small_corpus(uint64_t seed = 3) {
    SynthSpec spec;
    spec.sentences = 20;
    spec.error_rate = 0.5;
    spec.seed = seed;
    return synth_corpus(spec).corpus;
}

Model make_model(const std::vector<std::string>& tasks, const std::vector<double>& alphas,
                 uint64_t seed = 17, Hyper hp = tiny_hyper()) {
    Corpus c = small_corpus();
    return Model(hp, build_vocabulary(c), build_schema(c, tasks, alphas), seed);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

bool same_bits(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a.a[i] != b.a[i]) return false;
    return true;
}

double fd_slot(const std::function<double()>& forward, double& slot, double h = 1e-5) {
    const double keep = slot;
    slot = keep + h;
    const double fp = forward();
    slot = keep - h;
    const double fm = forward();
    slot = keep;
    return (fp - fm) / (2.0 * h);
}

bool grad_close(double analytic, double numeric, double rel = 1e-4, double floor = 1e-7) {
    double diff = std::abs(analytic - numeric);
    double scale = std::max(std::abs(analytic), std::abs(numeric));
    return diff <= std::max(floor, rel * scale);
}

}  // namespace

TEST_CASE("gate forced open returns the word embedding") {
    Model m = make_model({"target"}, {1.0});
    // z = sig(Wz tanh(...) + bz) == 1 exactly once Wz = 0 and bz is huge
    m.params().at("gate.Wz").value.zero();
    m.params().at("gate.bz").value.fill(1000.0);

    auto [norm, orig] = preprocess_token("dog");
    Tape t;
    Value composed = m.compose_token(t, norm, orig);
    const Mat& emb = m.params().at("word_emb").value;
    int row = m.vocab().token_index(norm);
    for (int j = 0; j < m.hyper().word_dim; ++j)
        CHECK(composed.data()(j, 0) == emb(row, j));
}

TEST_CASE("gate forced closed ignores the word embedding") {
    Model m = make_model({"target"}, {1.0});
    m.params().at("gate.Wz").value.zero();
    m.params().at("gate.Wzx").value.zero();  // keep z independent of x as well
    m.params().at("gate.bz").value.fill(-1000.0);

    auto [norm, orig] = preprocess_token("dog");
    Tape t1;
    Mat before = m.compose_token(t1, norm, orig).data();

    // char channel output must not move when the word embedding does
    Mat& emb = m.params().at("word_emb").value;
    int row = m.vocab().token_index(norm);
    for (int j = 0; j < m.hyper().word_dim; ++j) emb(row, j) += 5.0;
    Tape t2;
    Mat after = m.compose_token(t2, norm, orig).data();
    CHECK(same_bits(before, after));
}

TEST_CASE("different OOV spellings compose differently") {
    Model m = make_model({"target"}, {1.0});
    CHECK(m.vocab().token_index("zzzzq") == m.vocab().oov_index());
    CHECK(m.vocab().token_index("qwooz") == m.vocab().oov_index());
    Tape t;
    Mat a = m.compose_token(t, "zzzzq", "zzzzq").data();
    Mat b = m.compose_token(t, "qwooz", "qwooz").data();
    CHECK_FALSE(same_bits(a, b));
}

TEST_CASE("compose_token rejects empty tokens") {
    Model m = make_model({"target"}, {1.0});
    Tape t;
    CHECK_THROWS_AS(m.compose_token(t, "", ""), ContractError);
}

TEST_CASE("encode handles single-token sentences") {
    Model m = make_model({"target"}, {1.0});
    Tape t;
    EncoderOutput enc = m.encode(t, {"dog"});
    CHECK(enc.forward.size() == 1);
    CHECK(enc.backward.size() == 1);
    CHECK(enc.forward[0].rows() == m.hyper().lstm_dim);
}

TEST_CASE("encode output length equals input length") {
    Model m = make_model({"target"}, {1.0});
    std::vector<std::string> words = {"the", "dog", "sees", "a", "cat", "."};
    for (int len = 1; len <= 50; ++len) {
        std::vector<std::string> tokens;
        for (int i = 0; i < len; ++i) tokens.push_back(words[i % words.size()]);
        Tape t;
        EncoderOutput enc = m.encode(t, tokens);
        CHECK(enc.forward.size() == static_cast<size_t>(len));
        CHECK(enc.backward.size() == static_cast<size_t>(len));
    }
}

TEST_CASE("tied directions make reversal swap the state roles") {
    Model m = make_model({"target"}, {1.0});
    // tie the two sentence LSTMs
    for (const char* gate : {"Wi", "Ui", "bi", "Wf", "Uf", "bf", "Wo", "Uo", "bo", "Wg",
                             "Ug", "bg"})
        m.params().at(std::string("enc_bwd.") + gate).value =
            m.params().at(std::string("enc_fwd.") + gate).value;

    std::vector<std::string> tokens = {"the", "dog", "sees", "a", "cat"};
    std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
    Tape t;
    EncoderOutput orig = m.encode(t, tokens);
    EncoderOutput rev = m.encode(t, reversed);
    size_t n = tokens.size();
    for (size_t i = 0; i < n; ++i)
        CHECK(same_bits(orig.backward[i].data(), rev.forward[n - 1 - i].data()));
}

TEST_CASE("encoder gradients match finite differences") {
    Hyper hp = tiny_hyper();
    hp.word_dim = 5;
    hp.lstm_dim = 4;
    Model m = make_model({"target"}, {1.0}, 23, hp);
    std::vector<std::string> tokens = {"the", "dog", "."};

    auto forward = [&] {
        Tape t;
        EncoderOutput enc = m.encode(t, tokens);
        Value total;
        for (size_t i = 0; i < enc.size(); ++i) {
            Value both = t.add(t.sum(enc.forward[i]), t.sum(enc.backward[i]));
            total = total.defined() ? t.add(total, both) : both;
        }
        return total.scalar();
    };

    m.params().zero_grads();
    Tape t;
    EncoderOutput enc = m.encode(t, tokens);
    Value total;
    for (size_t i = 0; i < enc.size(); ++i) {
        Value both = t.add(t.sum(enc.forward[i]), t.sum(enc.backward[i]));
        total = total.defined() ? t.add(total, both) : both;
    }
    t.backward(total);

    for (const char* name : {"word_emb", "char_emb"}) {
        Param& p = m.params().at(name);
        for (size_t i = 0; i < p.value.size(); ++i) {
            double numeric = fd_slot(forward, p.value.a[i]);
            INFO(name, "[", i, "]");
            CHECK(grad_close(p.grad.a[i], numeric));
        }
    }
}

TEST_CASE("zero head weights yield uniform distributions") {
    Model m = make_model({"target", "pos"}, {1.0, 0.5});
    for (const std::string& task : {std::string("target"), std::string("pos")}) {
        m.params().at("head." + task + ".Wf").value.zero();
        m.params().at("head." + task + ".Wb").value.zero();
        m.params().at("head." + task + ".Wy").value.zero();
    }
    Tape t;
    EncoderOutput enc = m.encode(t, {"the", "dog", "."});
    for (const std::string& task : {std::string("target"), std::string("pos")}) {
        int k = m.schema().find(task)->label_count();
        for (Value y : m.task_head(t, enc, task))
            for (int i = 0; i < k; ++i)
                CHECK(y.data()(i, 0) == doctest::Approx(1.0 / k).epsilon(1e-12));
    }
}

TEST_CASE("task head computes softmax over engineered logits") {
    Hyper hp = tiny_hyper();
    hp.lstm_dim = 2;
    hp.head_dim = 2;
    Model m = make_model({"target"}, {1.0}, 5, hp);

    // d = tanh(Wf h_f + Wb h_b) with constructed states: h_f = [1, 0],
    // h_b = 0, Wf = I gives d = [tanh 1, 0]; Wy scales d back to [ln 3, 0]
    Param& wf = m.params().at("head.target.Wf");
    wf.value.zero();
    wf.value(0, 0) = 1.0;
    wf.value(1, 1) = 1.0;
    m.params().at("head.target.Wb").value.zero();
    Param& wy = m.params().at("head.target.Wy");
    wy.value.zero();
    wy.value(0, 0) = std::log(3.0) / std::tanh(1.0);

    Tape t;
    EncoderOutput enc;
    enc.forward.push_back(t.constant(Mat::column({1.0, 0.0})));
    enc.backward.push_back(t.constant(Mat(2, 1)));
    std::vector<Value> ys = m.task_head(t, enc, "target");
    REQUIRE(ys.size() == 1);
    CHECK(ys[0].data()(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(ys[0].data()(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("task head rejects unknown tasks") {
    Model m = make_model({"target"}, {1.0});
    Tape t;
    EncoderOutput enc = m.encode(t, {"dog"});
    CHECK_THROWS_AS(m.task_head(t, enc, "nope"), SchemaError);
}

TEST_CASE("head gradients match finite differences") {
    Hyper hp = tiny_hyper();
    hp.word_dim = 5;
    hp.lstm_dim = 4;
    hp.head_dim = 3;
    Model m = make_model({"target"}, {1.0}, 29, hp);
    Sentence s;
    s.tokens = {"the", "dog", "."};
    s.labels["target"] = {"c", "i", "c"};

    auto forward = [&] {
        Tape t;
        return m.joint_loss(t, s).total.scalar();
    };

    m.params().zero_grads();
    Tape t;
    t.backward(m.joint_loss(t, s).total);
    for (const char* name : {"head.target.Wf", "head.target.Wb", "head.target.Wy"}) {
        Param& p = m.params().at(name);
        for (size_t i = 0; i < p.value.size(); ++i) {
            double numeric = fd_slot(forward, p.value.a[i]);
            INFO(name, "[", i, "]");
            CHECK(grad_close(p.grad.a[i], numeric));
        }
    }
}

TEST_CASE("perfect predictions give zero loss") {
    Model m = make_model({"target"}, {1.0});
    // saturate the pipeline: h > 0 via the candidate bias, d = 1 via a huge
    // hidden weight, then a [1000, 0] logit row drives P(c) to exactly 1
    for (const auto& p : m.params().all()) p->value.zero();
    m.params().at("enc_fwd.bg").value.fill(1000.0);
    m.params().at("enc_bwd.bg").value.fill(1000.0);
    m.params().at("head.target.Wf").value.fill(1000.0);
    Param& wy = m.params().at("head.target.Wy");
    wy.value.zero();
    for (int j = 0; j < wy.value.cols; ++j) wy.value(0, j) = 1000.0;

    Sentence s;
    s.tokens = {"the", "dog", "sees", "a", "cat", "."};
    s.labels["target"] = std::vector<std::string>(6, "c");
    Tape t;
    CHECK(m.joint_loss(t, s).total.scalar() == 0.0);
}

TEST_CASE("zero-weight auxiliary tasks do not change the loss") {
    Corpus c = small_corpus();
    Vocabulary v = build_vocabulary(c);
    TaskSchema multi = build_schema(c, {"target", "pos"}, {1.0, 0.0});
    TaskSchema single = build_schema(c, {"target"}, {1.0});
    Model a(tiny_hyper(), v, multi, 99);
    Model b(tiny_hyper(), v, single, 99);

    for (const Sentence& s : c) {
        Tape ta, tb;
        double la = a.joint_loss(ta, s).total.scalar();
        double lb = b.joint_loss(tb, s).total.scalar();
        CHECK(std::abs(la - lb) <= 1e-12);
    }
}

TEST_CASE("uniform predictions recover the closed-form loss") {
    // custom corpus with a 2-label main task and a 4-label auxiliary task
    Corpus c;
    Sentence s;
    s.tokens = {"w1", "w2", "w3", "w1", "w2"};
    s.labels["target"] = {"c", "i", "c", "c", "i"};
    s.labels["aux"] = {"A", "B", "C", "D", "A"};
    c.push_back(s);
    c.push_back(s);  // keep every token out of the OOV bucket

    TaskSchema schema = build_schema(c, {"target", "aux"}, {1.0, 0.5});
    Model m(tiny_hyper(), build_vocabulary(c), schema, 7);
    for (const std::string& task : {std::string("target"), std::string("aux")}) {
        m.params().at("head." + task + ".Wf").value.zero();
        m.params().at("head." + task + ".Wb").value.zero();
        m.params().at("head." + task + ".Wy").value.zero();
    }

    Tape t;
    double loss = m.joint_loss(t, s).total.scalar();
    double T = static_cast<double>(s.tokens.size());
    CHECK(loss == doctest::Approx(T * (std::log(2.0) + 0.5 * std::log(4.0))).epsilon(1e-12));
    CHECK(loss == doctest::Approx(2.0 * T * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("joint loss is linear in each task weight") {
    Corpus c = small_corpus();
    Rng rng(41);
    for (int trial = 0; trial < 3; ++trial) {
        double alpha = 0.05 + 0.4 * rng.next_double();
        Vocabulary v = build_vocabulary(c);
        TaskSchema zero = build_schema(c, {"target", "pos", "error"}, {1.0, 0.0, 0.0});
        TaskSchema one = build_schema(c, {"target", "pos", "error"}, {1.0, alpha, alpha});
        TaskSchema two = build_schema(c, {"target", "pos", "error"},
                                      {1.0, 2 * alpha, 2 * alpha});
        Model m0(tiny_hyper(), v, zero, 13);
        Model m1(tiny_hyper(), v, one, 13);
        Model m2(tiny_hyper(), v, two, 13);
        const Sentence& s = c[trial];
        Tape t0, t1, t2;
        double l0 = m0.joint_loss(t0, s).total.scalar();
        double l1 = m1.joint_loss(t1, s).total.scalar();
        double l2 = m2.joint_loss(t2, s).total.scalar();
        CHECK(std::abs((l2 - l0) - 2.0 * (l1 - l0)) <= 1e-10);
    }
}

TEST_CASE("joint loss demands gold labels for every task") {
    Model m = make_model({"target", "pos"}, {1.0, 0.5});
    Sentence s;
    s.tokens = {"the", "dog"};
    s.labels["target"] = {"c", "c"};  // pos column missing
    Tape t;
    CHECK_THROWS_AS(m.joint_loss(t, s), DataError);
}

TEST_CASE("per-task losses sum to the weighted total") {
    Model m = make_model({"target", "pos", "error"}, {1.0, 0.5, 0.2});
    Corpus c = small_corpus();
    for (int i = 0; i < 5; ++i) {
        Tape t;
        LossBreakdown lb = m.joint_loss(t, c[i]);
        double sum = 0.0;
        for (size_t n = 0; n < lb.per_task.size(); ++n)
            sum += m.schema().tasks[n].alpha * lb.per_task[n].scalar();
        CHECK(lb.total.scalar() == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("prediction argmax prefers the lowest index on ties") {
    Model m = make_model({"target"}, {1.0});
    // zero heads make every token an exact [0.5, 0.5] tie
    m.params().at("head.target.Wf").value.zero();
    m.params().at("head.target.Wb").value.zero();
    m.params().at("head.target.Wy").value.zero();
    Prediction p = m.predict({"the", "dog"});
    CHECK(p.argmax[0] == std::vector<int>{0, 0});
    CHECK(p.labels[0] == std::vector<std::string>{"c", "c"});
    CHECK(p.dist[0][0](0, 0) == 0.5);
}

TEST_CASE("prediction distributions sum to one") {
    Model m = make_model({"target", "pos"}, {1.0, 0.5});
    Prediction p = m.predict({"the", "dog", "sees", "a", "cat", "."});
    for (const auto& task_dists : p.dist)
        for (const Mat& d : task_dists) {
            double total = 0;
            for (double v : d.a) total += v;
            CHECK(std::abs(total - 1.0) <= 1e-9);
        }
}

TEST_CASE("stripping keeps main outputs bit-identical") {
    Model m = make_model({"target", "pos", "error", "lang"}, {1.0, 0.5, 0.5, 0.2}, 71);
    Corpus c = small_corpus(10);

    std::vector<Prediction> before;
    for (int i = 0; i < 10; ++i) before.push_back(m.predict(c[i].tokens));

    size_t multi_count = m.params().scalar_count();
    m.strip_auxiliary();
    CHECK(m.schema().task_count() == 1);
    CHECK(m.params().scalar_count() < multi_count);

    for (int i = 0; i < 10; ++i) {
        Prediction after = m.predict(c[i].tokens);
        CHECK(after.labels[0] == before[i].labels[0]);
        for (size_t t = 0; t < after.dist[0].size(); ++t)
            CHECK(same_bits(after.dist[0][t], before[i].dist[0][t]));
    }
}

TEST_CASE("stripped parameter count equals a fresh single-task model") {
    Corpus c = small_corpus();
    Vocabulary v = build_vocabulary(c);
    Model multi(tiny_hyper(), v, build_schema(c, {"target", "pos", "error"}, {1.0, 1.0, 1.0}),
                55);
    Model single(tiny_hyper(), v, build_schema(c, {"target"}, {1.0}), 55);
    multi.strip_auxiliary();
    CHECK(multi.params().scalar_count() == single.params().scalar_count());
    CHECK(multi.params().all().size() == single.params().all().size());
}

TEST_CASE("model files round-trip") {
    Model m = make_model({"target", "pos"}, {1.0, 0.5}, 64);
    std::string path = temp_path("model_roundtrip.json");
    m.save(path);
    Model back = Model::load(path);

    CHECK(back.hyper() == m.hyper());
    CHECK(back.schema().task_count() == 2);
    CHECK(back.vocab().token_count() == m.vocab().token_count());
    Corpus c = small_corpus(8);
    for (int i = 0; i < 5; ++i) {
        Prediction a = m.predict(c[i].tokens);
        Prediction b = back.predict(c[i].tokens);
        for (size_t task = 0; task < a.dist.size(); ++task)
            for (size_t t = 0; t < a.dist[task].size(); ++t)
                CHECK(same_bits(a.dist[task][t], b.dist[task][t]));
    }
}

TEST_CASE("stripped model files carry only the main task") {
    Model m = make_model({"target", "pos", "error"}, {1.0, 0.5, 0.5});
    m.strip_auxiliary();
    std::string path = temp_path("stripped.json");
    m.save(path);
    std::stringstream buf;
    buf << std::ifstream(path).rdbuf();
    std::string text = buf.str();
    CHECK(text.find("head.target") != std::string::npos);
    CHECK(text.find("head.pos") == std::string::npos);
    CHECK(text.find("head.error") == std::string::npos);
}

TEST_CASE("unknown model versions are rejected") {
    Model m = make_model({"target"}, {1.0});
    std::string path = temp_path("future.json");
    m.save(path);
    std::stringstream buf;
    buf << std::ifstream(path).rdbuf();
    std::string text = buf.str();
    size_t pos = text.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "\"version\":9");
    std::ofstream(path) << text;
    CHECK_THROWS_WITH_AS(Model::load(path), doctest::Contains("version"), DataError);

    std::string junk = temp_path("junk.json");
    std::ofstream(junk) << "{\"format\": \"something-else\"}";
    CHECK_THROWS_AS(Model::load(junk), DataError);
}

TEST_CASE("pretrained embeddings overwrite matching rows only") {
    Model m = make_model({"target"}, {1.0});
    int dim = m.hyper().word_dim;
    REQUIRE(m.vocab().token_index("dog") != m.vocab().oov_index());

    Mat before_cat = Mat(1, dim);
    int cat_row = m.vocab().token_index("cat");
    for (int j = 0; j < dim; ++j)
        before_cat(0, j) = m.params().at("word_emb").value(cat_row, j);

    std::string path = temp_path("vectors.txt");
    {
        std::ofstream out(path);
        out << 2 << ' ' << dim << '\n';
        out << "dog";
        for (int j = 0; j < dim; ++j) out << ' ' << 0.125 * (j + 1);
        out << '\n' << "notinvocab";
        for (int j = 0; j < dim; ++j) out << ' ' << 9.0;
        out << '\n';
    }
    size_t loaded = m.load_pretrained_embeddings(path);
    CHECK(loaded == 1);

    int dog_row = m.vocab().token_index("dog");
    for (int j = 0; j < dim; ++j)
        CHECK(m.params().at("word_emb").value(dog_row, j) == 0.125 * (j + 1));
    for (int j = 0; j < dim; ++j)
        CHECK(m.params().at("word_emb").value(cat_row, j) == before_cat(0, j));

    std::string bad = temp_path("badvec.txt");
    std::ofstream(bad) << "dog 1.0 2.0\n";
    CHECK_THROWS_AS(m.load_pretrained_embeddings(bad), DataError);
}
