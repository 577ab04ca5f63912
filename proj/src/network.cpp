#include "seqlab/network.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace seqlab {

namespace {
constexpr const char* kFormatName = "seqlab-model";
constexpr int kFormatVersion = 1;
}  // namespace

Model::Model(Hyper hp, Vocabulary vocab, TaskSchema schema, uint64_t init_seed)
    : hp_(hp), vocab_(std::move(vocab)), schema_(std::move(schema)) {
    build_params(init_seed);
}

void Model::build_params(uint64_t init_seed) {
    Rng rng(init_seed);
    auto table = [&](const std::string& name, int rows, int cols) -> Param& {
        Param& p = params_.create(name, rows, cols);
        glorot_init(p.value, cols, rows, rng);
        return p;
    };

    // Creation order is fixed: shared components first, then heads in task
    // order, so models differing only in auxiliary heads share the same
    // initial values for everything else under one seed.
    table("word_emb", vocab_.token_count(), hp_.word_dim);
    table("char_emb", vocab_.char_count(), hp_.char_dim);
    make_lstm(params_, "char_fwd", hp_.char_dim, hp_.char_lstm_dim, rng);
    make_lstm(params_, "char_bwd", hp_.char_dim, hp_.char_lstm_dim, rng);
    table("gate.Wm", hp_.word_dim, 2 * hp_.char_lstm_dim);
    params_.create("gate.bm", hp_.word_dim, 1);
    table("gate.Wzx", hp_.word_dim, hp_.word_dim);
    table("gate.Wzm", hp_.word_dim, hp_.word_dim);
    table("gate.Wz", hp_.word_dim, hp_.word_dim);
    params_.create("gate.bz", hp_.word_dim, 1);
    make_lstm(params_, "enc_fwd", hp_.word_dim, hp_.lstm_dim, rng);
    make_lstm(params_, "enc_bwd", hp_.word_dim, hp_.lstm_dim, rng);
    for (const TaskSpec& task : schema_.tasks) {
        table("head." + task.name + ".Wf", hp_.head_dim, hp_.lstm_dim);
        table("head." + task.name + ".Wb", hp_.head_dim, hp_.lstm_dim);
        table("head." + task.name + ".Wy", task.label_count(), hp_.head_dim);
    }
}

LstmWeights Model::lstm_handles(const std::string& prefix) {
    LstmWeights w;
    w.Wi = &params_.at(prefix + ".Wi");
    w.Ui = &params_.at(prefix + ".Ui");
    w.bi = &params_.at(prefix + ".bi");
    w.Wf = &params_.at(prefix + ".Wf");
    w.Uf = &params_.at(prefix + ".Uf");
    w.bf = &params_.at(prefix + ".bf");
    w.Wo = &params_.at(prefix + ".Wo");
    w.Uo = &params_.at(prefix + ".Uo");
    w.bo = &params_.at(prefix + ".bo");
    w.Wg = &params_.at(prefix + ".Wg");
    w.Ug = &params_.at(prefix + ".Ug");
    w.bg = &params_.at(prefix + ".bg");
    return w;
}

Value Model::compose_token(Tape& t, const std::string& normalized,
                           const std::string& original) {
    if (original.empty()) throw ContractError("compose_token: empty token");

    Value x = t.row_of(params_.at("word_emb"), vocab_.token_index(normalized));

    // character channel over the original spelling
    std::vector<Value> chars;
    chars.reserve(original.size());
    Param& char_emb = params_.at("char_emb");
    for (char c : original) chars.push_back(t.row_of(char_emb, vocab_.char_index(c)));
    std::vector<Value> fwd = lstm_run(t, chars, lstm_handles("char_fwd"));
    std::vector<Value> rev(chars.rbegin(), chars.rend());
    std::vector<Value> bwd = lstm_run(t, rev, lstm_handles("char_bwd"));
    Value cc = t.concat(fwd.back(), bwd.back());
    Value m = t.tanh(t.add(t.matmul(t.input(params_.at("gate.Wm")), cc),
                           t.input(params_.at("gate.bm"))));

    // z = sig(Wz tanh(Wzx x + Wzm m) + bz); output z (.) x + (1-z) (.) m
    Value mix = t.tanh(t.add(t.matmul(t.input(params_.at("gate.Wzx")), x),
                             t.matmul(t.input(params_.at("gate.Wzm")), m)));
    Value z = t.sigmoid(t.add(t.matmul(t.input(params_.at("gate.Wz")), mix),
                              t.input(params_.at("gate.bz"))));
    return t.add(t.mul(z, x), t.mul(t.one_minus(z), m));
}

EncoderOutput Model::encode(Tape& t, const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw DataError("encode: empty sentence");
    std::vector<Value> xs;
    xs.reserve(tokens.size());
    for (const std::string& tok : tokens) {
        auto [norm, orig] = preprocess_token(tok);
        xs.push_back(compose_token(t, norm, orig));
    }
    EncoderOutput out;
    out.forward = lstm_run(t, xs, lstm_handles("enc_fwd"));
    std::vector<Value> rev(xs.rbegin(), xs.rend());
    std::vector<Value> bwd = lstm_run(t, rev, lstm_handles("enc_bwd"));
    out.backward.assign(bwd.rbegin(), bwd.rend());
    return out;
}

std::vector<Value> Model::task_head(Tape& t, const EncoderOutput& enc,
                                    const std::string& task) {
    if (!schema_.find(task)) throw SchemaError("unknown task: " + task);
    Value wf = t.input(params_.at("head." + task + ".Wf"));
    Value wb = t.input(params_.at("head." + task + ".Wb"));
    Value wy = t.input(params_.at("head." + task + ".Wy"));
    std::vector<Value> ys;
    ys.reserve(enc.size());
    for (size_t i = 0; i < enc.size(); ++i) {
        Value d = t.tanh(t.add(t.matmul(wf, enc.forward[i]), t.matmul(wb, enc.backward[i])));
        ys.push_back(t.softmax(t.matmul(wy, d)));
    }
    return ys;
}

LossBreakdown Model::joint_loss(Tape& t, const Sentence& gold) {
    EncoderOutput enc = encode(t, gold.tokens);
    LossBreakdown out;
    for (const TaskSpec& task : schema_.tasks) {
        auto it = gold.labels.find(task.name);
        if (it == gold.labels.end())
            throw DataError("sentence lacks gold labels for task '" + task.name + "'");
        if (it->second.size() != gold.tokens.size())
            throw DataError("task '" + task.name + "' has " +
                            std::to_string(it->second.size()) + " labels for " +
                            std::to_string(gold.tokens.size()) + " tokens");
        std::vector<Value> ys = task_head(t, enc, task.name);
        Value task_sum;
        for (size_t i = 0; i < ys.size(); ++i) {
            Value ce = t.cross_entropy(ys[i], task.label_index(it->second[i]));
            task_sum = task_sum.defined() ? t.add(task_sum, ce) : ce;
        }
        out.per_task.push_back(task_sum);
        Value weighted = t.scale(task_sum, task.alpha);
        out.total = out.total.defined() ? t.add(out.total, weighted) : weighted;
    }
    return out;
}

Value Model::task_loss(Tape& t, const Sentence& gold, const std::string& task) {
    const TaskSpec* spec = schema_.find(task);
    if (!spec) throw SchemaError("unknown task: " + task);
    auto it = gold.labels.find(task);
    if (it == gold.labels.end())
        throw DataError("sentence lacks gold labels for task '" + task + "'");
    EncoderOutput enc = encode(t, gold.tokens);
    std::vector<Value> ys = task_head(t, enc, task);
    Value sum;
    for (size_t i = 0; i < ys.size(); ++i) {
        Value ce = t.cross_entropy(ys[i], spec->label_index(it->second[i]));
        sum = sum.defined() ? t.add(sum, ce) : ce;
    }
    return sum;
}

Prediction Model::predict(const std::vector<std::string>& tokens) {
    Tape t;
    EncoderOutput enc = encode(t, tokens);
    Prediction pred;
    for (const TaskSpec& task : schema_.tasks) {
        std::vector<Value> ys = task_head(t, enc, task.name);
        std::vector<Mat> dist;
        std::vector<int> arg;
        std::vector<std::string> labels;
        for (const Value& y : ys) {
            const Mat& d = y.data();
            int best = 0;
            for (int k = 1; k < d.rows; ++k)
                if (d(k, 0) > d(best, 0)) best = k;  // ties keep the lowest index
            dist.push_back(d);
            arg.push_back(best);
            labels.push_back(task.labels[best]);
        }
        pred.dist.push_back(std::move(dist));
        pred.argmax.push_back(std::move(arg));
        pred.labels.push_back(std::move(labels));
    }
    return pred;
}

std::vector<std::string> Model::predict_main(const std::vector<std::string>& tokens) {
    return predict(tokens).labels.at(0);
}

std::vector<double> Model::main_probability(const std::vector<std::string>& tokens,
                                            const std::string& label) {
    int k = schema_.main().label_index(label);
    Prediction pred = predict(tokens);
    std::vector<double> out;
    out.reserve(tokens.size());
    for (const Mat& d : pred.dist.at(0)) out.push_back(d(k, 0));
    return out;
}

void Model::strip_auxiliary() {
    for (size_t n = 1; n < schema_.tasks.size(); ++n) {
        const std::string& name = schema_.tasks[n].name;
        params_.remove("head." + name + ".Wf");
        params_.remove("head." + name + ".Wb");
        params_.remove("head." + name + ".Wy");
    }
    schema_.tasks.resize(1);
}

std::vector<Mat> Model::snapshot_values() const {
    std::vector<Mat> snap;
    snap.reserve(params_.all().size());
    for (const auto& p : params_.all()) snap.push_back(p->value);
    return snap;
}

void Model::restore_values(const std::vector<Mat>& snap) {
    const auto& items = params_.all();
    if (snap.size() != items.size())
        throw ContractError("restore_values: snapshot does not match parameter layout");
    for (size_t i = 0; i < items.size(); ++i) items[i]->value = snap[i];
}

void Model::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = kFormatName;
    j["version"] = kFormatVersion;
    j["hyper"] = {
        {"word_dim", hp_.word_dim},         {"lstm_dim", hp_.lstm_dim},
        {"head_dim", hp_.head_dim},         {"char_dim", hp_.char_dim},
        {"char_lstm_dim", hp_.char_lstm_dim},
    };
    nlohmann::json tasks = nlohmann::json::array();
    for (const TaskSpec& t : schema_.tasks)
        tasks.push_back({{"name", t.name}, {"labels", t.labels}, {"alpha", t.alpha}});
    j["tasks"] = std::move(tasks);

    nlohmann::json vocab;
    vocab["tokens"] = vocab_.tokens();
    std::vector<int> chars;
    for (char c : vocab_.chars()) chars.push_back(static_cast<unsigned char>(c));
    vocab["chars"] = std::move(chars);
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [tok, n] : vocab_.counts()) counts[tok] = n;
    vocab["counts"] = std::move(counts);
    j["vocab"] = std::move(vocab);

    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& p : params_.all())
        arrays.push_back({{"name", p->name},
                          {"rows", p->value.rows},
                          {"cols", p->value.cols},
                          {"data", p->value.a}});
    j["params"] = std::move(arrays);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << j.dump() << '\n';
}

Model Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file " + path + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != kFormatName)
        throw DataError(path + " is not a " + kFormatName + " file");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kFormatVersion)
        throw DataError("unsupported model format version " + j["version"].dump() +
                        " (this build reads version " + std::to_string(kFormatVersion) + ")");

    Model m;
    m.hp_.word_dim = j["hyper"]["word_dim"].get<int>();
    m.hp_.lstm_dim = j["hyper"]["lstm_dim"].get<int>();
    m.hp_.head_dim = j["hyper"]["head_dim"].get<int>();
    m.hp_.char_dim = j["hyper"]["char_dim"].get<int>();
    m.hp_.char_lstm_dim = j["hyper"]["char_lstm_dim"].get<int>();

    for (const auto& t : j["tasks"]) {
        TaskSpec spec;
        spec.name = t["name"].get<std::string>();
        spec.labels = t["labels"].get<std::vector<std::string>>();
        spec.alpha = t["alpha"].get<double>();
        m.schema_.tasks.push_back(std::move(spec));
    }

    auto tokens = j["vocab"]["tokens"].get<std::vector<std::string>>();
    std::vector<char> chars;
    for (int c : j["vocab"]["chars"].get<std::vector<int>>())
        chars.push_back(static_cast<char>(static_cast<unsigned char>(c)));
    std::unordered_map<std::string, int64_t> counts;
    for (const auto& [tok, n] : j["vocab"]["counts"].items())
        counts[tok] = n.get<int64_t>();
    m.vocab_.set_tables(std::move(tokens), std::move(chars), std::move(counts));

    m.build_params(0);  // layout only; values overwritten below
    std::set<std::string> seen;
    for (const auto& arr : j["params"]) {
        std::string name = arr["name"].get<std::string>();
        Param* p = m.params_.find(name);
        if (!p) throw DataError("model file names unknown parameter '" + name + "'");
        int rows = arr["rows"].get<int>(), cols = arr["cols"].get<int>();
        if (rows != p->value.rows || cols != p->value.cols)
            throw DataError("parameter '" + name + "' has shape " + std::to_string(rows) +
                            "x" + std::to_string(cols) + ", expected " +
                            p->value.shape_str());
        p->value.a = arr["data"].get<std::vector<double>>();
        seen.insert(name);
    }
    if (seen.size() != m.params_.all().size())
        throw DataError("model file is missing parameter arrays");
    return m;
}

size_t Model::load_pretrained_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);
    Param& emb = params_.at("word_emb");
    std::string line;
    size_t loaded = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (first) {
            first = false;
            // optional word2vec header: "<count> <dim>"
            long long a, b;
            std::istringstream probe(line);
            if ((probe >> a >> b) && probe.eof()) continue;
        }
        int idx = vocab_.token_index(word);
        if (idx == vocab_.oov_index() && word != Vocabulary::kOov) {
            continue;  // token not in vocabulary
        }
        std::vector<double> vec;
        double v;
        while (ss >> v) vec.push_back(v);
        if (static_cast<int>(vec.size()) != hp_.word_dim)
            throw DataError("embedding for '" + word + "' has " +
                            std::to_string(vec.size()) + " dims, expected " +
                            std::to_string(hp_.word_dim));
        for (int jj = 0; jj < hp_.word_dim; ++jj) emb.value(idx, jj) = vec[jj];
        ++loaded;
    }
    return loaded;
}

}  // namespace seqlab
