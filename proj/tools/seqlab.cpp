#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqlab/metrics.hpp"
#include "seqlab/network.hpp"
#include "seqlab/run.hpp"
#include "seqlab/synth.hpp"

namespace {

using namespace seqlab;

struct LabeledFile {
    std::vector<std::vector<std::string>> tokens;
    std::vector<std::vector<std::string>> labels;
};

// token-per-line file, blank lines between sentences; label taken from
// `field` (tab-separated, 0-based)
LabeledFile read_labeled(const std::string& path, int field) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    LabeledFile out;
    std::vector<std::string> toks, labs;
    std::string line;
    size_t line_no = 0;
    auto flush = [&] {
        if (toks.empty()) return;
        out.tokens.push_back(std::move(toks));
        out.labels.push_back(std::move(labs));
        toks.clear();
        labs.clear();
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t pos = line.find('\t', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (field >= static_cast<int>(fields.size()))
            throw ParseError(path + ":" + std::to_string(line_no) + ": no column " +
                             std::to_string(field));
        toks.push_back(fields[0]);
        labs.push_back(fields[field]);
    }
    flush();
    return out;
}

int cmd_train(const std::string& config_path, std::optional<uint64_t> seed,
              const std::string& out_override, const std::string& emb_override) {
    RunConfig cfg = RunConfig::from_file(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!emb_override.empty()) cfg.embeddings = emb_override;
    TrainResult r = run_training(cfg, &std::cout);
    std::cout << "best epoch "
              << (r.history.best_epoch >= 0 ? r.history.epochs[r.history.best_epoch].epoch : 0)
              << "  dev " << r.history.best_dev_f << "\nwrote " << cfg.out_dir
              << "/model.json, history.json, dev_eval.txt, dev_eval.tsv\n";
    return 0;
}

int cmd_tune(const std::string& config_path, std::optional<uint64_t> seed,
             const std::string& out_override) {
    RunConfig cfg = RunConfig::from_file(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_override.empty()) cfg.out_dir = out_override;
    TuneResult r = run_tuning(cfg, &std::cout);
    for (const auto& [task, alpha] : r.best_alpha)
        std::cout << task << " alpha " << alpha << '\n';
    std::cout << r.runs << " training runs\nwrote " << cfg.out_dir
              << "/tune_report.json, tuned_config.json\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& out_path, bool with_prob) {
    Model model = Model::load(model_path);
    LabeledFile in = read_labeled(input_path, 0);  // labels column unused

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw DataError("cannot write output file: " + out_path);
        out = &file;
    }
    for (size_t s = 0; s < in.tokens.size(); ++s) {
        std::vector<std::string> labels = model.predict_main(in.tokens[s]);
        std::vector<double> probs;
        if (with_prob) probs = model.main_probability(in.tokens[s], "i");
        for (size_t t = 0; t < in.tokens[s].size(); ++t) {
            *out << in.tokens[s][t] << '\t' << labels[t];
            if (with_prob) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", probs[t]);
                *out << '\t' << buf;
            }
            *out << '\n';
        }
        if (s + 1 < in.tokens.size()) *out << '\n';
    }
    return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path, double beta,
                 int pred_field, int gold_field, const std::string& out_path) {
    LabeledFile pred = read_labeled(pred_path, pred_field);
    LabeledFile gold = read_labeled(gold_path, gold_field);
    EvalReport rep = evaluate_labels(pred.labels, gold.labels, beta);
    std::cout << format_report_table(rep);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write report file: " + out_path);
        out << format_report_kv(rep);
    }
    return 0;
}

int cmd_strip(const std::string& model_path, const std::string& out_path) {
    Model model = Model::load(model_path);
    size_t before = model.params().scalar_count();
    model.strip_auxiliary();
    model.save(out_path);
    std::cout << "parameters " << before << " -> " << model.params().scalar_count()
              << "\nwrote " << out_path << '\n';
    return 0;
}

int cmd_synth(const std::string& out_path, int sentences, double error_rate,
              double missing_rate, uint64_t seed) {
    SynthSpec spec;
    spec.sentences = sentences;
    spec.error_rate = error_rate;
    spec.missing_rate = missing_rate;
    spec.seed = seed;
    SynthResult r = synth_corpus(spec);
    save_corpus(r.corpus, synth_columns(), out_path);
    std::cout << "wrote " << r.corpus.size() << " sentences to " << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-task sequence labeling toolkit for token-level error detection"};
    app.require_subcommand(1);

    std::string config_path, model_path, input_path, out_path, pred_path, gold_path;
    std::string embeddings;
    std::optional<uint64_t> seed;
    bool with_prob = false;
    double beta = 0.5, error_rate = 0.5, missing_rate = 0.0;
    int sentences = 50, pred_field = 1, gold_field = 1;
    uint64_t synth_seed = 1;

    CLI::App* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "JSON run configuration")->required();
    train->add_option("--seed", seed, "override the config seed");
    train->add_option("--out", out_path, "override the output directory");
    train->add_option("--embeddings", embeddings, "override the pretrained embedding file");

    CLI::App* tune = app.add_subcommand("tune", "sweep auxiliary task weights");
    tune->add_option("--config", config_path, "JSON run configuration")->required();
    tune->add_option("--seed", seed, "override the config seed");
    tune->add_option("--out", out_path, "override the output directory");

    CLI::App* predict = app.add_subcommand("predict", "label a tokenized file");
    predict->add_option("--model", model_path, "trained model file")->required();
    predict->add_option("--input", input_path, "one token per line, blank line between sentences")
        ->required();
    predict->add_option("--out", out_path, "output file (default stdout)");
    predict->add_flag("--prob", with_prob, "emit the per-token error probability");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against gold labels");
    evaluate->add_option("--pred", pred_path, "predicted labels (token TAB label)")->required();
    evaluate->add_option("--gold", gold_path, "gold labels (token TAB label)")->required();
    evaluate->add_option("--beta", beta, "F-measure beta (default 0.5)");
    evaluate->add_option("--pred-field", pred_field, "label column in --pred (0-based)");
    evaluate->add_option("--gold-field", gold_field, "label column in --gold (0-based)");
    evaluate->add_option("--out", out_path, "also write a key-value report file");

    CLI::App* strip = app.add_subcommand("strip", "remove auxiliary heads from a model");
    strip->add_option("--model", model_path, "trained model file")->required();
    strip->add_option("--out", out_path, "stripped model file")->required();

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--out", out_path, "corpus file to write")->required();
    synth->add_option("--sentences", sentences, "sentence count (default 50)");
    synth->add_option("--error-rate", error_rate, "per-sentence injection probability");
    synth->add_option("--missing-rate", missing_rate, "fraction of injections as deletions");
    synth->add_option("--seed", synth_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, seed, out_path, embeddings);
        if (tune->parsed()) return cmd_tune(config_path, seed, out_path);
        if (predict->parsed()) return cmd_predict(model_path, input_path, out_path, with_prob);
        if (evaluate->parsed())
            return cmd_evaluate(pred_path, gold_path, beta, pred_field, gold_field, out_path);
        if (strip->parsed()) return cmd_strip(model_path, out_path);
        if (synth->parsed())
            return cmd_synth(out_path, sentences, error_rate, missing_rate, synth_seed);
    } catch (const seqlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
