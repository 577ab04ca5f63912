#include "seqlab/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace seqlab {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

template <typename T>
void read_into(const json& j, const char* field, T& out) {
    if (!j.contains(field)) return;
    try {
        out = j.at(field).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + field + "' has the wrong type");
    }
}

void read_hyper(const json& j, Hyper& h) {
    read_into(j, "word_dim", h.word_dim);
    read_into(j, "lstm_dim", h.lstm_dim);
    read_into(j, "head_dim", h.head_dim);
    read_into(j, "char_dim", h.char_dim);
    read_into(j, "char_lstm_dim", h.char_lstm_dim);
}

void read_optimizer(const json& j, OptimizerConfig& o) {
    read_into(j, "rho", o.rho);
    read_into(j, "eps", o.eps);
    read_into(j, "clip", o.clip);
}

json config_to_json(const RunConfig& cfg) {
    json tasks = json::array();
    for (const auto& t : cfg.tasks) {
        json e = {{"name", t.name}};
        if (t.tune)
            e["alpha"] = "tune";
        else
            e["alpha"] = t.alpha;
        tasks.push_back(std::move(e));
    }
    json j = {
        {"train", cfg.train_path},
        {"dev", cfg.dev_path},
        {"columns", cfg.columns},
        {"tasks", std::move(tasks)},
        {"strategy", cfg.strategy},
        {"hyper",
         {{"word_dim", cfg.hyper.word_dim},
          {"lstm_dim", cfg.hyper.lstm_dim},
          {"head_dim", cfg.hyper.head_dim},
          {"char_dim", cfg.hyper.char_dim},
          {"char_lstm_dim", cfg.hyper.char_lstm_dim}}},
        {"optimizer", {{"rho", cfg.opt.rho}, {"eps", cfg.opt.eps}, {"clip", cfg.opt.clip}}},
        {"max_epochs", cfg.max_epochs},
        {"patience", cfg.patience},
        {"seed", cfg.seed},
        {"out", cfg.out_dir},
        {"tune_grid", cfg.tune_grid},
    };
    if (!cfg.embeddings.empty()) j["embeddings"] = cfg.embeddings;
    if (cfg.strategy == "pretrain") {
        j["source_train"] = cfg.source_train;
        j["source_dev"] = cfg.source_dev;
        j["source_task"] = cfg.source_task;
        if (!cfg.source_columns.empty()) j["source_columns"] = cfg.source_columns;
    }
    if (cfg.strategy == "alternating") {
        json ds = json::array();
        for (const auto& d : cfg.datasets) {
            json e = {{"train", d.train}, {"task", d.task}};
            if (!d.columns.empty()) e["columns"] = d.columns;
            ds.push_back(std::move(e));
        }
        j["datasets"] = std::move(ds);
        j["eval_interval"] = cfg.eval_interval;
    }
    return j;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    json j = load_json(path);
    RunConfig cfg;
    read_into(j, "train", cfg.train_path);
    read_into(j, "dev", cfg.dev_path);
    read_into(j, "columns", cfg.columns);
    read_into(j, "strategy", cfg.strategy);
    read_into(j, "source_train", cfg.source_train);
    read_into(j, "source_dev", cfg.source_dev);
    read_into(j, "source_task", cfg.source_task);
    read_into(j, "source_columns", cfg.source_columns);
    read_into(j, "eval_interval", cfg.eval_interval);
    read_into(j, "max_epochs", cfg.max_epochs);
    read_into(j, "patience", cfg.patience);
    read_into(j, "seed", cfg.seed);
    read_into(j, "embeddings", cfg.embeddings);
    read_into(j, "out", cfg.out_dir);
    read_into(j, "tune_grid", cfg.tune_grid);
    if (j.contains("hyper")) read_hyper(j.at("hyper"), cfg.hyper);
    if (j.contains("optimizer")) read_optimizer(j.at("optimizer"), cfg.opt);

    if (j.contains("tasks")) {
        if (!j.at("tasks").is_array()) throw ConfigError("config field 'tasks' must be a list");
        for (const json& e : j.at("tasks")) {
            TaskEntry t;
            if (e.is_string()) {
                t.name = e.get<std::string>();
            } else {
                read_into(e, "name", t.name);
                if (e.contains("alpha")) {
                    if (e.at("alpha").is_string() && e.at("alpha") == "tune")
                        t.tune = true;
                    else if (e.at("alpha").is_number())
                        t.alpha = e.at("alpha").get<double>();
                    else
                        throw ConfigError("task '" + t.name +
                                          "': alpha must be a number or \"tune\"");
                }
            }
            if (t.name.empty()) throw ConfigError("config field 'tasks' has an unnamed entry");
            cfg.tasks.push_back(std::move(t));
        }
    }

    if (j.contains("datasets")) {
        if (!j.at("datasets").is_array())
            throw ConfigError("config field 'datasets' must be a list");
        for (const json& e : j.at("datasets")) {
            DatasetEntry d;
            read_into(e, "train", d.train);
            read_into(e, "task", d.task);
            read_into(e, "columns", d.columns);
            cfg.datasets.push_back(std::move(d));
        }
    }
    return cfg;
}

void RunConfig::validate() const {
    if (strategy != "joint" && strategy != "pretrain" && strategy != "alternating")
        throw ConfigError("strategy must be joint, pretrain or alternating, got '" +
                          strategy + "'");
    if (columns.empty() || columns.front() != "token")
        throw ConfigError("'columns' must start with \"token\"");

    auto must_exist = [](const std::string& field, const std::string& path) {
        if (path.empty()) throw ConfigError("'" + field + "' path is required");
        if (!std::filesystem::exists(path))
            throw ConfigError("'" + field + "' path does not exist: " + path);
    };
    if (!embeddings.empty()) must_exist("embeddings", embeddings);

    if (strategy == "alternating") {
        if (datasets.size() < 1) throw ConfigError("alternating strategy needs 'datasets'");
        if (datasets.front().task != "target")
            throw ConfigError("the first alternating dataset must carry the 'target' task");
        for (const DatasetEntry& d : datasets) {
            must_exist("datasets.train", d.train);
            if (d.task.empty()) throw ConfigError("alternating dataset without 'task'");
        }
        must_exist("dev", dev_path);
        return;
    }

    must_exist("train", train_path);
    must_exist("dev", dev_path);
    if (tasks.empty() || tasks.front().name != "target")
        throw ConfigError("'tasks' must start with \"target\"");
    if (tasks.front().tune || tasks.front().alpha != 1.0)
        throw ConfigError("the main 'target' task keeps weight 1.0");
    for (const TaskEntry& t : tasks) {
        bool found = std::find(columns.begin() + 1, columns.end(), t.name) != columns.end();
        if (!found)
            throw ConfigError("task '" + t.name + "' has no matching column in 'columns'");
    }
    if (strategy == "pretrain") {
        if (source_task.empty()) throw ConfigError("pretrain strategy needs 'source_task'");
        must_exist("source_train", source_train);
        must_exist("source_dev", source_dev);
    }
}

TrainConfig RunConfig::train_config(std::ostream* log) const {
    TrainConfig tc;
    tc.hyper = hyper;
    tc.opt = opt;
    tc.max_epochs = max_epochs;
    tc.patience = patience;
    tc.seed = seed;
    tc.eval_interval = eval_interval;
    tc.embeddings_path = embeddings;
    tc.log = log;
    return tc;
}

namespace {

TaskSchema schema_from_config(const RunConfig& cfg, const Corpus& train) {
    std::vector<std::string> names;
    std::vector<double> alphas;
    for (const RunConfig::TaskEntry& t : cfg.tasks) {
        if (t.tune)
            throw ConfigError("task '" + t.name +
                              "' is marked \"tune\"; run the tune subcommand first");
        names.push_back(t.name);
        alphas.push_back(t.alpha);
    }
    return build_schema(train, names, alphas);
}

}  // namespace

TrainResult run_training(const RunConfig& cfg, std::ostream* log) {
    cfg.validate();
    TrainConfig tc = cfg.train_config(log);
    ColumnSpec cols{cfg.columns};

    TrainResult result = [&] {
        if (cfg.strategy == "alternating") {
            std::vector<AlternatingDataset> ds;
            for (const RunConfig::DatasetEntry& d : cfg.datasets) {
                ColumnSpec dcols{d.columns.empty() ? cfg.columns : d.columns};
                ds.push_back({load_corpus(d.train, dcols), d.task});
            }
            Corpus dev = load_corpus(cfg.dev_path, cols);
            return train_alternating(ds, dev, tc);
        }
        Corpus train = load_corpus(cfg.train_path, cols);
        Corpus dev = load_corpus(cfg.dev_path, cols);
        if (cfg.strategy == "pretrain") {
            ColumnSpec scols{cfg.source_columns.empty() ? cfg.columns : cfg.source_columns};
            Corpus strain = load_corpus(cfg.source_train, scols);
            Corpus sdev = load_corpus(cfg.source_dev, scols);
            return train_pretrain_transfer(strain, sdev, cfg.source_task, train, dev, tc);
        }
        TaskSchema schema = schema_from_config(cfg, train);
        return train_joint(train, dev, schema, tc);
    }();

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    result.model.save((fs::path(cfg.out_dir) / "model.json").string());
    save_history(result.history, (fs::path(cfg.out_dir) / "history.json").string());

    Corpus dev = load_corpus(cfg.dev_path, cols);
    EvalReport rep = evaluate_model(result.model, dev);
    std::ofstream table((fs::path(cfg.out_dir) / "dev_eval.txt").string());
    table << format_report_table(rep);
    std::ofstream kv((fs::path(cfg.out_dir) / "dev_eval.tsv").string());
    kv << format_report_kv(rep);
    return result;
}

TuneResult run_tuning(const RunConfig& cfg, std::ostream* log) {
    cfg.validate();
    if (cfg.strategy != "joint")
        throw ConfigError("weight tuning applies to the joint strategy");

    ColumnSpec cols{cfg.columns};
    Corpus train = load_corpus(cfg.train_path, cols);
    Corpus dev = load_corpus(cfg.dev_path, cols);

    std::vector<std::string> names;
    std::vector<double> alphas;
    std::vector<std::string> sweep;
    for (const RunConfig::TaskEntry& t : cfg.tasks) {
        names.push_back(t.name);
        alphas.push_back(t.tune ? 1.0 : t.alpha);
        if (t.tune) sweep.push_back(t.name);
    }
    TaskSchema schema = build_schema(train, names, alphas);

    TrainConfig tc = cfg.train_config(log);
    TuneResult result = tune_task_weights(train, dev, schema, cfg.tune_grid, tc, sweep);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    json report;
    report["runs"] = result.runs;
    json best = json::object();
    for (const auto& [task, alpha] : result.best_alpha) best[task] = alpha;
    report["best_alpha"] = std::move(best);
    json sweeps = json::object();
    for (const auto& [task, points] : result.sweeps) {
        json arr = json::array();
        for (const auto& [alpha, f] : points)
            arr.push_back({{"alpha", alpha}, {"dev_f", f}});
        sweeps[task] = std::move(arr);
    }
    report["sweeps"] = std::move(sweeps);
    std::ofstream rout((fs::path(cfg.out_dir) / "tune_report.json").string());
    rout << report.dump(2) << '\n';

    RunConfig tuned = cfg;
    for (RunConfig::TaskEntry& t : tuned.tasks) {
        for (const auto& [task, alpha] : result.best_alpha) {
            if (t.name == task) {
                t.alpha = alpha;
                t.tune = false;
            }
        }
    }
    std::ofstream cout_file((fs::path(cfg.out_dir) / "tuned_config.json").string());
    cout_file << config_to_json(tuned).dump(2) << '\n';
    return result;
}

}  // namespace seqlab
