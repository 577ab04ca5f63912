#include "seqlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace seqlab {

Adadelta::Adadelta(OptimizerConfig cfg) : cfg_(cfg) {
    if (cfg_.rho <= 0.0 || cfg_.rho >= 1.0)
        throw ConfigError("adadelta: rho must lie in (0, 1)");
    if (cfg_.eps <= 0.0) throw ConfigError("adadelta: eps must be positive");
}

void Adadelta::step(ParamStore& params) {
    for (const auto& p : params.all()) {
        Slot& slot = state_[p.get()];
        if (slot.eg2.size() == 0) {
            slot.eg2 = Mat(p->value.rows, p->value.cols);
            slot.edx2 = Mat(p->value.rows, p->value.cols);
        }
        for (size_t i = 0; i < p->value.size(); ++i) {
            double g = p->grad.a[i];
            if (!std::isfinite(g))
                throw NumericError("non-finite gradient in parameter '" + p->name + "'");
            if (cfg_.clip > 0.0) g = std::clamp(g, -cfg_.clip, cfg_.clip);
            slot.eg2.a[i] = cfg_.rho * slot.eg2.a[i] + (1.0 - cfg_.rho) * g * g;
            double dx = -std::sqrt(slot.edx2.a[i] + cfg_.eps) /
                        std::sqrt(slot.eg2.a[i] + cfg_.eps) * g;
            slot.edx2.a[i] = cfg_.rho * slot.edx2.a[i] + (1.0 - cfg_.rho) * dx * dx;
            p->value.a[i] += dx;
        }
    }
}

const Mat* Adadelta::grad_accum(const Param& p) const {
    auto it = state_.find(&p);
    return it == state_.end() ? nullptr : &it->second.eg2;
}

const Mat* Adadelta::update_accum(const Param& p) const {
    auto it = state_.find(&p);
    return it == state_.end() ? nullptr : &it->second.edx2;
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (opt.rho <= 0.0 || opt.rho >= 1.0) throw ConfigError("rho must lie in (0, 1)");
    if (opt.eps <= 0.0) throw ConfigError("eps must be positive");
}

EvalReport evaluate_model(Model& model, const Corpus& dev, double beta) {
    const TaskSpec& main = model.schema().main();
    bool binary =
        std::find(main.labels.begin(), main.labels.end(), "i") != main.labels.end() &&
        std::find(main.labels.begin(), main.labels.end(), "c") != main.labels.end();

    std::vector<std::vector<std::string>> pred, gold;
    pred.reserve(dev.size());
    gold.reserve(dev.size());
    for (const Sentence& s : dev) {
        auto it = s.labels.find(main.name);
        if (it == s.labels.end())
            throw DataError("dev sentence lacks gold labels for task '" + main.name + "'");
        pred.push_back(model.predict_main(s.tokens));
        gold.push_back(it->second);
    }
    if (binary) return evaluate_labels(pred, gold, beta, "i");

    // accuracy for non-detection main tasks (e.g. a POS pre-training phase)
    int64_t total = 0, correct = 0;
    for (size_t s = 0; s < pred.size(); ++s)
        for (size_t t = 0; t < pred[s].size(); ++t) {
            ++total;
            correct += pred[s][t] == gold[s][t];
        }
    return make_report(total, correct, total, beta);
}

namespace {

void log_epoch(std::ostream* log, const EpochStats& st) {
    if (!log) return;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "[%s] epoch %d  loss %.6f  dev P %.4f R %.4f F%.2g %.4f  (%.1fs)",
                  st.phase.c_str(), st.epoch, st.train_loss, st.dev.precision,
                  st.dev.recall, st.dev.beta, st.dev.f_beta, st.wall_seconds);
    *log << buf << '\n' << std::flush;
}

// One early-stopped pass over `train`, appending to hist.epochs and leaving
// the best snapshot restored in the model.
void run_epochs(Model& model, const Corpus& train, const Corpus& dev,
                const TrainConfig& cfg, uint64_t shuffle_seed, const std::string& phase,
                TrainingHistory& hist) {
    Rng shuffle_rng(shuffle_seed);
    Adadelta opt(cfg.opt);
    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<Mat> best_snapshot;
    double best_f = -1.0;
    int best_index = -1;
    int stale = 0;
    Tape tape;
    const int first_epoch = hist.epochs.empty() ? 1 : hist.epochs.back().epoch + 1;

    for (int e = 0; e < cfg.max_epochs; ++e) {
        auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        EpochStats st;
        st.epoch = first_epoch + e;
        st.phase = phase;
        for (const TaskSpec& task : model.schema().tasks) st.task_losses[task.name] = 0.0;

        for (int idx : order) {
            model.params().zero_grads();
            tape.clear();
            LossBreakdown lb = model.joint_loss(tape, train[idx]);
            tape.backward(lb.total);
            opt.step(model.params());
            st.train_loss += lb.total.scalar();
            for (size_t n = 0; n < lb.per_task.size(); ++n)
                st.task_losses[model.schema().tasks[n].name] += lb.per_task[n].scalar();
        }

        st.dev = evaluate_model(model, dev);
        st.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back(st);
        log_epoch(cfg.log, st);

        if (st.dev.f_beta > best_f) {
            best_f = st.dev.f_beta;
            best_index = static_cast<int>(hist.epochs.size()) - 1;
            best_snapshot = model.snapshot_values();
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }

    model.restore_values(best_snapshot);
    hist.best_epoch = best_index;
    hist.best_dev_f = best_f;
}

void check_tasks_labeled(const Corpus& corpus, const TaskSchema& schema) {
    for (const TaskSpec& task : schema.tasks)
        for (size_t s = 0; s < corpus.size(); ++s)
            if (!corpus[s].labels.count(task.name))
                throw DataError("sentence " + std::to_string(s) +
                                " lacks labels for schema task '" + task.name + "'");
}

}  // namespace

TrainResult train_joint(const Corpus& train, const Corpus& dev, const TaskSchema& schema,
                        const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw DataError("empty training corpus");
    if (dev.empty()) throw ConfigError("empty development set");
    check_tasks_labeled(train, schema);

    Model model(cfg.hyper, build_vocabulary(train), schema, derive_seed(cfg.seed, 0));
    if (!cfg.embeddings_path.empty()) model.load_pretrained_embeddings(cfg.embeddings_path);

    TrainResult out{std::move(model), {}, {}};
    run_epochs(out.model, train, dev, cfg, derive_seed(cfg.seed, 1), "joint", out.history);
    return out;
}

void transfer_encoder(const Model& src, Model& dst) {
    if (!(src.hyper() == dst.hyper()))
        throw ConfigError("incompatible encoder dimensions between source and target models");

    // recurrent + gating weights carry over directly
    for (const auto& p : dst.params().all()) {
        const std::string& name = p->name;
        if (name.rfind("head.", 0) == 0 || name == "word_emb" || name == "char_emb")
            continue;
        p->value = src.params().at(name).value;
    }

    // embeddings transfer where the token/char exists on both sides
    std::unordered_map<std::string, int> src_tok;
    for (int i = 0; i < src.vocab().token_count(); ++i) src_tok[src.vocab().token_at(i)] = i;
    const Mat& src_emb = src.params().at("word_emb").value;
    Mat& dst_emb = dst.params().at("word_emb").value;
    for (int i = 0; i < dst.vocab().token_count(); ++i) {
        auto it = src_tok.find(dst.vocab().token_at(i));
        if (it == src_tok.end()) continue;
        for (int j = 0; j < dst_emb.cols; ++j) dst_emb(i, j) = src_emb(it->second, j);
    }

    std::unordered_map<char, int> src_chars;
    for (int i = 0; i < src.vocab().char_count(); ++i) src_chars[src.vocab().char_at(i)] = i;
    const Mat& src_cemb = src.params().at("char_emb").value;
    Mat& dst_cemb = dst.params().at("char_emb").value;
    for (int i = 0; i < dst.vocab().char_count(); ++i) {
        auto it = src_chars.find(dst.vocab().char_at(i));
        if (it == src_chars.end()) continue;
        for (int j = 0; j < dst_cemb.cols; ++j) dst_cemb(i, j) = src_cemb(it->second, j);
    }
}

TrainResult train_pretrain_transfer(const Corpus& source_train, const Corpus& source_dev,
                                    const std::string& source_task,
                                    const Corpus& target_train, const Corpus& target_dev,
                                    const TrainConfig& cfg) {
    cfg.validate();
    if (source_train.empty() || target_train.empty())
        throw DataError("empty training corpus");
    if (source_dev.empty() || target_dev.empty())
        throw ConfigError("empty development set");

    TaskSchema source_schema = build_schema(source_train, {source_task}, {1.0});
    TrainConfig phase1_cfg = cfg;
    phase1_cfg.seed = derive_seed(cfg.seed, 11);
    TrainResult phase1 = train_joint(source_train, source_dev, source_schema, phase1_cfg);
    for (EpochStats& st : phase1.history.epochs) st.phase = "pretrain";

    TaskSchema target_schema = build_schema(target_train, {"target"}, {1.0});
    Model target_model(cfg.hyper, build_vocabulary(target_train), target_schema,
                       derive_seed(cfg.seed, 12));
    if (!cfg.embeddings_path.empty())
        target_model.load_pretrained_embeddings(cfg.embeddings_path);
    transfer_encoder(phase1.model, target_model);

    TrainResult out{std::move(target_model), {}, {}};
    out.history.pretrain_epochs = std::move(phase1.history.epochs);
    run_epochs(out.model, target_train, target_dev, cfg, derive_seed(cfg.seed, 13),
               "transfer", out.history);
    return out;
}

TrainResult train_alternating(const std::vector<AlternatingDataset>& datasets,
                              const Corpus& dev, const TrainConfig& cfg) {
    cfg.validate();
    if (datasets.empty()) throw ConfigError("no datasets for alternating training");
    if (dev.empty()) throw ConfigError("empty development set");
    for (size_t i = 0; i < datasets.size(); ++i) {
        if (datasets[i].corpus.empty())
            throw DataError("alternating dataset " + std::to_string(i) + " is empty");
        for (size_t j = i + 1; j < datasets.size(); ++j)
            if (datasets[i].task == datasets[j].task)
                throw ConfigError("duplicate task '" + datasets[i].task +
                                  "' across alternating datasets");
    }

    // shared vocabulary over all datasets; one head per dataset task
    Corpus merged;
    for (const AlternatingDataset& d : datasets)
        merged.insert(merged.end(), d.corpus.begin(), d.corpus.end());
    TaskSchema schema;
    for (const AlternatingDataset& d : datasets) {
        TaskSchema one = build_schema(d.corpus, {d.task}, {1.0});
        schema.tasks.push_back(std::move(one.tasks[0]));
    }

    Model model(cfg.hyper, build_vocabulary(merged), schema, derive_seed(cfg.seed, 0));
    if (!cfg.embeddings_path.empty()) model.load_pretrained_embeddings(cfg.embeddings_path);

    TrainResult out{std::move(model), {}, {}};
    DatasetPicker picker(cfg.seed, static_cast<int>(datasets.size()));
    Rng sentence_rng(derive_seed(cfg.seed, 3));
    Adadelta opt(cfg.opt);
    const int interval = cfg.eval_interval > 0 ? cfg.eval_interval
                                               : static_cast<int>(datasets[0].corpus.size());

    std::vector<Mat> best_snapshot;
    double best_f = -1.0;
    int best_index = -1;
    int stale = 0;
    Tape tape;

    for (int round = 1; round <= cfg.max_epochs; ++round) {
        auto t0 = std::chrono::steady_clock::now();
        EpochStats st;
        st.epoch = round;
        st.phase = "alternating";
        for (const AlternatingDataset& d : datasets) st.task_losses[d.task] = 0.0;

        for (int stepno = 0; stepno < interval; ++stepno) {
            int ds = picker.next();
            out.sampling_trace.push_back(ds);
            const Corpus& c = datasets[ds].corpus;
            const Sentence& s = c[sentence_rng.next_below(static_cast<int>(c.size()))];

            out.model.params().zero_grads();
            tape.clear();
            Value loss = out.model.task_loss(tape, s, datasets[ds].task);
            tape.backward(loss);
            opt.step(out.model.params());
            st.train_loss += loss.scalar();
            st.task_losses[datasets[ds].task] += loss.scalar();
        }

        st.dev = evaluate_model(out.model, dev);
        st.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.history.epochs.push_back(st);
        log_epoch(cfg.log, st);

        if (st.dev.f_beta > best_f) {
            best_f = st.dev.f_beta;
            best_index = round - 1;
            best_snapshot = out.model.snapshot_values();
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }

    out.model.restore_values(best_snapshot);
    out.history.best_epoch = best_index;
    out.history.best_dev_f = best_f;
    return out;
}

TuneResult tune_task_weights(const Corpus& train, const Corpus& dev, const TaskSchema& schema,
                             const std::vector<double>& grid, const TrainConfig& cfg,
                             const std::vector<std::string>& sweep_tasks) {
    if (grid.empty()) throw ConfigError("empty tuning grid");
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());

    TuneResult out;
    for (size_t n = 1; n < schema.tasks.size(); ++n) {
        const std::string& name = schema.tasks[n].name;
        if (!sweep_tasks.empty() &&
            std::find(sweep_tasks.begin(), sweep_tasks.end(), name) == sweep_tasks.end())
            continue;
        double best_alpha = sorted.front();
        double best_f = -1.0;
        for (double alpha : sorted) {
            TaskSchema sweep = schema;
            for (size_t k = 1; k < sweep.tasks.size(); ++k) sweep.tasks[k].alpha = 1.0;
            sweep.tasks[n].alpha = alpha;
            TrainResult r = train_joint(train, dev, sweep, cfg);
            ++out.runs;
            out.sweeps[name].push_back({alpha, r.history.best_dev_f});
            if (cfg.log)
                *cfg.log << "[tune] " << name << " alpha " << alpha << " dev "
                         << r.history.best_dev_f << '\n';
            if (r.history.best_dev_f > best_f) {  // ties keep the smaller alpha
                best_f = r.history.best_dev_f;
                best_alpha = alpha;
            }
        }
        out.best_alpha.push_back({name, best_alpha});
    }
    return out;
}

namespace {

nlohmann::json epoch_to_json(const EpochStats& st) {
    nlohmann::json dev = {
        {"predicted", st.dev.predicted}, {"correct", st.dev.correct},
        {"gold", st.dev.gold},           {"precision", st.dev.precision},
        {"recall", st.dev.recall},       {"f_beta", st.dev.f_beta},
        {"beta", st.dev.beta},
    };
    return {{"epoch", st.epoch},
            {"phase", st.phase},
            {"train_loss", st.train_loss},
            {"task_losses", st.task_losses},
            {"dev", std::move(dev)}};
}

}  // namespace

void save_history(const TrainingHistory& h, const std::string& path) {
    nlohmann::json j;
    j["format"] = "seqlab-history";
    j["version"] = 1;
    j["best_epoch"] = h.best_epoch;
    j["best_dev_f"] = h.best_dev_f;
    nlohmann::json pre = nlohmann::json::array();
    for (const EpochStats& st : h.pretrain_epochs) pre.push_back(epoch_to_json(st));
    j["pretrain_epochs"] = std::move(pre);
    nlohmann::json eps = nlohmann::json::array();
    for (const EpochStats& st : h.epochs) eps.push_back(epoch_to_json(st));
    j["epochs"] = std::move(eps);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write history file: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace seqlab
