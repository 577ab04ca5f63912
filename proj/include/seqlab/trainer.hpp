#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqlab/metrics.hpp"
#include "seqlab/network.hpp"

namespace seqlab {

struct OptimizerConfig {
    double rho = 0.95;
    double eps = 1e-6;
    double clip = 5.0;  // elementwise gradient clip; <= 0 disables
};

// Adadelta (accumulated squared gradients and updates, no learning rate).
class Adadelta {
public:
    explicit Adadelta(OptimizerConfig cfg = {});

    // Applies the current gradients to every parameter and updates the
    // accumulators. Gradients are left untouched; callers zero them before
    // the next backward pass. Non-finite gradients abort, naming the
    // parameter.
    void step(ParamStore& params);

    // Accumulator access (diagnostics/tests). Null until first step.
    const Mat* grad_accum(const Param& p) const;
    const Mat* update_accum(const Param& p) const;

private:
    struct Slot {
        Mat eg2;
        Mat edx2;
    };
    OptimizerConfig cfg_;
    std::unordered_map<const Param*, Slot> state_;
};

struct TrainConfig {
    Hyper hyper;
    OptimizerConfig opt;
    int max_epochs = 30;
    int patience = 7;  // epochs without dev improvement before stopping
    uint64_t seed = 1;
    int eval_interval = 0;        // alternating: steps per dev evaluation (0 = size of dataset 0)
    std::string embeddings_path;  // optional pretrained word vectors
    std::ostream* log = nullptr;  // progress lines, one per epoch

    void validate() const;
};

struct EpochStats {
    int epoch = 0;  // 1-based, monotone
    std::string phase;
    double train_loss = 0.0;                     // weighted joint loss, summed
    std::map<std::string, double> task_losses;   // unweighted per-task sums
    EvalReport dev;
    double wall_seconds = 0.0;  // in-memory only, not serialized
};

struct TrainingHistory {
    std::vector<EpochStats> pretrain_epochs;  // transfer strategy phase 1
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // index into epochs, points at the max dev score
    double best_dev_f = -1.0;
};

struct TrainResult {
    Model model;
    TrainingHistory history;
    std::vector<int> sampling_trace;  // alternating: dataset picked per step
};

// Main-task dev score: F0.5 over i-labeled tokens for binary detection
// schemas; token accuracy (reported through the same fields) otherwise.
EvalReport evaluate_model(Model& model, const Corpus& dev, double beta = 0.5);

// Per-sentence Adadelta updates on the joint loss over seeded shuffles;
// early stopping on dev score with the best-epoch snapshot restored.
TrainResult train_joint(const Corpus& train, const Corpus& dev, const TaskSchema& schema,
                        const TrainConfig& cfg);

// Phase 1 trains a single-task model on the source task; phase 2 moves the
// embeddings and shared encoder into a fresh error-detection model (fresh
// head) and trains on the target corpus.
TrainResult train_pretrain_transfer(const Corpus& source_train, const Corpus& source_dev,
                                    const std::string& source_task,
                                    const Corpus& target_train, const Corpus& target_dev,
                                    const TrainConfig& cfg);

struct AlternatingDataset {
    Corpus corpus;
    std::string task;
};

// Uniform seeded dataset choice per step as used by train_alternating.
class DatasetPicker {
public:
    DatasetPicker(uint64_t seed, int dataset_count)
        : rng_(derive_seed(seed, 2)), k_(dataset_count) {}
    int next() { return rng_.next_below(k_); }

private:
    Rng rng_;
    int k_;
};

// Each step samples a dataset uniformly at random, then one of its
// sentences, and updates on that task's loss alone. Dev evaluation on the
// main task (dataset 0) every eval_interval steps.
TrainResult train_alternating(const std::vector<AlternatingDataset>& datasets,
                              const Corpus& dev, const TrainConfig& cfg);

struct TuneResult {
    std::vector<std::pair<std::string, double>> best_alpha;  // aux tasks, schema order
    std::map<std::string, std::vector<std::pair<double, double>>> sweeps;  // alpha -> dev f
    int runs = 0;
};

// Greedy per-task sweep: each auxiliary weight scans the grid while every
// other task stays at 1.0; ties pick the smaller value. sweep_tasks narrows
// the sweep to the named auxiliary tasks (empty = all).
TuneResult tune_task_weights(const Corpus& train, const Corpus& dev, const TaskSchema& schema,
                             const std::vector<double>& grid, const TrainConfig& cfg,
                             const std::vector<std::string>& sweep_tasks = {});

// Machine-readable history (JSON). Wall-clock seconds are deliberately not
// written so identical runs serialize to identical bytes.
void save_history(const TrainingHistory& h, const std::string& path);

// Copies shared weights (embeddings by token/char identity, recurrent and
// gating weights directly) from src into dst. Layer sizes must agree.
void transfer_encoder(const Model& src, Model& dst);

}  // namespace seqlab
