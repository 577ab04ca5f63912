#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "seqlab/trainer.hpp"

namespace seqlab {

// Declarative run configuration: one JSON file describes data, schema,
// hyperparameters and strategy. CLI flags override single fields.
struct RunConfig {
    struct TaskEntry {
        std::string name;
        double alpha = 1.0;
        bool tune = false;
    };
    struct DatasetEntry {
        std::string train;
        std::string task;
        std::vector<std::string> columns;  // empty = inherit top-level columns
    };

    std::string train_path;
    std::string dev_path;
    std::vector<std::string> columns;  // first entry must be "token"
    std::vector<TaskEntry> tasks;      // first entry must be "target"
    std::string strategy = "joint";    // joint | pretrain | alternating

    // pretrain strategy
    std::string source_train;
    std::string source_dev;
    std::string source_task;
    std::vector<std::string> source_columns;  // empty = inherit

    // alternating strategy
    std::vector<DatasetEntry> datasets;
    int eval_interval = 0;

    Hyper hyper;
    OptimizerConfig opt;
    int max_epochs = 30;
    int patience = 7;
    uint64_t seed = 1;
    std::string embeddings;
    std::string out_dir = "out";
    std::vector<double> tune_grid = {0.05, 0.1, 0.2, 0.5, 1.0};

    static RunConfig from_file(const std::string& path);
    void validate() const;

    TrainConfig train_config(std::ostream* log) const;
};

// Runs the configured strategy and writes model.json, history.json,
// dev_eval.txt and dev_eval.tsv into out_dir.
TrainResult run_training(const RunConfig& cfg, std::ostream* log = nullptr);

// Sweeps the auxiliary weights marked "tune" (all auxiliary tasks when none
// are marked) and writes tune_report.json plus tuned_config.json.
TuneResult run_tuning(const RunConfig& cfg, std::ostream* log = nullptr);

}  // namespace seqlab
