#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqlab/autodiff.hpp"
#include "seqlab/corpus.hpp"

namespace seqlab {

// Layer sizes. Defaults follow the reference setup: 300-dim word embeddings,
// 200-dim sentence LSTMs, 50-dim task-specific hidden layers.
struct Hyper {
    int word_dim = 300;
    int lstm_dim = 200;
    int head_dim = 50;
    int char_dim = 50;
    int char_lstm_dim = 50;

    bool operator==(const Hyper&) const = default;
};

// Per-token forward/backward encoder states, one pair per input token.
struct EncoderOutput {
    std::vector<Value> forward;
    std::vector<Value> backward;

    size_t size() const { return forward.size(); }
};

// Frozen per-task output distributions and argmax labels.
struct Prediction {
    std::vector<std::vector<Mat>> dist;            // [task][token] -> K x 1
    std::vector<std::vector<int>> argmax;          // [task][token]
    std::vector<std::vector<std::string>> labels;  // [task][token]
};

// Joint loss with its unweighted per-task components.
struct LossBreakdown {
    Value total;                  // sum_t sum_n alpha_n * CE
    std::vector<Value> per_task;  // sum_t CE, one per task
};

// The bidirectional error-detection network: gated word/char token
// composition, shared BiLSTM encoder, and one hidden+output head per task.
class Model {
public:
    Model(Hyper hp, Vocabulary vocab, TaskSchema schema, uint64_t init_seed);

    // Graph building. Values live on the caller's tape.
    Value compose_token(Tape& t, const std::string& normalized, const std::string& original);
    EncoderOutput encode(Tape& t, const std::vector<std::string>& tokens);
    std::vector<Value> task_head(Tape& t, const EncoderOutput& enc, const std::string& task);
    LossBreakdown joint_loss(Tape& t, const Sentence& gold);
    // unweighted cross-entropy sum for a single task
    Value task_loss(Tape& t, const Sentence& gold, const std::string& task);

    Prediction predict(const std::vector<std::string>& tokens);
    std::vector<std::string> predict_main(const std::vector<std::string>& tokens);
    // probability of `label` under the main task, per token
    std::vector<double> main_probability(const std::vector<std::string>& tokens,
                                         const std::string& label);

    // Drops every auxiliary head; main-task outputs are unchanged and the
    // parameter count matches a freshly built single-task model.
    void strip_auxiliary();

    void save(const std::string& path) const;
    static Model load(const std::string& path);

    // word2vec text format; tokens missing from the file keep random init
    size_t load_pretrained_embeddings(const std::string& path);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const Hyper& hyper() const { return hp_; }
    const Vocabulary& vocab() const { return vocab_; }
    const TaskSchema& schema() const { return schema_; }
    TaskSchema& schema() { return schema_; }

    // Deep copy / restore of all parameter values (training snapshots).
    std::vector<Mat> snapshot_values() const;
    void restore_values(const std::vector<Mat>& snap);

private:
    Model() = default;
    void build_params(uint64_t init_seed);
    LstmWeights lstm_handles(const std::string& prefix);

    Hyper hp_;
    Vocabulary vocab_;
    TaskSchema schema_;
    ParamStore params_;
};

}  // namespace seqlab
