#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqlab/errors.hpp"

namespace seqlab {

// One labeled sentence: surface tokens plus one label sequence per task.
// Every label sequence has exactly one entry per token.
struct Sentence {
    std::vector<std::string> tokens;
    std::map<std::string, std::vector<std::string>> labels;

    size_t size() const { return tokens.size(); }
    bool operator==(const Sentence&) const = default;
};

using Corpus = std::vector<Sentence>;

// Column layout of the corpus TSV: first column is the token surface form,
// the rest are per-token label columns named after their task.
struct ColumnSpec {
    std::vector<std::string> names;  // e.g. {token, target, freq, lang, error, pos, gr}
};

// Token and character index tables built from training data. Tokens seen
// once collapse to the shared OOV index; lookups never fail.
class Vocabulary {
public:
    static constexpr const char* kOov = "<unk>";

    int oov_index() const { return 0; }
    int token_index(const std::string& normalized) const;
    int char_index(char c) const;

    int token_count() const { return static_cast<int>(tokens_.size()); }
    int char_count() const { return static_cast<int>(chars_.size()); }
    const std::string& token_at(int i) const { return tokens_[i]; }
    char char_at(int i) const { return chars_[i]; }

    // Training-set frequency of a normalized token; 0 when unseen.
    int64_t frequency(const std::string& normalized) const;

    // Construction / serialization hooks.
    void set_tables(std::vector<std::string> tokens, std::vector<char> chars,
                    std::unordered_map<std::string, int64_t> counts);
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<char>& chars() const { return chars_; }
    const std::unordered_map<std::string, int64_t>& counts() const { return counts_; }

private:
    std::vector<std::string> tokens_;  // index 0 is the OOV slot
    std::vector<char> chars_;          // index 0 is the unseen-char slot
    std::unordered_map<std::string, int> token_index_;
    std::unordered_map<char, int> char_index_;
    std::unordered_map<std::string, int64_t> counts_;
};

// One prediction task: name, closed label inventory, loss weight.
struct TaskSpec {
    std::string name;
    std::vector<std::string> labels;
    double alpha = 1.0;

    int label_index(const std::string& label) const;
    int label_count() const { return static_cast<int>(labels.size()); }
};

// Ordered task list. Task 0 is the main binary task with weight 1.0.
struct TaskSchema {
    std::vector<TaskSpec> tasks;

    const TaskSpec& main() const { return tasks.at(0); }
    int task_count() const { return static_cast<int>(tasks.size()); }
    const TaskSpec* find(const std::string& name) const;
    void validate() const;
};

// Error annotation over [start, end) token positions. start == end marks a
// missing word at position start.
struct ErrorSpan {
    int start = 0;
    int end = 0;
    std::string type;
};

// Lowercases ASCII letters and maps every decimal digit to '0'. Returns
// {normalized, original}; the original feeds the character channel.
std::pair<std::string, std::string> preprocess_token(const std::string& surface);

// Counts normalized training tokens; singletons share the OOV index. The
// char table covers every character of the original (unnormalized) tokens.
Vocabulary build_vocabulary(const Corpus& train);

// Frequency bin int(ln(freq)); tokens with zero training frequency get 0.
int frequency_label(const std::string& normalized, const Vocabulary& vocab);
int frequency_bin(int64_t freq);

// Converts span annotations to per-token {c,i} and error-type rows. Inside a
// span: i plus the span's type; missing-word spans mark the token at start
// (the final token when start == sentence length); earlier spans win.
std::pair<std::vector<std::string>, std::vector<std::string>> spans_to_token_labels(
    size_t token_count, const std::vector<ErrorSpan>& spans);

// The sentence-level L1 label repeated once per token.
std::vector<std::string> broadcast_sentence_label(const std::string& label, size_t n);

// Tab-separated, one token per line, blank line between sentences. When a
// schema is given, every label must be in its task's inventory.
Corpus load_corpus(const std::string& path, const ColumnSpec& columns,
                   const TaskSchema* schema = nullptr);
void save_corpus(const Corpus& corpus, const ColumnSpec& columns, const std::string& path);

// Label inventories observed in a corpus, in sorted order. The target task
// keeps the fixed {c, i} inventory.
TaskSchema build_schema(const Corpus& corpus, const std::vector<std::string>& task_names,
                        const std::vector<double>& alphas);

}  // namespace seqlab
