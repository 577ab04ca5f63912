#include "seqlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace seqlab {

int Vocabulary::token_index(const std::string& normalized) const {
    auto it = token_index_.find(normalized);
    return it == token_index_.end() ? oov_index() : it->second;
}

int Vocabulary::char_index(char c) const {
    auto it = char_index_.find(c);
    return it == char_index_.end() ? 0 : it->second;
}

int64_t Vocabulary::frequency(const std::string& normalized) const {
    auto it = counts_.find(normalized);
    return it == counts_.end() ? 0 : it->second;
}

void Vocabulary::set_tables(std::vector<std::string> tokens, std::vector<char> chars,
                            std::unordered_map<std::string, int64_t> counts) {
    tokens_ = std::move(tokens);
    chars_ = std::move(chars);
    counts_ = std::move(counts);
    token_index_.clear();
    char_index_.clear();
    for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) token_index_[tokens_[i]] = i;
    for (int i = 0; i < static_cast<int>(chars_.size()); ++i) char_index_[chars_[i]] = i;
}

int TaskSpec::label_index(const std::string& label) const {
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
        if (labels[i] == label) return i;
    throw DataError("label '" + label + "' not in the inventory of task '" + name + "'");
}

const TaskSpec* TaskSchema::find(const std::string& name) const {
    for (const TaskSpec& t : tasks)
        if (t.name == name) return &t;
    return nullptr;
}

void TaskSchema::validate() const {
    if (tasks.empty()) throw ConfigError("schema has no tasks");
    if (tasks[0].alpha != 1.0)
        throw ConfigError("main task '" + tasks[0].name + "' must have weight 1.0");
    for (const TaskSpec& t : tasks) {
        // 0 disables an auxiliary task without removing its head
        if (t.alpha < 0.0 || t.alpha > 1.0)
            throw ConfigError("task '" + t.name + "' weight " + std::to_string(t.alpha) +
                              " outside [0, 1]");
        if (t.labels.empty()) throw ConfigError("task '" + t.name + "' has no labels");
    }
}

std::pair<std::string, std::string> preprocess_token(const std::string& surface) {
    std::string norm = surface;
    for (char& c : norm) {
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
        else if (c >= '0' && c <= '9')
            c = '0';
    }
    return {norm, surface};
}

Vocabulary build_vocabulary(const Corpus& train) {
    if (train.empty()) throw DataError("build_vocabulary: empty training corpus");
    std::unordered_map<std::string, int64_t> counts;
    std::set<char> chars;
    for (const Sentence& s : train) {
        for (const std::string& tok : s.tokens) {
            auto [norm, orig] = preprocess_token(tok);
            ++counts[norm];
            for (char c : orig) chars.insert(c);
        }
    }
    std::vector<std::string> keep;
    for (const auto& [tok, n] : counts)
        if (n >= 2) keep.push_back(tok);
    std::sort(keep.begin(), keep.end());

    std::vector<std::string> tokens;
    tokens.reserve(keep.size() + 1);
    tokens.push_back(Vocabulary::kOov);
    tokens.insert(tokens.end(), keep.begin(), keep.end());

    std::vector<char> char_table;
    char_table.push_back('\0');  // unseen-char slot
    char_table.insert(char_table.end(), chars.begin(), chars.end());

    Vocabulary v;
    v.set_tables(std::move(tokens), std::move(char_table), std::move(counts));
    return v;
}

int frequency_bin(int64_t freq) {
    if (freq <= 0) return 0;
    return static_cast<int>(std::log(static_cast<double>(freq)));
}

int frequency_label(const std::string& normalized, const Vocabulary& vocab) {
    return frequency_bin(vocab.frequency(normalized));
}

std::pair<std::vector<std::string>, std::vector<std::string>> spans_to_token_labels(
    size_t token_count, const std::vector<ErrorSpan>& spans) {
    int n = static_cast<int>(token_count);
    std::vector<std::string> binary(token_count, "c");
    std::vector<std::string> types(token_count, "c");
    auto mark = [&](int pos, const std::string& type) {
        if (binary[pos] == "i") return;  // first span wins
        binary[pos] = "i";
        types[pos] = type;
    };
    for (const ErrorSpan& sp : spans) {
        if (sp.start < 0 || sp.end < sp.start || sp.end > n)
            throw DataError("error span [" + std::to_string(sp.start) + "," +
                            std::to_string(sp.end) + ") outside sentence of length " +
                            std::to_string(n));
        if (sp.start == sp.end) {
            // missing word: the label lands on the next token, or on the
            // final token when the gap sits at the end of the sentence
            if (n == 0) throw DataError("missing-word span on an empty sentence");
            mark(std::min(sp.start, n - 1), sp.type);
        } else {
            for (int t = sp.start; t < sp.end; ++t) mark(t, sp.type);
        }
    }
    return {std::move(binary), std::move(types)};
}

std::vector<std::string> broadcast_sentence_label(const std::string& label, size_t n) {
    if (label.empty()) throw DataError("broadcast_sentence_label: empty label");
    if (n < 1) throw DataError("broadcast_sentence_label: sentence length must be >= 1");
    return std::vector<std::string>(n, label);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void validate_against_schema(const Sentence& s, const TaskSchema& schema, size_t line_no) {
    for (const auto& [task, labels] : s.labels) {
        const TaskSpec* spec = schema.find(task);
        if (!spec) continue;  // column not used by this schema
        for (const std::string& lab : labels) {
            bool known = std::find(spec->labels.begin(), spec->labels.end(), lab) !=
                         spec->labels.end();
            if (!known)
                throw DataError("label '" + lab + "' (near line " + std::to_string(line_no) +
                                ") not in the closed inventory of task '" + task + "'");
        }
    }
}

}  // namespace

Corpus load_corpus(const std::string& path, const ColumnSpec& columns,
                   const TaskSchema* schema) {
    if (columns.names.size() < 1)
        throw ConfigError("column spec must name at least the token column");
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);

    Corpus corpus;
    Sentence current;
    std::string line;
    size_t line_no = 0;
    size_t ncols = columns.names.size();

    auto flush = [&](size_t at_line) {
        if (current.tokens.empty()) return;
        if (schema) validate_against_schema(current, *schema, at_line);
        corpus.push_back(std::move(current));
        current = Sentence{};
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush(line_no);
            continue;
        }
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() != ncols)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(ncols) + " tab-separated columns, found " +
                             std::to_string(fields.size()));
        current.tokens.push_back(fields[0]);
        for (size_t c = 1; c < ncols; ++c)
            current.labels[columns.names[c]].push_back(fields[c]);
    }
    flush(line_no);
    return corpus;
}

void save_corpus(const Corpus& corpus, const ColumnSpec& columns, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file: " + path);
    for (size_t s = 0; s < corpus.size(); ++s) {
        const Sentence& sent = corpus[s];
        for (size_t t = 0; t < sent.tokens.size(); ++t) {
            out << sent.tokens[t];
            for (size_t c = 1; c < columns.names.size(); ++c) {
                auto it = sent.labels.find(columns.names[c]);
                if (it == sent.labels.end())
                    throw DataError("sentence " + std::to_string(s) + " lacks labels for '" +
                                    columns.names[c] + "'");
                out << '\t' << it->second[t];
            }
            out << '\n';
        }
        if (s + 1 < corpus.size()) out << '\n';
    }
}

TaskSchema build_schema(const Corpus& corpus, const std::vector<std::string>& task_names,
                        const std::vector<double>& alphas) {
    if (task_names.size() != alphas.size())
        throw ConfigError("build_schema: task and weight counts disagree");
    TaskSchema schema;
    for (size_t i = 0; i < task_names.size(); ++i) {
        TaskSpec spec;
        spec.name = task_names[i];
        spec.alpha = alphas[i];
        if (spec.name == "target") {
            spec.labels = {"c", "i"};
        } else {
            std::set<std::string> seen;
            for (const Sentence& s : corpus) {
                auto it = s.labels.find(spec.name);
                if (it == s.labels.end())
                    throw DataError("corpus has no label column for task '" + spec.name + "'");
                seen.insert(it->second.begin(), it->second.end());
            }
            spec.labels.assign(seen.begin(), seen.end());
        }
        schema.tasks.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
}

}  // namespace seqlab
