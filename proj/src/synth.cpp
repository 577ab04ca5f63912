#include "seqlab/synth.hpp"

#include <string>

#include "seqlab/rng.hpp"

namespace seqlab {

namespace {

const std::vector<std::string> kDeterminers = {"the", "a"};
const std::vector<std::string> kAdjectives = {"big", "small", "red", "old"};
const std::vector<std::string> kNouns = {"dog", "cat", "house", "tree", "bird", "man"};
const std::vector<std::string> kVerbs = {"sees", "likes", "finds", "takes"};
const std::vector<std::string> kLangs = {"fr", "de", "es"};

// corrupted determiner surface forms; always labeled i
std::string corrupt(const std::string& det) { return det == "the" ? "teh" : "aa"; }

struct Draft {
    std::vector<std::string> tokens;
    std::vector<std::string> pos;
    std::vector<std::string> gr;
};

void noun_phrase(Rng& rng, Draft& d, const std::string& noun_gr, std::vector<int>* det_slots) {
    det_slots->push_back(static_cast<int>(d.tokens.size()));
    d.tokens.push_back(kDeterminers[rng.next_below(2)]);
    d.pos.push_back("DET");
    d.gr.push_back("det");
    if (rng.next_double() < 0.5) {
        d.tokens.push_back(kAdjectives[rng.next_below(4)]);
        d.pos.push_back("ADJ");
        d.gr.push_back("ncmod");
    }
    d.tokens.push_back(kNouns[rng.next_below(6)]);
    d.pos.push_back("NOUN");
    d.gr.push_back(noun_gr);
}

}  // namespace

ColumnSpec synth_columns() {
    return ColumnSpec{{"token", "target", "freq", "lang", "error", "pos", "gr"}};
}

SynthResult synth_corpus(const SynthSpec& spec) {
    Rng rng(spec.seed);
    SynthResult out;

    for (int n = 0; n < spec.sentences; ++n) {
        Draft d;
        std::vector<int> det_slots;
        noun_phrase(rng, d, "ncsubj", &det_slots);
        d.tokens.push_back(kVerbs[rng.next_below(4)]);
        d.pos.push_back("VERB");
        d.gr.push_back("null");
        noun_phrase(rng, d, "dobj", &det_slots);
        d.tokens.push_back(".");
        d.pos.push_back("PUNCT");
        d.gr.push_back("null");

        std::vector<ErrorSpan> spans;
        std::vector<int> injected;
        if (rng.next_double() < spec.error_rate) {
            int slot = det_slots[rng.next_below(static_cast<int>(det_slots.size()))];
            if (rng.next_double() < spec.missing_rate) {
                // deletion: drop the determiner; the error lands on the next token
                d.tokens.erase(d.tokens.begin() + slot);
                d.pos.erase(d.pos.begin() + slot);
                d.gr.erase(d.gr.begin() + slot);
                spans.push_back({slot, slot, "MD"});
                injected.push_back(slot);
            } else {
                d.tokens[slot] = corrupt(d.tokens[slot]);
                d.pos[slot] = "XDET";  // corrupted-determiner class
                spans.push_back({slot, slot + 1, "RD"});
                injected.push_back(slot);
            }
        }

        auto [target, error] = spans_to_token_labels(d.tokens.size(), spans);
        std::string lang = kLangs[rng.next_below(3)];

        Sentence s;
        s.tokens = d.tokens;
        s.labels["target"] = std::move(target);
        s.labels["error"] = std::move(error);
        s.labels["lang"] = broadcast_sentence_label(lang, d.tokens.size());
        s.labels["pos"] = std::move(d.pos);
        s.labels["gr"] = std::move(d.gr);
        out.corpus.push_back(std::move(s));
        out.injected.push_back(std::move(injected));
    }

    // frequency bins from the generated corpus itself
    std::unordered_map<std::string, int64_t> counts;
    for (const Sentence& s : out.corpus)
        for (const std::string& tok : s.tokens) ++counts[preprocess_token(tok).first];
    for (Sentence& s : out.corpus) {
        std::vector<std::string> freq;
        freq.reserve(s.tokens.size());
        for (const std::string& tok : s.tokens)
            freq.push_back(std::to_string(frequency_bin(counts[preprocess_token(tok).first])));
        s.labels["freq"] = std::move(freq);
    }
    return out;
}

}  // namespace seqlab
