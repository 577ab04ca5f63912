#pragma once

#include <cstdint>
#include <vector>

#include "seqlab/corpus.hpp"

namespace seqlab {

// Generator for desk-scale corpora: a small determiner/noun/verb grammar
// where injected determiner errors follow a known rule, so every label
// column is consistent by construction.
struct SynthSpec {
    int sentences = 50;
    double error_rate = 0.5;    // probability a sentence receives one injected error
    double missing_rate = 0.0;  // fraction of injections realized as deletions
    uint64_t seed = 1;
};

struct SynthResult {
    Corpus corpus;
    // per sentence: token positions carrying an injected error (the
    // generator's own record, independent of the label columns)
    std::vector<std::vector<int>> injected;
};

SynthResult synth_corpus(const SynthSpec& spec);

// token target freq lang error pos gr
ColumnSpec synth_columns();

}  // namespace seqlab
