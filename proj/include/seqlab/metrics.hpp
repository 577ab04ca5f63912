#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqlab/errors.hpp"

namespace seqlab {

// Token-level detection counts and scores. Precision and recall fall back to
// 0 when their denominators are 0, so a report is always total.
struct EvalReport {
    int64_t predicted = 0;  // tokens the system labeled i
    int64_t gold = 0;       // tokens labeled i in the reference
    int64_t correct = 0;    // labeled i by both
    double precision = 0.0;
    double recall = 0.0;
    double f_beta = 0.0;
    double beta = 0.5;
};

// (1 + b^2) p r / (b^2 p + r); 0 when the denominator is 0.
double fbeta(double p, double r, double beta);

// Counts over aligned per-token label sequences; a token counts as an error
// when its label equals `positive`.
EvalReport evaluate_labels(const std::vector<std::vector<std::string>>& pred,
                           const std::vector<std::vector<std::string>>& gold,
                           double beta = 0.5, const std::string& positive = "i");

EvalReport make_report(int64_t predicted, int64_t correct, int64_t gold, double beta = 0.5);

// Table layout: predicted, correct, P, R, F (percentages, one decimal).
std::string format_report_table(const EvalReport& r);
// key-value lines, one per field
std::string format_report_kv(const EvalReport& r);

}  // namespace seqlab
