#include "seqlab/metrics.hpp"

#include <cstdio>

namespace seqlab {

double fbeta(double p, double r, double beta) {
    if (beta <= 0.0) throw ContractError("fbeta: beta must be positive");
    double b2 = beta * beta;
    double denom = b2 * p + r;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * p * r / denom;
}

EvalReport make_report(int64_t predicted, int64_t correct, int64_t gold, double beta) {
    EvalReport rep;
    rep.predicted = predicted;
    rep.correct = correct;
    rep.gold = gold;
    rep.beta = beta;
    rep.precision = predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted;
    rep.recall = gold == 0 ? 0.0 : static_cast<double>(correct) / gold;
    rep.f_beta = fbeta(rep.precision, rep.recall, beta);
    return rep;
}

EvalReport evaluate_labels(const std::vector<std::vector<std::string>>& pred,
                           const std::vector<std::vector<std::string>>& gold,
                           double beta, const std::string& positive) {
    if (pred.size() != gold.size())
        throw AlignmentError("evaluate: " + std::to_string(pred.size()) +
                             " predicted sentences vs " + std::to_string(gold.size()) +
                             " gold sentences");
    int64_t np = 0, ng = 0, nc = 0;
    for (size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != gold[s].size())
            throw AlignmentError("evaluate: token count mismatch at sentence " +
                                 std::to_string(s) + ": " + std::to_string(pred[s].size()) +
                                 " vs " + std::to_string(gold[s].size()));
        for (size_t t = 0; t < pred[s].size(); ++t) {
            bool p = pred[s][t] == positive;
            bool g = gold[s][t] == positive;
            np += p;
            ng += g;
            nc += p && g;
        }
    }
    return make_report(np, nc, ng, beta);
}

std::string format_report_table(const EvalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "predicted  correct      P      R   F%.2g\n"
                  "%9lld %8lld  %5.1f  %5.1f  %5.1f\n",
                  r.beta, static_cast<long long>(r.predicted),
                  static_cast<long long>(r.correct), 100.0 * r.precision, 100.0 * r.recall,
                  100.0 * r.f_beta);
    return buf;
}

std::string format_report_kv(const EvalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "predicted\t%lld\ncorrect\t%lld\ngold\t%lld\nprecision\t%.6f\n"
                  "recall\t%.6f\nf_beta\t%.6f\nbeta\t%g\n",
                  static_cast<long long>(r.predicted), static_cast<long long>(r.correct),
                  static_cast<long long>(r.gold), r.precision, r.recall, r.f_beta, r.beta);
    return buf;
}

}  // namespace seqlab
