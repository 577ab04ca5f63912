#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "seqlab/metrics.hpp"
#include "seqlab/rng.hpp"

using namespace seqlab;

TEST_CASE("fbeta reproduces published detection rows") {
    // FCE test set, combined auxiliary objectives: P 57.7, R 28.3 -> F0.5 47.7
    CHECK(std::abs(100.0 * fbeta(0.577, 0.283, 0.5) - 47.7) < 0.1);
    // CoNLL-14 TEST2 with POS auxiliary: P 26.5, R 24.9 -> F0.5 26.2
    CHECK(std::abs(100.0 * fbeta(0.265, 0.249, 0.5) - 26.2) < 0.1);
}

TEST_CASE("fbeta boundary cases") {
    CHECK(fbeta(1.0, 1.0, 0.5) == 1.0);
    CHECK(fbeta(1.0, 1.0, 2.0) == 1.0);
    CHECK(fbeta(0.0, 0.7, 0.5) == 0.0);
    CHECK(fbeta(0.4, 0.0, 0.5) == 0.0);
    CHECK(fbeta(0.0, 0.0, 0.5) == 0.0);
    CHECK_THROWS_AS(fbeta(0.5, 0.5, 0.0), ContractError);
    CHECK_THROWS_AS(fbeta(0.5, 0.5, -1.0), ContractError);
}

TEST_CASE("fbeta fixed point and monotonicity") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        double p = rng.next_double();
        double beta = 0.1 + 3.0 * rng.next_double();
        CHECK(fbeta(p, p, beta) == doctest::Approx(p).epsilon(1e-12));

        double r = rng.next_double();
        double dp = rng.next_double() * (1.0 - p);
        double dr = rng.next_double() * (1.0 - r);
        CHECK(fbeta(p + dp, r, beta) >= fbeta(p, r, beta) - 1e-15);
        CHECK(fbeta(p, r + dr, beta) >= fbeta(p, r, beta) - 1e-15);
    }
}

TEST_CASE("evaluate perfect and degenerate cases") {
    std::vector<std::vector<std::string>> gold = {
        {"c", "i", "c", "c", "i"}, {"c", "c", "c", "i", "c"}};
    EvalReport perfect = evaluate_labels(gold, gold);
    CHECK(perfect.predicted == 3);
    CHECK(perfect.gold == 3);
    CHECK(perfect.correct == 3);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f_beta == 1.0);

    std::vector<std::vector<std::string>> none = {
        {"c", "c", "c", "c", "c"}, {"c", "c", "c", "c", "c"}};
    EvalReport empty = evaluate_labels(none, gold);
    CHECK(empty.predicted == 0);
    CHECK(empty.correct == 0);
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f_beta == 0.0);
    CHECK(std::isfinite(empty.f_beta));
}

TEST_CASE("evaluate counts consistent with published FCE row") {
    // gold count back-solved from the earlier system's test row
    // (1798 correct / 0.285 recall is roughly 6300 gold tokens)
    EvalReport rep = make_report(3090, 1781, 6300);
    CHECK(rep.precision == doctest::Approx(0.5764).epsilon(1e-3));
    CHECK(rep.recall == doctest::Approx(0.2827).epsilon(1e-3));
    CHECK(rep.f_beta == doctest::Approx(0.4772).epsilon(1e-3));
    CHECK(rep.correct <= std::min(rep.predicted, rep.gold));
}

TEST_CASE("evaluate alignment errors name the sentence") {
    std::vector<std::vector<std::string>> a = {{"c", "i"}, {"c"}};
    std::vector<std::vector<std::string>> b = {{"c", "i"}};
    CHECK_THROWS_AS(evaluate_labels(a, b), AlignmentError);

    std::vector<std::vector<std::string>> c = {{"c", "i"}, {"c", "c"}};
    std::vector<std::vector<std::string>> d = {{"c", "i"}, {"c"}};
    CHECK_THROWS_WITH_AS(evaluate_labels(c, d), doctest::Contains("sentence 1"),
                         AlignmentError);
}

TEST_CASE("evaluate is permutation invariant over sentences") {
    Rng rng(77);
    std::vector<std::vector<std::string>> pred, gold;
    for (int s = 0; s < 30; ++s) {
        int len = 1 + rng.next_below(12);
        std::vector<std::string> p, g;
        for (int t = 0; t < len; ++t) {
            p.push_back(rng.next_double() < 0.3 ? "i" : "c");
            g.push_back(rng.next_double() < 0.2 ? "i" : "c");
        }
        pred.push_back(p);
        gold.push_back(g);
    }
    EvalReport before = evaluate_labels(pred, gold);

    std::vector<int> order(pred.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    std::vector<std::vector<std::string>> pred2, gold2;
    for (int i : order) {
        pred2.push_back(pred[i]);
        gold2.push_back(gold[i]);
    }
    EvalReport after = evaluate_labels(pred2, gold2);
    CHECK(before.predicted == after.predicted);
    CHECK(before.correct == after.correct);
    CHECK(before.gold == after.gold);
    CHECK(before.f_beta == after.f_beta);
}

TEST_CASE("report formatting matches the table layout") {
    EvalReport rep = make_report(3090, 1781, 6300);
    std::string table = format_report_table(rep);
    CHECK(table.find("57.6") != std::string::npos);
    CHECK(table.find("28.3") != std::string::npos);
    CHECK(table.find("47.7") != std::string::npos);

    std::string kv = format_report_kv(rep);
    CHECK(kv.find("predicted\t3090") != std::string::npos);
    CHECK(kv.find("correct\t1781") != std::string::npos);
    CHECK(kv.find("gold\t6300") != std::string::npos);
}
