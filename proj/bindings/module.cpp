#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "seqlab/metrics.hpp"
#include "seqlab/network.hpp"
#include "seqlab/run.hpp"
#include "seqlab/synth.hpp"
#include "seqlab/trainer.hpp"

namespace py = pybind11;
using namespace seqlab;

namespace {

RunConfig config_from_path(const std::string& path) { return RunConfig::from_file(path); }

std::vector<std::vector<std::string>> read_label_column(const std::string& path,
                                                        const ColumnSpec& cols,
                                                        const std::string& task) {
    Corpus c = load_corpus(path, cols);
    std::vector<std::vector<std::string>> out;
    for (const Sentence& s : c) out.push_back(s.labels.at(task));
    return out;
}

}  // namespace

PYBIND11_MODULE(_seqlab, m) {
    m.doc() = "multi-task sequence labeling toolkit (C++ core)";

    py::register_exception<Error>(m, "SeqlabError");

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("predicted", &EvalReport::predicted)
        .def_readonly("gold", &EvalReport::gold)
        .def_readonly("correct", &EvalReport::correct)
        .def_readonly("precision", &EvalReport::precision)
        .def_readonly("recall", &EvalReport::recall)
        .def_readonly("f_beta", &EvalReport::f_beta)
        .def_readonly("beta", &EvalReport::beta)
        .def("__repr__", [](const EvalReport& r) {
            std::ostringstream ss;
            ss << "EvalReport(predicted=" << r.predicted << ", correct=" << r.correct
               << ", gold=" << r.gold << ", P=" << r.precision << ", R=" << r.recall
               << ", F=" << r.f_beta << ")";
            return ss.str();
        });

    py::class_<Prediction>(m, "Prediction")
        .def_readonly("labels", &Prediction::labels)
        .def_readonly("argmax", &Prediction::argmax);

    py::class_<Model>(m, "Model")
        .def_static("load", &Model::load, py::arg("path"))
        .def("save", &Model::save, py::arg("path"))
        .def("predict_main", &Model::predict_main, py::arg("tokens"))
        .def("predict", &Model::predict, py::arg("tokens"))
        .def("main_probability", &Model::main_probability, py::arg("tokens"),
             py::arg("label") = "i")
        .def("strip_auxiliary", &Model::strip_auxiliary)
        .def("parameter_count", [](const Model& m_) { return m_.params().scalar_count(); })
        .def_property_readonly("tasks", [](const Model& m_) {
            std::vector<std::string> names;
            for (const TaskSpec& t : m_.schema().tasks) names.push_back(t.name);
            return names;
        });

    py::class_<TrainResult>(m, "TrainedResult")
        .def_property_readonly("model",
                               [](TrainResult& r) -> Model& { return r.model; },
                               py::return_value_policy::reference_internal)
        .def_property_readonly("best_dev_f",
                               [](const TrainResult& r) { return r.history.best_dev_f; })
        .def_property_readonly("epochs",
                               [](const TrainResult& r) { return r.history.epochs.size(); });

    m.def("preprocess_token", &preprocess_token, py::arg("surface"),
          "lowercase + digits-to-zero; returns (normalized, original)");
    m.def("frequency_bin", &frequency_bin, py::arg("freq"));
    m.def(
        "spans_to_token_labels",
        [](size_t n, const std::vector<std::tuple<int, int, std::string>>& spans) {
            std::vector<ErrorSpan> es;
            for (const auto& [s, e, t] : spans) es.push_back({s, e, t});
            return spans_to_token_labels(n, es);
        },
        py::arg("token_count"), py::arg("spans"),
        "span annotations -> (binary labels, error-type labels)");
    m.def("fbeta", &fbeta, py::arg("p"), py::arg("r"), py::arg("beta") = 0.5);

    m.def(
        "load_corpus_file",
        [](const std::string& path, const std::vector<std::string>& columns) {
            Corpus c = load_corpus(path, ColumnSpec{columns});
            py::list out;
            for (const Sentence& s : c) {
                py::dict d;
                d["tokens"] = s.tokens;
                py::dict labs;
                for (const auto& [task, seq] : s.labels) labs[py::str(task)] = seq;
                d["labels"] = labs;
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("path"), py::arg("columns"));

    m.def(
        "synth_corpus_file",
        [](const std::string& path, int sentences, double error_rate, double missing_rate,
           uint64_t seed) {
            SynthSpec spec;
            spec.sentences = sentences;
            spec.error_rate = error_rate;
            spec.missing_rate = missing_rate;
            spec.seed = seed;
            SynthResult r = synth_corpus(spec);
            save_corpus(r.corpus, synth_columns(), path);
            return r.corpus.size();
        },
        py::arg("path"), py::arg("sentences") = 50, py::arg("error_rate") = 0.5,
        py::arg("missing_rate") = 0.0, py::arg("seed") = 1);

    m.def(
        "train",
        [](const std::string& config_path, bool verbose) {
            RunConfig cfg = config_from_path(config_path);
            return run_training(cfg, verbose ? &std::cout : nullptr);
        },
        py::arg("config_path"), py::arg("verbose") = false,
        "run the configured training strategy; writes model/history/eval files");

    m.def(
        "tune",
        [](const std::string& config_path, bool verbose) {
            RunConfig cfg = config_from_path(config_path);
            TuneResult r = run_tuning(cfg, verbose ? &std::cout : nullptr);
            py::dict out;
            for (const auto& [task, alpha] : r.best_alpha) out[py::str(task)] = alpha;
            return out;
        },
        py::arg("config_path"), py::arg("verbose") = false);

    m.def(
        "evaluate_files",
        [](const std::string& pred_path, const std::string& gold_path, double beta) {
            ColumnSpec two{{"token", "target"}};
            return evaluate_labels(read_label_column(pred_path, two, "target"),
                                   read_label_column(gold_path, two, "target"), beta);
        },
        py::arg("pred_path"), py::arg("gold_path"), py::arg("beta") = 0.5,
        "score two aligned token TAB label files");
}
