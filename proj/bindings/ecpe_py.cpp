#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

#include "ecpe/error.hpp"
#include "ecpe/gradcheck.hpp"
#include "ecpe/metrics.hpp"
#include "ecpe/trainer.hpp"

namespace py = pybind11;
using namespace ecpe;

namespace {

py::dict doc_to_dict(const corpus::Document& d) {
    py::dict out;
    out["doc_id"] = d.doc_id;
    out["clauses"] = d.clauses;
    out["emotion_ids"] = d.emotion_ids;
    out["cause_ids"] = d.cause_ids;
    out["gold_pairs"] = d.gold_pairs;
    return out;
}

corpus::Document doc_from_dict(const py::dict& d) {
    corpus::Document doc;
    doc.doc_id = py::cast<std::string>(d["doc_id"]);
    doc.clauses = py::cast<std::vector<corpus::Clause>>(d["clauses"]);
    doc.emotion_ids = py::cast<std::set<int>>(d["emotion_ids"]);
    doc.cause_ids = py::cast<std::set<int>>(d["cause_ids"]);
    doc.gold_pairs = py::cast<std::set<corpus::Pair>>(d["gold_pairs"]);
    return doc;
}

model::ModelConfig config_from_kwargs(const py::dict& kw) {
    model::ModelConfig cfg;
    for (auto item : kw) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "variant") cfg.variant = model::parse_variant(py::cast<std::string>(item.second));
        else if (key == "d_w") cfg.d_w = py::cast<int>(item.second);
        else if (key == "d_h") cfg.d_h = py::cast<int>(item.second);
        else if (key == "d_l") cfg.d_l = py::cast<int>(item.second);
        else if (key == "rounds") cfg.rounds = py::cast<int>(item.second);
        else if (key == "window") cfg.window = py::cast<int>(item.second);
        else if (key == "max_hops") cfg.max_hops = py::cast<int>(item.second);
        else if (key == "dropout_p") cfg.dropout_p = py::cast<double>(item.second);
        else if (key == "no_kg") cfg.ablate.no_kg = py::cast<bool>(item.second);
        else if (key == "no_inter") cfg.ablate.no_inter = py::cast<bool>(item.second);
        else if (key == "no_pos") cfg.ablate.no_pos = py::cast<bool>(item.second);
        else if (key == "no_paim") cfg.ablate.no_paim = py::cast<bool>(item.second);
        else if (key == "no_lex") cfg.ablate.no_lex = py::cast<bool>(item.second);
        else if (key == "no_aux") cfg.ablate.no_aux = py::cast<bool>(item.second);
        else throw ConfigError("unknown config key: " + key);
    }
    return cfg;
}

struct PyTrained {
    train::TrainResult result;
    train::TrainConfig cfg;
};

py::dict triple_to_dict(const eval::MetricTriple& t) {
    py::dict out;
    out["precision"] = t.precision;
    out["recall"] = t.recall;
    out["f1"] = t.f1;
    out["correct"] = t.correct;
    out["predicted"] = t.predicted;
    out["annotated"] = t.annotated;
    return out;
}

py::dict metrics_to_dict(const eval::TaskMetrics& m) {
    py::dict out;
    out["ee"] = triple_to_dict(m.ee);
    out["ce"] = triple_to_dict(m.ce);
    out["ecpe"] = triple_to_dict(m.ecpe);
    return out;
}

}  // namespace

PYBIND11_MODULE(_ecpe, m) {
    m.doc() = "Emotion-cause pair extraction core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

    m.def(
        "synth_corpus",
        [](int n_docs, unsigned seed) {
            py::list out;
            for (const auto& d : corpus::synth_corpus(n_docs, seed)) out.append(doc_to_dict(d));
            return out;
        },
        py::arg("n_docs"), py::arg("seed") = 1);

    m.def(
        "load_corpus",
        [](const std::string& path) {
            py::list out;
            for (const auto& d : corpus::load_corpus(path)) out.append(doc_to_dict(d));
            return out;
        },
        py::arg("path"));

    m.def(
        "textrank",
        [](const std::vector<std::string>& clause) {
            py::list out;
            for (const auto& kw : kg::textrank(clause)) out.append(py::make_tuple(kw.token, kw.score));
            return out;
        },
        py::arg("clause"));

    m.def(
        "pad_distance", &net::pad_distance,
        py::arg("i"), py::arg("j"), py::arg("m") = 1);

    py::class_<kg::TripleStore>(m, "TripleStore")
        .def(py::init<>())
        .def_static("load", &kg::TripleStore::load, py::arg("path"))
        .def("add", &kg::TripleStore::add, py::arg("head"), py::arg("relation"), py::arg("tail"))
        .def("path_within_hops", &kg::TripleStore::path_within_hops, py::arg("head"),
             py::arg("tail"), py::arg("max_hops") = 3)
        .def("entity_count", &kg::TripleStore::entity_count);

    m.def(
        "build_candidates",
        [](const py::dict& doc, int window, const kg::TripleStore& store, bool use_kg,
           int max_hops) {
            auto lex = corpus::synth_lexicon();
            py::list out;
            for (const auto& c :
                 kg::build_candidates(doc_from_dict(doc), window, store, use_kg, lex, max_hops))
                out.append(py::make_tuple(c.emotion_idx, c.cause_idx, c.rel_dist,
                                          c.provenance == kg::Provenance::kg ? "kg" : "window"));
            return out;
        },
        py::arg("doc"), py::arg("window") = 3, py::arg("store") = kg::TripleStore(),
        py::arg("use_kg") = true, py::arg("max_hops") = 3);

    py::class_<PyTrained>(m, "TrainedModel")
        .def_property_readonly("epochs",
                               [](const PyTrained& t) {
                                   py::list out;
                                   for (const auto& ep : t.result.report.epochs) {
                                       py::dict row;
                                       row["pair"] = ep.pair;
                                       row["emo"] = ep.emo;
                                       row["cau"] = ep.cau;
                                       row["l2"] = ep.l2;
                                       row["total"] = ep.total;
                                       out.append(row);
                                   }
                                   return out;
                               })
        .def("save", [](const PyTrained& t, const std::string& path) { t.result.params.save(path); },
             py::arg("path"))
        .def("evaluate",
             [](PyTrained& t, const py::list& docs) {
                 std::vector<corpus::Document> ds;
                 for (auto d : docs) ds.push_back(doc_from_dict(py::cast<py::dict>(d)));
                 auto lex = corpus::synth_lexicon();
                 kg::TripleStore store;
                 for (const auto& tr : corpus::synth_triples()) store.add(tr[0], tr[1], tr[2]);
                 return metrics_to_dict(
                     eval::evaluate(t.result.params, t.cfg, t.result.vocab, ds, store, lex));
             },
             py::arg("docs"))
        .def("predict",
             [](PyTrained& t, const py::dict& doc) {
                 auto d = doc_from_dict(doc);
                 auto lex = corpus::synth_lexicon();
                 kg::TripleStore store;
                 for (const auto& tr : corpus::synth_triples()) store.add(tr[0], tr[1], tr[2]);
                 model::Model mdl =
                     model::Model::bind(t.result.params, t.cfg.model, t.result.vocab.size());
                 num::Tape tape;
                 std::mt19937_64 rng(1);
                 auto fwd = mdl.forward(tape, d, t.result.vocab, store, lex, false, rng);
                 py::list out;
                 for (auto [e, c] : fwd.decoded()) out.append(py::make_tuple(e, c));
                 return out;
             },
             py::arg("doc"));

    m.def(
        "train",
        [](const py::list& docs, int epochs, double lr, unsigned seed, const py::kwargs& kw) {
            std::vector<corpus::Document> ds;
            for (auto d : docs) ds.push_back(doc_from_dict(py::cast<py::dict>(d)));
            train::TrainConfig cfg;
            cfg.model = config_from_kwargs(kw);
            cfg.epochs = epochs;
            cfg.lr = lr;
            cfg.seed = seed;
            auto lex = corpus::synth_lexicon();
            kg::TripleStore store;
            for (const auto& tr : corpus::synth_triples()) store.add(tr[0], tr[1], tr[2]);
            return PyTrained{train::train(ds, lex, store, cfg), cfg};
        },
        py::arg("docs"), py::arg("epochs") = 20, py::arg("lr") = 1e-3, py::arg("seed") = 1);

    m.def(
        "gradcheck",
        [](const std::string& variant, unsigned seed, double step) {
            train::TrainConfig cfg;
            cfg.model.variant = model::parse_variant(variant);
            cfg.model.d_w = 4;
            cfg.model.d_h = 3;
            cfg.model.d_l = 2;
            cfg.model.paim_layers = 1;
            cfg.model.paim_heads = 2;
            cfg.model.pn_layers = 1;
            cfg.model.pn_heads = 2;
            cfg.model.pn_d_m = 8;
            cfg.model.pn_d_ff = 6;
            cfg.model.pn_d_r = 3;
            cfg.model.pn_d_p = 5;
            cfg.model.dropout_p = 0.0;
            auto docs = corpus::synth_corpus(2, 5);
            auto lex = corpus::synth_lexicon();
            kg::TripleStore store;
            for (const auto& tr : corpus::synth_triples()) store.add(tr[0], tr[1], tr[2]);
            auto vocab = corpus::Vocabulary::build(docs);
            num::ModelParams params;
            std::mt19937_64 init_rng(seed);
            model::Model::create(params, cfg.model, vocab, init_rng);
            auto loss = [&] {
                num::Tape tape;
                model::Model mdl = model::Model::bind(params, cfg.model, vocab.size());
                std::mt19937_64 rng(1);
                auto parts = train::batch_loss(tape, mdl, docs, vocab, store, lex, false, rng);
                return std::make_pair(
                    train::joint_loss(tape, parts.pair, parts.emo, parts.cau, params, cfg),
                    std::move(tape));
            };
            params.zero_grad();
            {
                auto [l, tape] = loss();
                tape.backward(l);
            }
            auto res = num::check_gradients(params, [&] { return loss().first.item(); }, step);
            py::dict out;
            out["max_rel_err"] = res.max_rel_err;
            out["checked"] = res.checked;
            out["passed"] = res.passed();
            return out;
        },
        py::arg("variant") = "gru", py::arg("seed") = 7, py::arg("step") = 1e-5);
}
