#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecpe/error.hpp"
#include "ecpe/gradcheck.hpp"
#include "ecpe/metrics.hpp"
#include "ecpe/ops.hpp"
#include "ecpe/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ecpe;

namespace {

// ---- flat key=value config ----

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_key(train::TrainConfig& cfg, const std::string& key, const std::string& val) {
    auto as_int = [&] { return std::stoi(val); };
    auto as_double = [&] { return std::stod(val); };
    if (key == "variant") cfg.model.variant = model::parse_variant(val);
    else if (key == "d_w") cfg.model.d_w = as_int();
    else if (key == "d_h") cfg.model.d_h = as_int();
    else if (key == "d_l") cfg.model.d_l = as_int();
    else if (key == "rounds") cfg.model.rounds = as_int();
    else if (key == "window") cfg.model.window = as_int();
    else if (key == "max_hops") cfg.model.max_hops = as_int();
    else if (key == "paim.layers") cfg.model.paim_layers = as_int();
    else if (key == "paim.heads") cfg.model.paim_heads = as_int();
    else if (key == "paim.window") cfg.model.paim_window = as_int();
    else if (key == "paim.m") cfg.model.paim_m = as_int();
    else if (key == "pn.layers") cfg.model.pn_layers = as_int();
    else if (key == "pn.heads") cfg.model.pn_heads = as_int();
    else if (key == "pn.d_m") cfg.model.pn_d_m = as_int();
    else if (key == "pn.d_ff") cfg.model.pn_d_ff = as_int();
    else if (key == "pn.d_r") cfg.model.pn_d_r = as_int();
    else if (key == "pn.clip") cfg.model.pn_clip = as_int();
    else if (key == "pn.d_p") cfg.model.pn_d_p = as_int();
    else if (key == "dropout_p") cfg.model.dropout_p = as_double();
    else if (key == "alpha") cfg.alpha = as_double();
    else if (key == "beta") cfg.beta = as_double();
    else if (key == "gamma") cfg.gamma = as_double();
    else if (key == "lambda") cfg.lambda = as_double();
    else if (key == "lr") cfg.lr = as_double();
    else if (key == "batch_size") cfg.batch_size = as_int();
    else if (key == "epochs") cfg.epochs = as_int();
    else if (key == "seed") cfg.seed = static_cast<unsigned>(std::stoul(val));
    else if (key == "ablate") {
        std::stringstream ss(val);
        std::string name;
        while (std::getline(ss, name, ','))
            if (!name.empty()) apply_key(cfg, "ablate." + name, "1");
    } else if (key == "ablate.no_kg") cfg.model.ablate.no_kg = val != "0";
    else if (key == "ablate.no_inter") cfg.model.ablate.no_inter = val != "0";
    else if (key == "ablate.no_pos") cfg.model.ablate.no_pos = val != "0";
    else if (key == "ablate.no_paim") cfg.model.ablate.no_paim = val != "0";
    else if (key == "ablate.no_lex") cfg.model.ablate.no_lex = val != "0";
    else if (key == "ablate.no_aux") cfg.model.ablate.no_aux = val != "0";
    else throw ConfigError("unknown config key '" + key + "'");
}

train::TrainConfig load_config(const std::string& path) {
    train::TrainConfig cfg;
    for (const auto& [k, v] : read_kv(path)) apply_key(cfg, k, v);
    return cfg;
}

void save_config(const train::TrainConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    const auto& m = cfg.model;
    out << "variant=" << model::variant_name(m.variant) << "\n"
        << "d_w=" << m.d_w << "\nd_h=" << m.d_h << "\nd_l=" << m.d_l << "\n"
        << "rounds=" << m.rounds << "\nwindow=" << m.window << "\nmax_hops=" << m.max_hops
        << "\n"
        << "paim.layers=" << m.paim_layers << "\npaim.heads=" << m.paim_heads << "\n"
        << "paim.window=" << m.paim_window << "\npaim.m=" << m.paim_m << "\n"
        << "pn.layers=" << m.pn_layers << "\npn.heads=" << m.pn_heads << "\n"
        << "pn.d_m=" << m.pn_d_m << "\npn.d_ff=" << m.pn_d_ff << "\npn.d_r=" << m.pn_d_r
        << "\n"
        << "pn.clip=" << m.pn_clip << "\npn.d_p=" << m.pn_d_p << "\n"
        << "dropout_p=" << m.dropout_p << "\n"
        << "alpha=" << cfg.alpha << "\nbeta=" << cfg.beta << "\ngamma=" << cfg.gamma << "\n"
        << "lambda=" << cfg.lambda << "\nlr=" << cfg.lr << "\n"
        << "batch_size=" << cfg.batch_size << "\nepochs=" << cfg.epochs << "\n"
        << "seed=" << cfg.seed << "\n"
        << "ablate.no_kg=" << m.ablate.no_kg << "\nablate.no_inter=" << m.ablate.no_inter
        << "\n"
        << "ablate.no_pos=" << m.ablate.no_pos << "\nablate.no_paim=" << m.ablate.no_paim
        << "\n"
        << "ablate.no_lex=" << m.ablate.no_lex << "\nablate.no_aux=" << m.ablate.no_aux << "\n";
}

void apply_ablations(train::TrainConfig& cfg, const std::vector<std::string>& ablate) {
    for (const auto& name : ablate) apply_key(cfg, "ablate." + name, "1");
}

// ---- vocab persistence ----

void save_vocab(const corpus::Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    for (int i = 2; i < vocab.size(); ++i) out << vocab.token(i) << "\n";
}

corpus::Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vocabulary file " + path);
    corpus::Vocabulary vocab;
    std::string tok;
    while (std::getline(in, tok))
        if (!tok.empty()) vocab.add(tok);
    return vocab;
}

// ---- shared resource loading ----

struct Resources {
    corpus::SentimentLexicon lex;
    kg::TripleStore store;
};

Resources load_resources(const std::string& lexicon_path, const std::string& triples_path) {
    Resources r;
    if (!lexicon_path.empty()) r.lex = corpus::SentimentLexicon::load(lexicon_path);
    else r.lex = corpus::synth_lexicon();
    if (!triples_path.empty()) r.store = kg::TripleStore::load(triples_path);
    else
        for (const auto& t : corpus::synth_triples()) r.store.add(t[0], t[1], t[2]);
    return r;
}

json report_json(const train::TrainReport& rep) {
    json epochs = json::array();
    for (const auto& ep : rep.epochs)
        epochs.push_back({{"pair", ep.pair},
                          {"emo", ep.emo},
                          {"cau", ep.cau},
                          {"l2", ep.l2},
                          {"total", ep.total}});
    return {{"epochs", epochs}, {"wall_seconds", rep.wall_seconds}, {"seed", rep.seed}};
}

// ---- svg helpers ----

void write_bar_svg(const std::string& path, const std::map<int, int>& hist,
                   const std::string& title) {
    const int w = 640, h = 360, pad = 48;
    int max_count = 1;
    for (const auto& [k, v] : hist) max_count = std::max(max_count, v);
    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<text x=\"" << pad << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
    const int n = static_cast<int>(hist.size());
    const double bw = n > 0 ? double(w - 2 * pad) / n : 1.0;
    int idx = 0;
    for (const auto& [k, v] : hist) {
        double bh = double(v) / max_count * (h - 2 * pad);
        double x = pad + idx * bw;
        out << "<rect x=\"" << x << "\" y=\"" << h - pad - bh << "\" width=\"" << bw * 0.8
            << "\" height=\"" << bh << "\" fill=\"#4477aa\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << h - pad + 16 << "\" font-size=\"11\">" << k
            << "</text>\n";
        out << "<text x=\"" << x << "\" y=\"" << h - pad - bh - 4 << "\" font-size=\"11\">" << v
            << "</text>\n";
        ++idx;
    }
    out << "</svg>\n";
}

void write_curve_svg(const std::string& path, const std::vector<std::string>& xs,
                     const std::vector<double>& ys, const std::string& title) {
    const int w = 640, h = 360, pad = 48;
    double y_max = 1e-9;
    for (double y : ys) y_max = std::max(y_max, y);
    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<text x=\"" << pad << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
    std::ostringstream pts;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double x = ys.size() > 1 ? pad + double(i) / (ys.size() - 1) * (w - 2 * pad) : w / 2.0;
        double y = h - pad - ys[i] / y_max * (h - 2 * pad);
        pts << x << "," << y << " ";
        out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"#cc3311\"/>\n";
        out << "<text x=\"" << x - 8 << "\" y=\"" << h - pad + 16 << "\" font-size=\"11\">"
            << xs[i] << "</text>\n";
    }
    out << "<polyline points=\"" << pts.str()
        << "\" fill=\"none\" stroke=\"#cc3311\" stroke-width=\"1.5\"/>\n</svg>\n";
}

// ---- subcommand bodies ----

int cmd_train(const std::string& corpus_path, const std::string& config_path,
              const std::string& out_dir, const std::string& lexicon_path,
              const std::string& triples_path, const std::vector<std::string>& ablate,
              int seed_override) {
    auto docs = corpus::load_corpus(corpus_path);
    auto cfg = config_path.empty() ? train::TrainConfig{} : load_config(config_path);
    apply_ablations(cfg, ablate);
    if (seed_override >= 0) cfg.seed = static_cast<unsigned>(seed_override);
    auto res_in = load_resources(lexicon_path, triples_path);
    auto result = train::train(docs, res_in.lex, res_in.store, cfg);
    fs::create_directories(out_dir);
    result.params.save(out_dir + "/model.ckpt");
    save_vocab(result.vocab, out_dir + "/vocab.txt");
    save_config(cfg, out_dir + "/config.txt");
    std::ofstream(out_dir + "/train_report.json") << report_json(result.report).dump(2) << "\n";
    std::cout << report_json(result.report).dump(2) << std::endl;
    return 0;
}

int cmd_eval(const std::string& corpus_path, const std::string& model_dir,
             const std::string& lexicon_path, const std::string& triples_path, bool imbalanced,
             const std::string& dump_path) {
    auto docs = corpus::load_corpus(corpus_path);
    auto cfg = load_config(model_dir + "/config.txt");
    auto vocab = load_vocab(model_dir + "/vocab.txt");
    auto params = num::ModelParams::load(model_dir + "/model.ckpt");
    auto res = load_resources(lexicon_path, triples_path);

    eval::EvalReport report;
    if (imbalanced) {
        report = eval::eval_imbalanced(params, cfg, vocab, docs, res.store, res.lex);
        if (report.folds.empty())
            std::cerr << "warning: imbalanced subset is empty" << std::endl;
    } else {
        report.folds.push_back(eval::evaluate(params, cfg, vocab, docs, res.store, res.lex));
        report.mean = report.folds[0];
    }
    std::cout << report.to_json() << std::endl;

    if (!dump_path.empty()) {
        model::Model m = model::Model::bind(params, cfg.model, vocab.size());
        std::mt19937_64 rng(cfg.seed);
        std::ofstream dump(dump_path);
        for (const auto& doc : docs) {
            num::Tape tape;
            auto fwd = m.forward(tape, doc, vocab, res.store, res.lex, false, rng);
            json pairs = json::array(), scores = json::array();
            for (std::size_t k = 0; k < fwd.candidates.size(); ++k) {
                const auto& c = fwd.candidates[k];
                if (fwd.pair_scores[k].at(1) > 0.5) {
                    pairs.push_back({c.emotion_idx + 1, c.cause_idx + 1});
                    scores.push_back(fwd.pair_scores[k].at(1));
                }
            }
            dump << json{{"doc_id", doc.doc_id}, {"pairs", pairs}, {"scores", scores}}.dump()
                 << "\n";
        }
    }
    return 0;
}

int cmd_cv(const std::string& corpus_path, const std::string& config_path,
           const std::string& lexicon_path, const std::string& triples_path, int folds,
           int repeats, const std::vector<std::string>& ablate, int seed_override) {
    auto docs = corpus::load_corpus(corpus_path);
    auto cfg = config_path.empty() ? train::TrainConfig{} : load_config(config_path);
    apply_ablations(cfg, ablate);
    if (seed_override >= 0) cfg.seed = static_cast<unsigned>(seed_override);
    auto res = load_resources(lexicon_path, triples_path);
    auto report = eval::cross_validate(docs, res.lex, res.store, cfg, folds, repeats);
    std::cout << report.to_json() << std::endl;
    return 0;
}

int cmd_kg_admit(const std::string& corpus_path, const std::string& lexicon_path,
                 const std::string& triples_path, int window, int max_hops) {
    auto docs = corpus::load_corpus(corpus_path);
    auto res = load_resources(lexicon_path, triples_path);
    for (const auto& doc : docs) {
        auto cands = kg::build_candidates(doc, window, res.store, true, res.lex, max_hops);
        json admitted = json::array();
        for (const auto& c : cands)
            if (c.provenance == kg::Provenance::kg)
                admitted.push_back({c.emotion_idx + 1, c.cause_idx + 1});
        std::cout << json{{"doc_id", doc.doc_id}, {"kg_pairs", admitted}}.dump() << "\n";
    }
    return 0;
}

int cmd_stats(const std::string& corpus_path, const std::string& svg_path) {
    auto docs = corpus::load_corpus(corpus_path);
    auto st = corpus::corpus_stats(docs);
    std::cout << "documents:            " << st.n_docs << "\n"
              << "  with 1 pair:        " << st.docs_1_pair << "\n"
              << "  with 2 pairs:       " << st.docs_2_pairs << "\n"
              << "  with >2 pairs:      " << st.docs_3plus_pairs << "\n"
              << "avg clauses per doc:  " << st.avg_clauses << "\n"
              << "avg pairs per doc:    " << st.avg_pairs << "\n"
              << "max clauses:          " << st.max_clauses << "\n"
              << "distance histogram (cause - emotion):\n";
    for (const auto& [d, c] : st.distance_hist)
        std::cout << "  " << (d >= 0 ? " " : "") << d << ": " << c << "\n";
    if (!svg_path.empty())
        write_bar_svg(svg_path, st.distance_hist, "emotion-to-cause distance histogram");
    return 0;
}

int cmd_synth(int n_docs, int seed, const std::string& out_path,
              const std::string& lexicon_out, const std::string& triples_out) {
    auto docs = corpus::synth_corpus(n_docs, static_cast<unsigned>(seed));
    corpus::save_corpus(docs, out_path);
    if (!lexicon_out.empty()) corpus::synth_lexicon().save(lexicon_out);
    if (!triples_out.empty()) {
        std::ofstream out(triples_out);
        out << "# head\trelation\ttail\n";
        for (const auto& t : corpus::synth_triples())
            out << t[0] << "\t" << t[1] << "\t" << t[2] << "\n";
    }
    std::cout << "wrote " << docs.size() << " documents to " << out_path << std::endl;
    return 0;
}

int cmd_gradcheck(int seed, const std::string& variant_name) {
    auto docs = corpus::synth_corpus(2, 5);
    auto lex = corpus::synth_lexicon();
    kg::TripleStore store;
    for (const auto& t : corpus::synth_triples()) store.add(t[0], t[1], t[2]);

    train::TrainConfig cfg;
    cfg.model.variant = model::parse_variant(variant_name);
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

    auto vocab = corpus::Vocabulary::build(docs);
    num::ModelParams params;
    std::mt19937_64 init_rng(static_cast<unsigned>(seed));
    model::Model::create(params, cfg.model, vocab, init_rng);
    auto forward = [&] {
        num::Tape tape;
        model::Model m = model::Model::bind(params, cfg.model, vocab.size());
        std::mt19937_64 rng(1);
        auto parts = train::batch_loss(tape, m, docs, vocab, store, lex, false, rng);
        num::Tensor loss = train::joint_loss(tape, parts.pair, parts.emo, parts.cau, params, cfg);
        return std::make_pair(loss, std::move(tape));
    };
    params.zero_grad();
    {
        auto [loss, tape] = forward();
        tape.backward(loss);
    }
    auto res = num::check_gradients(params, [&] { return forward().first.item(); });
    std::cout << "max relative error: " << res.max_rel_err << " (" << res.worst_param << "["
              << res.worst_index << "], " << res.checked << " scalars)" << std::endl;
    return res.max_rel_err < 1e-4 ? 0 : 2;
}

int cmd_sweep(const std::string& corpus_path, const std::string& config_path,
              const std::string& lexicon_path, const std::string& triples_path,
              const std::string& param, const std::string& values_csv, int folds,
              const std::string& svg_path) {
    auto docs = corpus::load_corpus(corpus_path);
    auto base = config_path.empty() ? train::TrainConfig{} : load_config(config_path);
    auto res = load_resources(lexicon_path, triples_path);

    std::vector<std::string> values;
    std::stringstream ss(values_csv);
    std::string v;
    while (std::getline(ss, v, ','))
        if (!v.empty()) values.push_back(v);
    if (values.empty()) throw ConfigError("sweep: empty value list");

    std::vector<double> f1s;
    json out = json::array();
    for (const auto& value : values) {
        train::TrainConfig cfg = base;
        apply_key(cfg, param, value);
        auto report = eval::cross_validate(docs, res.lex, res.store, cfg, folds, 1);
        f1s.push_back(report.mean.ecpe.f1);
        out.push_back({{"param", param},
                       {"value", value},
                       {"report", json::parse(report.to_json())}});
    }
    std::cout << out.dump(2) << std::endl;
    if (!svg_path.empty()) write_curve_svg(svg_path, values, f1s, "ECPE F1 vs " + param);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emotion-cause pair extraction toolkit"};
    app.require_subcommand(1);

    std::string corpus_path, config_path, out_dir, model_dir, lexicon_path, triples_path;
    std::string dump_path, svg_path, param, values_csv, variant = "gru";
    std::vector<std::string> ablate;
    int seed = -1, folds = 10, repeats = 1, n_docs = 20, window = 3, max_hops = 3;
    bool imbalanced = false;

    auto add_common = [&](CLI::App* sub, bool needs_corpus) {
        if (needs_corpus)
            sub->add_option("--corpus", corpus_path, "corpus JSONL file")->required();
        sub->add_option("--lexicon", lexicon_path, "sentiment lexicon TSV");
        sub->add_option("--triples", triples_path, "knowledge triples TSV");
        sub->add_option("--seed", seed, "random seed override");
    };

    auto* tr = app.add_subcommand("train", "train a model");
    add_common(tr, true);
    tr->add_option("--config", config_path, "key=value config file");
    tr->add_option("--out", out_dir, "output directory")->required();
    tr->add_option("--ablate", ablate, "ablation switches (no_kg, no_inter, ...)");

    auto* ev = app.add_subcommand("eval", "evaluate a trained model");
    add_common(ev, true);
    ev->add_option("--model", model_dir, "trained model directory")->required();
    ev->add_flag("--imbalanced", imbalanced, "restrict to the imbalanced subset");
    ev->add_option("--dump", dump_path, "write predictions JSONL");

    auto* cv = app.add_subcommand("cv", "cross-validated training and scoring");
    add_common(cv, true);
    cv->add_option("--config", config_path, "key=value config file");
    cv->add_option("--folds", folds, "fold count");
    cv->add_option("--repeats", repeats, "repetitions per fold");
    cv->add_option("--ablate", ablate, "ablation switches");

    auto* ka = app.add_subcommand("kg-admit", "list knowledge-admitted distant pairs");
    add_common(ka, true);
    ka->add_option("--window", window, "candidate window");
    ka->add_option("--max-hops", max_hops, "path search hop limit");

    auto* st = app.add_subcommand("stats", "corpus statistics");
    st->add_option("--corpus", corpus_path, "corpus JSONL file")->required();
    st->add_option("--svg", svg_path, "distance histogram SVG output");

    auto* sy = app.add_subcommand("synth", "generate a synthetic corpus");
    sy->add_option("--docs", n_docs, "document count");
    sy->add_option("--seed", seed, "generator seed");
    sy->add_option("--out", out_dir, "output JSONL path")->required();
    sy->add_option("--lexicon-out", lexicon_path, "also write the aligned lexicon");
    sy->add_option("--triples-out", triples_path, "also write the aligned triples");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->add_option("--seed", seed, "initialization seed");
    gc->add_option("--variant", variant, "gru or paim");

    auto* sw = app.add_subcommand("sweep", "evaluate across a hyperparameter range");
    add_common(sw, true);
    sw->add_option("--config", config_path, "key=value config file");
    sw->add_option("--param", param, "config key to sweep")->required();
    sw->add_option("--values", values_csv, "comma-separated values")->required();
    sw->add_option("--folds", folds, "fold count");
    sw->add_option("--svg", svg_path, "F1 curve SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (tr->parsed())
            return cmd_train(corpus_path, config_path, out_dir, lexicon_path, triples_path,
                             ablate, seed);
        if (ev->parsed())
            return cmd_eval(corpus_path, model_dir, lexicon_path, triples_path, imbalanced,
                            dump_path);
        if (cv->parsed())
            return cmd_cv(corpus_path, config_path, lexicon_path, triples_path, folds, repeats,
                          ablate, seed);
        if (ka->parsed())
            return cmd_kg_admit(corpus_path, lexicon_path, triples_path, window, max_hops);
        if (st->parsed()) return cmd_stats(corpus_path, svg_path);
        if (sy->parsed())
            return cmd_synth(n_docs, seed < 0 ? 1 : seed, out_dir, lexicon_path, triples_path);
        if (gc->parsed()) return cmd_gradcheck(seed < 0 ? 7 : seed, variant);
        if (sw->parsed())
            return cmd_sweep(corpus_path, config_path, lexicon_path, triples_path, param,
                             values_csv, folds, svg_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << std::endl;
        return 2;
    }
    return 1;
}
