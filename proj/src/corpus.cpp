#include "ecpe/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ecpe/error.hpp"
#include "json.hpp"

namespace ecpe::corpus {

using nlohmann::json;

void Document::validate() const {
    const int n = static_cast<int>(clauses.size());
    if (n < 1 || n > kMaxClauses)
        throw ParseError("document " + doc_id + ": clause count " + std::to_string(n) +
                         " outside [1, " + std::to_string(kMaxClauses) + "]");
    auto check_idx = [&](int i, const char* what) {
        if (i < 0 || i >= n)
            throw ParseError("document " + doc_id + ": " + what + " index " +
                             std::to_string(i + 1) + " references missing clause");
    };
    for (int i : emotion_ids) check_idx(i, "emotion");
    for (int i : cause_ids) check_idx(i, "cause");
    for (const auto& [e, c] : gold_pairs) {
        check_idx(e, "pair emotion");
        check_idx(c, "pair cause");
        if (!emotion_ids.count(e) || !cause_ids.count(c))
            throw ParseError("document " + doc_id + ": pair (" + std::to_string(e + 1) + ", " +
                             std::to_string(c + 1) + ") not covered by emotion/cause id sets");
    }
}

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<unk>");
}

int Vocabulary::add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(token);
    return id;
}

int Vocabulary::id(const std::string& token) const {
    std::string base = token;
    const std::string suffix = kAugSuffix;
    if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
        base.resize(base.size() - suffix.size());
    auto it = index_.find(base);
    return it == index_.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::build(const std::vector<Document>& docs) {
    Vocabulary v;
    for (const auto& d : docs)
        for (const auto& clause : d.clauses)
            for (const auto& tok : clause) {
                std::string base = tok;
                const std::string suffix = kAugSuffix;
                if (base.size() > suffix.size() &&
                    base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
                    base.resize(base.size() - suffix.size());
                v.add(base);
            }
    return v;
}

SentimentLexicon SentimentLexicon::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open lexicon file: " + path);
    SentimentLexicon lex;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw ParseError("lexicon line " + std::to_string(lineno) + ": expected word<TAB>polarity");
        const std::string word = line.substr(0, tab);
        const std::string pol = line.substr(tab + 1);
        if (pol == "positive")
            lex.words[word] = Polarity::positive;
        else if (pol == "negative")
            lex.words[word] = Polarity::negative;
        else
            throw ParseError("lexicon line " + std::to_string(lineno) + ": unknown polarity '" + pol + "'");
    }
    return lex;
}

void SentimentLexicon::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open lexicon file for writing: " + path);
    for (const auto& [w, p] : words)
        os << w << '\t' << (p == Polarity::positive ? "positive" : "negative") << '\n';
}

DistanceProfile DistanceProfile::fig2_default() {
    return DistanceProfile{{{0, 0.07}, {1, 0.58}, {2, 0.22}, {3, 0.08}, {4, 0.03}, {5, 0.02}}};
}

std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open corpus file: " + path);
    std::vector<Document> docs;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
        try {
            Document d;
            d.doc_id = j.at("doc_id").get<std::string>();
            for (const auto& cl : j.at("clauses")) d.clauses.push_back(cl.get<Clause>());
            for (int e : j.at("emotions")) d.emotion_ids.insert(e - 1);
            for (int c : j.at("causes")) d.cause_ids.insert(c - 1);
            for (const auto& p : j.at("pairs")) {
                if (!p.is_array() || p.size() != 2) throw ParseError("pair is not a 2-element array");
                d.gold_pairs.emplace(p[0].get<int>() - 1, p[1].get<int>() - 1);
            }
            d.validate();
            docs.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open corpus file for writing: " + path);
    for (const auto& d : docs) {
        json j;
        j["doc_id"] = d.doc_id;
        j["clauses"] = d.clauses;
        json emotions = json::array(), causes = json::array(), pairs = json::array();
        for (int e : d.emotion_ids) emotions.push_back(e + 1);
        for (int c : d.cause_ids) causes.push_back(c + 1);
        for (const auto& [e, c] : d.gold_pairs) pairs.push_back({e + 1, c + 1});
        j["emotions"] = emotions;
        j["causes"] = causes;
        j["pairs"] = pairs;
        os << j.dump() << '\n';
    }
}

CorpusStats corpus_stats(const std::vector<Document>& docs) {
    if (docs.empty()) throw ContractError("corpus_stats over empty document list");
    CorpusStats s;
    s.n_docs = static_cast<int>(docs.size());
    long total_clauses = 0, total_pairs = 0;
    for (const auto& d : docs) {
        total_clauses += static_cast<long>(d.clauses.size());
        total_pairs += static_cast<long>(d.gold_pairs.size());
        s.max_clauses = std::max(s.max_clauses, static_cast<int>(d.clauses.size()));
        const auto np = d.gold_pairs.size();
        if (np == 1)
            ++s.docs_1_pair;
        else if (np == 2)
            ++s.docs_2_pairs;
        else if (np >= 3)
            ++s.docs_3plus_pairs;
        for (const auto& [e, c] : d.gold_pairs) ++s.distance_hist[c - e];
    }
    s.avg_clauses = static_cast<double>(total_clauses) / s.n_docs;
    s.avg_pairs = static_cast<double>(total_pairs) / s.n_docs;
    return s;
}

FoldSplit make_folds(const std::vector<Document>& docs, unsigned seed, int n_folds) {
    if (static_cast<int>(docs.size()) < n_folds)
        throw ConfigError("make_folds: need at least " + std::to_string(n_folds) +
                          " documents, got " + std::to_string(docs.size()));
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& d : docs) ids.push_back(d.doc_id);
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    FoldSplit split;
    split.folds.resize(n_folds);
    for (std::size_t i = 0; i < ids.size(); ++i)
        split.folds[i % n_folds].push_back(std::move(ids[i]));
    return split;
}

num::Tensor init_embeddings(const Vocabulary& vocab, int dim,
                            const std::optional<std::string>& pretrained_path, unsigned seed) {
    if (dim <= 0) throw ConfigError("init_embeddings: dim must be positive");
    std::mt19937_64 rng(seed);
    num::Tensor E = num::Tensor::uniform({vocab.size(), dim}, -0.1, 0.1, rng);
    if (pretrained_path) {
        std::ifstream is(*pretrained_path);
        if (!is) throw ParseError("cannot open pretrained embeddings: " + *pretrained_path);
        int v_count = 0, file_dim = 0;
        is >> v_count >> file_dim;
        if (!is) throw ParseError("pretrained embeddings: bad header");
        if (file_dim != dim)
            throw DimensionError("pretrained embeddings have dim " + std::to_string(file_dim) +
                                 ", expected " + std::to_string(dim));
        for (int r = 0; r < v_count; ++r) {
            std::string token;
            is >> token;
            std::vector<double> vec(dim);
            for (double& x : vec) is >> x;
            if (!is) throw ParseError("pretrained embeddings: truncated row " + std::to_string(r));
            const int id = vocab.id(token);
            if (id != Vocabulary::kUnk || token == vocab.token(Vocabulary::kUnk))
                std::copy(vec.begin(), vec.end(),
                          E.data().begin() + static_cast<std::size_t>(id) * dim);
        }
    }
    std::fill(E.data().begin(), E.data().begin() + dim, 0.0);  // PAD row
    return E;
}

Document lexicon_augment(const Document& doc, const SentimentLexicon& lex) {
    Document out = doc;
    for (auto& clause : out.clauses) {
        std::vector<std::string> matched;
        for (const auto& tok : clause)
            if (lex.contains(tok) &&
                std::find(matched.begin(), matched.end(), tok) == matched.end())
                matched.push_back(tok);
        for (const auto& w : matched) {
            const std::string aug = w + kAugSuffix;
            if (std::find(clause.begin(), clause.end(), aug) == clause.end())
                clause.push_back(aug);
        }
    }
    return out;
}

namespace {

struct PairType {
    const char* emotion_word;
    const char* cause_word;
    const char* mid;
};

constexpr PairType kPairTypes[] = {
    {"happy", "gift", "joy"},
    {"sad", "loss", "grief"},
    {"angry", "insult", "offense"},
    {"scared", "threat", "danger"},
};
constexpr int kNumTypes = 4;
constexpr int kNumFillers = 20;

int sample_profile(const DistanceProfile& profile, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0.0;
    for (const auto& [_, p] : profile.mass) total += p;
    double r = u(rng) * total;
    for (const auto& [d, p] : profile.mass) {
        r -= p;
        if (r <= 0.0) return d;
    }
    return profile.mass.rbegin()->first;
}

}  // namespace

std::vector<Document> synth_corpus(int n_docs, unsigned seed, const DistanceProfile& profile) {
    if (n_docs < 1) throw ConfigError("synth_corpus: n_docs must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Document> docs;
    docs.reserve(n_docs);
    for (int di = 0; di < n_docs; ++di) {
        Document d;
        d.doc_id = "synth-" + std::to_string(di);
        const int n = 7 + static_cast<int>(rng() % 6);
        const int n_pairs = u(rng) < 0.8 ? 1 : 2;
        std::vector<int> types{0, 1, 2, 3};
        std::shuffle(types.begin(), types.end(), rng);

        std::set<int> occupied;
        std::vector<std::pair<Pair, int>> placed;  // ((emotion, cause), type)
        for (int k = 0; k < n_pairs; ++k) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                const int dist = sample_profile(profile, rng);
                const int emo = static_cast<int>(rng() % n);
                const int cause = u(rng) < 0.7 ? emo - dist : emo + dist;
                if (cause < 0 || cause >= n) continue;
                if (occupied.count(emo) || occupied.count(cause)) continue;
                occupied.insert(emo);
                occupied.insert(cause);
                placed.push_back({{emo, cause}, types[k]});
                break;
            }
        }
        for (const auto& [pr, type] : placed) {
            d.emotion_ids.insert(pr.first);
            d.cause_ids.insert(pr.second);
            d.gold_pairs.insert(pr);
        }
        d.clauses.resize(n);
        for (int ci = 0; ci < n; ++ci) {
            const int len = 3 + static_cast<int>(rng() % 3);
            for (int t = 0; t < len; ++t)
                d.clauses[ci].push_back("f" + std::to_string(rng() % kNumFillers));
        }
        for (const auto& [pr, type] : placed) {
            auto insert_word = [&](int ci, const char* word) {
                auto& cl = d.clauses[ci];
                const auto pos = cl.begin() + static_cast<long>(rng() % (cl.size() + 1));
                cl.insert(pos, word);
            };
            insert_word(pr.first, kPairTypes[type].emotion_word);
            insert_word(pr.second, kPairTypes[type].cause_word);
        }
        d.validate();
        docs.push_back(std::move(d));
    }
    return docs;
}

SentimentLexicon synth_lexicon() {
    SentimentLexicon lex;
    lex.words["happy"] = Polarity::positive;
    lex.words["sad"] = Polarity::negative;
    lex.words["angry"] = Polarity::negative;
    lex.words["scared"] = Polarity::negative;
    return lex;
}

std::vector<std::array<std::string, 3>> synth_triples() {
    std::vector<std::array<std::string, 3>> t;
    for (const auto& pt : kPairTypes) {
        t.push_back({pt.cause_word, "related_to", pt.mid});
        t.push_back({pt.mid, "related_to", pt.emotion_word});
    }
    // Long decoy chains: filler words reach emotion words only in 4 hops.
    t.push_back({"f0", "related_to", "decoy_a"});
    t.push_back({"decoy_a", "related_to", "decoy_b"});
    t.push_back({"decoy_b", "related_to", "decoy_c"});
    t.push_back({"decoy_c", "related_to", "happy"});
    return t;
}

}  // namespace ecpe::corpus
