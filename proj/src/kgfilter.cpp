#include "ecpe/kgfilter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include "ecpe/error.hpp"

namespace ecpe::kg {

int TripleStore::intern(const std::string& e) {
    auto it = ids_.find(e);
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(names_.size());
    ids_.emplace(e, id);
    names_.push_back(e);
    adj_.emplace_back();
    return id;
}

void TripleStore::add(const std::string& head, const std::string& relation,
                      const std::string& tail) {
    (void)relation;  // relation labels are kept out of the path index
    const int h = intern(head), t = intern(tail);
    if (h == t) return;
    if (std::find(adj_[h].begin(), adj_[h].end(), t) == adj_[h].end()) {
        adj_[h].push_back(t);
        adj_[t].push_back(h);
    }
    ++n_triples_;
}

TripleStore TripleStore::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open triple file: " + path);
    TripleStore store;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw ParseError("triple file line " + std::to_string(lineno) +
                             ": expected head<TAB>relation<TAB>tail");
        store.add(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1));
    }
    return store;
}

bool TripleStore::has_entity(const std::string& e) const { return ids_.count(e) > 0; }

std::optional<int> TripleStore::path_within_hops(const std::string& head, const std::string& tail,
                                                int max_hops) const {
    if (max_hops < 1) throw ConfigError("path_within_hops: max_hops must be >= 1");
    if (head == tail) return 0;
    auto hit = ids_.find(head);
    auto tit = ids_.find(tail);
    if (hit == ids_.end() || tit == ids_.end()) return std::nullopt;
    // breadth-first search bounded by max_hops
    std::vector<int> dist(names_.size(), -1);
    std::deque<int> queue{hit->second};
    dist[hit->second] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        if (dist[u] >= max_hops) continue;
        for (int v : adj_[u]) {
            if (dist[v] != -1) continue;
            dist[v] = dist[u] + 1;
            if (v == tit->second) return dist[v];
            queue.push_back(v);
        }
    }
    return std::nullopt;
}

std::vector<Keyword> textrank(const corpus::Clause& clause, const TextRankConfig& cfg) {
    if (clause.empty()) throw ContractError("textrank on empty clause");
    std::vector<std::string> nodes;  // distinct tokens in first-occurrence order
    std::map<std::string, int> index;
    std::vector<int> pos(clause.size());
    for (std::size_t p = 0; p < clause.size(); ++p) {
        auto it = index.find(clause[p]);
        if (it == index.end()) {
            index.emplace(clause[p], static_cast<int>(nodes.size()));
            pos[p] = static_cast<int>(nodes.size());
            nodes.push_back(clause[p]);
        } else {
            pos[p] = it->second;
        }
    }
    const int n = static_cast<int>(nodes.size());
    std::vector<std::vector<double>> weight(n, std::vector<double>(n, 0.0));
    for (std::size_t p = 0; p < clause.size(); ++p)
        for (std::size_t q = p + 1; q < clause.size() && q < p + static_cast<std::size_t>(cfg.window); ++q)
            if (pos[p] != pos[q]) {
                weight[pos[p]][pos[q]] += 1.0;
                weight[pos[q]][pos[p]] += 1.0;
            }
    std::vector<double> out_weight(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out_weight[i] += weight[i][j];

    std::vector<double> score(n, 1.0 / n), next(n);
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        double max_delta = 0.0;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
                if (weight[j][i] > 0.0) acc += score[j] * weight[j][i] / out_weight[j];
            next[i] = (1.0 - cfg.damping) / n + cfg.damping * acc;
            max_delta = std::max(max_delta, std::abs(next[i] - score[i]));
        }
        score.swap(next);
        if (max_delta < cfg.tol) break;
    }
    double total = 0.0;
    for (double s : score) total += s;
    for (double& s : score) s /= total;

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;  // earlier clause position wins ties
    });
    std::vector<Keyword> top;
    for (int k = 0; k < std::min(n, 3); ++k) top.push_back({nodes[order[k]], score[order[k]]});
    return top;
}

namespace {
std::string resolve_tail(const corpus::Clause& emotion_clause, const std::string& emotion_label,
                         const corpus::SentimentLexicon& lex) {
    for (const auto& tok : emotion_clause)
        if (lex.contains(tok)) return tok;
    return emotion_label;
}
}  // namespace

bool admit_distant_pair(const TripleStore& store, const corpus::Clause& candidate,
                        const corpus::Clause& emotion_clause, const std::string& emotion_label,
                        const corpus::SentimentLexicon& lex, int max_hops) {
    const std::string tail = resolve_tail(emotion_clause, emotion_label, lex);
    if (tail.empty()) return false;
    for (const auto& kw : textrank(candidate)) {
        if (kw.token == tail) return true;
        if (store.path_within_hops(kw.token, tail, max_hops)) return true;
    }
    return false;
}

std::vector<CandidatePair> build_candidates(const corpus::Document& doc, int window,
                                            const TripleStore& store, bool use_kg,
                                            const corpus::SentimentLexicon& lex, int max_hops) {
    if (window < 0) throw ConfigError("build_candidates: window must be >= 0");
    const int n = static_cast<int>(doc.clauses.size());
    std::vector<CandidatePair> out;
    for (int e = 0; e < n; ++e)
        for (int c = 0; c < n; ++c) {
            const int d = c - e;
            if (std::abs(d) <= window) {
                out.push_back({e, c, d, Provenance::window});
            } else if (use_kg &&
                       admit_distant_pair(store, doc.clauses[c], doc.clauses[e], "", lex,
                                          max_hops)) {
                out.push_back({e, c, d, Provenance::kg});
            }
        }
    return out;
}

std::vector<corpus::Document> build_imbalanced_testset(const std::vector<corpus::Document>& docs) {
    std::vector<corpus::Document> out;
    for (const auto& d : docs) {
        bool keep = d.gold_pairs.size() > 1;
        for (const auto& [e, c] : d.gold_pairs)
            if (std::abs(c - e) > 1) keep = true;
        if (keep) out.push_back(d);
    }
    return out;
}

}  // namespace ecpe::kg
