#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecpe/corpus.hpp"

namespace ecpe::kg {

// Head-relation-tail triples with an undirected adjacency view for path
// search. Read-only after load.
class TripleStore {
  public:
    void add(const std::string& head, const std::string& relation, const std::string& tail);
    static TripleStore load(const std::string& path);  // TSV, '#' comments

    bool has_entity(const std::string& e) const;
    std::size_t entity_count() const { return names_.size(); }
    std::size_t triple_count() const { return n_triples_; }

    // Shortest undirected hop count if <= max_hops, else nullopt.
    // head == tail is 0 hops; unknown entities yield nullopt.
    std::optional<int> path_within_hops(const std::string& head, const std::string& tail,
                                        int max_hops) const;

  private:
    int intern(const std::string& e);
    std::map<std::string, int> ids_;
    std::vector<std::string> names_;
    std::vector<std::vector<int>> adj_;
    std::size_t n_triples_ = 0;
};

struct TextRankConfig {
    double damping = 0.85;
    int window = 2;
    int max_iters = 100;
    double tol = 1e-6;
};

struct Keyword {
    std::string token;
    double score;
};

// Top-3 tokens of the clause ranked by TextRank over the in-clause
// co-occurrence graph. Scores are normalized to sum 1 over all distinct
// tokens; ties break toward earlier clause position.
std::vector<Keyword> textrank(const corpus::Clause& clause, const TextRankConfig& cfg = {});

enum class Provenance { window, kg };

struct CandidatePair {
    int emotion_idx;
    int cause_idx;
    int rel_dist;  // cause_idx - emotion_idx
    Provenance provenance;

    bool operator==(const CandidatePair&) const = default;
};

// True iff any top-3 keyword of the candidate clause reaches the emotion
// clause's tail entity within max_hops. The tail is the first
// lexicon-matched word of the emotion clause, falling back to
// emotion_label when no lexicon word is present.
bool admit_distant_pair(const TripleStore& store, const corpus::Clause& candidate,
                        const corpus::Clause& emotion_clause, const std::string& emotion_label,
                        const corpus::SentimentLexicon& lex, int max_hops = 3);

// All ordered (emotion, cause) pairs with |j - i| <= W, plus KG-admitted
// distant pairs when use_kg is set. Sorted by emotion then cause index.
std::vector<CandidatePair> build_candidates(const corpus::Document& doc, int window,
                                            const TripleStore& store, bool use_kg,
                                            const corpus::SentimentLexicon& lex,
                                            int max_hops = 3);

// Documents with multiple gold pairs or any gold pair at distance > 1.
std::vector<corpus::Document> build_imbalanced_testset(const std::vector<corpus::Document>& docs);

}  // namespace ecpe::kg
