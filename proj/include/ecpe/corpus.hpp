#pragma once

#include <array>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ecpe/tensor.hpp"

namespace ecpe::corpus {

// Appended lexicon-augmentation copies carry this suffix so the embedding
// layer can map them back to the base word.
inline constexpr const char* kAugSuffix = "~aug";

inline constexpr int kMaxClauses = 75;

using Clause = std::vector<std::string>;
using Pair = std::pair<int, int>;  // (emotion clause, cause clause), 0-based

// A document with gold annotations. Clause indices are 0-based in memory;
// all file formats and printed output are 1-based.
struct Document {
    std::string doc_id;
    std::vector<Clause> clauses;
    std::set<int> emotion_ids;
    std::set<int> cause_ids;
    std::set<Pair> gold_pairs;

    void validate() const;  // throws ParseError on any broken invariant
    bool operator==(const Document&) const = default;
};

class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary();
    static Vocabulary build(const std::vector<Document>& docs);

    int add(const std::string& token);
    // Lookup; augmentation-marked tokens resolve to their base word.
    int id(const std::string& token) const;
    const std::string& token(int id) const { return tokens_.at(id); }
    int size() const { return static_cast<int>(tokens_.size()); }

  private:
    std::map<std::string, int> index_;
    std::vector<std::string> tokens_;
};

enum class Polarity { positive, negative };

struct SentimentLexicon {
    std::map<std::string, Polarity> words;

    bool contains(const std::string& w) const { return words.count(w) > 0; }
    static SentimentLexicon load(const std::string& path);
    void save(const std::string& path) const;
};

struct FoldSplit {
    std::vector<std::vector<std::string>> folds;  // doc ids, 10 folds
};

struct DistanceProfile {
    // Probability mass per absolute emotion-to-cause distance.
    std::map<int, double> mass;
    static DistanceProfile fig2_default();
};

struct CorpusStats {
    int n_docs = 0;
    int docs_1_pair = 0;
    int docs_2_pairs = 0;
    int docs_3plus_pairs = 0;
    double avg_clauses = 0.0;
    double avg_pairs = 0.0;
    int max_clauses = 0;
    std::map<int, int> distance_hist;  // signed cause - emotion
};

std::vector<Document> load_corpus(const std::string& path);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

CorpusStats corpus_stats(const std::vector<Document>& docs);

FoldSplit make_folds(const std::vector<Document>& docs, unsigned seed, int n_folds = 10);

// V x dim embedding matrix: pretrained rows where available, else
// uniform(-0.1, 0.1); PAD row is all zeros.
num::Tensor init_embeddings(const Vocabulary& vocab, int dim,
                            const std::optional<std::string>& pretrained_path, unsigned seed);

// Appends each matched lexicon word (marked) to clauses containing it.
// Idempotent; unchanged clauses are shared as-is.
Document lexicon_augment(const Document& doc, const SentimentLexicon& lex);

std::vector<Document> synth_corpus(int n_docs, unsigned seed,
                                   const DistanceProfile& profile = DistanceProfile::fig2_default());

// Resources aligned with synth_corpus trigger words.
SentimentLexicon synth_lexicon();
std::vector<std::array<std::string, 3>> synth_triples();

}  // namespace ecpe::corpus
