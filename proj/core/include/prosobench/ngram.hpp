#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prosobench/corpus.hpp"

namespace prosobench {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";

struct NgramOptions {
  int order = 3;
  double discount = 0.75;
  /// Words seen fewer times map to <unk>.
  std::size_t min_count = 2;
};

/// Interpolated Kneser-Ney language model over words. Contexts are padded
/// with order-1 <s> symbols; <s> is never predicted and there is no
/// end-of-utterance event, so each conditional distribution ranges over the
/// vocabulary plus <unk>.
///
/// The highest order uses raw counts, lower orders continuation counts, and
/// the unigram level interpolates with a uniform distribution. An order-1
/// model has nothing to interpolate with and is the maximum-likelihood
/// unigram.
class NgramModel {
 public:
  using Utterances = std::vector<std::vector<std::string>>;

  static NgramModel train(const Utterances& utterances, const NgramOptions& options = {});

  int order() const { return order_; }
  double discount() const { return discount_; }
  /// Vocabulary including <unk>, sorted.
  const std::vector<std::string>& vocabulary() const { return vocab_; }

  /// Maps out-of-vocabulary words to <unk>.
  std::string_view map_word(std::string_view w) const;

  /// p(word | history), history in natural order (most recent last). Only
  /// the last order-1 entries are used; missing entries are <s>.
  double probability(std::string_view word, std::span<const std::string> history) const;

  /// Raw count of an n-gram (already mapped to the vocabulary; may include <s>).
  std::size_t count(std::span<const std::string> ngram) const;

  /// Per-word surprisal in bits.
  std::vector<double> surprisal(std::span<const std::string> utterance) const;

 private:
  using Id = std::uint32_t;

  struct KeyHash {
    std::size_t operator()(const std::vector<Id>& k) const noexcept;
  };
  struct ContextStats {
    double total = 0.0;        // sum of counts following the context
    std::size_t distinct = 0;  // distinct followers
  };
  template <typename V>
  using Table = std::unordered_map<std::vector<Id>, V, KeyHash>;

  Id id_of(std::string_view w) const;
  double prob_ids(Id word, const std::vector<Id>& context) const;
  double lower_order(Id word, const std::vector<Id>& context, std::size_t len) const;

  int order_ = 3;
  double discount_ = 0.75;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, Id> ids_;
  Id unk_ = 0;
  Id bos_ = 0;
  std::size_t predicted_size_ = 0;  // |V| + <unk>

  // counts_[n-1]: raw counts of n-grams; cont_[n-1]: continuation counts
  // N1+(. w_1..w_n) used at lower orders.
  std::vector<Table<std::size_t>> counts_;
  std::vector<Table<std::size_t>> cont_;
  std::vector<Table<ContextStats>> raw_ctx_;   // per history length, from raw counts
  std::vector<Table<ContextStats>> cont_ctx_;  // per history length, from continuation counts
};

struct SurprisalRecord {
  Provenance provenance;
  std::string word;
  double surprisal = 0.0;  // bits
};

/// Scores every utterance of the corpus; orthography is passed through
/// `normalize` before lookup.
std::vector<SurprisalRecord> score_corpus(const NgramModel& model, const AlignedCorpus& corpus,
                                          const Normalizer& normalize);

/// 2^(mean surprisal).
double perplexity(std::span<const SurprisalRecord> records);
double perplexity(const NgramModel& model, const NgramModel::Utterances& utterances);

/// Utterances of the corpus as normalized word lists.
NgramModel::Utterances corpus_utterances(const AlignedCorpus& corpus, const Normalizer& normalize);

inline constexpr std::string_view kSurprisalTsvHeader = "speaker\tutt\tidx\tword\tsurprisal";
std::string emit_surprisal_tsv(std::span<const SurprisalRecord> records);
std::vector<SurprisalRecord> parse_surprisal_tsv(std::string_view text);

}  // namespace prosobench
