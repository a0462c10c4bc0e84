#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosobench/corpus.hpp"

namespace prosobench {

enum class Task { reduction, prominence };
std::string_view to_string(Task task);
Task parse_task(std::string_view s);

enum class Tag { B, I, O };
char to_char(Tag tag);
Tag parse_tag(std::string_view s);
inline bool is_positive(Tag t) { return t != Tag::O; }

inline constexpr int kDefaultFolds = 8;

/// A token with its binary benchmark label.
struct LabeledToken {
  Provenance provenance;
  std::string word;
  bool label = false;
};

/// Reads any record TSV carrying `speaker utt idx word ... label` columns
/// (reduction and prominence records both qualify).
std::vector<LabeledToken> parse_labeled_tsv(std::string_view text);

struct FoldAssignment {
  int k = kDefaultFolds;
  std::map<std::string, int> fold_of;
  std::vector<std::size_t> fold_tokens;
  /// max |fold tokens - mean| / mean
  double max_deviation = 0.0;

  int fold(const std::string& speaker) const;
};

/// Greedy balanced assignment: speakers by token count descending (ties by
/// id) each go to the currently lightest fold (ties by lowest index). The
/// seed then relabels fold indices with a deterministic permutation.
FoldAssignment make_folds(const std::map<std::string, std::size_t>& speaker_tokens, int k, std::uint64_t seed);
FoldAssignment make_folds(const AlignedCorpus& corpus, int k, std::uint64_t seed);

nlohmann::json to_json(const FoldAssignment& folds);
FoldAssignment folds_from_json(const nlohmann::json& j);

/// Maximal runs of positives become B I I ..., negatives O.
std::vector<Tag> encode_bio(const std::vector<bool>& labels);
std::vector<bool> decode_bio(const std::vector<Tag>& tags);
/// I never follows O or starts a sentence.
bool is_valid_bio(const std::vector<Tag>& tags);

struct BioToken {
  Provenance provenance;
  std::string word;
  Tag tag = Tag::O;
};

struct BioSentence {
  std::vector<BioToken> tokens;
};

struct BioDataset {
  Task task = Task::reduction;
  std::vector<BioSentence> sentences;

  std::size_t token_count() const;
};

/// Groups labeled tokens by (speaker, utterance) in order of appearance and
/// BIO-encodes each utterance.
BioDataset emit_bio(std::span<const LabeledToken> tokens, Task task);

/// CoNLL-style `token TAB tag`, blank line after every sentence.
std::string to_conll(const BioDataset& dataset);
std::string to_conll(const BioDataset& dataset, const FoldAssignment& folds, int fold);
std::string conll_filename(Task task, Language lang, int fold);

/// Gold interchange with provenance: `speaker utt idx word tag fold`.
inline constexpr std::string_view kGoldTsvHeader = "speaker\tutt\tidx\tword\ttag\tfold";
std::string emit_gold_tsv(const BioDataset& dataset, const FoldAssignment& folds);

struct GoldSet {
  BioDataset dataset;
  std::vector<int> token_fold;  // flattened token order
  int k = 0;
};
GoldSet parse_gold_tsv(std::string_view text, Task task);

struct FoldStats {
  int fold = 0;
  std::size_t tokens = 0;
  std::size_t positives = 0;
  double rate = 0.0;  // NaN when the fold is empty
};

struct StatsReport {
  std::size_t tokens = 0;
  std::size_t positives = 0;
  double positive_rate = 0.0;
  std::size_t sentences = 0;
  double mean_sentence_length = 0.0;
  std::vector<FoldStats> folds;
  std::vector<std::string> warnings;
};

StatsReport dataset_stats(const GoldSet& gold);
nlohmann::json to_json(const StatsReport& report);

}  // namespace prosobench
