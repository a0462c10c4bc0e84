#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosobench/benchset.hpp"
#include "prosobench/corpus.hpp"
#include "prosobench/ngram.hpp"

namespace prosobench {

// ---------------------------------------------------------------------------
// Predictions

struct PredictedToken {
  Provenance provenance;
  std::string word;
  Tag tag = Tag::O;
};

struct PredictionSet {
  Task task = Task::reduction;
  std::string model_name;
  std::vector<PredictedToken> tokens;  // word level, gold order
};

/// Word-level decision from subword decisions: majority, ties positive.
bool majority_vote(const std::vector<bool>& subword_positive);

inline constexpr std::string_view kPredictionTsvHeader = "speaker\tutt\tidx\tword\ttag";
inline constexpr std::string_view kSubwordPredictionTsvHeader = "speaker\tutt\tidx\tword\tsubword_index\ttag";

/// Reads word-level predictions, or subword-level predictions which are
/// collapsed per word by majority vote (ties positive) and re-encoded as BIO
/// within each utterance.
PredictionSet parse_prediction_tsv(std::string_view text, Task task, std::string model_name);
std::string emit_prediction_tsv(const PredictionSet& pred);

/// Throws AlignmentError naming the first position where provenance differs.
void check_alignment(const GoldSet& gold, const PredictionSet& pred);

// ---------------------------------------------------------------------------
// Scoring

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(bool gold, bool predicted) {
    if (gold && predicted) ++tp;
    else if (predicted) ++fp;
    else if (gold) ++fn;
    else ++tn;
  }
};

/// Token-level counts with B and I both positive; sequences must be equally long.
Confusion confusion(std::span<const Tag> gold, std::span<const Tag> pred);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Positive-class P/R/F1. With no gold and no predicted positives the
/// prediction is perfect and all three are 1; otherwise empty denominators
/// give 0.
Prf prf(const Confusion& c);

struct FoldScore {
  int fold = 0;
  Confusion counts;
  Prf metrics;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
};
MeanSd mean_sd(std::span<const double> values);

/// ".442 (.014)"
std::string format_mean_sd(const MeanSd& v);
std::string format_unit(double v);

struct BaselineResult {
  double mean = 0.0;
  double sd = 0.0;
  int trials = 0;
};

/// Monte Carlo F1 of random predictions (positive with probability q)
/// against random gold at rate q.
BaselineResult random_baseline(double q, std::size_t n_tokens, int trials, std::uint64_t seed, unsigned jobs = 1);

struct EvalReport {
  Task task = Task::reduction;
  std::string model_name;
  std::vector<FoldScore> folds;
  MeanSd precision;
  MeanSd recall;
  MeanSd f1;
  double gold_positive_rate = 0.0;
  BaselineResult baseline;
};

struct ScoreOptions {
  int baseline_trials = 100;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

EvalReport score(const GoldSet& gold, const PredictionSet& pred, const ScoreOptions& options = {});
nlohmann::json to_json(const EvalReport& report);

/// Rows `Language  Task  Model  F1  Precision  Recall` with ".mean (.sd)" cells.
std::string format_results_table(std::span<const EvalReport> reports, Language lang);

// ---------------------------------------------------------------------------
// Surprisal-label correlation

/// (mean1 - mean0) / sd * sqrt(p (1 - p)) with population sd.
double point_biserial(std::span<const double> values, const std::vector<bool>& labels);

struct CorrelationReport {
  std::string model_name;
  Task task = Task::reduction;
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  int resamples = 0;
};

CorrelationReport correlate_surprisal(const GoldSet& gold, std::span<const SurprisalRecord> surprisal,
                                      int resamples = 1000, std::uint64_t seed = 0, unsigned jobs = 1);
nlohmann::json to_json(const CorrelationReport& report);

// ---------------------------------------------------------------------------
// Winners table

enum class Direction { higher_better, lower_better };

/// One metric for both compared models over the same folds.
struct MetricEntry {
  Language language = Language::en;
  std::string task;       // "reduction", "prominence" or "both"
  std::string criterion;  // "FT", "ppl", "cor"
  std::map<std::string, std::vector<double>> folds;  // model name -> per-fold values
};

/// FT: higher is better; ppl: lower; cor: lower for reduction, higher for prominence.
Direction criterion_direction(std::string_view criterion, std::string_view task);

struct WinnersRow {
  Language language = Language::en;
  std::string task;  // "both" pools reduction and prominence
};

/// English both, French both, Mandarin reduction, Mandarin prominence.
std::vector<WinnersRow> default_winner_rows();
inline const std::vector<std::string> kWinnerCriteria = {"FT", "ppl", "cor"};

struct WinnersTable {
  std::vector<std::string> models;  // [a, b]
  std::vector<WinnersRow> rows;
  std::vector<std::string> criteria;
  std::vector<std::vector<std::string>> cells;  // winner name, "n.s." or "" when missing
};

/// Per cell: pooled per-fold advantages of models[0] over models[1]
/// (sign-adjusted by direction), paired bootstrap of the mean; "n.s." when
/// the 95% interval contains 0.
WinnersTable winners_table(std::span<const MetricEntry> entries, const std::vector<std::string>& models,
                           const std::vector<WinnersRow>& rows = default_winner_rows(), int resamples = 1000,
                           std::uint64_t seed = 0);
struct WinnersInput {
  std::vector<std::string> models;
  std::vector<MetricEntry> entries;
};
/// `{"models": [a, b], "entries": [{"language", "task", "criterion", "folds": {model: [...]}}]}`
WinnersInput winners_input_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WinnersTable& table);
std::string format_winners_table(const WinnersTable& table);

// ---------------------------------------------------------------------------
// Word-level error analysis

struct WordRate {
  std::string word;
  std::size_t count = 0;
  double gold_rate = 0.0;
  double pred_rate = 0.0;
  double difference = 0.0;  // pred - gold
};

struct RateDiffTable {
  std::size_t min_count = 50;
  std::vector<WordRate> words;   // by difference descending, then word
  std::vector<WordRate> top;     // most over-predicted
  std::vector<WordRate> bottom;  // most under-predicted, most negative first
};

RateDiffTable rate_difference(const GoldSet& gold, const PredictionSet& pred, const Normalizer& normalize,
                              std::size_t min_count = 50, std::size_t k = 5);
nlohmann::json to_json(const RateDiffTable& table);

struct CurveBin {
  int bin = 0;
  double z_low = 0.0;
  double z_high = 0.0;
  double z_mean = 0.0;  // token-weighted
  std::size_t tokens = 0;
  double gold_rate = 0.0;
  double pred_rate = 0.0;
};

/// Label rates against z-scored log frequency (z over word types, counts
/// from the gold tokens themselves unless `lexicon` is given), in up to
/// `bins` equal-population bins; tokens of one type never straddle bins.
std::vector<CurveBin> frequency_curve(const GoldSet& gold, const PredictionSet& pred, const Normalizer& normalize,
                                      const std::map<std::string, std::size_t>* lexicon = nullptr, int bins = 20);
std::string curve_to_csv(std::span<const CurveBin> curve);

}  // namespace prosobench
