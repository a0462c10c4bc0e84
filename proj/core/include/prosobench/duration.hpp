#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosobench/corpus.hpp"
#include "prosobench/histogram.hpp"

namespace prosobench {

/// Lower bound applied to every per-syllable prediction.
inline constexpr double kMinSyllableDuration = 0.02;

/// Relative token-count imbalance tolerated between the two halves.
inline constexpr double kSplitTolerance = 0.10;

/// Reduction thresholds on actual/expected: 0.5 for en and fr, 0.6 for zh.
double default_reduction_threshold(Language lang);

struct SplitResult {
  AlignedCorpus first;
  AlignedCorpus second;
  std::size_t first_tokens = 0;
  std::size_t second_tokens = 0;
  /// |first - second| / mean(first, second)
  double imbalance = 0.0;
  bool within_tolerance = false;
  std::uint64_t seed = 0;
};

/// Splits recordings into two halves with the best achievable token balance.
/// Recording order is permuted by `seed` first, so ties between equally
/// balanced partitions are resolved by the seed. Exhaustive for up to 20
/// recordings, greedy (largest first, into the lighter half) beyond.
SplitResult split_halves(const AlignedCorpus& corpus, std::uint64_t seed);

struct LabelStat {
  double mean = 0.0;
  std::size_t count = 0;
  bool operator==(const LabelStat&) const = default;
};

struct SegmentDurationTable {
  std::map<std::string, LabelStat> entries;
  /// Mean over every segment of the training half; used for unseen labels.
  double fallback_mean = 0.0;

  double lookup(const std::string& label) const;
  bool operator==(const SegmentDurationTable&) const = default;
};

/// Linear model of syllable duration on the count vector of its phone labels.
struct SyllableDurationModel {
  std::map<std::string, double> coefficients;
  double intercept = 0.0;
  /// Mean squared error of the (clamped) predictions on the training syllables.
  double training_loss = 0.0;
  /// Contribution of a label never seen in training (count-weighted mean coefficient).
  double unseen_coefficient = 0.0;
  std::size_t n_syllables = 0;
  /// True when the design matrix was rank deficient and per-label mean
  /// segment durations were used instead of least squares.
  bool mean_sum_fallback = false;

  double predict_syllable(const Syllable& syllable) const;
  bool operator==(const SyllableDurationModel&) const = default;
};

using DurationModel = std::variant<SegmentDurationTable, SyllableDurationModel>;

enum class DurationVariant { segment_sum, syllable };
std::string_view to_string(DurationVariant v);
DurationVariant parse_duration_variant(std::string_view s);

SegmentDurationTable fit_segment_table(const AlignedCorpus& half);
SyllableDurationModel fit_syllable_model(const AlignedCorpus& half);
DurationModel fit_duration_model(const AlignedCorpus& half, DurationVariant variant);

/// Segment-sum: sum of per-label means. Syllable model: sum over the word's
/// syllables of the clamped per-syllable predictions.
double expected_duration(const WordToken& token, const SegmentDurationTable& table);
double expected_duration(const WordToken& token, const SyllableDurationModel& model);
double expected_duration(const WordToken& token, const DurationModel& model);

struct ReductionRecord {
  Provenance provenance;
  std::string word;
  double actual = 0.0;
  double expected = 0.0;
  double ratio = 0.0;
  bool reduced = false;
};

struct Exclusion {
  Provenance provenance;
  std::string word;
  std::string reason;
};

struct ReductionResult {
  std::vector<ReductionRecord> records;
  std::vector<Exclusion> excluded;
};

/// Labels every token of `half` with ratio = actual/expected and
/// reduced = ratio < threshold. Tokens whose expected duration cannot be
/// computed, or is not positive, go to the exclusion log.
ReductionResult label_reductions(const AlignedCorpus& half, const DurationModel& model, double threshold,
                                 unsigned jobs = 1);

struct ReductionRun {
  SplitResult split;
  DurationModel model_first;   // fitted on split.first, labels split.second
  DurationModel model_second;  // fitted on split.second, labels split.first
  ReductionResult result;      // in corpus order
};

/// Split, fit on each half, label the opposite half, merge in corpus order.
ReductionRun reduce_corpus(const AlignedCorpus& corpus, DurationVariant variant, double threshold, std::uint64_t seed,
                           unsigned jobs = 1);

/// Bins of width 0.05 over [0, 3] plus overflow.
HistogramReport ratio_histogram(const std::vector<ReductionRecord>& records, double threshold, double width = 0.05,
                                double upper = 3.0);

nlohmann::json to_json(const DurationModel& model);
DurationModel duration_model_from_json(const nlohmann::json& j);

inline constexpr std::string_view kReductionTsvHeader = "speaker\tutt\tidx\tword\tactual\texpected\tratio\tlabel";
std::string emit_reduction_tsv(const std::vector<ReductionRecord>& records);
std::string emit_exclusions_tsv(const std::vector<Exclusion>& excluded);

}  // namespace prosobench
