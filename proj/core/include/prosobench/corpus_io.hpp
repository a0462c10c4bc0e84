#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prosobench/corpus.hpp"

namespace prosobench {

/// Default labels treated as pauses/silence in interval tiers.
std::set<std::string> default_pause_labels();

/// Tier names for one speaker inside a TextGrid.
struct TierMap {
  std::string speaker_id = "spk";
  std::string word_tier = "words";
  std::string phone_tier = "phones";
  std::optional<std::string> syllable_tier;
};

struct TextGridOptions {
  std::vector<TierMap> speakers = {TierMap{}};
  std::set<std::string> pause_labels = default_pause_labels();
};

/// Parses a long-format ("ooTextFile") Praat TextGrid. Words separated by
/// pause intervals form utterances; phones and syllables attach to the word
/// containing their midpoint (segments to syllables likewise).
Recording parse_textgrid(std::string_view text, const TextGridOptions& options,
                         std::string recording_id = "recording");

struct BuckeyeOptions {
  /// Empty: derived from the `signal` header line (first three characters).
  std::string speaker_id;
  std::string recording_id;
};

/// Parses a Buckeye `.words` / `.phones` pair. Non-speech entries (labels
/// starting with '<' or '{') are dropped and delimit utterances; phones are
/// attached to the word that strictly contains them.
Recording parse_buckeye(std::string_view words_text, std::string_view phones_text,
                        const BuckeyeOptions& options = {});

/// Header of the aligned interchange TSV.
inline constexpr std::string_view kAlignedTsvHeader = "speaker\tutt\tword\tt_start\tt_end\tsegs\tsyls";

/// Parses the aligned interchange TSV. Rows are grouped into utterances by
/// (speaker, utt) in order of first appearance.
Recording parse_aligned_tsv(std::string_view text, std::string recording_id = "recording");

/// Inverse of parse_aligned_tsv.
std::string emit_aligned_tsv(const Recording& recording);

}  // namespace prosobench
