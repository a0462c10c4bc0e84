#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace prosobench {

/// Tolerance used for every time comparison (corpus files carry <= 6 decimals).
inline constexpr double kTimeTolerance = 1e-6;

enum class Language { en, fr, zh };

std::string_view to_string(Language lang);
Language parse_language(std::string_view s);

struct Segment {
  std::string label;
  double t_start = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_start; }
  bool operator==(const Segment&) const = default;
};

struct Syllable {
  std::vector<Segment> segments;
  double t_start = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_start; }
  bool operator==(const Syllable&) const = default;
};

struct WordToken {
  std::string orthography;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<Segment> segments;
  std::optional<std::vector<Syllable>> syllables;
  std::string speaker_id;
  int utterance_index = 0;
  int token_index = 0;

  double duration() const { return t_end - t_start; }
  bool operator==(const WordToken&) const = default;
};

struct Utterance {
  std::string speaker_id;
  int index = 0;
  std::vector<WordToken> tokens;

  bool operator==(const Utterance&) const = default;
};

struct Recording {
  std::string id;
  std::set<std::string> speaker_ids;
  std::optional<std::string> audio_ref;
  std::vector<Utterance> utterances;

  std::size_t token_count() const;
  bool operator==(const Recording&) const = default;
};

struct AlignedCorpus {
  Language language = Language::en;
  std::vector<Recording> recordings;

  std::size_t token_count() const;
  bool operator==(const AlignedCorpus&) const = default;
};

/// Key identifying one benchmark token across every interchange file.
struct Provenance {
  std::string speaker;
  int utterance = 0;
  int index = 0;

  auto operator<=>(const Provenance&) const = default;
  bool operator==(const Provenance&) const = default;
};

inline Provenance provenance_of(const WordToken& t) {
  return {t.speaker_id, t.utterance_index, t.token_index};
}

std::string to_string(const Provenance& p);

/// Renumbers utterances so each speaker's utterances carry consecutive
/// ordinals across all recordings (in corpus order), and tokens carry their
/// position within the utterance. Makes provenance triples corpus-unique.
void number_utterances(AlignedCorpus& corpus);

/// Calls `fn` for every token in corpus order.
template <typename Fn>
void for_each_token(const AlignedCorpus& corpus, Fn&& fn) {
  for (const auto& rec : corpus.recordings)
    for (const auto& utt : rec.utterances)
      for (const auto& tok : utt.tokens) fn(rec, utt, tok);
}

// ---------------------------------------------------------------------------
// Validation

enum class FindingKind {
  EmptyCorpus,
  DuplicateRecordingId,
  ZeroDuration,
  EmptyLabel,
  InvalidSegment,
  SegmentOutsideWord,
  SegmentsExceedWord,
  SegmentOverlap,
  InvalidSyllable,
  SyllableOutsideWord,
  UnknownSpeaker,
  Overlap,
  NonIncreasingStart,
  DuplicateProvenance,
};

std::string_view to_string(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::string recording;
  std::string speaker;
  int utterance = -1;
  int token = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  std::size_t count(FindingKind kind) const;
};

/// Checks every corpus invariant; never throws.
ValidationReport validate(const AlignedCorpus& corpus);

// ---------------------------------------------------------------------------
// Orthography normalization for word-level analyses.

using Normalizer = std::function<std::string(std::string_view)>;

/// Lowercases (ASCII and Latin-1 range of UTF-8) and deletes apostrophes
/// (' and U+2019), so "You're" -> "youre".
std::string normalize_latin(std::string_view word);

/// en/fr: normalize_latin; zh: identity.
Normalizer normalizer_for(Language lang);

}  // namespace prosobench
