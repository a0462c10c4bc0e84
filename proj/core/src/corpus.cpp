#include "prosobench/corpus.hpp"

#include <map>

#include "prosobench/error.hpp"

namespace prosobench {

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::en: return "en";
    case Language::fr: return "fr";
    case Language::zh: return "zh";
  }
  return "?";
}

Language parse_language(std::string_view s) {
  if (s == "en") return Language::en;
  if (s == "fr") return Language::fr;
  if (s == "zh") return Language::zh;
  throw InvalidArgument("corpus-io", "unknown language '" + std::string(s) + "'");
}

std::string to_string(const Provenance& p) {
  return p.speaker + "/" + std::to_string(p.utterance) + "/" + std::to_string(p.index);
}

std::size_t Recording::token_count() const {
  std::size_t n = 0;
  for (const auto& u : utterances) n += u.tokens.size();
  return n;
}

std::size_t AlignedCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& r : recordings) n += r.token_count();
  return n;
}

void number_utterances(AlignedCorpus& corpus) {
  std::map<std::string, int> next;
  for (auto& rec : corpus.recordings) {
    for (auto& utt : rec.utterances) {
      utt.index = next[utt.speaker_id]++;
      for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
        utt.tokens[i].speaker_id = utt.speaker_id;
        utt.tokens[i].utterance_index = utt.index;
        utt.tokens[i].token_index = static_cast<int>(i);
      }
    }
  }
}

std::string_view to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::EmptyCorpus: return "EmptyCorpus";
    case FindingKind::DuplicateRecordingId: return "DuplicateRecordingId";
    case FindingKind::ZeroDuration: return "ZeroDuration";
    case FindingKind::EmptyLabel: return "EmptyLabel";
    case FindingKind::InvalidSegment: return "InvalidSegment";
    case FindingKind::SegmentOutsideWord: return "SegmentOutsideWord";
    case FindingKind::SegmentsExceedWord: return "SegmentsExceedWord";
    case FindingKind::SegmentOverlap: return "SegmentOverlap";
    case FindingKind::InvalidSyllable: return "InvalidSyllable";
    case FindingKind::SyllableOutsideWord: return "SyllableOutsideWord";
    case FindingKind::UnknownSpeaker: return "UnknownSpeaker";
    case FindingKind::Overlap: return "Overlap";
    case FindingKind::NonIncreasingStart: return "NonIncreasingStart";
    case FindingKind::DuplicateProvenance: return "DuplicateProvenance";
  }
  return "?";
}

std::size_t ValidationReport::count(FindingKind kind) const {
  std::size_t n = 0;
  for (const auto& f : findings) n += f.kind == kind;
  return n;
}

namespace {

bool within(double t0, double t1, double outer0, double outer1) {
  return t0 >= outer0 - kTimeTolerance && t1 <= outer1 + kTimeTolerance;
}

void check_segment_run(const std::vector<Segment>& segs, const auto& emit) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (s.label.empty()) emit(FindingKind::EmptyLabel, "segment " + std::to_string(i) + " has empty label");
    if (s.t_end <= s.t_start + kTimeTolerance)
      emit(FindingKind::InvalidSegment, "segment " + std::to_string(i) + " has non-positive duration");
    if (i > 0 && s.t_start < segs[i - 1].t_end - kTimeTolerance)
      emit(FindingKind::SegmentOverlap, "segment " + std::to_string(i) + " overlaps its predecessor");
  }
}

}  // namespace

ValidationReport validate(const AlignedCorpus& corpus) {
  ValidationReport report;
  if (corpus.recordings.empty()) {
    report.findings.push_back({FindingKind::EmptyCorpus, "", "", -1, -1, "corpus has no recordings"});
    return report;
  }

  std::set<std::string> rec_ids;
  std::set<Provenance> seen;
  for (const auto& rec : corpus.recordings) {
    if (!rec_ids.insert(rec.id).second)
      report.findings.push_back(
          {FindingKind::DuplicateRecordingId, rec.id, "", -1, -1, "recording id '" + rec.id + "' repeated"});

    std::map<std::string, const WordToken*> last_by_speaker;
    for (const auto& utt : rec.utterances) {
      for (const auto& tok : utt.tokens) {
        auto emit = [&](FindingKind k, const std::string& msg) {
          report.findings.push_back({k, rec.id, tok.speaker_id, tok.utterance_index, tok.token_index, msg});
        };

        if (tok.orthography.empty()) emit(FindingKind::EmptyLabel, "token has empty orthography");
        if (tok.duration() <= kTimeTolerance) emit(FindingKind::ZeroDuration, "token duration is not positive");
        if (!rec.speaker_ids.contains(tok.speaker_id))
          emit(FindingKind::UnknownSpeaker, "speaker '" + tok.speaker_id + "' not declared by recording");
        if (!seen.insert(provenance_of(tok)).second)
          emit(FindingKind::DuplicateProvenance, "provenance " + to_string(provenance_of(tok)) + " repeated");

        check_segment_run(tok.segments, emit);
        double seg_sum = 0.0;
        for (const auto& s : tok.segments) {
          seg_sum += s.duration();
          if (!within(s.t_start, s.t_end, tok.t_start, tok.t_end))
            emit(FindingKind::SegmentOutsideWord, "segment '" + s.label + "' outside word span");
        }
        if (seg_sum > tok.duration() + kTimeTolerance)
          emit(FindingKind::SegmentsExceedWord, "segment durations exceed word duration");

        if (tok.syllables) {
          for (std::size_t i = 0; i < tok.syllables->size(); ++i) {
            const auto& syl = (*tok.syllables)[i];
            const std::string where = "syllable " + std::to_string(i);
            if (syl.t_end <= syl.t_start + kTimeTolerance)
              emit(FindingKind::InvalidSyllable, where + " has non-positive duration");
            if (!within(syl.t_start, syl.t_end, tok.t_start, tok.t_end))
              emit(FindingKind::SyllableOutsideWord, where + " outside word span");
            for (std::size_t j = 0; j < syl.segments.size(); ++j) {
              const auto& s = syl.segments[j];
              if (!within(s.t_start, s.t_end, syl.t_start, syl.t_end))
                emit(FindingKind::InvalidSyllable, where + " does not contain its segment " + std::to_string(j));
              if (j > 0 && s.t_start > syl.segments[j - 1].t_end + kTimeTolerance)
                emit(FindingKind::InvalidSyllable, where + " segments are not contiguous");
            }
            check_segment_run(syl.segments, emit);
          }
        }

        auto& last = last_by_speaker[tok.speaker_id];
        if (last != nullptr) {
          if (tok.t_start <= last->t_start + kTimeTolerance)
            emit(FindingKind::NonIncreasingStart, "token does not start after its predecessor");
          else if (tok.t_start < last->t_end - kTimeTolerance)
            emit(FindingKind::Overlap, "token overlaps the previous token of the same speaker");
        }
        last = &tok;
      }
    }
  }
  return report;
}

std::string normalize_latin(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    const auto c = static_cast<unsigned char>(word[i]);
    if (c == '\'') continue;
    // U+2019 RIGHT SINGLE QUOTATION MARK = E2 80 99
    if (c == 0xE2 && i + 2 < word.size() && static_cast<unsigned char>(word[i + 1]) == 0x80 &&
        static_cast<unsigned char>(word[i + 2]) == 0x99) {
      i += 2;
      continue;
    }
    if (c < 0x80) {
      out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
      continue;
    }
    // U+00C0..U+00DE (except U+00D7) lowercase by +0x20: C3 80..C3 9E -> C3 A0..C3 BE
    if (c == 0xC3 && i + 1 < word.size()) {
      auto d = static_cast<unsigned char>(word[i + 1]);
      if (d >= 0x80 && d <= 0x9E && d != 0x97) d += 0x20;
      out.push_back(static_cast<char>(c));
      out.push_back(static_cast<char>(d));
      ++i;
      continue;
    }
    out.push_back(static_cast<char>(c));
  }
  return out;
}

Normalizer normalizer_for(Language lang) {
  if (lang == Language::zh) return [](std::string_view w) { return std::string(w); };
  return normalize_latin;
}

}  // namespace prosobench
