#include "prosobench/corpus_io.hpp"

#include <algorithm>
#include <map>

#include "prosobench/error.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

std::set<std::string> default_pause_labels() { return {"", "#", "sil", "sp"}; }

namespace {

// ---------------------------------------------------------------------------
// TextGrid

struct Interval {
  double xmin = 0.0;
  double xmax = 0.0;
  std::string text;
  std::size_t line = 0;
};

struct Tier {
  std::string name;
  bool is_interval = true;
  std::vector<Interval> intervals;
};

class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : lines_(text::lines(text)) {}

  bool at_end() {
    skip_blank();
    return pos_ >= lines_.size();
  }

  /// Next non-blank line, trimmed, with its 1-based number.
  std::pair<std::string_view, std::size_t> next(std::string_view expecting) {
    skip_blank();
    if (pos_ >= lines_.size()) throw ParseError("unexpected end of file, expected " + std::string(expecting), lines_.size());
    auto line = text::trim(lines_[pos_]);
    ++pos_;
    return {line, pos_};
  }

  /// Reads `key = value` and returns the raw value; quoted strings may
  /// continue across lines.
  std::pair<std::string, std::size_t> field(std::string_view key) {
    auto [line, no] = next(key);
    if (!text::starts_with(line, key)) throw ParseError("expected '" + std::string(key) + "'", no);
    auto rest = text::trim(line.substr(key.size()));
    if (rest.empty() || rest.front() != '=') throw ParseError("expected '=' after '" + std::string(key) + "'", no);
    rest = text::trim(rest.substr(1));
    if (rest.empty() || rest.front() != '"') return {std::string(rest), no};
    return {read_string(rest, no), no};
  }

  double number(std::string_view key) {
    auto [value, no] = field(key);
    auto v = text::parse_double(value);
    if (!v) throw ParseError("invalid number '" + value + "' for '" + std::string(key) + "'", no);
    return *v;
  }

  long long integer(std::string_view key) {
    auto [value, no] = field(key);
    auto v = text::parse_int(value);
    if (!v || *v < 0) throw ParseError("invalid count '" + value + "' for '" + std::string(key) + "'", no);
    return *v;
  }

  /// Expects a structural line starting with `prefix` (e.g. "item [").
  std::size_t expect_prefix(std::string_view prefix) {
    auto [line, no] = next(prefix);
    if (!text::starts_with(line, prefix)) throw ParseError("expected '" + std::string(prefix) + "'", no);
    return no;
  }

 private:
  void skip_blank() {
    while (pos_ < lines_.size() && text::trim(lines_[pos_]).empty()) ++pos_;
  }

  // `first` starts at the opening quote. Doubled quotes are literal quotes.
  std::string read_string(std::string_view first, std::size_t no) {
    std::string out;
    std::string_view cur = first.substr(1);
    while (true) {
      for (std::size_t i = 0; i < cur.size(); ++i) {
        if (cur[i] == '"') {
          if (i + 1 < cur.size() && cur[i + 1] == '"') {
            out.push_back('"');
            ++i;
            continue;
          }
          return out;
        }
        out.push_back(cur[i]);
      }
      if (pos_ >= lines_.size()) throw ParseError("unterminated string", no);
      out.push_back('\n');
      cur = lines_[pos_++];
    }
  }

  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

std::vector<Tier> read_textgrid_tiers(std::string_view text) {
  LineCursor cur(text);
  {
    auto [line, no] = cur.next("file type");
    if (line != "File type = \"ooTextFile\"") throw ParseError("not a long-format TextGrid (File type)", no);
  }
  {
    auto [line, no] = cur.next("object class");
    if (line != "Object class = \"TextGrid\"") throw ParseError("not a TextGrid (Object class)", no);
  }
  cur.number("xmin");
  cur.number("xmax");
  {
    auto [line, no] = cur.next("tiers?");
    if (!text::starts_with(line, "tiers?")) throw ParseError("expected 'tiers? <exists>'", no);
    if (line.find("<exists>") == std::string_view::npos) return {};
  }
  const auto n_tiers = cur.integer("size");
  cur.expect_prefix("item []:");

  std::vector<Tier> tiers;
  for (long long t = 0; t < n_tiers; ++t) {
    cur.expect_prefix("item [");
    Tier tier;
    auto [cls, cls_line] = cur.field("class");
    if (cls == "IntervalTier") {
      tier.is_interval = true;
    } else if (cls == "TextTier") {
      tier.is_interval = false;
    } else {
      throw ParseError("unknown tier class '" + cls + "'", cls_line);
    }
    tier.name = cur.field("name").first;
    cur.number("xmin");
    cur.number("xmax");
    if (tier.is_interval) {
      const auto n = cur.integer("intervals: size");
      tier.intervals.reserve(static_cast<std::size_t>(n));
      for (long long i = 0; i < n; ++i) {
        Interval iv;
        iv.line = cur.expect_prefix("intervals [");
        iv.xmin = cur.number("xmin");
        iv.xmax = cur.number("xmax");
        iv.text = cur.field("text").first;
        tier.intervals.push_back(std::move(iv));
      }
    } else {
      const auto n = cur.integer("points: size");
      for (long long i = 0; i < n; ++i) {
        cur.expect_prefix("points [");
        cur.number("number");
        cur.field("mark");
      }
    }
    tiers.push_back(std::move(tier));
  }
  return tiers;
}

const Tier& find_tier(const std::vector<Tier>& tiers, const std::string& name) {
  for (const auto& t : tiers)
    if (t.is_interval && t.name == name) return t;
  throw MissingTier("interval tier '" + name + "' not found");
}

bool is_pause(const std::set<std::string>& pauses, std::string_view label) {
  return pauses.contains(std::string(text::trim(label)));
}

/// Index of the span [start, end) containing t, or npos.
template <typename T>
std::size_t containing(const std::vector<T>& spans, double t) {
  auto it = std::upper_bound(spans.begin(), spans.end(), t,
                             [](double v, const T& s) { return v < s.t_start; });
  if (it == spans.begin()) return std::string::npos;
  --it;
  if (t < it->t_end) return static_cast<std::size_t>(it - spans.begin());
  return std::string::npos;
}

}  // namespace

Recording parse_textgrid(std::string_view text, const TextGridOptions& options, std::string recording_id) {
  const auto tiers = read_textgrid_tiers(text);
  for (const auto& tier : tiers) {
    for (const auto& iv : tier.intervals) {
      if (iv.xmax <= iv.xmin)
        throw InvalidInterval("line " + std::to_string(iv.line) + ": tier '" + tier.name + "' interval has xmax <= xmin");
    }
  }

  Recording rec;
  rec.id = std::move(recording_id);
  for (const auto& map : options.speakers) {
    rec.speaker_ids.insert(map.speaker_id);
    const Tier& words = find_tier(tiers, map.word_tier);
    const Tier& phones = find_tier(tiers, map.phone_tier);
    const Tier* syllables = map.syllable_tier ? &find_tier(tiers, *map.syllable_tier) : nullptr;

    std::vector<WordToken> tokens;
    std::vector<std::size_t> utt_of_token;
    std::size_t utt = 0;
    bool in_utt = false;
    for (const auto& iv : words.intervals) {
      if (is_pause(options.pause_labels, iv.text)) {
        if (in_utt) ++utt;
        in_utt = false;
        continue;
      }
      in_utt = true;
      WordToken tok;
      tok.orthography = std::string(text::trim(iv.text));
      tok.t_start = iv.xmin;
      tok.t_end = iv.xmax;
      tok.speaker_id = map.speaker_id;
      tokens.push_back(std::move(tok));
      utt_of_token.push_back(utt);
    }

    std::vector<Syllable> syls;
    if (syllables) {
      for (const auto& iv : syllables->intervals) {
        if (is_pause(options.pause_labels, iv.text)) continue;
        syls.push_back({{}, iv.xmin, iv.xmax});
      }
    }
    for (const auto& iv : phones.intervals) {
      if (is_pause(options.pause_labels, iv.text)) continue;
      Segment seg{std::string(text::trim(iv.text)), iv.xmin, iv.xmax};
      const double mid = 0.5 * (iv.xmin + iv.xmax);
      if (auto w = containing(tokens, mid); w != std::string::npos) tokens[w].segments.push_back(seg);
      if (syllables) {
        if (auto s = containing(syls, mid); s != std::string::npos) syls[s].segments.push_back(seg);
      }
    }
    if (syllables) {
      for (auto& syl : syls) {
        const double mid = 0.5 * (syl.t_start + syl.t_end);
        if (auto w = containing(tokens, mid); w != std::string::npos) {
          auto& dst = tokens[w].syllables;
          if (!dst) dst.emplace();
          dst->push_back(std::move(syl));
        }
      }
    }

    std::size_t first_new = rec.utterances.size();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::size_t u = first_new + utt_of_token[i];
      while (rec.utterances.size() <= u) {
        Utterance next;
        next.speaker_id = map.speaker_id;
        next.index = static_cast<int>(rec.utterances.size() - first_new);
        rec.utterances.push_back(std::move(next));
      }
      auto& dst = rec.utterances[u];
      tokens[i].utterance_index = dst.index;
      tokens[i].token_index = static_cast<int>(dst.tokens.size());
      dst.tokens.push_back(std::move(tokens[i]));
    }
    // Utterance ordinals are contiguous per speaker; pauses at the very end
    // may leave no trailing empty utterance, but leading pauses never create one.
    std::erase_if(rec.utterances, [](const Utterance& u) { return u.tokens.empty(); });
  }

  std::stable_sort(rec.utterances.begin(), rec.utterances.end(), [](const Utterance& a, const Utterance& b) {
    return a.tokens.front().t_start < b.tokens.front().t_start;
  });
  return rec;
}

// ---------------------------------------------------------------------------
// Buckeye

namespace {

struct BuckeyeRow {
  double end = 0.0;
  std::string label;
  std::size_t line = 0;
};

struct BuckeyeFile {
  std::string signal;
  std::vector<BuckeyeRow> rows;
};

BuckeyeFile read_buckeye(std::string_view text, bool words) {
  BuckeyeFile file;
  const auto all = text::lines(text);
  std::size_t i = 0;
  bool saw_hash = false;
  for (; i < all.size(); ++i) {
    auto line = text::trim(all[i]);
    if (line == "#") {
      saw_hash = true;
      ++i;
      break;
    }
    if (text::starts_with(line, "signal ")) file.signal = std::string(text::trim(line.substr(7)));
  }
  if (!saw_hash) throw ParseError("missing '#' header terminator", all.empty() ? 1 : all.size());

  for (; i < all.size(); ++i) {
    auto line = text::trim(all[i]);
    if (line.empty()) continue;
    const std::size_t no = i + 1;
    auto sp = line.find_first_of(" \t");
    auto time_str = line.substr(0, sp);
    auto t = text::parse_double(time_str);
    if (!t) throw ParseError("invalid end time '" + std::string(time_str) + "'", no);
    std::string_view rest = sp == std::string_view::npos ? std::string_view{} : text::trim(line.substr(sp));
    // color column
    auto sp2 = rest.find_first_of(" \t");
    rest = sp2 == std::string_view::npos ? std::string_view{} : text::trim(rest.substr(sp2));
    auto semi = rest.find(';');
    std::string_view label = text::trim(semi == std::string_view::npos ? rest : rest.substr(0, semi));
    if (!words) {
      // phone rows occasionally carry trailing annotations after whitespace
      auto ws = label.find_first_of(" \t");
      if (ws != std::string_view::npos) label = label.substr(0, ws);
    }
    file.rows.push_back({*t, std::string(label), no});
  }
  return file;
}

bool is_nonspeech(std::string_view label) { return label.empty() || label.front() == '<' || label.front() == '{'; }

}  // namespace

Recording parse_buckeye(std::string_view words_text, std::string_view phones_text, const BuckeyeOptions& options) {
  const auto words = read_buckeye(words_text, true);
  const auto phones = read_buckeye(phones_text, false);
  if (words.rows.empty() || phones.rows.empty())
    throw AlignmentError("unpaired Buckeye files: " + std::string(words.rows.empty() ? ".words" : ".phones") +
                         " has no entries");
  if (!words.signal.empty() && !phones.signal.empty() && words.signal != phones.signal)
    throw AlignmentError("unpaired Buckeye files: signal '" + words.signal + "' vs '" + phones.signal + "'");

  Recording rec;
  rec.id = !options.recording_id.empty() ? options.recording_id : (!words.signal.empty() ? words.signal : "recording");
  std::string speaker = options.speaker_id;
  if (speaker.empty()) speaker = words.signal.size() >= 3 ? words.signal.substr(0, 3) : "spk";
  rec.speaker_ids.insert(speaker);

  std::vector<WordToken> tokens;
  std::vector<int> utt_of;
  int utt = 0;
  bool in_utt = false;
  double prev = 0.0;
  for (const auto& row : words.rows) {
    if (row.end < prev - kTimeTolerance)
      throw InvalidInterval("line " + std::to_string(row.line) + ": .words end time decreases");
    const double start = prev;
    prev = row.end;
    if (is_nonspeech(row.label)) {
      if (in_utt) ++utt;
      in_utt = false;
      continue;
    }
    in_utt = true;
    WordToken tok;
    tok.orthography = row.label;
    tok.t_start = start;
    tok.t_end = row.end;
    tok.speaker_id = speaker;
    tokens.push_back(std::move(tok));
    utt_of.push_back(utt);
  }
  const double last_word_end = prev;

  prev = 0.0;
  std::size_t w = 0;
  for (const auto& row : phones.rows) {
    if (row.end < prev - kTimeTolerance)
      throw InvalidInterval("line " + std::to_string(row.line) + ": .phones end time decreases");
    if (row.end > last_word_end + kTimeTolerance)
      throw AlignmentError("line " + std::to_string(row.line) + ": .phones end time " + text::format_double(row.end) +
                           " beyond last .words end " + text::format_double(last_word_end));
    const double start = prev;
    prev = row.end;
    if (row.end <= start + kTimeTolerance || is_nonspeech(row.label)) continue;
    while (w < tokens.size() && tokens[w].t_end < row.end - kTimeTolerance) ++w;
    if (w < tokens.size() && start >= tokens[w].t_start - kTimeTolerance && row.end <= tokens[w].t_end + kTimeTolerance)
      tokens[w].segments.push_back({row.label, start, row.end});
  }

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (rec.utterances.empty() || rec.utterances.back().index != utt_of[i]) {
      Utterance u;
      u.speaker_id = speaker;
      u.index = utt_of[i];
      rec.utterances.push_back(std::move(u));
    }
    auto& dst = rec.utterances.back();
    tokens[i].utterance_index = dst.index;
    tokens[i].token_index = static_cast<int>(dst.tokens.size());
    dst.tokens.push_back(std::move(tokens[i]));
  }
  // Renumber to contiguous ordinals.
  for (std::size_t u = 0; u < rec.utterances.size(); ++u) {
    rec.utterances[u].index = static_cast<int>(u);
    for (auto& t : rec.utterances[u].tokens) t.utterance_index = static_cast<int>(u);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Aligned TSV

Recording parse_aligned_tsv(std::string_view text, std::string recording_id) {
  const auto all = text::lines(text);
  if (all.empty() || all.front() != kAlignedTsvHeader) throw ParseError("aligned TSV header mismatch", 1);

  Recording rec;
  rec.id = std::move(recording_id);
  std::map<std::pair<std::string, int>, std::size_t> utt_slot;

  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto line = all[i];
    if (line.empty()) continue;
    const std::size_t no = i + 1;
    auto cols = text::split(line, '\t');
    if (cols.size() == 6) cols.emplace_back();
    if (cols.size() != 7) throw ParseError("row " + std::to_string(i) + ": expected 7 columns", no);

    auto utt = text::parse_int(cols[1]);
    auto t0 = text::parse_double(cols[3]);
    auto t1 = text::parse_double(cols[4]);
    if (!utt) throw ParseError("row " + std::to_string(i) + ": invalid utt '" + std::string(cols[1]) + "'", no);
    if (!t0 || !t1) throw ParseError("row " + std::to_string(i) + ": invalid time", no);

    WordToken tok;
    tok.speaker_id = std::string(cols[0]);
    tok.utterance_index = static_cast<int>(*utt);
    tok.orthography = std::string(cols[2]);
    tok.t_start = *t0;
    tok.t_end = *t1;

    if (!cols[5].empty()) {
      for (auto triple : text::split(cols[5], '|')) {
        auto c2 = triple.rfind(':');
        auto c1 = c2 == std::string_view::npos || c2 == 0 ? std::string_view::npos : triple.rfind(':', c2 - 1);
        if (c1 == std::string_view::npos)
          throw ParseError("row " + std::to_string(i) + ": segment '" + std::string(triple) + "' is not label:start:end", no);
        auto s0 = text::parse_double(triple.substr(c1 + 1, c2 - c1 - 1));
        auto s1 = text::parse_double(triple.substr(c2 + 1));
        if (!s0 || !s1) throw ParseError("row " + std::to_string(i) + ": invalid segment time in '" + std::string(triple) + "'", no);
        tok.segments.push_back({std::string(triple.substr(0, c1)), *s0, *s1});
      }
    }
    if (!cols[6].empty()) {
      std::vector<Syllable> syls;
      for (auto group : text::split(cols[6], '|')) {
        Syllable syl;
        for (auto idx_str : text::split(group, ',')) {
          auto idx = text::parse_int(idx_str);
          if (!idx || *idx < 0 || static_cast<std::size_t>(*idx) >= tok.segments.size())
            throw ParseError("row " + std::to_string(i) + ": invalid syllable segment index '" + std::string(idx_str) + "'", no);
          syl.segments.push_back(tok.segments[static_cast<std::size_t>(*idx)]);
        }
        syl.t_start = syl.segments.front().t_start;
        syl.t_end = syl.segments.back().t_end;
        syls.push_back(std::move(syl));
      }
      tok.syllables = std::move(syls);
    }

    rec.speaker_ids.insert(tok.speaker_id);
    auto key = std::make_pair(tok.speaker_id, tok.utterance_index);
    auto [it, inserted] = utt_slot.try_emplace(key, rec.utterances.size());
    if (inserted) {
      Utterance u;
      u.speaker_id = tok.speaker_id;
      u.index = tok.utterance_index;
      rec.utterances.push_back(std::move(u));
    }
    auto& dst = rec.utterances[it->second];
    tok.token_index = static_cast<int>(dst.tokens.size());
    dst.tokens.push_back(std::move(tok));
  }
  return rec;
}

std::string emit_aligned_tsv(const Recording& recording) {
  std::string out(kAlignedTsvHeader);
  out += '\n';
  for (const auto& utt : recording.utterances) {
    for (const auto& tok : utt.tokens) {
      out += tok.speaker_id;
      out += '\t';
      out += std::to_string(utt.index);
      out += '\t';
      out += tok.orthography;
      out += '\t';
      out += text::format_double(tok.t_start);
      out += '\t';
      out += text::format_double(tok.t_end);
      out += '\t';
      for (std::size_t i = 0; i < tok.segments.size(); ++i) {
        if (i > 0) out += '|';
        const auto& s = tok.segments[i];
        out += s.label + ":" + text::format_double(s.t_start) + ":" + text::format_double(s.t_end);
      }
      out += '\t';
      if (tok.syllables) {
        std::size_t next_seg = 0;
        for (std::size_t k = 0; k < tok.syllables->size(); ++k) {
          if (k > 0) out += '|';
          const auto& syl = (*tok.syllables)[k];
          for (std::size_t j = 0; j < syl.segments.size(); ++j) {
            // Syllable segments are drawn in order from the token's segments.
            std::size_t idx = next_seg;
            while (idx < tok.segments.size() && !(tok.segments[idx] == syl.segments[j])) ++idx;
            if (idx == tok.segments.size())
              throw AlignmentError("syllable segment '" + syl.segments[j].label + "' not among token segments of '" +
                                   tok.orthography + "'");
            if (j > 0) out += ',';
            out += std::to_string(idx);
            next_seg = idx + 1;
          }
        }
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace prosobench
