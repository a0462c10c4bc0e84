#include "prosobench/benchset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prosobench/error.hpp"
#include "prosobench/rng.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

std::string_view to_string(Task task) { return task == Task::reduction ? "reduction" : "prominence"; }

Task parse_task(std::string_view s) {
  if (s == "reduction") return Task::reduction;
  if (s == "prominence") return Task::prominence;
  throw InvalidArgument("benchset", "unknown task '" + std::string(s) + "'");
}

char to_char(Tag tag) {
  switch (tag) {
    case Tag::B: return 'B';
    case Tag::I: return 'I';
    case Tag::O: return 'O';
  }
  return 'O';
}

Tag parse_tag(std::string_view s) {
  if (s == "B") return Tag::B;
  if (s == "I") return Tag::I;
  if (s == "O") return Tag::O;
  throw InvalidArgument("benchset", "unknown tag '" + std::string(s) + "'");
}

namespace {

/// Column index by header name; npos when absent.
std::size_t column(const std::vector<std::string_view>& header, std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? std::string::npos : static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::vector<LabeledToken> parse_labeled_tsv(std::string_view data) {
  const auto rows = text::lines(data);
  if (rows.empty()) throw ParseError("benchset", "empty record file", 1);
  const auto header = text::split(rows.front(), '\t');
  const std::size_t c_spk = column(header, "speaker"), c_utt = column(header, "utt"), c_idx = column(header, "idx"),
                    c_word = column(header, "word"), c_label = column(header, "label");
  if (c_spk == std::string::npos || c_utt == std::string::npos || c_idx == std::string::npos ||
      c_word == std::string::npos || c_label == std::string::npos)
    throw ParseError("benchset", "record header needs speaker, utt, idx, word and label columns", 1);

  std::vector<LabeledToken> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = text::split(rows[i], '\t');
    if (cols.size() != header.size()) throw ParseError("benchset", "column count differs from header", i + 1);
    auto utt = text::parse_int(cols[c_utt]);
    auto idx = text::parse_int(cols[c_idx]);
    if (!utt || !idx) throw ParseError("benchset", "invalid utt/idx", i + 1);
    if (cols[c_label] != "0" && cols[c_label] != "1") throw ParseError("benchset", "label must be 0 or 1", i + 1);
    out.push_back({{std::string(cols[c_spk]), static_cast<int>(*utt), static_cast<int>(*idx)},
                   std::string(cols[c_word]),
                   cols[c_label] == "1"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Folds

int FoldAssignment::fold(const std::string& speaker) const {
  auto it = fold_of.find(speaker);
  if (it == fold_of.end()) throw FoldError("speaker '" + speaker + "' has no fold");
  return it->second;
}

FoldAssignment make_folds(const std::map<std::string, std::size_t>& speaker_tokens, int k, std::uint64_t seed) {
  if (k < 2) throw FoldError("need at least 2 folds, got " + std::to_string(k));
  if (speaker_tokens.size() < static_cast<std::size_t>(k))
    throw FoldError(std::to_string(speaker_tokens.size()) + " speakers cannot fill " + std::to_string(k) + " folds");

  std::vector<std::pair<std::string, std::size_t>> speakers(speaker_tokens.begin(), speaker_tokens.end());
  std::stable_sort(speakers.begin(), speakers.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
  std::vector<std::size_t> members(static_cast<std::size_t>(k), 0);
  std::map<std::string, int> raw;
  for (const auto& [spk, n] : speakers) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < load.size(); ++f) {
      // empty folds first, so every fold gets a speaker
      const bool better = (members[f] == 0) != (members[best] == 0) ? members[f] == 0 : load[f] < load[best];
      if (better) best = f;
    }
    load[best] += n;
    ++members[best];
    raw[spk] = static_cast<int>(best);
  }

  std::vector<int> relabel(static_cast<std::size_t>(k));
  std::iota(relabel.begin(), relabel.end(), 0);
  Rng rng(seed);
  rng.shuffle(relabel);

  FoldAssignment out;
  out.k = k;
  out.fold_tokens.assign(static_cast<std::size_t>(k), 0);
  for (const auto& [spk, f] : raw) {
    const int g = relabel[static_cast<std::size_t>(f)];
    out.fold_of[spk] = g;
    out.fold_tokens[static_cast<std::size_t>(g)] += speaker_tokens.at(spk);
  }
  const double mean = static_cast<double>(std::accumulate(out.fold_tokens.begin(), out.fold_tokens.end(), std::size_t{0})) / k;
  for (std::size_t n : out.fold_tokens)
    if (mean > 0) out.max_deviation = std::max(out.max_deviation, std::abs(static_cast<double>(n) - mean) / mean);
  return out;
}

FoldAssignment make_folds(const AlignedCorpus& corpus, int k, std::uint64_t seed) {
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : corpus.recordings) {
    for (const auto& spk : rec.speaker_ids) counts.try_emplace(spk, 0);
    for (const auto& utt : rec.utterances) counts[utt.speaker_id] += utt.tokens.size();
  }
  return make_folds(counts, k, seed);
}

nlohmann::json to_json(const FoldAssignment& folds) {
  return {{"k", folds.k},
          {"speakers", folds.fold_of},
          {"fold_tokens", folds.fold_tokens},
          {"max_deviation", folds.max_deviation}};
}

FoldAssignment folds_from_json(const nlohmann::json& j) {
  FoldAssignment f;
  f.k = j.at("k").get<int>();
  f.fold_of = j.at("speakers").get<std::map<std::string, int>>();
  f.fold_tokens = j.at("fold_tokens").get<std::vector<std::size_t>>();
  f.max_deviation = j.at("max_deviation").get<double>();
  return f;
}

// ---------------------------------------------------------------------------
// BIO

std::vector<Tag> encode_bio(const std::vector<bool>& labels) {
  std::vector<Tag> tags(labels.size(), Tag::O);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i]) tags[i] = i > 0 && labels[i - 1] ? Tag::I : Tag::B;
  return tags;
}

std::vector<bool> decode_bio(const std::vector<Tag>& tags) {
  std::vector<bool> labels(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) labels[i] = is_positive(tags[i]);
  return labels;
}

bool is_valid_bio(const std::vector<Tag>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == Tag::I && (i == 0 || tags[i - 1] == Tag::O)) return false;
  return true;
}

std::size_t BioDataset::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

BioDataset emit_bio(std::span<const LabeledToken> tokens, Task task) {
  BioDataset ds;
  ds.task = task;
  std::map<std::pair<std::string, int>, std::size_t> slot;
  std::vector<std::vector<const LabeledToken*>> groups;
  for (const auto& t : tokens) {
    auto [it, inserted] = slot.try_emplace({t.provenance.speaker, t.provenance.utterance}, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&t);
  }
  for (auto& g : groups) {
    std::stable_sort(g.begin(), g.end(), [](const LabeledToken* a, const LabeledToken* b) {
      return a->provenance.index < b->provenance.index;
    });
    std::vector<bool> labels;
    for (const auto* t : g) labels.push_back(t->label);
    const auto tags = encode_bio(labels);
    BioSentence s;
    for (std::size_t i = 0; i < g.size(); ++i) s.tokens.push_back({g[i]->provenance, g[i]->word, tags[i]});
    ds.sentences.push_back(std::move(s));
  }
  return ds;
}

namespace {

void append_sentence(std::string& out, const BioSentence& s) {
  for (const auto& t : s.tokens) {
    out += t.word;
    out += '\t';
    out += to_char(t.tag);
    out += '\n';
  }
  out += '\n';
}

}  // namespace

std::string to_conll(const BioDataset& dataset) {
  std::string out;
  for (const auto& s : dataset.sentences) append_sentence(out, s);
  return out;
}

std::string to_conll(const BioDataset& dataset, const FoldAssignment& folds, int fold) {
  std::string out;
  for (const auto& s : dataset.sentences)
    if (!s.tokens.empty() && folds.fold(s.tokens.front().provenance.speaker) == fold) append_sentence(out, s);
  return out;
}

std::string conll_filename(Task task, Language lang, int fold) {
  return std::string(to_string(task)) + "." + std::string(to_string(lang)) + ".fold" + std::to_string(fold) + ".conll";
}

std::string emit_gold_tsv(const BioDataset& dataset, const FoldAssignment& folds) {
  std::string out(kGoldTsvHeader);
  out += '\n';
  for (const auto& s : dataset.sentences) {
    for (const auto& t : s.tokens) {
      out += t.provenance.speaker + '\t' + std::to_string(t.provenance.utterance) + '\t' +
             std::to_string(t.provenance.index) + '\t' + t.word + '\t' + to_char(t.tag) + '\t' +
             std::to_string(folds.fold(t.provenance.speaker)) + '\n';
    }
  }
  return out;
}

GoldSet parse_gold_tsv(std::string_view data, Task task) {
  const auto rows = text::lines(data);
  if (rows.empty() || rows.front() != kGoldTsvHeader) throw ParseError("benchset", "gold TSV header mismatch", 1);
  GoldSet gold;
  gold.dataset.task = task;
  std::pair<std::string, int> current{"", std::numeric_limits<int>::min()};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = text::split(rows[i], '\t');
    if (cols.size() != 6) throw ParseError("benchset", "expected 6 columns", i + 1);
    auto utt = text::parse_int(cols[1]);
    auto idx = text::parse_int(cols[2]);
    auto fold = text::parse_int(cols[5]);
    if (!utt || !idx || !fold || *fold < 0) throw ParseError("benchset", "invalid numeric field", i + 1);
    Tag tag;
    try {
      tag = parse_tag(cols[4]);
    } catch (const InvalidArgument&) {
      throw ParseError("benchset", "invalid tag '" + std::string(cols[4]) + "'", i + 1);
    }
    BioToken tok{{std::string(cols[0]), static_cast<int>(*utt), static_cast<int>(*idx)}, std::string(cols[3]), tag};
    std::pair<std::string, int> key{tok.provenance.speaker, tok.provenance.utterance};
    if (key != current || gold.dataset.sentences.empty()) {
      gold.dataset.sentences.emplace_back();
      current = key;
    }
    gold.dataset.sentences.back().tokens.push_back(std::move(tok));
    gold.token_fold.push_back(static_cast<int>(*fold));
    gold.k = std::max(gold.k, static_cast<int>(*fold) + 1);
  }
  return gold;
}

// ---------------------------------------------------------------------------
// Stats

StatsReport dataset_stats(const GoldSet& gold) {
  const std::size_t n = gold.dataset.token_count();
  if (n == 0) throw EmptyInput("dataset has no tokens", "benchset");
  StatsReport r;
  r.tokens = n;
  r.sentences = gold.dataset.sentences.size();
  r.mean_sentence_length = static_cast<double>(n) / static_cast<double>(r.sentences);
  r.folds.resize(static_cast<std::size_t>(gold.k));
  for (int f = 0; f < gold.k; ++f) r.folds[static_cast<std::size_t>(f)].fold = f;
  std::size_t i = 0;
  for (const auto& s : gold.dataset.sentences) {
    for (const auto& t : s.tokens) {
      const bool pos = is_positive(t.tag);
      r.positives += pos;
      if (i < gold.token_fold.size()) {
        auto& fs = r.folds[static_cast<std::size_t>(gold.token_fold[i])];
        ++fs.tokens;
        fs.positives += pos;
      }
      ++i;
    }
  }
  r.positive_rate = static_cast<double>(r.positives) / static_cast<double>(n);
  for (auto& fs : r.folds) {
    if (fs.tokens == 0) {
      fs.rate = std::numeric_limits<double>::quiet_NaN();
      r.warnings.push_back("fold " + std::to_string(fs.fold) + " is empty");
    } else {
      fs.rate = static_cast<double>(fs.positives) / static_cast<double>(fs.tokens);
    }
  }
  return r;
}

nlohmann::json to_json(const StatsReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold", f.fold},
                     {"tokens", f.tokens},
                     {"positives", f.positives},
                     {"rate", std::isnan(f.rate) ? nlohmann::json(nullptr) : nlohmann::json(f.rate)}});
  }
  return {{"tokens", report.tokens},
          {"positives", report.positives},
          {"positive_rate", report.positive_rate},
          {"sentences", report.sentences},
          {"mean_sentence_length", report.mean_sentence_length},
          {"folds", folds},
          {"warnings", report.warnings}};
}

}  // namespace prosobench
