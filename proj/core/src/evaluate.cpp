#include "prosobench/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "prosobench/error.hpp"
#include "prosobench/parallel.hpp"
#include "prosobench/rng.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<const BioToken*> flatten(const GoldSet& gold) {
  std::vector<const BioToken*> out;
  out.reserve(gold.dataset.token_count());
  for (const auto& s : gold.dataset.sentences)
    for (const auto& t : s.tokens) out.push_back(&t);
  return out;
}

nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json to_json(const MeanSd& v) { return {{"mean", number_or_null(v.mean)}, {"sd", number_or_null(v.sd)}}; }

/// Linear-interpolated percentile of sorted data, q in [0, 1].
double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return kNaN;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string_view language_name(Language lang) {
  switch (lang) {
    case Language::en: return "English";
    case Language::fr: return "French";
    case Language::zh: return "Mandarin";
  }
  return "";
}

std::string_view language_abbrev(Language lang) {
  switch (lang) {
    case Language::en: return "Eng.";
    case Language::fr: return "Fre.";
    case Language::zh: return "Man.";
  }
  return "";
}

std::string_view task_abbrev(std::string_view task) {
  if (task == "reduction") return "reduc";
  if (task == "prominence") return "prom";
  return task;
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Predictions

bool majority_vote(const std::vector<bool>& subword_positive) {
  const auto pos = static_cast<std::size_t>(std::count(subword_positive.begin(), subword_positive.end(), true));
  return 2 * pos >= subword_positive.size() && !subword_positive.empty();
}

PredictionSet parse_prediction_tsv(std::string_view data, Task task, std::string model_name) {
  const auto rows = text::lines(data);
  if (rows.empty()) throw ParseError("evaluate", "empty prediction TSV", 1);
  const bool subword = rows.front() == kSubwordPredictionTsvHeader;
  if (!subword && rows.front() != kPredictionTsvHeader) throw ParseError("evaluate", "prediction TSV header mismatch", 1);
  const std::size_t ncols = subword ? 6 : 5;

  PredictionSet pred;
  pred.task = task;
  pred.model_name = std::move(model_name);

  // Word-level rows first; subword rows accumulate votes per word.
  std::vector<std::vector<bool>> votes;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = text::split(rows[i], '\t');
    if (cols.size() != ncols) throw ParseError("evaluate", "expected " + std::to_string(ncols) + " columns", i + 1);
    auto utt = text::parse_int(cols[1]);
    auto idx = text::parse_int(cols[2]);
    if (!utt || !idx) throw ParseError("evaluate", "invalid numeric field", i + 1);
    if (subword && !text::parse_int(cols[4])) throw ParseError("evaluate", "invalid subword index", i + 1);
    Tag tag;
    try {
      tag = parse_tag(cols[ncols - 1]);
    } catch (const InvalidArgument&) {
      throw ParseError("evaluate", "invalid tag '" + std::string(cols[ncols - 1]) + "'", i + 1);
    }
    Provenance prov{std::string(cols[0]), static_cast<int>(*utt), static_cast<int>(*idx)};
    if (subword && !pred.tokens.empty() && pred.tokens.back().provenance == prov) {
      votes.back().push_back(is_positive(tag));
      continue;
    }
    pred.tokens.push_back({std::move(prov), std::string(cols[3]), tag});
    votes.push_back({is_positive(tag)});
  }
  if (!subword) return pred;

  // Collapse and re-encode BIO within each utterance.
  std::size_t start = 0;
  while (start < pred.tokens.size()) {
    std::size_t end = start;
    std::vector<bool> labels;
    while (end < pred.tokens.size() && pred.tokens[end].provenance.speaker == pred.tokens[start].provenance.speaker &&
           pred.tokens[end].provenance.utterance == pred.tokens[start].provenance.utterance) {
      labels.push_back(majority_vote(votes[end]));
      ++end;
    }
    const auto tags = encode_bio(labels);
    for (std::size_t j = start; j < end; ++j) pred.tokens[j].tag = tags[j - start];
    start = end;
  }
  return pred;
}

std::string emit_prediction_tsv(const PredictionSet& pred) {
  std::string out(kPredictionTsvHeader);
  out += '\n';
  for (const auto& t : pred.tokens) {
    out += t.provenance.speaker + '\t' + std::to_string(t.provenance.utterance) + '\t' +
           std::to_string(t.provenance.index) + '\t' + t.word + '\t' + to_char(t.tag) + '\n';
  }
  return out;
}

void check_alignment(const GoldSet& gold, const PredictionSet& pred) {
  const auto tokens = flatten(gold);
  const std::size_t n = std::min(tokens.size(), pred.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (tokens[i]->provenance != pred.tokens[i].provenance) {
      throw AlignmentError("token " + std::to_string(i) + ": gold " + to_string(tokens[i]->provenance) +
                               " vs prediction " + to_string(pred.tokens[i].provenance),
                           "evaluate");
    }
  }
  if (tokens.size() != pred.tokens.size()) {
    const std::string where = tokens.size() > n ? "gold " + to_string(tokens[n]->provenance)
                                                : "prediction " + to_string(pred.tokens[n].provenance);
    throw AlignmentError("token " + std::to_string(n) + ": " + where + " has no counterpart (gold " +
                             std::to_string(tokens.size()) + " tokens, prediction " +
                             std::to_string(pred.tokens.size()) + ")",
                         "evaluate");
  }
}

// ---------------------------------------------------------------------------
// Scoring

Confusion confusion(std::span<const Tag> gold, std::span<const Tag> pred) {
  if (gold.size() != pred.size()) throw InvalidArgument("evaluate", "tag sequences differ in length");
  Confusion c;
  for (std::size_t i = 0; i < gold.size(); ++i) c.add(is_positive(gold[i]), is_positive(pred[i]));
  return c;
}

Prf prf(const Confusion& c) {
  if (c.tp + c.fp + c.fn == 0) return {1.0, 1.0, 1.0};
  Prf m;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) return {kNaN, kNaN};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::string format_unit(double v) {
  if (std::isnan(v)) return "nan";
  std::string s = text::format_fixed(v, 3);
  if (s == "-0.000") s = "0.000";
  if (s.rfind("0.", 0) == 0) return s.substr(1);
  if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
  return s;
}

std::string format_mean_sd(const MeanSd& v) { return format_unit(v.mean) + " (" + format_unit(v.sd) + ")"; }

BaselineResult random_baseline(double q, std::size_t n_tokens, int trials, std::uint64_t seed, unsigned jobs) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("evaluate", "baseline rate must be in (0, 1)");
  if (trials < 1) throw InvalidArgument("evaluate", "baseline needs at least one trial");
  if (n_tokens == 0) throw InvalidArgument("evaluate", "baseline needs at least one token");
  std::vector<double> f1(static_cast<std::size_t>(trials));
  parallel_for(f1.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    Confusion c;
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const bool g = rng.uniform() < q;
      const bool p = rng.uniform() < q;
      c.add(g, p);
    }
    f1[t] = prf(c).f1;
  });
  const auto ms = mean_sd(f1);
  return {ms.mean, ms.sd, trials};
}

EvalReport score(const GoldSet& gold, const PredictionSet& pred, const ScoreOptions& options) {
  check_alignment(gold, pred);
  const auto tokens = flatten(gold);
  if (gold.token_fold.size() != tokens.size()) throw InvalidArgument("evaluate", "gold fold vector size mismatch");
  const int k = std::max(gold.k, 1);

  std::vector<Confusion> counts(static_cast<std::size_t>(k));
  std::size_t positives = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool g = is_positive(tokens[i]->tag);
    const bool p = is_positive(pred.tokens[i].tag);
    positives += g;
    counts[static_cast<std::size_t>(gold.token_fold[i])].add(g, p);
  }

  EvalReport r;
  r.task = pred.task;
  r.model_name = pred.model_name;
  std::vector<double> ps, rs, fs;
  for (int f = 0; f < k; ++f) {
    const auto& c = counts[static_cast<std::size_t>(f)];
    FoldScore fs_{f, c, prf(c)};
    ps.push_back(fs_.metrics.precision);
    rs.push_back(fs_.metrics.recall);
    fs.push_back(fs_.metrics.f1);
    r.folds.push_back(fs_);
  }
  r.precision = mean_sd(ps);
  r.recall = mean_sd(rs);
  r.f1 = mean_sd(fs);
  r.gold_positive_rate = tokens.empty() ? kNaN : static_cast<double>(positives) / static_cast<double>(tokens.size());

  const std::size_t fold_size = tokens.size() / static_cast<std::size_t>(k);
  if (r.gold_positive_rate > 0.0 && r.gold_positive_rate < 1.0 && fold_size > 0 && options.baseline_trials > 0) {
    r.baseline = random_baseline(r.gold_positive_rate, fold_size, options.baseline_trials, options.seed, options.jobs);
  } else {
    r.baseline = {kNaN, kNaN, 0};
  }
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold", f.fold},
                     {"tp", f.counts.tp},
                     {"fp", f.counts.fp},
                     {"fn", f.counts.fn},
                     {"tn", f.counts.tn},
                     {"precision", f.metrics.precision},
                     {"recall", f.metrics.recall},
                     {"f1", f.metrics.f1}});
  }
  return {{"task", to_string(report.task)},
          {"model", report.model_name},
          {"folds", folds},
          {"precision", to_json(report.precision)},
          {"recall", to_json(report.recall)},
          {"f1", to_json(report.f1)},
          {"gold_positive_rate", number_or_null(report.gold_positive_rate)},
          {"baseline_f1",
           {{"mean", number_or_null(report.baseline.mean)},
            {"sd", number_or_null(report.baseline.sd)},
            {"trials", report.baseline.trials}}}};
}

std::string format_results_table(std::span<const EvalReport> reports, Language lang) {
  const std::vector<std::string> header = {"Language", "Task", "Model", "F1", "Precision", "Recall"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    rows.push_back({std::string(language_name(lang)), std::string(to_string(r.task)), r.model_name,
                    format_mean_sd(r.f1), format_mean_sd(r.precision), format_mean_sd(r.recall)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out += c + 1 == cells.size() ? cells[c] : pad(cells[c], width[c] + 2);
    }
    return out + '\n';
  };
  std::string out = line(header);
  for (const auto& row : rows) out += line(row);
  return out;
}

// ---------------------------------------------------------------------------
// Surprisal-label correlation

double point_biserial(std::span<const double> values, const std::vector<bool>& labels) {
  if (values.size() != labels.size()) throw InvalidArgument("evaluate", "values and labels differ in length");
  if (values.empty()) throw UndefinedCorrelation("no tokens");
  const double n = static_cast<double>(values.size());
  double mean = 0.0, sum1 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw UndefinedCorrelation("non-finite surprisal value");
    mean += values[i];
    if (labels[i]) {
      sum1 += values[i];
      ++n1;
    }
  }
  mean /= n;
  if (n1 == 0 || n1 == values.size()) throw UndefinedCorrelation("labels are constant");
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw UndefinedCorrelation("surprisal has zero variance");
  const double m1 = sum1 / static_cast<double>(n1);
  const double m0 = (mean * n - sum1) / (n - static_cast<double>(n1));
  const double p = static_cast<double>(n1) / n;
  return std::clamp((m1 - m0) / sd * std::sqrt(p * (1.0 - p)), -1.0, 1.0);
}

CorrelationReport correlate_surprisal(const GoldSet& gold, std::span<const SurprisalRecord> surprisal, int resamples,
                                      std::uint64_t seed, unsigned jobs) {
  std::map<Provenance, double> by_prov;
  for (const auto& s : surprisal) by_prov[s.provenance] = s.surprisal;
  const auto tokens = flatten(gold);
  std::vector<double> values;
  std::vector<bool> labels;
  values.reserve(tokens.size());
  for (const auto* t : tokens) {
    auto it = by_prov.find(t->provenance);
    if (it == by_prov.end())
      throw AlignmentError("no surprisal for gold token " + to_string(t->provenance), "evaluate");
    values.push_back(it->second);
    labels.push_back(is_positive(t->tag));
  }

  CorrelationReport r;
  r.task = gold.dataset.task;
  r.n = values.size();
  r.r = point_biserial(values, labels);

  std::vector<double> boot(static_cast<std::size_t>(std::max(resamples, 0)), kNaN);
  parallel_for(boot.size(), jobs, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<double> v(values.size());
    std::vector<bool> l(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto j = rng.index(values.size());
      v[i] = values[j];
      l[i] = labels[j];
    }
    try {
      boot[b] = point_biserial(v, l);
    } catch (const UndefinedCorrelation&) {
      // Degenerate resample; left out of the interval.
    }
  });
  std::erase_if(boot, [](double x) { return std::isnan(x); });
  std::sort(boot.begin(), boot.end());
  r.resamples = static_cast<int>(boot.size());
  r.ci_low = percentile(boot, 0.025);
  r.ci_high = percentile(boot, 0.975);
  return r;
}

nlohmann::json to_json(const CorrelationReport& report) {
  return {{"model", report.model_name},
          {"task", to_string(report.task)},
          {"r", report.r},
          {"ci95", {number_or_null(report.ci_low), number_or_null(report.ci_high)}},
          {"n", report.n},
          {"resamples", report.resamples}};
}

// ---------------------------------------------------------------------------
// Winners table

Direction criterion_direction(std::string_view criterion, std::string_view task) {
  if (criterion == "FT") return Direction::higher_better;
  if (criterion == "ppl") return Direction::lower_better;
  if (criterion == "cor") {
    if (task == "reduction") return Direction::lower_better;
    if (task == "prominence") return Direction::higher_better;
    throw InvalidArgument("evaluate", "correlation entries need a concrete task, got '" + std::string(task) + "'");
  }
  throw InvalidArgument("evaluate", "unknown criterion '" + std::string(criterion) + "'");
}

std::vector<WinnersRow> default_winner_rows() {
  return {{Language::en, "both"}, {Language::fr, "both"}, {Language::zh, "reduction"}, {Language::zh, "prominence"}};
}

WinnersTable winners_table(std::span<const MetricEntry> entries, const std::vector<std::string>& models,
                           const std::vector<WinnersRow>& rows, int resamples, std::uint64_t seed) {
  if (models.size() != 2) throw InvalidArgument("evaluate", "winners table compares exactly two models");
  if (resamples < 1) throw InvalidArgument("evaluate", "resamples must be positive");
  WinnersTable table;
  table.models = models;
  table.rows = rows;
  table.criteria = kWinnerCriteria;
  std::uint64_t cell_index = 0;
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& criterion : table.criteria) {
      std::vector<double> diffs;
      for (const auto& e : entries) {
        if (e.language != row.language || e.criterion != criterion) continue;
        if (row.task != "both" && e.task != row.task) continue;
        auto a = e.folds.find(models[0]);
        auto b = e.folds.find(models[1]);
        if (a == e.folds.end() || b == e.folds.end()) continue;
        if (a->second.size() != b->second.size())
          throw InvalidArgument("evaluate", "fold vectors differ in length for " + criterion);
        const double sign = criterion_direction(criterion, e.task) == Direction::higher_better ? 1.0 : -1.0;
        for (std::size_t i = 0; i < a->second.size(); ++i) diffs.push_back(sign * (a->second[i] - b->second[i]));
      }
      const std::uint64_t cell_seed = derive_seed(seed, cell_index++);
      if (diffs.empty()) {
        cells.emplace_back();
        continue;
      }
      Rng rng(cell_seed);
      std::vector<double> means(static_cast<std::size_t>(resamples));
      for (auto& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < diffs.size(); ++i) s += diffs[rng.index(diffs.size())];
        m = s / static_cast<double>(diffs.size());
      }
      std::sort(means.begin(), means.end());
      const double lo = percentile(means, 0.025);
      const double hi = percentile(means, 0.975);
      if (lo <= 0.0 && hi >= 0.0) cells.emplace_back("n.s.");
      else cells.push_back(lo > 0.0 ? models[0] : models[1]);
    }
    table.cells.push_back(std::move(cells));
  }
  return table;
}

WinnersInput winners_input_from_json(const nlohmann::json& j) {
  WinnersInput in;
  in.models = j.at("models").get<std::vector<std::string>>();
  for (const auto& e : j.at("entries")) {
    MetricEntry m;
    m.language = parse_language(e.at("language").get<std::string>());
    m.task = e.at("task").get<std::string>();
    m.criterion = e.at("criterion").get<std::string>();
    if (m.criterion != "FT" && m.criterion != "ppl" && m.criterion != "cor")
      throw InvalidArgument("evaluate", "unknown criterion '" + m.criterion + "'");
    for (const auto& [model, values] : e.at("folds").items()) m.folds[model] = values.get<std::vector<double>>();
    in.entries.push_back(std::move(m));
  }
  return in;
}

nlohmann::json to_json(const WinnersTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    nlohmann::json cells = nlohmann::json::object();
    for (std::size_t c = 0; c < table.criteria.size(); ++c) cells[table.criteria[c]] = table.cells[r][c];
    rows.push_back(
        {{"language", to_string(table.rows[r].language)}, {"task", table.rows[r].task}, {"winners", cells}});
  }
  return {{"models", table.models}, {"rows", rows}};
}

std::string format_winners_table(const WinnersTable& table) {
  std::vector<std::string> header = {"lge", "task"};
  for (const auto& c : table.criteria) header.push_back(c == "cor" ? "ppl-label cor." : c);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> row = {std::string(language_abbrev(table.rows[r].language)),
                                    std::string(task_abbrev(table.rows[r].task))};
    for (const auto& cell : table.cells[r]) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) out += c + 1 == cells.size() ? cells[c] : pad(cells[c], width[c] + 2);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + '\n';
  };
  std::string out = line(header);
  for (const auto& row : rows) out += line(row);
  return out;
}

// ---------------------------------------------------------------------------
// Word-level error analysis

RateDiffTable rate_difference(const GoldSet& gold, const PredictionSet& pred, const Normalizer& normalize,
                              std::size_t min_count, std::size_t k) {
  check_alignment(gold, pred);
  const auto tokens = flatten(gold);
  struct Acc {
    std::size_t n = 0, gold = 0, pred = 0;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto& a = acc[normalize(tokens[i]->word)];
    ++a.n;
    a.gold += is_positive(tokens[i]->tag);
    a.pred += is_positive(pred.tokens[i].tag);
  }
  RateDiffTable t;
  t.min_count = min_count;
  for (const auto& [word, a] : acc) {
    if (a.n < min_count) continue;
    const double n = static_cast<double>(a.n);
    WordRate w{word, a.n, static_cast<double>(a.gold) / n, static_cast<double>(a.pred) / n, 0.0};
    w.difference = w.pred_rate - w.gold_rate;
    t.words.push_back(std::move(w));
  }
  std::stable_sort(t.words.begin(), t.words.end(),
                   [](const WordRate& a, const WordRate& b) { return a.difference > b.difference; });
  const std::size_t take = std::min(k, t.words.size());
  t.top.assign(t.words.begin(), t.words.begin() + static_cast<std::ptrdiff_t>(take));
  t.bottom.assign(t.words.rbegin(), t.words.rbegin() + static_cast<std::ptrdiff_t>(take));
  return t;
}

nlohmann::json to_json(const RateDiffTable& table) {
  auto list = [](const std::vector<WordRate>& words) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& w : words)
      out.push_back({{"word", w.word},
                     {"count", w.count},
                     {"gold_rate", w.gold_rate},
                     {"pred_rate", w.pred_rate},
                     {"difference", w.difference}});
    return out;
  };
  return {{"min_count", table.min_count}, {"top", list(table.top)}, {"bottom", list(table.bottom)},
          {"words", list(table.words)}};
}

std::vector<CurveBin> frequency_curve(const GoldSet& gold, const PredictionSet& pred, const Normalizer& normalize,
                                      const std::map<std::string, std::size_t>* lexicon, int bins) {
  check_alignment(gold, pred);
  if (bins < 1) throw InvalidArgument("evaluate", "bins must be positive");
  const auto tokens = flatten(gold);
  if (tokens.empty()) return {};

  struct Type {
    std::size_t freq = 0;
    double z = 0.0;
    std::size_t n = 0, gold = 0, pred = 0;
  };
  std::map<std::string, Type> types;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto& t = types[normalize(tokens[i]->word)];
    ++t.n;
    t.gold += is_positive(tokens[i]->tag);
    t.pred += is_positive(pred.tokens[i].tag);
  }
  for (auto& [word, t] : types) {
    if (lexicon) {
      auto it = lexicon->find(word);
      t.freq = it == lexicon->end() ? 1 : std::max<std::size_t>(it->second, 1);
    } else {
      t.freq = t.n;
    }
  }
  // z over types of log frequency (population sd).
  double mean = 0.0;
  for (const auto& [w, t] : types) mean += std::log(static_cast<double>(t.freq));
  mean /= static_cast<double>(types.size());
  double ss = 0.0;
  for (const auto& [w, t] : types) {
    const double d = std::log(static_cast<double>(t.freq)) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(types.size()));
  for (auto& [w, t] : types) t.z = sd > 0.0 ? (std::log(static_cast<double>(t.freq)) - mean) / sd : 0.0;

  // Group types sharing a frequency; groups are never split across bins.
  std::map<std::size_t, Type> groups;
  for (const auto& [w, t] : types) {
    auto& g = groups[t.freq];
    g.freq = t.freq;
    g.z = t.z;
    g.n += t.n;
    g.gold += t.gold;
    g.pred += t.pred;
  }

  const double total = static_cast<double>(tokens.size());
  std::vector<CurveBin> curve;
  std::size_t cum = 0;
  int current = 0;
  double zsum = 0.0, gsum = 0.0, psum = 0.0;
  CurveBin bin;
  bool open = false;
  auto close = [&] {
    const double n = static_cast<double>(bin.tokens);
    bin.z_mean = zsum / n;
    bin.gold_rate = gsum / n;
    bin.pred_rate = psum / n;
    bin.bin = static_cast<int>(curve.size());
    curve.push_back(bin);
    open = false;
  };
  for (const auto& [freq, g] : groups) {
    if (!open) {
      bin = CurveBin{};
      bin.z_low = g.z;
      zsum = gsum = psum = 0.0;
      open = true;
    }
    bin.z_high = g.z;
    bin.tokens += g.n;
    zsum += g.z * static_cast<double>(g.n);
    gsum += static_cast<double>(g.gold);
    psum += static_cast<double>(g.pred);
    cum += g.n;
    if (static_cast<double>(cum) >= total * static_cast<double>(current + 1) / static_cast<double>(bins) - 1e-9) {
      close();
      while (current < bins - 1 &&
             static_cast<double>(cum) >= total * static_cast<double>(current + 1) / static_cast<double>(bins) - 1e-9)
        ++current;
    }
  }
  if (open) close();
  return curve;
}

std::string curve_to_csv(std::span<const CurveBin> curve) {
  std::string out = "bin,z_low,z_high,z_mean,n_tokens,gold_rate,pred_rate\n";
  for (const auto& b : curve) {
    out += std::to_string(b.bin) + ',' + text::format_fixed(b.z_low, 6) + ',' + text::format_fixed(b.z_high, 6) + ',' +
           text::format_fixed(b.z_mean, 6) + ',' + std::to_string(b.tokens) + ',' + text::format_fixed(b.gold_rate, 6) +
           ',' + text::format_fixed(b.pred_rate, 6) + '\n';
  }
  return out;
}

}  // namespace prosobench
