#include "prosobench/duration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "prosobench/error.hpp"
#include "prosobench/parallel.hpp"
#include "prosobench/rng.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

double default_reduction_threshold(Language lang) { return lang == Language::zh ? 0.6 : 0.5; }

std::string_view to_string(DurationVariant v) { return v == DurationVariant::segment_sum ? "segment_sum" : "syllable"; }

DurationVariant parse_duration_variant(std::string_view s) {
  if (s == "segment_sum" || s == "segment") return DurationVariant::segment_sum;
  if (s == "syllable") return DurationVariant::syllable;
  throw InvalidArgument("duration", "unknown duration model variant '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Split

SplitResult split_halves(const AlignedCorpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.recordings.size();
  if (n < 2) throw SplitError("need at least 2 recordings, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) sizes[i] = corpus.recordings[order[i]].token_count();
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});

  // in_first[k] refers to position k of the permuted order
  std::vector<bool> in_first(n, false);
  if (n <= 20) {
    std::uint64_t best_mask = 1;
    std::size_t best_diff = SIZE_MAX;
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      std::size_t a = 0;
      for (std::size_t k = 0; k < n; ++k)
        if (mask >> k & 1) a += sizes[k];
      const std::size_t b = total - a;
      const std::size_t diff = a > b ? a - b : b - a;
      if (diff < best_diff) {
        best_diff = diff;
        best_mask = mask;
        if (diff == 0) break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) in_first[k] = best_mask >> k & 1;
  } else {
    std::vector<std::size_t> by_size(n);
    std::iota(by_size.begin(), by_size.end(), 0);
    std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t x, std::size_t y) { return sizes[x] > sizes[y]; });
    std::size_t a = 0, b = 0;
    for (std::size_t k : by_size) {
      // both halves must end up non-empty
      const bool to_first = a <= b;
      in_first[k] = to_first;
      (to_first ? a : b) += sizes[k];
    }
  }

  std::vector<bool> rec_first(n, false);
  for (std::size_t k = 0; k < n; ++k) rec_first[order[k]] = in_first[k];

  SplitResult out;
  out.seed = seed;
  out.first.language = out.second.language = corpus.language;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = rec_first[i] ? out.first : out.second;
    dst.recordings.push_back(corpus.recordings[i]);
  }
  out.first_tokens = out.first.token_count();
  out.second_tokens = out.second.token_count();
  const double a = static_cast<double>(out.first_tokens);
  const double b = static_cast<double>(out.second_tokens);
  out.imbalance = (a + b) > 0 ? std::abs(a - b) / (0.5 * (a + b)) : 0.0;
  out.within_tolerance = out.imbalance <= kSplitTolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Models

double SegmentDurationTable::lookup(const std::string& label) const {
  auto it = entries.find(label);
  return it == entries.end() ? fallback_mean : it->second.mean;
}

double SyllableDurationModel::predict_syllable(const Syllable& syllable) const {
  double d = intercept;
  for (const auto& seg : syllable.segments) {
    auto it = coefficients.find(seg.label);
    d += it == coefficients.end() ? unseen_coefficient : it->second;
  }
  return std::max(d, kMinSyllableDuration);
}

SegmentDurationTable fit_segment_table(const AlignedCorpus& half) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  double total = 0.0;
  std::size_t count = 0;
  for_each_token(half, [&](const Recording&, const Utterance&, const WordToken& tok) {
    for (const auto& seg : tok.segments) {
      auto& [sum, n] = acc[seg.label];
      sum += seg.duration();
      ++n;
      total += seg.duration();
      ++count;
    }
  });
  if (count == 0) throw FitError("no segments to fit a segment duration table");

  SegmentDurationTable table;
  for (const auto& [label, sn] : acc) table.entries[label] = {sn.first / static_cast<double>(sn.second), sn.second};
  table.fallback_mean = total / static_cast<double>(count);
  return table;
}

SyllableDurationModel fit_syllable_model(const AlignedCorpus& half) {
  std::vector<const Syllable*> syllables;
  std::map<std::string, std::size_t> column;
  for_each_token(half, [&](const Recording&, const Utterance&, const WordToken& tok) {
    if (!tok.syllables) return;
    for (const auto& syl : *tok.syllables) {
      syllables.push_back(&syl);
      for (const auto& seg : syl.segments) column.emplace(seg.label, 0);
    }
  });
  if (syllables.empty()) throw FitError("no syllable annotations to fit a syllable model");
  {
    std::size_t c = 1;  // column 0 is the intercept
    for (auto& [label, idx] : column) idx = c++;
  }

  const auto n = static_cast<Eigen::Index>(syllables.size());
  const auto p = static_cast<Eigen::Index>(column.size() + 1);
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Syllable& syl = *syllables[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    for (const auto& seg : syl.segments) design(i, static_cast<Eigen::Index>(column[seg.label])) += 1.0;
    target(i) = syl.duration();
  }

  SyllableDurationModel model;
  model.n_syllables = syllables.size();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (n >= p && qr.rank() == p) {
    const Eigen::VectorXd beta = qr.solve(target);
    model.intercept = beta(0);
    for (const auto& [label, idx] : column) model.coefficients[label] = beta(static_cast<Eigen::Index>(idx));
  } else {
    // Rank-deficient design: per-label mean segment durations, summed.
    model.mean_sum_fallback = true;
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const Syllable* syl : syllables)
      for (const auto& seg : syl->segments) {
        acc[seg.label].first += seg.duration();
        ++acc[seg.label].second;
      }
    for (const auto& [label, sn] : acc) model.coefficients[label] = sn.first / static_cast<double>(sn.second);
  }

  double weighted = 0.0;
  double weight = 0.0;
  {
    std::map<std::string, std::size_t> label_counts;
    for (const Syllable* syl : syllables)
      for (const auto& seg : syl->segments) ++label_counts[seg.label];
    for (const auto& [label, c] : label_counts) {
      weighted += model.coefficients[label] * static_cast<double>(c);
      weight += static_cast<double>(c);
    }
  }
  model.unseen_coefficient = weight > 0 ? weighted / weight : 0.0;

  double sse = 0.0;
  for (const Syllable* syl : syllables) {
    const double r = model.predict_syllable(*syl) - syl->duration();
    sse += r * r;
  }
  model.training_loss = sse / static_cast<double>(syllables.size());
  return model;
}

DurationModel fit_duration_model(const AlignedCorpus& half, DurationVariant variant) {
  if (variant == DurationVariant::segment_sum) return fit_segment_table(half);
  return fit_syllable_model(half);
}

double expected_duration(const WordToken& token, const SegmentDurationTable& table) {
  if (token.segments.empty()) throw MissingAnnotation("token '" + token.orthography + "' has no segments");
  double sum = 0.0;
  for (const auto& seg : token.segments) sum += table.lookup(seg.label);
  return sum;
}

double expected_duration(const WordToken& token, const SyllableDurationModel& model) {
  if (!token.syllables || token.syllables->empty())
    throw MissingAnnotation("token '" + token.orthography + "' has no syllables");
  double sum = 0.0;
  for (const auto& syl : *token.syllables) sum += model.predict_syllable(syl);
  return sum;
}

double expected_duration(const WordToken& token, const DurationModel& model) {
  return std::visit([&](const auto& m) { return expected_duration(token, m); }, model);
}

// ---------------------------------------------------------------------------
// Labeling

ReductionResult label_reductions(const AlignedCorpus& half, const DurationModel& model, double threshold,
                                 unsigned jobs) {
  if (!(threshold > 0.0)) throw InvalidArgument("duration", "reduction threshold must be positive");
  std::vector<ReductionResult> per_rec(half.recordings.size());
  parallel_for(half.recordings.size(), jobs, [&](std::size_t r) {
    auto& out = per_rec[r];
    for (const auto& utt : half.recordings[r].utterances) {
      for (const auto& tok : utt.tokens) {
        const auto prov = provenance_of(tok);
        double expected = 0.0;
        try {
          expected = expected_duration(tok, model);
        } catch (const MissingAnnotation& e) {
          out.excluded.push_back({prov, tok.orthography, "missing annotation"});
          continue;
        }
        if (!(expected > 0.0)) {
          out.excluded.push_back({prov, tok.orthography, "non-positive expected duration"});
          continue;
        }
        const double actual = tok.duration();
        if (!(actual > 0.0)) {
          out.excluded.push_back({prov, tok.orthography, "non-positive actual duration"});
          continue;
        }
        const double ratio = actual / expected;
        out.records.push_back({prov, tok.orthography, actual, expected, ratio, ratio < threshold});
      }
    }
  });
  ReductionResult merged;
  for (auto& r : per_rec) {
    std::move(r.records.begin(), r.records.end(), std::back_inserter(merged.records));
    std::move(r.excluded.begin(), r.excluded.end(), std::back_inserter(merged.excluded));
  }
  return merged;
}

ReductionRun reduce_corpus(const AlignedCorpus& corpus, DurationVariant variant, double threshold, std::uint64_t seed,
                           unsigned jobs) {
  auto split = split_halves(corpus, seed);
  auto model_first = fit_duration_model(split.first, variant);
  auto model_second = fit_duration_model(split.second, variant);
  auto labeled_second = label_reductions(split.second, model_first, threshold, jobs);
  auto labeled_first = label_reductions(split.first, model_second, threshold, jobs);

  std::map<Provenance, const ReductionRecord*> records;
  std::map<Provenance, const Exclusion*> excluded;
  for (const auto* part : {&labeled_first, &labeled_second}) {
    for (const auto& r : part->records) records[r.provenance] = &r;
    for (const auto& e : part->excluded) excluded[e.provenance] = &e;
  }
  ReductionResult merged;
  for_each_token(corpus, [&](const Recording&, const Utterance&, const WordToken& tok) {
    const auto prov = provenance_of(tok);
    if (auto it = records.find(prov); it != records.end()) merged.records.push_back(*it->second);
    else if (auto ex = excluded.find(prov); ex != excluded.end()) merged.excluded.push_back(*ex->second);
  });
  return {std::move(split), std::move(model_first), std::move(model_second), std::move(merged)};
}

HistogramReport ratio_histogram(const std::vector<ReductionRecord>& records, double threshold, double width,
                                double upper) {
  std::vector<double> ratios;
  ratios.reserve(records.size());
  for (const auto& r : records) ratios.push_back(r.ratio);
  return make_histogram(ratios, width, upper, threshold, "duration");
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const DurationModel& model) {
  nlohmann::json j;
  if (const auto* t = std::get_if<SegmentDurationTable>(&model)) {
    j["variant"] = "segment_sum";
    j["fallback_mean"] = t->fallback_mean;
    auto& entries = j["entries"] = nlohmann::json::object();
    for (const auto& [label, st] : t->entries) entries[label] = {{"mean", st.mean}, {"count", st.count}};
  } else {
    const auto& m = std::get<SyllableDurationModel>(model);
    j["variant"] = "syllable";
    j["intercept"] = m.intercept;
    j["coefficients"] = m.coefficients;
    j["unseen_coefficient"] = m.unseen_coefficient;
    j["training_loss"] = m.training_loss;
    j["n_syllables"] = m.n_syllables;
    j["mean_sum_fallback"] = m.mean_sum_fallback;
  }
  return j;
}

DurationModel duration_model_from_json(const nlohmann::json& j) {
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "segment_sum") {
    SegmentDurationTable t;
    t.fallback_mean = j.at("fallback_mean").get<double>();
    for (const auto& [label, st] : j.at("entries").items())
      t.entries[label] = {st.at("mean").get<double>(), st.at("count").get<std::size_t>()};
    return t;
  }
  if (variant == "syllable") {
    SyllableDurationModel m;
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::map<std::string, double>>();
    m.unseen_coefficient = j.at("unseen_coefficient").get<double>();
    m.training_loss = j.at("training_loss").get<double>();
    m.n_syllables = j.at("n_syllables").get<std::size_t>();
    m.mean_sum_fallback = j.at("mean_sum_fallback").get<bool>();
    return m;
  }
  throw InvalidArgument("duration", "unknown model variant '" + variant + "'");
}

std::string emit_reduction_tsv(const std::vector<ReductionRecord>& records) {
  std::string out(kReductionTsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.provenance.speaker + '\t' + std::to_string(r.provenance.utterance) + '\t' +
           std::to_string(r.provenance.index) + '\t' + r.word + '\t' + text::format_double(r.actual) + '\t' +
           text::format_double(r.expected) + '\t' + text::format_double(r.ratio) + '\t' + (r.reduced ? "1" : "0") + '\n';
  }
  return out;
}

std::string emit_exclusions_tsv(const std::vector<Exclusion>& excluded) {
  std::string out = "speaker\tutt\tidx\tword\treason\n";
  for (const auto& e : excluded) {
    out += e.provenance.speaker + '\t' + std::to_string(e.provenance.utterance) + '\t' +
           std::to_string(e.provenance.index) + '\t' + e.word + '\t' + e.reason + '\n';
  }
  return out;
}

}  // namespace prosobench
