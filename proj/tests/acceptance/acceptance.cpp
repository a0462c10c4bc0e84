// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "app/pipeline.hpp"
#include "oracles.hpp"
#include "prosobench/audio.hpp"
#include "prosobench/benchset.hpp"
#include "prosobench/duration.hpp"
#include "prosobench/evaluate.hpp"
#include "prosobench/ngram.hpp"
#include "prosobench/prominence.hpp"
#include "prosobench/rng.hpp"
#include "prosobench/text.hpp"
#include "synth/synth.hpp"

namespace fs = std::filesystem;
using namespace prosobench;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<WordToken> back_to_back_words(std::size_t n, double d) {
  std::vector<WordToken> out;
  for (std::size_t i = 0; i < n; ++i) {
    WordToken w;
    w.orthography = "w" + std::to_string(i);
    w.speaker_id = "s1";
    w.token_index = static_cast<int>(i);
    w.t_start = d * static_cast<double>(i);
    w.t_end = w.t_start + d;
    w.segments.push_back({"a", w.t_start, w.t_end});
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> default_scales() {
  const ProminenceConfig c;
  return dyadic_scales(c.scale_min, c.octaves, c.voices_per_octave);
}

Outcome reduction_oracle() {
  const synth::ReductionFixtureSpec spec;  // 10 x 10 x 20 = 2000 tokens, 15% at ratio 0.4
  const auto f = synth::make_reduction_fixture(spec);
  const auto t0 = Clock::now();
  const auto run = reduce_corpus(f.corpus, DurationVariant::segment_sum, 0.5, 1);
  const double elapsed = seconds_since(t0);

  std::size_t planted = 0, planted_hit = 0, others = 0, others_hit = 0;
  for (const auto& r : run.result.records) {
    if (f.reduced.contains(r.provenance)) {
      ++planted;
      planted_hit += r.reduced;
    } else {
      ++others;
      others_hit += r.reduced;
    }
  }
  double worst_rel = 0.0;
  for (const auto* model : {&run.model_first, &run.model_second}) {
    const auto& table = std::get<SegmentDurationTable>(*model);
    for (const auto& [label, mean] : f.planted_means)
      worst_rel = std::max(worst_rel, std::abs(table.lookup(label) - mean) / mean);
  }
  const double recall = static_cast<double>(planted_hit) / static_cast<double>(planted);
  const double false_rate = static_cast<double>(others_hit) / static_cast<double>(others);
  const bool ok = f.corpus.token_count() == 2000 && run.result.excluded.empty() && recall >= 0.99 &&
                  false_rate <= 0.01 && worst_rel <= 0.01 && elapsed < 5.0;
  return {ok, fmt::format("tokens={} planted recall={:.4f} others flagged={:.4f} worst relative mean error={:.5f} time={:.3f}s",
                          f.corpus.token_count(), recall, false_rate, worst_rel, elapsed)};
}

Outcome noiseless_ols() {
  const auto f = synth::make_syllable_fixture(400, 11);
  const auto t0 = Clock::now();
  const auto m = fit_syllable_model(f.corpus);
  const double elapsed = seconds_since(t0);
  double worst = std::abs(m.intercept - f.intercept);
  for (const auto& [label, coef] : f.coefficients) {
    const auto it = m.coefficients.find(label);
    worst = std::max(worst, it == m.coefficients.end() ? INFINITY : std::abs(it->second - coef));
  }
  return {worst <= 1e-9 && elapsed < 1.0, fmt::format("max |coef error|={:.3g} time={:.3f}s", worst, elapsed)};
}

Outcome cwt_correctness() {
  const double psi0 = 2.0 / (std::sqrt(3.0) * std::pow(M_PI, 0.25));
  const double peak_err = std::abs(ricker(0.0) - psi0);

  Rng rng(1);
  std::vector<double> x(1500), y(1500), z(1500);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  const double a = 2.5, b = -0.75;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto scales = default_scales();
  const auto cx = cwt_ricker(x, scales, 0.01);
  const auto cy = cwt_ricker(y, scales, 0.01);
  const auto cz = cwt_ricker(z, scales, 0.01);
  double linear_err = 0.0;
  for (std::size_t r = 0; r < scales.size(); ++r)
    for (std::size_t j = 0; j < z.size(); ++j)
      linear_err = std::max(linear_err, std::abs(cz.coefficients[r][j] - a * cx.coefficients[r][j] - b * cy.coefficients[r][j]));

  const auto toks = back_to_back_words(40, 0.3);
  double max_zero_score = 0.0;
  for (const auto& rec : word_prominence_scores(cwt_ricker(std::vector<double>(1200, 0.0), scales, 0.01), toks))
    max_zero_score = std::max(max_zero_score, std::abs(rec.score));
  return {peak_err <= 1e-12 && linear_err < 1e-9 && max_zero_score == 0.0,
          fmt::format("|psi(0) error|={:.3g} linearity={:.3g} zero-signal max score={}", peak_err, linear_err,
                      max_zero_score)};
}

Outcome prominence_argmax() {
  const auto toks = back_to_back_words(40, 0.3);
  const auto scales = default_scales();
  std::vector<std::string> misses;
  for (std::size_t target : {5u, 17u, 23u, 34u}) {
    const double center = toks[target].t_start + 0.13;
    std::vector<double> bump(1200);
    for (std::size_t i = 0; i < bump.size(); ++i) {
      const double t = (static_cast<double>(i) + 0.5) * 0.01 - center;
      bump[i] = std::exp(-0.5 * t * t / 0.01);
    }
    const auto rec = word_prominence_scores(cwt_ricker(bump, scales, 0.01), toks);
    bool unique = true;
    for (std::size_t w = 0; w < rec.size(); ++w)
      if (w != target && rec[w].score >= rec[target].score) unique = false;
    if (!unique) misses.push_back(std::to_string(target));
  }
  std::size_t zero_labels = 0;
  for (const auto& r : word_prominence_scores(cwt_ricker(std::vector<double>(1200, 0.0), scales, 0.01), toks))
    zero_labels += r.prominent;
  std::string detail = misses.empty() ? "boosted word is unique argmax for 4 targets" : "missed targets:";
  for (const auto& m : misses) detail += " " + m;
  detail += fmt::format("; zero composite labels={}", zero_labels);
  return {misses.empty() && zero_labels == 0, detail};
}

Outcome pitch_tracker() {
  const auto t0 = Clock::now();
  const auto f0 = extract_f0(synth::sine(220.0, 1.0, 16000.0));
  Signal zero;
  zero.sample_rate = 16000.0;
  zero.samples.assign(16000, 0.0);
  const auto z = extract_f0(zero);
  const double elapsed = seconds_since(t0);
  std::vector<double> voiced;
  for (double v : f0)
    if (v > 0.0) voiced.push_back(v);
  double median = NAN;
  if (!voiced.empty()) {
    std::sort(voiced.begin(), voiced.end());
    const auto n = voiced.size();
    median = n % 2 ? voiced[n / 2] : 0.5 * (voiced[n / 2 - 1] + voiced[n / 2]);
  }
  const auto zero_voiced = std::count_if(z.begin(), z.end(), [](double v) { return v > 0.0; });
  return {std::abs(median - 220.0) <= 2.0 && zero_voiced == 0 && elapsed < 2.0,
          fmt::format("median f0={:.3f}Hz voiced={}/{} zero-audio voiced={} time={:.3f}s", median, voiced.size(),
                      f0.size(), zero_voiced, elapsed)};
}

Outcome scorer_exactness() {
  const std::vector<Tag> gold{Tag::B, Tag::O, Tag::O, Tag::I};
  const std::vector<Tag> pred{Tag::B, Tag::O, Tag::B, Tag::O};
  const auto m = prf(confusion(gold, pred));
  Rng rng(2024);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<bool> labels(1 + rng.index(30));
    const double p = rng.uniform();
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = rng.bernoulli(p);
    const auto tags = encode_bio(labels);
    if (!is_valid_bio(tags) || decode_bio(tags) != labels) ++failures;
  }
  return {m.precision == 0.5 && m.recall == 0.5 && m.f1 == 0.5 && failures == 0,
          fmt::format("P={} R={} F1={} BIO round-trip failures={}/10000", m.precision, m.recall, m.f1, failures)};
}

Outcome random_baseline_check() {
  const auto b = random_baseline(0.15, 100000, 100, 3);
  return {std::abs(b.mean - 0.15) <= 0.01 && b.trials == 100,
          fmt::format("mean F1={:.5f} sd={:.5f} trials={}", b.mean, b.sd, b.trials)};
}

Outcome kn_oracle() {
  const std::vector<std::string> types{"the", "cat", "sat", "on", "mat", "a", "dog"};
  Rng rng(50);
  NgramModel::Utterances text;
  std::size_t total = 0;
  while (total < 50) {
    std::vector<std::string> u;
    const auto len = std::min<std::size_t>(3 + rng.index(6), 50 - total);
    for (std::size_t i = 0; i < len; ++i) u.push_back(types[std::min<std::size_t>(rng.index(8), 6)]);
    total += len;
    text.push_back(std::move(u));
  }
  text.back().back() = "zebra";

  const auto m = NgramModel::train(text, {3, 0.75, 2});
  NgramModel::Utterances mapped;
  for (const auto& u : text) {
    std::vector<std::string> v;
    for (const auto& w : u) v.emplace_back(m.map_word(w));
    mapped.push_back(std::move(v));
  }
  const oracle::LiteralKneserNey ref(mapped, 3, 0.75, m.vocabulary().size());
  std::vector<std::string> pool = m.vocabulary();
  pool.emplace_back(kBos);
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& h1 : pool)
    for (const auto& h2 : pool)
      for (const auto& w : m.vocabulary()) {
        const std::vector<std::string> h{h1, h2};
        worst = std::max(worst, std::abs(m.probability(w, h) - ref.probability(w, h)));
        ++checked;
      }

  const NgramModel::Utterances four{{"a", "b", "c", "d"}};
  const double ppl = perplexity(NgramModel::train(four, {1, 0.75, 1}), four);
  return {worst <= 1e-9 && ppl == 4.0,
          fmt::format("max |p - literal|={:.3g} over {} probabilities; uniform unigram ppl={}", worst, checked, ppl)};
}

Outcome correlation_machinery() {
  Rng rng(21);
  std::vector<double> x, yd;
  std::vector<bool> y;
  for (int i = 0; i < 5000; ++i) {
    const bool l = rng.bernoulli(0.3);
    y.push_back(l);
    yd.push_back(l ? 1.0 : 0.0);
    x.push_back(rng.normal() + (l ? 0.4 : 0.0));
  }
  const double diff = std::abs(point_biserial(x, y) - oracle::pearson(x, yd));

  Rng ind(99);
  std::vector<double> u;
  std::vector<bool> v;
  for (int i = 0; i < 100000; ++i) {
    u.push_back(ind.normal());
    v.push_back(ind.bernoulli(0.15));
  }
  const double r = point_biserial(u, v);
  return {diff <= 1e-12 && std::abs(r) < 0.01,
          fmt::format("|r_pb - pearson|={:.3g}; independent r={:.5f} at n=100000", diff, r)};
}

/// Single-word sentences so that every token's word is controlled directly.
struct WordSet {
  GoldSet gold;
  PredictionSet pred;

  void add(const std::string& w, int n, int pos_gold, int pos_pred) {
    gold.dataset.task = pred.task = Task::reduction;
    gold.k = 1;
    for (int i = 0; i < n; ++i) {
      const auto utt = static_cast<int>(gold.dataset.sentences.size());
      const Provenance p{"s0", utt, 0};
      gold.dataset.sentences.push_back({{{p, w, i < pos_gold ? Tag::B : Tag::O}}});
      gold.token_fold.push_back(0);
      pred.tokens.push_back({p, w, i < pos_pred ? Tag::B : Tag::O});
    }
  }
};

Outcome subword_and_rate_rules() {
  const bool tie = majority_vote({true, false}) && majority_vote({false, true, true, false});
  const std::string tsv = std::string(kSubwordPredictionTsvHeader) +
                          "\ns1\t0\t0\tyoure\t0\tB\ns1\t0\t0\tyoure\t1\tO\ns1\t0\t1\tright\t0\tO\ns1\t0\t1\tright\t1\tO\n";
  const auto collapsed = parse_prediction_tsv(tsv, Task::reduction, "conv");
  const bool tie_file = collapsed.tokens.size() == 2 && collapsed.tokens[0].tag == Tag::B &&
                        collapsed.tokens[1].tag == Tag::O;

  WordSet ws;
  ws.add("youre", 100, 10, 38);
  ws.add("rare", 49, 10, 30);
  ws.add("the", 50, 20, 10);
  const auto table = rate_difference(ws.gold, ws.pred, normalizer_for(Language::en), 50, 5);
  const bool excluded = std::none_of(table.words.begin(), table.words.end(), [](const WordRate& r) { return r.word == "rare"; }) &&
                        table.words.size() == 2;

  WordSet self;
  self.add("a", 60, 13, 13);
  self.add("b", 70, 50, 50);
  self.add("c", 55, 0, 0);
  const auto st = rate_difference(self.gold, self.pred, normalizer_for(Language::en), 50);
  const bool zero = !st.words.empty() &&
                    std::all_of(st.words.begin(), st.words.end(), [](const WordRate& r) { return r.difference == 0.0; });
  return {tie && tie_file && excluded && zero,
          fmt::format("tie->positive={} subword file tie={} count-49 excluded={} self-diff zero={}", tie, tie_file,
                      excluded, zero)};
}

int cli(const std::vector<std::string>& args, std::string& err_text) {
  std::ostringstream out, err;
  std::vector<std::string> full{"prosobench"};
  full.insert(full.end(), args.begin(), args.end());
  const int code = app::run_cli(full, out, err);
  err_text = err.str();
  return code;
}

std::string run_pipeline(const fs::path& fixture, const fs::path& out, const std::string& jobs) {
  const std::string config = (fixture / "config.json").string();
  auto pred = [&](const std::string& task, const std::string& model) {
    return model + "=" + (fixture / "predictions" / (task + "." + model + ".tsv")).string();
  };
  std::vector<std::vector<std::string>> steps{{"ingest"}, {"validate"}, {"durmodel"}, {"reduce"},
                                              {"prominence"}, {"emit-bench"}, {"stats"}, {"ngram"}};
  for (const std::string task : {"reduction", "prominence"}) {
    steps.push_back({"score", "--task", task, "--pred", pred(task, "conv"), "--pred", pred(task, "wiki")});
    steps.push_back({"errwords", "--task", task, "--pred", pred(task, "conv")});
    steps.push_back({"freqcurve", "--task", task, "--pred", pred(task, "wiki")});
  }
  steps.push_back({"correlate"});
  steps.push_back({"winners", "--input", (fixture / "predictions" / "metrics.json").string()});
  for (auto step : steps) {
    std::vector<std::string> args{"--config", config, "--out", out.string(), "--jobs", jobs};
    args.insert(args.end(), step.begin(), step.end());
    std::string err;
    if (cli(args, err) != 0) return step.front() + " failed: " + err;
  }
  return {};
}

Outcome determinism() {
  const fs::path fixture = PROSOBENCH_FIXTURE_DIR;
  const auto root = fs::temp_directory_path() / "prosobench-acceptance";
  fs::remove_all(root);
  const auto a = root / "a", b = root / "b";
  for (const auto& [dir, jobs] : {std::pair{a, "1"}, std::pair{b, "2"}})
    if (auto e = run_pipeline(fixture, dir, jobs); !e.empty()) return {false, e};

  auto listing = [](const fs::path& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto files = listing(a);
  if (files != listing(b)) return {false, "artifact sets differ"};
  std::vector<std::string> differing;
  for (const auto& f : files)
    if (text::read_file((a / f).string()) != text::read_file((b / f).string())) differing.push_back(f);
  fs::remove_all(root);
  std::string detail = fmt::format("{} artifacts compared, {} differ", files.size(), differing.size());
  for (const auto& f : differing) detail += " " + f;
  return {!files.empty() && differing.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"reduction-oracle", reduction_oracle},
      {"noiseless-ols", noiseless_ols},
      {"cwt-correctness", cwt_correctness},
      {"prominence-argmax", prominence_argmax},
      {"pitch-tracker", pitch_tracker},
      {"scorer-exactness", scorer_exactness},
      {"random-baseline", random_baseline_check},
      {"kn-oracle", kn_oracle},
      {"correlation", correlation_machinery},
      {"subword-and-rate-rules", subword_and_rate_rules},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
