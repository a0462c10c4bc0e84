#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "prosobench/error.hpp"
#include "prosobench/evaluate.hpp"
#include "prosobench/rng.hpp"

using namespace prosobench;

namespace {

std::vector<Tag> tags(std::string_view s) {
  std::vector<Tag> out;
  for (char c : s) out.push_back(parse_tag(std::string(1, c)));
  return out;
}

/// One sentence per entry; the sentence's fold doubles as its speaker.
GoldSet make_gold(const std::vector<std::string>& sentences, const std::vector<int>& folds,
                  const std::vector<std::vector<std::string>>& words = {}) {
  GoldSet g;
  g.dataset.task = Task::reduction;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    BioSentence sent;
    const auto t = tags(sentences[s]);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string w = words.empty() ? "w" + std::to_string(i) : words[s][i];
      sent.tokens.push_back({{"s" + std::to_string(folds[s]), static_cast<int>(s), static_cast<int>(i)}, w, t[i]});
      g.token_fold.push_back(folds[s]);
    }
    g.dataset.sentences.push_back(std::move(sent));
    g.k = std::max(g.k, folds[s] + 1);
  }
  return g;
}

PredictionSet make_pred(const GoldSet& gold, const std::vector<std::string>& sentences, std::string name = "m") {
  PredictionSet p;
  p.task = gold.dataset.task;
  p.model_name = std::move(name);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto t = tags(sentences[s]);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& g = gold.dataset.sentences[s].tokens[i];
      p.tokens.push_back({g.provenance, g.word, t[i]});
    }
  }
  return p;
}

/// `n` single-word sentences of word `w` with `pos_gold` gold and `pos_pred` predicted positives.
void add_word(std::vector<std::string>& gold, std::vector<std::string>& pred, std::vector<std::vector<std::string>>& words,
              const std::string& w, int n, int pos_gold, int pos_pred) {
  for (int i = 0; i < n; ++i) {
    gold.push_back(i < pos_gold ? "B" : "O");
    pred.push_back(i < pos_pred ? "B" : "O");
    words.push_back({w});
  }
}

}  // namespace

TEST(Scorer, HandWorkedMicroExample) {
  const auto c = confusion(tags("BOOI"), tags("BOBO"));
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.tn, 1u);
  const auto m = prf(c);
  EXPECT_EQ(m.precision, 0.5);
  EXPECT_EQ(m.recall, 0.5);
  EXPECT_EQ(m.f1, 0.5);
}

TEST(Scorer, PerfectPredictionAndEmptyPositives) {
  const auto gold = make_gold({"OBIO", "BOOO"}, {0, 1});
  const auto r = score(gold, make_pred(gold, {"OBIO", "BOOO"}), {10, 1, 1});
  EXPECT_EQ(r.f1.mean, 1.0);
  EXPECT_EQ(r.f1.sd, 0.0);
  EXPECT_EQ(prf(Confusion{0, 0, 0, 5}).f1, 1.0);
  EXPECT_EQ(prf(Confusion{0, 3, 0, 5}).precision, 0.0);
}

TEST(Scorer, FoldMeanAndSampleSd) {
  // fold 0: F1 = 1, fold 1: F1 = 0.5, fold 2: F1 = 0
  const auto gold = make_gold({"BO", "BOOI", "OB"}, {0, 1, 2});
  const auto r = score(gold, make_pred(gold, {"BO", "BOBO", "BO"}), {10, 1, 1});
  ASSERT_EQ(r.folds.size(), 3u);
  EXPECT_DOUBLE_EQ(r.folds[0].metrics.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.folds[1].metrics.f1, 0.5);
  EXPECT_DOUBLE_EQ(r.folds[2].metrics.f1, 0.0);
  EXPECT_DOUBLE_EQ(r.f1.mean, 0.5);
  EXPECT_DOUBLE_EQ(r.f1.sd, 0.5);
  EXPECT_DOUBLE_EQ(r.gold_positive_rate, 4.0 / 8.0);
}

TEST(Scorer, SymmetricUnderUtteranceReordering) {
  const auto gold = make_gold({"BO", "BOOI", "OB", "OOB"}, {0, 1, 0, 1});
  const auto pred = make_pred(gold, {"BO", "BOBO", "BO", "BIB"});
  const auto a = score(gold, pred, {10, 1, 1});
  GoldSet rg = gold;
  std::reverse(rg.dataset.sentences.begin(), rg.dataset.sentences.end());
  rg.token_fold.clear();
  for (const auto& s : rg.dataset.sentences)
    for (const auto& t : s.tokens) rg.token_fold.push_back(t.provenance.speaker == "s0" ? 0 : 1);
  PredictionSet rp = pred;
  rp.tokens.clear();
  for (const auto& s : rg.dataset.sentences)
    for (const auto& t : s.tokens)
      for (const auto& p : pred.tokens)
        if (p.provenance == t.provenance) rp.tokens.push_back(p);
  const auto b = score(rg, rp, {10, 1, 1});
  EXPECT_EQ(a.f1.mean, b.f1.mean);
  EXPECT_EQ(a.precision.mean, b.precision.mean);
  EXPECT_EQ(a.recall.sd, b.recall.sd);
}

TEST(Scorer, MisalignmentNamesFirstMismatch) {
  const auto gold = make_gold({"BO", "OB"}, {0, 1});
  auto pred = make_pred(gold, {"BO", "OB"});
  pred.tokens[2].provenance.index = 7;
  try {
    score(gold, pred);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_EQ(e.module(), "evaluate");
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
  }
  pred.tokens.pop_back();
  EXPECT_THROW(check_alignment(gold, pred), AlignmentError);
}

TEST(Format, MeanSdTableStyle) {
  EXPECT_EQ(format_mean_sd({0.442, 0.014}), ".442 (.014)");
  EXPECT_EQ(format_unit(1.0), "1.000");
  EXPECT_EQ(format_unit(-0.25), "-.250");
}

TEST(Baseline, HalfRate) {
  const auto b = random_baseline(0.5, 1000000, 4, 7);
  EXPECT_NEAR(b.mean, 0.5, 0.002);
}

TEST(Baseline, FrenchReductionRate) {
  const auto b = random_baseline(0.1754, 100000, 20, 3);
  EXPECT_NEAR(b.mean, 0.175, 0.005);
  EXPECT_GT(b.sd, 0.0);
}

TEST(Baseline, DeterministicAcrossJobCounts) {
  const auto a = random_baseline(0.2, 5000, 16, 11, 1);
  const auto b = random_baseline(0.2, 5000, 16, 11, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.sd, b.sd);
  EXPECT_THROW(random_baseline(0.0, 10, 1, 0), InvalidArgument);
  EXPECT_THROW(random_baseline(1.0, 10, 1, 0), InvalidArgument);
}

TEST(PointBiserial, EqualsPearsonOnIndicator) {
  Rng rng(21);
  std::vector<double> x;
  std::vector<bool> y;
  std::vector<double> yd;
  for (int i = 0; i < 5000; ++i) {
    const bool l = rng.bernoulli(0.3);
    y.push_back(l);
    yd.push_back(l ? 1.0 : 0.0);
    x.push_back(rng.normal() + (l ? 0.4 : 0.0));
  }
  EXPECT_NEAR(point_biserial(x, y), oracle::pearson(x, yd), 1e-12);
}

TEST(PointBiserial, DegenerateAndSignCases) {
  const std::vector<bool> y{true, false, true, false, false};
  std::vector<double> same, neg;
  Rng rng(2);
  for (bool l : y) {
    same.push_back(l ? 1.0 : 0.0);
    neg.push_back(-(l ? 1.0 : 0.0) + 1e-9 * rng.normal());
  }
  EXPECT_NEAR(point_biserial(same, y), 1.0, 1e-12);
  EXPECT_NEAR(point_biserial(neg, y), -1.0, 1e-6);
  EXPECT_THROW(point_biserial(std::vector<double>(5, 2.0), y), UndefinedCorrelation);
  EXPECT_THROW(point_biserial(same, std::vector<bool>(5, true)), UndefinedCorrelation);
}

TEST(PointBiserial, IndependenceGivesSmallR) {
  Rng rng(99);
  std::vector<double> x;
  std::vector<bool> y;
  for (int i = 0; i < 100000; ++i) {
    x.push_back(rng.normal());
    y.push_back(rng.bernoulli(0.15));
  }
  EXPECT_LT(std::abs(point_biserial(x, y)), 0.01);
}

TEST(Correlate, ReportAndInterval) {
  std::vector<std::string> sents;
  std::vector<int> folds;
  Rng rng(5);
  for (int s = 0; s < 40; ++s) {
    std::string t;
    for (int i = 0; i < 6; ++i) t += rng.bernoulli(0.2) ? 'B' : 'O';
    sents.push_back(t);
    folds.push_back(s % 2);
  }
  const auto gold = make_gold(sents, folds);
  std::vector<SurprisalRecord> surprisal;
  for (const auto& s : gold.dataset.sentences)
    for (const auto& t : s.tokens)
      surprisal.push_back({t.provenance, t.word, 3.0 + rng.normal() - (is_positive(t.tag) ? 1.0 : 0.0)});
  std::reverse(surprisal.begin(), surprisal.end());  // joined by provenance, not position
  const auto r = correlate_surprisal(gold, surprisal, 300, 4, 2);
  EXPECT_LT(r.r, 0.0);
  EXPECT_LE(r.ci_low, r.r);
  EXPECT_GE(r.ci_high, r.r);
  EXPECT_EQ(r.n, 240u);
  const auto again = correlate_surprisal(gold, surprisal, 300, 4, 1);
  EXPECT_EQ(again.ci_low, r.ci_low);
  EXPECT_EQ(again.ci_high, r.ci_high);
  surprisal.pop_back();
  EXPECT_THROW(correlate_surprisal(gold, surprisal, 10, 0), AlignmentError);
}

TEST(Winners, HigherFoldsEverywhereWin) {
  MetricEntry e{Language::zh, "reduction", "FT", {{"conv", {0.5, 0.52, 0.55, 0.6}}, {"wiki", {0.4, 0.41, 0.45, 0.5}}}};
  const std::vector<MetricEntry> entries{e};
  const auto t = winners_table(entries, {"conv", "wiki"});
  ASSERT_EQ(t.rows.size(), 4u);
  ASSERT_EQ(t.criteria.size(), 3u);
  EXPECT_EQ(t.cells[2][0], "conv");
  EXPECT_EQ(t.cells[0][0], "");
  EXPECT_EQ(t.cells[3][2], "");
}

TEST(Winners, IdenticalFoldsAreNotSignificant) {
  const std::vector<double> f{0.3, 0.35, 0.4};
  const std::vector<MetricEntry> entries{{Language::fr, "both", "ppl", {{"conv", f}, {"wiki", f}}}};
  const auto t = winners_table(entries, {"conv", "wiki"});
  EXPECT_EQ(t.cells[1][1], "n.s.");
}

TEST(Winners, LowerPerplexityWinsAndCorrelationDirectionDependsOnTask) {
  const std::vector<MetricEntry> entries{
      {Language::en, "both", "ppl", {{"conv", {30, 31, 29}}, {"wiki", {50, 52, 51}}}},
      {Language::zh, "reduction", "cor", {{"conv", {-0.2, -0.22}}, {"wiki", {-0.1, -0.12}}}},
      {Language::zh, "prominence", "cor", {{"conv", {-0.2, -0.22}}, {"wiki", {-0.1, -0.12}}}}};
  const auto t = winners_table(entries, {"conv", "wiki"});
  EXPECT_EQ(t.cells[0][1], "conv");
  EXPECT_EQ(t.cells[2][2], "conv");
  EXPECT_EQ(t.cells[3][2], "wiki");
  const auto text = format_winners_table(t);
  EXPECT_NE(text.find("Man."), std::string::npos);
  EXPECT_NE(text.find("conv"), std::string::npos);
}

TEST(Winners, JsonInput) {
  const auto j = nlohmann::json::parse(R"({"models": ["conv", "wiki"], "entries": [
    {"language": "en", "task": "prominence", "criterion": "FT", "folds": {"conv": [0.6, 0.7], "wiki": [0.5, 0.6]}}]})");
  const auto in = winners_input_from_json(j);
  EXPECT_EQ(in.models.size(), 2u);
  ASSERT_EQ(in.entries.size(), 1u);
  EXPECT_EQ(in.entries[0].folds.at("wiki")[1], 0.6);
}

TEST(MajorityVote, TieIsPositive) {
  EXPECT_TRUE(majority_vote({true, false}));
  EXPECT_TRUE(majority_vote({true, true, false}));
  EXPECT_FALSE(majority_vote({true, false, false}));
  EXPECT_FALSE(majority_vote({}));
}

TEST(PredictionTsv, SubwordRowsCollapse) {
  const std::string tsv = std::string(kSubwordPredictionTsvHeader) +
                          "\ns1\t0\t0\tyoure\t0\tB\ns1\t0\t0\tyoure\t1\tO\n"
                          "s1\t0\t1\tright\t0\tO\ns1\t0\t1\tright\t1\tO\ns1\t0\t1\tright\t2\tB\n"
                          "s1\t0\t2\tso\t0\tI\n";
  const auto p = parse_prediction_tsv(tsv, Task::reduction, "conv");
  ASSERT_EQ(p.tokens.size(), 3u);
  EXPECT_EQ(p.tokens[0].tag, Tag::B);
  EXPECT_EQ(p.tokens[1].tag, Tag::O);
  EXPECT_EQ(p.tokens[2].tag, Tag::B);  // re-encoded after collapsing
  const auto word_level = parse_prediction_tsv(emit_prediction_tsv(p), Task::reduction, "conv");
  ASSERT_EQ(word_level.tokens.size(), 3u);
  EXPECT_EQ(word_level.tokens[2].tag, Tag::B);
}

TEST(RateDifference, CountThresholdAndDifference) {
  std::vector<std::string> g, p;
  std::vector<std::vector<std::string>> w;
  add_word(g, p, w, "youre", 100, 10, 38);
  add_word(g, p, w, "rare", 49, 10, 30);
  add_word(g, p, w, "the", 50, 20, 10);
  std::vector<int> folds(g.size(), 0);
  const auto gold = make_gold(g, folds, w);
  const auto t = rate_difference(gold, make_pred(gold, p), normalizer_for(Language::en), 50, 5);
  ASSERT_EQ(t.words.size(), 2u);
  EXPECT_EQ(t.words[0].word, "youre");
  EXPECT_NEAR(t.words[0].difference, 0.28, 1e-12);
  EXPECT_NEAR(t.words[1].difference, -0.2, 1e-12);
  EXPECT_EQ(t.bottom.front().word, "the");
}

TEST(RateDifference, SelfComparisonIsZero) {
  std::vector<std::string> g, p;
  std::vector<std::vector<std::string>> w;
  add_word(g, p, w, "a", 60, 13, 13);
  add_word(g, p, w, "b", 70, 50, 50);
  const auto gold = make_gold(g, std::vector<int>(g.size(), 0), w);
  const auto t = rate_difference(gold, make_pred(gold, g), normalizer_for(Language::en), 50);
  for (const auto& r : t.words) EXPECT_EQ(r.difference, 0.0);
}

TEST(FrequencyCurve, EqualFrequencyIsOneBin) {
  std::vector<std::string> g, p;
  std::vector<std::vector<std::string>> w;
  for (const char* word : {"a", "b", "c", "d"}) add_word(g, p, w, word, 10, 3, 4);
  const auto gold = make_gold(g, std::vector<int>(g.size(), 0), w);
  const auto curve = frequency_curve(gold, make_pred(gold, p), normalizer_for(Language::en));
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0].z_mean, 0.0);
  EXPECT_EQ(curve[0].tokens, 40u);
  EXPECT_NEAR(curve[0].gold_rate, 0.3, 1e-12);
}

TEST(FrequencyCurve, RatesAverageToGlobalAndRiseWithFrequency) {
  // word i occurs 2^i times with label rate 0.05 i, rising with log frequency
  std::vector<std::string> g, p;
  std::vector<std::vector<std::string>> w;
  std::size_t positives = 0, total = 0;
  for (int i = 1; i <= 10; ++i) {
    const int n = 1 << i;
    const auto n_pos = static_cast<int>(std::lround(0.05 * i * n));
    for (int k = 0; k < n; ++k) {
      const bool pos = k < n_pos;
      g.push_back(pos ? "B" : "O");
      p.push_back(pos ? "B" : "O");
      w.push_back({"w" + std::to_string(i)});
      positives += pos;
      ++total;
    }
  }
  const auto gold = make_gold(g, std::vector<int>(g.size(), 0), w);
  const auto curve = frequency_curve(gold, make_pred(gold, p), normalizer_for(Language::en), nullptr, 5);
  ASSERT_GE(curve.size(), 3u);
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& b : curve) {
    weighted += b.gold_rate * static_cast<double>(b.tokens);
    n += b.tokens;
  }
  EXPECT_EQ(n, total);
  EXPECT_NEAR(weighted / static_cast<double>(n), static_cast<double>(positives) / static_cast<double>(total), 1e-12);
  for (std::size_t b = 1; b < curve.size(); ++b) {
    EXPECT_GT(curve[b].z_mean, curve[b - 1].z_mean);
    EXPECT_GT(curve[b].gold_rate, curve[b - 1].gold_rate);
  }
  const auto csv = curve_to_csv(curve);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin,z_low,z_high,z_mean,n_tokens,gold_rate,pred_rate");
}

TEST(ResultsTable, RowsPerModel) {
  const auto gold = make_gold({"BO", "OB"}, {0, 1});
  std::vector<EvalReport> reports{score(gold, make_pred(gold, {"BO", "OB"}, "conv"), {5, 1, 1}),
                                  score(gold, make_pred(gold, {"OO", "OB"}, "wiki"), {5, 1, 1})};
  const auto table = format_results_table(reports, Language::en);
  EXPECT_NE(table.find("English"), std::string::npos);
  EXPECT_NE(table.find("conv"), std::string::npos);
  EXPECT_NE(table.find("1.000 (.000)"), std::string::npos);
  EXPECT_EQ(to_json(reports[1])["folds"].size(), 2u);
}
