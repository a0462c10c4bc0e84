#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "builders.hpp"
#include "prosobench/error.hpp"
#include "prosobench/prominence.hpp"
#include "prosobench/rng.hpp"

using namespace prosobench;
using prosobench::testing::word;

namespace {

constexpr double kPeriod = 0.010;

/// `n` back-to-back words of `d` seconds.
std::vector<WordToken> words(std::size_t n, double d) {
  std::vector<WordToken> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto w = word("w" + std::to_string(i), d * static_cast<double>(i), {{"a", d}});
    w.token_index = static_cast<int>(i);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> gaussian_bump(std::size_t frames, double center_s, double sigma_s) {
  std::vector<double> v(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * kPeriod - center_s;
    v[i] = std::exp(-0.5 * t * t / (sigma_s * sigma_s));
  }
  return v;
}

std::vector<double> default_scales() {
  const ProminenceConfig c;
  return dyadic_scales(c.scale_min, c.octaves, c.voices_per_octave);
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(Ricker, PeakValue) {
  const double expected = 2.0 / (std::sqrt(3.0) * std::pow(M_PI, 0.25));
  EXPECT_NEAR(ricker(0.0), expected, 1e-12);
  EXPECT_NEAR(ricker(0.0), 0.8673, 1e-4);
  EXPECT_NEAR(ricker(1.0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(ricker(-2.5), ricker(2.5));
}

TEST(Scales, DefaultRangeIsDyadicFrom80msTo1280ms) {
  const auto s = default_scales();
  ASSERT_EQ(s.size(), 9u);
  EXPECT_DOUBLE_EQ(s.front(), 0.08);
  EXPECT_NEAR(s.back(), 1.28, 1e-12);
  for (std::size_t i = 2; i < s.size(); ++i) EXPECT_NEAR(s[i] / s[i - 2], 2.0, 1e-12);
}

TEST(Cwt, ZeroSignalGivesZeroCoefficients) {
  const std::vector<double> zero(1200, 0.0);
  const auto cwt = cwt_ricker(zero, default_scales(), kPeriod);
  for (const auto& row : cwt.coefficients)
    for (double c : row) EXPECT_EQ(c, 0.0);
}

TEST(Cwt, Linearity) {
  const auto x = random_signal(1500, 1);
  const auto y = random_signal(1500, 2);
  const double a = 2.5, b = -0.75;
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto scales = default_scales();
  const auto cx = cwt_ricker(x, scales, kPeriod);
  const auto cy = cwt_ricker(y, scales, kPeriod);
  const auto cz = cwt_ricker(z, scales, kPeriod);
  double worst = 0.0;
  for (std::size_t r = 0; r < scales.size(); ++r)
    for (std::size_t j = 0; j < z.size(); ++j)
      worst = std::max(worst, std::abs(cz.coefficients[r][j] - a * cx.coefficients[r][j] - b * cy.coefficients[r][j]));
  EXPECT_LT(worst, 1e-9);
}

TEST(Cwt, ShortSignalRejected) {
  const std::vector<double> x(100, 1.0);
  EXPECT_THROW(cwt_ricker(x, default_scales(), kPeriod), SignalTooShort);
  EXPECT_EQ(cwt_support_frames(1.28, kPeriod), 1025u);
}

TEST(Cwt, MatrixShape) {
  const auto scales = default_scales();
  const auto cwt = cwt_ricker(random_signal(1100, 3), scales, kPeriod);
  EXPECT_EQ(cwt.coefficients.size(), scales.size());
  EXPECT_EQ(cwt.n_frames(), 1100u);
}

TEST(Loma, LinesNeverCross) {
  const auto cwt = cwt_ricker(moving_average(random_signal(3000, 4), 3), default_scales(), kPeriod);
  const auto lines = trace_loma(cwt);
  ASSERT_FALSE(lines.empty());
  for (std::size_t l = 1; l < lines.size(); ++l)
    for (std::size_t r = 0; r < lines[l].positions.size(); ++r)
      EXPECT_LT(lines[l - 1].positions[r], lines[l].positions[r]);
  for (const auto& line : lines) EXPECT_EQ(line.positions.size(), cwt.scales.size());
}

TEST(WordScores, GaussianBumpWordIsUniqueArgmax) {
  const auto toks = words(40, 0.3);
  const std::size_t frames = 1200;
  for (std::size_t target : {5u, 17u, 23u, 34u}) {
    const double center = toks[target].t_start + 0.13;
    const auto cwt = cwt_ricker(gaussian_bump(frames, center, 0.1), default_scales(), kPeriod);
    const auto rec = word_prominence_scores(cwt, toks);
    ASSERT_EQ(rec.size(), toks.size());
    // brute force over every word
    std::size_t argmax = 0;
    for (std::size_t w = 0; w < rec.size(); ++w)
      if (rec[w].score > rec[argmax].score) argmax = w;
    EXPECT_EQ(argmax, target);
    for (std::size_t w = 0; w < rec.size(); ++w)
      if (w != target) EXPECT_LT(rec[w].score, rec[target].score);
  }
}

TEST(WordScores, ZeroCompositeLabelsNothing) {
  const auto toks = words(40, 0.3);
  const auto cwt = cwt_ricker(std::vector<double>(1200, 0.0), default_scales(), kPeriod);
  for (const auto& r : word_prominence_scores(cwt, toks)) {
    EXPECT_EQ(r.score, 0.0);
    EXPECT_FALSE(r.prominent);
  }
}

TEST(WordScores, ScalingTheCompositeScalesScores) {
  const auto toks = words(40, 0.3);
  const auto x = moving_average(random_signal(1200, 5), 4);
  std::vector<double> cx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cx[i] = 3.0 * x[i];
  const auto a = word_prominence_scores(cwt_ricker(x, default_scales(), kPeriod), toks);
  const auto b = word_prominence_scores(cwt_ricker(cx, default_scales(), kPeriod), toks);
  for (std::size_t w = 0; w < a.size(); ++w) EXPECT_NEAR(b[w].score, 3.0 * a[w].score, 1e-9);
}

TEST(WordScores, LabelIffScoreAtLeastThreshold) {
  const auto toks = words(40, 0.3);
  const auto x = moving_average(random_signal(1200, 6), 4);
  const auto rec = word_prominence_scores(cwt_ricker(x, default_scales(), kPeriod), toks, 0.8);
  for (const auto& r : rec) EXPECT_EQ(r.prominent, r.score >= 0.8);
}

TEST(Composite, ConstantTracksGiveZeroComposite) {
  AcousticTrack t;
  t.f0.assign(300, 150.0);
  t.energy.assign(300, 0.1);
  const auto c = compute_composite(t, words(10, 0.3));
  ASSERT_EQ(c.frames.size(), 300u);
  for (double v : c.frames) EXPECT_EQ(v, 0.0);
}

TEST(Composite, LongWordMaximisesDurationComponent) {
  auto toks = words(10, 0.2);
  // word 4 is twice as long; shift the rest
  for (std::size_t i = 4; i < toks.size(); ++i) {
    if (i > 4) toks[i].t_start += 0.2;
    toks[i].t_end += 0.2;
  }
  AcousticTrack t;
  t.f0.assign(220, 150.0);
  t.energy.assign(220, 0.1);
  const auto c = compute_composite(t, toks);
  const double top = *std::max_element(c.duration_z.begin(), c.duration_z.end());
  for (std::size_t i = 0; i < c.duration_z.size(); ++i) {
    const double mid = (static_cast<double>(i) + 0.5) * kPeriod;
    const bool inside = mid >= toks[4].t_start && mid < toks[4].t_end;
    if (inside) EXPECT_EQ(c.duration_z[i], top);
    else EXPECT_LT(c.duration_z[i], top);
  }
}

TEST(Composite, ComponentScaleInvariance) {
  const auto toks = words(10, 0.3);
  Rng rng(8);
  AcousticTrack t;
  for (int i = 0; i < 300; ++i) {
    t.f0.push_back(rng.bernoulli(0.7) ? 100.0 + 50.0 * rng.uniform() : 0.0);
    t.energy.push_back(0.01 + rng.uniform());
  }
  std::vector<double> f0, en, du;
  const auto base = compute_composite(t, toks);
  for (std::size_t i = 0; i < base.frames.size(); ++i) {
    f0.push_back(10.0 * base.f0_z[i]);
    en.push_back(10.0 * base.energy_z[i]);
    du.push_back(10.0 * base.duration_z[i]);
  }
  const auto scaled = fuse_components(f0, en, du, kPeriod);
  for (std::size_t i = 0; i < base.frames.size(); ++i) EXPECT_NEAR(scaled.frames[i], base.frames[i], 1e-9);
}

TEST(Composite, LengthEqualsFrameCountWhateverTheVoicing) {
  const auto toks = words(5, 0.3);
  for (double voiced_rate : {0.0, 0.3, 1.0}) {
    Rng rng(3);
    AcousticTrack t;
    for (int i = 0; i < 160; ++i) {
      t.f0.push_back(rng.bernoulli(voiced_rate) ? 120.0 : 0.0);
      t.energy.push_back(rng.uniform());
    }
    const auto c = compute_composite(t, toks);
    EXPECT_EQ(c.frames.size(), 160u);
    for (double v : c.frames) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Composite, TokenOutsideTrack) {
  AcousticTrack t;
  t.f0.assign(50, 100.0);
  t.energy.assign(50, 0.1);
  EXPECT_THROW(compute_composite(t, words(3, 0.3)), AlignmentError);
}

TEST(Interpolate, LinearWithHeldEdges) {
  const std::vector<double> v{0, 0, 2, 0, 0, 8, 0};
  const auto out = interpolate_unvoiced(v);
  const std::vector<double> expected{2, 2, 2, 4, 6, 8, 8};
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(out[i], expected[i]);
  const auto none = interpolate_unvoiced(std::vector<double>(4, 0.0));
  for (double x : none) EXPECT_EQ(x, 0.0);
}

TEST(Zscore, ZeroVarianceMapsToZeros) {
  for (double x : zscore(std::vector<double>(5, 3.0))) EXPECT_EQ(x, 0.0);
  const auto z = zscore(std::vector<double>{1, 2, 3});
  EXPECT_NEAR(z[0], -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(z[1], 0.0, 1e-12);
}

TEST(ScoreHistogram, ThresholdSplit) {
  std::vector<ProminenceRecord> recs(2);
  recs[0].score = 1.0;
  recs[1].score = 1.3;
  const auto h = score_histogram(recs, 1.25);
  EXPECT_EQ(h.below_threshold, 1u);
  EXPECT_EQ(h.at_or_above_threshold, 1u);
  EXPECT_EQ(h.total(), 2u);
  EXPECT_THROW(score_histogram({}, 1.25), EmptyInput);
}

TEST(Calibration, ThresholdHitsTargetRate) {
  std::vector<double> scores;
  for (int i = 0; i < 100; ++i) scores.push_back(0.05 * i);
  const double theta = calibrate_threshold(scores, 0.14);
  const auto n = std::count_if(scores.begin(), scores.end(), [&](double s) { return s >= theta; });
  EXPECT_EQ(n, 14);
}

TEST(ProminenceConfig, JsonRoundTripKeepsEveryConstant) {
  ProminenceConfig c;
  c.octaves = 3;
  c.weight_energy = 0.5;
  c.pitch.voicing_threshold = 0.3;
  const auto back = prominence_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(prominence_config_from_json(nlohmann::json::object()).octaves, 4);
}
