#include "prosobench/prominence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prosobench/error.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

nlohmann::json to_json(const ProminenceConfig& c) {
  return {
      {"tracker",
       {{"frame_period", c.pitch.frame_period},
        {"window", c.pitch.window},
        {"f0_min", c.pitch.f0_min},
        {"f0_max", c.pitch.f0_max},
        {"voicing_threshold", c.pitch.voicing_threshold},
        {"silence_rms", c.pitch.silence_rms}}},
      {"semitone_reference_hz", c.semitone_reference_hz},
      {"energy_floor", c.energy_floor},
      {"weights", {{"f0", c.weight_f0}, {"energy", c.weight_energy}, {"duration", c.weight_duration}}},
      {"smoothing", c.smoothing},
      {"scales", {{"min", c.scale_min}, {"octaves", c.octaves}, {"voices_per_octave", c.voices_per_octave}}},
      {"support", c.support},
      {"threshold", c.threshold},
  };
}

ProminenceConfig prominence_config_from_json(const nlohmann::json& j) {
  ProminenceConfig c;
  auto get = [](const nlohmann::json& obj, const char* key, auto& dst) {
    if (obj.is_object() && obj.contains(key)) dst = obj.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  if (j.contains("tracker")) {
    const auto& t = j.at("tracker");
    get(t, "frame_period", c.pitch.frame_period);
    get(t, "window", c.pitch.window);
    get(t, "f0_min", c.pitch.f0_min);
    get(t, "f0_max", c.pitch.f0_max);
    get(t, "voicing_threshold", c.pitch.voicing_threshold);
    get(t, "silence_rms", c.pitch.silence_rms);
  }
  get(j, "semitone_reference_hz", c.semitone_reference_hz);
  get(j, "energy_floor", c.energy_floor);
  if (j.contains("weights")) {
    get(j.at("weights"), "f0", c.weight_f0);
    get(j.at("weights"), "energy", c.weight_energy);
    get(j.at("weights"), "duration", c.weight_duration);
  }
  get(j, "smoothing", c.smoothing);
  if (j.contains("scales")) {
    get(j.at("scales"), "min", c.scale_min);
    get(j.at("scales"), "octaves", c.octaves);
    get(j.at("scales"), "voices_per_octave", c.voices_per_octave);
  }
  get(j, "support", c.support);
  get(j, "threshold", c.threshold);
  if (!(c.threshold > 0)) throw InvalidArgument("prominence", "threshold must be positive");
  if (c.weight_f0 + c.weight_energy + c.weight_duration <= 0)
    throw InvalidArgument("prominence", "fusion weights must have a positive sum");
  return c;
}

// ---------------------------------------------------------------------------
// Composite

namespace {

std::vector<double> interpolate_masked(std::span<const double> values, const std::vector<bool>& voiced_mask) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> voiced;
  for (std::size_t i = 0; i < n; ++i)
    if (voiced_mask[i]) voiced.push_back(i);
  if (voiced.empty()) return out;

  for (std::size_t i = 0; i < voiced.front(); ++i) out[i] = values[voiced.front()];
  for (std::size_t i = voiced.back(); i < n; ++i) out[i] = values[voiced.back()];
  for (std::size_t k = 0; k + 1 < voiced.size(); ++k) {
    const std::size_t a = voiced[k], b = voiced[k + 1];
    const double va = values[a], vb = values[b];
    for (std::size_t i = a; i < b; ++i)
      out[i] = va + (vb - va) * static_cast<double>(i - a) / static_cast<double>(b - a);
  }
  return out;
}

}  // namespace

std::vector<double> interpolate_unvoiced(std::span<const double> values) {
  std::vector<bool> mask(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] > 0.0;
  return interpolate_masked(values, mask);
}

std::vector<double> zscore(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  // Below this the component is constant up to rounding.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t half) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += values[k];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

CompositeSignal fuse_components(std::span<const double> f0_semitones, std::span<const double> log_energy,
                                std::span<const double> duration, double frame_period,
                                const ProminenceConfig& config) {
  const std::size_t n = f0_semitones.size();
  if (log_energy.size() != n || duration.size() != n)
    throw InvalidArgument("prominence", "component tracks differ in length");
  CompositeSignal out;
  out.frame_period = frame_period;
  out.f0_z = zscore(f0_semitones);
  out.energy_z = zscore(log_energy);
  out.duration_z = zscore(duration);
  const double wsum = config.weight_f0 + config.weight_energy + config.weight_duration;
  std::vector<double> fused(n);
  for (std::size_t i = 0; i < n; ++i)
    fused[i] = (config.weight_f0 * out.f0_z[i] + config.weight_energy * out.energy_z[i] +
                config.weight_duration * out.duration_z[i]) /
               wsum;
  const auto width = static_cast<std::size_t>(std::llround(config.smoothing / frame_period));
  out.frames = moving_average(fused, width / 2);
  return out;
}

namespace {

/// Index of the token containing time t, or npos.
std::size_t token_at(std::span<const WordToken> tokens, double t) {
  auto it = std::upper_bound(tokens.begin(), tokens.end(), t, [](double v, const WordToken& w) { return v < w.t_start; });
  if (it == tokens.begin()) return std::string::npos;
  --it;
  return t < it->t_end ? static_cast<std::size_t>(it - tokens.begin()) : std::string::npos;
}

double frame_center(std::size_t i, double period) { return (static_cast<double>(i) + 0.5) * period; }

void check_sorted(std::span<const WordToken> tokens) {
  for (std::size_t i = 1; i < tokens.size(); ++i)
    if (tokens[i].t_start < tokens[i - 1].t_start)
      throw InvalidArgument("prominence", "channel tokens must be sorted by start time");
}

}  // namespace

CompositeSignal compute_composite(const AcousticTrack& track, std::span<const WordToken> tokens,
                                  const ProminenceConfig& config) {
  check_sorted(tokens);
  const std::size_t n = track.n_frames();
  if (track.energy.size() != n) throw InvalidArgument("prominence", "track f0/energy length mismatch");
  const double span_end = static_cast<double>(n) * track.frame_period;
  for (const auto& tok : tokens) {
    if (tok.t_start < -kTimeTolerance || tok.t_end > span_end + kTimeTolerance)
      throw AlignmentError("token '" + tok.orthography + "' [" + text::format_double(tok.t_start) + ", " +
                               text::format_double(tok.t_end) + "] outside track of " + text::format_double(span_end) +
                               " s",
                           "prominence");
  }

  std::vector<double> st(n, 0.0);
  std::vector<bool> voiced(n);
  for (std::size_t i = 0; i < n; ++i) {
    voiced[i] = track.f0[i] > 0.0;
    if (voiced[i]) st[i] = 12.0 * std::log2(track.f0[i] / config.semitone_reference_hz);
  }
  const auto f0_st = interpolate_masked(st, voiced);

  std::vector<double> log_e(n);
  for (std::size_t i = 0; i < n; ++i) log_e[i] = std::log(std::max(track.energy[i], config.energy_floor));

  std::vector<double> dur(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = token_at(tokens, frame_center(i, track.frame_period));
    if (w != std::string::npos) dur[i] = tokens[w].duration();
  }
  return fuse_components(f0_st, log_e, dur, track.frame_period, config);
}

// ---------------------------------------------------------------------------
// CWT

double ricker(double t) {
  const double norm = 2.0 / (std::sqrt(3.0) * std::pow(M_PI, 0.25));
  return norm * (1.0 - t * t) * std::exp(-0.5 * t * t);
}

std::vector<double> dyadic_scales(double scale_min, int octaves, int voices_per_octave) {
  if (!(scale_min > 0) || octaves < 0 || voices_per_octave < 1)
    throw InvalidArgument("prominence", "invalid scale settings");
  std::vector<double> scales;
  const int steps = octaves * voices_per_octave;
  for (int j = 0; j <= steps; ++j) scales.push_back(scale_min * std::exp2(static_cast<double>(j) / voices_per_octave));
  return scales;
}

std::size_t cwt_support_frames(double scale_seconds, double frame_period, double support) {
  const double s = scale_seconds / frame_period;
  return 2 * static_cast<std::size_t>(std::ceil(support * s)) + 1;
}

CwtMatrix cwt_ricker(std::span<const double> signal, std::span<const double> scales, double frame_period,
                     double support) {
  if (scales.empty()) throw InvalidArgument("prominence", "CWT needs at least one scale");
  const std::size_t n = signal.size();
  const double largest = *std::max_element(scales.begin(), scales.end());
  const std::size_t need = cwt_support_frames(largest, frame_period, support);
  if (n < need)
    throw SignalTooShort("signal has " + std::to_string(n) + " frames, largest scale needs " + std::to_string(need));

  CwtMatrix out;
  out.frame_period = frame_period;
  out.scales.assign(scales.begin(), scales.end());
  out.coefficients.assign(scales.size(), std::vector<double>(n, 0.0));
  const auto ni = static_cast<long long>(n);
  for (std::size_t r = 0; r < scales.size(); ++r) {
    const double s = scales[r] / frame_period;
    const auto half = static_cast<long long>((cwt_support_frames(scales[r], frame_period, support) - 1) / 2);
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double l1 = 0.0;
    for (long long m = -half; m <= half; ++m) {
      const double v = ricker(static_cast<double>(m) / s);
      kernel[static_cast<std::size_t>(m + half)] = v;
      l1 += std::abs(v);
    }
    for (double& v : kernel) v /= l1;

    auto& row = out.coefficients[r];
    for (long long j = 0; j < ni; ++j) {
      double acc = 0.0;
      for (long long m = -half; m <= half; ++m) {
        long long idx = j + m;
        if (idx < 0) idx = -idx;
        else if (idx >= ni) idx = 2 * (ni - 1) - idx;
        acc += kernel[static_cast<std::size_t>(m + half)] * signal[static_cast<std::size_t>(idx)];
      }
      row[static_cast<std::size_t>(j)] = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lines of maximum amplitude

namespace {

std::vector<std::size_t> positive_maxima(const std::vector<double>& row) {
  std::vector<std::size_t> out;
  const std::size_t n = row.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!(row[j] > 0.0)) continue;
    const bool left = j == 0 || row[j] > row[j - 1];
    const bool right = j + 1 == n || row[j] >= row[j + 1];
    if (left && right) out.push_back(j);
  }
  return out;
}

}  // namespace

std::vector<LomaLine> trace_loma(const CwtMatrix& cwt) {
  if (cwt.coefficients.empty()) return {};
  const std::size_t top = cwt.coefficients.size() - 1;

  std::vector<LomaLine> active;
  for (std::size_t j : positive_maxima(cwt.coefficients[top])) active.push_back({{j}, cwt.coefficients[top][j]});

  for (std::size_t r = top; r-- > 0;) {
    const auto& row = cwt.coefficients[r];
    const auto maxima = positive_maxima(row);
    const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.5 * cwt.scales[r + 1] / cwt.frame_period)));

    // candidate maximum per active line (npos = line terminates)
    std::vector<std::size_t> target(active.size(), std::string::npos);
    for (std::size_t l = 0; l < active.size(); ++l) {
      const std::size_t p = active[l].positions.back();
      auto it = std::lower_bound(maxima.begin(), maxima.end(), p);
      std::size_t best = std::string::npos, best_dist = SIZE_MAX;
      if (it != maxima.begin()) {
        const std::size_t m = *std::prev(it);
        best = m;
        best_dist = p - m;
      }
      if (it != maxima.end() && *it - p < best_dist) {
        best = *it;
        best_dist = *it - p;
      }
      if (best != std::string::npos && best_dist <= window) target[l] = best;
    }

    std::vector<LomaLine> next;
    for (std::size_t l = 0; l < active.size();) {
      if (target[l] == std::string::npos) {
        ++l;
        continue;
      }
      // lines are ordered, so lines sharing a target are adjacent
      std::size_t winner = l;
      std::size_t k = l + 1;
      for (; k < active.size() && target[k] == target[l]; ++k)
        if (active[k].amplitude > active[winner].amplitude) winner = k;
      LomaLine line = std::move(active[winner]);
      line.positions.push_back(target[l]);
      line.amplitude += row[target[l]];
      next.push_back(std::move(line));
      l = k;
    }
    active = std::move(next);
  }
  return active;
}

std::vector<ProminenceRecord> word_prominence_scores(const CwtMatrix& cwt, std::span<const WordToken> tokens,
                                                     double threshold) {
  check_sorted(tokens);
  std::vector<ProminenceRecord> records;
  records.reserve(tokens.size());
  for (const auto& tok : tokens) records.push_back({provenance_of(tok), tok.orthography, 0.0, false});

  for (const auto& line : trace_loma(cwt)) {
    const auto w = token_at(tokens, frame_center(line.positions.back(), cwt.frame_period));
    if (w == std::string::npos) continue;
    records[w].score = std::max(records[w].score, line.amplitude);
  }
  for (auto& r : records) r.prominent = r.score >= threshold;
  return records;
}

std::vector<ProminenceRecord> score_channel(const AcousticTrack& track, std::span<const WordToken> tokens,
                                            const ProminenceConfig& config) {
  const auto composite = compute_composite(track, tokens, config);
  const auto scales = dyadic_scales(config.scale_min, config.octaves, config.voices_per_octave);
  const auto cwt = cwt_ricker(composite.frames, scales, composite.frame_period, config.support);
  return word_prominence_scores(cwt, tokens, config.threshold);
}

std::vector<WordToken> channel_tokens(const Recording& recording, const std::string& speaker) {
  std::vector<WordToken> out;
  for (const auto& utt : recording.utterances)
    if (utt.speaker_id == speaker) out.insert(out.end(), utt.tokens.begin(), utt.tokens.end());
  std::stable_sort(out.begin(), out.end(), [](const WordToken& a, const WordToken& b) { return a.t_start < b.t_start; });
  return out;
}

HistogramReport score_histogram(const std::vector<ProminenceRecord>& records, double threshold, double width,
                                double upper) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) scores.push_back(r.score);
  return make_histogram(scores, width, upper, threshold, "prominence");
}

double calibrate_threshold(std::span<const double> scores, double target_rate) {
  if (scores.empty()) throw EmptyInput("cannot calibrate on zero scores");
  if (!(target_rate > 0.0 && target_rate < 1.0)) throw InvalidArgument("prominence", "target rate must be in (0, 1)");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double n = static_cast<double>(sorted.size());
  double best_theta = sorted.front();
  double best_gap = 2.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;  // rate at theta counts all ties
    const double rate = static_cast<double>(i + 1) / n;
    const double gap = std::abs(rate - target_rate);
    if (gap < best_gap) {
      best_gap = gap;
      best_theta = sorted[i];
    }
  }
  return best_theta;
}

void relabel(std::vector<ProminenceRecord>& records, double threshold) {
  for (auto& r : records) r.prominent = r.score >= threshold;
}

std::string emit_prominence_tsv(const std::vector<ProminenceRecord>& records) {
  std::string out(kProminenceTsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.provenance.speaker + '\t' + std::to_string(r.provenance.utterance) + '\t' +
           std::to_string(r.provenance.index) + '\t' + r.word + '\t' + text::format_double(r.score) + '\t' +
           (r.prominent ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace prosobench
