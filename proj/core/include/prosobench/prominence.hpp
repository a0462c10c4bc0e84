#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosobench/audio.hpp"
#include "prosobench/corpus.hpp"
#include "prosobench/histogram.hpp"

namespace prosobench {

inline constexpr double kDefaultProminenceThreshold = 1.25;

/// Every constant of the prominence pipeline; serialized as the config JSON.
struct ProminenceConfig {
  PitchConfig pitch;
  double semitone_reference_hz = 100.0;
  double energy_floor = 1e-10;
  /// Relative weights of the f0, energy and duration components.
  double weight_f0 = 1.0;
  double weight_energy = 1.0;
  double weight_duration = 1.0;
  double smoothing = 0.050;  // seconds, moving average
  double scale_min = 0.08;   // seconds
  int octaves = 4;           // 0.08 s .. 1.28 s
  int voices_per_octave = 2;
  /// Kernel half-width in units of the scale.
  double support = 4.0;
  double threshold = kDefaultProminenceThreshold;
};

nlohmann::json to_json(const ProminenceConfig& c);
/// Missing keys keep their defaults.
ProminenceConfig prominence_config_from_json(const nlohmann::json& j);

struct CompositeSignal {
  double frame_period = 0.010;
  std::vector<double> frames;
  std::vector<double> f0_z;
  std::vector<double> energy_z;
  std::vector<double> duration_z;
};

/// Linear interpolation over unvoiced (<= 0) frames, edges held; all zeros
/// when nothing is voiced.
std::vector<double> interpolate_unvoiced(std::span<const double> values);

/// Z-scores over the whole vector; a zero-variance vector maps to zeros.
std::vector<double> zscore(std::span<const double> values);

/// Centred moving average over 2 * half + 1 frames, truncated at the edges.
std::vector<double> moving_average(std::span<const double> values, std::size_t half);

/// Z-scores each component, averages them with the configured weights, then
/// smooths. Components must have equal length.
CompositeSignal fuse_components(std::span<const double> f0_semitones, std::span<const double> log_energy,
                                std::span<const double> duration, double frame_period,
                                const ProminenceConfig& config = {});

/// Builds the three component tracks (semitone f0, log energy, per-frame
/// word duration) and fuses them. `tokens` are the words of one channel.
CompositeSignal compute_composite(const AcousticTrack& track, std::span<const WordToken> tokens,
                                  const ProminenceConfig& config = {});

/// Ricker (Mexican hat) mother wavelet.
double ricker(double t);

/// scale_min * 2^(j / voices) for j = 0 .. octaves * voices, ascending.
std::vector<double> dyadic_scales(double scale_min, int octaves, int voices_per_octave);

struct CwtMatrix {
  double frame_period = 0.010;
  std::vector<double> scales;                     // seconds, ascending
  std::vector<std::vector<double>> coefficients;  // [scale][frame]

  std::size_t n_frames() const { return coefficients.empty() ? 0 : coefficients.front().size(); }
};

/// Kernel support in frames (2 * ceil(support * scale) + 1).
std::size_t cwt_support_frames(double scale_seconds, double frame_period, double support = 4.0);

/// Continuous wavelet transform with L1-normalized Ricker kernels and
/// reflected edges. Throws SignalTooShort when the signal is shorter than the
/// largest kernel.
CwtMatrix cwt_ricker(std::span<const double> signal, std::span<const double> scales, double frame_period,
                     double support = 4.0);

/// A line of maximum amplitude: frame index per scale, ordered from the
/// largest scale down to the smallest.
struct LomaLine {
  std::vector<std::size_t> positions;
  double amplitude = 0.0;
};

/// Traces lines from every positive local maximum of the largest scale down
/// to the smallest, continuing each line to the nearest maximum within half
/// the scale it is leaving. When two lines reach the same maximum, the one with the
/// larger accumulated amplitude continues. Only complete lines are returned.
std::vector<LomaLine> trace_loma(const CwtMatrix& cwt);

struct ProminenceRecord {
  Provenance provenance;
  std::string word;
  double score = 0.0;
  bool prominent = false;
};

/// Each line's amplitude goes to the word containing its smallest-scale end;
/// a word scores the maximum it receives (0 if none).
std::vector<ProminenceRecord> word_prominence_scores(const CwtMatrix& cwt, std::span<const WordToken> tokens,
                                                     double threshold = kDefaultProminenceThreshold);

/// Full chain for one speaker channel: composite, CWT, line scores.
std::vector<ProminenceRecord> score_channel(const AcousticTrack& track, std::span<const WordToken> tokens,
                                            const ProminenceConfig& config = {});

/// Tokens of one speaker in a recording, in time order.
std::vector<WordToken> channel_tokens(const Recording& recording, const std::string& speaker);

/// Bins of width 0.25 over [0, 6] plus overflow.
HistogramReport score_histogram(const std::vector<ProminenceRecord>& records, double threshold,
                                double width = 0.25, double upper = 6.0);

/// Threshold whose labeled rate (score >= threshold) is closest to `target_rate`.
double calibrate_threshold(std::span<const double> scores, double target_rate);

void relabel(std::vector<ProminenceRecord>& records, double threshold);

inline constexpr std::string_view kProminenceTsvHeader = "speaker\tutt\tidx\tword\tscore\tlabel";
std::string emit_prominence_tsv(const std::vector<ProminenceRecord>& records);

}  // namespace prosobench
