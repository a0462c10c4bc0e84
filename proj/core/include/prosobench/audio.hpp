#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prosobench {

/// One channel of audio, samples normalized to [-1, 1].
struct Signal {
  std::vector<double> samples;
  double sample_rate = 0.0;

  double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

struct WavInfo {
  std::uint16_t format = 0;  // 1 = PCM, 3 = IEEE float
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

/// Decodes a 16-bit PCM or 32-bit float WAV and extracts one channel
/// (stereo files are never mixed down). Int16 full scale maps -32768 to -1.
Signal decode_wav(std::span<const std::uint8_t> bytes, unsigned channel = 0, WavInfo* info = nullptr);
Signal read_wav(const std::string& path, unsigned channel = 0, WavInfo* info = nullptr);

/// Writes 16-bit PCM; each channel vector must have the same length.
std::vector<std::uint8_t> encode_wav16(const std::vector<std::vector<double>>& channels, std::uint32_t sample_rate);
void write_wav16(const std::string& path, const std::vector<std::vector<double>>& channels, std::uint32_t sample_rate);

struct PitchConfig {
  double frame_period = 0.010;
  double window = 0.040;
  double f0_min = 60.0;
  double f0_max = 400.0;
  double voicing_threshold = 0.45;
  /// Frames with RMS below this are unvoiced regardless of periodicity.
  double silence_rms = 1e-4;
};

/// Per-frame acoustic features on a fixed frame grid. Frame i covers
/// [i * frame_period, (i + 1) * frame_period).
struct AcousticTrack {
  double frame_period = 0.010;
  std::vector<double> f0;      // Hz, 0 = unvoiced
  std::vector<double> energy;  // linear RMS

  std::size_t n_frames() const { return f0.size(); }
};

std::size_t frame_count(const Signal& signal, double frame_period);

/// Autocorrelation pitch tracker: Hann window, normalized autocorrelation
/// corrected for the window's own autocorrelation, lag search within
/// [f0_min, f0_max], parabolic peak refinement. Returns Hz per frame.
std::vector<double> extract_f0(const Signal& signal, const PitchConfig& config = {});

/// RMS in the analysis window centred on each frame.
std::vector<double> frame_energy(const Signal& signal, const PitchConfig& config = {});

AcousticTrack compute_track(const Signal& signal, const PitchConfig& config = {});

inline constexpr std::string_view kTrackTsvHeader = "frame\tf0_hz\tenergy";
std::string emit_track_tsv(const AcousticTrack& track);
AcousticTrack parse_track_tsv(std::string_view text, double frame_period = 0.010);

}  // namespace prosobench
