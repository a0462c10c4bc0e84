#include "prosobench/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "prosobench/error.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

namespace {

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Signal decode_wav(std::span<const std::uint8_t> bytes, unsigned channel, WavInfo* info_out) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ParseError("prominence", "not a RIFF/WAVE file", 0);

  WavInfo info;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    const bool is_fmt = std::memcmp(bytes.data() + pos, "fmt ", 4) == 0;
    const bool is_data = std::memcmp(bytes.data() + pos, "data", 4) == 0;
    if (body + size > bytes.size()) {
      if (is_data) throw ParseError("prominence", "truncated WAV data chunk", 0);
      throw ParseError("prominence", "truncated WAV chunk", 0);
    }
    if (is_fmt) {
      if (size < 16) throw ParseError("prominence", "fmt chunk too short", 0);
      info.format = le16(bytes, body);
      info.channels = le16(bytes, body + 2);
      info.sample_rate = le32(bytes, body + 4);
      info.bits_per_sample = le16(bytes, body + 14);
      if (info.format == kFormatExtensible) {
        if (size < 40) throw ParseError("prominence", "extensible fmt chunk too short", 0);
        info.format = le16(bytes, body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (is_data) {
      data = bytes.subspan(body, size);
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw ParseError("prominence", "WAV has no fmt chunk", 0);
  if (data.data() == nullptr) throw ParseError("prominence", "WAV has no data chunk", 0);

  const bool pcm16 = info.format == kFormatPcm && info.bits_per_sample == 16;
  const bool float32 = info.format == kFormatFloat && info.bits_per_sample == 32;
  if (!pcm16 && !float32)
    throw UnsupportedFormat("WAV format " + std::to_string(info.format) + " with " +
                            std::to_string(info.bits_per_sample) + " bits is not supported");
  if (info.channels == 0 || info.sample_rate == 0) throw ParseError("prominence", "WAV declares no channels or rate", 0);
  if (channel >= info.channels)
    throw UnsupportedFormat("channel " + std::to_string(channel) + " requested from a " +
                            std::to_string(info.channels) + "-channel file");

  const std::size_t bytes_per_sample = info.bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * info.channels;
  const std::size_t n = data.size() / frame_bytes;
  Signal sig;
  sig.sample_rate = info.sample_rate;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = i * frame_bytes + channel * bytes_per_sample;
    if (pcm16) {
      const auto v = static_cast<std::int16_t>(le16(data, at));
      sig.samples[i] = static_cast<double>(v) / 32768.0;
    } else {
      const std::uint32_t raw = le32(data, at);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      sig.samples[i] = std::clamp(static_cast<double>(f), -1.0, 1.0);
    }
  }
  if (info_out) *info_out = info;
  return sig;
}

Signal read_wav(const std::string& path, unsigned channel, WavInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "FileNotFound", "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, channel, info);
}

std::vector<std::uint8_t> encode_wav16(const std::vector<std::vector<double>>& channels, std::uint32_t sample_rate) {
  if (channels.empty()) throw InvalidArgument("prominence", "no channels to encode");
  const std::size_t n = channels.front().size();
  for (const auto& c : channels)
    if (c.size() != n) throw InvalidArgument("prominence", "channel lengths differ");
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint32_t data_size = static_cast<std::uint32_t>(n * n_ch * 2);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, n_ch);
  put32(out, sample_rate);
  put32(out, sample_rate * n_ch * 2);
  put16(out, static_cast<std::uint16_t>(n_ch * 2));
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_size);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& c : channels) {
      const double v = std::clamp(c[i], -1.0, 1.0);
      const auto q = static_cast<std::int16_t>(std::lround(std::clamp(v * 32768.0, -32768.0, 32767.0)));
      put16(out, static_cast<std::uint16_t>(q));
    }
  }
  return out;
}

void write_wav16(const std::string& path, const std::vector<std::vector<double>>& channels, std::uint32_t sample_rate) {
  auto bytes = encode_wav16(channels, sample_rate);
  text::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---------------------------------------------------------------------------
// Framing and pitch

std::size_t frame_count(const Signal& signal, double frame_period) {
  if (signal.samples.empty() || signal.sample_rate <= 0) return 0;
  return static_cast<std::size_t>(std::ceil(signal.duration() / frame_period - 1e-9));
}

namespace {

struct Framer {
  const Signal& sig;
  std::size_t win;
  double period;

  /// Copies the window centred on frame i (zero outside the signal).
  void frame(std::size_t i, std::vector<double>& buf) const {
    const double center = (static_cast<double>(i) + 0.5) * period * sig.sample_rate;
    const auto start = static_cast<long long>(std::llround(center - 0.5 * static_cast<double>(win)));
    const auto n = static_cast<long long>(sig.samples.size());
    for (std::size_t k = 0; k < win; ++k) {
      const long long idx = start + static_cast<long long>(k);
      buf[k] = idx >= 0 && idx < n ? sig.samples[static_cast<std::size_t>(idx)] : 0.0;
    }
  }
};

std::size_t window_samples(const Signal& s, const PitchConfig& c) {
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(c.window * s.sample_rate)));
}

}  // namespace

std::vector<double> extract_f0(const Signal& signal, const PitchConfig& config) {
  const std::size_t n_frames = frame_count(signal, config.frame_period);
  std::vector<double> f0(n_frames, 0.0);
  if (n_frames == 0) return f0;
  if (signal.sample_rate < 8000.0) throw InvalidArgument("prominence", "pitch tracking needs a sample rate >= 8 kHz");

  const std::size_t win = window_samples(signal, config);
  const auto lag_min = static_cast<std::size_t>(std::max(2.0, std::floor(signal.sample_rate / config.f0_max)));
  const auto lag_max = std::min(static_cast<std::size_t>(std::ceil(signal.sample_rate / config.f0_min)), win / 2);
  if (lag_max <= lag_min + 1) return f0;

  std::vector<double> hann(win);
  for (std::size_t k = 0; k < win; ++k)
    hann[k] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(win - 1));
  std::vector<double> hann_ac(lag_max + 2, 0.0);
  for (std::size_t t = 0; t < hann_ac.size(); ++t)
    for (std::size_t k = 0; k + t < win; ++k) hann_ac[t] += hann[k] * hann[k + t];

  Framer framer{signal, win, config.frame_period};
  std::vector<double> raw(win), y(win), nac(lag_max + 2, 0.0);
  for (std::size_t i = 0; i < n_frames; ++i) {
    framer.frame(i, raw);
    double mean = 0.0, power = 0.0;
    for (double v : raw) {
      mean += v;
      power += v * v;
    }
    mean /= static_cast<double>(win);
    if (std::sqrt(power / static_cast<double>(win)) < config.silence_rms) continue;

    for (std::size_t k = 0; k < win; ++k) y[k] = (raw[k] - mean) * hann[k];
    double r0 = 0.0;
    for (double v : y) r0 += v * v;
    if (!(r0 > 0.0)) continue;

    for (std::size_t t = lag_min - 1; t <= lag_max + 1 && t < win; ++t) {
      double r = 0.0;
      for (std::size_t k = 0; k + t < win; ++k) r += y[k] * y[k + t];
      nac[t] = (r / r0) / (hann_ac[t] / hann_ac[0]);
    }

    double best = -1.0;
    for (std::size_t t = lag_min; t <= lag_max; ++t)
      if (nac[t] > nac[t - 1] && nac[t] >= nac[t + 1]) best = std::max(best, nac[t]);
    if (best < config.voicing_threshold) continue;

    // Shortest lag whose peak is close to the best one avoids octave drops.
    std::size_t pick = 0;
    for (std::size_t t = lag_min; t <= lag_max; ++t) {
      if (nac[t] > nac[t - 1] && nac[t] >= nac[t + 1] && nac[t] >= 0.9 * best) {
        pick = t;
        break;
      }
    }
    if (nac[pick] < config.voicing_threshold) continue;
    const double a = nac[pick - 1], b = nac[pick], c = nac[pick + 1];
    const double denom = a - 2.0 * b + c;
    const double delta = denom != 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
    const double lag = static_cast<double>(pick) + delta;
    f0[i] = signal.sample_rate / lag;
  }
  return f0;
}

std::vector<double> frame_energy(const Signal& signal, const PitchConfig& config) {
  const std::size_t n_frames = frame_count(signal, config.frame_period);
  std::vector<double> energy(n_frames, 0.0);
  if (n_frames == 0) return energy;
  const std::size_t win = window_samples(signal, config);
  Framer framer{signal, win, config.frame_period};
  std::vector<double> raw(win);
  for (std::size_t i = 0; i < n_frames; ++i) {
    framer.frame(i, raw);
    double power = 0.0;
    for (double v : raw) power += v * v;
    energy[i] = std::sqrt(power / static_cast<double>(win));
  }
  return energy;
}

AcousticTrack compute_track(const Signal& signal, const PitchConfig& config) {
  AcousticTrack t;
  t.frame_period = config.frame_period;
  t.f0 = extract_f0(signal, config);
  t.energy = frame_energy(signal, config);
  return t;
}

std::string emit_track_tsv(const AcousticTrack& track) {
  std::string out(kTrackTsvHeader);
  out += '\n';
  for (std::size_t i = 0; i < track.n_frames(); ++i)
    out += std::to_string(i) + '\t' + text::format_double(track.f0[i]) + '\t' + text::format_double(track.energy[i]) + '\n';
  return out;
}

AcousticTrack parse_track_tsv(std::string_view text_in, double frame_period) {
  const auto rows = text::lines(text_in);
  if (rows.empty() || rows.front() != kTrackTsvHeader) throw ParseError("prominence", "track TSV header mismatch", 1);
  AcousticTrack track;
  track.frame_period = frame_period;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    auto cols = text::split(rows[i], '\t');
    if (cols.size() != 3) throw ParseError("prominence", "expected 3 columns", i + 1);
    auto frame = text::parse_int(cols[0]);
    auto f0 = text::parse_double(cols[1]);
    auto en = text::parse_double(cols[2]);
    if (!frame || !f0 || !en) throw ParseError("prominence", "unparsable track row", i + 1);
    if (*frame != static_cast<long long>(track.f0.size())) throw ParseError("prominence", "frame indices must be consecutive from 0", i + 1);
    if (*f0 < 0 || *en < 0) throw ParseError("prominence", "f0 and energy must be non-negative", i + 1);
    track.f0.push_back(*f0);
    track.energy.push_back(*en);
  }
  return track;
}

}  // namespace prosobench
