#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../app/pipeline.hpp"
#include "prosobench/benchset.hpp"
#include "prosobench/corpus_io.hpp"
#include "prosobench/error.hpp"
#include "prosobench/evaluate.hpp"
#include "prosobench/rng.hpp"
#include "prosobench/text.hpp"

namespace fs = std::filesystem;

namespace prosobench::synth {

namespace {

const std::set<std::string> kUnvoiced = {"f", "k", "s", "t"};

struct WordType {
  std::string orthography;
  std::vector<std::string> phones;
  std::vector<std::size_t> syllable_starts;  // phone indices opening each syllable
};

bool is_vowel(const std::string& p) { return p == "aa" || p == "ae" || p == "ah" || p == "eh" || p == "ih" || p == "uw"; }

/// Deterministic lexicon of CV(C) words, one to three syllables.
std::vector<WordType> make_lexicon(std::size_t n, Rng& rng) {
  const std::vector<std::string> onsets = {"b", "d", "f", "g", "k", "l", "m", "n", "s", "t"};
  const std::vector<std::string> vowels = {"aa", "ae", "ah", "eh", "ih", "uw"};
  const std::vector<std::string> codas = {"", "", "n", "s", "t", "m", "k"};
  std::vector<WordType> out;
  std::set<std::string> seen;
  while (out.size() < n) {
    WordType w;
    const auto syllables = 1 + rng.index(3);
    for (std::uint64_t s = 0; s < syllables; ++s) {
      w.syllable_starts.push_back(w.phones.size());
      w.phones.push_back(onsets[rng.index(onsets.size())]);
      w.phones.push_back(vowels[rng.index(vowels.size())]);
      const auto& coda = codas[rng.index(codas.size())];
      if (!coda.empty()) w.phones.push_back(coda);
    }
    for (const auto& p : w.phones) w.orthography += p;
    if (seen.insert(w.orthography).second) out.push_back(std::move(w));
  }
  return out;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

/// Builds a token with consecutive segments from `start`, durations given.
WordToken build_token(const WordType& type, const std::vector<double>& durations, double start, double quantum) {
  WordToken tok;
  tok.orthography = type.orthography;
  tok.t_start = start;
  double t = start;
  for (std::size_t i = 0; i < type.phones.size(); ++i) {
    double end = t + durations[i];
    if (quantum > 0) end = round_to(end, quantum);
    if (end <= t) end = t + std::max(quantum, 1e-3);
    tok.segments.push_back({type.phones[i], t, end});
    t = end;
  }
  tok.t_end = t;
  std::vector<Syllable> syls;
  for (std::size_t s = 0; s < type.syllable_starts.size(); ++s) {
    const std::size_t from = type.syllable_starts[s];
    const std::size_t to = s + 1 < type.syllable_starts.size() ? type.syllable_starts[s + 1] : type.phones.size();
    Syllable syl;
    syl.segments.assign(tok.segments.begin() + static_cast<std::ptrdiff_t>(from),
                        tok.segments.begin() + static_cast<std::ptrdiff_t>(to));
    syl.t_start = syl.segments.front().t_start;
    syl.t_end = syl.segments.back().t_end;
    syls.push_back(std::move(syl));
  }
  tok.syllables = std::move(syls);
  return tok;
}

std::string speaker_name(std::size_t i) {
  std::string s = "s";
  if (i < 10) s += '0';
  return s + std::to_string(i);
}

}  // namespace

std::map<std::string, double> phone_means() {
  return {{"aa", 0.110}, {"ae", 0.100}, {"ah", 0.070}, {"b", 0.060}, {"d", 0.055}, {"eh", 0.090},
          {"f", 0.095},  {"g", 0.065},  {"ih", 0.075}, {"k", 0.080}, {"l", 0.065}, {"m", 0.070},
          {"n", 0.060},  {"s", 0.105},  {"t", 0.060},  {"uw", 0.120}};
}

PlantedReduction make_reduction_fixture(const ReductionFixtureSpec& spec) {
  if (spec.block_size <= 0 || spec.reduced_per_block < 0 || spec.reduced_per_block > spec.block_size)
    throw InvalidArgument("synth", "invalid block layout");
  Rng rng(spec.seed);
  const auto means = phone_means();
  const auto lexicon = make_lexicon(40, rng);
  const double f = static_cast<double>(spec.reduced_per_block) / static_cast<double>(spec.block_size);
  const double k = 1.0 / ((1.0 - f) + f * spec.ratio);

  PlantedReduction out;
  out.planted_means = means;
  out.corpus.language = spec.language;
  std::vector<std::vector<std::vector<bool>>> flags;  // [recording][utterance][token]
  constexpr int kUtteranceLength = 10;
  for (int r = 0; r < spec.recordings; ++r) {
    Recording rec;
    rec.id = "rec" + std::to_string(r);
    const std::string spk = speaker_name(static_cast<std::size_t>(r));
    rec.speaker_ids.insert(spk);
    std::vector<std::vector<bool>> rec_flags;
    double t = 0.5;
    int in_utt = 0;
    for (int b = 0; b < spec.blocks_per_recording; ++b) {
      const auto& type = lexicon[rng.index(lexicon.size())];
      std::vector<bool> reduced(static_cast<std::size_t>(spec.block_size), false);
      for (int i = 0; i < spec.reduced_per_block; ++i) reduced[static_cast<std::size_t>(i)] = true;
      rng.shuffle(reduced);
      for (int i = 0; i < spec.block_size; ++i) {
        if (in_utt == 0) {
          rec.utterances.push_back(Utterance{spk, static_cast<int>(rec.utterances.size()), {}});
          rec_flags.emplace_back();
          t += 0.3;
        }
        const bool red = reduced[static_cast<std::size_t>(i)];
        const double factor = red ? spec.ratio * k : k;
        std::vector<double> durs;
        for (const auto& p : type.phones)
          durs.push_back(std::max(0.002, means.at(p) * factor * (1.0 + spec.noise_sd * rng.normal())));
        auto tok = build_token(type, durs, t, 0.0);
        t = tok.t_end;
        tok.speaker_id = spk;
        rec.utterances.back().tokens.push_back(std::move(tok));
        rec_flags.back().push_back(red);
        in_utt = (in_utt + 1) % kUtteranceLength;
      }
    }
    out.corpus.recordings.push_back(std::move(rec));
    flags.push_back(std::move(rec_flags));
  }
  number_utterances(out.corpus);
  for (std::size_t r = 0; r < flags.size(); ++r)
    for (std::size_t u = 0; u < flags[r].size(); ++u)
      for (std::size_t i = 0; i < flags[r][u].size(); ++i)
        if (flags[r][u][i]) out.reduced.insert(provenance_of(out.corpus.recordings[r].utterances[u].tokens[i]));
  return out;
}

SyllableFixture make_syllable_fixture(std::size_t n_syllables, std::uint64_t seed, double noise_sd) {
  Rng rng(seed);
  SyllableFixture out;
  out.intercept = 0.045;
  const std::vector<std::string> labels = {"b", "d", "aa", "ih", "s", "n", "uw", "k"};
  for (std::size_t i = 0; i < labels.size(); ++i) out.coefficients[labels[i]] = 0.02 + 0.011 * static_cast<double>(i);

  Recording rec;
  rec.id = "syl";
  rec.speaker_ids.insert("s00");
  rec.utterances.push_back(Utterance{"s00", 0, {}});
  double t = 0.0;
  std::size_t made = 0;
  while (made < n_syllables) {
    WordToken tok;
    tok.speaker_id = "s00";
    tok.t_start = t;
    std::vector<Syllable> syls;
    const auto count = std::min<std::size_t>(1 + rng.index(3), n_syllables - made);
    for (std::size_t s = 0; s < count; ++s) {
      Syllable syl;
      const auto n_seg = 1 + rng.index(4);
      std::vector<std::string> seg_labels;
      double dur = out.intercept;
      for (std::uint64_t j = 0; j < n_seg; ++j) {
        seg_labels.push_back(labels[rng.index(labels.size())]);
        dur += out.coefficients[seg_labels.back()];
      }
      if (noise_sd > 0) dur += noise_sd * rng.normal();
      // Segments share the syllable duration proportionally to their coefficients.
      double weights = 0.0;
      for (const auto& l : seg_labels) weights += out.coefficients[l];
      syl.t_start = t;
      double cursor = t;
      for (std::size_t j = 0; j < seg_labels.size(); ++j) {
        const double end = j + 1 == seg_labels.size() ? t + dur : cursor + dur * out.coefficients[seg_labels[j]] / weights;
        syl.segments.push_back({seg_labels[j], cursor, end});
        cursor = end;
      }
      syl.t_end = t + dur;
      t = syl.t_end;
      tok.orthography += seg_labels.front();
      tok.segments.insert(tok.segments.end(), syl.segments.begin(), syl.segments.end());
      syls.push_back(std::move(syl));
      ++made;
    }
    tok.t_end = t;
    tok.syllables = std::move(syls);
    rec.utterances.back().tokens.push_back(std::move(tok));
  }
  out.corpus.recordings.push_back(std::move(rec));
  number_utterances(out.corpus);
  return out;
}

Signal sine(double hz, double seconds, double sample_rate, double amp) {
  Signal s;
  s.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] = amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / sample_rate);
  return s;
}

ProsodyFixture make_prosody_fixture(const ProsodyFixtureSpec& spec) {
  Rng rng(spec.seed);
  const auto means = phone_means();
  const auto lexicon = make_lexicon(40, rng);
  // Zipf-like word choice so frequency analyses have spread.
  std::vector<double> cdf;
  double acc = 0.0;
  for (std::size_t i = 0; i < lexicon.size(); ++i) cdf.push_back(acc += 1.0 / static_cast<double>(i + 1));
  for (auto& c : cdf) c /= acc;
  const double k = 1.0 / ((1.0 - spec.reduced_fraction) + spec.reduced_fraction * 0.4);
  constexpr double kQuantum = 0.001;

  ProsodyFixture out;
  out.corpus.language = spec.language;
  struct Planned {
    std::size_t rec, utt, tok;
    bool reduced, prominent;
  };
  std::vector<Planned> plan;
  std::size_t speaker_counter = 0;
  for (int r = 0; r < spec.recordings; ++r) {
    Recording rec;
    rec.id = "rec" + std::to_string(r + 1);
    std::vector<std::string> spks;
    std::vector<double> base_f0;
    for (int s = 0; s < spec.speakers_per_recording; ++s) {
      spks.push_back(speaker_name(speaker_counter));
      base_f0.push_back(speaker_counter % 2 == 0 ? 115.0 + 3.0 * static_cast<double>(speaker_counter)
                                                 : 195.0 + 3.0 * static_cast<double>(speaker_counter));
      ++speaker_counter;
      rec.speaker_ids.insert(spks.back());
    }
    // Prosody per token: (speaker channel, f0 multiplier, amplitude).
    struct Voice {
      std::size_t channel;
      double f0, amp;
    };
    std::vector<Voice> voices;
    double t = 0.4;
    const int turns = spec.utterances_per_speaker * spec.speakers_per_recording;
    for (int turn = 0; turn < turns; ++turn) {
      const auto ch = static_cast<std::size_t>(turn % spec.speakers_per_recording);
      Utterance utt{spks[ch], turn, {}};
      for (int w = 0; w < spec.words_per_utterance; ++w) {
        const double u = rng.uniform();
        const auto type_index =
            static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto& type = lexicon[std::min(type_index, lexicon.size() - 1)];
        const bool reduced = rng.bernoulli(spec.reduced_fraction);
        const bool prominent = !reduced && rng.bernoulli(spec.prominent_fraction);
        const double factor = (reduced ? 0.4 * k : k) * (prominent ? 1.25 : 1.0);
        std::vector<double> durs;
        for (const auto& p : type.phones)
          durs.push_back(std::max(0.01, means.at(p) * factor * (1.0 + 0.04 * rng.normal())));
        auto tok = build_token(type, durs, t, kQuantum);
        tok.speaker_id = spks[ch];
        t = tok.t_end;
        plan.push_back({static_cast<std::size_t>(r), utt.tokens.size(), 0, reduced, prominent});
        plan.back().utt = static_cast<std::size_t>(turn);
        plan.back().tok = utt.tokens.size();
        const double declination = 1.0 - 0.08 * static_cast<double>(w) / spec.words_per_utterance;
        voices.push_back({ch, base_f0[ch] * declination * (prominent ? 1.35 : 1.0) * (1.0 + 0.03 * rng.normal()),
                          prominent ? 0.5 : 0.22});
        utt.tokens.push_back(std::move(tok));
      }
      rec.utterances.push_back(std::move(utt));
      t = round_to(t + 0.25 + 0.2 * rng.uniform(), kQuantum);
    }
    const double duration = t + 0.4;

    // Audio: harmonic complex on voiced phones, noise on unvoiced ones.
    const auto n_samples = static_cast<std::size_t>(std::ceil(duration * spec.sample_rate));
    std::vector<std::vector<double>> channels(spks.size(), std::vector<double>(n_samples, 0.0));
    for (auto& ch : channels)
      for (auto& v : ch) v = 0.0005 * rng.normal();
    std::size_t vi = 0;
    for (const auto& utt : rec.utterances) {
      for (const auto& tok : utt.tokens) {
        const auto& voice = voices[vi++];
        auto& ch = channels[voice.channel];
        const auto s0 = static_cast<std::size_t>(tok.t_start * spec.sample_rate);
        const auto s1 = std::min(n_samples, static_cast<std::size_t>(tok.t_end * spec.sample_rate));
        const double ramp = 0.01 * spec.sample_rate;
        double phase = 0.0;
        std::size_t seg = 0;
        for (std::size_t i = s0; i < s1; ++i) {
          const double time = static_cast<double>(i) / spec.sample_rate;
          while (seg + 1 < tok.segments.size() && time >= tok.segments[seg].t_end) ++seg;
          const double from_start = static_cast<double>(i - s0), to_end = static_cast<double>(s1 - i);
          const double env = std::min({1.0, from_start / ramp, to_end / ramp});
          const double f0 = voice.f0 * (1.0 + 0.02 * std::sin(2.0 * M_PI * 3.0 * time));
          phase += 2.0 * M_PI * f0 / spec.sample_rate;
          double v;
          if (kUnvoiced.contains(tok.segments[seg].label)) {
            v = 0.15 * rng.normal();
          } else {
            v = std::sin(phase) + 0.5 * std::sin(2.0 * phase) + 0.25 * std::sin(3.0 * phase);
            if (!is_vowel(tok.segments[seg].label)) v *= 0.5;
          }
          ch[i] += voice.amp * env * v;
        }
      }
    }
    out.audio.push_back(std::move(channels));
    out.channel_speakers.push_back(spks);
    out.corpus.recordings.push_back(std::move(rec));
  }
  number_utterances(out.corpus);
  for (const auto& p : plan) {
    const auto prov = provenance_of(out.corpus.recordings[p.rec].utterances[p.utt].tokens[p.tok]);
    if (p.reduced) out.reduced.insert(prov);
    if (p.prominent) out.prominent.insert(prov);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Format writers

namespace {

struct Span {
  double start, end;
  std::string label;
};

/// Fills gaps in [0, duration] with empty intervals.
std::vector<Span> cover(std::vector<Span> spans, double duration) {
  std::vector<Span> out;
  double t = 0.0;
  for (auto& s : spans) {
    if (s.start > t + 1e-9) out.push_back({t, s.start, ""});
    out.push_back(s);
    t = s.end;
  }
  if (duration > t + 1e-9) out.push_back({t, duration, ""});
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string write_textgrid(const Recording& recording, double duration) {
  std::vector<std::pair<std::string, std::vector<Span>>> tiers;
  for (const auto& spk : recording.speaker_ids) {
    std::vector<Span> words, phones, syls;
    for (const auto& utt : recording.utterances) {
      if (utt.speaker_id != spk) continue;
      for (const auto& tok : utt.tokens) {
        words.push_back({tok.t_start, tok.t_end, tok.orthography});
        for (const auto& seg : tok.segments) phones.push_back({seg.t_start, seg.t_end, seg.label});
        if (tok.syllables)
          for (const auto& syl : *tok.syllables) syls.push_back({syl.t_start, syl.t_end, "syl"});
      }
    }
    tiers.emplace_back(spk + "-words", cover(std::move(words), duration));
    tiers.emplace_back(spk + "-phones", cover(std::move(phones), duration));
    tiers.emplace_back(spk + "-syllables", cover(std::move(syls), duration));
  }
  const auto num = [](double v) { return text::format_double(v); };
  std::ostringstream os;
  os << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  os << "xmin = 0 \nxmax = " << num(duration) << " \ntiers? <exists> \nsize = " << tiers.size() << " \nitem []: \n";
  for (std::size_t t = 0; t < tiers.size(); ++t) {
    os << "    item [" << t + 1 << "]:\n";
    os << "        class = \"IntervalTier\" \n";
    os << "        name = " << quote(tiers[t].first) << " \n";
    os << "        xmin = 0 \n        xmax = " << num(duration) << " \n";
    os << "        intervals: size = " << tiers[t].second.size() << " \n";
    for (std::size_t i = 0; i < tiers[t].second.size(); ++i) {
      const auto& s = tiers[t].second[i];
      os << "        intervals [" << i + 1 << "]:\n";
      os << "            xmin = " << num(s.start) << " \n";
      os << "            xmax = " << num(s.end) << " \n";
      os << "            text = " << quote(s.label) << " \n";
    }
  }
  return os.str();
}

namespace {

std::string buckeye(const Recording& recording, const std::string& signal, bool words) {
  std::ostringstream os;
  os << "signal " << signal << "\nnfields 1\n# \n";
  double t = 0.0;
  for (const auto& utt : recording.utterances) {
    for (const auto& tok : utt.tokens) {
      if (tok.t_start > t + 1e-9) os << text::format_double(tok.t_start) << "  121 " << (words ? "<SIL>" : "SIL") << "\n";
      if (words) {
        std::string phones;
        for (const auto& seg : tok.segments) phones += (phones.empty() ? "" : " ") + seg.label;
        os << text::format_double(tok.t_end) << "  121 " << tok.orthography << "; " << phones << "; " << phones
           << "; NN\n";
      } else {
        for (const auto& seg : tok.segments) os << text::format_double(seg.t_end) << "  121 " << seg.label << "\n";
      }
      t = tok.t_end;
    }
  }
  return os.str();
}

Recording single_speaker(const Recording& rec, const std::string& spk) {
  Recording out;
  out.id = rec.id;
  out.speaker_ids.insert(spk);
  for (const auto& u : rec.utterances)
    if (u.speaker_id == spk) out.utterances.push_back(u);
  return out;
}

}  // namespace

std::string write_buckeye_words(const Recording& recording, const std::string& signal) {
  return buckeye(recording, signal, true);
}

std::string write_buckeye_phones(const Recording& recording, const std::string& signal) {
  return buckeye(recording, signal, false);
}

// ---------------------------------------------------------------------------
// Bundled fixture

namespace {

void put(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  text::write_file(path.string(), contents);
}

std::string tidy_track(const AcousticTrack& track) {
  AcousticTrack t = track;
  for (auto& f : t.f0) f = std::round(f * 100.0) / 100.0;
  for (auto& e : t.energy) {
    if (e <= 0) continue;
    const double mag = std::pow(10.0, std::floor(std::log10(e)) - 4);
    e = std::round(e / mag) * mag;
    e = std::stod(text::format_fixed(e, 12));
  }
  return emit_track_tsv(t);
}

/// Flips each gold label with probability `p`, BIO re-encoded per utterance.
std::string noisy_predictions(const GoldSet& gold, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::string out(kPredictionTsvHeader);
  out += '\n';
  for (const auto& s : gold.dataset.sentences) {
    std::vector<bool> labels;
    for (const auto& t : s.tokens) labels.push_back(is_positive(t.tag) != rng.bernoulli(p));
    const auto tags = encode_bio(labels);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      out += t.provenance.speaker + '\t' + std::to_string(t.provenance.utterance) + '\t' +
             std::to_string(t.provenance.index) + '\t' + t.word + '\t' + to_char(tags[i]) + '\n';
    }
  }
  return out;
}

/// Subword-level rendition: each word split into 1-3 pieces with per-piece tags.
std::string subword_predictions(const GoldSet& gold, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::string out(kSubwordPredictionTsvHeader);
  out += '\n';
  for (const auto& s : gold.dataset.sentences) {
    for (const auto& t : s.tokens) {
      const bool word_label = is_positive(t.tag) != rng.bernoulli(p);
      const auto pieces = 1 + rng.index(3);
      for (std::uint64_t j = 0; j < pieces; ++j) {
        // One dissenting piece at most keeps the majority on `word_label`.
        const bool piece = (j == 1 && pieces == 3) ? !word_label : word_label;
        out += t.provenance.speaker + '\t' + std::to_string(t.provenance.utterance) + '\t' +
               std::to_string(t.provenance.index) + '\t' + t.word + '\t' + std::to_string(j) + '\t' +
               (piece ? (j == 0 ? "B" : "I") : "O") + '\n';
      }
    }
  }
  return out;
}

}  // namespace

void write_pipeline_fixture(const fs::path& dir, const ProsodyFixtureSpec& spec) {
  if (spec.recordings < 4) throw InvalidArgument("synth", "the pipeline fixture needs four recordings");
  const auto fx = make_prosody_fixture(spec);
  nlohmann::json recordings = nlohmann::json::array();
  const auto sr = static_cast<std::uint32_t>(spec.sample_rate);

  auto track_of = [&](std::size_t r, std::size_t ch) {
    Signal s{fx.audio[r][ch], spec.sample_rate};
    return compute_track(s);
  };
  auto duration_of = [&](std::size_t r) { return static_cast<double>(fx.audio[r][0].size()) / spec.sample_rate; };

  // rec1: aligned TSV + stereo audio.
  {
    const auto& rec = fx.corpus.recordings[0];
    put(dir / "corpus" / (rec.id + ".tsv"), emit_aligned_tsv(rec));
    fs::create_directories(dir / "audio");
    write_wav16((dir / "audio" / (rec.id + ".wav")).string(), fx.audio[0], sr);
    nlohmann::json channels = nlohmann::json::object();
    for (std::size_t c = 0; c < fx.channel_speakers[0].size(); ++c) channels[fx.channel_speakers[0][c]] = c;
    recordings.push_back({{"id", rec.id},
                          {"format", "tsv"},
                          {"path", "corpus/" + rec.id + ".tsv"},
                          {"audio", "audio/" + rec.id + ".wav"},
                          {"channels", channels}});
  }
  // rec2: TextGrid + tracks.
  {
    const auto& rec = fx.corpus.recordings[1];
    put(dir / "corpus" / (rec.id + ".TextGrid"), write_textgrid(rec, duration_of(1)));
    nlohmann::json tiers = nlohmann::json::array(), tracks = nlohmann::json::object();
    for (std::size_t c = 0; c < fx.channel_speakers[1].size(); ++c) {
      const auto& spk = fx.channel_speakers[1][c];
      tiers.push_back({{"speaker", spk}, {"words", spk + "-words"}, {"phones", spk + "-phones"},
                       {"syllables", spk + "-syllables"}});
      const std::string name = "tracks/" + rec.id + "_" + spk + ".tsv";
      put(dir / name, tidy_track(track_of(1, c)));
      tracks[spk] = name;
    }
    recordings.push_back({{"id", rec.id},
                          {"format", "textgrid"},
                          {"path", "corpus/" + rec.id + ".TextGrid"},
                          {"tiers", tiers},
                          {"tracks", tracks}});
  }
  // rec3: one Buckeye pair per speaker + tracks.
  {
    const auto& rec = fx.corpus.recordings[2];
    for (std::size_t c = 0; c < fx.channel_speakers[2].size(); ++c) {
      const auto& spk = fx.channel_speakers[2][c];
      const auto mono = single_speaker(rec, spk);
      const std::string base = rec.id + spk;
      put(dir / "corpus" / (base + ".words"), write_buckeye_words(mono, base));
      put(dir / "corpus" / (base + ".phones"), write_buckeye_phones(mono, base));
      const std::string name = "tracks/" + base + ".tsv";
      put(dir / name, tidy_track(track_of(2, c)));
      recordings.push_back({{"id", base},
                            {"format", "buckeye"},
                            {"words", "corpus/" + base + ".words"},
                            {"phones", "corpus/" + base + ".phones"},
                            {"speaker", spk},
                            {"tracks", {{spk, name}}}});
    }
  }
  // rec4 onward: aligned TSV + tracks.
  for (std::size_t r = 3; r < fx.corpus.recordings.size(); ++r) {
    const auto& rec = fx.corpus.recordings[r];
    put(dir / "corpus" / (rec.id + ".tsv"), emit_aligned_tsv(rec));
    nlohmann::json tracks = nlohmann::json::object();
    for (std::size_t c = 0; c < fx.channel_speakers[r].size(); ++c) {
      const auto& spk = fx.channel_speakers[r][c];
      const std::string name = "tracks/" + rec.id + "_" + spk + ".tsv";
      put(dir / name, tidy_track(track_of(r, c)));
      tracks[spk] = name;
    }
    recordings.push_back(
        {{"id", rec.id}, {"format", "tsv"}, {"path", "corpus/" + rec.id + ".tsv"}, {"tracks", tracks}});
  }

  const nlohmann::json config = {
      {"language", to_string(spec.language)},
      {"corpus", {{"recordings", recordings}}},
      {"reduction", {{"variant", "segment_sum"}}},
      {"prominence", {{"threshold", 1.25}}},
      {"folds", {{"k", 8}}},
      {"ngram", {{"order", 3}, {"discount", 0.75}, {"min_count", 2}}},
      {"evaluate", {{"baseline_trials", 100}, {"bootstrap_resamples", 1000}, {"min_count", 10}, {"curve_bins", 10}}},
      {"seed", 20240601},
      {"output_dir", "out"}};
  put(dir / "config.json", config.dump(2) + "\n");

  // Gold from the pipeline itself, then noisy predictions against it.
  const fs::path tmp = fs::temp_directory_path() / ("prosobench-synth-" + text::hex64(spec.seed));
  fs::remove_all(tmp);
  std::ostringstream sink_out, sink_err;
  const std::string cfg = (dir / "config.json").string();
  for (const char* cmd : {"reduce", "prominence", "emit-bench"}) {
    const int code = app::run_cli({"prosobench", cmd, "--config", cfg, "--out", tmp.string()}, sink_out, sink_err);
    if (code != 0) throw Error("synth", "PipelineFailed", std::string(cmd) + ": " + sink_err.str());
  }
  nlohmann::json metrics = {{"models", {"conv", "wiki"}}, {"entries", nlohmann::json::array()}};
  for (Task task : {Task::reduction, Task::prominence}) {
    const std::string t(to_string(task));
    const auto gold = parse_gold_tsv(text::read_file((tmp / ("gold." + t + ".tsv")).string()), task);
    const std::uint64_t s = derive_seed(spec.seed, task == Task::reduction ? 11 : 12);
    put(dir / "predictions" / (t + ".conv.tsv"), noisy_predictions(gold, 0.08, derive_seed(s, 1)));
    put(dir / "predictions" / (t + ".wiki.tsv"), noisy_predictions(gold, 0.2, derive_seed(s, 2)));
    put(dir / "predictions" / (t + ".conv.subword.tsv"), subword_predictions(gold, 0.08, derive_seed(s, 3)));
  }

  // Per-fold metrics for the winners table: FT from the two noisy models.
  std::ostringstream score_out, score_err;
  for (Task task : {Task::reduction, Task::prominence}) {
    const std::string t(to_string(task));
    const int code = app::run_cli({"prosobench", "score", "--config", cfg, "--out", tmp.string(), "--task", t,
                                   "--pred", "conv=" + (dir / "predictions" / (t + ".conv.tsv")).string(), "--pred",
                                   "wiki=" + (dir / "predictions" / (t + ".wiki.tsv")).string()},
                                  score_out, score_err);
    if (code != 0) throw Error("synth", "PipelineFailed", "score: " + score_err.str());
    const auto reports = nlohmann::json::parse(text::read_file((tmp / ("score." + t + ".json")).string()));
    nlohmann::json folds = nlohmann::json::object();
    for (const auto& r : reports) {
      std::vector<double> f1;
      for (const auto& f : r.at("folds")) f1.push_back(f.at("f1").get<double>());
      folds[r.at("model").get<std::string>()] = f1;
    }
    metrics["entries"].push_back({{"language", to_string(spec.language)}, {"task", t}, {"criterion", "FT"}, {"folds", folds}});
  }
  fs::remove_all(tmp);
  put(dir / "predictions" / "metrics.json", metrics.dump(2) + "\n");
}

}  // namespace prosobench::synth
