#pragma once

// Synthetic corpora with planted ground truth.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prosobench/audio.hpp"
#include "prosobench/corpus.hpp"

namespace prosobench::synth {

/// Phone inventory with planted mean durations (seconds).
std::map<std::string, double> phone_means();

struct ReductionFixtureSpec {
  int recordings = 10;
  int blocks_per_recording = 10;
  int block_size = 20;       // tokens of one word type per block
  int reduced_per_block = 3; // 15% of every block
  double ratio = 0.4;        // reduced tokens' duration relative to the unreduced population mean
  double noise_sd = 0.03;    // multiplicative per-segment noise
  std::uint64_t seed = 1;
  Language language = Language::en;
};

struct PlantedReduction {
  AlignedCorpus corpus;
  std::map<std::string, double> planted_means;
  std::set<Provenance> reduced;
};

/// Every block contains the same word type with exactly `reduced_per_block`
/// reduced tokens, so each phone's reduced share is identical in any split
/// by recordings. Unreduced tokens are scaled so that each label's
/// population mean equals its planted mean.
PlantedReduction make_reduction_fixture(const ReductionFixtureSpec& spec);

struct SyllableFixture {
  AlignedCorpus corpus;
  double intercept = 0.0;
  std::map<std::string, double> coefficients;
};

/// Syllable durations exactly intercept + sum of per-label coefficients.
SyllableFixture make_syllable_fixture(std::size_t n_syllables, std::uint64_t seed, double noise_sd = 0.0);

/// Sine of `hz` with amplitude `amp`.
Signal sine(double hz, double seconds, double sample_rate, double amp = 0.5);

struct ProsodyFixtureSpec {
  int recordings = 4;
  int speakers_per_recording = 2;
  int utterances_per_speaker = 8;
  int words_per_utterance = 8;
  double sample_rate = 8000.0;
  double reduced_fraction = 0.15;
  double prominent_fraction = 0.2;
  std::uint64_t seed = 7;
  Language language = Language::en;
};

struct ProsodyFixture {
  AlignedCorpus corpus;         // speakers alternate turns within each recording
  std::vector<std::vector<std::vector<double>>> audio;  // [recording][channel][sample], channel = speaker order
  std::vector<std::vector<std::string>> channel_speakers;  // [recording][channel]
  std::set<Provenance> reduced;
  std::set<Provenance> prominent;
};

ProsodyFixture make_prosody_fixture(const ProsodyFixtureSpec& spec);

/// Long-format TextGrid with `<speaker>-words`, `<speaker>-phones` and
/// `<speaker>-syllables` tiers, pauses as empty intervals.
std::string write_textgrid(const Recording& recording, double duration);

/// Buckeye-style `.words` / `.phones` pair for one speaker.
std::string write_buckeye_words(const Recording& recording, const std::string& signal);
std::string write_buckeye_phones(const Recording& recording, const std::string& signal);

/// Writes the bundled pipeline fixture: corpus files in all three formats,
/// one stereo WAV, per-channel tracks for the remaining recordings, a config,
/// and noisy prediction files for every task.
void write_pipeline_fixture(const std::filesystem::path& dir, const ProsodyFixtureSpec& spec = {});

}  // namespace prosobench::synth
