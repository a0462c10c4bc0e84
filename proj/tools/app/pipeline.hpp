#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosobench/audio.hpp"
#include "prosobench/benchset.hpp"
#include "prosobench/corpus.hpp"
#include "prosobench/corpus_io.hpp"
#include "prosobench/duration.hpp"
#include "prosobench/ngram.hpp"
#include "prosobench/prominence.hpp"

namespace prosobench::app {

struct RecordingSource {
  std::string id;
  std::string format;  // "tsv", "textgrid" or "buckeye"
  std::string path;    // tsv / textgrid
  std::string words;   // buckeye
  std::string phones;  // buckeye
  std::string speaker; // buckeye speaker id (defaults to the file header)
  std::vector<TierMap> tiers;  // textgrid
  std::optional<std::string> audio;
  std::map<std::string, unsigned> channels;    // speaker -> audio channel
  std::map<std::string, std::string> tracks;   // speaker -> track TSV
};

struct PipelineConfig {
  Language language = Language::en;
  std::vector<RecordingSource> recordings;

  DurationVariant duration_variant = DurationVariant::segment_sum;
  double reduction_threshold = 0.5;

  ProminenceConfig prominence;
  std::optional<double> prominence_target_rate;

  int folds = kDefaultFolds;
  NgramOptions ngram;
  std::optional<std::string> ngram_train;  // whitespace-tokenized text, one utterance per line

  int baseline_trials = 100;
  int bootstrap_resamples = 1000;
  std::size_t min_count = 50;
  int curve_bins = 20;

  std::uint64_t seed = 1;
  std::string output_dir = "out";
};

/// Parses a config document; relative paths are resolved against `base_dir`.
/// Missing fields take their defaults; thresholds must be positive.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Fully resolved config without `output_dir`, the input of the config hash.
nlohmann::json semantic_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

/// Records every file read and written by a run.
class FileLedger {
 public:
  std::string read(const std::string& path);
  void write(const std::filesystem::path& path, const std::string& contents);
  void note_input(const std::string& path, std::string_view contents);

  nlohmann::json inputs_json() const;
  nlohmann::json outputs_json() const;
  const std::vector<std::string>& outputs() const { return output_order_; }

 private:
  std::map<std::string, std::string> inputs_;   // path -> hash
  std::map<std::string, std::pair<std::size_t, std::string>> outputs_;  // path -> (bytes, hash)
  std::vector<std::string> output_order_;
};

struct LoadedCorpus {
  AlignedCorpus corpus;
  std::vector<const RecordingSource*> sources;  // parallel to corpus.recordings
};

LoadedCorpus load_corpus(const PipelineConfig& config, FileLedger& files);

/// Acoustic track of one speaker channel, from a track TSV or the audio file.
AcousticTrack load_track(const RecordingSource& source, const Recording& recording, const std::string& speaker,
                         const PitchConfig& pitch, FileLedger& files);

std::vector<ProminenceRecord> prominence_records(const PipelineConfig& config, const LoadedCorpus& loaded,
                                                 FileLedger& files, unsigned jobs, double* threshold_used = nullptr);

/// Entry point shared by the executable and in-process callers. Writes the
/// run manifest to `out` and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prosobench::app
