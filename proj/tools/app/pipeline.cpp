#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "prosobench/error.hpp"
#include "prosobench/evaluate.hpp"
#include "prosobench/histogram.hpp"
#include "prosobench/parallel.hpp"
#include "prosobench/rng.hpp"
#include "prosobench/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace prosobench::app {

namespace {

// Independent seed streams derived from the single run seed.
enum SeedStream : std::uint64_t { kSplitStream = 1, kFoldStream, kBaselineStream, kBootstrapStream, kWinnersStream };

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("cli", "ConfigError", message) {}
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path.string() : (base / path).lexically_normal().string();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void get(const json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

RecordingSource parse_source(const json& r, const fs::path& base, std::size_t index) {
  const std::string where = "corpus.recordings[" + std::to_string(index) + "]";
  check_keys(r, {"id", "format", "path", "words", "phones", "speaker", "tiers", "audio", "channels", "tracks"}, where);
  RecordingSource s;
  get(r, "format", s.format);
  if (s.format.empty()) s.format = "tsv";
  if (s.format != "tsv" && s.format != "textgrid" && s.format != "buckeye")
    throw ConfigError(where + ": unknown format '" + s.format + "'");
  get(r, "id", s.id);
  if (s.format == "buckeye") {
    get(r, "words", s.words);
    get(r, "phones", s.phones);
    if (s.words.empty() || s.phones.empty()) throw ConfigError(where + ": buckeye needs 'words' and 'phones'");
    s.words = resolve(base, s.words);
    s.phones = resolve(base, s.phones);
    get(r, "speaker", s.speaker);
    if (s.id.empty()) s.id = fs::path(s.words).stem().string();
  } else {
    get(r, "path", s.path);
    if (s.path.empty()) throw ConfigError(where + ": missing 'path'");
    s.path = resolve(base, s.path);
    if (s.id.empty()) s.id = fs::path(s.path).stem().string();
  }
  if (r.contains("tiers")) {
    for (const auto& t : r.at("tiers")) {
      check_keys(t, {"speaker", "words", "phones", "syllables"}, where + ".tiers");
      TierMap m;
      get(t, "speaker", m.speaker_id);
      get(t, "words", m.word_tier);
      get(t, "phones", m.phone_tier);
      if (t.contains("syllables") && !t.at("syllables").is_null()) m.syllable_tier = t.at("syllables").get<std::string>();
      s.tiers.push_back(std::move(m));
    }
  }
  if (r.contains("audio") && !r.at("audio").is_null()) s.audio = resolve(base, r.at("audio").get<std::string>());
  if (r.contains("channels"))
    for (const auto& [spk, ch] : r.at("channels").items()) s.channels[spk] = ch.get<unsigned>();
  if (r.contains("tracks"))
    for (const auto& [spk, p] : r.at("tracks").items()) s.tracks[spk] = resolve(base, p.get<std::string>());
  return s;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

spdlog::level::level_enum log_level_from_env() {
  const char* v = std::getenv("PROSOBENCH_LOG");
  if (!v || !*v) return spdlog::level::warn;
  const auto lvl = spdlog::level::from_str(v);
  // from_str maps unknown names to "off"; accept explicit "off" only.
  if (lvl == spdlog::level::off && std::string_view(v) != "off") return spdlog::level::warn;
  return lvl;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig parse_config(const json& j, const fs::path& base) {
  check_keys(j, {"language", "corpus", "reduction", "prominence", "folds", "ngram", "evaluate", "seed", "output_dir"},
             "config");
  PipelineConfig c;
  if (j.contains("language")) c.language = parse_language(j.at("language").get<std::string>());
  c.reduction_threshold = default_reduction_threshold(c.language);
  if (j.contains("corpus")) {
    const auto& corpus = j.at("corpus");
    check_keys(corpus, {"recordings"}, "corpus");
    std::size_t i = 0;
    for (const auto& r : corpus.at("recordings")) c.recordings.push_back(parse_source(r, base, i++));
  }
  if (j.contains("reduction")) {
    const auto& r = j.at("reduction");
    check_keys(r, {"variant", "threshold"}, "reduction");
    if (r.contains("variant")) c.duration_variant = parse_duration_variant(r.at("variant").get<std::string>());
    get(r, "threshold", c.reduction_threshold);
  }
  if (!(c.reduction_threshold > 0.0)) throw ConfigError("reduction.threshold must be positive");
  if (j.contains("prominence")) {
    json p = j.at("prominence");
    if (p.contains("target_rate") && !p.at("target_rate").is_null()) c.prominence_target_rate = p.at("target_rate").get<double>();
    p.erase("target_rate");
    check_keys(p, {"tracker", "semitone_reference_hz", "energy_floor", "weights", "smoothing", "scales", "support",
                   "threshold"},
               "prominence");
    c.prominence = prominence_config_from_json(p);
  }
  if (j.contains("folds")) {
    check_keys(j.at("folds"), {"k"}, "folds");
    get(j.at("folds"), "k", c.folds);
  }
  if (c.folds < 2) throw ConfigError("folds.k must be at least 2");
  if (j.contains("ngram")) {
    const auto& n = j.at("ngram");
    check_keys(n, {"order", "discount", "min_count", "train"}, "ngram");
    get(n, "order", c.ngram.order);
    get(n, "discount", c.ngram.discount);
    get(n, "min_count", c.ngram.min_count);
    if (n.contains("train") && !n.at("train").is_null()) c.ngram_train = resolve(base, n.at("train").get<std::string>());
  }
  if (j.contains("evaluate")) {
    const auto& e = j.at("evaluate");
    check_keys(e, {"baseline_trials", "bootstrap_resamples", "min_count", "curve_bins"}, "evaluate");
    get(e, "baseline_trials", c.baseline_trials);
    get(e, "bootstrap_resamples", c.bootstrap_resamples);
    get(e, "min_count", c.min_count);
    get(e, "curve_bins", c.curve_bins);
  }
  get(j, "seed", c.seed);
  std::string out = c.output_dir;
  get(j, "output_dir", out);
  c.output_dir = resolve(base, out);
  return c;
}

json semantic_json(const PipelineConfig& c) {
  json recs = json::array();
  for (const auto& r : c.recordings) {
    json tiers = json::array();
    for (const auto& t : r.tiers)
      tiers.push_back({{"speaker", t.speaker_id},
                       {"words", t.word_tier},
                       {"phones", t.phone_tier},
                       {"syllables", t.syllable_tier ? json(*t.syllable_tier) : json(nullptr)}});
    recs.push_back({{"id", r.id},
                    {"format", r.format},
                    {"path", r.path},
                    {"words", r.words},
                    {"phones", r.phones},
                    {"speaker", r.speaker},
                    {"tiers", tiers},
                    {"audio", r.audio ? json(*r.audio) : json(nullptr)},
                    {"channels", r.channels},
                    {"tracks", r.tracks}});
  }
  return {{"language", to_string(c.language)},
          {"corpus", {{"recordings", recs}}},
          {"reduction", {{"variant", to_string(c.duration_variant)}, {"threshold", c.reduction_threshold}}},
          {"prominence",
           {{"config", to_json(c.prominence)},
            {"target_rate", c.prominence_target_rate ? json(*c.prominence_target_rate) : json(nullptr)}}},
          {"folds", {{"k", c.folds}}},
          {"ngram",
           {{"order", c.ngram.order},
            {"discount", c.ngram.discount},
            {"min_count", c.ngram.min_count},
            {"train", c.ngram_train ? json(*c.ngram_train) : json(nullptr)}}},
          {"evaluate",
           {{"baseline_trials", c.baseline_trials},
            {"bootstrap_resamples", c.bootstrap_resamples},
            {"min_count", c.min_count},
            {"curve_bins", c.curve_bins}}},
          {"seed", c.seed}};
}

std::string config_hash(const PipelineConfig& config) { return text::hex64(text::fnv1a64(semantic_json(config).dump())); }

// ---------------------------------------------------------------------------
// File ledger

std::string FileLedger::read(const std::string& path) {
  auto data = text::read_file(path);
  note_input(path, data);
  return data;
}

void FileLedger::note_input(const std::string& path, std::string_view contents) {
  inputs_[path] = text::hex64(text::fnv1a64(contents));
}

void FileLedger::write(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  text::write_file(path.string(), contents);
  const auto key = path.lexically_normal().string();
  if (!outputs_.contains(key)) output_order_.push_back(key);
  outputs_[key] = {contents.size(), text::hex64(text::fnv1a64(contents))};
}

json FileLedger::inputs_json() const {
  json out = json::array();
  for (const auto& [path, hash] : inputs_) out.push_back({{"path", path}, {"fnv1a64", hash}});
  return out;
}

json FileLedger::outputs_json() const {
  json out = json::array();
  for (const auto& path : output_order_) {
    const auto& [bytes, hash] = outputs_.at(path);
    out.push_back({{"path", path}, {"bytes", bytes}, {"fnv1a64", hash}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus and tracks

LoadedCorpus load_corpus(const PipelineConfig& config, FileLedger& files) {
  if (config.recordings.empty()) throw ConfigError("config lists no corpus recordings");
  LoadedCorpus loaded;
  loaded.corpus.language = config.language;
  for (const auto& src : config.recordings) {
    Recording rec;
    if (src.format == "tsv") {
      rec = parse_aligned_tsv(files.read(src.path), src.id);
    } else if (src.format == "textgrid") {
      TextGridOptions opt;
      if (!src.tiers.empty()) opt.speakers = src.tiers;
      rec = parse_textgrid(files.read(src.path), opt, src.id);
    } else {
      const auto words = files.read(src.words);
      const auto phones = files.read(src.phones);
      rec = parse_buckeye(words, phones, BuckeyeOptions{src.speaker, src.id});
    }
    if (src.audio) rec.audio_ref = *src.audio;
    loaded.corpus.recordings.push_back(std::move(rec));
    loaded.sources.push_back(&src);
  }
  number_utterances(loaded.corpus);
  return loaded;
}

namespace {

struct ChannelJob {
  std::size_t recording = 0;
  std::string speaker;
  std::vector<WordToken> tokens;
  const std::string* track_text = nullptr;
  const std::string* audio_bytes = nullptr;
  unsigned channel = 0;
};

unsigned channel_of(const RecordingSource& src, const Recording& rec, const std::string& speaker) {
  if (auto it = src.channels.find(speaker); it != src.channels.end()) return it->second;
  const auto pos = std::distance(rec.speaker_ids.begin(), rec.speaker_ids.find(speaker));
  return static_cast<unsigned>(pos);
}

}  // namespace

AcousticTrack load_track(const RecordingSource& source, const Recording& recording, const std::string& speaker,
                         const PitchConfig& pitch, FileLedger& files) {
  if (auto it = source.tracks.find(speaker); it != source.tracks.end())
    return parse_track_tsv(files.read(it->second), pitch.frame_period);
  if (!source.audio) throw Error("cli", "MissingAcoustics", "recording '" + source.id + "' speaker '" + speaker +
                                                                 "' has neither a track nor audio");
  const auto bytes = files.read(*source.audio);
  const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
  const auto signal = decode_wav({data, bytes.size()}, channel_of(source, recording, speaker));
  return compute_track(signal, pitch);
}

std::vector<ProminenceRecord> prominence_records(const PipelineConfig& config, const LoadedCorpus& loaded,
                                                 FileLedger& files, unsigned jobs, double* threshold_used) {
  std::map<std::string, std::string> blobs;
  auto blob = [&](const std::string& path) -> const std::string* {
    auto it = blobs.find(path);
    if (it == blobs.end()) it = blobs.emplace(path, files.read(path)).first;
    return &it->second;
  };

  std::vector<ChannelJob> work;
  for (std::size_t r = 0; r < loaded.corpus.recordings.size(); ++r) {
    const auto& rec = loaded.corpus.recordings[r];
    const auto& src = *loaded.sources[r];
    for (const auto& spk : rec.speaker_ids) {
      ChannelJob job{r, spk, channel_tokens(rec, spk)};
      if (job.tokens.empty()) continue;
      if (auto it = src.tracks.find(spk); it != src.tracks.end()) {
        job.track_text = blob(it->second);
      } else if (src.audio) {
        job.audio_bytes = blob(*src.audio);
        job.channel = channel_of(src, rec, spk);
      } else {
        throw Error("cli", "MissingAcoustics",
                    "recording '" + src.id + "' speaker '" + spk + "' has neither a track nor audio");
      }
      work.push_back(std::move(job));
    }
  }

  std::vector<std::vector<ProminenceRecord>> per_channel(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const auto& job = work[i];
    AcousticTrack track;
    if (job.track_text) {
      track = parse_track_tsv(*job.track_text, config.prominence.pitch.frame_period);
    } else {
      const auto* data = reinterpret_cast<const std::uint8_t*>(job.audio_bytes->data());
      track = compute_track(decode_wav({data, job.audio_bytes->size()}, job.channel), config.prominence.pitch);
    }
    per_channel[i] = score_channel(track, job.tokens, config.prominence);
  });

  std::vector<ProminenceRecord> records;
  for (auto& v : per_channel) records.insert(records.end(), v.begin(), v.end());
  double threshold = config.prominence.threshold;
  if (config.prominence_target_rate) {
    std::vector<double> scores;
    for (const auto& r : records) scores.push_back(r.score);
    threshold = calibrate_threshold(scores, *config.prominence_target_rate);
    relabel(records, threshold);
  }
  if (threshold_used) *threshold_used = threshold;
  return records;
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

struct Flags {
  std::string config_path;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> tasks;
  std::vector<std::string> preds;
  std::vector<std::string> surprisals;
  std::string gold;
  std::string input;
  std::optional<std::size_t> min_count;
  std::size_t top_k = 5;
  std::optional<int> bins;
};

struct Context {
  PipelineConfig config;
  bool has_config = false;
  Flags flags;
  FileLedger files;
  fs::path out;
  std::shared_ptr<spdlog::logger> log;

  const PipelineConfig& require_config() const {
    if (!has_config) throw UsageError("this subcommand needs --config");
    return config;
  }
  fs::path path(const std::string& name) const { return out / name; }
};

struct NamedPath {
  std::string name;
  std::string path;
};

NamedPath parse_named(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::vector<Task> tasks_or(const Context& ctx, const std::vector<Task>& fallback) {
  if (ctx.flags.tasks.empty()) return fallback;
  std::vector<Task> out;
  for (const auto& t : ctx.flags.tasks) out.push_back(parse_task(t));
  return out;
}

Task single_task(const Context& ctx) {
  if (ctx.flags.tasks.size() != 1) throw UsageError("this subcommand needs exactly one --task");
  return parse_task(ctx.flags.tasks.front());
}

std::string gold_name(Task task) { return "gold." + std::string(to_string(task)) + ".tsv"; }

GoldSet load_gold(Context& ctx, Task task) {
  const std::string path = ctx.flags.gold.empty() ? ctx.path(gold_name(task)).string() : ctx.flags.gold;
  return parse_gold_tsv(ctx.files.read(path), task);
}

json histogram_json(const HistogramReport& h, const std::string& csv_name) {
  return {{"threshold", h.threshold},
          {"below_threshold", h.below_threshold},
          {"at_or_above_threshold", h.at_or_above_threshold},
          {"total", h.total()},
          {"bins_csv", csv_name}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void cmd_ingest(Context& ctx) {
  const auto loaded = load_corpus(ctx.require_config(), ctx.files);
  json summary = {{"language", to_string(loaded.corpus.language)}, {"recordings", json::array()}};
  std::set<std::string> speakers;
  for (const auto& rec : loaded.corpus.recordings) {
    speakers.insert(rec.speaker_ids.begin(), rec.speaker_ids.end());
    const std::string name = "corpus/" + rec.id + ".tsv";
    ctx.files.write(ctx.path(name), emit_aligned_tsv(rec));
    summary["recordings"].push_back({{"id", rec.id},
                                     {"speakers", rec.speaker_ids},
                                     {"utterances", rec.utterances.size()},
                                     {"tokens", rec.token_count()},
                                     {"file", name}});
  }
  summary["speakers"] = speakers;
  summary["tokens"] = loaded.corpus.token_count();
  ctx.files.write(ctx.path("corpus.json"), dump(summary));
  ctx.log->info("ingested {} recordings, {} tokens", loaded.corpus.recordings.size(), loaded.corpus.token_count());
}

int cmd_validate(Context& ctx) {
  const auto loaded = load_corpus(ctx.require_config(), ctx.files);
  const auto report = validate(loaded.corpus);
  json findings = json::array();
  for (const auto& f : report.findings)
    findings.push_back({{"kind", to_string(f.kind)},
                        {"recording", f.recording},
                        {"speaker", f.speaker},
                        {"utterance", f.utterance},
                        {"token", f.token},
                        {"message", f.message}});
  ctx.files.write(ctx.path("validation.json"), dump({{"ok", report.ok()}, {"findings", findings}}));
  if (!report.ok()) {
    ctx.log->error("validation found {} problems", report.findings.size());
    return 2;
  }
  return 0;
}

json split_json(const SplitResult& s) {
  json first = json::array(), second = json::array();
  for (const auto& r : s.first.recordings) first.push_back(r.id);
  for (const auto& r : s.second.recordings) second.push_back(r.id);
  return {{"seed", s.seed},
          {"first", first},
          {"second", second},
          {"first_tokens", s.first_tokens},
          {"second_tokens", s.second_tokens},
          {"imbalance", s.imbalance},
          {"within_tolerance", s.within_tolerance}};
}

void cmd_durmodel(Context& ctx, unsigned jobs) {
  (void)jobs;
  const auto& cfg = ctx.require_config();
  const auto loaded = load_corpus(cfg, ctx.files);
  const auto split = split_halves(loaded.corpus, derive_seed(cfg.seed, kSplitStream));
  if (!split.within_tolerance) ctx.log->warn("split imbalance {:.3f} exceeds tolerance", split.imbalance);
  const auto first = fit_duration_model(split.first, cfg.duration_variant);
  const auto second = fit_duration_model(split.second, cfg.duration_variant);
  ctx.files.write(ctx.path("durmodel.json"),
                  dump({{"split", split_json(split)}, {"model_first", to_json(first)}, {"model_second", to_json(second)}}));
}

void cmd_reduce(Context& ctx, unsigned jobs) {
  const auto& cfg = ctx.require_config();
  const auto loaded = load_corpus(cfg, ctx.files);
  const auto run = reduce_corpus(loaded.corpus, cfg.duration_variant, cfg.reduction_threshold,
                                 derive_seed(cfg.seed, kSplitStream), jobs);
  if (!run.split.within_tolerance) ctx.log->warn("split imbalance {:.3f} exceeds tolerance", run.split.imbalance);
  ctx.files.write(ctx.path("reduction.tsv"), emit_reduction_tsv(run.result.records));
  ctx.files.write(ctx.path("reduction_excluded.tsv"), emit_exclusions_tsv(run.result.excluded));
  const auto hist = ratio_histogram(run.result.records, cfg.reduction_threshold);
  ctx.files.write(ctx.path("reduction_hist.csv"), hist.to_csv());
  json meta = histogram_json(hist, "reduction_hist.csv");
  meta["split"] = split_json(run.split);
  meta["excluded"] = run.result.excluded.size();
  ctx.files.write(ctx.path("reduction_hist.json"), dump(meta));
  ctx.log->info("labeled {} tokens, {} reduced", hist.total(), hist.below_threshold);
}

void cmd_prominence(Context& ctx, unsigned jobs) {
  const auto& cfg = ctx.require_config();
  const auto loaded = load_corpus(cfg, ctx.files);
  double threshold = cfg.prominence.threshold;
  const auto records = prominence_records(cfg, loaded, ctx.files, jobs, &threshold);
  ctx.files.write(ctx.path("prominence.tsv"), emit_prominence_tsv(records));
  const auto hist = score_histogram(records, threshold);
  ctx.files.write(ctx.path("prominence_hist.csv"), hist.to_csv());
  json meta = histogram_json(hist, "prominence_hist.csv");
  meta["calibrated"] = cfg.prominence_target_rate.has_value();
  ctx.files.write(ctx.path("prominence_hist.json"), dump(meta));
}

std::string label_file(Task task) { return std::string(to_string(task)) + ".tsv"; }

void cmd_emit_bench(Context& ctx) {
  const auto& cfg = ctx.require_config();
  std::vector<Task> tasks = tasks_or(ctx, {});
  if (tasks.empty()) {
    for (Task t : {Task::reduction, Task::prominence})
      if (fs::exists(ctx.path(label_file(t)))) tasks.push_back(t);
    if (tasks.empty())
      throw Error("cli", "MissingLabels", "no label files in '" + ctx.out.string() + "'; run reduce or prominence first");
  }
  const auto loaded = load_corpus(cfg, ctx.files);
  const auto folds = make_folds(loaded.corpus, cfg.folds, derive_seed(cfg.seed, kFoldStream));
  if (folds.max_deviation > 0.25) ctx.log->warn("fold sizes deviate by up to {:.0f}%", folds.max_deviation * 100);
  ctx.files.write(ctx.path("folds.json"), dump(to_json(folds)));
  for (Task task : tasks) {
    const auto labeled = parse_labeled_tsv(ctx.files.read(ctx.path(label_file(task)).string()));
    const auto dataset = emit_bio(labeled, task);
    for (int f = 0; f < folds.k; ++f)
      ctx.files.write(ctx.path("bench/" + conll_filename(task, cfg.language, f)), to_conll(dataset, folds, f));
    ctx.files.write(ctx.path(gold_name(task)), emit_gold_tsv(dataset, folds));
  }
}

void cmd_stats(Context& ctx) {
  std::vector<Task> tasks = tasks_or(ctx, {});
  if (tasks.empty())
    for (Task t : {Task::reduction, Task::prominence})
      if (fs::exists(ctx.path(gold_name(t)))) tasks.push_back(t);
  if (tasks.empty()) throw Error("cli", "MissingGold", "no gold files in '" + ctx.out.string() + "'");
  for (Task task : tasks) {
    const auto report = dataset_stats(load_gold(ctx, task));
    for (const auto& w : report.warnings) ctx.log->warn("{}", w);
    ctx.files.write(ctx.path("stats." + std::string(to_string(task)) + ".json"), dump(to_json(report)));
  }
}

void cmd_ngram(Context& ctx) {
  const auto& cfg = ctx.require_config();
  const auto loaded = load_corpus(cfg, ctx.files);
  const auto normalize = normalizer_for(cfg.language);
  NgramModel::Utterances train;
  if (cfg.ngram_train) {
    for (auto line : text::lines(ctx.files.read(*cfg.ngram_train))) {
      std::vector<std::string> words;
      std::istringstream in{std::string(line)};
      for (std::string w; in >> w;) words.push_back(normalize(w));
      if (!words.empty()) train.push_back(std::move(words));
    }
  } else {
    train = corpus_utterances(loaded.corpus, normalize);
  }
  const auto model = NgramModel::train(train, cfg.ngram);
  const auto records = score_corpus(model, loaded.corpus, normalize);
  ctx.files.write(ctx.path("surprisal.tsv"), emit_surprisal_tsv(records));
  const double ppl = perplexity(records);
  ctx.files.write(ctx.path("ngram.json"), dump({{"order", model.order()},
                                                {"discount", model.discount()},
                                                {"min_count", cfg.ngram.min_count},
                                                {"vocabulary_size", model.vocabulary().size()},
                                                {"training_utterances", train.size()},
                                                {"tokens", records.size()},
                                                {"perplexity", std::isfinite(ppl) ? json(ppl) : json(nullptr)}}));
}

std::vector<PredictionSet> load_predictions(Context& ctx, Task task) {
  if (ctx.flags.preds.empty()) throw UsageError("this subcommand needs --pred MODEL=PATH");
  std::vector<PredictionSet> out;
  for (const auto& arg : ctx.flags.preds) {
    const auto np = parse_named(arg);
    out.push_back(parse_prediction_tsv(ctx.files.read(np.path), task, np.name));
  }
  return out;
}

Language language_of(const Context& ctx) { return ctx.has_config ? ctx.config.language : Language::en; }

void cmd_score(Context& ctx, unsigned jobs) {
  const Task task = single_task(ctx);
  const auto gold = load_gold(ctx, task);
  std::vector<EvalReport> reports;
  json arr = json::array();
  for (const auto& pred : load_predictions(ctx, task)) {
    reports.push_back(score(gold, pred, {ctx.config.baseline_trials, derive_seed(ctx.config.seed, kBaselineStream), jobs}));
    arr.push_back(to_json(reports.back()));
  }
  const std::string t(to_string(task));
  ctx.files.write(ctx.path("score." + t + ".json"), dump(arr));
  ctx.files.write(ctx.path("results." + t + ".txt"), format_results_table(reports, language_of(ctx)));
}

void cmd_correlate(Context& ctx, unsigned jobs) {
  std::vector<Task> tasks = tasks_or(ctx, {});
  if (tasks.empty())
    for (Task t : {Task::reduction, Task::prominence})
      if (ctx.flags.gold.empty() && fs::exists(ctx.path(gold_name(t)))) tasks.push_back(t);
  if (tasks.empty()) throw UsageError("no gold available; pass --task and --gold");
  std::vector<NamedPath> sources;
  for (const auto& s : ctx.flags.surprisals) sources.push_back(parse_named(s));
  if (sources.empty()) sources.push_back({"ngram", ctx.path("surprisal.tsv").string()});
  json arr = json::array();
  for (const auto& src : sources) {
    const auto records = parse_surprisal_tsv(ctx.files.read(src.path));
    for (Task task : tasks) {
      auto report = correlate_surprisal(load_gold(ctx, task), records, ctx.config.bootstrap_resamples,
                                        derive_seed(ctx.config.seed, kBootstrapStream), jobs);
      report.model_name = src.name;
      arr.push_back(to_json(report));
    }
  }
  ctx.files.write(ctx.path("correlation.json"), dump(arr));
}

void cmd_winners(Context& ctx) {
  if (ctx.flags.input.empty()) throw UsageError("winners needs --input METRICS.json");
  const auto in = winners_input_from_json(json::parse(ctx.files.read(ctx.flags.input)));
  const auto table = winners_table(in.entries, in.models, default_winner_rows(), ctx.config.bootstrap_resamples,
                                   derive_seed(ctx.config.seed, kWinnersStream));
  ctx.files.write(ctx.path("winners.json"), dump(to_json(table)));
  ctx.files.write(ctx.path("winners.txt"), format_winners_table(table));
}

void cmd_errwords(Context& ctx) {
  const Task task = single_task(ctx);
  const auto gold = load_gold(ctx, task);
  const auto normalize = normalizer_for(language_of(ctx));
  const std::size_t min_count = ctx.flags.min_count.value_or(ctx.config.min_count);
  for (const auto& pred : load_predictions(ctx, task)) {
    const auto table = rate_difference(gold, pred, normalize, min_count, ctx.flags.top_k);
    ctx.files.write(ctx.path("errwords." + std::string(to_string(task)) + "." + pred.model_name + ".json"),
                    dump(to_json(table)));
  }
}

void cmd_freqcurve(Context& ctx) {
  const Task task = single_task(ctx);
  const auto gold = load_gold(ctx, task);
  const auto normalize = normalizer_for(language_of(ctx));
  const int bins = ctx.flags.bins.value_or(ctx.config.curve_bins);
  for (const auto& pred : load_predictions(ctx, task)) {
    const auto curve = frequency_curve(gold, pred, normalize, nullptr, bins);
    ctx.files.write(ctx.path("freqcurve." + std::string(to_string(task)) + "." + pred.model_name + ".csv"),
                    curve_to_csv(curve));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry point

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx;
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  ctx.log = std::make_shared<spdlog::logger>("prosobench", sink);
  ctx.log->set_level(log_level_from_env());
  ctx.log->set_pattern("prosobench: %l: %v");

  CLI::App app{"Speech-based token labeling benchmarks: build, score and analyze."};
  app.name("prosobench");
  app.require_subcommand(1);
  app.fallthrough();
  Flags& f = ctx.flags;
  app.add_option("--config", f.config_path, "Pipeline config JSON");
  app.add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", f.seed, "Override the config seed");
  app.add_option("--out", f.out_dir, "Override the output directory");

  auto sub = [&](const char* name, const char* help) { return app.add_subcommand(name, help); };
  sub("ingest", "Parse the corpus and write normalized aligned TSVs");
  sub("validate", "Check corpus invariants");
  sub("durmodel", "Fit expected-duration models on both corpus halves");
  sub("reduce", "Label speech reduction");
  sub("prominence", "Label prosodic prominence");
  auto* emit = sub("emit-bench", "Write speaker folds, CoNLL files and gold TSVs");
  auto* stats = sub("stats", "Benchmark statistics per fold");
  sub("ngram", "Train a Kneser-Ney model and write token surprisal");
  auto* scorecmd = sub("score", "Score prediction files against gold");
  auto* correlate = sub("correlate", "Correlate surprisal with gold labels");
  auto* winners = sub("winners", "Winners between two models");
  auto* errwords = sub("errwords", "Word-level rate differences");
  auto* freqcurve = sub("freqcurve", "Label rates against log frequency");

  for (auto* s : {emit, stats, correlate}) s->add_option("--task", f.tasks, "Task (reduction, prominence)");
  for (auto* s : {scorecmd, errwords, freqcurve}) {
    s->add_option("--task", f.tasks, "Task (reduction, prominence)")->required();
    s->add_option("--pred", f.preds, "Predictions as MODEL=PATH")->required();
  }
  for (auto* s : {scorecmd, correlate, errwords, freqcurve, stats}) s->add_option("--gold", f.gold, "Gold TSV");
  correlate->add_option("--surprisal", f.surprisals, "Surprisal TSV as MODEL=PATH");
  winners->add_option("--input", f.input, "Per-fold metrics JSON")->required();
  errwords->add_option("--min-count", f.min_count, "Minimum occurrences per word type");
  errwords->add_option("--top-k", f.top_k, "Length of the top and bottom lists");
  freqcurve->add_option("--bins", f.bins, "Number of frequency bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "prosobench: usage: " << e.what() << "\n" << app.help();
    return 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (!f.config_path.empty()) {
      const auto text = ctx.files.read(f.config_path);
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ConfigError("'" + f.config_path + "': " + e.what());
      }
      ctx.config = parse_config(j, fs::absolute(f.config_path).parent_path());
      ctx.has_config = true;
    }
    if (f.seed) ctx.config.seed = *f.seed;
    ctx.out = f.out_dir.empty() ? fs::path(ctx.config.output_dir) : fs::path(f.out_dir);
    const unsigned jobs = f.jobs;

    int code = 0;
    if (command == "ingest") cmd_ingest(ctx);
    else if (command == "validate") code = cmd_validate(ctx);
    else if (command == "durmodel") cmd_durmodel(ctx, jobs);
    else if (command == "reduce") cmd_reduce(ctx, jobs);
    else if (command == "prominence") cmd_prominence(ctx, jobs);
    else if (command == "emit-bench") cmd_emit_bench(ctx);
    else if (command == "stats") cmd_stats(ctx);
    else if (command == "ngram") cmd_ngram(ctx);
    else if (command == "score") cmd_score(ctx, jobs);
    else if (command == "correlate") cmd_correlate(ctx, jobs);
    else if (command == "winners") cmd_winners(ctx);
    else if (command == "errwords") cmd_errwords(ctx);
    else if (command == "freqcurve") cmd_freqcurve(ctx);

    json manifest = {{"tool", "prosobench"},
                     {"command", command},
                     {"exit_code", code},
                     {"config", f.config_path.empty() ? json(nullptr) : json(f.config_path)},
                     {"config_hash", config_hash(ctx.config)},
                     {"seed", ctx.config.seed},
                     {"jobs", jobs},
                     {"inputs", ctx.files.inputs_json()},
                     {"outputs", ctx.files.outputs_json()},
                     {"timestamp", timestamp_utc()}};
    out << manifest.dump(2) << "\n";
    return code;
  } catch (const UsageError& e) {
    err << "prosobench: usage: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "prosobench: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "prosobench: cli: ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "prosobench: io: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace prosobench::app
