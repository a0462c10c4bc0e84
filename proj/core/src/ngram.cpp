#include "prosobench/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "prosobench/error.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

std::size_t NgramModel::KeyHash::operator()(const std::vector<Id>& k) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Id v : k) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

NgramModel NgramModel::train(const Utterances& utterances, const NgramOptions& options) {
  if (options.order < 1) throw InvalidArgument("ngram", "order must be >= 1");
  if (!(options.discount > 0.0 && options.discount < 1.0)) throw InvalidArgument("ngram", "discount must be in (0, 1)");

  std::map<std::string, std::size_t> freq;
  std::size_t n_tokens = 0;
  for (const auto& u : utterances)
    for (const auto& w : u) {
      ++freq[w];
      ++n_tokens;
    }
  if (n_tokens == 0) throw FitError("ngram training corpus is empty");

  NgramModel m;
  m.order_ = options.order;
  m.discount_ = options.discount;
  for (const auto& [w, c] : freq)
    if (c >= options.min_count && w != kUnk && w != kBos) m.vocab_.push_back(w);
  m.vocab_.emplace_back(kUnk);
  std::sort(m.vocab_.begin(), m.vocab_.end());
  for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.ids_[m.vocab_[i]] = static_cast<Id>(i);
  m.unk_ = m.ids_.at(std::string(kUnk));
  m.bos_ = static_cast<Id>(m.vocab_.size());
  m.ids_[std::string(kBos)] = m.bos_;
  m.predicted_size_ = m.vocab_.size();

  const auto order = static_cast<std::size_t>(m.order_);
  m.counts_.resize(order);
  m.cont_.resize(order);
  m.raw_ctx_.resize(order);
  m.cont_ctx_.resize(order);

  for (const auto& u : utterances) {
    std::vector<Id> seq(order - 1, m.bos_);
    for (const auto& w : u) seq.push_back(m.id_of(w));
    for (std::size_t i = order - 1; i < seq.size(); ++i) {
      for (std::size_t n = 1; n <= order; ++n) {
        std::vector<Id> key(seq.begin() + static_cast<std::ptrdiff_t>(i + 1 - n),
                            seq.begin() + static_cast<std::ptrdiff_t>(i + 1));
        ++m.counts_[n - 1][key];
      }
    }
  }

  // Continuation counts: distinct left extensions of each lower-order n-gram.
  for (std::size_t n = 1; n < order; ++n) {
    for (const auto& [key, c] : m.counts_[n]) {
      std::vector<Id> suffix(key.begin() + 1, key.end());
      ++m.cont_[n - 1][suffix];
    }
  }
  for (const auto& [key, c] : m.counts_[order - 1]) {
    auto& st = m.raw_ctx_[order - 1][std::vector<Id>(key.begin(), key.end() - 1)];
    st.total += static_cast<double>(c);
    ++st.distinct;
  }
  for (std::size_t len = 0; len + 1 < order; ++len) {
    for (const auto& [key, c] : m.cont_[len]) {
      auto& st = m.cont_ctx_[len][std::vector<Id>(key.begin(), key.end() - 1)];
      st.total += static_cast<double>(c);
      ++st.distinct;
    }
  }
  return m;
}

NgramModel::Id NgramModel::id_of(std::string_view w) const {
  auto it = ids_.find(std::string(w));
  if (it == ids_.end() || it->second == bos_) return unk_;
  return it->second;
}

std::string_view NgramModel::map_word(std::string_view w) const { return vocab_[id_of(w)]; }

double NgramModel::lower_order(Id word, const std::vector<Id>& context, std::size_t len) const {
  const std::vector<Id> history(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
  const auto& ctx_table = cont_ctx_[len];
  auto st = ctx_table.find(history);
  const double lower = len == 0 ? 1.0 / static_cast<double>(predicted_size_) : lower_order(word, context, len - 1);
  if (st == ctx_table.end() || st->second.total <= 0.0) return lower;

  std::vector<Id> key = history;
  key.push_back(word);
  double c = 0.0;
  if (auto it = cont_[len].find(key); it != cont_[len].end()) c = static_cast<double>(it->second);
  const double total = st->second.total;
  return std::max(c - discount_, 0.0) / total + discount_ * static_cast<double>(st->second.distinct) / total * lower;
}

double NgramModel::prob_ids(Id word, const std::vector<Id>& context) const {
  const auto order = static_cast<std::size_t>(order_);
  if (order == 1) {
    const auto& st = raw_ctx_[0].at({});
    auto it = counts_[0].find({word});
    return it == counts_[0].end() ? 0.0 : static_cast<double>(it->second) / st.total;
  }
  const double lower = lower_order(word, context, order - 2);
  auto st = raw_ctx_[order - 1].find(context);
  if (st == raw_ctx_[order - 1].end() || st->second.total <= 0.0) return lower;
  std::vector<Id> key = context;
  key.push_back(word);
  double c = 0.0;
  if (auto it = counts_[order - 1].find(key); it != counts_[order - 1].end()) c = static_cast<double>(it->second);
  const double total = st->second.total;
  return std::max(c - discount_, 0.0) / total + discount_ * static_cast<double>(st->second.distinct) / total * lower;
}

double NgramModel::probability(std::string_view word, std::span<const std::string> history) const {
  const auto need = static_cast<std::size_t>(order_ - 1);
  std::vector<Id> ctx(need, bos_);
  const std::size_t take = std::min(need, history.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& h = history[history.size() - take + i];
    ctx[need - take + i] = h == kBos ? bos_ : id_of(h);
  }
  return prob_ids(id_of(word), ctx);
}

std::size_t NgramModel::count(std::span<const std::string> ngram) const {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(order_)) return 0;
  std::vector<Id> key;
  for (const auto& w : ngram) {
    auto it = ids_.find(w);
    if (it == ids_.end()) return 0;
    key.push_back(it->second);
  }
  const auto& table = counts_[ngram.size() - 1];
  auto it = table.find(key);
  return it == table.end() ? 0 : it->second;
}

std::vector<double> NgramModel::surprisal(std::span<const std::string> utterance) const {
  const auto need = static_cast<std::size_t>(order_ - 1);
  std::vector<Id> ctx(need, bos_);
  std::vector<double> out;
  out.reserve(utterance.size());
  for (const auto& w : utterance) {
    const Id id = id_of(w);
    out.push_back(-std::log2(prob_ids(id, ctx)));
    if (need > 0) {
      ctx.erase(ctx.begin());
      ctx.push_back(id);
    }
  }
  return out;
}

NgramModel::Utterances corpus_utterances(const AlignedCorpus& corpus, const Normalizer& normalize) {
  NgramModel::Utterances out;
  for (const auto& rec : corpus.recordings)
    for (const auto& utt : rec.utterances) {
      std::vector<std::string> words;
      for (const auto& t : utt.tokens) words.push_back(normalize(t.orthography));
      out.push_back(std::move(words));
    }
  return out;
}

std::vector<SurprisalRecord> score_corpus(const NgramModel& model, const AlignedCorpus& corpus,
                                          const Normalizer& normalize) {
  std::vector<SurprisalRecord> out;
  for (const auto& rec : corpus.recordings)
    for (const auto& utt : rec.utterances) {
      std::vector<std::string> words;
      for (const auto& t : utt.tokens) words.push_back(normalize(t.orthography));
      const auto s = model.surprisal(words);
      for (std::size_t i = 0; i < utt.tokens.size(); ++i)
        out.push_back({provenance_of(utt.tokens[i]), utt.tokens[i].orthography, s[i]});
    }
  return out;
}

double perplexity(std::span<const SurprisalRecord> records) {
  if (records.empty()) throw EmptyInput("perplexity of zero tokens", "ngram");
  double sum = 0.0;
  for (const auto& r : records) sum += r.surprisal;
  return std::exp2(sum / static_cast<double>(records.size()));
}

double perplexity(const NgramModel& model, const NgramModel::Utterances& utterances) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& u : utterances) {
    for (double s : model.surprisal(u)) {
      sum += s;
      ++n;
    }
  }
  if (n == 0) throw EmptyInput("perplexity of zero tokens", "ngram");
  return std::exp2(sum / static_cast<double>(n));
}

std::string emit_surprisal_tsv(std::span<const SurprisalRecord> records) {
  std::string out(kSurprisalTsvHeader);
  out += '\n';
  for (const auto& r : records)
    out += r.provenance.speaker + '\t' + std::to_string(r.provenance.utterance) + '\t' +
           std::to_string(r.provenance.index) + '\t' + r.word + '\t' + text::format_double(r.surprisal) + '\n';
  return out;
}

std::vector<SurprisalRecord> parse_surprisal_tsv(std::string_view data) {
  const auto rows = text::lines(data);
  if (rows.empty() || rows.front() != kSurprisalTsvHeader) throw ParseError("ngram", "surprisal TSV header mismatch", 1);
  std::vector<SurprisalRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = text::split(rows[i], '\t');
    if (cols.size() != 5) throw ParseError("ngram", "expected 5 columns", i + 1);
    auto utt = text::parse_int(cols[1]);
    auto idx = text::parse_int(cols[2]);
    auto s = text::parse_double(cols[4]);
    if (!utt || !idx || !s) throw ParseError("ngram", "invalid numeric field", i + 1);
    out.push_back({{std::string(cols[0]), static_cast<int>(*utt), static_cast<int>(*idx)}, std::string(cols[3]), *s});
  }
  return out;
}

}  // namespace prosobench
