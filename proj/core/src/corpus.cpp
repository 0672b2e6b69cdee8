#include "qatok/corpus.hpp"

#include "qatok/quality.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <stdexcept>
#include <string>
#include <thread>

namespace qatok {

void validate(const AtomicSequence& seq, std::size_t alphabet_size) {
  if (seq.elements.size() != seq.qualities.size())
    throw std::invalid_argument("sequence '" + seq.source_id + "': elements/qualities length mismatch");
  for (SymbolId s : seq.elements)
    if (s >= alphabet_size)
      throw std::invalid_argument("sequence '" + seq.source_id + "': symbol id outside alphabet");
  for (double q : seq.qualities)
    if (!(q >= 0.0 && q <= 1.0))
      throw std::invalid_argument("sequence '" + seq.source_id + "': quality outside [0,1]");
}

namespace genomics {

std::size_t symbol_index(char base) noexcept {
  switch (base) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    case 'N': return 4;
    default: return kAlphabetSize;
  }
}

}  // namespace genomics

namespace {

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::vector<AtomicSequence> read_fastq(std::istream& in) {
  std::vector<AtomicSequence> out;
  std::string header, bases, plus, quals;
  long record = 0;
  while (next_line(in, header)) {
    if (header.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const std::string where = "FASTQ record " + std::to_string(record);
    if (header.empty() || header[0] != '@') throw ParseError(where + ": header must start with '@'", record);
    if (!next_line(in, bases) || !next_line(in, plus) || !next_line(in, quals))
      throw ParseError(where + ": truncated record (expected 4 lines)", record);
    if (plus.empty() || plus[0] != '+') throw ParseError(where + ": separator line must start with '+'", record);
    if (bases.size() != quals.size())
      throw ParseError(where + ": sequence length " + std::to_string(bases.size()) +
                           " != quality length " + std::to_string(quals.size()),
                       record);

    AtomicSequence seq;
    seq.source_id = header.substr(1);
    seq.elements.reserve(bases.size());
    seq.qualities.reserve(bases.size());
    for (std::size_t i = 0; i < bases.size(); ++i) {
      const std::size_t sym = genomics::symbol_index(bases[i]);
      if (sym == genomics::kAlphabetSize)
        throw ParseError(where + ": unknown base '" + std::string(1, bases[i]) + "' at position " +
                             std::to_string(i),
                         record);
      const int phred = static_cast<unsigned char>(quals[i]) - 33;
      if (phred < 0 || phred > 93)
        throw ParseError(where + ": quality character outside Phred+33 range at position " +
                             std::to_string(i),
                         record);
      seq.elements.push_back(static_cast<SymbolId>(sym));
      seq.qualities.push_back(phred_to_quality(phred));
    }
    out.push_back(std::move(seq));
    ++record;
  }
  return out;
}

namespace {

void count_range(const Segmentation& seg, std::size_t begin, std::size_t end,
                 std::size_t token_count, PairStats& out) {
  out.token_freq.assign(token_count, 0);
  for (std::size_t s = begin; s < end; ++s) {
    const auto& toks = seg[s];
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i] >= token_count)
        throw std::invalid_argument("count_pairs: segmentation references unknown token " +
                                    std::to_string(toks[i]));
      ++out.token_freq[toks[i]];
      if (i + 1 < toks.size()) ++out.pair_freq[TokenPair{toks[i], toks[i + 1]}];
    }
    out.total_tokens += static_cast<std::int64_t>(toks.size());
  }
}

}  // namespace

PairStats count_pairs(const Segmentation& segmentation, std::size_t token_count, unsigned threads) {
  if (threads == 0) threads = worker_threads();
  const std::size_t n = segmentation.size();
  threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1)));

  std::vector<PairStats> shards(threads);
  if (threads == 1) {
    count_range(segmentation, 0, n, token_count, shards[0]);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = n * t / threads;
      const std::size_t end = n * (t + 1) / threads;
      pool.emplace_back([&, t, begin, end] {
        try {
          count_range(segmentation, begin, end, token_count, shards[t]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  PairStats total = std::move(shards[0]);
  for (unsigned t = 1; t < threads; ++t) {
    for (std::size_t i = 0; i < token_count; ++i) total.token_freq[i] += shards[t].token_freq[i];
    for (const auto& [pair, c] : shards[t].pair_freq) total.pair_freq[pair] += c;
    total.total_tokens += shards[t].total_tokens;
  }
  return total;
}

Segmentation base_segmentation(std::span<const AtomicSequence> corpus) {
  Segmentation seg;
  seg.reserve(corpus.size());
  for (const auto& s : corpus) seg.emplace_back(s.elements.begin(), s.elements.end());
  return seg;
}

SegmentedCorpus::SegmentedCorpus(std::span<const AtomicSequence> corpus, std::size_t alphabet_size,
                                 Domain domain, double eps_q)
    : alphabet_size_(alphabet_size), domain_(domain), eps_q_(eps_q) {
  if (!(eps_q > 0.0)) throw std::invalid_argument("eps_q must be > 0");
  for (const auto& s : corpus) validate(s, alphabet_size);

  segmentation_ = base_segmentation(corpus);
  lengths_.assign(alphabet_size, 1);
  quality_sum_.assign(alphabet_size, 0.0);
  last_quality_.assign(alphabet_size, 0.0);
  accumulators_.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::vector<double> acc(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      acc[i] = accumulate_one(s.qualities[i]);
      quality_sum_[s.elements[i]] += occurrence_quality(acc[i], 1);
    }
    accumulators_.push_back(std::move(acc));
  }

  stats_ = count_pairs(segmentation_, alphabet_size, 1);
  for (std::uint32_t s = 0; s < segmentation_.size(); ++s) {
    const auto& toks = segmentation_[s];
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      auto& w = where_[TokenPair{toks[i], toks[i + 1]}];
      if (w.empty() || w.back() != s) w.push_back(s);
    }
  }
  for (std::size_t t = 0; t < alphabet_size; ++t)
    if (stats_.token_freq[t] > 0)
      last_quality_[t] = clamp_unit(quality_sum_[t] / static_cast<double>(stats_.token_freq[t]));
}

double SegmentedCorpus::accumulate_one(double q) const {
  return domain_ == Domain::genomics ? std::log(q + eps_q_) : q;
}

double SegmentedCorpus::occurrence_quality(double accumulator, std::uint32_t length) const {
  const double mean = accumulator / static_cast<double>(length);
  return clamp_unit(domain_ == Domain::genomics ? std::exp(mean) : mean);
}

double SegmentedCorpus::token_quality(TokenId t) const {
  if (t >= lengths_.size()) throw std::out_of_range("token_quality: unknown token");
  const auto f = stats_.freq(t);
  if (f > 0) return clamp_unit(quality_sum_[t] / static_cast<double>(f));
  return last_quality_[t];
}

void SegmentedCorpus::bump_pair(TokenPair p, std::int64_t delta, std::uint32_t seq) {
  auto it = stats_.pair_freq.find(p);
  std::int64_t now = (it == stats_.pair_freq.end() ? 0 : it->second) + delta;
  if (now < 0) throw std::logic_error("pair count went negative");
  if (now == 0) {
    if (it != stats_.pair_freq.end()) stats_.pair_freq.erase(it);
  } else if (it == stats_.pair_freq.end()) {
    stats_.pair_freq.emplace(p, now);
  } else {
    it->second = now;
  }
  if (delta > 0) {
    auto& w = where_[p];
    if (w.empty() || w.back() != seq) w.push_back(seq);
  }
}

namespace {

std::vector<std::uint32_t> live_sequences(
    const std::unordered_map<TokenPair, std::vector<std::uint32_t>, TokenPairHash>& where, TokenPair p) {
  auto it = where.find(p);
  if (it == where.end()) return {};
  std::vector<std::uint32_t> seqs = it->second;
  std::sort(seqs.begin(), seqs.end());
  seqs.erase(std::unique(seqs.begin(), seqs.end()), seqs.end());
  return seqs;
}

}  // namespace

MergeOutcome SegmentedCorpus::preview_merge(TokenPair pair) const {
  MergeOutcome out;
  if (stats_.freq(pair) == 0) return out;
  const std::uint32_t len = lengths_.at(pair.left) + lengths_.at(pair.right);
  double quality_total = 0.0;
  for (std::uint32_t s : live_sequences(where_, pair)) {
    const auto& toks = segmentation_[s];
    const auto& accs = accumulators_[s];
    for (std::size_t i = 0; i + 1 < toks.size();) {
      if (toks[i] == pair.left && toks[i + 1] == pair.right) {
        const double acc = accs[i] + accs[i + 1];
        out.pooled_accumulator += acc;
        out.pooled_length += len;
        quality_total += occurrence_quality(acc, len);
        ++out.occurrences;
        i += 2;
      } else {
        ++i;
      }
    }
  }
  if (out.occurrences > 0) out.mean_occurrence_quality = quality_total / static_cast<double>(out.occurrences);
  return out;
}

MergeOutcome SegmentedCorpus::apply_merge(TokenPair pair, TokenId new_id) {
  MergeOutcome out;
  if (new_id != lengths_.size())
    throw std::invalid_argument("apply_merge: new token id must be " + std::to_string(lengths_.size()));
  if (pair.left >= lengths_.size() || pair.right >= lengths_.size())
    throw std::invalid_argument("apply_merge: unknown constituent token");
  if (stats_.freq(pair) == 0) return out;

  const TokenId a = pair.left, b = pair.right, x = new_id;
  const std::uint32_t len = lengths_[a] + lengths_[b];
  lengths_.push_back(len);
  quality_sum_.push_back(0.0);
  last_quality_.push_back(0.0);
  stats_.token_freq.push_back(0);

  const auto seqs = live_sequences(where_, pair);
  double quality_total = 0.0;
  for (std::uint32_t s : seqs) {
    auto& toks = segmentation_[s];
    auto& accs = accumulators_[s];
    const std::size_t n = toks.size();
    std::size_t w = 0;
    for (std::size_t i = 0; i < n;) {
      if (i + 1 < n && toks[i] == a && toks[i + 1] == b) {
        if (w > 0) {
          bump_pair({toks[w - 1], a}, -1, s);
          bump_pair({toks[w - 1], x}, +1, s);
        }
        if (i + 2 < n) {
          bump_pair({b, toks[i + 2]}, -1, s);
          bump_pair({x, toks[i + 2]}, +1, s);
        }
        bump_pair(pair, -1, s);

        quality_sum_[a] -= occurrence_quality(accs[i], lengths_[a]);
        quality_sum_[b] -= occurrence_quality(accs[i + 1], lengths_[b]);
        const double acc = accs[i] + accs[i + 1];
        const double q = occurrence_quality(acc, len);
        quality_sum_[x] += q;
        quality_total += q;
        out.pooled_accumulator += acc;
        out.pooled_length += len;
        ++out.occurrences;

        toks[w] = x;
        accs[w] = acc;
        ++w;
        i += 2;
      } else {
        toks[w] = toks[i];
        accs[w] = accs[i];
        ++w;
        ++i;
      }
    }
    toks.resize(w);
    accs.resize(w);
  }
  where_.erase(pair);

  stats_.token_freq[a] -= out.occurrences;
  stats_.token_freq[b] -= out.occurrences;
  stats_.token_freq[x] += out.occurrences;
  stats_.total_tokens -= out.occurrences;

  for (TokenId t : {a, b, x}) {
    if (stats_.token_freq[t] > 0) {
      last_quality_[t] = clamp_unit(quality_sum_[t] / static_cast<double>(stats_.token_freq[t]));
    } else {
      quality_sum_[t] = 0.0;
    }
  }
  out.applied = true;
  out.mean_occurrence_quality = quality_total / static_cast<double>(out.occurrences);
  return out;
}

void SegmentedCorpus::reserve_token(TokenPair pair, TokenId new_id, double quality) {
  if (new_id != lengths_.size())
    throw std::invalid_argument("reserve_token: new token id must be " + std::to_string(lengths_.size()));
  if (pair.left >= lengths_.size() || pair.right >= lengths_.size())
    throw std::invalid_argument("reserve_token: unknown constituent token");
  lengths_.push_back(lengths_[pair.left] + lengths_[pair.right]);
  quality_sum_.push_back(0.0);
  last_quality_.push_back(clamp_unit(quality));
  stats_.token_freq.push_back(0);
}

}  // namespace qatok
