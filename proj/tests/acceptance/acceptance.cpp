// Acceptance suite: one line per criterion, exit status 1 when any fails.

#include "qatok/adaptive.hpp"
#include "qatok/corpus.hpp"
#include "qatok/lob.hpp"
#include "qatok/merge.hpp"
#include "qatok/objective.hpp"
#include "qatok/ppo.hpp"
#include "qatok/rewards.hpp"
#include "qatok/rl_env.hpp"
#include "qatok/sampler.hpp"
#include "qatok/tokenizer.hpp"

#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

using namespace qatok;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<AtomicSequence> random_corpus(std::mt19937_64& rng, std::size_t alphabet, std::size_t sequences,
                                          std::size_t min_len, std::size_t max_len, double q_lo, double q_hi) {
  std::uniform_int_distribution<SymbolId> sym(0, static_cast<SymbolId>(alphabet - 1));
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_real_distribution<double> q(q_lo, q_hi);
  std::vector<AtomicSequence> out(sequences);
  for (auto& s : out) {
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      s.elements.push_back(sym(rng));
      s.qualities.push_back(q(rng));
    }
  }
  return out;
}

Segmentation rewrite(const Segmentation& seg, TokenPair p, TokenId x) {
  Segmentation out;
  for (const auto& toks : seg) {
    std::vector<TokenId> next;
    for (std::size_t i = 0; i < toks.size();) {
      if (i + 1 < toks.size() && toks[i] == p.left && toks[i + 1] == p.right) {
        next.push_back(x);
        i += 2;
      } else {
        next.push_back(toks[i++]);
      }
    }
    out.push_back(std::move(next));
  }
  return out;
}

// 1. Frequency/PMI-only greedy recomputed from scratch at every step.
std::vector<TokenPair> pmi_greedy(const std::vector<AtomicSequence>& corpus, std::size_t alphabet, std::size_t k) {
  Segmentation seg;
  for (const auto& s : corpus) seg.emplace_back(s.elements.begin(), s.elements.end());
  std::vector<TokenPair> merges;
  for (std::size_t step = 0; step < k; ++step) {
    std::map<TokenId, double> uni;
    std::map<TokenPair, double> bi;
    for (const auto& s : seg)
      for (std::size_t i = 0; i < s.size(); ++i) {
        uni[s[i]] += 1;
        if (i + 1 < s.size()) bi[{s[i], s[i + 1]}] += 1;
      }
    if (bi.empty()) break;
    double best = -1.0;
    for (const auto& [p, f] : bi) best = std::max(best, f / (uni[p.left] * uni[p.right] + 1e-8));
    TokenPair chosen{};
    for (const auto& [p, f] : bi)
      if (f / (uni[p.left] * uni[p.right] + 1e-8) >= best * (1.0 - kScoreTieTolerance)) {
        chosen = p;
        break;
      }
    merges.push_back(chosen);
    seg = rewrite(seg, chosen, static_cast<TokenId>(alphabet + step));
  }
  return merges;
}

Outcome reduction_to_bpe() {
  std::mt19937_64 rng(101);
  std::size_t mismatches = 0, merges = 0;
  for (int c = 0; c < 20; ++c) {
    const std::size_t alphabet = 2 + c % 7;
    auto corpus = random_corpus(rng, alphabet, 1 + rng() % 20, 5, 100, 0.0, 1.0);
    std::size_t total = 0;
    for (const auto& s : corpus) total += s.size();
    while (total > 2000) {
      total -= corpus.back().size();
      corpus.pop_back();
    }
    const double q = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    for (auto& s : corpus) std::fill(s.qualities.begin(), s.qualities.end(), q);
    const auto oracle = pmi_greedy(corpus, alphabet, 40);
    for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
      MergeScoreParams p;
      p.alpha = alpha;
      const auto r = greedy_build(corpus, alphabet, Domain::genomics, p, 40);
      std::vector<TokenPair> got;
      for (const auto& m : r.vocab.merges) got.push_back({m.left, m.right});
      mismatches += got != oracle;
      merges += got.size();
    }
  }
  return {mismatches == 0, fmt("80 runs (20 corpora x 4 alpha), %zu merges compared, %zu sequence mismatches", merges,
                               mismatches)};
}

// 2. F(S) = J(S) - J(empty) with lm = 1, qual = 1, comp = 0, alpha = 1.
Outcome greedy_ratio() {
  std::mt19937_64 rng(202);
  ObjectiveWeights w;
  w.lm = 1.0;
  w.qual = 1.0;
  w.comp = 0.0;
  w.alpha = 1.0;
  const double bound = 1.0 - 1.0 / std::exp(1.0);
  std::size_t violations = 0;
  double worst = 1e300;
  const std::size_t instances = 60;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t alphabet = 2 + rng() % 3;
    const std::size_t k = 1 + rng() % 3;
    const auto corpus = random_corpus(rng, alphabet, 1 + rng() % 3, 3, 8, 0.1, 1.0);
    Vocabulary base;
    base.base_size = alphabet;
    base.alpha = w.alpha;
    const double j0 = evaluate_objective(base, corpus, w);
    MergeScoreParams p;
    p.alpha = w.alpha;
    const double fg = evaluate_objective(greedy_build(corpus, alphabet, Domain::genomics, p, k).vocab, corpus, w) - j0;
    const double fe = exhaustive_optimum(corpus, alphabet, Domain::genomics, w, k).best_value - j0;
    if (fg < bound * fe - 1e-12) ++violations;
    if (fe > 1e-12) worst = std::min(worst, fg / fe);
  }
  return {violations == 0,
          fmt("%zu instances, %zu below (1-1/e) F(exhaustive), worst F(greedy)/F(exhaustive) = %.4f", instances,
              violations, worst)};
}

// 3.
Outcome merge_score_bound() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> count(0, 100000);
  std::uniform_real_distribution<double> unit(0.0, 1.0), alpha(0.0, 3.0);
  std::size_t over = 0, non_monotone = 0, pairs = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    MergeScoreParams p;
    p.alpha = alpha(rng);
    const double fa = count(rng), fb = count(rng), fab = count(rng);
    const double qa = unit(rng), qb = unit(rng);
    const double cf = std::max({fa, fb, fab});
    const double w = merge_score(fab, fa, fb, qa, qb, p);
    if (w > cf * std::pow(1.0 + p.eps_q, p.alpha) / p.eps_f) ++over;
    if (fab > 0 && p.alpha > 0) {
      ++pairs;
      const double up = qa + (1.0 - qa) * (0.01 + 0.99 * unit(rng));
      if (!(merge_score(fab, fa, fb, up, qb, p) > w)) ++non_monotone;
    }
  }
  return {over == 0 && non_monotone == 0,
          fmt("1e6 samples, %zu above bound; %zu monotonicity pairs, %zu violations", over, pairs, non_monotone)};
}

// 4.
Outcome ema_stability() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t nonpositive = 0;
  for (int s = 0; s < 100000; ++s) {
    RewardStats st;
    const double lo = -10.0 * unit(rng), hi = lo + 1e-3 + 20.0 * unit(rng);
    std::uniform_real_distribution<double> x(lo, hi);
    for (int t = 0; t < 100; ++t) {
      ema_update(st, x(rng));
      if (!(st.sigma() > 0.0)) ++nonpositive;
    }
  }
  double worst = 0.0;
  const std::function<double(std::mt19937_64&)> sources[] = {
      [](std::mt19937_64& r) { return std::uniform_real_distribution<double>(-1.0, 3.0)(r); },
      [](std::mt19937_64& r) { return std::clamp(std::normal_distribution<double>(5.0, 2.0)(r), 0.0, 10.0); },
      [](std::mt19937_64& r) { return std::bernoulli_distribution(0.2)(r) ? 1.0 : 0.0; },
      [](std::mt19937_64& r) { return std::exp(std::uniform_real_distribution<double>(-2.0, 2.0)(r)); },
  };
  for (const auto& src : sources) {
    RewardStats st;
    double sum = 0.0;
    for (int t = 0; t < 100000; ++t) sum += ema_update(st, src(rng));
    worst = std::max(worst, std::abs(sum / 100000.0));
  }
  return {nonpositive == 0 && worst <= 0.05,
          fmt("1e5 streams x 100 steps, %zu non-positive sigma; max |long-run mean| = %.4f (limit 0.05)", nonpositive,
              worst)};
}

// 5.
Outcome gumbel_max() {
  std::mt19937_64 rng(505);
  std::normal_distribution<double> n(0.0, 1.5);
  double worst = 0.0;
  for (int v = 0; v < 10; ++v) {
    const std::size_t k = 2 + v % 5;
    std::vector<double> l(k);
    for (auto& x : l) x = n(rng);
    const std::vector<double> zero(k, 0.0);
    const auto p = gumbel_softmax(l, zero, 1.0);
    GumbelNoise g(rng());
    std::vector<double> hits(k, 0.0);
    for (int d = 0; d < 100000; ++d) {
      std::size_t best = 0;
      double top = -1e300;
      for (std::size_t i = 0; i < k; ++i) {
        const double s = l[i] + g();
        if (s > top) {
          top = s;
          best = i;
        }
      }
      hits[best] += 1.0;
    }
    for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(hits[i] / 100000.0 - p[i]));
  }
  return {worst <= 0.01, fmt("10 logit vectors x 1e5 draws, max |freq - softmax| = %.4f (limit 0.01)", worst)};
}

// 6. Jacobian error is relative to the largest Jacobian entry; the alpha
// derivative error is relative per point.
Outcome jacobians() {
  using boost::math::differentiation::finite_difference_derivative;
  std::mt19937_64 rng(606);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_j = 0.0, worst_a = 0.0;
  for (int pt = 0; pt < 100; ++pt) {
    const std::size_t k = 2 + pt % 5;
    std::vector<double> l(k), g(k);
    for (auto& x : l) x = n(rng);
    for (auto& x : g) x = n(rng);
    const double tau = 0.1 + 2.0 * unit(rng);
    const auto jac = gumbel_jacobian(gumbel_softmax(l, g, tau), tau);
    double scale = 0.0, err = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) {
        const auto f = [&](double v) {
          auto lv = l;
          lv[j] = v;
          return gumbel_softmax(lv, g, tau)[i];
        };
        const double fd = finite_difference_derivative(f, l[j]);
        scale = std::max(scale, std::abs(jac[i][j]));
        err = std::max(err, std::abs(jac[i][j] - fd));
      }
    }
    worst_j = std::max(worst_j, err / std::max(scale, 1e-300));

    MergeScoreParams p;
    p.alpha = 3.0 * unit(rng);
    const double fa = 1 + rng() % 1000, fb = 1 + rng() % 1000, fab = 1 + rng() % 1000;
    const double qa = unit(rng), qb = unit(rng);
    const double analytic = merge_score_dalpha(fab, fa, fb, qa, qb, p);
    const auto f = [&](double a) {
      MergeScoreParams q = p;
      q.alpha = a;
      return merge_score(fab, fa, fb, qa, qb, q);
    };
    const double fd = finite_difference_derivative(f, p.alpha);
    worst_a = std::max(worst_a, std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-300}));
  }
  return {worst_j < 1e-5 && worst_a < 1e-6,
          fmt("100 points: Gumbel-Softmax Jacobian max rel err %.2e (limit 1e-5), dw/dalpha max rel err %.2e (limit "
              "1e-6)",
              worst_j, worst_a)};
}

// 7. One-sided paired t-test over 30 seeds.
Outcome ppo_improvement() {
  std::vector<double> diff;
  for (std::uint64_t s = 0; s < 30; ++s) {
    PpoConfig cfg;
    cfg.seed = s;
    const auto factory = [s] { return std::unique_ptr<Environment>(new BanditEnv(8, 16, 10, 7 + s)); };
    const auto r = train_ppo(factory, cfg, 60);
    BanditEnv trained_env(8, 16, 10, 7 + s), random_env(8, 16, 10, 7 + s);
    diff.push_back(evaluate_policy(trained_env, &r.policy, 50, 99 + s) -
                   evaluate_policy(random_env, nullptr, 50, 99 + s));
  }
  const double n = static_cast<double>(diff.size());
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
  double var = 0.0;
  for (double d : diff) var += (d - mean) * (d - mean);
  var /= n - 1.0;
  const double t = mean / std::sqrt(var / n);
  const boost::math::students_t dist(n - 1.0);
  const double p = std::isfinite(t) ? boost::math::cdf(boost::math::complement(dist, t)) : (mean > 0 ? 0.0 : 1.0);
  return {p < 0.05, fmt("30 seeds, mean reward gain %.3f per episode, one-sided paired t p = %.2e (limit 0.05)", mean,
                        p)};
}

// 8.
Outcome stage2_learning() {
  int wins = 0;
  double min_alpha = 1e300, worst_ratio = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    const QualityTaskSpec spec;
    const auto data = make_quality_task(spec, 1000 + seed);
    const auto alphabet = quality_task_alphabet(spec);
    auto p0 = AdaptiveParams::defaults(Domain::genomics);
    p0.alpha = 0.0;
    TrainAdaptiveConfig cfg;
    cfg.iterations = 100;
    cfg.eta0 = 0.5;
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.schedule.total_steps = cfg.iterations;
    const auto task = quality_threshold_loss();
    const auto learned = train_adaptive(task, data, alphabet, p0, cfg);
    cfg.freeze_alpha = true;
    const auto frozen = train_adaptive(task, data, alphabet, p0, cfg);
    const double tau = cfg.schedule.tau(cfg.iterations);
    const double ll = evaluate_task_loss(task, data, alphabet, learned.params, tau, cfg.soft);
    const double lf = evaluate_task_loss(task, data, alphabet, frozen.params, tau, cfg.soft);
    const double ratio = ll / lf;
    wins += learned.params.alpha > 0.2 && ratio <= 0.8;
    min_alpha = std::min(min_alpha, learned.params.alpha);
    worst_ratio = std::max(worst_ratio, ratio);
  }
  return {wins >= 8, fmt("%d/10 seeds with alpha > 0.2 and loss <= 0.8 x frozen (need 8); min alpha %.3f, worst "
                         "loss ratio %.3f",
                         wins, min_alpha, worst_ratio)};
}

// 9.
Outcome state_dimension_check() {
  std::mt19937_64 rng(909);
  EnvConfig cfg;
  cfg.k_pq = 50;
  TokenizationEnv env(random_corpus(rng, 4, 10, 20, 40, 0.1, 1.0), 4, Domain::genomics, cfg);
  const auto d = env.reset().size();
  return {d == 326 && state_dimension(50) == 326, fmt("encode_state with K_PQ = 50 has %zu features", d)};
}

// 10.
Outcome roundtrip_and_overhead() {
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(1010);
  std::size_t failures = 0;
  double worst_overhead = 0.0;
  for (std::size_t alphabet : {std::size_t{5}, std::size_t{7500}}) {
    const Domain domain = alphabet == 5 ? Domain::genomics : Domain::finance;
    // A skewed training corpus gives the vocabulary many productive merges.
    auto train = random_corpus(rng, std::min<std::size_t>(alphabet, 12), 200, 50, 150, 0.1, 1.0);
    MergeScoreParams p;
    p.alpha = 1.0;
    const Tokenizer tok(greedy_build(train, alphabet, domain, p, 200).vocab);
    const auto test = random_corpus(rng, std::min<std::size_t>(alphabet, 12), 10000, 0, 200, 0.0, 1.0);
    for (const auto& s : test)
      if (tok.decode(tok.encode(s)) != s.elements) ++failures;
    std::vector<double> with_q, without_q;
    std::size_t sink = 0;
    const auto time_with = [&] {
      const auto t0 = clock::now();
      for (const auto& s : test) sink += tok.encode(s).size();
      with_q.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    };
    const auto time_without = [&] {
      const auto t0 = clock::now();
      // Same buffers through the unannotated overload, so memory layout cannot bias the comparison.
      for (const auto& s : test) sink += tok.encode(std::span<const SymbolId>(s.elements)).size();
      without_q.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    };
    // Alternate the order so neither variant always runs on a warm cache.
    for (int rep = 0; rep < 21; ++rep) {
      if (rep % 2) {
        time_with();
        time_without();
      } else {
        time_without();
        time_with();
      }
    }
    if (sink == 0) ++failures;
    std::sort(with_q.begin(), with_q.end());
    std::sort(without_q.begin(), without_q.end());
    const std::size_t mid = with_q.size() / 2;
    worst_overhead = std::max(worst_overhead, std::abs(with_q[mid] - without_q[mid]) / without_q[mid]);
  }
  return {failures == 0 && worst_overhead <= 0.05,
          fmt("2 alphabets x 1e4 sequences, %zu roundtrip failures; median encode time difference %.2f%% (limit 5%%)",
              failures, 100.0 * worst_overhead)};
}

// 11. Independent recount over the rewritten segmentation.
Outcome incremental_counts() {
  std::mt19937_64 rng(1111);
  std::size_t bad = 0, cases = 0;
  while (cases < 200) {
    const std::size_t alphabet = 2 + rng() % 5;
    const auto corpus = random_corpus(rng, alphabet, 1 + rng() % 8, 0, 60, 0.05, 1.0);
    SegmentedCorpus seg(corpus, alphabet, cases % 2 ? Domain::finance : Domain::genomics);
    Segmentation oracle;
    for (const auto& s : corpus) oracle.emplace_back(s.elements.begin(), s.elements.end());
    for (int step = 0; step < 3 && !seg.stats().pair_freq.empty(); ++step) {
      std::vector<TokenPair> live;
      for (const auto& [pair, f] : seg.stats().pair_freq) live.push_back(pair);
      std::sort(live.begin(), live.end());
      const auto pair = live[rng() % live.size()];
      const auto id = static_cast<TokenId>(seg.token_count());
      seg.apply_merge(pair, id);
      oracle = rewrite(oracle, pair, id);
      ++cases;

      std::vector<std::int64_t> uni(seg.token_count(), 0);
      std::map<TokenPair, std::int64_t> bi;
      std::int64_t total = 0;
      for (const auto& s : oracle)
        for (std::size_t i = 0; i < s.size(); ++i) {
          ++uni[s[i]];
          ++total;
          if (i + 1 < s.size()) ++bi[{s[i], s[i + 1]}];
        }
      const auto& st = seg.stats();
      bool ok = st.total_tokens == total && seg.segmentation() == oracle && st.pair_freq.size() == bi.size();
      for (TokenId t = 0; ok && t < uni.size(); ++t) ok = st.freq(t) == uni[t];
      for (const auto& [pr, f] : bi) ok = ok && st.freq(pr) == f;
      bad += !ok;
    }
  }
  return {bad == 0, fmt("%zu random (corpus, merge) cases, %zu mismatches against a from-scratch recount", cases, bad)};
}

// 12. With one selection per run the law is exactly w_i / sum(w).
Outcome sampler_law() {
  const std::vector<std::vector<double>> q{{0.2, 0.5}, {0.1, 0.4}, {0.3, 0.5}, {0.4, 0.8}, {0.0, 0.3}};
  const double eps = 1e-6;
  const auto w = sampling_weights(q, eps);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> counts(q.size(), 0.0);
  const int runs = 100;
  for (int s = 0; s < runs; ++s) counts[stratified_sample(q, 0.2, eps, static_cast<std::uint64_t>(s))[0]] += 1.0;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double e = runs * w[i] / total;
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(q.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  return {p > 0.01, fmt("100 seeded runs over 5 sequences, chi-square %.3f (df 4), p = %.3f (limit 0.01)", chi2, p)};
}

// 13.
Outcome lob_alphabet() {
  const BinConfig bins;
  std::mt19937_64 rng(1313);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> imb(-1.0, 1.0), dt(1e-4, 100.0);
  std::vector<LobEvent> events;
  for (int i = 0; i < 5000; ++i)
    events.push_back({n(rng), n(rng), imb(rng), static_cast<LobEventType>(rng() % 3), dt(rng)});
  const auto seq = discretize_lob(events, bins);
  const bool in_range = std::all_of(seq.elements.begin(), seq.elements.end(),
                                    [&](SymbolId s) { return s < bins.alphabet_size(); });
  const auto lo = lob_symbol({-100, -100, -1, LobEventType::trade, 1e-9}, bins);
  const auto hi = lob_symbol({100, 100, 1, LobEventType::limit_order, 1e9}, bins);
  return {bins.alphabet_size() == 7500 && in_range && lo == 0 && hi == 7499,
          fmt("alphabet size %zu, symbol range [%u, %u], %zu discretized groups within range", bins.alphabet_size(),
              lo, hi, seq.size())};
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "reduction-to-BPE", 10, reduction_to_bpe},
      {2, "greedy ratio", 60, greedy_ratio},
      {3, "merge-score bound", 10, merge_score_bound},
      {4, "EMA stability", 10, ema_stability},
      {5, "Gumbel-Max consistency", 10, gumbel_max},
      {6, "Jacobian checks", 5, jacobians},
      {7, "PPO improvement", 300, ppo_improvement},
      {8, "Stage 2 learning", 600, stage2_learning},
      {9, "state dimension", 1, state_dimension_check},
      {10, "lossless roundtrip + zero overhead", 30, roundtrip_and_overhead},
      {11, "incremental-count oracle", 10, incremental_counts},
      {12, "sampler law", 30, sampler_law},
      {13, "LOB alphabet", 1, lob_alphabet},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs <= c.budget_s;
    failed += !pass;
    std::printf("%s %2d %s: %s [%.2f s, budget %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d/13 criteria passed\n", 13 - failed);
  return failed == 0 ? 0 : 1;
}
