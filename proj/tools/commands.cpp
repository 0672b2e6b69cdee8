#include "commands.hpp"

#include "config.hpp"

#include "qatok/adaptive.hpp"
#include "qatok/corpus.hpp"
#include "qatok/lob.hpp"
#include "qatok/merge.hpp"
#include "qatok/mlp.hpp"
#include "qatok/objective.hpp"
#include "qatok/ppo.hpp"
#include "qatok/rl_env.hpp"
#include "qatok/sampler.hpp"
#include "qatok/tokenizer.hpp"
#include "qatok/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace qatok::cli {

namespace {

/// An input or artifact file that does not exist or cannot be read.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open input file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << bytes;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

struct Context {
  Config cfg;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;
};

Context load_context(const Options& opts) {
  if (opts.config.empty()) throw ConfigError("--config is required");
  Context ctx{Config::load(opts.config), 0, std::nullopt};
  ctx.seed = opts.seed ? *opts.seed : ctx.cfg.u64("run.seed");
  if (opts.out) ctx.out = *opts.out;
  return ctx;
}

std::filesystem::path output_dir(const Context& ctx) { return ctx.out ? *ctx.out : ctx.cfg.path("output.dir"); }

std::filesystem::path vocab_path(const Context& ctx) {
  return ctx.cfg.has("vocab.path") ? ctx.cfg.path("vocab.path") : ctx.cfg.path("output.dir") / "vocab.txt";
}

Vocabulary load_vocab(const Context& ctx) { return parse_vocabulary(read_file(vocab_path(ctx))); }

/// Writes to --out when given, else to `fallback`.
void emit(const Context& ctx, const std::string& text, std::ostream& fallback) {
  if (ctx.out) {
    write_file(*ctx.out, text);
  } else {
    fallback << text;
  }
}

AdaptiveParams load_params(const Config& cfg, Domain domain) {
  AdaptiveParams p = AdaptiveParams::defaults(domain);
  if (cfg.has("params.path")) p = parse_params(read_file(cfg.path("params.path")));
  if (cfg.has("params.alpha")) p.alpha = cfg.real("params.alpha");
  if (cfg.has("params.beta_pos")) p.beta_pos = cfg.real("params.beta_pos");
  if (cfg.has("params.beta_vol")) p.beta_vol = cfg.real("params.beta_vol");
  try {
    p.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid theta_adapt: ") + e.what());
  }
  return p;
}

BinConfig bin_config(const Config& cfg) {
  BinConfig b;
  b.price_bins = cfg.count("lob.price_bins");
  b.price_range = cfg.real("lob.price_range");
  b.spread_bins = cfg.count("lob.spread_bins");
  b.spread_range = cfg.real("lob.spread_range");
  b.imbalance_bins = cfg.count("lob.imbalance_bins");
  b.time_bins = cfg.count("lob.time_bins");
  b.time_min = cfg.real("lob.time_min");
  b.time_max = cfg.real("lob.time_max");
  b.validate();
  return b;
}

std::vector<std::filesystem::path> input_paths(const Config& cfg, std::string_view key) {
  std::vector<std::filesystem::path> out;
  std::string list = cfg.str(key);
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = std::min(list.find(',', pos), list.size());
    std::string item = list.substr(pos, comma - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) {
      std::filesystem::path p = item;
      out.push_back(p.is_absolute() ? p : cfg.base_dir() / p);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("key '" + std::string(key) + "' names no files");
  return out;
}

/// Raw corpus as read from disk. Finance keeps the events so qualities can
/// be recomputed under different composite weights.
struct Input {
  Domain domain = Domain::genomics;
  std::size_t alphabet = 0;
  BinConfig bins;
  std::vector<AtomicSequence> raw;
  std::vector<std::vector<LobEvent>> events;
};

Input load_input(const Config& cfg, Domain domain) {
  Input in;
  in.domain = domain;
  const auto paths = input_paths(cfg, "input.corpus");
  if (domain == Domain::genomics) {
    in.alphabet = genomics::kAlphabetSize;
    for (const auto& p : paths) {
      std::istringstream s(read_file(p));
      auto seqs = read_fastq(s);
      for (auto& q : seqs) in.raw.push_back(std::move(q));
    }
  } else {
    in.bins = bin_config(cfg);
    in.alphabet = in.bins.alphabet_size();
    for (const auto& p : paths) {
      std::istringstream s(read_file(p));
      auto events = read_lob_csv(s);
      auto seq = discretize_lob(events, in.bins);
      seq.source_id = p.stem().string();
      in.raw.push_back(std::move(seq));
      in.events.push_back(std::move(events));
    }
  }
  if (in.raw.empty()) throw MissingInputError("input corpus holds no sequences");
  return in;
}

LobSeriesOptions lob_options(const AdaptiveParams& p) {
  LobSeriesOptions o;
  o.quality.weights = p.quality_weights();
  o.quality.beta_vol = p.beta_vol;
  return o;
}

/// Qualities seen by the merge loop under theta: position-adjusted Phred
/// qualities for genomics, re-weighted composite quality for finance.
std::vector<AtomicSequence> scored_corpus(const Input& in, const AdaptiveParams& p, const Config& cfg) {
  std::vector<AtomicSequence> out = in.raw;
  if (in.domain == Domain::genomics) {
    GenomicQualityParams gp;
    gp.beta_pos = p.beta_pos;
    gp.eps_len = cfg.real("quality.eps_len");
    for (auto& s : out) s.qualities = position_adjust_all(s.qualities, gp);
  } else {
    const auto opts = lob_options(p);
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto seq = discretize_lob(in.events[i], in.bins, opts);
      out[i].qualities = std::move(seq.qualities);
    }
  }
  return out;
}

MergeScoreParams score_params(const Config& cfg, double alpha) {
  MergeScoreParams s;
  s.alpha = alpha;
  s.eps_f = cfg.real("merge.eps_f");
  s.eps_q = cfg.real("merge.eps_q");
  try {
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid merge parameters: ") + e.what());
  }
  return s;
}

enum class Mode { greedy, greedy_stage2, full };

Mode parse_mode(const std::string& s) {
  if (s == "greedy") return Mode::greedy;
  if (s == "greedy+stage2") return Mode::greedy_stage2;
  if (s == "full") return Mode::full;
  throw ConfigError("unknown run.mode '" + s + "' (expected greedy|greedy+stage2|full)");
}

struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, crc

  void write(const std::string& name, const std::string& bytes) {
    write_file(dir / name, bytes);
    files.emplace_back(name, crc32_hex(bytes));
  }
};

void run_stage1(const Context& ctx, const Input& in, const AdaptiveParams& p, Artifacts& art, std::ostream& out) {
  const auto& cfg = ctx.cfg;
  EnvConfig env;
  env.k_pq = cfg.count("stage1.k_pq");
  env.horizon = cfg.count("stage1.horizon");
  env.score = score_params(cfg, p.alpha);
  env.reward.domain = in.domain;
  env.reward.beta_vol = p.beta_vol;
  env.reward.weights = p.reward_weights();
  if (in.domain == Domain::finance)
    for (const auto& ev : in.events) env.reward.return_labels.push_back(future_return_labels(ev));
  if (env.k_pq == 0 || env.horizon == 0) throw ConfigError("stage1.k_pq and stage1.horizon must be >= 1");

  PpoConfig pc;
  pc.clip = cfg.real("stage1.clip");
  pc.gamma = cfg.real("stage1.gamma");
  pc.gae_lambda = cfg.real("stage1.gae_lambda");
  pc.epochs = cfg.count("stage1.epochs");
  pc.entropy_coef = cfg.real("stage1.entropy_coef");
  pc.value_coef = cfg.real("stage1.value_coef");
  pc.policy_lr = cfg.real("stage1.policy_lr");
  pc.value_lr = cfg.real("stage1.value_lr");
  pc.eps_start = cfg.real("stage1.eps_start");
  pc.eps_end = cfg.real("stage1.eps_end");
  pc.seed = derive_seed(ctx.seed, "stage1");
  pc.validate();

  const auto seqs = scored_corpus(in, p, cfg);
  auto factory = [&] { return std::make_unique<TokenizationEnv>(seqs, in.alphabet, in.domain, env); };
  const auto episodes = cfg.count("stage1.episodes");
  const auto res = train_ppo(factory, pc, episodes);

  std::ostringstream policy, value, log;
  save_mlp(policy, res.policy);
  save_mlp(value, res.value);
  write_training_log(log, res.log);
  art.write("policy.bin", policy.str());
  art.write("value.bin", value.str());
  art.write("ppo_log.csv", log.str());
  out << "stage1: " << episodes << " episodes";
  if (!res.log.empty()) out << ", final mean reward " << format_double(res.log.back().mean_reward);
  out << '\n';
}

std::vector<AdaptiveSample> stage2_windows(const Input& in, const AdaptiveParams& p, const Config& cfg) {
  const auto w = cfg.count("stage2.window");
  const auto cap = cfg.count("stage2.max_windows");
  const double threshold = cfg.real("stage2.threshold");
  if (w < 2) throw ConfigError("stage2.window must be >= 2");
  const auto scored = scored_corpus(in, p, cfg);
  const auto opts = lob_options(p);

  std::vector<AdaptiveSample> out;
  for (std::size_t s = 0; s < in.raw.size() && out.size() < cap; ++s) {
    std::vector<FinanceComponents> comps;
    if (in.domain == Domain::finance) comps = lob_components(in.events[s], opts);
    const auto& seq = in.raw[s];
    for (std::size_t b = 0; b + w <= seq.size() && out.size() < cap; b += w) {
      AdaptiveSample a;
      a.seq.source_id = seq.source_id + ":" + std::to_string(b);
      a.seq.elements.assign(seq.elements.begin() + b, seq.elements.begin() + b + w);
      if (in.domain == Domain::genomics) {
        a.seq.qualities.assign(seq.qualities.begin() + b, seq.qualities.begin() + b + w);
      } else {
        a.seq.qualities.assign(scored[s].qualities.begin() + b, scored[s].qualities.begin() + b + w);
        a.components.assign(comps.begin() + b, comps.begin() + b + w);
      }
      const auto& q = scored[s].qualities;
      const double mean = std::accumulate(q.begin() + b, q.begin() + b + w, 0.0) / static_cast<double>(w);
      a.label = mean > threshold ? 1 : 0;
      out.push_back(std::move(a));
    }
  }
  if (out.empty()) throw ConfigError("stage2: no sequence is as long as stage2.window");
  return out;
}

AdaptiveParams run_stage2(const Context& ctx, const Input& in, const AdaptiveParams& p, Artifacts& art,
                          std::ostream& out) {
  const auto& cfg = ctx.cfg;
  TrainAdaptiveConfig tc;
  tc.iterations = cfg.count("stage2.iterations");
  tc.eta0 = cfg.real("stage2.eta0");
  tc.schedule.tau_init = cfg.real("stage2.tau_init");
  tc.schedule.tau_final = cfg.real("stage2.tau_final");
  tc.schedule.beta_anneal = cfg.real("stage2.beta_anneal");
  tc.schedule.total_steps = std::max<std::size_t>(tc.iterations, 1);
  if (!(tc.schedule.tau_init > 0.0) || !(tc.schedule.tau_final > 0.0))
    throw ConfigError("stage2 temperatures must be > 0");
  tc.soft.domain = in.domain;
  tc.soft.k_candidates = cfg.count("stage2.k_candidates");
  tc.soft.steps = cfg.count("stage2.steps");
  tc.soft.eps_f = cfg.real("merge.eps_f");
  tc.soft.eps_q = cfg.real("merge.eps_q");
  tc.soft.eps_len = cfg.real("quality.eps_len");
  tc.soft.batch_norm_rewards = cfg.flag("stage2.batch_norm_rewards");
  if (tc.soft.k_candidates == 0) throw ConfigError("stage2.k_candidates must be >= 1");
  tc.seed = derive_seed(ctx.seed, "stage2");

  const auto data = stage2_windows(in, p, cfg);
  const auto task = quality_threshold_loss(cfg.real("stage2.kappa"), cfg.real("stage2.threshold"));
  TrainAdaptiveResult res;
  try {
    res = train_adaptive(task, data, in.alphabet, p, tc);
  } catch (const AdaptiveDivergenceError& e) {
    art.write("params.last_finite.txt", serialize_params(e.last_finite));
    throw;
  }
  std::ostringstream trace;
  write_loss_trace(trace, res.trace);
  art.write("loss_trace.csv", trace.str());
  out << "stage2: " << tc.iterations << " iterations on " << data.size() << " windows, alpha "
      << format_double(res.params.alpha) << '\n';
  return res.params;
}

int cmd_train(const Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg;
  const Domain domain = parse_domain(cfg.str("run.domain"));
  const Mode mode = parse_mode(cfg.str("run.mode"));
  const auto k = cfg.count("vocab.merges");
  auto params = load_params(cfg, domain);
  score_params(cfg, params.alpha);
  const auto in = load_input(cfg, domain);

  Artifacts art;
  art.dir = output_dir(ctx);
  std::filesystem::create_directories(art.dir);

  if (mode == Mode::full) run_stage1(ctx, in, params, art, out);
  if (mode != Mode::greedy) params = run_stage2(ctx, in, params, art, out);

  const auto seqs = scored_corpus(in, params, cfg);
  const auto res = greedy_build(seqs, in.alphabet, domain, score_params(cfg, params.alpha), k);
  std::ostringstream vocab;
  write_vocabulary(vocab, res.vocab);
  art.write("vocab.txt", vocab.str());
  art.write("params.txt", serialize_params(params));

  std::string index;
  for (const auto& [name, crc] : art.files) index += crc + "  " + name + "\n";
  write_file(art.dir / "artifacts.txt", index);

  out << "greedy: " << res.executed << " of " << res.requested << " merges";
  if (res.stopped_early) out << " (stopped early: no pairs left)";
  out << ", vocabulary size " << res.vocab.size() << '\n';
  out << "wrote " << (art.dir / "vocab.txt").string() << '\n';
  return kExitOk;
}

int cmd_encode(const Context& ctx, std::ostream& out) {
  const auto vocab = load_vocab(ctx);
  const auto in = load_input(ctx.cfg, vocab.domain);
  if (in.alphabet != vocab.base_size)
    throw ConfigError("corpus alphabet (" + std::to_string(in.alphabet) + ") does not match vocabulary base size (" +
                      std::to_string(vocab.base_size) + ")");
  const Tokenizer tok(vocab);
  std::string text;
  for (const auto& s : in.raw) {
    text += s.source_id;
    text += '\t';
    const auto ids = tok.encode(s);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) text += ' ';
      text += std::to_string(ids[i]);
    }
    text += '\n';
  }
  emit(ctx, text, out);
  return kExitOk;
}

int cmd_decode(const Context& ctx, std::ostream& out) {
  const auto vocab = load_vocab(ctx);
  const Tokenizer tok(vocab);
  const auto text = read_file(ctx.cfg.path("input.tokens"));
  std::istringstream lines(text);
  std::string line, result;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("token file line " + std::to_string(line_no) + ": missing tab");
    std::vector<TokenId> ids;
    std::istringstream fields(line.substr(tab + 1));
    std::string f;
    while (fields >> f) {
      TokenId id = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), id);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw ParseError("token file line " + std::to_string(line_no) + ": bad token id '" + f + "'");
      ids.push_back(id);
    }
    const auto symbols = tok.decode(ids);
    result += line.substr(0, tab);
    result += '\t';
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (vocab.domain == Domain::genomics) {
        result += genomics::kSymbols[symbols[i]];
      } else {
        if (i) result += ' ';
        result += std::to_string(symbols[i]);
      }
    }
    result += '\n';
  }
  emit(ctx, result, out);
  return kExitOk;
}

int cmd_inspect(const Context& ctx, std::ostream& out) {
  const auto vocab = load_vocab(ctx);
  // Without params.path, show the checkpoint written next to the vocabulary.
  Config cfg = ctx.cfg;
  const auto sibling = vocab_path(ctx).parent_path() / "params.txt";
  if (!cfg.has("params.path") && std::filesystem::exists(sibling)) cfg.set("params.path", sibling.string());
  const auto params = load_params(cfg, vocab.domain);
  const auto exp = vocab.expansions();

  double mean_len = 0.0;
  std::size_t max_len = 0;
  for (const auto& e : exp) {
    mean_len += static_cast<double>(e.size());
    max_len = std::max(max_len, e.size());
  }
  mean_len /= static_cast<double>(std::max<std::size_t>(exp.size(), 1));

  std::ostringstream s;
  s << "vocabulary " << vocab_path(ctx).string() << '\n';
  s << "domain " << to_string(vocab.domain) << '\n';
  s << "base_size " << vocab.base_size << '\n';
  s << "merges " << vocab.merges.size() << '\n';
  s << "size " << vocab.size() << '\n';
  s << "alpha " << format_double(vocab.alpha) << '\n';
  s << "mean_token_length " << format_double(mean_len) << '\n';
  s << "max_token_length " << max_len << '\n';
  if (!vocab.merges.empty()) {
    std::array<std::size_t, 10> hist{};
    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (const auto& m : vocab.merges) {
      lo = std::min(lo, m.quality);
      hi = std::max(hi, m.quality);
      mean += m.quality;
      ++hist[std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, m.quality) * 10.0))];
    }
    mean /= static_cast<double>(vocab.merges.size());
    s << "merge_quality min " << format_double(lo) << " mean " << format_double(mean) << " max "
      << format_double(hi) << '\n';
    s << "merge_quality_histogram";
    for (auto c : hist) s << ' ' << c;
    s << '\n';
  }
  s << "theta_adapt (" << (cfg.has("params.path") ? cfg.path("params.path").string() : "defaults") << ")\n";
  const auto text = serialize_params(params);
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind("checksum", 0) != 0) s << "  " << line << '\n';
  emit(ctx, s.str(), out);
  return kExitOk;
}

int cmd_eval(const Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg;
  const auto vocab = load_vocab(ctx);
  const auto params = load_params(cfg, vocab.domain);
  const auto in = load_input(cfg, vocab.domain);
  if (in.alphabet != vocab.base_size)
    throw ConfigError("corpus alphabet does not match vocabulary base size");
  ObjectiveWeights w;
  w.lm = cfg.real("eval.lm");
  w.comp = cfg.real("eval.comp");
  w.qual = cfg.real("eval.qual");
  w.alpha = cfg.real("eval.alpha");
  w.eps_q = vocab.eps_q;
  const auto seqs = scored_corpus(in, params, cfg);
  const auto seg = replay(vocab, seqs);
  const auto t = objective_terms(vocab, seg, w);
  std::ostringstream s;
  s << "objective " << format_double(t.value) << '\n';
  s << "log_likelihood " << format_double(t.log_likelihood) << '\n';
  s << "complexity " << format_double(t.complexity) << '\n';
  s << "quality " << format_double(t.quality) << '\n';
  emit(ctx, s.str(), out);
  return kExitOk;
}

int cmd_sample(const Context& ctx, std::ostream& out) {
  const auto& cfg = ctx.cfg;
  const Domain domain = parse_domain(cfg.str("run.domain"));
  const auto params = load_params(cfg, domain);
  const auto in = load_input(cfg, domain);
  const double ratio = cfg.real("sample.ratio");
  const double eps_base = cfg.real("sample.eps_base");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("sample.ratio must be in (0, 1]");
  if (!(eps_base > 0.0)) throw ConfigError("sample.eps_base must be > 0");

  const auto seqs = scored_corpus(in, params, cfg);
  std::vector<std::vector<double>> qualities;
  for (const auto& s : seqs) qualities.push_back(s.qualities);
  const auto picked = stratified_sample(qualities, ratio, eps_base, derive_seed(ctx.seed, "sampler"));

  Manifest m;
  m.seed = ctx.seed;
  m.ratio = ratio;
  m.eps_base = eps_base;
  m.population = seqs.size();
  for (auto i : picked) m.ids.push_back(seqs[i].source_id);
  emit(ctx, serialize_manifest(m), out);
  return kExitOk;
}

}  // namespace

int run_command(std::string_view command, const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto ctx = load_context(opts);
    if (command == "train") return cmd_train(ctx, out);
    if (command == "encode") return cmd_encode(ctx, out);
    if (command == "decode") return cmd_decode(ctx, out);
    if (command == "inspect") return cmd_inspect(ctx, out);
    if (command == "eval") return cmd_eval(ctx, out);
    if (command == "sample") return cmd_sample(ctx, out);
    err << "qatok: unknown command '" << command << "'\n";
    return kExitInvalid;
  } catch (const ConfigError& e) {
    err << "qatok: invalid config: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const MissingInputError& e) {
    err << "qatok: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DivergenceError& e) {
    err << "qatok: training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "qatok: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace qatok::cli
