#include "config.hpp"

#include "qatok/common.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace qatok::cli {

namespace {

constexpr ConfigKey kKeys[] = {
    {"run.domain", "", "genomics | finance"},
    {"run.mode", "greedy", "greedy | greedy+stage2 | full"},
    {"run.seed", "0", "root seed; --seed overrides"},
    {"input.corpus", "", "comma-separated FASTQ files (genomics) or LOB CSV files (finance)"},
    {"input.tokens", "", "encoded token file read by decode"},
    {"output.dir", ".", "train artifact directory; --out overrides"},
    {"vocab.path", "", "vocabulary for encode/decode/inspect/eval; empty means <output.dir>/vocab.txt"},
    {"vocab.merges", "", "target merge count K"},
    {"params.path", "", "theta_adapt checkpoint; empty uses the domain defaults"},
    {"params.alpha", "", "override of the quality exponent alpha"},
    {"params.beta_pos", "", "override of the positional decay rate"},
    {"params.beta_vol", "", "override of the volatility penalty"},
    {"merge.eps_f", "1e-8", "frequency floor in the merge score"},
    {"merge.eps_q", "1e-8", "quality floor in the merge score"},
    {"quality.eps_len", "1e-6", "length floor in the positional decay"},
    {"lob.price_bins", "10", "price-move bins"},
    {"lob.price_range", "5", "price bins cover [-range, range] ticks"},
    {"lob.spread_bins", "10", "spread-move bins"},
    {"lob.spread_range", "5", "spread bins cover [-range, range] ticks"},
    {"lob.imbalance_bins", "5", "volume-imbalance bins over [-1, 1]"},
    {"lob.time_bins", "5", "log-spaced duration bins"},
    {"lob.time_min", "0.001", "shortest binned duration (s)"},
    {"lob.time_max", "60", "longest binned duration (s)"},
    {"stage1.episodes", "50", "PPO episodes"},
    {"stage1.horizon", "20", "merges per episode"},
    {"stage1.k_pq", "50", "candidate queue size"},
    {"stage1.clip", "0.2", "PPO clip range"},
    {"stage1.gamma", "0.99", "discount"},
    {"stage1.gae_lambda", "0.95", "GAE lambda"},
    {"stage1.epochs", "4", "optimisation epochs per update"},
    {"stage1.entropy_coef", "0.01", "entropy bonus"},
    {"stage1.value_coef", "0.5", "value loss weight"},
    {"stage1.policy_lr", "3e-4", "policy Adam step"},
    {"stage1.value_lr", "1e-3", "value Adam step"},
    {"stage1.eps_start", "0.5", "initial exploration rate"},
    {"stage1.eps_end", "0.05", "final exploration rate"},
    {"stage2.iterations", "100", "gradient steps"},
    {"stage2.eta0", "0.5", "initial step size (decays as 1/sqrt(t))"},
    {"stage2.tau_init", "1", "initial Gumbel-Softmax temperature"},
    {"stage2.tau_final", "0.1", "temperature floor"},
    {"stage2.beta_anneal", "3", "temperature decay rate"},
    {"stage2.k_candidates", "5", "relaxed candidates per step"},
    {"stage2.steps", "3", "simulated merges per window"},
    {"stage2.window", "32", "window length in atomic elements"},
    {"stage2.max_windows", "64", "windows drawn from the corpus"},
    {"stage2.threshold", "0.5", "label threshold on mean window quality"},
    {"stage2.kappa", "10", "sharpness of the task-loss sigmoid"},
    {"stage2.batch_norm_rewards", "false", "standardize rewards across candidates"},
    {"eval.lm", "1", "log-likelihood weight"},
    {"eval.comp", "0", "complexity weight"},
    {"eval.qual", "1", "quality weight"},
    {"eval.alpha", "1", "exponent of g(x) = (x + eps)^alpha"},
    {"sample.ratio", "0.1", "fraction of sequences kept"},
    {"sample.eps_base", "1e-6", "weight floor added to Var(q)"},
};

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : kKeys)
    if (k.name == name) return &k;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::span<const ConfigKey> config_keys() { return kKeys; }

std::string config_help() {
  std::ostringstream out;
  out << "Config keys (section.key = value):\n";
  for (const auto& k : kKeys) {
    out << "  " << k.name;
    for (std::size_t i = k.name.size(); i < 26; ++i) out << ' ';
    out << (k.fallback.empty() ? std::string("(no default)") : "[" + std::string(k.fallback) + "]") << "  "
        << k.help << '\n';
  }
  return out.str();
}

Config Config::parse(std::string_view text, std::string_view origin) {
  Config c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = std::string(origin) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'section.key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!find_key(key)) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    if (c.values_.contains(key)) throw ConfigError(where + ": duplicate key '" + std::string(key) + "'");
    c.values_.emplace(std::string(key), std::string(value));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto c = parse(buf.str(), path.string());
  c.base_ = path.parent_path();
  return c;
}

bool Config::has(std::string_view key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

void Config::set(std::string_view key, std::string value) {
  if (!find_key(key)) throw ConfigError("unknown key '" + std::string(key) + "'");
  values_.insert_or_assign(std::string(key), std::move(value));
}

std::string Config::str(std::string_view key) const {
  const auto* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + std::string(key) + "'");
  if (has(key)) return values_.find(key)->second;
  if (k->fallback.empty()) throw ConfigError("missing required key '" + std::string(key) + "'");
  return std::string(k->fallback);
}

double Config::real(std::string_view key) const {
  const auto s = str(key);
  try {
    return parse_double(s);
  } catch (const std::exception&) {
    throw ConfigError("key '" + std::string(key) + "': '" + s + "' is not a number");
  }
}

std::uint64_t Config::u64(std::string_view key) const {
  const auto s = str(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + std::string(key) + "': '" + s + "' is not a non-negative integer");
  return v;
}

std::size_t Config::count(std::string_view key) const { return static_cast<std::size_t>(u64(key)); }

bool Config::flag(std::string_view key) const {
  const auto s = str(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("key '" + std::string(key) + "': '" + s + "' is not a boolean");
}

std::filesystem::path Config::path(std::string_view key) const {
  std::filesystem::path p = str(key);
  return p.is_absolute() ? p : base_ / p;
}

}  // namespace qatok::cli
