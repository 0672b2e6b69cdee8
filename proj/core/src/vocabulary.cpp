#include "qatok/vocabulary.hpp"

#include <charconv>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qatok {

std::uint32_t Vocabulary::token_length(TokenId t) const {
  if (t < base_size) return 1;
  if (t >= size()) throw std::out_of_range("token id " + std::to_string(t) + " outside vocabulary");
  return token_lengths()[t];
}

std::vector<std::uint32_t> Vocabulary::token_lengths() const {
  std::vector<std::uint32_t> len(size(), 1);
  for (const auto& m : merges) len[m.new_id] = len[m.left] + len[m.right];
  return len;
}

std::vector<std::vector<SymbolId>> Vocabulary::expansions() const {
  std::vector<std::vector<SymbolId>> exp(size());
  for (std::size_t s = 0; s < base_size; ++s) exp[s] = {static_cast<SymbolId>(s)};
  for (const auto& m : merges) {
    auto& e = exp[m.new_id];
    e = exp[m.left];
    e.insert(e.end(), exp[m.right].begin(), exp[m.right].end());
  }
  return exp;
}

void Vocabulary::validate() const {
  if (base_size == 0) throw std::invalid_argument("vocabulary: empty base alphabet");
  if (!(alpha >= 0.0)) throw std::invalid_argument("vocabulary: alpha must be >= 0");
  if (!(eps_f > 0.0) || !(eps_q > 0.0)) throw std::invalid_argument("vocabulary: epsilons must be > 0");
  for (std::size_t i = 0; i < merges.size(); ++i) {
    const auto& m = merges[i];
    if (m.new_id != base_size + i)
      throw std::invalid_argument("vocabulary: merge " + std::to_string(i) + " has non-contiguous id");
    if (m.left >= m.new_id || m.right >= m.new_id)
      throw std::invalid_argument("vocabulary: merge " + std::to_string(i) + " references a later token");
    if (!(m.quality >= 0.0 && m.quality <= 1.0))
      throw std::invalid_argument("vocabulary: merge " + std::to_string(i) + " quality outside [0,1]");
  }
}

std::string serialize(const Vocabulary& v) {
  v.validate();
  std::string body = "qatok-vocab v1 base=" + std::to_string(v.base_size) +
                     " merges=" + std::to_string(v.merges.size()) + " alpha=" + format_double(v.alpha) +
                     " domain=" + std::string(to_string(v.domain)) + " eps_f=" + format_double(v.eps_f) +
                     " eps_q=" + format_double(v.eps_q) + "\n";
  for (const auto& m : v.merges) {
    body += std::to_string(m.left) + ' ' + std::to_string(m.right) + ' ' + std::to_string(m.new_id) + ' ' +
            format_double(m.quality) + '\n';
  }
  return body + "checksum " + crc32_hex(body) + "\n";
}

void write_vocabulary(std::ostream& out, const Vocabulary& v) {
  out << serialize(v);
  if (!out) throw Error("failed to write vocabulary");
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  return {std::istream_iterator<std::string>(ss), std::istream_iterator<std::string>()};
}

template <class T>
T parse_uint(const std::string& s, const std::string& what, long record) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("vocabulary: invalid " + what + " '" + s + "'", record);
  return v;
}

}  // namespace

Vocabulary parse_vocabulary(const std::string& text) {
  if (text.empty() || text.back() != '\n') throw ParseError("vocabulary: file must end with a newline");
  const auto last_start = text.rfind('\n', text.size() - 2);
  const std::size_t body_len = last_start == std::string::npos ? 0 : last_start + 1;
  const std::string body = text.substr(0, body_len);
  const std::string trailer = text.substr(body_len, text.size() - body_len - 1);
  const auto tr = split_ws(trailer);
  if (tr.size() != 2 || tr[0] != "checksum") throw ParseError("vocabulary: missing checksum line");
  if (tr[1] != crc32_hex(body)) throw ParseError("vocabulary: checksum mismatch");

  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("vocabulary: missing header");
  const auto head = split_ws(line);
  if (head.size() != 8 || head[0] != "qatok-vocab" || head[1] != "v1")
    throw ParseError("vocabulary: unsupported header '" + line + "'");

  Vocabulary v;
  std::size_t n_merges = 0;
  const char* keys[] = {"base", "merges", "alpha", "domain", "eps_f", "eps_q"};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& kv = head[i + 2];
    const std::string prefix = std::string(keys[i]) + "=";
    if (kv.rfind(prefix, 0) != 0) throw ParseError("vocabulary: expected header field " + prefix);
    const std::string val = kv.substr(prefix.size());
    switch (i) {
      case 0: v.base_size = parse_uint<std::size_t>(val, "base size", -1); break;
      case 1: n_merges = parse_uint<std::size_t>(val, "merge count", -1); break;
      case 2: v.alpha = parse_double(val); break;
      case 3:
        try {
          v.domain = parse_domain(val);
        } catch (const ConfigError& e) {
          throw ParseError(std::string("vocabulary: ") + e.what());
        }
        break;
      case 4: v.eps_f = parse_double(val); break;
      case 5: v.eps_q = parse_double(val); break;
    }
  }

  long record = 0;
  while (std::getline(in, line)) {
    const auto f = split_ws(line);
    if (f.size() != 4) throw ParseError("vocabulary: merge line needs 4 fields", record);
    MergeRule m;
    m.left = parse_uint<TokenId>(f[0], "token id", record);
    m.right = parse_uint<TokenId>(f[1], "token id", record);
    m.new_id = parse_uint<TokenId>(f[2], "token id", record);
    try {
      m.quality = parse_double(f[3]);
    } catch (const ParseError& e) {
      throw ParseError(std::string("vocabulary: ") + e.what(), record);
    }
    v.merges.push_back(m);
    ++record;
  }
  if (v.merges.size() != n_merges) throw ParseError("vocabulary: header merge count disagrees with body");
  try {
    v.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  if (serialize(v) != text) throw ParseError("vocabulary: non-canonical encoding");
  return v;
}

Vocabulary read_vocabulary(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_vocabulary(text);
}

}  // namespace qatok
