#include "qatok/common.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <thread>

namespace qatok {

std::string_view to_string(Domain d) {
  return d == Domain::genomics ? "genomics" : "finance";
}

Domain parse_domain(std::string_view name) {
  if (name == "genomics") return Domain::genomics;
  if (name == "finance") return Domain::finance;
  throw ConfigError("unknown domain '" + std::string(name) + "' (expected genomics|finance)");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(root ^ splitmix64(h));
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QATOK_THREADS")) {
    unsigned cap = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), cap);
    if (ec == std::errc() && cap > 0) n = std::min(n, cap);
  }
  return n;
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string crc32_hex(std::string_view bytes) {
  char buf[9];
  auto v = crc32_of(bytes);
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 7; i >= 0; --i) {
    buf[i] = digits[v & 0xF];
    v >>= 4;
  }
  buf[8] = '\0';
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format double");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("invalid number '" + std::string(text) + "'");
  return v;
}

}  // namespace qatok
