#include "qatok/mlp.hpp"

#include "qatok/common.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <random>

namespace qatok {

Mlp::Mlp(std::vector<std::size_t> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (auto s : sizes_)
    if (s == 0) throw std::invalid_argument("Mlp layer sizes must be positive");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < in * out; ++i) params_.push_back(u(rng));
    params_.insert(params_.end(), out, 0.0);
  }
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache* cache) const {
  if (x.size() != input_size()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  std::vector<double> a(x.begin(), x.end());
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(a);
  }
  std::size_t off = 0;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + off;
    const double* b = w + in * out;
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = (l + 1 < layers) ? std::max(0.0, s) : s;
    }
    off += in * out + out;
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

void Mlp::backward(const Cache& cache, std::span<const double> dout, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: gradient size mismatch");
  if (dout.size() != output_size()) throw std::invalid_argument("Mlp::backward: output gradient size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offsets[l] = off;
    off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  std::vector<double> delta(dout.begin(), dout.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const auto& a_in = cache.activations[l];
    const double* w = params_.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + in * out;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      const double* row = w + o * in;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * a_in[i];
        prev[i] += d * row[i];
      }
    }
    if (l > 0) {
      // ReLU derivative, evaluated on the post-activation value.
      for (std::size_t i = 0; i < in; ++i)
        if (a_in[i] <= 0.0) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
}

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'K', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& buf, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <class T>
T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw ParseError("policy checkpoint truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_mlp(std::ostream& out, const Mlp& net) {
  std::string buf(kMagic, 4);
  put<std::uint32_t>(buf, kVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(net.sizes().size()));
  for (auto s : net.sizes()) put<std::uint64_t>(buf, s);
  for (double p : net.params()) put<double>(buf, p);
  buf += crc32_hex(buf);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("failed to write policy checkpoint");
}

Mlp load_mlp(std::istream& in) {
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 4) != 0) throw ParseError("not a policy checkpoint");
  std::size_t pos = 4;
  if (take<std::uint32_t>(buf, pos) != kVersion) throw ParseError("unsupported policy checkpoint version");
  const auto n = take<std::uint32_t>(buf, pos);
  if (n < 2 || n > 64) throw ParseError("policy checkpoint: bad layer count");
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < n; ++i) sizes.push_back(take<std::uint64_t>(buf, pos));
  Mlp net(sizes, 0);
  for (double& p : net.params()) p = take<double>(buf, pos);
  if (buf.size() - pos < 8) throw ParseError("policy checkpoint truncated");
  if (buf.size() - pos > 8) throw ParseError("policy checkpoint: trailing bytes");
  if (buf.compare(pos, 8, crc32_hex(std::string_view(buf.data(), pos))) != 0)
    throw ParseError("policy checkpoint: checksum mismatch");
  return net;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam: size mismatch");
  ++t_;
  if (lr_ == 0.0) return;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::vector<double> masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw std::invalid_argument("masked_softmax: size mismatch");
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) m = std::max(m, logits[i]);
  std::vector<double> p(logits.size(), 0.0);
  if (!std::isfinite(m)) return p;
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) z += (p[i] = std::exp(logits[i] - m));
  for (double& x : p) x /= z;
  return p;
}

}  // namespace qatok
