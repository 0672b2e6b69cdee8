#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace qatok {

/// Dense feed-forward network with ReLU hidden layers and a linear output.
/// Parameters live in one flat buffer: per layer W (out x in, row-major)
/// followed by b (out).
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {input, hidden..., output}; He-uniform init from `seed`, zero biases.
  Mlp(std::vector<std::size_t> sizes, std::uint64_t seed);

  struct Cache {
    /// activations[0] is the input; activations[l] the post-ReLU output of layer l.
    std::vector<std::vector<double>> activations;
  };

  std::vector<double> forward(std::span<const double> x, Cache* cache = nullptr) const;

  /// Adds dLoss/dparams to `grad` given dLoss/doutput for the cached pass.
  void backward(const Cache& cache, std::span<const double> dout, std::span<double> grad) const;

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t param_count() const noexcept { return params_.size(); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
};

/// Versioned binary checkpoint: magic "QTKM", version, layer sizes, row-major
/// parameters (little-endian IEEE doubles) and the CRC-32 of all preceding bytes as 8
/// hex digits.
void save_mlp(std::ostream& out, const Mlp& net);
Mlp load_mlp(std::istream& in);

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  double lr() const noexcept { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// Softmax over entries with mask != 0; masked entries get probability 0.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

}  // namespace qatok
