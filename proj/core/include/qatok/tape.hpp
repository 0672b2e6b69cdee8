#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace qatok {

class Tape;

/// Handle to a scalar recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  double value() const;
};

/// Minimal reverse-mode autodiff: every node stores its value and the local
/// partial derivative with respect to each parent.
class Tape {
 public:
  Var variable(double v) { return push(v, {}); }
  Var constant(double v) { return push(v, {}); }

  double value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Node with explicit parents and local partials.
  Var push(double value, std::vector<std::pair<std::size_t, double>> parents);

  /// Adjoint of every node with respect to `output`.
  std::vector<double> gradient(Var output) const;

  /// y_i = softmax((l_i + g_i) / tau), recorded as one fused block whose
  /// partials are the analytic Jacobian (1/tau) y_i (delta_ij - y_j).
  std::vector<Var> gumbel_softmax(std::span<const Var> logits, std::span<const double> noise, double tau);

 private:
  struct Node {
    double value;
    std::vector<std::pair<std::size_t, double>> parents;
  };
  std::vector<Node> nodes_;
};

Var operator+(Var a, Var b);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator-(Var a);
Var operator*(Var a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, Var b);
Var operator/(Var a, double b);

Var exp(Var a);
Var log(Var a);
/// a^p for a > 0 with a differentiable exponent.
Var pow(Var a, Var p);
Var sigmoid(Var a);
Var max0(Var a);
Var sum(std::span<const Var> xs);

/// Plain softmax of tape variables (tau = 1, no noise).
std::vector<Var> softmax(std::span<const Var> logits);

}  // namespace qatok
