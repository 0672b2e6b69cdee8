#include "qatok/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qatok {

double Var::value() const { return tape->value(*this); }

Var Tape::push(double value, std::vector<std::pair<std::size_t, double>> parents) {
  nodes_.push_back({value, std::move(parents)});
  return {this, nodes_.size() - 1};
}

std::vector<double> Tape::gradient(Var output) const {
  if (output.tape != this) throw std::invalid_argument("gradient: variable belongs to another tape");
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[output.id] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0) continue;
    for (const auto& [p, d] : nodes_[i].parents) adj[p] += a * d;
  }
  return adj;
}

std::vector<Var> Tape::gumbel_softmax(std::span<const Var> logits, std::span<const double> noise, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be > 0");
  if (logits.size() != noise.size()) throw std::invalid_argument("gumbel_softmax: noise size mismatch");
  const std::size_t k = logits.size();
  std::vector<double> z(k);
  for (std::size_t i = 0; i < k; ++i) z[i] = (value(logits[i]) + noise[i]) / tau;
  const double m = k ? *std::max_element(z.begin(), z.end()) : 0.0;
  double total = 0.0;
  for (double& x : z) total += (x = std::exp(x - m));
  for (double& x : z) x /= total;

  std::vector<Var> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::pair<std::size_t, double>> parents;
    parents.reserve(k);
    for (std::size_t j = 0; j < k; ++j)
      parents.emplace_back(logits[j].id, z[i] * ((i == j ? 1.0 : 0.0) - z[j]) / tau);
    out.push_back(push(z[i], std::move(parents)));
  }
  return out;
}

namespace {

Tape* same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("tape mismatch");
  return a.tape;
}

}  // namespace

Var operator+(Var a, Var b) { return same_tape(a, b)->push(a.value() + b.value(), {{a.id, 1.0}, {b.id, 1.0}}); }
Var operator+(Var a, double b) { return a.tape->push(a.value() + b, {{a.id, 1.0}}); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, Var b) { return same_tape(a, b)->push(a.value() - b.value(), {{a.id, 1.0}, {b.id, -1.0}}); }
Var operator-(Var a, double b) { return a + (-b); }
Var operator-(double a, Var b) { return b.tape->push(a - b.value(), {{b.id, -1.0}}); }
Var operator-(Var a) { return a.tape->push(-a.value(), {{a.id, -1.0}}); }
Var operator*(Var a, Var b) {
  return same_tape(a, b)->push(a.value() * b.value(), {{a.id, b.value()}, {b.id, a.value()}});
}
Var operator*(Var a, double b) { return a.tape->push(a.value() * b, {{a.id, b}}); }
Var operator*(double a, Var b) { return b * a; }
Var operator/(Var a, Var b) {
  const double bv = b.value();
  return same_tape(a, b)->push(a.value() / bv, {{a.id, 1.0 / bv}, {b.id, -a.value() / (bv * bv)}});
}
Var operator/(Var a, double b) { return a * (1.0 / b); }

Var exp(Var a) {
  const double v = std::exp(a.value());
  return a.tape->push(v, {{a.id, v}});
}

Var log(Var a) { return a.tape->push(std::log(a.value()), {{a.id, 1.0 / a.value()}}); }

Var pow(Var a, Var p) {
  const double av = a.value(), pv = p.value();
  const double v = std::pow(av, pv);
  return same_tape(a, p)->push(v, {{a.id, pv * std::pow(av, pv - 1.0)}, {p.id, v * std::log(av)}});
}

Var sigmoid(Var a) {
  const double x = a.value();
  const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return a.tape->push(s, {{a.id, s * (1.0 - s)}});
}

Var max0(Var a) {
  const double x = a.value();
  return a.tape->push(std::max(0.0, x), {{a.id, x > 0.0 ? 1.0 : 0.0}});
}

Var sum(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("sum of no variables");
  std::vector<std::pair<std::size_t, double>> parents;
  parents.reserve(xs.size());
  double v = 0.0;
  for (const Var& x : xs) {
    v += x.value();
    parents.emplace_back(x.id, 1.0);
  }
  return xs.front().tape->push(v, std::move(parents));
}

std::vector<Var> softmax(std::span<const Var> logits) {
  if (logits.empty()) return {};
  std::vector<double> zero(logits.size(), 0.0);
  return logits.front().tape->gumbel_softmax(logits, zero, 1.0);
}

}  // namespace qatok
