#include "gfwm/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace gfwm::quad {

namespace {

// L_n(x) and its first two derivatives in one pass. The second derivative
// comes from the Legendre equation and is only needed for |x| < 1, which is
// where the Newton iteration lives.
struct LegEval {
  double p;    // L_n
  double dp;   // L_n'
  double ddp;  // L_n''
};

LegEval legendre_all(const int n, const double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {p0, 0.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double omx2 = 1.0 - x * x;
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  const double ddp = (2.0 * x * dp - n * (n + 1.0) * p1) / omx2;
  return {p1, dp, ddp};
}

}  // namespace

double legendre(const int n, const double x) {
  if (n < 0) throw std::invalid_argument("legendre: n < 0");
  double p0 = 1.0, p1 = x;
  if (n == 0) return p0;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double legendre_derivative(const int n, const double x) {
  if (n < 0) throw std::invalid_argument("legendre_derivative: n < 0");
  if (n == 0) return 0.0;
  if (std::abs(x) == 1.0) {
    // L_n'(1) = n(n+1)/2, L_n'(-1) = (-1)^{n+1} n(n+1)/2
    const double sgn = (x > 0.0 || n % 2 == 1) ? 1.0 : -1.0;
    return sgn * 0.5 * n * (n + 1.0);
  }
  return legendre_all(n, x).dp;
}

GllRule build_gll_rule(const int q) {
  if (q < 2) throw std::invalid_argument("build_gll_rule: need q >= 2");

  GllRule rule;
  rule.q = q;
  rule.nodes.resize(q);
  rule.weights.resize(q);

  const int n = q - 1;  // Legendre order whose derivative roots we need
  rule.nodes[0] = -1.0;
  rule.nodes[n] = 1.0;

  // Interior nodes: Newton on L'_n from Chebyshev-Lobatto seeds. Symmetry
  // lets us solve the lower half and mirror it.
  const double pi = std::acos(-1.0);
  for (int i = 1; i <= n / 2; ++i) {
    double x = -std::cos(pi * i / n);
    for (int it = 0; it < 100; ++it) {
      const LegEval e = legendre_all(n, x);
      const double dx = -e.dp / e.ddp;
      x += dx;
      if (std::abs(dx) < 1.0e-14) break;
    }
    rule.nodes[i] = x;
    rule.nodes[n - i] = -x;
  }
  if (n % 2 == 0) rule.nodes[n / 2] = 0.0;

  for (int i = 0; i < q; ++i) {
    const double l = legendre(n, rule.nodes[i]);
    rule.weights[i] = 2.0 / (q * n * l * l);
  }
  return rule;
}

std::shared_ptr<const GllRule> gll_rule_cached(const int q) {
  static std::mutex mtx;
  static std::map<int, std::shared_ptr<const GllRule>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const GllRule>(build_gll_rule(q));
  cache.emplace(q, rule);
  return rule;
}

MappedRule map_to_physical(const GllRule& rule, const DomainMap map, const double h) {
  if (!(h > 0.0)) throw std::invalid_argument("map_to_physical: need h > 0");

  MappedRule out;
  out.q = rule.q;
  out.map = map;
  out.h = h;
  out.y.resize(rule.q);
  out.w.resize(rule.q);

  if (map == DomainMap::Linear) {
    for (int i = 0; i < rule.q; ++i) {
      out.y[i] = 0.5 * h * (1.0 + rule.nodes[i]);
      out.w[i] = 0.5 * h * rule.weights[i];
    }
  } else {
    const double denom = std::exp(2.0) - 1.0;
    for (int i = 0; i < rule.q; ++i) {
      const double e = std::exp(rule.nodes[i] + 1.0);
      out.y[i] = h * (e - 1.0) / denom;
      out.w[i] = h / denom * rule.weights[i] * e;
    }
  }
  // pin the endpoints so wall and matching height are exact collocation points
  out.y.front() = 0.0;
  out.y.back() = h;
  return out;
}

}  // namespace gfwm::quad
