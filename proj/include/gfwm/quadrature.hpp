// Gauss-Lobatto-Legendre quadrature rules on [-1,1] plus the coordinate maps
// used to integrate wall-normal profiles over [0, h_wm] without any grid.

#ifndef GFWM_QUADRATURE_HPP
#define GFWM_QUADRATURE_HPP

#include <cstdint>
#include <memory>
#include <vector>

namespace gfwm::quad {

// A Q-point rule is exact for polynomials of degree <= 2Q-3. Endpoints are
// always included, which is what makes the wall value and the matching-height
// value collocation points.
struct GllRule {
  int q = 0;
  std::vector<double> nodes;    // ascending, nodes.front() == -1, nodes.back() == +1
  std::vector<double> weights;  // all positive, sum == 2
};

// Wall-normal images of [-1,1] onto [0, h]:
//   Linear    y = h/2 (1 + xi)
//   Clustered y = h (exp(xi+1) - 1)/(e^2 - 1), denser near the wall
enum class DomainMap { Linear, Clustered };

struct MappedRule {
  int q = 0;
  DomainMap map = DomainMap::Linear;
  double h = 0.0;
  std::vector<double> y;        // physical nodes, y.front() == 0, y.back() == h
  std::vector<double> w;        // jacobian-scaled weights, sum == h
};

// Builds the Q-point rule. Interior nodes are the roots of L'_{Q-1}, found by
// Newton iteration from Chebyshev-Lobatto seeds; weights are
// 2 / (Q (Q-1) L_{Q-1}(x)^2). Throws std::invalid_argument for q < 2.
GllRule build_gll_rule(int q);

// Cached, immutable rules keyed by q. Safe for concurrent readers.
std::shared_ptr<const GllRule> gll_rule_cached(int q);

// Maps a rule onto [0, h]. Throws std::invalid_argument for h <= 0.
MappedRule map_to_physical(const GllRule& rule, DomainMap map, double h);

// Legendre polynomial L_n and derivative at x, by the three-term recurrence.
double legendre(int n, double x);
double legendre_derivative(int n, double x);

}  // namespace gfwm::quad

#endif
