#include "pumrom/quadrature.hpp"

#include <cmath>

#include "pumrom/errors.hpp"

namespace pumrom {

namespace {

// Legendre polynomial P_n and derivative at x by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n / 2 + n % 2; ++i) {
    // Chebyshev initial guess, then Newton on P_n.
    double x = -std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto [p, dp] = legendre(n, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = x;
    rule.weights[i] = w;
    rule.points[n - 1 - i] = -x;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

Eigen::VectorXd gll_nodes(int p) {
  if (p < 1) throw ConfigError("gll_nodes: degree must be >= 1");
  const int n = p + 1;
  Eigen::VectorXd x(n);
  x[0] = -1.0;
  x[n - 1] = 1.0;
  // Interior nodes are the roots of P'_p; Newton with second derivative from
  // the Legendre ODE (1-x^2)P'' = 2xP' - p(p+1)P.
  for (int i = 1; i <= (n - 1) / 2; ++i) {
    double t = -std::cos(M_PI * i / p);
    for (int it = 0; it < 100; ++it) {
      auto [pv, dp] = legendre(p, t);
      const double d2p = (2.0 * t * dp - p * (p + 1) * pv) / (1.0 - t * t);
      const double dt = dp / d2p;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    x[n - 1 - i] = -t;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  std::sort(x.data(), x.data() + n);
  return x;
}

LagrangeTable tabulate_lagrange(const Eigen::VectorXd& nodes,
                                const Eigen::VectorXd& points) {
  const int n = static_cast<int>(nodes.size());
  const int m = static_cast<int>(points.size());
  // Barycentric weights.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (k != j) w[j] /= (nodes[j] - nodes[k]);

  LagrangeTable tab;
  tab.vals.setZero(m, n);
  tab.derivs.setZero(m, n);
  for (int q = 0; q < m; ++q) {
    const double x = points[q];
    int hit = -1;
    for (int j = 0; j < n; ++j)
      if (x == nodes[j]) hit = j;
    if (hit >= 0) {
      tab.vals(q, hit) = 1.0;
    } else {
      double denom = 0.0;
      for (int j = 0; j < n; ++j) denom += w[j] / (x - nodes[j]);
      for (int j = 0; j < n; ++j) tab.vals(q, j) = (w[j] / (x - nodes[j])) / denom;
    }
    // Exact product-rule expansion; stable at and away from the nodes.
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        double prod = 1.0;
        for (int l = 0; l < n; ++l) {
          if (l == j || l == k) continue;
          prod *= (x - nodes[l]) / (nodes[j] - nodes[l]);
        }
        s += prod / (nodes[j] - nodes[k]);
      }
      tab.derivs(q, j) = s;
    }
  }
  return tab;
}

}  // namespace pumrom
