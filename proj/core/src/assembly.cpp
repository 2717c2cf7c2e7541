#include "pumrom/assembly.hpp"

#include <cmath>
#include <map>

#include <Eigen/SparseCholesky>

#include "pumrom/errors.hpp"

namespace pumrom {

SubdomainLayout make_layout(const Discretization& disc,
                            const SubdomainGrid& grid) {
  SubdomainLayout layout;
  layout.elem_sub.resize(disc.num_elements());
  for (int e = 0; e < disc.num_elements(); ++e) {
    const auto [ex, ey] = disc.element_xy(e);
    const auto cx = disc.cell_x(ex);
    const auto cy = disc.cell_y(ey);
    layout.elem_sub[e] =
        grid.locate(Vec2(0.5 * (cx[0] + cx[1]), 0.5 * (cy[0] + cy[1])));
  }
  return layout;
}

const AssemblyTables& assembly_tables(const Discretization& disc) {
  static std::map<int, AssemblyTables> cache;
  const int p = disc.degree();
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;

  const auto& tab = disc.basis_at_quad();
  const auto& rule = disc.rule_1d();
  const int m = static_cast<int>(rule.points.size());
  const int n1 = p + 1;
  AssemblyTables t;
  t.nloc = n1 * n1;
  t.nq = m * m;
  t.N.resize(t.nq, t.nloc);
  t.Dx.resize(t.nq, t.nloc);
  t.Dy.resize(t.nq, t.nloc);
  t.wq.resize(t.nq);
  t.qx.resize(t.nq, 2);
  for (int qy = 0; qy < m; ++qy)
    for (int qx = 0; qx < m; ++qx) {
      const int q = qy * m + qx;
      t.wq[q] = rule.weights[qx] * rule.weights[qy];
      t.qx(q, 0) = rule.points[qx];
      t.qx(q, 1) = rule.points[qy];
      for (int b = 0; b < n1; ++b)
        for (int a = 0; a < n1; ++a) {
          const int l = b * n1 + a;
          t.N(q, l) = tab.vals(qx, a) * tab.vals(qy, b);
          t.Dx(q, l) = tab.derivs(qx, a) * tab.vals(qy, b);
          t.Dy(q, l) = tab.vals(qx, a) * tab.derivs(qy, b);
        }
    }
  return cache.emplace(p, std::move(t)).first->second;
}

namespace {

struct ElemGeom {
  std::vector<int> dofs;
  double ax, ay, hx, hy, sx, sy;
};

void element_geometry(const Discretization& disc, int e, ElemGeom& g) {
  const auto [ex, ey] = disc.element_xy(e);
  const auto cx = disc.cell_x(ex);
  const auto cy = disc.cell_y(ey);
  g.ax = cx[0];
  g.ay = cy[0];
  g.hx = cx[1] - cx[0];
  g.hy = cy[1] - cy[0];
  g.sx = 2.0 / g.hx;
  g.sy = 2.0 / g.hy;
  const int p = disc.degree();
  g.dofs.resize((p + 1) * (p + 1));
  for (int b = 0; b <= p; ++b)
    for (int a = 0; a <= p; ++a)
      g.dofs[b * (p + 1) + a] = disc.element_dof(ex, ey, a, b);
}

template <typename F>
void for_each_element(const Discretization& disc, const std::vector<int>* elems,
                      F&& fn) {
  ElemGeom g;
  if (elems) {
    for (int e : *elems) {
      element_geometry(disc, e, g);
      fn(e, g);
    }
  } else {
    for (int e = 0; e < disc.num_elements(); ++e) {
      element_geometry(disc, e, g);
      fn(e, g);
    }
  }
}

}  // namespace

Field assemble_residual(const Discretization& disc, const PDEModel& model,
                        const ModelParams& params, const SubdomainLayout& layout,
                        const Field& u, const std::vector<int>* elems) {
  const auto& t = assembly_tables(disc);
  Field R = Field::Zero(disc.num_dofs());
  Eigen::VectorXd uloc(t.nloc);
  for_each_element(disc, elems, [&](int e, const ElemGeom& g) {
    const int sub = layout.elem_sub[e];
    for (int l = 0; l < t.nloc; ++l) uloc[l] = u[g.dofs[l]];
    for (int q = 0; q < t.nq; ++q) {
      PointState s;
      s.x = {g.ax + (t.qx(q, 0) + 1.0) * 0.5 * g.hx,
             g.ay + (t.qx(q, 1) + 1.0) * 0.5 * g.hy};
      s.sub = sub;
      s.u = t.N.row(q).dot(uloc);
      s.grad = {t.Dx.row(q).dot(uloc) * g.sx, t.Dy.row(q).dot(uloc) * g.sy};
      const FluxReaction fr = model.eval(s, params);
      const double w = t.wq[q] * g.hx * g.hy * 0.25;
      for (int l = 0; l < t.nloc; ++l) {
        R[g.dofs[l]] += w * (fr.q[0] * t.Dx(q, l) * g.sx +
                             fr.q[1] * t.Dy(q, l) * g.sy + fr.r * t.N(q, l));
      }
    }
  });
  return R;
}

SpMat assemble_jacobian(const Discretization& disc, const PDEModel& model,
                        const ModelParams& params, const SubdomainLayout& layout,
                        const Field& u, const std::vector<int>* elems) {
  const auto& t = assembly_tables(disc);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve((elems ? elems->size() : disc.num_elements()) * t.nloc * t.nloc);
  Eigen::VectorXd uloc(t.nloc);
  Eigen::MatrixXd Jloc(t.nloc, t.nloc);
  for_each_element(disc, elems, [&](int e, const ElemGeom& g) {
    const int sub = layout.elem_sub[e];
    for (int l = 0; l < t.nloc; ++l) uloc[l] = u[g.dofs[l]];
    Jloc.setZero();
    for (int q = 0; q < t.nq; ++q) {
      PointState s;
      s.x = {g.ax + (t.qx(q, 0) + 1.0) * 0.5 * g.hx,
             g.ay + (t.qx(q, 1) + 1.0) * 0.5 * g.hy};
      s.sub = sub;
      s.u = t.N.row(q).dot(uloc);
      s.grad = {t.Dx.row(q).dot(uloc) * g.sx, t.Dy.row(q).dot(uloc) * g.sy};
      const FluxReaction fr = model.eval(s, params);
      const double w = t.wq[q] * g.hx * g.hy * 0.25;
      for (int c = 0; c < t.nloc; ++c) {
        const double Nc = t.N(q, c);
        const Vec2 gc(t.Dx(q, c) * g.sx, t.Dy(q, c) * g.sy);
        const Vec2 dq = fr.dq_dgrad * gc + fr.dq_du * Nc;
        const double dr = fr.dr_du * Nc + fr.dr_dgrad.dot(gc);
        for (int l = 0; l < t.nloc; ++l) {
          const Vec2 gl(t.Dx(q, l) * g.sx, t.Dy(q, l) * g.sy);
          Jloc(l, c) += w * (dq.dot(gl) + dr * t.N(q, l));
        }
      }
    }
    for (int c = 0; c < t.nloc; ++c)
      for (int l = 0; l < t.nloc; ++l)
        trip.emplace_back(g.dofs[l], g.dofs[c], Jloc(l, c));
  });
  SpMat J(disc.num_dofs(), disc.num_dofs());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

Eigen::VectorXd assemble_reduced_residual(const Discretization& disc,
                                          const PDEModel& model,
                                          const ModelParams& params,
                                          const SubdomainLayout& layout,
                                          const Field& u,
                                          const Eigen::MatrixXd& B,
                                          const std::vector<int>* elems) {
  const auto& t = assembly_tables(disc);
  const int k = static_cast<int>(B.cols());
  Eigen::VectorXd R = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd uloc(t.nloc);
  for_each_element(disc, elems, [&](int e, const ElemGeom& g) {
    const int sub = layout.elem_sub[e];
    for (int l = 0; l < t.nloc; ++l) uloc[l] = u[g.dofs[l]];
    for (int q = 0; q < t.nq; ++q) {
      PointState s;
      s.x = {g.ax + (t.qx(q, 0) + 1.0) * 0.5 * g.hx,
             g.ay + (t.qx(q, 1) + 1.0) * 0.5 * g.hy};
      s.sub = sub;
      s.u = t.N.row(q).dot(uloc);
      s.grad = {t.Dx.row(q).dot(uloc) * g.sx, t.Dy.row(q).dot(uloc) * g.sy};
      const FluxReaction fr = model.eval(s, params);
      const double w = t.wq[q] * g.hx * g.hy * 0.25;
      for (int j = 0; j < k; ++j) {
        double v = 0.0, gx = 0.0, gy = 0.0;
        for (int l = 0; l < t.nloc; ++l) {
          const double c = B(g.dofs[l], j);
          v += c * t.N(q, l);
          gx += c * t.Dx(q, l) * g.sx;
          gy += c * t.Dy(q, l) * g.sy;
        }
        R[j] += w * (fr.q[0] * gx + fr.q[1] * gy + fr.r * v);
      }
    }
  });
  return R;
}

SpMat assemble_gram(const Discretization& disc,
                    const std::function<double(const Vec2&)>& coeff_d,
                    const std::function<double(const Vec2&)>& coeff_m,
                    const std::vector<int>* elems) {
  const auto& t = assembly_tables(disc);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve((elems ? elems->size() : disc.num_elements()) * t.nloc * t.nloc);
  Eigen::MatrixXd Gloc(t.nloc, t.nloc);
  for_each_element(disc, elems, [&](int, const ElemGeom& g) {
    Gloc.setZero();
    for (int q = 0; q < t.nq; ++q) {
      const Vec2 x(g.ax + (t.qx(q, 0) + 1.0) * 0.5 * g.hx,
                   g.ay + (t.qx(q, 1) + 1.0) * 0.5 * g.hy);
      const double cd = coeff_d(x), cm = coeff_m(x);
      const double w = t.wq[q] * g.hx * g.hy * 0.25;
      for (int c = 0; c < t.nloc; ++c)
        for (int l = 0; l < t.nloc; ++l)
          Gloc(l, c) += w * (cd * (t.Dx(q, l) * t.Dx(q, c) * g.sx * g.sx +
                                   t.Dy(q, l) * t.Dy(q, c) * g.sy * g.sy) +
                             cm * t.N(q, l) * t.N(q, c));
    }
    for (int c = 0; c < t.nloc; ++c)
      for (int l = 0; l < t.nloc; ++l)
        trip.emplace_back(g.dofs[l], g.dofs[c], Gloc(l, c));
  });
  SpMat G(disc.num_dofs(), disc.num_dofs());
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

SpMat assemble_h1_gram(const Discretization& disc, const std::vector<int>* elems) {
  return assemble_gram(
      disc, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 1.0; },
      elems);
}

SpMat assemble_weighted_h1_gram(const Discretization& disc, const Field* weight,
                                const std::vector<int>* elems) {
  SpMat G = assemble_h1_gram(disc, elems);
  if (!weight) return G;
  if (weight->size() != disc.num_dofs())
    throw ConfigError("assemble_weighted_h1_gram: weight size mismatch");
  if (weight->minCoeff() < 0.0)
    throw ConfigError("assemble_weighted_h1_gram: negative weight");
  SpMat D(disc.num_dofs(), disc.num_dofs());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(disc.num_dofs());
  for (int i = 0; i < disc.num_dofs(); ++i)
    trip.emplace_back(i, i, (*weight)[i]);
  D.setFromTriplets(trip.begin(), trip.end());
  return D * G * D;
}

SpMat masked_block(const SpMat& A, const std::vector<int>& keep) {
  std::vector<int> inv(A.rows(), -1);
  for (size_t k = 0; k < keep.size(); ++k) inv[keep[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < A.outerSize(); ++col) {
    if (inv[col] < 0) continue;
    for (SpMat::InnerIterator it(A, col); it; ++it) {
      if (inv[it.row()] < 0) continue;
      trip.emplace_back(inv[it.row()], inv[col], it.value());
    }
  }
  SpMat B(keep.size(), keep.size());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

Eigen::VectorXd masked_vector(const Eigen::VectorXd& v,
                              const std::vector<int>& keep) {
  Eigen::VectorXd out(keep.size());
  for (size_t k = 0; k < keep.size(); ++k) out[k] = v[keep[k]];
  return out;
}

double dual_norm(const Eigen::VectorXd& f, const SpMat& gram,
                 const std::vector<int>& mask) {
  if (mask.empty()) return 0.0;
  const SpMat B = masked_block(gram, mask);
  Eigen::SimplicialLDLT<SpMat> ldlt(B);
  if (ldlt.info() != Eigen::Success)
    throw IndefiniteGram("dual_norm: factorization failed");
  if (ldlt.vectorD().minCoeff() <= 0.0)
    throw IndefiniteGram("dual_norm: gram block not positive definite");
  const Eigen::VectorXd fm = masked_vector(f, mask);
  const Eigen::VectorXd x = ldlt.solve(fm);
  const double s = fm.dot(x);
  return s > 0.0 ? std::sqrt(s) : 0.0;
}

double integrate(const Discretization& disc,
                 const std::function<double(const Vec2&)>& f,
                 const std::vector<int>* elems) {
  const auto& t = assembly_tables(disc);
  double total = 0.0;
  for_each_element(disc, elems, [&](int, const ElemGeom& g) {
    for (int q = 0; q < t.nq; ++q) {
      const Vec2 x(g.ax + (t.qx(q, 0) + 1.0) * 0.5 * g.hx,
                   g.ay + (t.qx(q, 1) + 1.0) * 0.5 * g.hy);
      total += t.wq[q] * g.hx * g.hy * 0.25 * f(x);
    }
  });
  return total;
}

double integrate_state(const Discretization& disc, const Field& u,
                       const std::function<double(const Vec2&, double, const Vec2&)>& f,
                       const std::vector<int>* elems) {
  const auto& t = assembly_tables(disc);
  double total = 0.0;
  Eigen::VectorXd uloc(t.nloc);
  for_each_element(disc, elems, [&](int, const ElemGeom& g) {
    for (int l = 0; l < t.nloc; ++l) uloc[l] = u[g.dofs[l]];
    for (int q = 0; q < t.nq; ++q) {
      const Vec2 x(g.ax + (t.qx(q, 0) + 1.0) * 0.5 * g.hx,
                   g.ay + (t.qx(q, 1) + 1.0) * 0.5 * g.hy);
      const double uv = t.N.row(q).dot(uloc);
      const Vec2 gr(t.Dx.row(q).dot(uloc) * g.sx, t.Dy.row(q).dot(uloc) * g.sy);
      total += t.wq[q] * g.hx * g.hy * 0.25 * f(x, uv, gr);
    }
  });
  return total;
}

}  // namespace pumrom
