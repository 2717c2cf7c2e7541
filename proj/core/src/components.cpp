#include "pumrom/components.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "pumrom/errors.hpp"

namespace pumrom {

std::string archetype_name(Archetype t) {
  switch (t) {
    case Archetype::Corner: return "corner";
    case Archetype::Edge: return "edge";
    default: return "internal";
  }
}

Archetype archetype_from_name(const std::string& s) {
  if (s == "corner") return Archetype::Corner;
  if (s == "edge") return Archetype::Edge;
  if (s == "internal") return Archetype::Internal;
  throw ConfigError("unknown archetype: " + s);
}

int patch_subdomain_count(Archetype t) {
  switch (t) {
    case Archetype::Corner: return 4;
    case Archetype::Edge: return 6;
    default: return 9;
  }
}

double pou_profile_1d(int k, int n, double H, double delta, double t) {
  const double a = (k - 1) * H, b = k * H;
  double v = 1.0;
  if (k > 1) {
    const double lo = a - 0.5 * delta;
    v *= std::clamp((t - lo) / delta, 0.0, 1.0);
  }
  if (k < n) {
    const double hi = b + 0.5 * delta;
    v *= std::clamp((hi - t) / delta, 0.0, 1.0);
  }
  return v;
}

std::vector<double> subdomain_pattern(const PumOptions& opt) {
  const double H = opt.H, d = opt.delta;
  if (!(d > 0.0) || !(2.0 * d < H))
    throw ConfigError("subdomain_pattern: need 0 < 2*delta < H");
  std::vector<double> p;
  p.push_back(0.0);
  p.push_back(0.5 * d);
  p.push_back(d);
  for (int j = 1; j < opt.interior_cells; ++j)
    p.push_back(d + j * (H - 2.0 * d) / opt.interior_cells);
  p.push_back(H - d);
  p.push_back(H - 0.5 * d);
  p.push_back(H);
  return p;
}

Grid1D pattern_grid(const PumOptions& opt, double x0, int count) {
  const auto pat = subdomain_pattern(opt);
  Grid1D g;
  for (int k = 0; k < count; ++k) {
    const double off = x0 + k * opt.H;
    const size_t start = (k == 0) ? 0 : 1;  // skip duplicate joint
    for (size_t j = start; j < pat.size(); ++j) g.breakpoints.push_back(off + pat[j]);
  }
  return g;
}

namespace {

int find_sorted(const std::vector<double>& xs, double t, const char* what) {
  auto it = std::lower_bound(xs.begin(), xs.end(), t - 1e-9);
  if (it == xs.end() || std::abs(*it - t) > 1e-9)
    throw MeshNotConforming(std::string(what) + ": coordinate " +
                            std::to_string(t) + " is not a mesh entity");
  return static_cast<int>(it - xs.begin());
}

std::vector<double> node_array_x(const Discretization& d) {
  std::vector<double> xs(d.nodes_x());
  for (int i = 0; i < d.nodes_x(); ++i) xs[i] = d.node_x(i);
  return xs;
}
std::vector<double> node_array_y(const Discretization& d) {
  std::vector<double> ys(d.nodes_y());
  for (int i = 0; i < d.nodes_y(); ++i) ys[i] = d.node_y(i);
  return ys;
}

// Domain grid along one axis: the subdomain pattern plus an optional
// delta-wide margin (two cells) on either side.
Grid1D domain_grid(const PumOptions& opt, bool left_margin, bool right_margin) {
  Grid1D g;
  const double d = opt.delta, H = opt.H;
  if (left_margin) {
    g.breakpoints.push_back(-d);
    g.breakpoints.push_back(-0.5 * d);
  }
  for (double t : subdomain_pattern(opt)) g.breakpoints.push_back(t);
  if (right_margin) {
    g.breakpoints.push_back(H + 0.5 * d);
    g.breakpoints.push_back(H + d);
  }
  return g;
}

// Interior-subdomain profile in the local frame of a subdomain at (0, H):
// ramps across both ends.
double profile_interior(const PumOptions& o, double t) {
  return pou_profile_1d(2, 3, o.H, o.delta, t + o.H);
}
// Wall-side profile: constant 1 against the wall at 0, ramp near H.
double profile_wall(const PumOptions& o, double t) {
  return pou_profile_1d(1, 2, o.H, o.delta, t);
}

void walk_side(const Discretization& disc, Discretization::Side side,
               bool reverse, bool skip_first, std::vector<int>& path) {
  auto dofs = disc.side_dofs(side);
  if (reverse) std::reverse(dofs.begin(), dofs.end());
  for (size_t k = skip_first ? 1 : 0; k < dofs.size(); ++k)
    path.push_back(dofs[k]);
}

}  // namespace

ArchetypeWorkspace make_archetype(Archetype type, const PumOptions& opt) {
  const double H = opt.H;
  using Side = Discretization::Side;

  Grid1D px, py, dx, dy;
  SubdomainGrid pgrid;
  int own = 0;
  switch (type) {
    case Archetype::Internal:
      px = pattern_grid(opt, -H, 3);
      py = pattern_grid(opt, -H, 3);
      dx = domain_grid(opt, true, true);
      dy = domain_grid(opt, true, true);
      pgrid = {-H, -H, H, 3, 3};
      own = 4;
      break;
    case Archetype::Edge:  // wall along x = 0
      px = pattern_grid(opt, 0.0, 2);
      py = pattern_grid(opt, -H, 3);
      dx = domain_grid(opt, false, true);
      dy = domain_grid(opt, true, true);
      pgrid = {0.0, -H, H, 2, 3};
      own = 2;
      break;
    case Archetype::Corner:  // walls along x = 0 and y = 0
      px = pattern_grid(opt, 0.0, 2);
      py = pattern_grid(opt, 0.0, 2);
      dx = domain_grid(opt, false, true);
      dy = domain_grid(opt, false, true);
      pgrid = {0.0, 0.0, H, 2, 2};
      own = 0;
      break;
  }

  ArchetypeWorkspace ws{type,
                        opt,
                        Discretization(std::move(px), std::move(py), opt.degree),
                        Discretization(std::move(dx), std::move(dy), opt.degree),
                        pgrid,
                        SubdomainLayout{},
                        own,
                        {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  ws.patch_layout = make_layout(ws.patch, ws.patch_grid);

  const bool wall_x = type != Archetype::Internal;
  const bool wall_y = type == Archetype::Corner;
  auto ramp = [&](bool wall, double t) {
    return wall ? profile_wall(opt, t) : profile_interior(opt, t);
  };
  ws.pou = ws.domain.interpolate(
      [&](const Vec2& x) { return ramp(wall_x, x[0]) * ramp(wall_y, x[1]); });

  // Input boundary on the patch, ordered by arclength.
  std::vector<int> path;
  if (type == Archetype::Internal) {
    // Closed loop around the patch, ccw from the bottom-left corner; the
    // start node is not repeated at the end.
    walk_side(ws.patch, Side::Bottom, false, false, path);
    walk_side(ws.patch, Side::Right, false, true, path);
    walk_side(ws.patch, Side::Top, true, true, path);
    auto left = ws.patch.side_dofs(Side::Left);
    std::reverse(left.begin(), left.end());
    for (size_t k = 1; k + 1 < left.size(); ++k) path.push_back(left[k]);
  } else if (type == Archetype::Edge) {
    // bottom -> right -> top; both path ends touch the wall.
    walk_side(ws.patch, Side::Bottom, false, false, path);
    walk_side(ws.patch, Side::Right, false, true, path);
    walk_side(ws.patch, Side::Top, true, true, path);
  } else {
    // right -> top, between the two walls.
    walk_side(ws.patch, Side::Right, false, false, path);
    walk_side(ws.patch, Side::Top, true, true, path);
  }

  ws.patch_boundary = ws.patch.boundary_dofs();
  ws.input_dofs = path;
  ws.input_s.resize(static_cast<Eigen::Index>(path.size()));
  std::vector<double> arc(path.size(), 0.0);
  double total = 0.0;
  for (size_t k = 1; k < path.size(); ++k) {
    total += (ws.patch.node(path[k]) - ws.patch.node(path[k - 1])).norm();
    arc[k] = total;
  }
  if (type == Archetype::Internal) {
    // Closed loop: normalize by the full perimeter so s stays below 1.
    const auto r = ws.patch.rect();
    total = 2.0 * ((r[2] - r[0]) + (r[3] - r[1]));
  }
  for (size_t k = 0; k < path.size(); ++k)
    ws.input_s[static_cast<Eigen::Index>(k)] = arc[k] / total;

  // Dirichlet walls on the component domain.
  if (type == Archetype::Edge) {
    ws.wall_dofs = ws.domain.side_dofs(Side::Left);
  } else if (type == Archetype::Corner) {
    ws.wall_dofs = ws.domain.side_dofs(Side::Left);
    for (int dof : ws.domain.side_dofs(Side::Bottom))
      if (std::find(ws.wall_dofs.begin(), ws.wall_dofs.end(), dof) ==
          ws.wall_dofs.end())
        ws.wall_dofs.push_back(dof);
  }

  const auto pxs = node_array_x(ws.patch);
  const auto pys = node_array_y(ws.patch);
  ws.domain_to_patch.resize(ws.domain.num_dofs());
  for (int dof = 0; dof < ws.domain.num_dofs(); ++dof) {
    const Vec2 x = ws.domain.node(dof);
    const int ix = find_sorted(pxs, x[0], "make_archetype");
    const int iy = find_sorted(pys, x[1], "make_archetype");
    ws.domain_to_patch[dof] = ws.patch.dof(ix, iy);
  }

  std::vector<char> is_wall(ws.domain.num_dofs(), 0);
  for (int dof : ws.wall_dofs) is_wall[dof] = 1;
  for (int dof = 0; dof < ws.domain.num_dofs(); ++dof)
    if (ws.pou[dof] > 0.0 && !is_wall[dof]) ws.riesz_mask.push_back(dof);

  ws.h1_gram = assemble_h1_gram(ws.domain);
  ws.weighted_gram = assemble_weighted_h1_gram(ws.domain, &ws.pou);
  ws.riesz_solver = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  ws.riesz_solver->compute(masked_block(ws.h1_gram, ws.riesz_mask));
  if (ws.riesz_solver->info() != Eigen::Success)
    throw IndefiniteGram("make_archetype: local gram factorization failed");
  return ws;
}

ComponentLibrary make_library(const PumOptions& opt) {
  return ComponentLibrary{opt, make_archetype(Archetype::Corner, opt),
                          make_archetype(Archetype::Edge, opt),
                          make_archetype(Archetype::Internal, opt)};
}

ModelParams GlobalConfiguration::model_params() const {
  ModelParams p;
  p.grid = grid();
  p.mu_sub = mu;
  p.i_star = i_star;
  return p;
}

nlohmann::json GlobalConfiguration::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components)
    comps.push_back({{"index", c.index},
                     {"gi", c.gi},
                     {"gj", c.gj},
                     {"type", archetype_name(c.type)},
                     {"rotation", c.rotation}});
  return {{"n_dd", n_dd},   {"H", H},
          {"delta", delta}, {"mu", mu},
          {"i_star", i_star}, {"components", comps}};
}

GlobalConfiguration GlobalConfiguration::from_json(const nlohmann::json& j) {
  auto mu = j.at("mu").get<std::vector<std::array<double, 2>>>();
  return instantiate_configuration(j.at("n_dd").get<int>(), std::move(mu),
                                   j.at("i_star").get<int>(), j.value("H", 0.1),
                                   j.value("delta", 0.01));
}

std::array<int, 3> archetype_counts(int n_dd) {
  return {4, 4 * (n_dd - 2), (n_dd - 2) * (n_dd - 2)};
}

GlobalConfiguration instantiate_configuration(int n_dd,
                                              std::vector<std::array<double, 2>> mu,
                                              int i_star, double H, double delta) {
  if (n_dd < 2) throw ConfigError("instantiate_configuration: n_dd must be >= 2");
  if (static_cast<int>(mu.size()) != n_dd * n_dd)
    throw ConfigError("instantiate_configuration: need one mu pair per subdomain");
  for (const auto& m : mu)
    if (!(m[1] > 0.0))
      throw ConfigError("instantiate_configuration: mu2 must be positive");
  if (i_star < 0 || i_star > n_dd * n_dd)
    throw ConfigError("instantiate_configuration: i_star out of range");

  GlobalConfiguration cfg;
  cfg.n_dd = n_dd;
  cfg.H = H;
  cfg.delta = delta;
  cfg.mu = std::move(mu);
  cfg.i_star = i_star;
  for (int gj = 0; gj < n_dd; ++gj)
    for (int gi = 0; gi < n_dd; ++gi) {
      ComponentInstance c;
      c.index = gj * n_dd + gi;
      c.gi = gi;
      c.gj = gj;
      const bool left = gi == 0, right = gi == n_dd - 1;
      const bool bottom = gj == 0, top = gj == n_dd - 1;
      const int sides = int(left) + int(right) + int(bottom) + int(top);
      if (sides == 0) {
        c.type = Archetype::Internal;
        c.rotation = 0;
      } else if (sides == 1) {
        c.type = Archetype::Edge;
        c.rotation = left ? 0 : (bottom ? 1 : (right ? 2 : 3));
      } else {
        c.type = Archetype::Corner;
        if (left && bottom) c.rotation = 0;
        else if (right && bottom) c.rotation = 1;
        else if (right && top) c.rotation = 2;
        else c.rotation = 3;
      }
      cfg.components.push_back(c);
    }
  return cfg;
}

Vec2 map_to_global(const ComponentInstance& c, double H, const Vec2& xhat) {
  const Vec2 r = xhat - Vec2(0.5 * H, 0.5 * H);
  Vec2 q;
  switch (c.rotation & 3) {
    case 0: q = r; break;
    case 1: q = {-r[1], r[0]}; break;
    case 2: q = {-r[0], -r[1]}; break;
    default: q = {r[1], -r[0]}; break;
  }
  return q + Vec2(0.5 * H + c.gi * H, 0.5 * H + c.gj * H);
}

Vec2 map_to_reference(const ComponentInstance& c, double H, const Vec2& x) {
  const Vec2 r = x - Vec2(0.5 * H + c.gi * H, 0.5 * H + c.gj * H);
  Vec2 q;
  switch (c.rotation & 3) {
    case 0: q = r; break;
    case 1: q = {r[1], -r[0]}; break;
    case 2: q = {-r[0], -r[1]}; break;
    default: q = {-r[1], r[0]}; break;
  }
  return q + Vec2(0.5 * H, 0.5 * H);
}

PouData build_pou(const GlobalConfiguration& cfg, const Discretization& disc) {
  const double H = cfg.H, d = cfg.delta;
  const auto r = disc.rect();
  if (std::abs(r[0]) > 1e-12 || std::abs(r[1]) > 1e-12 ||
      std::abs(r[2] - cfg.n_dd * H) > 1e-12 ||
      std::abs(r[3] - cfg.n_dd * H) > 1e-12)
    throw ConfigError("build_pou: mesh rectangle does not match configuration");
  // Every ramp kink and subdomain boundary must be a mesh breakpoint,
  // otherwise interpolation distorts the hat profiles.
  for (const Grid1D* g : {&disc.grid_x(), &disc.grid_y()}) {
    auto has = [&](double t) {
      for (double b : g->breakpoints)
        if (std::abs(b - t) < 1e-12) return true;
      return false;
    };
    for (int k = 1; k < cfg.n_dd; ++k)
      if (!has(k * H) || !has(k * H - 0.5 * d) || !has(k * H + 0.5 * d))
        throw MeshNotConforming(
            "build_pou: partition-of-unity kinks must be mesh breakpoints");
  }

  PouData out;
  out.gradient_bound = std::sqrt(2.0) / d;
  out.phi.reserve(cfg.components.size());
  for (const auto& c : cfg.components)
    out.phi.push_back(disc.interpolate([&](const Vec2& x) {
      return pou_profile_1d(c.gi + 1, cfg.n_dd, H, d, x[0]) *
             pou_profile_1d(c.gj + 1, cfg.n_dd, H, d, x[1]);
    }));

  std::vector<int> count(disc.num_dofs(), 0);
  for (const auto& phi : out.phi)
    for (int dof = 0; dof < disc.num_dofs(); ++dof)
      if (phi[dof] > 0.0) ++count[dof];
  out.overlap_count = *std::max_element(count.begin(), count.end());
  return out;
}

Discretization global_mesh(const GlobalConfiguration& cfg, const PumOptions& opt) {
  if (std::abs(opt.H - cfg.H) > 1e-14 || std::abs(opt.delta - cfg.delta) > 1e-14)
    throw ConfigError("global_mesh: options do not match configuration geometry");
  return Discretization(pattern_grid(opt, 0.0, cfg.n_dd),
                        pattern_grid(opt, 0.0, cfg.n_dd), opt.degree);
}

GlobalSpace build_global_space(const GlobalConfiguration& cfg,
                               const ComponentLibrary& lib) {
  GlobalSpace gs{cfg, &lib, global_mesh(cfg, lib.opt), SubdomainLayout{},
                 {},  {},   {},                        {},
                 {},  {}};
  gs.layout = make_layout(gs.disc, cfg.grid());
  gs.dirichlet = gs.disc.boundary_dofs();
  gs.pou = build_pou(cfg, gs.disc);

  const auto gxs = node_array_x(gs.disc);
  const auto gys = node_array_y(gs.disc);
  const double H = cfg.H, d = cfg.delta;

  for (const auto& c : cfg.components) {
    const auto& ws = lib.at(c.type);
    std::vector<int> nmap(ws.domain.num_dofs());
    for (int dof = 0; dof < ws.domain.num_dofs(); ++dof) {
      const Vec2 X = map_to_global(c, H, ws.domain.node(dof));
      const int ix = find_sorted(gxs, X[0], "build_global_space");
      const int iy = find_sorted(gys, X[1], "build_global_space");
      nmap[dof] = gs.disc.dof(ix, iy);
    }
    gs.node_map.push_back(std::move(nmap));

    const double x0 = c.gi * H - d, x1 = (c.gi + 1) * H + d;
    const double y0 = c.gj * H - d, y1 = (c.gj + 1) * H + d;
    std::vector<int> elems;
    for (int e = 0; e < gs.disc.num_elements(); ++e) {
      const auto [ex, ey] = gs.disc.element_xy(e);
      const auto cx = gs.disc.cell_x(ex);
      const auto cy = gs.disc.cell_y(ey);
      const double mx = 0.5 * (cx[0] + cx[1]), my = 0.5 * (cy[0] + cy[1]);
      if (mx > x0 && mx < x1 && my > y0 && my < y1) elems.push_back(e);
    }
    gs.cover_elems.push_back(std::move(elems));

    std::vector<int> supp;
    const auto& phi = gs.pou.phi[c.index];
    for (int dof = 0; dof < gs.disc.num_dofs(); ++dof)
      if (phi[dof] > 0.0) supp.push_back(dof);
    gs.support_dofs.push_back(std::move(supp));

    std::vector<int> nb;
    for (const auto& o : cfg.components)
      if (std::abs(o.gi - c.gi) <= 1 && std::abs(o.gj - c.gj) <= 1)
        nb.push_back(o.index);
    gs.neighbors.push_back(std::move(nb));
  }
  return gs;
}

Field GlobalSpace::restrict_to_component(int comp, const Field& u) const {
  const auto& map = node_map[comp];
  Field out(static_cast<Eigen::Index>(map.size()));
  for (size_t k = 0; k < map.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = u[map[k]];
  return out;
}

Field pum_basis_function(const GlobalSpace& gs, int comp, const Field& zeta) {
  const auto& map = gs.node_map[comp];
  if (zeta.size() != static_cast<Eigen::Index>(map.size()))
    throw ConfigError("pum_basis_function: reference field size mismatch");
  const auto& phi = gs.pou.phi[comp];
  Field z = Field::Zero(gs.disc.num_dofs());
  for (size_t k = 0; k < map.size(); ++k) {
    const int g = map[k];
    if (phi[g] != 0.0) z[g] = phi[g] * zeta[static_cast<Eigen::Index>(k)];
  }
  return z;
}

double local_norm(const ArchetypeWorkspace& ws, const Field& w) {
  if (w.size() != ws.domain.num_dofs())
    throw ConfigError("local_norm: field size mismatch");
  return gram_norm(w, ws.weighted_gram);
}

}  // namespace pumrom
