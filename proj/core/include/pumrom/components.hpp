#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

#include "pumrom/assembly.hpp"

namespace pumrom {

enum class Archetype { Corner = 0, Edge = 1, Internal = 2 };
std::string archetype_name(Archetype t);
Archetype archetype_from_name(const std::string& s);
// Patch subdomain counts: corner 4 (2x2), edge 6 (2x3), internal 9 (3x3).
int patch_subdomain_count(Archetype t);

// Geometry options of the PUM decomposition. Each square subdomain of side H
// is meshed with the breakpoint pattern {0, d/2, d, ..., H-d, H-d/2, H}
// (d = delta, the overlap width) so that partition-of-unity kinks and cover
// boundaries are element edges; interior_cells subdivide (d, H-d).
struct PumOptions {
  double H = 0.1;
  double delta = 0.01;
  int degree = 3;
  int interior_cells = 6;  // 10 cells per subdomain with the default pattern

  int cells_per_subdomain() const { return interior_cells + 4; }
  static PumOptions fast() {
    PumOptions o;
    o.degree = 2;
    o.interior_cells = 1;
    return o;
  }
};

// 1d partition-of-unity profile of subdomain k (1-based) among n along one
// axis: 1 on the subdomain interior, linear ramps of width delta centered on
// interior subdomain boundaries, constant up to the outer walls.
double pou_profile_1d(int k, int n, double H, double delta, double t);

std::vector<double> subdomain_pattern(const PumOptions& opt);
// Concatenated pattern over `count` subdomains starting at x0.
Grid1D pattern_grid(const PumOptions& opt, double x0, int count);

// Reference geometry of one archetype: oversampling patch, component domain
// (the subdomain extended by delta on non-wall sides), PoU weight and the
// gram operators used for local norms and local Riesz solves.
struct ArchetypeWorkspace {
  Archetype type = Archetype::Internal;
  PumOptions opt;
  Discretization patch;
  Discretization domain;
  SubdomainGrid patch_grid;           // local i_star indexing (1..count)
  SubdomainLayout patch_layout;
  int own_subdomain = 0;              // patch-grid id of the central subdomain
  Field pou;                          // \hat phi on `domain`
  std::vector<int> patch_boundary;    // all boundary dofs of `patch`
  std::vector<int> input_dofs;        // Gamma_in dofs on `patch`, arclength order
  Eigen::VectorXd input_s;            // normalized arclength in [0,1]
  std::vector<int> wall_dofs;         // Gamma_dir dofs on `domain`
  std::vector<int> domain_to_patch;   // domain dof -> patch dof
  std::vector<int> riesz_mask;        // pou > 0 and off Gamma_dir, on `domain`
  SpMat h1_gram;                      // H1(domain)
  SpMat weighted_gram;                // diag(pou) H1 diag(pou)
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> riesz_solver;  // masked H1

  double local_norm(const Field& w) const { return gram_norm(w, weighted_gram); }
};

ArchetypeWorkspace make_archetype(Archetype type, const PumOptions& opt);

struct ComponentLibrary {
  PumOptions opt;
  ArchetypeWorkspace corner, edge, internal;
  const ArchetypeWorkspace& at(Archetype t) const {
    switch (t) {
      case Archetype::Corner: return corner;
      case Archetype::Edge: return edge;
      default: return internal;
    }
  }
};
ComponentLibrary make_library(const PumOptions& opt);

struct ComponentInstance {
  int index;     // row-major component id, 0-based
  int gi, gj;    // grid position, 0-based
  Archetype type;
  int rotation;  // k * 90 degrees ccw about the subdomain center
};

struct GlobalConfiguration {
  int n_dd = 2;
  double H = 0.1;
  double delta = 0.01;
  std::vector<std::array<double, 2>> mu;  // per subdomain (mu1, mu2)
  int i_star = 0;                         // 1-based source subdomain, 0 = none
  std::vector<ComponentInstance> components;

  int count() const { return n_dd * n_dd; }
  SubdomainGrid grid() const { return {0.0, 0.0, H, n_dd, n_dd}; }
  ModelParams model_params() const;
  nlohmann::json to_json() const;
  static GlobalConfiguration from_json(const nlohmann::json& j);
};

// Deterministic labeling: corners, edges, internals with the rotation that
// carries the archetype's Dirichlet walls onto the outer boundary.
GlobalConfiguration instantiate_configuration(int n_dd,
                                              std::vector<std::array<double, 2>> mu,
                                              int i_star, double H = 0.1,
                                              double delta = 0.01);
std::array<int, 3> archetype_counts(int n_dd);  // {corner, edge, internal}

// Roto-translation of component i: maps reference coordinates to global ones.
Vec2 map_to_global(const ComponentInstance& c, double H, const Vec2& xhat);
Vec2 map_to_reference(const ComponentInstance& c, double H, const Vec2& x);

struct PouData {
  std::vector<Field> phi;
  double gradient_bound;  // sqrt(2) / delta
  int overlap_count;      // max number of overlapping supports (M)
};
// Throws MeshNotConforming when ramp breakpoints are not mesh breakpoints.
PouData build_pou(const GlobalConfiguration& cfg, const Discretization& disc);

Discretization global_mesh(const GlobalConfiguration& cfg, const PumOptions& opt);

// Global PUM bookkeeping: meshes, PoU, component node maps and covers.
struct GlobalSpace {
  GlobalConfiguration cfg;
  const ComponentLibrary* lib = nullptr;
  Discretization disc;
  SubdomainLayout layout;
  std::vector<int> dirichlet;  // outer boundary dofs
  PouData pou;
  std::vector<std::vector<int>> node_map;      // [comp][domain dof] -> global dof
  std::vector<std::vector<int>> cover_elems;   // global elements in omega_i
  std::vector<std::vector<int>> support_dofs;  // global dofs with phi_i > 0
  std::vector<std::vector<int>> neighbors;     // components overlapping i (incl. i)

  const ArchetypeWorkspace& workspace(int comp) const {
    return lib->at(cfg.components[comp].type);
  }
  // Gather a global field onto the reference domain of component i.
  Field restrict_to_component(int comp, const Field& u) const;
};

GlobalSpace build_global_space(const GlobalConfiguration& cfg,
                               const ComponentLibrary& lib);

// I_h(zeta(Phi_i^{-1} x) phi_i(x)) as a global nodal field; zeta lives on the
// archetype domain of component i.
Field pum_basis_function(const GlobalSpace& gs, int comp, const Field& zeta);

double local_norm(const ArchetypeWorkspace& ws, const Field& w);

}  // namespace pumrom
