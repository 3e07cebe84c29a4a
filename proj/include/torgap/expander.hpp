#pragma once

#include "torgap/errors.hpp"
#include "torgap/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace torgap {

struct WeightedEdge {
  std::size_t u = 0, v = 0;
  double w = 1.0;
};

struct Graph {
  std::size_t n = 0;
  std::vector<WeightedEdge> edges;

  void add_edge(std::size_t u, std::size_t v, double w = 1.0) {
    if (u >= n || v >= n) throw DimensionError("edge endpoint out of range");
    if (u == v) throw PreconditionError("self-loops are not allowed");
    if (!(w > 0)) throw PreconditionError("edge weights must be positive");
    edges.push_back({u, v, w});
  }

  [[nodiscard]] std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(n, 0);
    for (const auto &e : edges) {
      ++d[e.u];
      ++d[e.v];
    }
    return d;
  }

  [[nodiscard]] bool connected() const {
    if (n == 0) return false;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t comps = n;
    for (const auto &e : edges) {
      auto a = find(e.u), b = find(e.v);
      if (a != b) {
        parent[a] = b;
        --comps;
      }
    }
    return comps == 1;
  }

  [[nodiscard]] Mat laplacian() const {
    Mat l = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto &e : edges) {
      auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
      l(u, u) += e.w;
      l(v, v) += e.w;
      l(u, v) -= e.w;
      l(v, u) -= e.w;
    }
    return l;
  }

  // Dirichlet energy sum_{edges} w (f(u) - f(v))^2
  [[nodiscard]] double energy(const Vec &f) const {
    double s = 0;
    for (const auto &e : edges) {
      double d = f(static_cast<Eigen::Index>(e.u)) - f(static_cast<Eigen::Index>(e.v));
      s += e.w * d * d;
    }
    return s;
  }
};

inline Graph cycle_graph(std::size_t n) {
  Graph g{n, {}};
  for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
  return g;
}

inline Graph path_graph(std::size_t n) {
  Graph g{n, {}};
  for (std::size_t i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

inline Graph complete_graph(std::size_t n) {
  Graph g{n, {}};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

inline Graph grid_graph(std::size_t rows, std::size_t cols) {
  Graph g{rows * cols, {}};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t v = r * cols + c;
      if (c + 1 < cols) g.add_edge(v, v + 1);
      if (r + 1 < rows) g.add_edge(v, v + cols);
    }
  return g;
}

// Smallest nonzero Laplacian eigenvalue of a connected graph.
inline double graph_gap(const Graph &g) {
  if (!g.connected()) throw PreconditionError("graph is disconnected");
  if (g.n == 1) throw PreconditionError("graph has a single vertex");
  Eigen::SelfAdjointEigenSolver<Mat> es(g.laplacian(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(1);
}

struct Mesh {
  Graph graph;
  std::vector<std::size_t> ports;

  void validate() const {
    if (!graph.connected()) throw PreconditionError("mesh is disconnected");
    // a vertex may carry several ports
    for (auto p : ports)
      if (p >= graph.n) throw DimensionError("port outside the mesh");
  }

  [[nodiscard]] Mesh scaled(double t) const {
    Mesh m = *this;
    for (auto &e : m.graph.edges) e.w *= t;
    return m;
  }
};

// Two copies of the mesh joined by one edge between the given ports.
inline Graph port_union(const Mesh &mesh, std::size_t pa, std::size_t pb,
                        double port_weight) {
  Graph g{2 * mesh.graph.n, {}};
  for (const auto &e : mesh.graph.edges) {
    g.add_edge(e.u, e.v, e.w);
    g.add_edge(mesh.graph.n + e.u, mesh.graph.n + e.v, e.w);
  }
  // a single-vertex mesh has no ports of its own; its vertex is the port
  std::size_t a = mesh.ports.empty() ? 0 : mesh.ports.at(pa);
  std::size_t b = mesh.ports.empty() ? 0 : mesh.ports.at(pb);
  g.add_edge(a, mesh.graph.n + b, port_weight);
  return g;
}

// p_B: worst Poincare constant of two port-joined copies over port pairs.
inline double poincare_constant(const Mesh &mesh, double port_weight = 1.0) {
  if (!mesh.graph.connected()) throw PreconditionError("mesh is disconnected");
  std::size_t k = std::max<std::size_t>(mesh.ports.size(), 1);
  double worst = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      worst = std::max(worst, 1.0 / graph_gap(port_union(mesh, i, j, port_weight)));
  return worst;
}

// Spread of the pairwise Poincare constants (max - min).
inline double poincare_spread(const Mesh &mesh, double port_weight = 1.0) {
  double lo = 1e300, hi = 0;
  for (std::size_t i = 0; i < mesh.ports.size(); ++i)
    for (std::size_t j = 0; j < mesh.ports.size(); ++j) {
      double v = 1.0 / graph_gap(port_union(mesh, i, j, port_weight));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return hi - lo;
}

struct BlockGraph {
  Graph base;
  Mesh mesh;
  double port_weight = 1.0;
  std::size_t degree = 0;
  Graph assembled;
  // per base edge (in base.edges order): ports used at u and at v
  std::vector<std::pair<std::size_t, std::size_t>> port_pairs;

  [[nodiscard]] std::size_t block_size() const { return mesh.graph.n; }
  [[nodiscard]] std::size_t vertex(std::size_t block, std::size_t local) const {
    return block * mesh.graph.n + local;
  }
};

inline BlockGraph build_block_graph(const Graph &base, const Mesh &mesh,
                                    double port_weight = 1.0) {
  if (!base.connected()) throw PreconditionError("base graph is disconnected");
  auto deg = base.degrees();
  std::size_t d = deg.empty() ? 0 : deg.front();
  if (std::any_of(deg.begin(), deg.end(), [d](std::size_t x) { return x != d; }))
    throw PreconditionError("base graph is not regular");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto &e : base.edges)
    if (!seen.insert(std::minmax(e.u, e.v)).second)
      throw PreconditionError("base graph has parallel edges");
  mesh.validate();
  if (mesh.ports.size() != d)
    throw PreconditionError("mesh needs exactly d = " + std::to_string(d) +
                            " ports");
  BlockGraph bg;
  bg.base = base;
  bg.mesh = mesh;
  bg.port_weight = port_weight;
  bg.degree = d;
  const std::size_t b = mesh.graph.n;
  bg.assembled = Graph{base.n * b, {}};
  for (std::size_t v = 0; v < base.n; ++v)
    for (const auto &e : mesh.graph.edges)
      bg.assembled.add_edge(v * b + e.u, v * b + e.v, e.w);
  std::vector<std::size_t> next_port(base.n, 0);
  for (const auto &e : base.edges) {
    std::size_t pu = next_port[e.u]++, pv = next_port[e.v]++;
    bg.port_pairs.emplace_back(pu, pv);
    bg.assembled.add_edge(e.u * b + mesh.ports[pu], e.v * b + mesh.ports[pv],
                          port_weight);
  }
  return bg;
}

// Per-block mean of a function on the assembled graph.
inline Vec averaging_operator(const BlockGraph &bg, const Vec &g) {
  const std::size_t b = bg.block_size();
  if (g.size() != static_cast<Eigen::Index>(bg.assembled.n))
    throw DimensionError("function must live on the assembled graph");
  Vec t(static_cast<Eigen::Index>(bg.base.n));
  for (std::size_t v = 0; v < bg.base.n; ++v)
    t(static_cast<Eigen::Index>(v)) =
        g.segment(static_cast<Eigen::Index>(v * b), static_cast<Eigen::Index>(b))
            .mean();
  return t;
}

// Energy of g on the union of blocks u and v and the port edge between them.
inline double local_energy(const BlockGraph &bg, const Vec &g, std::size_t edge) {
  const auto &e = bg.base.edges.at(edge);
  const std::size_t b = bg.block_size();
  Vec f(static_cast<Eigen::Index>(2 * b));
  f.head(static_cast<Eigen::Index>(b)) =
      g.segment(static_cast<Eigen::Index>(e.u * b), static_cast<Eigen::Index>(b));
  f.tail(static_cast<Eigen::Index>(b)) =
      g.segment(static_cast<Eigen::Index>(e.v * b), static_cast<Eigen::Index>(b));
  auto [pu, pv] = bg.port_pairs.at(edge);
  return port_union(bg.mesh, pu, pv, bg.port_weight).energy(f);
}

struct GapBound {
  double c_G = 0;
  double p_B = 0;
  double p_single = 0;  // 1 / gap of one block
  std::size_t block_size = 0;
  std::size_t degree = 0;
  double derived_lower_bound = 0;
  double measured_lambda1 = 0;
  bool holds = false;
};

// Lower bound for lambda1 of the assembled graph from the averaging
// argument. For mean-zero g with T g its block means:
//   |g|^2 = |g - T g|^2 + |B| |T g|^2,
//   |g - T g|^2 <= p_single E(g),
//   |B| |T g|^2 <= |B| c_G^{-2} |L_G T g|^2,
//   |L_G T g|^2 <= d sum_v sum_{v'~v} |T g(v') - T g(v)|^2,
//   |T g(v') - T g(v)|^2 <= 2 |B|^{-1} p_B E_{vv'}(g),
//   sum_v sum_{v'~v} E_{vv'}(g) <= 2 d E(g).
inline GapBound propagation_bound(const BlockGraph &bg) {
  GapBound r;
  r.c_G = graph_gap(bg.base);
  r.p_B = poincare_constant(bg.mesh, bg.port_weight);
  r.p_single = bg.block_size() == 1 ? 0.0 : 1.0 / graph_gap(bg.mesh.graph);
  r.block_size = bg.block_size();
  r.degree = bg.degree;
  const double b = static_cast<double>(r.block_size);
  const double d = static_cast<double>(r.degree);
  const double averaged = b * (1.0 / (r.c_G * r.c_G)) * d *
                          (2.0 / b) * r.p_B * (2.0 * d);
  r.derived_lower_bound = 1.0 / (r.p_single + averaged);
  r.measured_lambda1 = graph_gap(bg.assembled);
  r.holds = r.measured_lambda1 >= r.derived_lower_bound;
  return r;
}

// Uniform simple connected d-regular graph from the pairing model, retried
// until simple and connected.
inline Graph random_regular_graph(std::size_t n, std::size_t d,
                                  std::uint64_t seed,
                                  std::size_t max_attempts = 100000) {
  if ((n * d) % 2 != 0 || d >= n)
    throw PreconditionError("no simple d-regular graph on n vertices");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> points(n * d);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = i / d;
    std::shuffle(points.begin(), points.end(), rng);
    Graph g{n, {}};
    std::set<std::pair<std::size_t, std::size_t>> seen;
    bool ok = true;
    for (std::size_t i = 0; i < points.size() && ok; i += 2) {
      std::size_t a = points[i], b = points[i + 1];
      if (a == b || !seen.insert(std::minmax(a, b)).second) ok = false;
      else g.edges.push_back({std::min(a, b), std::max(a, b), 1.0});
    }
    if (!ok || !g.connected()) continue;
    std::sort(g.edges.begin(), g.edges.end(),
              [](const WeightedEdge &x, const WeightedEdge &y) {
                return std::tie(x.u, x.v) < std::tie(y.u, y.v);
              });
    return g;
  }
  throw PreconditionError("random regular graph: no simple connected sample");
}

// K_m with every vertex a port.
inline Mesh complete_mesh(std::size_t m) {
  Mesh mesh{complete_graph(m), {}};
  for (std::size_t i = 0; i < m; ++i) mesh.ports.push_back(i);
  return mesh;
}

// K_m with every vertex a port, plus one interior vertex hanging off vertex 0
// by an edge of the given weight.
inline Mesh tailed_mesh(std::size_t m, double tail_weight) {
  if (m < 1 || tail_weight <= 0)
    throw PreconditionError("tailed mesh needs m >= 1 and a positive tail");
  Mesh mesh = complete_mesh(m);
  mesh.graph.n = m + 1;
  mesh.graph.add_edge(0, m, tail_weight);
  return mesh;
}

} // namespace torgap
