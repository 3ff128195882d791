#pragma once

// Toy 1-D version of the coupled transport / Poisson solver used as the demo
// workload: mesh split, Laplacian assembly, tridiagonal solve, per-partition
// initialisation and explicit upwind/diffusion/source updates with one halo
// cell per side. Every kernel uses the same per-cell expressions as the
// single-process oracle, so results are bitwise independent of partitioning.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pubflow/kernels.hpp"

namespace pubflow::adapt {

enum class Boundary { Periodic, Dirichlet0 };

inline const char* to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "dirichlet0"; }

inline Boundary parse_boundary(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "dirichlet0") return Boundary::Dirichlet0;
  throw InvalidParams("unknown boundary condition '" + s + "'");
}

struct SimParams {
  double dt = 0.005;
  double a = 1.0;   // advection speed, >= 0
  double nu = 0.01; // diffusion coefficient, >= 0
  int N = 10;
  Boundary bc = Boundary::Dirichlet0;
  std::vector<double> Q;  // Poisson right-hand side; empty means zero
};

inline double cell_width(int M) { return 1.0 / M; }

/// Explicit-scheme stability: dt * (a/h + 2 nu/h^2) <= 1.
inline void check_cfl(const SimParams& p, int M) {
  if (p.dt <= 0 || p.a < 0 || p.nu < 0) throw InvalidParams("need dt > 0, a >= 0, nu >= 0");
  const double h = cell_width(M);
  const double courant = p.dt * (p.a / h + 2.0 * p.nu / (h * h));
  if (courant > 1.0 + 1e-12) throw InvalidParams("CFL bound violated: " + std::to_string(courant) + " > 1");
}

/// Default right-hand side: constant 1 for homogeneous Dirichlet, a
/// zero-mean cosine for periodic boundaries.
inline std::vector<double> default_source(int M, Boundary bc) {
  std::vector<double> q(static_cast<std::size_t>(M), 1.0);
  if (bc == Boundary::Periodic) {
    const double h = cell_width(M);
    for (int i = 0; i < M; ++i) q[static_cast<std::size_t>(i)] = std::cos(2.0 * std::numbers::pi * (i + 0.5) * h);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Partitioning

struct CellRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool operator==(const CellRange&) const = default;
};

/// Contiguous near-equal split; the first M mod P ranges get one extra cell.
/// Every range needs at least two cells.
inline std::vector<CellRange> partition_cells(int M, int P) {
  if (P < 1 || M < 2 * P)
    throw InvalidGeometry("need M >= 2P (M=" + std::to_string(M) + ", P=" + std::to_string(P) + ")");
  std::vector<CellRange> out;
  const int base = M / P, extra = M % P;
  int at = 0;
  for (int p = 0; p < P; ++p) {
    int n = base + (p < extra ? 1 : 0);
    out.push_back({at, at + n});
    at += n;
  }
  return out;
}

inline std::vector<double> encode_partitions(const std::vector<CellRange>& parts) {
  std::vector<double> flat;
  for (const auto& r : parts) {
    flat.push_back(r.begin);
    flat.push_back(r.end);
  }
  return flat;
}

inline std::vector<CellRange> decode_partitions(std::span<const double> flat) {
  if (flat.size() % 2 != 0) throw FormatError("partition table has odd length");
  std::vector<CellRange> out;
  for (std::size_t i = 0; i < flat.size(); i += 2)
    out.push_back({static_cast<int>(flat[i]), static_cast<int>(flat[i + 1])});
  return out;
}

/// Neighbouring partition index, or nullopt at a Dirichlet boundary.
inline std::optional<int> neighbour(int p, int offset, int P, Boundary bc) {
  int q = p + offset;
  if (q >= 0 && q < P) return q;
  if (bc == Boundary::Dirichlet0) return std::nullopt;
  return (q + P) % P;
}

// ---------------------------------------------------------------------------
// Poisson operator and direct solve

/// Tridiagonal storage. For periodic boundaries lower[0] couples cell 0 to
/// cell M-1 and upper[M-1] couples cell M-1 to cell 0.
struct TridiagonalOperator {
  Boundary bc = Boundary::Dirichlet0;
  std::vector<double> lower, diag, upper;

  std::size_t size() const { return diag.size(); }

  double entry(std::size_t i, std::size_t j) const {
    const std::size_t n = size();
    double v = 0.0;
    if (i == j) v += diag[i];
    if (j + 1 == i || (bc == Boundary::Periodic && i == 0 && j == n - 1)) v += lower[i];
    if (i + 1 == j || (bc == Boundary::Periodic && i == n - 1 && j == 0)) v += upper[i];
    return v;
  }
};

/// 1-D Laplacian: 2/h^2 on the diagonal, -1/h^2 off it.
inline TridiagonalOperator build_laplacian(int M, Boundary bc) {
  if (M < 2) throw InvalidGeometry("Laplacian needs M >= 2");
  const double inv_h2 = static_cast<double>(M) * static_cast<double>(M);
  const auto n = static_cast<std::size_t>(M);
  TridiagonalOperator op{bc, std::vector<double>(n, -inv_h2), std::vector<double>(n, 2.0 * inv_h2),
                         std::vector<double>(n, -inv_h2)};
  if (bc == Boundary::Dirichlet0) {
    op.lower[0] = 0.0;
    op.upper[n - 1] = 0.0;
  }
  return op;
}

inline std::vector<double> apply(const TridiagonalOperator& op, std::span<const double> x) {
  const std::size_t n = op.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double left = i > 0 ? x[i - 1] : (op.bc == Boundary::Periodic ? x[n - 1] : 0.0);
    double right = i + 1 < n ? x[i + 1] : (op.bc == Boundary::Periodic ? x[0] : 0.0);
    y[i] = op.lower[i] * left + op.diag[i] * x[i] + op.upper[i] * right;
  }
  return y;
}

inline std::vector<double> encode_operator(const TridiagonalOperator& op) {
  std::vector<double> flat{op.bc == Boundary::Periodic ? 1.0 : 0.0};
  flat.insert(flat.end(), op.lower.begin(), op.lower.end());
  flat.insert(flat.end(), op.diag.begin(), op.diag.end());
  flat.insert(flat.end(), op.upper.begin(), op.upper.end());
  return flat;
}

inline TridiagonalOperator decode_operator(std::span<const double> flat) {
  if (flat.empty() || (flat.size() - 1) % 3 != 0) throw FormatError("operator dataset has bad length");
  const std::size_t n = (flat.size() - 1) / 3;
  TridiagonalOperator op;
  op.bc = flat[0] != 0.0 ? Boundary::Periodic : Boundary::Dirichlet0;
  op.lower.assign(flat.begin() + 1, flat.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  op.diag.assign(flat.begin() + 1 + static_cast<std::ptrdiff_t>(n), flat.begin() + 1 + static_cast<std::ptrdiff_t>(2 * n));
  op.upper.assign(flat.begin() + 1 + static_cast<std::ptrdiff_t>(2 * n), flat.end());
  return op;
}

/// Thomas-algorithm forward sweep. Periodic operators are singular; the
/// factor pins cell 0 to zero and eliminates the remaining unknowns.
struct TridiagonalFactor {
  bool pinned = false;
  std::vector<double> lower, denom, cprime;

  std::size_t size() const { return denom.size(); }
};

inline TridiagonalFactor factorize(const TridiagonalOperator& op) {
  const std::size_t n = op.size();
  TridiagonalFactor f{op.bc == Boundary::Periodic, op.lower, std::vector<double>(n, 0.0),
                      std::vector<double>(n, 0.0)};
  const std::size_t first = f.pinned ? 1 : 0;
  for (std::size_t i = first; i < n; ++i) {
    const double a = i == first ? 0.0 : op.lower[i];
    const double c = i + 1 == n ? 0.0 : op.upper[i];
    const double d = i == first ? op.diag[i] : op.diag[i] - a * f.cprime[i - 1];
    if (!(std::abs(d) > 1e-300)) throw SingularSystem("zero pivot at row " + std::to_string(i));
    f.denom[i] = d;
    f.cprime[i] = c / d;
  }
  return f;
}

inline std::vector<double> solve(const TridiagonalFactor& f, std::span<const double> rhs) {
  const std::size_t n = f.size();
  if (rhs.size() != n) throw InvalidParams("right-hand side has wrong length");
  if (f.pinned) {
    double sum = 0.0, scale = 0.0;
    for (double q : rhs) {
      sum += q;
      scale = std::max(scale, std::abs(q));
    }
    if (std::abs(sum) > 1e-12 * static_cast<double>(n) * scale)
      throw SingularSystem("periodic Poisson problem needs a zero-sum right-hand side");
  }
  const std::size_t first = f.pinned ? 1 : 0;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = first; i < n; ++i) {
    const double prev = i == first ? 0.0 : f.lower[i] * x[i - 1];
    x[i] = (rhs[i] - prev) / f.denom[i];
  }
  for (std::size_t i = n - 1; i > first; --i) x[i - 1] -= f.cprime[i - 1] * x[i];
  return x;
}

inline std::vector<double> poisson_solve(const TridiagonalOperator& op, std::span<const double> rhs) {
  return solve(factorize(op), rhs);
}

inline std::vector<double> encode_factor(const TridiagonalFactor& f) {
  std::vector<double> flat{f.pinned ? 1.0 : 0.0};
  flat.insert(flat.end(), f.lower.begin(), f.lower.end());
  flat.insert(flat.end(), f.denom.begin(), f.denom.end());
  flat.insert(flat.end(), f.cprime.begin(), f.cprime.end());
  return flat;
}

inline TridiagonalFactor decode_factor(std::span<const double> flat) {
  if (flat.empty() || (flat.size() - 1) % 3 != 0) throw FormatError("factor dataset has bad length");
  const auto n = static_cast<std::ptrdiff_t>((flat.size() - 1) / 3);
  TridiagonalFactor f;
  f.pinned = flat[0] != 0.0;
  f.lower.assign(flat.begin() + 1, flat.begin() + 1 + n);
  f.denom.assign(flat.begin() + 1 + n, flat.begin() + 1 + 2 * n);
  f.cprime.assign(flat.begin() + 1 + 2 * n, flat.end());
  return f;
}

// ---------------------------------------------------------------------------
// Transport update

inline double initial_value(int i, int M) {
  return std::sin(2.0 * std::numbers::pi * (i + 0.5) * cell_width(M));
}

inline std::vector<double> init_range(CellRange r, int M) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(r.size()));
  for (int i = r.begin; i < r.end; ++i) w.push_back(initial_value(i, M));
  return w;
}

/// One explicit step for one cell: upwind convection, central diffusion and
/// the potential as source term.
inline double update_cell(double w_left, double w, double w_right, double source, const SimParams& p, double h) {
  const double rez_conv = -p.a * (w - w_left) / h;
  const double rez_dissip = p.nu * (w_right - 2.0 * w + w_left) / (h * h);
  const double rez_source = source;
  return w + p.dt * (rez_conv + rez_dissip + rez_source);
}

/// Owned cells of one partition plus one halo value per side.
struct LocalBlock {
  int begin = 0;
  std::vector<double> cells;
  std::optional<double> left_halo;
  std::optional<double> right_halo;
};

inline std::vector<double> iterate_block(const LocalBlock& block, std::span<const double> pfield, const SimParams& p,
                                         int M) {
  if (!block.left_halo || !block.right_halo) throw HaloMissing("halo cell not populated");
  const double h = cell_width(M);
  const std::size_t n = block.cells.size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double wl = j == 0 ? *block.left_halo : block.cells[j - 1];
    const double wr = j + 1 == n ? *block.right_halo : block.cells[j + 1];
    out[j] = update_cell(wl, block.cells[j], wr, pfield[static_cast<std::size_t>(block.begin) + j], p, h);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single-process reference

struct MeshState {
  int M = 0;
  double h = 0.0;
  std::vector<double> W;
  std::vector<double> Pfield;
  std::vector<CellRange> partitions;
  static constexpr int halo_width = 1;
};

inline std::vector<double> source_or_zero(const SimParams& p, int M) {
  if (p.Q.empty()) return std::vector<double>(static_cast<std::size_t>(M), 0.0);
  if (static_cast<int>(p.Q.size()) != M) throw InvalidParams("source vector length must equal M");
  return p.Q;
}

/// Matrix, solve, initialisation and N steps in one process, with exactly the
/// per-cell arithmetic of the distributed kernels.
inline MeshState sequential_oracle_state(int M, const SimParams& p) {
  check_cfl(p, M);
  MeshState s;
  s.M = M;
  s.h = cell_width(M);
  s.partitions = {{0, M}};
  const auto q = source_or_zero(p, M);
  s.Pfield = poisson_solve(build_laplacian(M, p.bc), q);
  s.W = init_range({0, M}, M);
  const auto n = static_cast<std::size_t>(M);
  std::vector<double> next(n);
  for (int step = 0; step < p.N; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      const double wl = i > 0 ? s.W[i - 1] : (p.bc == Boundary::Periodic ? s.W[n - 1] : 0.0);
      const double wr = i + 1 < n ? s.W[i + 1] : (p.bc == Boundary::Periodic ? s.W[0] : 0.0);
      next[i] = update_cell(wl, s.W[i], wr, s.Pfield[i], p, s.h);
    }
    s.W.swap(next);
  }
  return s;
}

inline std::vector<double> sequential_oracle(int M, const SimParams& p) { return sequential_oracle_state(M, p).W; }

// ---------------------------------------------------------------------------
// Workflow kernels

inline std::string w_dataset(int generation, int p) { return "w." + std::to_string(generation) + "." + std::to_string(p); }
inline std::string save_dataset(int n) { return "save." + std::to_string(n); }

inline SimParams params_from_kernel(const KernelContext& ctx) {
  SimParams p;
  p.dt = ctx.param<double>("dt");
  p.a = ctx.param<double>("a");
  p.nu = ctx.param<double>("nu");
  p.bc = parse_boundary(ctx.param<std::string>("bc"));
  return p;
}

inline TridiagonalOperator operator_input(KernelContext& ctx) {
  if (!ctx.spec().inputs.empty()) return decode_operator(ctx.read(ctx.spec().inputs.front()));
  return build_laplacian(ctx.param<int>("M"), parse_boundary(ctx.param<std::string>("bc")));
}

inline void register_adapt_kernels(KernelRegistry& reg) {
  reg.add("metis", [](KernelContext& ctx) {
    ctx.write(ctx.spec().outputs.at(0), encode_partitions(partition_cells(ctx.param<int>("M"), ctx.param<int>("P"))));
    return 0;
  });

  reg.add("matrix", [](KernelContext& ctx) {
    auto op = build_laplacian(ctx.param<int>("M"), parse_boundary(ctx.param<std::string>("bc")));
    ctx.write(ctx.spec().outputs.at(0), encode_operator(op));
    return 0;
  });

  reg.add("init", [](KernelContext& ctx) {
    auto parts = decode_partitions(ctx.read(ctx.spec().inputs.at(0)));
    const int p = ctx.param<int>("p");
    if (p < 0 || p >= static_cast<int>(parts.size())) throw InvalidParams("partition index out of range");
    ctx.write(ctx.spec().outputs.at(0), init_range(parts[static_cast<std::size_t>(p)], ctx.param<int>("M")));
    return 0;
  });

  reg.add("mumps", [](KernelContext& ctx) {
    auto q = ctx.param<std::vector<double>>("Q");
    ctx.write(ctx.spec().outputs.at(0), poisson_solve(operator_input(ctx), q));
    return 0;
  });

  reg.add("lu_factorize", [](KernelContext& ctx) {
    ctx.write(ctx.spec().outputs.at(0), encode_factor(factorize(operator_input(ctx))));
    return 0;
  });

  reg.add("lu_solve", [](KernelContext& ctx) {
    auto f = decode_factor(ctx.read(ctx.spec().inputs.at(0)));
    ctx.write(ctx.spec().outputs.at(0), solve(f, ctx.param<std::vector<double>>("Q")));
    return 0;
  });

  // params: M, p, dt, a, nu, bc, partitions, pfield, own, left, right
  // (left/right are null at a Dirichlet boundary)
  reg.add("iter", [](KernelContext& ctx) {
    const SimParams sp = params_from_kernel(ctx);
    const int M = ctx.param<int>("M");
    const int p = ctx.param<int>("p");
    auto parts = decode_partitions(ctx.read(ctx.param<std::string>("partitions")));
    auto pfield = ctx.read(ctx.param<std::string>("pfield"));
    LocalBlock block;
    block.begin = parts.at(static_cast<std::size_t>(p)).begin;
    block.cells = ctx.read(ctx.param<std::string>("own"));
    const Json& left = ctx.spec().params.at("left");
    const Json& right = ctx.spec().params.at("right");
    block.left_halo = left.is_null() ? 0.0 : ctx.read(left.get<std::string>()).back();
    block.right_halo = right.is_null() ? 0.0 : ctx.read(right.get<std::string>()).front();
    ctx.write(ctx.spec().outputs.at(0), iterate_block(block, pfield, sp, M));
    return 0;
  });

  // inputs: partition table followed by every block in partition order
  reg.add("save", [](KernelContext& ctx) {
    const auto& inputs = ctx.spec().inputs;
    auto parts = decode_partitions(ctx.read(inputs.at(0)));
    std::vector<double> full(static_cast<std::size_t>(ctx.param<int>("M")));
    for (std::size_t p = 0; p < parts.size(); ++p) {
      auto block = ctx.read(inputs.at(p + 1));
      if (static_cast<int>(block.size()) != parts[p].size()) throw FormatError("block size mismatch");
      std::copy(block.begin(), block.end(), full.begin() + parts[p].begin);
    }
    ctx.write(ctx.spec().outputs.at(0), full);
    return 0;
  });
}

inline KernelRegistry default_registry() {
  KernelRegistry reg;
  register_builtin_kernels(reg);
  register_adapt_kernels(reg);
  return reg;
}

// ---------------------------------------------------------------------------
// Workflow generation

enum class EdgeMode { Stencil, Barrier };
// Full adds the MATRIX and SAVE_n steps; Compact mirrors the four node kinds
// METIS / INIT / MUMPS / ITER only, with MUMPS assembling its own matrix.
enum class Layout { Full, Compact };

struct AdaptOptions {
  EdgeMode edges = EdgeMode::Stencil;
  Layout layout = Layout::Full;
};

inline std::string init_id(int p) { return "INIT_" + std::to_string(p); }
inline std::string iter_id(int n, int p) { return "ITER_" + std::to_string(n) + "_" + std::to_string(p); }
inline std::string save_id(int n) { return "SAVE_" + std::to_string(n); }

inline std::size_t adapt_task_count(int P, int N, Layout layout = Layout::Full) {
  const auto p = static_cast<std::size_t>(P), n = static_cast<std::size_t>(N);
  return layout == Layout::Full ? 2 + p + 1 + n * p + n : 1 + p + 1 + n * p;
}

inline WorkflowBatch generate_adapt_workflow(int P, int N, int M, const SimParams& params, AdaptOptions opt = {}) {
  if (P < 1 || N < 1) throw InvalidGeometry("need P >= 1 and N >= 1");
  const auto parts = partition_cells(M, P);
  check_cfl(params, M);
  const auto q = source_or_zero(params, M);
  const bool full = opt.layout == Layout::Full;
  const std::string bc = to_string(params.bc);

  WorkflowBatch b;
  b.batch_id = "adapt-P" + std::to_string(P) + "-N" + std::to_string(N) + "-M" + std::to_string(M);
  auto add = [&](Task t) { b.tasks.emplace(t.id, std::move(t)); };
  auto kernel = [](std::string name, Json p, std::vector<std::string> in, std::vector<std::string> out, double d) {
    return KernelSpec{std::move(name), std::move(p), std::move(in), std::move(out), d};
  };

  add({"METIS", kernel("metis", {{"M", M}, {"P", P}}, {}, {"partitions"}, 2.0), {}, {}, {}, {}, 3});
  if (full) add({"MATRIX", kernel("matrix", {{"M", M}, {"bc", bc}}, {}, {"operator"}, 1.0), {"METIS"}, {}, {}, {}, 3});
  std::set<TaskId> mumps_deps;
  if (full) mumps_deps.insert("MATRIX");
  for (int p = 0; p < P; ++p) {
    add({init_id(p), kernel("init", {{"M", M}, {"p", p}}, {"partitions"}, {w_dataset(0, p)}, 1.0), {"METIS"}, {}, {}, {}, 3});
    mumps_deps.insert(init_id(p));
  }
  Json mumps_params{{"Q", q}, {"M", M}, {"bc", bc}};
  add({"MUMPS", kernel("mumps", mumps_params, full ? std::vector<std::string>{"operator"} : std::vector<std::string>{},
                       {"pfield"}, 3.0),
       mumps_deps, {}, {}, {}, 3});

  for (int n = 0; n < N; ++n) {
    std::set<TaskId> save_deps;
    for (int p = 0; p < P; ++p) {
      auto left = neighbour(p, -1, P, params.bc);
      auto right = neighbour(p, +1, P, params.bc);
      std::set<TaskId> deps;
      if (n == 0) {
        deps.insert("MUMPS");
      } else if (opt.edges == EdgeMode::Barrier) {
        for (int r = 0; r < P; ++r) deps.insert(iter_id(n - 1, r));
      } else {
        deps.insert(iter_id(n - 1, p));
        if (left) deps.insert(iter_id(n - 1, *left));
        if (right) deps.insert(iter_id(n - 1, *right));
      }
      std::vector<std::string> inputs{"partitions", "pfield", w_dataset(n, p)};
      if (left && *left != p) inputs.push_back(w_dataset(n, *left));
      if (right && *right != p && right != left) inputs.push_back(w_dataset(n, *right));
      Json kp{{"M", M},          {"p", p},        {"dt", params.dt},       {"a", params.a},
              {"nu", params.nu}, {"bc", bc},      {"partitions", "partitions"}, {"pfield", "pfield"},
              {"own", w_dataset(n, p)},
              {"left", left ? Json(w_dataset(n, *left)) : Json(nullptr)},
              {"right", right ? Json(w_dataset(n, *right)) : Json(nullptr)}};
      add({iter_id(n, p), kernel("iter", kp, inputs, {w_dataset(n + 1, p)}, 2.0), deps, {}, {}, {}, 3});
      save_deps.insert(iter_id(n, p));
    }
    if (full) {
      std::vector<std::string> inputs{"partitions"};
      for (int p = 0; p < P; ++p) inputs.push_back(w_dataset(n + 1, p));
      add({save_id(n), kernel("save", {{"M", M}}, inputs, {save_dataset(n)}, 1.0), save_deps, {}, {}, {}, 3});
    }
  }

  b.metadata = Json{{"generator", "adapt"},
                    {"P", P},
                    {"N", N},
                    {"M", M},
                    {"edges", opt.edges == EdgeMode::Stencil ? "stencil" : "barrier"},
                    {"layout", full ? "full" : "compact"}};
  if (!is_series_parallel(b.tasks)) b.metadata["general_dag"] = true;
  return b;
}

/// Attaches a rule splitting MUMPS into a factorize -> solve chain. The body
/// carries the MUMPS parameters verbatim; rules are flat, nothing is
/// inherited at unfold time.
inline WorkflowBatch with_mumps_unfold(WorkflowBatch b, int min_workers = 1) {
  Task& mumps = b.tasks.at("MUMPS");
  UnfoldRule rule;
  rule.rule_id = "mumps_split";
  rule.head = "mumps";
  rule.guard.min_workers = min_workers;
  Task fact{"factorize",
            KernelSpec{"lu_factorize", mumps.kernel.params, mumps.kernel.inputs, {"operator.lu"}, 2.0},
            {}, {}, {}, {}, mumps.max_attempts};
  Task sol{"solve", KernelSpec{"lu_solve", mumps.kernel.params, {"operator.lu"}, mumps.kernel.outputs, 1.0},
           {"factorize"}, {}, {}, {}, mumps.max_attempts};
  rule.body.emplace(fact.id, fact);
  rule.body.emplace(sol.id, sol);
  rule.entry = {"factorize"};
  rule.exit = {"solve"};
  validate_rule(rule);
  mumps.unfold_rule = rule.rule_id;
  b.rules[rule.rule_id] = std::move(rule);
  return b;
}

/// Final transported field of a finished run, read back from the workspace.
inline std::vector<double> final_field(const Workspace& ws, const WorkflowBatch& b) {
  const int P = b.metadata.at("P").get<int>(), N = b.metadata.at("N").get<int>(), M = b.metadata.at("M").get<int>();
  if (b.metadata.at("layout") == "full") return ws.get_array(save_dataset(N - 1));
  auto parts = partition_cells(M, P);
  std::vector<double> full(static_cast<std::size_t>(M));
  for (int p = 0; p < P; ++p) {
    auto block = ws.get_array(w_dataset(N, p));
    std::copy(block.begin(), block.end(), full.begin() + parts[static_cast<std::size_t>(p)].begin);
  }
  return full;
}

}  // namespace pubflow::adapt
