#pragma once

#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "pubflow/dlc.hpp"
#include "pubflow/em.hpp"
#include "pubflow/workflow_io.hpp"
#include "pubflow/workspace.hpp"

namespace pubflow {

/// What a kernel sees while running: its spec, the run's dataset store and
/// the negotiated execution model of the hosting worker.
class KernelContext {
 public:
  KernelContext(const KernelSpec& spec, Workspace& ws, const EMConfig& em) : spec_(spec), ws_(ws), em_(em) {}

  const KernelSpec& spec() const { return spec_; }
  const EMConfig& em() const { return em_; }
  Workspace& workspace() { return ws_; }

  std::vector<double> read(const std::string& id) const { return ws_.get_array(id); }

  // Outputs carry the producing kernel as acquisition parameters so the DLC
  // policy can regenerate them.
  Checksum write(const std::string& id, std::span<const double> values) {
    return ws_.put_array(id, values, Json{{"kernel", kernel_to_json(spec_)}});
  }

  template <class T>
  T param(const char* key) const {
    auto it = spec_.params.find(key);
    if (it == spec_.params.end()) throw InvalidParams("kernel '" + spec_.name + "' needs param '" + key + "'");
    try {
      return it->template get<T>();
    } catch (const Json::exception&) {
      throw InvalidParams("kernel '" + spec_.name + "' param '" + key + "' has the wrong type");
    }
  }

  template <class T>
  T param_or(const char* key, T fallback) const {
    return spec_.params.contains(key) ? param<T>(key) : fallback;
  }

 private:
  const KernelSpec& spec_;
  Workspace& ws_;
  const EMConfig& em_;
};

/// A kernel returns its exit status. Throwing MissingInput signals an absent
/// input; any other pubflow::Error is reported as a nonzero exit.
using KernelFn = std::function<int(KernelContext&)>;

class KernelRegistry {
 public:
  void add(std::string name, KernelFn fn) { kernels_[std::move(name)] = std::move(fn); }
  bool contains(const std::string& name) const { return kernels_.contains(name); }
  const KernelFn& at(const std::string& name) const {
    auto it = kernels_.find(name);
    if (it == kernels_.end()) throw UnknownKernel("no kernel registered as '" + name + "'");
    return it->second;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : kernels_) out.push_back(n);
    return out;
  }

 private:
  std::map<std::string, KernelFn> kernels_;
};

struct OutputRecord {
  std::string dataset_id;
  Checksum checksum = 0;

  bool operator==(const OutputRecord&) const = default;
};

struct TaskResult {
  int exit_status = 0;
  std::vector<OutputRecord> outputs;
  double elapsed = 0.0;
  std::string message;
};

inline Json outputs_to_json(const std::vector<OutputRecord>& outs) {
  Json a = Json::array();
  for (const auto& o : outs) a.push_back(Json{{"dataset_id", o.dataset_id}, {"checksum", checksum_hex(o.checksum)}});
  return a;
}

inline std::vector<OutputRecord> outputs_from_json(const Json& a) {
  std::vector<OutputRecord> out;
  for (const auto& o : a)
    out.push_back({o.at("dataset_id").get<std::string>(), parse_checksum_hex(o.at("checksum").get<std::string>())});
  return out;
}

/// Runs `spec` against the workspace. Inputs must be ready (MissingInput
/// otherwise); kernel failures come back as a nonzero exit status. `speed`
/// scales the simulated cost.
inline TaskResult execute_kernel(const KernelRegistry& registry, const KernelSpec& spec, Workspace& ws,
                                 const EMConfig& em, double speed = 1.0) {
  const KernelFn& fn = registry.at(spec.name);
  for (const auto& in : spec.inputs)
    if (!ws.ready(in)) throw MissingInput("kernel '" + spec.name + "' input '" + in + "' is not ready");

  TaskResult r;
  r.elapsed = spec.declared_duration / speed;
  KernelContext ctx(spec, ws, em);
  try {
    r.exit_status = fn(ctx);
  } catch (const MissingInput&) {
    throw;
  } catch (const Error& e) {
    r.exit_status = 1;
    r.message = e.what();
  }
  if (r.exit_status != 0) return r;
  for (const auto& out : spec.outputs) {
    auto rec = ws.record(out);
    if (rec.checksum) r.outputs.push_back({out, *rec.checksum});
  }
  return r;
}

/// Regenerates a dataset by re-running the kernel recorded in its acquisition
/// parameters.
inline Reacquirer kernel_reacquirer(std::shared_ptr<const KernelRegistry> registry) {
  return [registry](const std::string& dataset_id, const Json& params, Workspace& ws) {
    if (!params.contains("kernel")) throw InvalidStage("dataset '" + dataset_id + "' has no acquisition kernel");
    KernelSpec spec = kernel_from_json(params["kernel"], "reacquire " + dataset_id);
    EMConfig em;
    auto r = execute_kernel(*registry, spec, ws, em);
    if (r.exit_status != 0) throw InvalidStage("reacquisition of '" + dataset_id + "' failed: " + r.message);
  };
}

// ---------------------------------------------------------------------------
// General-purpose kernels

inline void register_builtin_kernels(KernelRegistry& reg) {
  reg.add("noop", [](KernelContext&) { return 0; });

  reg.add("fail", [](KernelContext& ctx) { return ctx.param_or<int>("exit_status", 1); });

  // Writes params.values (default [1.0]) to every declared output.
  reg.add("const", [](KernelContext& ctx) {
    auto values = ctx.param_or<std::vector<double>>("values", {1.0});
    for (const auto& out : ctx.spec().outputs) ctx.write(out, values);
    return 0;
  });

  // One-element output holding the sum of every input element plus params.add.
  reg.add("sum", [](KernelContext& ctx) {
    double total = ctx.param_or<double>("add", 0.0);
    for (const auto& in : ctx.spec().inputs) {
      auto v = ctx.read(in);
      total = std::accumulate(v.begin(), v.end(), total);
    }
    std::vector<double> one{total};
    for (const auto& out : ctx.spec().outputs) ctx.write(out, one);
    return 0;
  });

  // Live-mode adapter around a shell command; not used by the simulator.
  reg.add("shell", [](KernelContext& ctx) {
    auto cmd = ctx.param<std::string>("command");
    int rc = std::system(cmd.c_str());
    if (rc == -1) return 127;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : 128;
  });
}

}  // namespace pubflow
