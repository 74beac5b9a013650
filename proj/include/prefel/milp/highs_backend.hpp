/**
 * @file highs_backend.hpp
 * @brief Adapter to the HiGHS MILP solver, loaded at run time through its C
 * API so that nothing links against HiGHS at build time.
 *
 * An explicit path is the only candidate when given. Otherwise the shared
 * library is looked up in this order: the PREFEL_HIGHS_LIBRARY environment
 * variable, the path CMake found at configure time
 * (PREFEL_HIGHS_DEFAULT_PATH), then the loader's search path.
 * Branching priorities have no C API counterpart and are ignored.
 */

#ifndef PREFEL_MILP_HIGHS_BACKEND_HPP
#define PREFEL_MILP_HIGHS_BACKEND_HPP

#include <dlfcn.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefel/milp/backend.hpp"
#include "prefel/milp/model.hpp"

namespace prefel::milp {

class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The subset of the HiGHS C API the adapter needs. HighsInt must be 32 bit.
class HighsLibrary {
 public:
  using HInt = std::int32_t;

  static std::shared_ptr<const HighsLibrary> load(const std::string& explicit_path = {}) {
    std::vector<std::string> candidates;
    if (!explicit_path.empty()) {
      candidates.push_back(explicit_path);
    } else {
      if (const char* env = std::getenv("PREFEL_HIGHS_LIBRARY"); env != nullptr && *env != '\0') {
        candidates.emplace_back(env);
      }
#ifdef PREFEL_HIGHS_DEFAULT_PATH
      candidates.emplace_back(PREFEL_HIGHS_DEFAULT_PATH);
#endif
      candidates.emplace_back("libhighs.so");
      candidates.emplace_back("libhighs.so.1");
    }
    std::string errors;
    for (const auto& path : candidates) {
      void* handle = ::dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
      if (handle == nullptr) {
        const char* e = ::dlerror();
        errors += "\n  " + path + ": " + (e != nullptr ? e : "not found");
        continue;
      }
      return std::shared_ptr<const HighsLibrary>(new HighsLibrary(handle));
    }
    throw BackendUnavailable("HiGHS shared library not found:" + errors);
  }

  HighsLibrary(const HighsLibrary&) = delete;
  HighsLibrary& operator=(const HighsLibrary&) = delete;
  ~HighsLibrary() { ::dlclose(handle_); }

  void* (*create)();
  void (*destroy)(void*);
  HInt (*pass_mip)(void*, HInt, HInt, HInt, HInt, HInt, double, const double*, const double*, const double*,
                   const double*, const double*, const HInt*, const HInt*, const double*, const HInt*);
  HInt (*run)(void*);
  HInt (*model_status)(const void*);
  double (*objective_value)(const void*);
  HInt (*get_solution)(const void*, double*, double*, double*, double*);
  HInt (*set_solution)(void*, const double*, const double*, const double*, const double*);
  HInt (*set_bool_option)(void*, const char*, HInt);
  HInt (*set_double_option)(void*, const char*, double);
  HInt (*get_int64_info)(const void*, const char*, std::int64_t*);
  double (*infinity)(const void*);

 private:
  explicit HighsLibrary(void* handle) : handle_(handle) {
    try {
      bind(create, "Highs_create");
      bind(destroy, "Highs_destroy");
      bind(pass_mip, "Highs_passMip");
      bind(run, "Highs_run");
      bind(model_status, "Highs_getModelStatus");
      bind(objective_value, "Highs_getObjectiveValue");
      bind(get_solution, "Highs_getSolution");
      bind(set_solution, "Highs_setSolution");
      bind(set_bool_option, "Highs_setBoolOptionValue");
      bind(set_double_option, "Highs_setDoubleOptionValue");
      bind(get_int64_info, "Highs_getInt64InfoValue");
      bind(infinity, "Highs_getInfinity");
      HInt (*sizeof_int)(const void*) = nullptr;
      bind(sizeof_int, "Highs_getSizeofHighsInt");
      void* probe = create();
      const HInt width = sizeof_int(probe);
      destroy(probe);
      if (width != sizeof(HInt)) throw BackendUnavailable("HiGHS built with 64-bit HighsInt is not supported");
    } catch (...) {
      ::dlclose(handle_);
      throw;
    }
  }

  template <class F>
  void bind(F& fn, const char* symbol) {
    void* p = ::dlsym(handle_, symbol);
    if (p == nullptr) throw BackendUnavailable(std::string("HiGHS library lacks ") + symbol);
    fn = reinterpret_cast<F>(p);
  }

  void* handle_;
};

class HighsBackend final : public MilpBackend {
 public:
  explicit HighsBackend(std::shared_ptr<const HighsLibrary> lib = HighsLibrary::load()) : lib_(std::move(lib)) {}

  [[nodiscard]] std::string name() const override { return "highs"; }
  [[nodiscard]] bool supports_warm_start() const override { return true; }

  MilpResult solve(const MilpModel& model, const SolveOptions& options) override {
    using HInt = HighsLibrary::HInt;
    std::unique_ptr<void, void (*)(void*)> h(lib_->create(), lib_->destroy);
    const double inf = lib_->infinity(h.get());
    auto clip = [inf](double v) { return std::isinf(v) ? std::copysign(inf, v) : v; };

    const int n = model.num_variables();
    const int m = model.num_constraints();
    std::vector<double> cost(model.objective()), lower(n), upper(n), row_lower(m), row_upper(m);
    std::vector<HInt> integrality(n);
    for (int j = 0; j < n; ++j) {
      const Variable& v = model.variables()[j];
      lower[j] = clip(v.lower);
      upper[j] = clip(v.upper);
      integrality[j] = v.is_integer() ? 1 : 0;
    }
    std::vector<HInt> start{0};
    std::vector<HInt> index;
    std::vector<double> value;
    for (int i = 0; i < m; ++i) {
      const Constraint& c = model.constraints()[i];
      row_lower[i] = c.sense == RowSense::LessEqual ? -inf : c.rhs;
      row_upper[i] = c.sense == RowSense::GreaterEqual ? inf : c.rhs;
      for (const Term& t : c.terms) {
        index.push_back(t.var);
        value.push_back(t.coef);
      }
      start.push_back(static_cast<HInt>(index.size()));
    }
    start.pop_back();  // HiGHS takes only the row starts

    lib_->set_bool_option(h.get(), "output_flag", 0);
    lib_->set_double_option(h.get(), "time_limit", options.time_limit_seconds);
    lib_->set_double_option(h.get(), "mip_rel_gap", 0.0);
    lib_->set_double_option(h.get(), "mip_abs_gap", 1e-10);
    constexpr HInt kRowwise = 2;
    const HInt sense = model.sense() == ObjectiveSense::Maximize ? -1 : 1;
    if (lib_->pass_mip(h.get(), n, m, static_cast<HInt>(index.size()), kRowwise, sense, model.objective_constant(),
                       cost.data(), lower.data(), upper.data(), row_lower.data(), row_upper.data(), start.data(),
                       index.data(), value.data(), integrality.data()) < 0) {
      return MilpResult{SolveStatus::Error, 0, {}, 0, "HiGHS rejected the model"};
    }
    if (options.warm_start && options.warm_start->size() == static_cast<std::size_t>(n)) {
      lib_->set_solution(h.get(), options.warm_start->data(), nullptr, nullptr, nullptr);
    }
    if (lib_->run(h.get()) < 0) return MilpResult{SolveStatus::Error, 0, {}, 0, "HiGHS run failed"};

    MilpResult r;
    std::int64_t nodes = 0;
    lib_->get_int64_info(h.get(), "mip_node_count", &nodes);
    r.nodes = nodes;
    const HInt status = lib_->model_status(h.get());
    switch (status) {
      case 7: r.status = SolveStatus::Optimal; break;
      case 8: r.status = SolveStatus::Infeasible; break;
      case 9:
      case 10: r.status = SolveStatus::Unbounded; break;
      case 13: r.status = SolveStatus::TimeLimit; break;
      default:
        r.status = SolveStatus::Error;
        r.message = "HiGHS model status " + std::to_string(status);
        break;
    }
    if (r.status == SolveStatus::Optimal || r.status == SolveStatus::TimeLimit) {
      std::vector<double> col(n), col_dual(n), row(m), row_dual(m);
      lib_->get_solution(h.get(), col.data(), col_dual.data(), row.data(), row_dual.data());
      for (int j = 0; j < n; ++j) {
        if (model.variables()[j].is_integer()) col[j] = std::round(col[j]);
      }
      r.values = std::move(col);
      r.objective = lib_->objective_value(h.get());
    }
    return r;
  }

 private:
  std::shared_ptr<const HighsLibrary> lib_;
};

}  // namespace prefel::milp

#endif  // PREFEL_MILP_HIGHS_BACKEND_HPP
