#ifndef PREFEL_MILP_FACTORY_HPP
#define PREFEL_MILP_FACTORY_HPP

#include <memory>
#include <string>

#include "prefel/core.hpp"
#include "prefel/milp/branch_and_bound.hpp"
#include "prefel/milp/highs_backend.hpp"

namespace prefel::milp {

/// "bnb" (built in) or "highs" (needs the shared library at run time).
inline std::unique_ptr<MilpBackend> make_backend(const std::string& name) {
  if (name == "bnb") return std::make_unique<BranchAndBound>();
  if (name == "highs") return std::make_unique<HighsBackend>();
  throw ContractError("unknown MILP backend '" + name + "' (expected bnb or highs)");
}

}  // namespace prefel::milp

#endif  // PREFEL_MILP_FACTORY_HPP
