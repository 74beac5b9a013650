/**
 * @file instance_io.hpp
 * @brief JSON reading and writing of problem instances.
 *
 * Knapsack:
 *   {"kind":"mkp","n":3,"p":12,"utilities":[[...p], ...n],
 *    "item_weights":[...p],"capacity":40,"seed":7}
 * Allocation:
 *   {"kind":"map","n":3,"m":6,"r":2,"b":4,"costs":[[...m*r], ...n],"seed":7}
 *
 * Cost rows are the agent-by-resource matrix flattened row-major
 * (index i*r + j). "seed" and "criteria_names" are optional. Doubles are
 * written with full round-trip precision.
 */

#ifndef PREFEL_INSTANCE_IO_HPP
#define PREFEL_INSTANCE_IO_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "prefel/problems.hpp"

namespace prefel {

class InstanceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json instance_to_json(const ProblemInstance& instance) {
  nlohmann::json j;
  if (instance.is_knapsack()) {
    const auto& k = instance.knapsack();
    j["kind"] = "mkp";
    j["n"] = k.n;
    j["p"] = k.p;
    j["utilities"] = k.utilities;
    j["item_weights"] = k.item_weights;
    j["capacity"] = k.capacity;
  } else {
    const auto& a = instance.allocation();
    j["kind"] = "map";
    j["n"] = a.n;
    j["m"] = a.m;
    j["r"] = a.r;
    j["b"] = a.bound;
    j["costs"] = a.costs;
  }
  if (auto s = instance.seed()) j["seed"] = *s;
  if (!instance.criteria_names().empty()) j["criteria_names"] = instance.criteria_names();
  return j;
}

/// Throws InstanceFormatError on missing or mistyped fields and
/// ContractError on shape or range violations.
inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && !j["seed"].is_null()) seed = j["seed"].get<std::uint64_t>();
    std::vector<std::string> names;
    if (j.contains("criteria_names")) names = j["criteria_names"].get<std::vector<std::string>>();
    if (kind == "mkp") {
      KnapsackInstance k;
      k.n = j.at("n").get<int>();
      k.p = j.at("p").get<int>();
      k.utilities = j.at("utilities").get<std::vector<std::vector<double>>>();
      k.item_weights = j.at("item_weights").get<std::vector<int>>();
      k.capacity = j.at("capacity").get<int>();
      k.seed = seed;
      k.criteria_names = std::move(names);
      if (!k.criteria_names.empty() && static_cast<int>(k.criteria_names.size()) != k.n) {
        throw ContractError("criteria_names must have n entries");
      }
      return ProblemInstance(std::move(k));
    }
    if (kind == "map") {
      AllocationInstance a;
      a.n = j.at("n").get<int>();
      a.m = j.at("m").get<int>();
      a.r = j.at("r").get<int>();
      a.bound = j.at("b").get<int>();
      a.costs = j.at("costs").get<std::vector<std::vector<double>>>();
      a.seed = seed;
      a.criteria_names = std::move(names);
      if (!a.criteria_names.empty() && static_cast<int>(a.criteria_names.size()) != a.n) {
        throw ContractError("criteria_names must have n entries");
      }
      return ProblemInstance(std::move(a));
    }
    throw InstanceFormatError("unknown instance kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InstanceFormatError(std::string("malformed instance: ") + e.what());
  }
}

inline std::string instance_to_string(const ProblemInstance& instance) {
  return instance_to_json(instance).dump(2) + "\n";
}

inline ProblemInstance instance_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InstanceFormatError(std::string("instance is not valid JSON: ") + e.what());
  }
  return instance_from_json(j);
}

inline void save_instance(const ProblemInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open '" + path + "' for writing");
  out << instance_to_string(instance);
  if (!out) throw std::ios_base::failure("write to '" + path + "' failed");
}

inline ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_string(buf.str());
}

}  // namespace prefel

#endif  // PREFEL_INSTANCE_IO_HPP
