/**
 * @file model.hpp
 * @brief A small mixed-integer linear model container with an LP-format
 * writer. Rows are sparse; variables carry bounds, a type and an optional
 * branching priority.
 */

#ifndef PREFEL_MILP_MODEL_HPP
#define PREFEL_MILP_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefel::milp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VarType { Continuous, Binary, Integer };
enum class RowSense { LessEqual, GreaterEqual, Equal };
enum class ObjectiveSense { Minimize, Maximize };

struct Variable {
  std::string name;
  VarType type = VarType::Continuous;
  double lower = 0.0;
  double upper = kInfinity;
  /// Higher values are branched on first.
  int branch_priority = 0;

  [[nodiscard]] bool is_integer() const { return type != VarType::Continuous; }
};

struct Term {
  int var;
  double coef;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

class MilpModel {
 public:
  int add_variable(std::string name, VarType type, double lower, double upper, int priority = 0) {
    if (type == VarType::Binary) {
      lower = std::max(lower, 0.0);
      upper = std::min(upper, 1.0);
    }
    if (lower > upper) throw std::invalid_argument("variable " + name + " has empty domain");
    vars_.push_back(Variable{std::move(name), type, lower, upper, priority});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_binary(std::string name, int priority = 0) {
    return add_variable(std::move(name), VarType::Binary, 0.0, 1.0, priority);
  }

  int add_continuous(std::string name, double lower, double upper) {
    return add_variable(std::move(name), VarType::Continuous, lower, upper);
  }

  /// Duplicate variables in `terms` are merged; zero coefficients dropped.
  int add_constraint(std::string name, std::vector<Term> terms, RowSense sense, double rhs) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(terms.size());
    for (const Term& t : terms) {
      if (t.var < 0 || t.var >= num_variables()) {
        throw std::out_of_range("constraint " + name + " references unknown variable");
      }
      if (!merged.empty() && merged.back().var == t.var) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    rows_.push_back(Constraint{std::move(name), std::move(merged), sense, rhs});
    return static_cast<int>(rows_.size()) - 1;
  }

  void set_objective(ObjectiveSense sense, const std::vector<Term>& terms, double constant = 0.0) {
    sense_ = sense;
    std::fill(objective_.begin(), objective_.end(), 0.0);
    for (const Term& t : terms) objective_.at(static_cast<std::size_t>(t.var)) += t.coef;
    objective_constant_ = constant;
  }

  [[nodiscard]] int num_variables() const { return static_cast<int>(vars_.size()); }
  [[nodiscard]] int num_constraints() const { return static_cast<int>(rows_.size()); }
  [[nodiscard]] const std::vector<Variable>& variables() const { return vars_; }
  [[nodiscard]] const std::vector<Constraint>& constraints() const { return rows_; }
  [[nodiscard]] const std::vector<double>& objective() const { return objective_; }
  [[nodiscard]] double objective_constant() const { return objective_constant_; }
  [[nodiscard]] ObjectiveSense sense() const { return sense_; }

  [[nodiscard]] int count(VarType type) const {
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(),
                                          [type](const Variable& v) { return v.type == type; }));
  }

  [[nodiscard]] double evaluate_objective(const std::vector<double>& values) const {
    double z = objective_constant_;
    for (std::size_t j = 0; j < vars_.size(); ++j) z += objective_[j] * values[j];
    return z;
  }

  [[nodiscard]] double row_activity(int row, const std::vector<double>& values) const {
    double a = 0.0;
    for (const Term& t : rows_[static_cast<std::size_t>(row)].terms) {
      a += t.coef * values[static_cast<std::size_t>(t.var)];
    }
    return a;
  }

  /// Largest bound, row or integrality violation of an assignment.
  [[nodiscard]] double max_violation(const std::vector<double>& values) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      const double v = values[j];
      worst = std::max({worst, vars_[j].lower - v, v - vars_[j].upper});
      if (vars_[j].is_integer()) worst = std::max(worst, std::abs(v - std::round(v)));
    }
    for (int i = 0; i < num_constraints(); ++i) {
      const double a = row_activity(i, values);
      const Constraint& c = rows_[static_cast<std::size_t>(i)];
      switch (c.sense) {
        case RowSense::LessEqual: worst = std::max(worst, a - c.rhs); break;
        case RowSense::GreaterEqual: worst = std::max(worst, c.rhs - a); break;
        case RowSense::Equal: worst = std::max(worst, std::abs(a - c.rhs)); break;
      }
    }
    return worst;
  }

  /// CPLEX LP text format.
  [[nodiscard]] std::string to_lp_format(const std::string& title = "prefel") const {
    std::ostringstream os;
    os << "\\ " << title << "\n";
    os << (sense_ == ObjectiveSense::Maximize ? "Maximize\n" : "Minimize\n");
    os << " obj:";
    bool any = false;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (objective_[j] != 0.0) {
        os << ' ' << signed_number(objective_[j]) << ' ' << vars_[j].name;
        any = true;
      }
    }
    if (objective_constant_ != 0.0 || !any) os << ' ' << signed_number(objective_constant_);
    os << "\nSubject To\n";
    for (const Constraint& c : rows_) {
      os << ' ' << c.name << ':';
      if (c.terms.empty()) os << " 0 " << vars_.front().name;
      for (const Term& t : c.terms) {
        os << ' ' << signed_number(t.coef) << ' ' << vars_[static_cast<std::size_t>(t.var)].name;
      }
      os << (c.sense == RowSense::LessEqual ? " <= " : c.sense == RowSense::GreaterEqual ? " >= " : " = ")
         << number(c.rhs) << '\n';
    }
    os << "Bounds\n";
    for (const Variable& v : vars_) {
      if (v.type == VarType::Binary) continue;
      if (std::isinf(v.lower) && std::isinf(v.upper)) {
        os << ' ' << v.name << " free\n";
      } else {
        os << ' ' << (std::isinf(v.lower) ? std::string("-inf") : number(v.lower)) << " <= " << v.name
           << " <= " << (std::isinf(v.upper) ? std::string("+inf") : number(v.upper)) << '\n';
      }
    }
    auto section = [&](VarType type, const char* header) {
      if (count(type) == 0) return;
      os << header << '\n';
      for (const Variable& v : vars_) {
        if (v.type == type) os << ' ' << v.name << '\n';
      }
    };
    section(VarType::Binary, "Binaries");
    section(VarType::Integer, "Generals");
    os << "End\n";
    return os.str();
  }

 private:
  static std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static std::string signed_number(double v) { return (v < 0 ? "- " : "+ ") + number(std::abs(v)); }

  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
  ObjectiveSense sense_ = ObjectiveSense::Minimize;
};

}  // namespace prefel::milp

#endif  // PREFEL_MILP_MODEL_HPP
