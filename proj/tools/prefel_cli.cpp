// Command-line driver: batch simulations, instance generation and scoring.
//
//   prefel run --problem mkp --instances 50 --n 5 --p 100 --sigma 0.02 --out results.csv
//   prefel gen-instance --problem map --n 3 --m 10 --r 3 --b 4 --seed 1 --out inst.json
//   prefel score --instance inst.json --hidden 0,1,0 --decision 0,1,1,0,...
//
// Exit codes: 0 success, 1 some instances failed, 2 usage or I/O error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "prefel/experiment.hpp"
#include "prefel/instance_io.hpp"

namespace {

constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

prefel::ProblemKind parse_problem(const std::string& s) {
  return s == "mkp" ? prefel::ProblemKind::Knapsack : prefel::ProblemKind::Allocation;
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    if (std::is_integral_v<T> && v != std::floor(v)) throw std::invalid_argument("not an integer: '" + item + "'");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

// results.csv with sigma 0.05 -> results_sigma0.05.csv
std::string per_sigma_path(const std::string& out, double sigma) {
  const std::filesystem::path p(out);
  char tag[32];
  std::snprintf(tag, sizeof tag, "_sigma%g", sigma);
  return (p.parent_path() / (p.stem().string() + tag + p.extension().string())).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian preference elicitation with minimax expected regret"};
  app.require_subcommand(1);

  // run
  prefel::BatchSpec spec;
  std::string problem = "mkp";
  std::vector<double> sigmas{0.0};
  std::string out_path;
  auto* run = app.add_subcommand("run", "Simulate elicitation sessions and write per-query scores as CSV");
  run->add_option("--problem", problem, "mkp or map")->check(CLI::IsMember({"mkp", "map"}));
  run->add_option("--instances", spec.instances, "Number of random instances")->check(CLI::PositiveNumber);
  run->add_option("--n", spec.n, "Criteria")->check(CLI::Range(2, 1000));
  run->add_option("--p", spec.p, "Knapsack items")->check(CLI::PositiveNumber);
  run->add_option("--m", spec.m, "Allocation agents")->check(CLI::PositiveNumber);
  run->add_option("--r", spec.r, "Allocation resources")->check(CLI::PositiveNumber);
  run->add_option("--b", spec.b, "Max agents per resource")->check(CLI::PositiveNumber);
  run->add_option("--sigma", sigmas, "Answer noise; several values run a sweep")->delimiter(',');
  run->add_option("--sample", spec.config.sample_size, "Weight sample size");
  run->add_option("--clusters", spec.config.cluster_count, "Cluster centers");
  run->add_option("--max-queries", spec.config.max_queries, "Query cap");
  run->add_option("--stop-frac", spec.config.stop_fraction, "Stop once MMER falls below this fraction of the first");
  run->add_option("--sigma-model", spec.config.sigma_model, "Noise assumed by the belief update (raw weight scale)");
  run->add_option("--seed", spec.seed, "Master seed");
  run->add_option("--workers", spec.workers, "Parallel sessions")->check(CLI::PositiveNumber);
  run->add_option("--backend", spec.backend, "MILP backend: bnb or highs")->check(CLI::IsMember({"bnb", "highs"}));
  run->add_option("--time-limit", spec.config.mmer.time_limit_seconds, "Per-MILP time limit in seconds");
  run->add_flag("--record-time", spec.record_time, "Fill the wall_time_ms column");
  run->add_option("--out", out_path, "CSV output path")->required();

  // gen-instance
  std::string gen_problem = "mkp";
  int gn = 3, gp = 30, gm = 10, gr = 3, gb = 4;
  std::uint64_t gseed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-instance", "Write a random instance as JSON");
  gen->add_option("--problem", gen_problem, "mkp or map")->check(CLI::IsMember({"mkp", "map"}));
  gen->add_option("--n", gn, "Criteria")->check(CLI::PositiveNumber);
  gen->add_option("--p", gp, "Knapsack items")->check(CLI::PositiveNumber);
  gen->add_option("--m", gm, "Allocation agents")->check(CLI::PositiveNumber);
  gen->add_option("--r", gr, "Allocation resources")->check(CLI::PositiveNumber);
  gen->add_option("--b", gb, "Max agents per resource")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gseed, "Seed");
  gen->add_option("--out", gen_out, "Output path")->required();

  // score
  std::string score_instance, hidden_text, decision_text, score_backend = "bnb";
  auto* sc = app.add_subcommand("score", "Score a decision against a hidden weight");
  sc->add_option("--instance", score_instance, "Instance JSON")->required();
  sc->add_option("--hidden", hidden_text, "Hidden weight, comma separated")->required();
  sc->add_option("--decision", decision_text, "Decision vector of 0/1, comma separated")->required();
  sc->add_option("--backend", score_backend, "MILP backend: bnb or highs")->check(CLI::IsMember({"bnb", "highs"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      spec.problem = parse_problem(problem);
      int status = 0;
      for (double sigma : sigmas) {
        spec.sigma = sigma;
        const std::string path = sigmas.size() > 1 ? per_sigma_path(out_path, sigma) : out_path;
        const auto summary = prefel::run_batch(spec, [](const prefel::InstanceOutcome& o) {
          if (o.error) {
            std::cerr << "instance " << o.instance_id << " failed: " << *o.error << '\n';
          } else {
            std::cerr << "instance " << o.instance_id << ": " << o.queries << " queries, score "
                      << o.points.back().score << '\n';
          }
        });
        prefel::write_csv(summary, spec.record_time, path);
        std::cout << "sigma " << sigma << " -> " << path << '\n' << prefel::format_summary(summary);
        if (spec.record_time) {
          std::cout << "mean time between queries: " << summary.mean_ms_between_queries << " ms\n";
        }
        if (summary.failures > 0) status = kExitFailures;
      }
      return status;
    }
    if (*gen) {
      if (gen_problem == "mkp") {
        prefel::save_instance(prefel::ProblemInstance(prefel::generate_knapsack(gn, gp, gseed)), gen_out);
      } else {
        prefel::save_instance(prefel::ProblemInstance(prefel::generate_allocation(gn, gm, gr, gb, gseed)), gen_out);
      }
      return 0;
    }
    if (*sc) {
      const auto instance = prefel::load_instance(score_instance);
      const auto hidden = prefel::WeightVector::from_components(parse_list<double>(hidden_text));
      const auto decision = parse_list<std::uint8_t>(decision_text);
      auto backend = prefel::milp::make_backend(score_backend);
      std::printf("%.17g\n", prefel::score(instance.make_solution(decision), hidden, instance, *backend));
      return 0;
    }
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const prefel::InstanceFormatError& e) {
    std::cerr << "invalid instance: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {  // contract and generation errors
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return 0;
}
