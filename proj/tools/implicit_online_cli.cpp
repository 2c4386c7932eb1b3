// implicit-online: synthetic / sweep / check front end.

#include "implicit_online.hpp"
#include "implicit_online/testing/check_suite.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace io = implicit_online;

namespace {

std::vector<io::Algorithm> parse_algorithms(const std::vector<std::string>& names,
                                            const std::vector<io::Algorithm>& fallback) {
  if (names.empty()) return fallback;
  std::vector<io::Algorithm> out;
  for (const std::string& n : names) out.push_back(io::parse_algorithm(n));
  return out;
}

int cmd_synthetic(io::ExperimentConfig cfg, const std::vector<std::string>& algos) {
  cfg.algorithms = parse_algorithms(algos, cfg.algorithms);
  const io::SyntheticResult res = io::run_synthetic(cfg);
  io::write_synthetic_outputs(cfg, res);
  for (const io::SyntheticSeries& s : res.series) {
    std::cout << io::to_string(s.algorithm) << " L_T=" << io::format_double(s.cumulative.back()) << '\n';
  }
  for (const io::BoundCertificate& c : res.certificates) {
    std::cout << "certificate " << c.name << (c.holds ? " holds" : " FAILS") << " slack=" << io::format_double(c.slack)
              << '\n';
  }
  std::cout << "wrote " << cfg.out << '\n';
  return 0;
}

int cmd_sweep(io::ExperimentConfig cfg, const std::vector<std::string>& algos) {
  cfg.algorithms = parse_algorithms(algos, cfg.algorithms);
  const io::SweepResult res = io::run_sweep(cfg);
  io::write_sweep_outputs(cfg, res);
  std::cout << "examples=" << res.n << " d=" << res.d << " cells=" << res.cells.size() << '\n';
  std::cout << "wrote " << cfg.out << '\n';
  return 0;
}

int cmd_check(const io::testing::CheckOptions& opt) {
  bool ok = true;
  for (const io::testing::NamedCheck& c : io::testing::all_checks()) {
    const io::testing::CheckResult r = io::testing::run_check(c, opt);
    ok = ok && r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " trials=" << r.trials
              << " worst_slack=" << io::format_double(r.worst_slack);
    if (!r.detail.empty()) std::cout << " : " << r.detail;
    std::cout << std::endl;
  }
  std::cout << (ok ? "all checks hold" : "some checks failed") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit online mirror descent experiments and checks"};
  app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  io::ExperimentConfig syn = io::ExperimentConfig::synthetic_defaults();
  std::vector<std::string> syn_algos;
  double syn_beta = 1.0;
  CLI::App* synthetic = app.add_subcommand("synthetic", "Drifting sine target on a ball");
  synthetic->add_option("--T", syn.T, "Horizon")->capture_default_str();
  synthetic->add_option("--radius", syn.radius, "Ball radius")->capture_default_str();
  synthetic->add_option("--beta", syn_beta, "Learning-rate scale")->capture_default_str();
  synthetic->add_option("--algo", syn_algos, "Comma-separated algorithms")->delimiter(',');
  synthetic->add_option("--seed", syn.seed, "Seed (echoed into the report)")->capture_default_str();
  synthetic->add_option("--out", syn.out, "Output CSV path")->capture_default_str();

  io::ExperimentConfig swp = io::ExperimentConfig::sweep_defaults();
  std::vector<std::string> swp_algos;
  std::string task = "classification";
  std::optional<double> swp_beta;
  CLI::App* sweep = app.add_subcommand("sweep", "Beta sweep over a LIBSVM dataset");
  sweep->add_option("--dataset", swp.dataset, "LIBSVM file")->required();
  sweep->add_option("--task", task, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}))
      ->capture_default_str();
  sweep->add_option("--algo", swp_algos, "Comma-separated algorithms")->delimiter(',');
  sweep->add_option("--beta", swp_beta, "Single beta instead of the grid");
  sweep->add_option("--grid-lo-exp", swp.grid.lo_exp, "Smallest log2 beta")->capture_default_str();
  sweep->add_option("--grid-hi-exp", swp.grid.hi_exp, "Largest log2 beta")->capture_default_str();
  sweep->add_option("--grid-points", swp.grid.points, "Grid size")->capture_default_str();
  sweep->add_option("--repeats", swp.repeats, "Shuffled passes per cell")->capture_default_str();
  sweep->add_option("--seed", swp.seed, "Shuffle seed")->capture_default_str();
  sweep->add_option("--radius", swp.radius, "Ball radius (inf for unconstrained)")->capture_default_str();
  sweep->add_option("--out", swp.out, "Output CSV path")->capture_default_str();

  io::testing::CheckOptions chk;
  CLI::App* check = app.add_subcommand("check", "Run the certificate and invariant suite");
  check->add_flag("--quick", chk.quick, "Reduced trial counts");
  check->add_option("--seed", chk.seed, "Seed for random instances")->capture_default_str();
  check->add_flag("--inject-delta-sign-fault", chk.inject_delta_sign_fault)->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synthetic) {
      syn.beta = syn_beta;
      return cmd_synthetic(syn, syn_algos);
    }
    if (*sweep) {
      swp.task = io::parse_task(task);
      swp.beta = swp_beta;
      return cmd_sweep(swp, swp_algos);
    }
    return cmd_check(chk);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
