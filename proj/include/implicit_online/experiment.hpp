#ifndef IMPLICIT_ONLINE_EXPERIMENT_HPP
#define IMPLICIT_ONLINE_EXPERIMENT_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/data.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/learners.hpp"
#include "implicit_online/losses.hpp"
#include "implicit_online/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace implicit_online {

/// log2-uniform grid 2^lo_exp .. 2^hi_exp with `points` values.
struct GridSpec {
  int lo_exp = -20;
  int hi_exp = 20;
  int points = 41;

  void validate() const {
    if (points < 1) throw Error("grid: points must be >= 1");
    if (hi_exp < lo_exp) throw Error("grid: hi_exp must be >= lo_exp");
  }

  std::vector<double> betas() const {
    validate();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
      const double e = points == 1 ? lo_exp
                                   : lo_exp + static_cast<double>(hi_exp - lo_exp) * k / static_cast<double>(points - 1);
      out.push_back(std::exp2(e));
    }
    return out;
  }
};

struct ExperimentConfig {
  Task task = Task::Classification;
  std::vector<Algorithm> algorithms;
  GridSpec grid;
  /// Single beta; overrides the grid in sweeps, replaces 1 in synthetic runs.
  std::optional<double> beta;
  int repeats = 10;
  std::uint64_t seed = 0;
  std::size_t T = 2000;
  /// +inf means unconstrained.
  double radius = kInfinity;
  std::string dataset;
  std::string out;

  static ExperimentConfig synthetic_defaults() {
    ExperimentConfig c;
    c.algorithms = {Algorithm::OGD, Algorithm::AdaOGD, Algorithm::ImplicitDecay, Algorithm::AdaImplicit};
    c.radius = 75.0;
    c.out = "synthetic.csv";
    return c;
  }

  static ExperimentConfig sweep_defaults() {
    ExperimentConfig c;
    c.algorithms = {Algorithm::OGD, Algorithm::AdaOGD, Algorithm::ImplicitDecay, Algorithm::AdaImplicit};
    c.out = "sweep.csv";
    return c;
  }

  MirrorSetup setup() const {
    return std::isinf(radius) ? MirrorSetup::unconstrained() : MirrorSetup::ball(radius);
  }

  void validate() const {
    grid.validate();
    if (repeats < 1) throw Error("config: repeats must be >= 1");
    if (T < 1) throw Error("config: T must be >= 1");
    if (!(radius > 0.0)) throw Error("config: radius must be positive");
    if (algorithms.empty()) throw Error("config: no algorithms selected");
    if (beta && !(*beta > 0.0 && std::isfinite(*beta))) throw Error("config: beta must be positive and finite");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json algos = nlohmann::json::array();
  for (Algorithm a : c.algorithms) algos.push_back(to_string(a));
  nlohmann::json j;
  j["task"] = to_string(c.task);
  j["algorithms"] = algos;
  j["grid"] = {{"lo_exp", c.grid.lo_exp}, {"hi_exp", c.grid.hi_exp}, {"points", c.grid.points}};
  j["beta"] = c.beta ? nlohmann::json(*c.beta) : nlohmann::json(nullptr);
  j["repeats"] = c.repeats;
  j["seed"] = c.seed;
  j["T"] = c.T;
  j["radius"] = std::isinf(c.radius) ? nlohmann::json("inf") : nlohmann::json(c.radius);
  j["dataset"] = c.dataset;
  j["out"] = c.out;
  return j;
}

inline nlohmann::json to_json(const BoundCertificate& c) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"name", c.name}, {"lhs", num(c.lhs)},         {"rhs", num(c.rhs)}, {"slack", num(c.slack)},
          {"holds", c.holds}, {"in_scope", c.in_scope}, {"note", c.note}};
}

/// Worker count: IMPLICIT_ONLINE_THREADS if set to a positive integer, else
/// the hardware concurrency.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("IMPLICIT_ONLINE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Run fn(i) for i in [0, n) on a bounded worker pool; rethrows the first
/// failure after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Synthetic drifting-target experiment.

struct SyntheticSeries {
  Algorithm algorithm;
  std::vector<double> cumulative;  // L_t for t = 1..T
};

struct SyntheticResult {
  std::vector<SyntheticSeries> series;
  std::vector<BoundCertificate> certificates;
  double wall_seconds = 0.0;
};

inline LearnerConfig make_learner_config(Algorithm a, double beta, const MirrorSetup& setup, Eigen::Index d,
                                         double lipschitz) {
  LearnerConfig lc;
  lc.algorithm = a;
  lc.beta = beta;
  lc.eta_const = beta;
  lc.lipschitz = lipschitz;
  lc.x_init = Vector::Zero(d);
  lc.setup = setup;
  return lc;
}

/// Quad1D losses tracking 100 sin(pi t / (10 T)) on a ball. Certificates
/// come from an extra AdaImplicit run with beta at the Bregman diameter root.
inline SyntheticResult run_synthetic(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const MirrorSetup setup = cfg.setup();
  const std::vector<Loss> losses = gen_sine(cfg.T);
  const double beta = cfg.beta.value_or(1.0);
  double lipschitz = 0.0;
  for (const Loss& l : losses) lipschitz = std::max(lipschitz, lipschitz_bound(l, setup));

  SyntheticResult res;
  for (Algorithm a : cfg.algorithms) {
    const Trace tr = run(make_learner_config(a, beta, setup, 1, lipschitz), losses);
    SyntheticSeries s{a, {}};
    s.cumulative.reserve(tr.records.size());
    double acc = 0.0;
    for (const StepRecord& r : tr.records) s.cumulative.push_back(acc += r.loss_value);
    res.series.push_back(std::move(s));
  }

  if (setup.bounded()) {
    const Vector u = best_fixed_comparator(losses, setup);
    const Trace tr =
        run(make_learner_config(Algorithm::AdaImplicit, theoretical_beta(setup), setup, 1, lipschitz), losses);
    res.certificates.push_back(certify_adaimplicit(tr, losses, setup, u));
    res.certificates.push_back(certify_adaimplicit_lambda(tr, losses, setup));
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline void write_synthetic_csv(std::ostream& out, const SyntheticResult& res) {
  out << "t,algorithm,cumulative_loss\n";
  for (const SyntheticSeries& s : res.series) {
    for (std::size_t t = 0; t < s.cumulative.size(); ++t) {
      out << (t + 1) << ',' << to_string(s.algorithm) << ',' << format_double(s.cumulative[t]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Beta sweep over a LIBSVM dataset.

struct SweepCell {
  Algorithm algorithm;
  double beta;
  int repeat;
  double avg_cumulative_loss;  // L_T / T
};

struct AggregateRow {
  Algorithm algorithm;
  double beta;
  double mean;
  double std;  // sample standard deviation, 0 for a single repeat
};

struct SweepResult {
  std::vector<SweepCell> cells;  // sorted by (algorithm, beta, repeat)
  std::vector<AggregateRow> aggregate;
  std::size_t n = 0;
  int d = 0;
  double wall_seconds = 0.0;
};

/// One online pass over the examples in the order of `repeat`; returns L_T / T.
inline double sweep_cell(const std::vector<Loss>& losses, Algorithm a, double beta, int repeat,
                         const ExperimentConfig& cfg, double lipschitz) {
  const MirrorSetup setup = cfg.setup();
  const Eigen::Index d = losses.front().dimension();
  Learner learner(make_learner_config(a, beta, setup, d, lipschitz));
  const std::vector<std::size_t> order = shuffled_order(losses.size(), cfg.seed, static_cast<std::uint64_t>(repeat));
  double acc = 0.0;
  for (std::size_t i : order) acc += learner.observe(losses[i]).loss_value;
  return acc / static_cast<double>(losses.size());
}

/// `ds` must already be preprocessed.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const Dataset& ds) {
  cfg.validate();
  if (ds.size() == 0) throw Error("sweep: dataset is empty");
  const auto start = std::chrono::steady_clock::now();

  std::vector<Loss> losses;
  losses.reserve(ds.size());
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    losses.push_back(example_loss(ds, i));
    lipschitz = std::max(lipschitz, lipschitz_bound(losses.back(), cfg.setup()));
  }

  std::vector<Algorithm> algos = cfg.algorithms;
  std::sort(algos.begin(), algos.end());
  algos.erase(std::unique(algos.begin(), algos.end()), algos.end());
  const std::vector<double> betas = cfg.beta ? std::vector<double>{*cfg.beta} : cfg.grid.betas();

  SweepResult res;
  res.n = ds.size();
  res.d = ds.d;
  for (Algorithm a : algos) {
    for (double b : betas) {
      for (int r = 0; r < cfg.repeats; ++r) res.cells.push_back({a, b, r, 0.0});
    }
  }
  parallel_for(res.cells.size(), [&](std::size_t i) {
    SweepCell& c = res.cells[i];
    c.avg_cumulative_loss = sweep_cell(losses, c.algorithm, c.beta, c.repeat, cfg, lipschitz);
  });

  for (std::size_t i = 0; i < res.cells.size(); i += static_cast<std::size_t>(cfg.repeats)) {
    double mean = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) mean += res.cells[i + r].avg_cumulative_loss;
    mean /= cfg.repeats;
    double ss = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      const double dv = res.cells[i + r].avg_cumulative_loss - mean;
      ss += dv * dv;
    }
    const double sd = cfg.repeats > 1 ? std::sqrt(ss / (cfg.repeats - 1)) : 0.0;
    res.aggregate.push_back({res.cells[i].algorithm, res.cells[i].beta, mean, sd});
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (cfg.dataset.empty()) throw Error("sweep: no dataset given");
  return run_sweep(cfg, preprocess(load_libsvm(cfg.dataset, cfg.task)));
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& res) {
  out << "algorithm,beta,repeat,avg_cumulative_loss\n";
  for (const SweepCell& c : res.cells) {
    out << to_string(c.algorithm) << ',' << format_double(c.beta) << ',' << c.repeat << ','
        << format_double(c.avg_cumulative_loss) << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& out, const SweepResult& res) {
  out << "algorithm,beta,mean,std\n";
  for (const AggregateRow& a : res.aggregate) {
    out << to_string(a.algorithm) << ',' << format_double(a.beta) << ',' << format_double(a.mean) << ','
        << format_double(a.std) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Output files: <out>, <stem>.aggregate.csv, <stem>.report.json, <stem>.plot.py

namespace detail {

inline std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  const std::filesystem::path stem = p.parent_path() / p.stem();
  return stem.string() + suffix;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
  if (!f) throw Error("write failed for '" + path + "'");
}

inline std::string synthetic_plot_script(const std::string& csv) {
  const std::string name = std::filesystem::path(csv).filename().string();
  return "import os\n"
         "import pandas as pd\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "df = pd.read_csv(os.path.join(here, '" + name + "'))\n"
         "for name, g in df.groupby('algorithm'):\n"
         "    plt.plot(g['t'], g['cumulative_loss'], label=name)\n"
         "plt.yscale('log')\n"
         "plt.xlabel('t')\n"
         "plt.ylabel('cumulative loss')\n"
         "plt.legend()\n"
         "plt.savefig(os.path.join(here, '" + std::filesystem::path(csv).stem().string() + ".png'), dpi=150)\n";
}

inline std::string sweep_plot_script(const std::string& aggregate) {
  const std::string name = std::filesystem::path(aggregate).filename().string();
  return "import os\n"
         "import pandas as pd\n"
         "import matplotlib.pyplot as plt\n\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "df = pd.read_csv(os.path.join(here, '" + name + "'))\n"
         "for name, g in df.groupby('algorithm'):\n"
         "    plt.errorbar(g['beta'], g['mean'], yerr=g['std'], label=name, capsize=2)\n"
         "plt.xscale('log', base=2)\n"
         "plt.xlabel('beta')\n"
         "plt.ylabel('average cumulative loss L_T / T')\n"
         "plt.legend()\n"
         "plt.savefig(os.path.join(here, '" + std::filesystem::path(name).stem().string() + ".png'), dpi=150)\n";
}

}  // namespace detail

inline nlohmann::json synthetic_report(const ExperimentConfig& cfg, const SyntheticResult& res) {
  nlohmann::json j;
  j["mode"] = "synthetic";
  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["wall_seconds"] = res.wall_seconds;
  nlohmann::json finals = nlohmann::json::object();
  for (const SyntheticSeries& s : res.series) finals[to_string(s.algorithm)] = s.cumulative.back();
  j["final_cumulative_loss"] = finals;
  j["certificates"] = nlohmann::json::array();
  for (const BoundCertificate& c : res.certificates) j["certificates"].push_back(to_json(c));
  return j;
}

inline nlohmann::json sweep_report(const ExperimentConfig& cfg, const SweepResult& res) {
  nlohmann::json j;
  j["mode"] = "sweep";
  j["config"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["wall_seconds"] = res.wall_seconds;
  j["examples"] = res.n;
  j["dimension"] = res.d;
  j["aggregate"] = nlohmann::json::array();
  for (const AggregateRow& a : res.aggregate) {
    j["aggregate"].push_back({{"algorithm", to_string(a.algorithm)}, {"beta", a.beta}, {"mean", a.mean}, {"std", a.std}});
  }
  return j;
}

inline void write_synthetic_outputs(const ExperimentConfig& cfg, const SyntheticResult& res) {
  std::ostringstream csv;
  write_synthetic_csv(csv, res);
  detail::write_file(cfg.out, csv.str());
  detail::write_file(detail::sibling(cfg.out, ".report.json"), synthetic_report(cfg, res).dump(2) + "\n");
  detail::write_file(detail::sibling(cfg.out, ".plot.py"), detail::synthetic_plot_script(cfg.out));
}

inline void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& res) {
  std::ostringstream csv, agg;
  write_sweep_csv(csv, res);
  write_aggregate_csv(agg, res);
  const std::string agg_path = detail::sibling(cfg.out, ".aggregate.csv");
  detail::write_file(cfg.out, csv.str());
  detail::write_file(agg_path, agg.str());
  detail::write_file(detail::sibling(cfg.out, ".report.json"), sweep_report(cfg, res).dump(2) + "\n");
  detail::write_file(detail::sibling(cfg.out, ".plot.py"), detail::sweep_plot_script(agg_path));
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_EXPERIMENT_HPP
