// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria 1-9 run the full-size check suite; criterion 10 runs the
// default sweep protocol on the bundled dataset.

#include "implicit_online/experiment.hpp"
#include "implicit_online/testing/check_suite.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>

namespace io = implicit_online;
namespace iot = implicit_online::testing;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

// wall-clock limits in seconds; 0 means none
constexpr double kTimeLimit[10] = {30.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 0.0, 5.0, 0.0};

const char* const kTitles[10] = {"prox matches numeric oracle",
                                 "implicit-step properties",
                                 "per-step delta bound",
                                 "AdaImplicit regret and lambda certificates",
                                 "constant-rate variability bound",
                                 "recurrence bound sweep",
                                 "doubling trick bounds and restarts",
                                 "lower-bound tightness",
                                 "synthetic ordering",
                                 "sweep protocol fidelity"};

Outcome sweep_protocol() {
  const std::string path = IMPLICIT_ONLINE_DATA_DIR "/mini_classification.svm";
  const io::Dataset ds = io::preprocess(io::load_libsvm(path, io::Task::Classification));
  for (const io::SparseRow& row : ds.rows) {
    if (row.empty() || row.back().index != ds.d || row.back().value != 1.0) return {false, "bias feature missing"};
    for (const io::SparseEntry& e : row) {
      if (!(std::abs(e.value) <= 1.0)) return {false, "feature outside [-1, 1]"};
    }
  }

  io::ExperimentConfig cfg = io::ExperimentConfig::sweep_defaults();
  cfg.dataset = path;
  const io::SweepResult first = io::run_sweep(cfg);
  const io::SweepResult second = io::run_sweep(cfg);
  std::ostringstream a, b;
  io::write_sweep_csv(a, first);
  io::write_sweep_csv(b, second);
  if (a.str() != b.str()) return {false, "CSV differs between identical runs"};

  std::set<double> betas;
  std::map<std::pair<io::Algorithm, double>, int> repeats;
  for (const io::SweepCell& c : first.cells) {
    betas.insert(c.beta);
    ++repeats[{c.algorithm, c.beta}];
  }
  if (betas.size() != 41) return {false, std::to_string(betas.size()) + " beta values"};
  int k = -20;
  for (double beta : betas) {
    if (beta != std::ldexp(1.0, k++)) return {false, "beta grid is not 2^-20 .. 2^20"};
  }
  for (const auto& [cell, n] : repeats) {
    if (n != 10) return {false, "cell with " + std::to_string(n) + " repeats"};
  }
  if (repeats.size() != 41 * cfg.algorithms.size()) return {false, "missing algorithm cells"};
  return {true, "41 betas x 10 repeats x " + std::to_string(cfg.algorithms.size()) + " algorithms, " +
                    std::to_string(ds.size()) + " examples, byte-identical CSV"};
}

}  // namespace

int main() {
  iot::CheckOptions opt;
  int failures = 0;
  auto report = [&](int idx, const Outcome& o, double seconds) {
    bool pass = o.pass;
    std::string detail = o.detail;
    if (kTimeLimit[idx] > 0.0 && seconds >= kTimeLimit[idx]) {
      pass = false;
      detail += " (over time limit " + io::format_double(kTimeLimit[idx]) + " s)";
    }
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s [%.2f s] %s\n", pass ? "PASS" : "FAIL", idx + 1, kTitles[idx], seconds,
                detail.c_str());
    std::fflush(stdout);
  };

  const auto& checks = iot::all_checks();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const iot::CheckResult r = iot::run_check(checks[i], opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string detail = "trials=" + std::to_string(r.trials) + " worst_slack=" + io::format_double(r.worst_slack);
    if (!r.detail.empty()) detail += " : " + r.detail;
    report(static_cast<int>(i), {r.passed, detail}, secs);
  }

  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = sweep_protocol();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(9, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
