// orbitfl command line: run, compare, contacts, validate.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "orbitfl/orbitfl.h"

namespace {

int exit_code(ofl_status s) {
  switch (s) {
    case OFL_OK: return 0;
    case OFL_ERR_CONFIG:
    case OFL_ERR_INVALID_ARG: return 1;
    case OFL_ERR_DEADLOCK: return 3;
    case OFL_ERR_RUNTIME:
    case OFL_ERR_IO: return 2;
  }
  return 2;
}

struct Failure {
  ofl_status status;
};

void check(ofl_status s, const char* what) {
  if (s == OFL_OK) return;
  std::fprintf(stderr, "error: %s: %s\n", what, ofl_last_error());
  throw Failure{s};
}

struct Scenario {
  ofl_scenario* h = nullptr;
  Scenario() = default;
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;
  ~Scenario() { ofl_scenario_free(h); }
};

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string protocol;
  std::optional<double> horizon_hours;
  std::optional<int> max_epochs;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "scenario file (defaults when omitted)");
  if (with_out) cmd->add_option("--out", c.out, "output CSV path")->required();
  cmd->add_option("--seed", c.seed, "seed (overrides ORBITFL_SEED and the file)");
  cmd->add_option("--protocol", c.protocol, "fedisl or fednonisl")->check(CLI::IsMember({"fedisl", "fednonisl"}));
  cmd->add_option("--horizon-hours", c.horizon_hours, "simulated time limit");
  cmd->add_option("--max-epochs", c.max_epochs, "stop after this many epochs (0 = horizon only)");
  cmd->add_flag("-v,--verbose", c.verbose, "print per-epoch progress");
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("ORBITFL_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') {
    std::fprintf(stderr, "error: ORBITFL_SEED is not an unsigned integer: %s\n", v);
    throw Failure{OFL_ERR_CONFIG};
  }
  return s;
}

void load(Scenario& s, const std::string& path, const Common& c) {
  if (path.empty())
    check(ofl_scenario_default(&s.h), "default scenario");
  else
    check(ofl_scenario_load(path.c_str(), &s.h), path.c_str());
  if (const auto seed = c.seed ? c.seed : env_seed()) check(ofl_scenario_set_seed(s.h, *seed), "seed");
  if (!c.protocol.empty()) check(ofl_scenario_set_protocol(s.h, c.protocol.c_str()), "protocol");
  if (c.horizon_hours) check(ofl_scenario_set_horizon_hours(s.h, *c.horizon_hours), "horizon");
  if (c.max_epochs) check(ofl_scenario_set_max_epochs(s.h, *c.max_epochs), "max epochs");
}

void print_records(const ofl_result* r) {
  const size_t n = ofl_result_num_records(r);
  for (size_t i = 0; i < n; ++i) {
    ofl_record rec;
    if (ofl_result_record(r, i, &rec) != OFL_OK) break;
    std::printf("  epoch %4d  t=%9.1f s  acc=%.4f  loss=%.4f  ps=%lld/%lld msgs  isl=%lld msgs\n", rec.epoch,
                rec.sim_time_s, rec.test_accuracy, rec.test_loss, static_cast<long long>(rec.ps_down_msgs),
                static_cast<long long>(rec.ps_up_msgs), static_cast<long long>(rec.isl_msgs));
  }
}

void summarize(const char* label, const ofl_result* r) {
  const size_t n = ofl_result_num_records(r);
  std::printf("%s: %zu epochs in %.1f h simulated", label, n, ofl_result_end_time(r) / 3600.0);
  if (n > 0) {
    ofl_record last;
    ofl_result_record(r, n - 1, &last);
    std::printf(", final accuracy %.4f", last.test_accuracy);
  }
  std::printf("\n");
}

int cmd_run(const Common& c) {
  Scenario s;
  load(s, c.config, c);
  ofl_result* r = nullptr;
  check(ofl_run(s.h, &r), "run");
  if (c.verbose) print_records(r);
  summarize("run", r);
  const ofl_status st = ofl_result_write_csv(r, c.out.c_str(), 1);
  ofl_result_free(r);
  check(st, "write metrics");
  std::printf("metrics written to %s\n", c.out.c_str());
  return 0;
}

int cmd_compare(const Common& c, const std::string& config_b, double target, const std::string& metrics_prefix) {
  Scenario a, b;
  load(a, c.config, c);
  load(b, config_b.empty() ? c.config : config_b, c);
  if (config_b.empty()) {
    // One scenario: baseline against FedISL.
    check(ofl_scenario_set_protocol(a.h, "fednonisl"), "protocol");
    check(ofl_scenario_set_protocol(b.h, "fedisl"), "protocol");
  }
  ofl_comparison* cmp = nullptr;
  check(ofl_compare(a.h, b.h, target, &cmp), "compare");
  summarize("a", ofl_comparison_result(cmp, 0));
  summarize("b", ofl_comparison_result(cmp, 1));
  std::printf("target accuracy %.4f, speedup %.3f, PS traffic ratio %.3f\n", ofl_comparison_target(cmp),
              ofl_comparison_speedup(cmp), ofl_comparison_traffic_ratio(cmp));
  ofl_status st = ofl_comparison_write_csv(cmp, c.out.c_str());
  if (st == OFL_OK && !metrics_prefix.empty()) {
    st = ofl_result_write_csv(ofl_comparison_result(cmp, 0), (metrics_prefix + "_a.csv").c_str(), 1);
    if (st == OFL_OK)
      st = ofl_result_write_csv(ofl_comparison_result(cmp, 1), (metrics_prefix + "_b.csv").c_str(), 1);
  }
  ofl_comparison_free(cmp);
  check(st, "write comparison");
  std::printf("summary written to %s\n", c.out.c_str());
  return 0;
}

int cmd_contacts(const Common& c, double from_s) {
  Scenario s;
  load(s, c.config, c);
  const double hours = c.horizon_hours ? *c.horizon_hours : 12.0;
  size_t n = 0;
  check(ofl_contacts_write_csv(s.h, from_s, hours * 3600.0, c.out.c_str(), &n), "contacts");
  std::printf("%zu contact windows over %.1f h written to %s\n", n, hours, c.out.c_str());
  return 0;
}

int cmd_validate(const Common& c, const std::string& canonical_out) {
  Scenario s;
  load(s, c.config, c);
  size_t n = 0;
  check(ofl_scenario_validate(s.h, &n), "validate");
  for (size_t i = 0; i < n; ++i) std::fprintf(stderr, "problem: %s\n", ofl_scenario_problem(s.h, i));
  if (!canonical_out.empty()) check(ofl_scenario_write_canonical(s.h, canonical_out.c_str()), "write canonical");
  if (n > 0) {
    std::fprintf(stderr, "error: %zu scenario problem(s)\n", n);
    return 1;
  }
  std::printf("scenario ok\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitfl: federated learning over LEO constellations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ofl_version());

  Common run_opts, cmp_opts, contact_opts, validate_opts;
  std::string config_b, metrics_prefix, canonical_out;
  double target = 0.0, from_s = 0.0;

  auto* run = app.add_subcommand("run", "simulate one scenario and write per-epoch metrics");
  add_common(run, run_opts);

  auto* cmp = app.add_subcommand("compare", "time-to-accuracy and PS traffic of two scenarios");
  add_common(cmp, cmp_opts);
  cmp->add_option("--config-b", config_b, "second scenario (default: same file, FedNonISL vs FedISL)");
  cmp->add_option("--target", target, "target accuracy (default: 95% of the best accuracy of b)");
  cmp->add_option("--metrics-prefix", metrics_prefix, "also write <prefix>_a.csv and <prefix>_b.csv");

  auto* contacts = app.add_subcommand("contacts", "satellite-PS contact windows (default 12 h)");
  add_common(contacts, contact_opts);
  contacts->add_option("--from", from_s, "start time in seconds");

  auto* validate = app.add_subcommand("validate", "check a scenario without simulating");
  add_common(validate, validate_opts, false);
  validate->add_option("--emit", canonical_out, "write the canonical form of the scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*cmp) return cmd_compare(cmp_opts, config_b, target, metrics_prefix);
    if (*contacts) return cmd_contacts(contact_opts, from_s);
    if (*validate) return cmd_validate(validate_opts, canonical_out);
  } catch (const Failure& f) {
    return exit_code(f.status);
  }
  return 1;
}
