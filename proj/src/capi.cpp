#include "orbitfl/orbitfl.h"

#include <cmath>
#include <string>
#include <vector>

#include "orbitfl/config.hpp"
#include "orbitfl/csv.hpp"
#include "orbitfl/errors.hpp"
#include "orbitfl/sim.hpp"

struct ofl_scenario {
  orbitfl::sim::ScenarioConfig config;
  std::vector<std::string> problems;
};

struct ofl_result {
  orbitfl::sim::RunResult run;
  std::uint64_t seed = 0;
};

struct ofl_comparison {
  orbitfl::sim::Comparison cmp;
  ofl_result a;
  ofl_result b;
};

namespace {

thread_local std::string g_last_error;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
ofl_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return OFL_OK;
  } catch (const orbitfl::ConfigError& e) {
    g_last_error = e.what();
    return OFL_ERR_CONFIG;
  } catch (const orbitfl::ParseError& e) {
    g_last_error = e.what();
    return OFL_ERR_CONFIG;
  } catch (const orbitfl::PartitionError& e) {
    g_last_error = e.what();
    return OFL_ERR_CONFIG;
  } catch (const orbitfl::DeadlockError& e) {
    g_last_error = std::string("deadlock: ") + e.what();
    return OFL_ERR_DEADLOCK;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return OFL_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OFL_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return OFL_ERR_RUNTIME;
  }
}

ofl_status invalid(const char* what) {
  g_last_error = what;
  return OFL_ERR_INVALID_ARG;
}

void write(const std::string& path, const std::string& content) {
  try {
    orbitfl::csv::write_file(path, content);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

}  // namespace

extern "C" {

const char* ofl_version(void) { return "0.1.0"; }

const char* ofl_last_error(void) { return g_last_error.c_str(); }

ofl_status ofl_scenario_default(ofl_scenario** out) {
  if (!out) return invalid("null output handle");
  return guard([&] { *out = new ofl_scenario{}; });
}

ofl_status ofl_scenario_load(const char* path, ofl_scenario** out) {
  if (!path || !out) return invalid("null argument");
  return guard([&] { *out = new ofl_scenario{orbitfl::config::parse_file(path), {}}; });
}

ofl_status ofl_scenario_parse(const char* text, ofl_scenario** out) {
  if (!text || !out) return invalid("null argument");
  return guard([&] { *out = new ofl_scenario{orbitfl::config::parse(text), {}}; });
}

ofl_status ofl_scenario_clone(const ofl_scenario* s, ofl_scenario** out) {
  if (!s || !out) return invalid("null argument");
  return guard([&] { *out = new ofl_scenario{s->config, {}}; });
}

void ofl_scenario_free(ofl_scenario* s) { delete s; }

ofl_status ofl_scenario_set_seed(ofl_scenario* s, uint64_t seed) {
  if (!s) return invalid("null scenario");
  s->config.seed = seed;
  return OFL_OK;
}

ofl_status ofl_scenario_get_seed(const ofl_scenario* s, uint64_t* seed) {
  if (!s || !seed) return invalid("null argument");
  *seed = s->config.seed;
  return OFL_OK;
}

ofl_status ofl_scenario_set_protocol(ofl_scenario* s, const char* name) {
  if (!s || !name) return invalid("null argument");
  const std::string n = name;
  if (n == "fedisl")
    s->config.protocol = orbitfl::sim::Protocol::fedisl;
  else if (n == "fednonisl")
    s->config.protocol = orbitfl::sim::Protocol::fednonisl;
  else {
    g_last_error = "protocol.name: expected fedisl or fednonisl, got '" + n + "'";
    return OFL_ERR_CONFIG;
  }
  return OFL_OK;
}

ofl_status ofl_scenario_set_horizon_hours(ofl_scenario* s, double hours) {
  if (!s) return invalid("null scenario");
  if (!(hours > 0) || !std::isfinite(hours)) {
    g_last_error = "sim.horizon_hours: must be positive";
    return OFL_ERR_CONFIG;
  }
  s->config.horizon_s = hours * 3600.0;
  return OFL_OK;
}

ofl_status ofl_scenario_set_max_epochs(ofl_scenario* s, int32_t epochs) {
  if (!s) return invalid("null scenario");
  if (epochs < 0) {
    g_last_error = "sim.max_epochs: must be non-negative";
    return OFL_ERR_CONFIG;
  }
  s->config.max_epochs = epochs;
  return OFL_OK;
}

ofl_status ofl_scenario_set_train(ofl_scenario* s, int train) {
  if (!s) return invalid("null scenario");
  s->config.train = train != 0;
  return OFL_OK;
}

ofl_status ofl_scenario_validate(ofl_scenario* s, size_t* num_problems) {
  if (!s || !num_problems) return invalid("null argument");
  return guard([&] {
    s->problems = orbitfl::sim::validate_scenario(s->config);
    *num_problems = s->problems.size();
  });
}

const char* ofl_scenario_problem(const ofl_scenario* s, size_t index) {
  if (!s || index >= s->problems.size()) return nullptr;
  return s->problems[index].c_str();
}

ofl_status ofl_scenario_write_canonical(const ofl_scenario* s, const char* path) {
  if (!s || !path) return invalid("null argument");
  return guard([&] { write(path, orbitfl::config::emit(s->config)); });
}

ofl_status ofl_contacts_write_csv(const ofl_scenario* s, double from_s, double horizon_s, const char* path,
                                  size_t* num_windows) {
  if (!s || !path) return invalid("null argument");
  return guard([&] {
    orbitfl::sim::validate(s->config);
    const auto windows = orbitfl::sim::contact_table(s->config, from_s, horizon_s);
    const auto c = orbitfl::sim::make_constellation(s->config);
    write(path, orbitfl::csv::contacts(c, windows));
    if (num_windows) *num_windows = windows.size();
  });
}

ofl_status ofl_run(const ofl_scenario* s, ofl_result** out) {
  if (!s || !out) return invalid("null argument");
  return guard([&] {
    auto* r = new ofl_result{};
    try {
      r->run = orbitfl::sim::run_scenario(s->config);
    } catch (...) {
      delete r;
      throw;
    }
    r->seed = s->config.seed;
    *out = r;
  });
}

void ofl_result_free(ofl_result* r) { delete r; }

size_t ofl_result_num_records(const ofl_result* r) { return r ? r->run.records.size() : 0; }

ofl_status ofl_result_record(const ofl_result* r, size_t index, ofl_record* out) {
  if (!r || !out) return invalid("null argument");
  if (index >= r->run.records.size()) return invalid("record index out of range");
  const auto& m = r->run.records[index];
  *out = ofl_record{m.sim_time_s,   m.epoch,      m.test_accuracy, m.test_loss,     m.ps_down_msgs,
                    m.ps_down_bits, m.ps_up_msgs, m.ps_up_bits,    m.isl_msgs,      m.isl_bits,
                    m.fallback_hops, m.epoch_duration_s};
  return OFL_OK;
}

double ofl_result_initial_accuracy(const ofl_result* r) { return r ? r->run.initial.accuracy : NAN; }

double ofl_result_end_time(const ofl_result* r) { return r ? r->run.end_time_s : NAN; }

ofl_status ofl_result_write_csv(const ofl_result* r, const char* path, int echo_seed) {
  if (!r || !path) return invalid("null argument");
  return guard([&] {
    write(path, orbitfl::csv::metrics(r->run.records,
                                      echo_seed ? std::optional<std::uint64_t>(r->seed) : std::nullopt));
  });
}

ofl_status ofl_compare(const ofl_scenario* a, const ofl_scenario* b, double target, ofl_comparison** out) {
  if (!a || !b || !out) return invalid("null argument");
  return guard([&] {
    auto* c = new ofl_comparison{};
    try {
      c->cmp = orbitfl::sim::compare(a->config, b->config, target);
    } catch (...) {
      delete c;
      throw;
    }
    c->a.run = std::move(c->cmp.a);
    c->a.seed = a->config.seed;
    c->b.run = std::move(c->cmp.b);
    c->b.seed = b->config.seed;
    *out = c;
  });
}

void ofl_comparison_free(ofl_comparison* c) { delete c; }

double ofl_comparison_speedup(const ofl_comparison* c) {
  if (!c) return NAN;
  return c->cmp.speedup ? *c->cmp.speedup : INFINITY;
}

double ofl_comparison_traffic_ratio(const ofl_comparison* c) { return c ? c->cmp.traffic_ratio : NAN; }

double ofl_comparison_target(const ofl_comparison* c) { return c ? c->cmp.target_accuracy : NAN; }

const ofl_result* ofl_comparison_result(const ofl_comparison* c, int which) {
  if (!c) return nullptr;
  return which == 0 ? &c->a : which == 1 ? &c->b : nullptr;
}

ofl_status ofl_comparison_write_csv(const ofl_comparison* c, const char* path) {
  if (!c || !path) return invalid("null argument");
  return guard([&] { write(path, orbitfl::csv::comparison(c->cmp)); });
}

}  // extern "C"
