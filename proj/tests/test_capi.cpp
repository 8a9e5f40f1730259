#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include "orbitfl/orbitfl.h"
#include "support.hpp"

namespace {

constexpr const char* kSmall =
    "[data]\nnum_features = 16\nsamples_per_satellite = 10\ntest_samples = 100\n"
    "[sim]\nmax_epochs = 2\nseed = 5\n";

struct Scenario {
  ofl_scenario* h = nullptr;
  ~Scenario() { ofl_scenario_free(h); }
};

struct Result {
  ofl_result* h = nullptr;
  ~Result() { ofl_result_free(h); }
};

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" ORBITFL_CLI "' " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("scenario handles") {
  CHECK(std::string(ofl_version()).size() > 0);

  Scenario s;
  REQUIRE(ofl_scenario_default(&s.h) == OFL_OK);
  std::uint64_t seed = 0;
  CHECK(ofl_scenario_get_seed(s.h, &seed) == OFL_OK);
  CHECK(seed == 1);
  CHECK(ofl_scenario_set_seed(s.h, 9) == OFL_OK);
  Scenario copy;
  REQUIRE(ofl_scenario_clone(s.h, &copy.h) == OFL_OK);
  CHECK(ofl_scenario_get_seed(copy.h, &seed) == OFL_OK);
  CHECK(seed == 9);

  CHECK(ofl_scenario_set_protocol(s.h, "fednonisl") == OFL_OK);
  CHECK(ofl_scenario_set_protocol(s.h, "nope") == OFL_ERR_CONFIG);
  CHECK(std::string(ofl_last_error()).size() > 0);
  CHECK(ofl_scenario_set_horizon_hours(s.h, -1) == OFL_ERR_CONFIG);
  CHECK(ofl_scenario_set_max_epochs(s.h, -1) == OFL_ERR_CONFIG);
  CHECK(ofl_scenario_set_seed(nullptr, 1) == OFL_ERR_INVALID_ARG);
  CHECK(ofl_scenario_default(nullptr) == OFL_ERR_INVALID_ARG);

  std::size_t problems = 99;
  CHECK(ofl_scenario_validate(s.h, &problems) == OFL_OK);
  CHECK(problems == 0);
  CHECK(ofl_scenario_problem(s.h, 0) == nullptr);

  Scenario bad;
  CHECK(ofl_scenario_parse("[constellation]\naltitude_km = -1\n", &bad.h) == OFL_ERR_CONFIG);
  CHECK(bad.h == nullptr);
  CHECK(std::string(ofl_last_error()).find("constellation.altitude_km") != std::string::npos);
  CHECK(ofl_scenario_load("/nonexistent/x.ini", &bad.h) == OFL_ERR_CONFIG);

  test::TempDir dir("capi");
  const auto canon = (dir / "c.ini").string();
  CHECK(ofl_scenario_write_canonical(s.h, canon.c_str()) == OFL_OK);
  Scenario back;
  REQUIRE(ofl_scenario_load(canon.c_str(), &back.h) == OFL_OK);
  CHECK(ofl_scenario_get_seed(back.h, &seed) == OFL_OK);
  CHECK(seed == 9);
  CHECK(ofl_scenario_write_canonical(s.h, (dir / "no/dir.ini").string().c_str()) == OFL_ERR_IO);

  std::size_t windows = 0;
  const auto contacts = (dir / "contacts.csv").string();
  CHECK(ofl_contacts_write_csv(s.h, 0, 3600, contacts.c_str(), &windows) == OFL_OK);
  CHECK(windows > 0);
  CHECK(test::read_file(contacts).rfind("satellite_id,plane,start_s,end_s,duration_s\n", 0) == 0);
}

TEST_CASE("runs and comparisons") {
  Scenario s;
  REQUIRE(ofl_scenario_parse(kSmall, &s.h) == OFL_OK);
  Result r;
  REQUIRE(ofl_run(s.h, &r.h) == OFL_OK);
  REQUIRE(ofl_result_num_records(r.h) == 2);
  ofl_record rec;
  CHECK(ofl_result_record(r.h, 1, &rec) == OFL_OK);
  CHECK(rec.epoch == 2);
  CHECK(rec.ps_down_msgs == 10);
  CHECK(rec.sim_time_s == ofl_result_end_time(r.h));
  CHECK(ofl_result_record(r.h, 2, &rec) == OFL_ERR_INVALID_ARG);
  CHECK(ofl_result_initial_accuracy(r.h) >= 0);

  test::TempDir dir("capi_run");
  const auto with = (dir / "a.csv").string(), without = (dir / "b.csv").string();
  CHECK(ofl_result_write_csv(r.h, with.c_str(), 1) == OFL_OK);
  CHECK(ofl_result_write_csv(r.h, without.c_str(), 0) == OFL_OK);
  CHECK(test::read_file(with) == "# seed=5\n" + test::read_file(without));

  Scenario b;
  REQUIRE(ofl_scenario_clone(s.h, &b.h) == OFL_OK);
  ofl_scenario_set_protocol(b.h, "fednonisl");
  ofl_comparison* cmp = nullptr;
  REQUIRE(ofl_compare(b.h, s.h, 0, &cmp) == OFL_OK);
  CHECK(ofl_comparison_traffic_ratio(cmp) == 8.0);
  CHECK(ofl_comparison_target(cmp) > 0);
  CHECK(ofl_result_num_records(ofl_comparison_result(cmp, 0)) == 2);
  CHECK(ofl_comparison_result(cmp, 2) == nullptr);
  const double sp = ofl_comparison_speedup(cmp);
  CHECK((std::isinf(sp) || sp > 0));
  CHECK(ofl_comparison_write_csv(cmp, (dir / "c.csv").string().c_str()) == OFL_OK);
  ofl_comparison_free(cmp);

  Scenario dead;
  REQUIRE(ofl_scenario_parse("[constellation]\ninclination_deg = 30\n[ps]\nkind = north_pole\n"
                             "[data]\nnum_features = 16\nsamples_per_satellite = 10\n[sim]\nmax_epochs = 1\n",
                             &dead.h) == OFL_OK);
  Result none;
  CHECK(ofl_run(dead.h, &none.h) == OFL_ERR_DEADLOCK);
  CHECK(none.h == nullptr);
}

TEST_CASE("command line") {
  test::TempDir dir("cli");
  const auto ini = (dir / "small.ini").string();
  test::write_file(ini, kSmall);
  const auto out = (dir / "m.csv").string();

  CHECK(cli("--help") == 0);
  CHECK(cli("") == 1);
  CHECK(cli("validate --config '" ORBITFL_SOURCE_DIR "/configs/default.ini'") == 0);
  CHECK(cli("validate --config /nonexistent.ini") == 1);

  CHECK(cli("run --config '" + ini + "' --out '" + out + "'") == 0);
  const auto text = test::read_file(out);
  CHECK(text.rfind("# seed=5\n", 0) == 0);

  // The flag beats the environment, which beats the file.
  CHECK(cli("run --config '" + ini + "' --out '" + out + "'", "ORBITFL_SEED=11") == 0);
  CHECK(test::read_file(out).rfind("# seed=11\n", 0) == 0);
  CHECK(cli("run --config '" + ini + "' --out '" + out + "' --seed 12", "ORBITFL_SEED=11") == 0);
  CHECK(test::read_file(out).rfind("# seed=12\n", 0) == 0);
  CHECK(cli("run --config '" + ini + "' --out '" + out + "'", "ORBITFL_SEED=abc") == 1);

  // Same seed, same bytes.
  const auto again = (dir / "m2.csv").string();
  CHECK(cli("run --config '" + ini + "' --out '" + again + "' --seed 12") == 0);
  CHECK(test::read_file(out) == test::read_file(again));

  const auto strict = (dir / "strict.ini").string();
  test::write_file(strict,
                   "[data]\nnum_features = 16\nsamples_per_satellite = 10\ntest_samples = 100\n"
                   "train_images = /nonexistent/a\ntrain_labels = /nonexistent/b\nsynthetic_fallback = false\n"
                   "[sim]\nmax_epochs = 2\n");
  CHECK(cli("run --config '" + strict + "' --out '" + out + "'") == 1);

  const auto dead = (dir / "dead.ini").string();
  test::write_file(dead,
                   "[constellation]\ninclination_deg = 30\n[ps]\nkind = north_pole\n"
                   "[data]\nnum_features = 16\nsamples_per_satellite = 10\n[sim]\nmax_epochs = 1\n");
  CHECK(cli("run --config '" + dead + "' --out '" + out + "'") == 3);
  CHECK(cli("run --config '" + ini + "' --out '" + (dir / "no/dir.csv").string() + "'") == 2);

  CHECK(cli("contacts --out '" + (dir / "w.csv").string() + "'") == 0);
  CHECK(test::read_file(dir / "w.csv").size() > 40);
}
