#include "orbitfl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "orbitfl/errors.hpp"

namespace orbitfl::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::string section, std::map<std::string, Entry>& entries, std::set<std::string>& used)
      : section_(std::move(section)), entries_(entries), used_(used) {}

  const Entry* find(const std::string& key) {
    auto it = entries_.find(section_ + "." + key);
    if (it == entries_.end()) return nullptr;
    used_.insert(it->first);
    return &it->second;
  }

  void real(const std::string& key, double& out) {
    if (const auto* e = find(key)) out = to_double(key, *e);
  }

  void real_scaled(const std::string& key, double& out, double scale) {
    if (const auto* e = find(key)) out = to_double(key, *e) * scale;
  }

  void real_db(const std::string& key, double& out, double offset_db) {
    if (const auto* e = find(key)) out = link::db_to_linear(to_double(key, *e) - offset_db);
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    const auto* e = find(key);
    if (!e) return;
    Int v{};
    const auto* first = e->value.data();
    const auto* last = first + e->value.size();
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc{} || r.ptr != last) fail(key, *e, "expected an integer, got '" + e->value + "'");
    out = v;
  }

  void boolean(const std::string& key, bool& out) {
    const auto* e = find(key);
    if (!e) return;
    if (e->value == "true" || e->value == "yes" || e->value == "1")
      out = true;
    else if (e->value == "false" || e->value == "no" || e->value == "0")
      out = false;
    else
      fail(key, *e, "expected true or false, got '" + e->value + "'");
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* e = find(key)) out = e->value;
  }

  template <class Enum>
  void choice(const std::string& key, Enum& out, const std::map<std::string, Enum>& options) {
    const auto* e = find(key);
    if (!e) return;
    const auto it = options.find(e->value);
    if (it == options.end()) {
      std::string list;
      for (const auto& [name, v] : options) list += (list.empty() ? "" : ", ") + name;
      fail(key, *e, "expected one of " + list + ", got '" + e->value + "'");
    }
    out = it->second;
  }

  [[noreturn]] void fail(const std::string& key, const Entry& e, const std::string& what) const {
    throw ConfigError(section_ + "." + key, e.line, what);
  }

 private:
  double to_double(const std::string& key, const Entry& e) const {
    double v = 0;
    const auto* first = e.value.data();
    const auto* last = first + e.value.size();
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc{} || r.ptr != last) fail(key, e, "expected a number, got '" + e.value + "'");
    return v;
  }

  std::string section_;
  std::map<std::string, Entry>& entries_;
  std::set<std::string>& used_;
};

const std::set<std::string> kSections = {"constellation", "ps", "link", "learning", "data", "protocol", "sim"};

}  // namespace

sim::ScenarioConfig parse(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!kSections.contains(section)) throw ConfigError(section, line_no, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", line_no, "expected key = value");
    if (section.empty()) throw ConfigError(std::string(trim(line.substr(0, eq))), line_no, "key outside a section");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    Entry e{std::string(trim(line.substr(eq + 1))), line_no};
    if (!entries.emplace(key, e).second) throw ConfigError(key, line_no, "duplicate key");
  }

  std::set<std::string> used;
  sim::ScenarioConfig c;

  Reader k("constellation", entries, used);
  k.integer("planes", c.constellation.planes);
  k.integer("sats_per_plane", c.constellation.sats_per_plane);
  k.real("altitude_km", c.constellation.altitude_km);
  k.real("inclination_deg", c.constellation.inclination_deg);
  k.integer("phasing", c.constellation.phasing);
  k.real("earth_angle0_deg", c.constellation.earth_angle0_deg);

  Reader ps("ps", entries, used);
  ps.choice("kind", c.ps.kind,
            std::map<std::string, sim::PsKind>{{"meo", sim::PsKind::meo},
                                               {"north_pole", sim::PsKind::north_pole},
                                               {"bremen", sim::PsKind::bremen},
                                               {"ground", sim::PsKind::ground}});
  ps.real("altitude_km", c.ps.altitude_km);
  ps.real("inclination_deg", c.ps.inclination_deg);
  ps.real("raan_deg", c.ps.raan_deg);
  ps.real("phase_deg", c.ps.phase_deg);
  if (c.ps.kind == sim::PsKind::ground) {
    for (const char* required : {"latitude_deg", "longitude_deg"})
      if (!entries.contains(std::string("ps.") + required))
        throw ConfigError(std::string("ps.") + required, 0, "missing required key for kind = ground");
  }
  ps.real("latitude_deg", c.ps.latitude_deg);
  ps.real("longitude_deg", c.ps.longitude_deg);
  ps.real("station_altitude_km", c.ps.station_altitude_km);
  ps.real("min_elevation_deg", c.ps.min_elevation_deg);

  Reader l("link", entries, used);
  const auto exclusive = [&](const char* a, const char* b) {
    const auto ka = std::string("link.") + a, kb = std::string("link.") + b;
    if (entries.contains(ka) && entries.contains(kb))
      throw ConfigError(kb, entries.at(kb).line, std::string("conflicts with ") + a);
  };
  exclusive("tx_power_dbm", "tx_power_w");
  exclusive("tx_gain_dbi", "tx_gain_linear");
  exclusive("rx_gain_dbi", "rx_gain_linear");
  l.real_db("tx_power_dbm", c.link.tx_power_w, 30.0);
  l.real("tx_power_w", c.link.tx_power_w);
  l.real_db("tx_gain_dbi", c.link.tx_gain_linear, 0.0);
  l.real("tx_gain_linear", c.link.tx_gain_linear);
  l.real_db("rx_gain_dbi", c.link.rx_gain_linear, 0.0);
  l.real("rx_gain_linear", c.link.rx_gain_linear);
  l.real("bandwidth_hz", c.link.bandwidth_hz);
  l.real("noise_temp_k", c.link.noise_temp_k);
  l.real("carrier_hz", c.link.carrier_hz);
  l.real("tx_proc_delay_s", c.link.tx_proc_delay_s);
  l.real("rx_proc_delay_s", c.link.rx_proc_delay_s);
  l.choice("rate_model", c.link.rate_model,
           std::map<std::string, link::RateModel>{{"shannon", link::RateModel::shannon},
                                                  {"constant", link::RateModel::constant}});
  l.real("constant_rate_bps", c.link.constant_rate_bps);
  l.integer("bits_per_param", c.wire.bits_per_param);
  l.integer("header_bits", c.wire.header_bits);
  l.integer("control_bits", c.wire.control_bits);

  Reader m("learning", entries, used);
  m.real("learning_rate", c.learner.learning_rate);
  m.integer("local_iterations", c.learner.local_iterations);
  m.real("cycles_per_sample", c.learner.cycles_per_sample);
  m.real("cpu_hz", c.learner.cpu_hz);
  m.real("compute_multiplier", c.learner.compute_multiplier);
  m.choice("init", c.init,
           std::map<std::string, sim::InitKind>{{"zeros", sim::InitKind::zeros}, {"random", sim::InitKind::random}});
  m.boolean("train", c.train);

  Reader d("data", entries, used);
  d.text("train_images", c.data.train_images);
  d.text("train_labels", c.data.train_labels);
  d.text("test_images", c.data.test_images);
  d.text("test_labels", c.data.test_labels);
  d.boolean("synthetic_fallback", c.data.synthetic_fallback);
  d.integer("samples_per_satellite", c.data.samples_per_satellite);
  d.integer("test_samples", c.data.test_samples);
  d.integer("num_features", c.data.num_features);
  d.integer("num_classes", c.data.num_classes);
  d.real("separation", c.data.separation);
  d.real("noise", c.data.noise);
  d.integer("nuisance_dims", c.data.nuisance_dims);
  d.real("nuisance", c.data.nuisance);
  d.choice("split", c.data.split,
           std::map<std::string, sim::Split>{{"iid", sim::Split::iid}, {"label_halves", sim::Split::label_halves}});

  Reader p("protocol", entries, used);
  p.choice("name", c.protocol,
           std::map<std::string, sim::Protocol>{{"fedisl", sim::Protocol::fedisl},
                                                {"fednonisl", sim::Protocol::fednonisl}});
  p.real("reconnect_wait_s", c.options.reconnect_wait_s);
  p.real("grace_factor", c.options.grace_factor);

  Reader s("sim", entries, used);
  if (entries.contains("sim.horizon_hours") && entries.contains("sim.horizon_s"))
    throw ConfigError("sim.horizon_s", entries.at("sim.horizon_s").line, "conflicts with horizon_hours");
  if (entries.contains("sim.stall_limit_hours") && entries.contains("sim.stall_limit_s"))
    throw ConfigError("sim.stall_limit_s", entries.at("sim.stall_limit_s").line, "conflicts with stall_limit_hours");
  s.real_scaled("horizon_hours", c.horizon_s, 3600.0);
  s.real("horizon_s", c.horizon_s);
  s.integer("max_epochs", c.max_epochs);
  s.real_scaled("stall_limit_hours", c.stall_limit_s, 3600.0);
  s.real("stall_limit_s", c.stall_limit_s);
  s.integer("seed", c.seed);

  for (const auto& [key, e] : entries)
    if (!used.contains(key)) throw ConfigError(key, e.line, "unknown key");

  try {
    sim::validate(c);
  } catch (const ConfigError& e) {
    // Point at the line that set the offending value, when there is one.
    const auto it = entries.find(e.key());
    if (it != entries.end()) {
      std::string what = e.what();
      const auto colon = what.find(": ");
      throw ConfigError(e.key(), it->second.line, colon == std::string::npos ? what : what.substr(colon + 2));
    }
    throw;
  }
  return c;
}

sim::ScenarioConfig parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string emit(const sim::ScenarioConfig& c) {
  std::ostringstream o;
  const auto kv = [&](const char* key, const std::string& v) { o << key << " = " << v << '\n'; };
  const auto num = [&](const char* key, double v) { kv(key, number(v)); };
  const auto integer = [&](const char* key, auto v) { kv(key, std::to_string(v)); };
  const auto flag = [&](const char* key, bool v) { kv(key, v ? "true" : "false"); };

  o << "[constellation]\n";
  integer("planes", c.constellation.planes);
  integer("sats_per_plane", c.constellation.sats_per_plane);
  num("altitude_km", c.constellation.altitude_km);
  num("inclination_deg", c.constellation.inclination_deg);
  integer("phasing", c.constellation.phasing);
  num("earth_angle0_deg", c.constellation.earth_angle0_deg);

  o << "\n[ps]\n";
  kv("kind", sim::to_string(c.ps.kind));
  num("altitude_km", c.ps.altitude_km);
  num("inclination_deg", c.ps.inclination_deg);
  num("raan_deg", c.ps.raan_deg);
  num("phase_deg", c.ps.phase_deg);
  num("latitude_deg", c.ps.latitude_deg);
  num("longitude_deg", c.ps.longitude_deg);
  num("station_altitude_km", c.ps.station_altitude_km);
  num("min_elevation_deg", c.ps.min_elevation_deg);

  o << "\n[link]\n";
  num("tx_power_w", c.link.tx_power_w);
  num("tx_gain_linear", c.link.tx_gain_linear);
  num("rx_gain_linear", c.link.rx_gain_linear);
  num("bandwidth_hz", c.link.bandwidth_hz);
  num("noise_temp_k", c.link.noise_temp_k);
  num("carrier_hz", c.link.carrier_hz);
  num("tx_proc_delay_s", c.link.tx_proc_delay_s);
  num("rx_proc_delay_s", c.link.rx_proc_delay_s);
  kv("rate_model", c.link.rate_model == link::RateModel::shannon ? "shannon" : "constant");
  num("constant_rate_bps", c.link.constant_rate_bps);
  integer("bits_per_param", c.wire.bits_per_param);
  integer("header_bits", c.wire.header_bits);
  integer("control_bits", c.wire.control_bits);

  o << "\n[learning]\n";
  num("learning_rate", c.learner.learning_rate);
  integer("local_iterations", c.learner.local_iterations);
  num("cycles_per_sample", c.learner.cycles_per_sample);
  num("cpu_hz", c.learner.cpu_hz);
  num("compute_multiplier", c.learner.compute_multiplier);
  kv("init", c.init == sim::InitKind::zeros ? "zeros" : "random");
  flag("train", c.train);

  o << "\n[data]\n";
  kv("train_images", c.data.train_images);
  kv("train_labels", c.data.train_labels);
  kv("test_images", c.data.test_images);
  kv("test_labels", c.data.test_labels);
  flag("synthetic_fallback", c.data.synthetic_fallback);
  integer("samples_per_satellite", c.data.samples_per_satellite);
  integer("test_samples", c.data.test_samples);
  integer("num_features", c.data.num_features);
  integer("num_classes", c.data.num_classes);
  num("separation", c.data.separation);
  num("noise", c.data.noise);
  integer("nuisance_dims", c.data.nuisance_dims);
  num("nuisance", c.data.nuisance);
  kv("split", c.data.split == sim::Split::iid ? "iid" : "label_halves");

  o << "\n[protocol]\n";
  kv("name", sim::to_string(c.protocol));
  num("reconnect_wait_s", c.options.reconnect_wait_s);
  num("grace_factor", c.options.grace_factor);

  o << "\n[sim]\n";
  num("horizon_s", c.horizon_s);
  integer("max_epochs", c.max_epochs);
  num("stall_limit_s", c.stall_limit_s);
  integer("seed", c.seed);
  return o.str();
}

}  // namespace orbitfl::config
