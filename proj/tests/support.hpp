#pragma once

// Helpers shared by the test programs.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "orbitfl/orbital.hpp"

namespace test {

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

/// Max element-wise error relative to the largest magnitude of `want`.
inline double max_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  double scale = 1e-300, err = 0;
  for (double w : want) scale = std::max(scale, std::abs(w));
  for (std::size_t i = 0; i < want.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
  return got.size() == want.size() ? err / scale : INFINITY;
}

/// Visible stretches on a fixed grid; each window spans [first visible, last visible].
inline std::vector<std::pair<double, double>> scan_windows(const orbitfl::orbital::VisibilityFn& vis, double from,
                                                           double horizon, double step) {
  std::vector<std::pair<double, double>> out;
  bool open = false;
  for (double t = from; t <= from + horizon; t += step) {
    const bool v = vis(t);
    if (v && !open) out.push_back({t, t});
    if (v) out.back().second = t;
    open = v;
  }
  return out;
}

inline std::vector<orbitfl::orbital::ContactWindow> collect_windows(const orbitfl::orbital::VisibilityFn& vis,
                                                                    double from, double horizon) {
  std::vector<orbitfl::orbital::ContactWindow> out;
  double t = from;
  while (t <= from + horizon) {
    const auto w = orbitfl::orbital::next_contact(vis, t, from + horizon - t);
    if (!w) break;
    out.push_back(*w);
    t = w->end_s + 0.5;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("orbitfl_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test
