#pragma once
// Run configuration: JSON with every value traceable to its source line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrect/beta.hpp"
#include "qrect/parabolic.hpp"
#include "qrect/reconstruct.hpp"

namespace qrect::cli {

/// Config problem tied to a line of the config file (0 when not applicable).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string file, std::size_t line, const std::string& msg);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parsed JSON plus a JSON-pointer -> line table.
class Document {
 public:
  static Document parse(const std::string& text, const std::string& file);

  const nlohmann::json& root() const { return root_; }
  std::size_t line_of(const std::string& pointer) const;
  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const;
  const std::string& file() const { return file_; }

 private:
  nlohmann::json root_;
  std::map<std::string, std::size_t> lines_;
  std::string file_;
};

struct RunConfig {
  std::string command;
  std::filesystem::path config_path;
  std::string config_text;

  Field field;
  std::string field_id;
  std::size_t n = 0;
  int root_level = 0;
  std::vector<std::int64_t> root_index;
  std::int64_t root_time_index = 0;
  int depth = 3;
  double dilation = 3.0;
  std::vector<std::string> selectors;
  std::vector<double> ps{2.0};
  QuadratureSpec quad;
  std::uint64_t seed = 7;
  std::filesystem::path out = "out";

  // igbeta
  std::size_t ig_m = 1;
  double ig_p = 2.0;
  double ig_q = 2.0;
  // reconstruct
  ReconstructParams rec;
  // parabolic
  std::optional<double> L;
  int coefficient_depth = 2;
  // rademacher
  std::vector<double> point;
  std::vector<double> radii;
  std::size_t directions = 256;
  // verify
  std::vector<int> properties;

  DyadicCube root_cube() const;
  DyadicParabolicBox root_parabolic() const;
};

/// Reads and validates the config for `command`. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path, const std::string& command);

}  // namespace qrect::cli
