#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/cli.hpp"
#include "cli/config.hpp"
#include "doctest.h"
#include "json.hpp"
#include "qrect/csv.hpp"

namespace fs = std::filesystem;
using qrect::cli::run;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Sandbox {
  fs::path dir;
  std::ostringstream out, err;

  Sandbox() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("qrect_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~Sandbox() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  int exec(const std::string& command, const fs::path& config, const std::string& outdir,
           std::vector<std::string> extra = {}) {
    std::vector<std::string> args{command, "--config", config.string(), "--out", (dir / outdir).string(), "--quiet"};
    args.insert(args.end(), extra.begin(), extra.end());
    out.str("");
    err.str("");
    return run(args, out, err);
  }
};

// rows of a CSV with the header dropped
std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> r;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    r.push_back(cells);
  }
  return r;
}

std::string header(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  return line;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

const char* kAffine = R"({
  "function": {"catalog": "affine", "grad": [2.0, -3.0], "intercept": 1.0},
  "n": 2,
  "depth": 2,
  "dilation": 1,
  "p": [1, 2, 4, "inf"]
}
)";

const char* kCone = R"({
  "function": {"catalog": "cone", "center": [0.3, 0.6]},
  "n": 2,
  "depth": 2,
  "dilation": 3,
  "p": [2, "inf"],
  "quadrature": {"nodes": 9}
}
)";

}  // namespace

TEST_CASE("analyze on an affine function gives zero coefficients") {
  Sandbox sb;
  REQUIRE(sb.exec("analyze", sb.write("a.json", kAffine), "o") == 0);
  const fs::path csv = sb.dir / "o" / "beta.csv";
  CHECK(header(csv) == "level,index,kind,p,q,m,dilation,lo,side,value,stderr,nodes,samples");
  const auto r = rows(csv);
  // 1 + 4 + 16 cubes, four exponents each
  REQUIRE(r.size() == 21 * 4);
  for (const auto& row : r) {
    REQUIRE(row.size() == 13);
    CHECK(std::stod(row[9]) <= 1e-10);
  }
}

TEST_CASE("analyze output is byte-identical across runs") {
  Sandbox sb;
  const auto cfg = sb.write("c.json", kCone);
  REQUIRE(sb.exec("analyze", cfg, "a") == 0);
  REQUIRE(sb.exec("analyze", cfg, "b") == 0);
  CHECK(slurp(sb.dir / "a" / "beta.csv") == slurp(sb.dir / "b" / "beta.csv"));
  CHECK(slurp(sb.dir / "a" / "manifest.json").size() > 0);
}

TEST_CASE("manifest records hash, seed and versions") {
  Sandbox sb;
  const auto cfg = sb.write("c.json", kCone);
  REQUIRE(sb.exec("analyze", cfg, "a") == 0);
  const auto m = manifest(sb.dir / "a");
  CHECK(m["schema"] == "qrect.manifest");
  CHECK(m["command"] == "analyze");
  CHECK(m["exit_code"] == 0);
  CHECK(m["seed"] == 7);
  CHECK(m["seed_override"] == false);
  CHECK(m["config_fnv1a64"].get<std::string>().size() == 16);
  CHECK(m["versions"].contains("qrect"));
  CHECK(m["versions"].contains("nlohmann_json"));
  CHECK(m["versions"].contains("cli11"));
  CHECK(m["versions"].contains("eigen"));
  CHECK(m["outputs"] == nlohmann::json::array({"beta.csv"}));

  SUBCASE("same bytes, same hash") {
    const auto again = sb.write("d.json", kCone);
    REQUIRE(sb.exec("analyze", again, "b") == 0);
    CHECK(manifest(sb.dir / "b")["config_fnv1a64"] == m["config_fnv1a64"]);
  }
  SUBCASE("any edit changes the hash") {
    const auto edited = sb.write("e.json", std::string(kCone) + "\n");
    REQUIRE(sb.exec("analyze", edited, "b") == 0);
    CHECK(manifest(sb.dir / "b")["config_fnv1a64"] != m["config_fnv1a64"]);
  }
  SUBCASE("seed flag overrides the config") {
    REQUIRE(sb.exec("analyze", cfg, "b", {"--seed", "11"}) == 0);
    const auto m2 = manifest(sb.dir / "b");
    CHECK(m2["seed"] == 11);
    CHECK(m2["seed_override"] == true);
  }
}

TEST_CASE("config errors name the line and exit 2") {
  Sandbox sb;
  SUBCASE("unknown key") {
    const auto cfg = sb.write("k.json", "{\n  \"function\": {\"catalog\": \"cone\"},\n  \"n\": 2,\n  \"dpth\": 3\n}\n");
    CHECK(sb.exec("analyze", cfg, "o") == qrect::cli::kConfigError);
    CHECK(sb.err.str().find("k.json:4:") != std::string::npos);
    CHECK(sb.err.str().find("dpth") != std::string::npos);
  }
  SUBCASE("malformed JSON") {
    const auto cfg = sb.write("j.json", "{\n  \"n\": 2,\n  \"depth\": 3,,\n}\n");
    CHECK(sb.exec("analyze", cfg, "o") == qrect::cli::kConfigError);
    CHECK(sb.err.str().find("j.json:3:") != std::string::npos);
  }
  SUBCASE("nested value") {
    const auto cfg = sb.write(
        "q.json", "{\n  \"function\": {\"catalog\": \"cone\"},\n  \"n\": 2,\n  \"quadrature\": {\n    \"nodes\": 8\n  }\n}\n");
    CHECK(sb.exec("analyze", cfg, "o") == qrect::cli::kConfigError);
    CHECK(sb.err.str().find("q.json:5:") != std::string::npos);
    CHECK(sb.err.str().find("quadrature/nodes") != std::string::npos);
  }
  SUBCASE("wrong arity") {
    const auto cfg = sb.write("d.json", "{\n  \"function\": {\"catalog\": \"cone\", \"center\": [1, 2, 3]},\n  \"n\": 2\n}\n");
    CHECK(sb.exec("analyze", cfg, "o") == qrect::cli::kConfigError);
    CHECK(sb.err.str().find("d.json:2:") != std::string::npos);
  }
  SUBCASE("missing grid file is named") {
    const auto cfg = sb.write("g.json", "{\n  \"n\": 2,\n  \"function\": {\"grid\": \"nowhere/f.csv\"}\n}\n");
    CHECK(sb.exec("analyze", cfg, "o") == qrect::cli::kConfigError);
    CHECK(sb.err.str().find("g.json:3:") != std::string::npos);
    CHECK(sb.err.str().find("nowhere/f.csv") != std::string::npos);
  }
  SUBCASE("missing config file") {
    CHECK(sb.exec("analyze", sb.dir / "absent.json", "o") == qrect::cli::kConfigError);
  }
  SUBCASE("command needs a higher dimension") {
    const auto cfg = sb.write("r.json", "{\n  \"function\": {\"catalog\": \"cone\"},\n  \"n\": 1\n}\n");
    CHECK(sb.exec("reconstruct", cfg, "o") == qrect::cli::kConfigError);
  }
  SUBCASE("unknown subcommand") {
    CHECK(run({"frobnicate"}, sb.out, sb.err) == qrect::cli::kConfigError);
  }
  CHECK_FALSE(fs::exists(sb.dir / "o" / "beta.csv"));
}

TEST_CASE("grid CSV input") {
  Sandbox sb;
  // f = x + 2y on [0,1] x [0,0.5]: 11 x 6 nodes, spacing 0.1
  std::ostringstream g;
  g << "2,11,6,0.1,0.1,0,0\n";
  // last axis fastest
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 6; ++j) g << qrect::csv::num(0.1 * i + 2.0 * 0.1 * j) << '\n';
  sb.write("grids/plane.csv", g.str());

  SUBCASE("affine grid analyzes to zero") {
    const auto cfg = sb.write("c.json",
                              "{\n  \"function\": {\"grid\": \"grids/plane.csv\"},\n  \"n\": 2,\n  \"root\": {\"level\": 1, "
                              "\"index\": [0, 0]},\n  \"depth\": 1,\n  \"dilation\": 1,\n  \"p\": [2, \"inf\"]\n}\n");
    REQUIRE(sb.exec("analyze", cfg, "o") == 0);
    for (const auto& row : rows(sb.dir / "o" / "beta.csv")) CHECK(std::stod(row[9]) <= 1e-10);
  }
  SUBCASE("evaluation outside the lattice is a numerical failure") {
    const auto cfg = sb.write("c.json",
                              "{\n  \"function\": {\"grid\": \"grids/plane.csv\"},\n  \"n\": 2,\n  \"depth\": 1,\n  "
                              "\"dilation\": 3\n}\n");
    CHECK(sb.exec("analyze", cfg, "o") == qrect::cli::kNumericalFailure);
    CHECK(sb.err.str().find("OutOfDomain") != std::string::npos);
  }
}

TEST_CASE("carleson in the plane writes bar charts and a heatmap") {
  Sandbox sb;
  const auto cfg = sb.write("c.json", R"({
  "function": {"catalog": "cone", "center": [0.3, 0.3]},
  "n": 2,
  "depth": 3,
  "selectors": ["beta2", "beta_inf_lines"],
  "quadrature": {"nodes": 9}
}
)");
  REQUIRE(sb.exec("carleson", cfg, "o") == 0);
  for (const char* sel : {"beta2", "beta_inf_lines"}) {
    const std::string s = sel;
    const auto bars = slurp(sb.dir / "o" / ("bars_" + s + ".svg"));
    const auto heat = slurp(sb.dir / "o" / ("heatmap_" + s + ".svg"));
    CHECK(bars.rfind("<svg", 0) == 0);
    CHECK(heat.rfind("<svg", 0) == 0);
    CHECK(bars.find("</svg>") != std::string::npos);
    CHECK(heat.find("</svg>") != std::string::npos);
    // levels 0..3
    CHECK(rows(sb.dir / "o" / ("scales_" + s + ".csv")).size() == 4);
    CHECK(rows(sb.dir / "o" / ("cubes_" + s + ".csv")).size() == 1 + 4 + 16 + 64);
  }
  for (const auto& e : fs::directory_iterator(sb.dir / "o"))
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("carleson on the line skips the heatmap") {
  Sandbox sb;
  const auto cfg = sb.write("c.json", R"({
  "function": {"catalog": "cone", "center": [0.3]},
  "n": 1,
  "depth": 4
}
)");
  REQUIRE(sb.exec("carleson", cfg, "o") == 0);
  CHECK(fs::exists(sb.dir / "o" / "bars_beta2.svg"));
  CHECK_FALSE(fs::exists(sb.dir / "o" / "heatmap_beta2.svg"));
}

TEST_CASE("verify subset passes and is deterministic") {
  Sandbox sb;
  const auto cfg = sb.write("v.json", "{\n  \"verify\": {\"properties\": [1, 9]}\n}\n");
  REQUIRE(sb.exec("verify", cfg, "a") == 0);
  REQUIRE(sb.exec("verify", cfg, "b") == 0);
  const auto a = slurp(sb.dir / "a" / "verify.csv");
  CHECK(a == slurp(sb.dir / "b" / "verify.csv"));
  CHECK(header(sb.dir / "a" / "verify.csv") == "property,name,check,value,bound,pass");
  for (const auto& row : rows(sb.dir / "a" / "verify.csv")) {
    REQUIRE(row.size() == 6);
    CHECK((row[0] == "1" || row[0] == "9"));
    CHECK(row[5] == "1");
  }
}

TEST_CASE("verify rejects unknown property ids") {
  Sandbox sb;
  const auto cfg = sb.write("v.json", "{\n  \"verify\": {\n    \"properties\": [1, 12]\n  }\n}\n");
  CHECK(sb.exec("verify", cfg, "a") == qrect::cli::kConfigError);
  CHECK(sb.err.str().find("v.json:3:") != std::string::npos);
}

TEST_CASE("rademacher probe on a smooth field has slope near one") {
  Sandbox sb;
  const auto cfg = sb.write("r.json", R"({
  "function": {"catalog": "separable", "spatial": {"catalog": "square"}, "time": "sin"},
  "n": 2,
  "rademacher": {"point": [0.2, -0.4], "radii": [0.125, 0.0625, 0.03125, 0.015625, 0.0078125]}
}
)");
  REQUIRE(sb.exec("rademacher", cfg, "o") == 0);
  const auto fit = rows(sb.dir / "o" / "probe_fit.csv");
  REQUIRE(fit.size() == 1);
  CHECK(std::stod(fit[0].back()) > 0.9);
  CHECK(rows(sb.dir / "o" / "probe.csv").size() == 5);
}

TEST_CASE("reconstruct and parabolic run end to end") {
  Sandbox sb;
  const auto rc = sb.write("r.json", R"({
  "function": {"catalog": "cone", "center": [0.5, 0.5]},
  "n": 2,
  "quadrature": {"nodes": 9, "mc_samples": 512}
}
)");
  REQUIRE(sb.exec("reconstruct", rc, "r") == 0);
  CHECK(fs::exists(sb.dir / "r" / "reconstruct.csv"));
  CHECK(fs::exists(sb.dir / "r" / "planes.csv"));
  CHECK(fs::exists(sb.dir / "r" / "simplex.svg"));

  const auto pc = sb.write("p.json", R"({
  "function": {"catalog": "separable", "spatial": {"catalog": "affine", "grad": [1.5]}, "time": "zero"},
  "n": 2,
  "depth": 2,
  "selectors": ["beta2", "osc"],
  "parabolic": {"coefficient_depth": 1},
  "quadrature": {"nodes": 9}
}
)");
  REQUIRE(sb.exec("parabolic", pc, "p") == 0);
  CHECK(fs::exists(sb.dir / "p" / "coefficients.csv"));
  CHECK(fs::exists(sb.dir / "p" / "heatmap_osc.svg"));
  for (const char* sel : {"beta2", "osc"})
    for (const auto& row : rows(sb.dir / "p" / ("scales_" + std::string(sel) + ".csv")))
      for (std::size_t k = 2; k < row.size(); ++k) CHECK(std::abs(std::stod(row[k])) <= 1e-10);
}

TEST_CASE("load_config resolves defaults") {
  Sandbox sb;
  const auto cfg = sb.write("c.json", "{\n  \"function\": {\"catalog\": \"bump\"},\n  \"n\": 3\n}\n");
  const auto c = qrect::cli::load_config(cfg, "analyze");
  CHECK(c.n == 3);
  CHECK(c.depth == 3);
  CHECK(c.dilation == 3.0);
  CHECK(c.seed == 7);
  CHECK(c.field_id == "bump");
  CHECK(c.root_cube().dim() == 3);
}
