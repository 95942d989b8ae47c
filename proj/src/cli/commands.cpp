#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "cli/cli.hpp"
#include "cli/config.hpp"
#include "cli/svg.hpp"
#include "json.hpp"
#include "qrect/csv.hpp"
#include "qrect/errors.hpp"
#include "qrect/io.hpp"
#include "qrect/parallel.hpp"
#include "qrect/simd/kernels.hpp"
#include "qrect/verify.hpp"

#ifndef QRECT_VERSION
#define QRECT_VERSION "0.0.0"
#endif

namespace qrect::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestSchema = 1;

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Outputs {
 public:
  Outputs(fs::path dir, bool quiet, std::ostream& log) : dir_(std::move(dir)), quiet_(quiet), log_(log) {}

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(dir_ / name, content);
    files_.push_back(name);
    if (!quiet_) log_ << "wrote " << (dir_ / name).string() << '\n';
  }
  template <class Fn>
  void csv(const std::string& name, Fn&& emit) {
    std::ostringstream s;
    emit(s);
    write(name, s.str());
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  bool quiet_;
  std::ostream& log_;
  std::vector<std::string> files_;
};

std::vector<DyadicCube> dyadic_tree(const DyadicCube& root, int depth) {
  std::vector<DyadicCube> all{root}, level{root};
  for (int j = 0; j < depth; ++j) {
    std::vector<DyadicCube> next;
    for (const auto& c : level)
      for (auto& ch : c.children()) next.push_back(std::move(ch));
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return all;
}

std::vector<DyadicParabolicBox> parabolic_tree(const DyadicParabolicBox& root, int depth) {
  std::vector<DyadicParabolicBox> all{root}, level{root};
  for (int j = 0; j < depth; ++j) {
    std::vector<DyadicParabolicBox> next;
    for (const auto& c : level)
      for (auto& ch : c.children()) next.push_back(std::move(ch));
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return all;
}

std::string exponent_label(double p) { return std::isinf(p) ? "inf" : csv::num(p); }

void write_beta_rows(std::ostream& s, const std::vector<DyadicCube>& cubes, const std::vector<BetaRecord>& recs) {
  s << "level,index,kind,p,q,m,dilation,lo,side,value,stderr,nodes,samples\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const auto& c = cubes[i % cubes.size()];
    s << c.level << ',' << csv::index(c.index) << ',' << to_string(r.kind) << ',' << exponent_label(r.p) << ','
      << (r.q > 0.0 ? csv::num(r.q) : std::string()) << ',' << r.m << ',' << csv::num(r.dilation) << ','
      << csv::vec(r.box.lo) << ',' << csv::vec(r.box.side) << ',' << csv::num(r.value) << ','
      << csv::num(r.stderr_) << ',' << r.nodes << ',' << r.samples << '\n';
  }
}

void per_scale_chart(Outputs& out, const std::string& stem, const CarlesonReport& rep) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& s : rep.scales) {
    labels.push_back(std::to_string(s.level));
    values.push_back(s.contribution);
  }
  out.write("bars_" + stem + ".svg",
            bar_chart_svg("per-scale contribution, " + rep.selector + ", C = " + csv::num(rep.dilation), "level",
                          "sum over level of value^" + csv::num(rep.power) + " |Q|", labels, values));
}

int cmd_analyze(const RunConfig& c, Outputs& out) {
  const auto cubes = dyadic_tree(c.root_cube(), c.depth);
  std::vector<BetaRecord> recs(cubes.size() * c.ps.size());
  parallel_for(recs.size(), [&](std::size_t k) {
    const std::size_t ip = k / cubes.size(), ic = k % cubes.size();
    recs[k] = beta_p_cube(c.field, cubes[ic].box().dilate(c.dilation), c.ps[ip], c.quad);
    recs[k].dilation = c.dilation;
  });
  out.csv("beta.csv", [&](std::ostream& s) { write_beta_rows(s, cubes, recs); });
  return kOk;
}

int cmd_igbeta(const RunConfig& c, Outputs& out) {
  const auto cubes = dyadic_tree(c.root_cube(), c.depth);
  std::vector<BetaRecord> recs(cubes.size());
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    recs[i] = beta_integralgeometric(c.field, cubes[i].box().dilate(c.dilation), c.ig_m, c.ig_p, c.ig_q, c.quad);
    recs[i].dilation = c.dilation;
  }
  out.csv("igbeta.csv", [&](std::ostream& s) { write_beta_rows(s, cubes, recs); });
  return kOk;
}

int cmd_carleson(const RunConfig& c, Outputs& out) {
  for (const auto& name : c.selectors) {
    const auto rep = carleson_sum(c.field, c.root_cube(), c.dilation, c.depth, *selector_from_string(name), c.quad);
    out.csv("scales_" + name + ".csv", [&](std::ostream& s) { write_scales_csv(s, rep); });
    out.csv("cubes_" + name + ".csv", [&](std::ostream& s) { write_cubes_csv(s, rep); });
    per_scale_chart(out, name, rep);
    if (c.n == 2) {
      const int leaf = c.root_level + c.depth;
      std::vector<HeatCell> cells;
      for (const auto& row : rep.cubes) {
        if (row.level != leaf) continue;
        const Box b = DyadicCube{row.level, row.index}.box();
        cells.push_back({b.lo[0], b.lo[1], b.side[0], b.side[1], row.value});
      }
      const Box root = c.root_cube().box();
      out.write("heatmap_" + name + ".svg",
                heatmap_svg(name + "(" + csv::num(c.dilation) + "Q) on leaf cubes, level " + std::to_string(leaf),
                            "x1", "x2", cells, root.lo[0], root.lo[0] + root.side[0], root.lo[1],
                            root.lo[1] + root.side[1]));
    }
  }
  return kOk;
}

std::string simplex_svg(const ReconstructionReport& r, const Box& box) {
  // n = 2: cube, cQ, CQ outline scaled to fit, perturbed planes and corners
  const double c = r.params.c;
  const Box small = box.dilate(c);
  const auto& V = r.selection.corners;
  double x0 = box.lo[0], x1 = box.lo[0] + box.side[0], y0 = box.lo[1], y1 = box.lo[1] + box.side[1];
  for (const auto& v : V) {
    x0 = std::min(x0, v[0]);
    x1 = std::max(x1, v[0]);
    y0 = std::min(y0, v[1]);
    y1 = std::max(y1, v[1]);
  }
  const double pad = 0.05 * std::max(x1 - x0, y1 - y0);
  x0 -= pad, x1 += pad, y0 -= pad, y1 += pad;
  const double S = 400.0 / std::max(x1 - x0, y1 - y0);
  auto X = [&](double x) { return 20.0 + (x - x0) * S; };
  auto Y = [&](double y) { return 40.0 + (y1 - y) * S; };
  char buf[256];
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"440\" height=\"460\" font-family=\"sans-serif\" "
       "font-size=\"12\">\n<rect width=\"440\" height=\"460\" fill=\"white\"/>\n"
       "<text x=\"220\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">simplex from perturbed planes</text>\n";
  auto rect = [&](const Box& b, const char* stroke) {
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"none\" stroke=\"%s\"/>\n",
                  X(b.lo[0]), Y(b.lo[1] + b.side[1]), b.side[0] * S, b.side[1] * S, stroke);
    s << buf;
  };
  rect(box, "black");
  rect(small, "#c0392b");
  s << "<polygon points=\"";
  for (const auto& v : V) {
    std::snprintf(buf, sizeof buf, "%.3f,%.3f ", X(v[0]), Y(v[1]));
    s << buf;
  }
  s << "\" fill=\"#3b6ea8\" fill-opacity=\"0.15\" stroke=\"#3b6ea8\"/>\n";
  for (const auto& v : V) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"#3b6ea8\"/>\n", X(v[0]), Y(v[1]));
    s << buf;
  }
  s << "</svg>\n";
  return s.str();
}

int cmd_reconstruct(const RunConfig& c, Outputs& out) {
  const Box box = c.root_cube().box();
  const auto rep = verify_form1(c.field, box, c.rec, c.quad);
  out.csv("reconstruct.csv", [&](std::ostream& s) { write_reconstruct_csv(s, rep); });
  out.csv("planes.csv", [&](std::ostream& s) { write_planes_csv(s, rep); });
  if (c.n == 2) out.write("simplex.svg", simplex_svg(rep, box));
  return kOk;
}

int cmd_parabolic(const RunConfig& c, Outputs& out) {
  const auto boxes = parabolic_tree(c.root_parabolic(), c.coefficient_depth);
  std::vector<ParabolicCoefficients> rows(boxes.size());
  parallel_for(boxes.size(), [&](std::size_t i) {
    rows[i] = parabolic_coefficients(c.field, boxes[i].box(), c.quad, c.L.value_or(1.0));
  });
  out.csv("coefficients.csv", [&](std::ostream& s) { write_parabolic_coefficients_csv(s, rows); });
  for (const auto& name : c.selectors) {
    const auto sel = *parabolic_selector_from_string(name);
    const auto rep = parabolic_carleson_sum(c.field, c.root_parabolic(), c.dilation, c.depth, sel, c.quad, c.L);
    out.csv("scales_" + name + ".csv", [&](std::ostream& s) { write_scales_csv(s, rep); });
    out.csv("cubes_" + name + ".csv", [&](std::ostream& s) { write_cubes_csv(s, rep); });
    per_scale_chart(out, name, rep);
    if (c.n == 2) {
      const int leaf = c.root_level + c.depth;
      std::vector<HeatCell> cells;
      for (const auto& row : rep.cubes) {
        if (row.level != leaf) continue;
        const ParabolicBox b = DyadicParabolicBox{row.level, {row.index[0]}, row.index[1]}.box();
        cells.push_back({b.space_lo[0], b.t0, b.side, b.duration, row.value});
      }
      const ParabolicBox root = c.root_parabolic().box();
      out.write("heatmap_" + name + ".svg",
                heatmap_svg(name + "(" + csv::num(c.dilation) + "Q) on leaf boxes, level " + std::to_string(leaf),
                            "x", "t", cells, root.space_lo[0], root.space_lo[0] + root.side, root.t0,
                            root.t0 + root.duration));
    }
  }
  return kOk;
}

int cmd_rademacher(const RunConfig& c, Outputs& out) {
  const auto probe = rademacher_probe(c.field, c.point, c.radii, c.quad, c.directions);
  out.csv("probe.csv", [&](std::ostream& s) { write_probe_csv(s, probe); });
  out.csv("probe_fit.csv", [&](std::ostream& s) {
    s << "point,gradient,slope\n"
      << csv::vec(probe.point) << ',' << csv::vec(probe.gradient) << ','
      << (probe.slope ? csv::num(*probe.slope) : std::string()) << '\n';
  });
  return kOk;
}

int cmd_verify(const RunConfig& c, Outputs& out, bool quiet, std::ostream& log) {
  SuiteOptions o;
  o.seed = c.seed;
  o.quad = c.quad;
  o.only = c.properties;
  const auto results = run_suite(o, [&](const PropertyResult& r) {
    if (!quiet) log << (r.pass() ? "PASS " : "FAIL ") << r.id << ' ' << r.name << '\n';
  });
  out.csv("verify.csv", [&](std::ostream& s) { write_verify_csv(s, results); });
  const bool ok = std::all_of(results.begin(), results.end(), [](const PropertyResult& r) { return r.pass(); });
  return ok ? kOk : kPropertyFailed;
}

json versions() {
  json v;
  v["qrect"] = QRECT_VERSION;
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  v["cli11"] = CLI11_VERSION;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  v["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  v["compiler"] = "gcc " __VERSION__;
#else
  v["compiler"] = "unknown";
#endif
  return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiscale affine-approximation coefficients and packing checks"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_flag("--quiet", quiet, "Only report errors");
  app.fallthrough();
  const std::pair<const char*, const char*> commands[] = {
      {"analyze", "beta_p tables over the dyadic tree"},
      {"carleson", "Carleson packing sums"},
      {"igbeta", "integral-geometric beta over the dyadic tree"},
      {"reconstruct", "global affine reconstruction report"},
      {"parabolic", "parabolic coefficient tables and packing sums"},
      {"rademacher", "pointwise differentiability probe"},
      {"verify", "property suite"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = load_config(config_path, command);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (seed) {
    cfg.seed = *seed;
    cfg.quad.seed = *seed;
    cfg.rec.seed = *seed;
  }
  if (!out_dir.empty()) cfg.out = out_dir;

  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) {
    err << "error: cannot create output directory " << cfg.out.string() << ": " << ec.message() << '\n';
    return kConfigError;
  }
  Outputs outputs(cfg.out, quiet, out);

  int code = kOk;
  try {
    if (command == "analyze") code = cmd_analyze(cfg, outputs);
    else if (command == "carleson") code = cmd_carleson(cfg, outputs);
    else if (command == "igbeta") code = cmd_igbeta(cfg, outputs);
    else if (command == "reconstruct") code = cmd_reconstruct(cfg, outputs);
    else if (command == "parabolic") code = cmd_parabolic(cfg, outputs);
    else if (command == "rademacher") code = cmd_rademacher(cfg, outputs);
    else code = cmd_verify(cfg, outputs, quiet, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Config ? kConfigError : kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }

  json m;
  m["schema"] = "qrect.manifest";
  m["schema_version"] = kManifestSchema;
  m["command"] = command;
  m["config"] = cfg.config_path.string();
  m["config_fnv1a64"] = hex64(fnv1a64(cfg.config_text));
  m["seed"] = cfg.seed;
  m["seed_override"] = seed.has_value();
  if (cfg.field) m["function"] = cfg.field_id;
  m["versions"] = versions();
  m["isa"] = std::string(simd::to_string(simd::kernels().isa));
  m["outputs"] = outputs.files();
  m["exit_code"] = code;
  try {
    write_file_atomic(cfg.out / "manifest.json", m.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  if (!quiet) out << "wrote " << (cfg.out / "manifest.json").string() << '\n';
  return code;
}

}  // namespace qrect::cli
