#include "cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qrect/errors.hpp"

namespace qrect::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string file, std::size_t line, const std::string& msg)
    : std::runtime_error(line ? file + ":" + std::to_string(line) + ": " + msg : file + ": " + msg), line_(line) {}

namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

/// Walks JSON text that nlohmann already accepted and records the line at
/// which every value starts.
class LineScanner {
 public:
  LineScanner(const std::string& text, std::map<std::string, std::size_t>& lines) : s_(text), lines_(lines) {}

  void run() { value(""); }

 private:
  const std::string& s_;
  std::map<std::string, std::size_t>& lines_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void advance() {
    if (peek() == '\n') ++line_;
    ++pos_;
  }
  void ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }
  std::string string() {
    std::string out;
    advance();  // opening quote
    while (pos_ < s_.size() && peek() != '"') {
      if (peek() == '\\') {
        advance();
        const char e = peek();
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += peek();
      }
      advance();
    }
    advance();
    return out;
  }
  void value(const std::string& path) {
    ws();
    lines_[path] = line_;
    const char c = peek();
    if (c == '{') {
      advance();
      ws();
      while (peek() != '}' && pos_ < s_.size()) {
        ws();
        const std::string key = string();
        ws();
        advance();  // ':'
        value(path + "/" + escape_token(key));
        ws();
        if (peek() == ',') advance();
        ws();
      }
      advance();
    } else if (c == '[') {
      advance();
      ws();
      std::size_t i = 0;
      while (peek() != ']' && pos_ < s_.size()) {
        value(path + "/" + std::to_string(i++));
        ws();
        if (peek() == ',') advance();
        ws();
      }
      advance();
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
             peek() != '}')
        advance();
    }
  }
};

}  // namespace

Document Document::parse(const std::string& text, const std::string& file) {
  Document d;
  d.file_ = file;
  try {
    d.root_ = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError(file, line, "invalid JSON: " + msg);
  }
  LineScanner(text, d.lines_).run();
  return d;
}

std::size_t Document::line_of(const std::string& pointer) const {
  // fall back to the closest enclosing value that has a line
  std::string p = pointer;
  while (true) {
    if (auto it = lines_.find(p); it != lines_.end()) return it->second;
    if (p.empty()) return 0;
    p = p.substr(0, p.rfind('/'));
  }
}

void Document::fail(const std::string& pointer, const std::string& msg) const {
  const std::string where = pointer.empty() ? "config" : "\"" + pointer.substr(1) + "\"";
  throw ConfigError(file_, line_of(pointer), where + ": " + msg);
}

namespace {

class Reader {
 public:
  Reader(const Document& d, std::filesystem::path base) : d_(d), base_(std::move(base)) {}

  const json* find(const std::string& ptr) const {
    const json::json_pointer jp(ptr);
    return d_.root().contains(jp) ? &d_.root().at(jp) : nullptr;
  }
  bool has(const std::string& ptr) const { return find(ptr) != nullptr; }

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const { d_.fail(ptr, msg); }

  void only_keys(const std::string& ptr, std::initializer_list<const char*> allowed) const {
    const json* v = find(ptr);
    if (!v) return;
    if (!v->is_object()) fail(ptr, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : v->items())
      if (!ok.count(k)) fail(ptr + "/" + escape_token(k), "unknown key");
  }

  double number(const std::string& ptr, double lo = -std::numeric_limits<double>::infinity(),
                double hi = std::numeric_limits<double>::infinity()) const {
    const json* v = find(ptr);
    if (!v || !v->is_number()) fail(ptr, "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) {
      std::ostringstream m;
      m << "value " << x << " outside [" << lo << ", " << hi << "]";
      fail(ptr, m.str());
    }
    return x;
  }
  double number_or(const std::string& ptr, double def, double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity()) const {
    return has(ptr) ? number(ptr, lo, hi) : def;
  }
  std::int64_t integer(const std::string& ptr, std::int64_t lo, std::int64_t hi) const {
    const json* v = find(ptr);
    if (!v || !v->is_number_integer()) fail(ptr, "expected an integer");
    const auto x = v->get<std::int64_t>();
    if (x < lo || x > hi) fail(ptr, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
    return x;
  }
  std::int64_t integer_or(const std::string& ptr, std::int64_t def, std::int64_t lo, std::int64_t hi) const {
    return has(ptr) ? integer(ptr, lo, hi) : def;
  }
  std::string string(const std::string& ptr) const {
    const json* v = find(ptr);
    if (!v || !v->is_string()) fail(ptr, "expected a string");
    return v->get<std::string>();
  }
  /// p-norm exponent: number >= 1 or "inf".
  double exponent(const std::string& ptr) const {
    const json* v = find(ptr);
    if (v && v->is_string() && v->get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (!v || !v->is_number()) fail(ptr, "expected a number >= 1 or \"inf\"");
    return number(ptr, 1.0);
  }
  std::vector<double> vec(const std::string& ptr, std::optional<std::size_t> size = std::nullopt) const {
    const json* v = find(ptr);
    if (!v || !v->is_array()) fail(ptr, "expected an array of numbers");
    if (size && v->size() != *size)
      fail(ptr, "expected " + std::to_string(*size) + " entries, found " + std::to_string(v->size()));
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(number(ptr + "/" + std::to_string(i)));
    return out;
  }
  std::size_t array_size(const std::string& ptr) const {
    const json* v = find(ptr);
    if (!v || !v->is_array()) fail(ptr, "expected an array");
    return v->size();
  }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_ / path;
  }

 private:
  const Document& d_;
  std::filesystem::path base_;
};

Field parse_function(const Reader& r, const std::string& ptr, std::size_t n) {
  if (!r.has(ptr)) r.fail(ptr, "missing function spec");
  if (r.has(ptr + "/grid")) {
    r.only_keys(ptr, {"grid"});
    const auto path = r.resolve(r.string(ptr + "/grid"));
    if (!std::filesystem::exists(path)) r.fail(ptr + "/grid", "grid file not found: " + path.string());
    Field f;
    try {
      f = load_grid_csv(path);
    } catch (const Error& e) {
      r.fail(ptr + "/grid", e.what());
    }
    if (f.dim() != n)
      r.fail(ptr + "/grid", "grid has dimension " + std::to_string(f.dim()) + ", config n is " + std::to_string(n));
    return f;
  }
  const std::string id = r.string(ptr + "/catalog");
  const auto key = [&](const char* k) { return ptr + "/" + k; };
  if (id == "affine") {
    r.only_keys(ptr, {"catalog", "grad", "intercept"});
    return catalog::affine(r.vec(key("grad"), n), r.number_or(key("intercept"), 0.0));
  }
  if (id == "piecewise_linear") {
    r.only_keys(ptr, {"catalog", "knots", "values", "direction"});
    const auto knots = r.vec(key("knots"));
    if (knots.size() < 2) r.fail(key("knots"), "need at least two knots");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i] > knots[i - 1])) r.fail(key("knots") + "/" + std::to_string(i), "knots must increase");
    const auto values = r.vec(key("values"), knots.size());
    Vec dir(n, 0.0);
    dir[0] = 1.0;
    if (r.has(key("direction"))) {
      dir = r.vec(key("direction"), n);
      if (norm(dir) == 0.0) r.fail(key("direction"), "direction must be nonzero");
    }
    return catalog::piecewise_linear(knots, values, dir);
  }
  if (id == "random_piecewise_linear") {
    r.only_keys(ptr, {"catalog", "breakpoints", "seed"});
    const auto k = r.integer_or(key("breakpoints"), 4, 1, 1000);
    const auto s = r.integer_or(key("seed"), 7, 0, std::numeric_limits<std::int64_t>::max());
    return catalog::random_piecewise_linear(n, static_cast<std::size_t>(k), static_cast<std::uint64_t>(s));
  }
  if (id == "cone") {
    r.only_keys(ptr, {"catalog", "center"});
    return catalog::cone(r.has(key("center")) ? r.vec(key("center"), n) : Vec(n, 0.0));
  }
  if (id == "distance_to_points") {
    r.only_keys(ptr, {"catalog", "points"});
    const std::size_t m = r.array_size(key("points"));
    if (m == 0) r.fail(key("points"), "need at least one point");
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < m; ++i) pts.push_back(r.vec(key("points") + "/" + std::to_string(i), n));
    return catalog::distance_to_points(std::move(pts));
  }
  if (id == "bump") {
    r.only_keys(ptr, {"catalog", "center", "radius", "height"});
    const Vec c = r.has(key("center")) ? r.vec(key("center"), n) : Vec(n, 0.0);
    const double rad = r.number_or(key("radius"), 0.5, 1e-12);
    return catalog::bump(c, rad, r.number_or(key("height"), 1.0));
  }
  if (id == "square") {
    r.only_keys(ptr, {"catalog"});
    return catalog::square(n);
  }
  if (id == "separable") {
    r.only_keys(ptr, {"catalog", "spatial", "time"});
    if (n < 2) r.fail(key("catalog"), "separable fields need n >= 2");
    const Field g = parse_function(r, key("spatial"), n - 1);
    const std::string t = r.has(key("time")) ? r.string(key("time")) : "zero";
    catalog::TimeTerm term;
    if (t == "zero") term = catalog::TimeTerm::Zero;
    else if (t == "sin") term = catalog::TimeTerm::Sin;
    else if (t == "t") term = catalog::TimeTerm::Linear;
    else r.fail(key("time"), "expected \"zero\", \"sin\" or \"t\"");
    return catalog::separable(g, term);
  }
  if (id == "product") {
    r.only_keys(ptr, {"catalog"});
    if (n < 2) r.fail(key("catalog"), "product fields need n >= 2");
    return catalog::product(n);
  }
  r.fail(key("catalog"), "unknown catalog id '" + id + "'");
}

bool is_parabolic_command(const std::string& c) { return c == "parabolic" || c == "rademacher"; }

}  // namespace

DyadicCube RunConfig::root_cube() const { return DyadicCube{root_level, root_index}; }

DyadicParabolicBox RunConfig::root_parabolic() const {
  return DyadicParabolicBox{root_level, root_index, root_time_index};
}

RunConfig load_config(const std::filesystem::path& path, const std::string& command) {
  const std::string file = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(file, 0, "cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();

  RunConfig c;
  c.command = command;
  c.config_path = path;
  c.config_text = ss.str();
  const Document doc = Document::parse(c.config_text, file);
  if (!doc.root().is_object()) doc.fail("", "top level must be an object");
  const Reader r(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));

  r.only_keys("", {"function", "n", "root", "depth", "dilation", "selectors", "p", "quadrature", "seed", "out",
                   "igbeta", "reconstruct", "parabolic", "rademacher", "verify"});
  r.only_keys("/root", {"level", "index", "time_index"});
  r.only_keys("/quadrature", {"nodes", "patch_nodes", "mc_samples"});
  r.only_keys("/igbeta", {"m", "p", "q"});
  r.only_keys("/reconstruct",
              {"c", "C", "eps", "tau", "kappa_b", "kappa_c", "budget", "directions", "lines"});
  r.only_keys("/parabolic", {"L", "coefficient_depth"});
  r.only_keys("/rademacher", {"point", "radii", "directions"});
  r.only_keys("/verify", {"properties"});

  c.seed = static_cast<std::uint64_t>(r.integer_or("/seed", 7, 0, std::numeric_limits<std::int64_t>::max()));
  if (r.has("/out")) c.out = r.string("/out");

  c.quad.nodes = static_cast<std::size_t>(r.integer_or("/quadrature/nodes", 33, 3, 1025));
  if (c.quad.nodes % 2 == 0) r.fail("/quadrature/nodes", "node count must be odd");
  c.quad.patch_nodes = static_cast<std::size_t>(r.integer_or("/quadrature/patch_nodes", 33, 3, 1025));
  if (c.quad.patch_nodes % 2 == 0) r.fail("/quadrature/patch_nodes", "node count must be odd");
  c.quad.mc_samples = static_cast<std::size_t>(r.integer_or("/quadrature/mc_samples", 4096, 1, 10'000'000));
  c.quad.seed = c.seed;

  if (command == "verify") {
    if (r.has("/verify/properties")) {
      const std::size_t m = r.array_size("/verify/properties");
      for (std::size_t i = 0; i < m; ++i)
        c.properties.push_back(static_cast<int>(r.integer("/verify/properties/" + std::to_string(i), 1, 9)));
    }
    return c;
  }

  const bool para = is_parabolic_command(command);
  const std::int64_t nmin = para || command == "reconstruct" ? 2 : 1;
  if (!r.has("/n")) doc.fail("", "missing \"n\"");
  c.n = static_cast<std::size_t>(r.integer("/n", nmin, 8));
  c.field = parse_function(r, "/function", c.n);
  c.field_id = c.field.id();

  c.root_level = static_cast<int>(r.integer_or("/root/level", 0, -30, 30));
  const std::size_t space = para ? c.n - 1 : c.n;
  if (r.has("/root/index")) {
    const auto idx = r.vec("/root/index", space);
    for (std::size_t k = 0; k < idx.size(); ++k)
      c.root_index.push_back(r.integer("/root/index/" + std::to_string(k), -(1LL << 40), 1LL << 40));
  } else {
    c.root_index.assign(space, 0);
  }
  c.root_time_index = r.integer_or("/root/time_index", 0, -(1LL << 40), 1LL << 40);
  if (r.has("/root/time_index") && !para) r.fail("/root/time_index", "only parabolic commands take a time index");

  c.depth = static_cast<int>(r.integer_or("/depth", 3, 0, 16));
  const std::size_t bits = (para ? c.n + 1 : c.n) * static_cast<std::size_t>(c.depth);
  if (bits > 21) r.fail("/depth", "tree too large: 2^" + std::to_string(bits) + " leaves");
  c.dilation = r.number_or("/dilation", 3.0, 1.0, 64.0);

  if (r.has("/p")) {
    c.ps.clear();
    const std::size_t m = r.array_size("/p");
    if (m == 0) r.fail("/p", "need at least one exponent");
    for (std::size_t i = 0; i < m; ++i) c.ps.push_back(r.exponent("/p/" + std::to_string(i)));
  }

  if (r.has("/selectors")) {
    const std::size_t m = r.array_size("/selectors");
    for (std::size_t i = 0; i < m; ++i) c.selectors.push_back(r.string("/selectors/" + std::to_string(i)));
  }
  if (c.selectors.empty()) c.selectors.push_back("beta2");

  if (r.has("/parabolic/L")) c.L = r.number("/parabolic/L", 1e-12);
  c.coefficient_depth = static_cast<int>(r.integer_or("/parabolic/coefficient_depth", 2, 0, 6));

  for (std::size_t i = 0; i < c.selectors.size(); ++i) {
    const std::string ptr = r.has("/selectors") ? "/selectors/" + std::to_string(i) : "/selectors";
    const std::string& s = c.selectors[i];
    if (para) {
      const auto sel = parabolic_selector_from_string(s);
      if (!sel) r.fail(ptr, "unknown parabolic selector '" + s + "'");
      if ((*sel == ParabolicSelector::Beta2L || *sel == ParabolicSelector::AffinityL) && !c.L)
        r.fail(ptr, "selector '" + s + "' needs \"parabolic\": {\"L\": ...}");
    } else {
      const auto sel = selector_from_string(s);
      if (!sel) r.fail(ptr, "unknown selector '" + s + "'");
      if ((*sel == Selector::Beta22Planes || *sel == Selector::Combined) && c.n < 2)
        r.fail(ptr, "selector '" + s + "' needs n >= 2");
    }
  }

  if (command == "igbeta") {
    c.ig_m = static_cast<std::size_t>(r.integer_or("/igbeta/m", 1, 1, static_cast<std::int64_t>(c.n)));
    if (c.ig_m != 1 && c.ig_m != c.n - 1 && c.ig_m != c.n) r.fail("/igbeta/m", "m must be 1, n-1 or n");
    c.ig_p = r.has("/igbeta/p") ? r.exponent("/igbeta/p") : 2.0;
    c.ig_q = r.has("/igbeta/q") ? r.number("/igbeta/q", 1.0) : 2.0;
  }

  if (command == "reconstruct") {
    auto& p = c.rec;
    p.c = r.number_or("/reconstruct/c", p.c);
    p.C = r.number_or("/reconstruct/C", p.C);
    p.eps = r.number_or("/reconstruct/eps", p.eps);
    p.tau = r.number_or("/reconstruct/tau", p.tau);
    p.kappa_b = r.number_or("/reconstruct/kappa_b", p.kappa_b);
    p.kappa_c = r.number_or("/reconstruct/kappa_c", p.kappa_c);
    p.budget = static_cast<std::size_t>(r.integer_or("/reconstruct/budget", 64, 1, 1 << 20));
    p.directions = static_cast<std::size_t>(r.integer_or("/reconstruct/directions", 8, 1, 4096));
    p.lines = static_cast<std::size_t>(r.integer_or("/reconstruct/lines", 128, 1, 1 << 20));
    p.seed = c.seed;
    try {
      p.validate(c.n);
    } catch (const Error& e) {
      r.fail("/reconstruct", e.what());
    }
  }

  if (command == "rademacher") {
    c.point = r.vec("/rademacher/point", c.n);
    if (r.has("/rademacher/radii")) {
      c.radii = r.vec("/rademacher/radii");
      if (c.radii.empty()) r.fail("/rademacher/radii", "need at least one radius");
      for (std::size_t i = 0; i < c.radii.size(); ++i) {
        if (!(c.radii[i] > 0.0)) r.fail("/rademacher/radii/" + std::to_string(i), "radii must be positive");
        if (i && !(c.radii[i] < c.radii[i - 1]))
          r.fail("/rademacher/radii/" + std::to_string(i), "radii must decrease");
      }
    } else {
      for (int k = 3; k <= 9; ++k) c.radii.push_back(std::ldexp(1.0, -k));
    }
    c.directions = static_cast<std::size_t>(r.integer_or("/rademacher/directions", 256, 1, 1 << 20));
  }
  return c;
}

}  // namespace qrect::cli
