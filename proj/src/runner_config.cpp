#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "distrenorm/errors.hpp"
#include "distrenorm/extension.hpp"
#include "distrenorm/feynman.hpp"
#include "distrenorm/runner.hpp"

namespace distrenorm::cli {

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Diverged: return "diverged";
    case Status::Error: return "error";
  }
  return "error";
}

int exit_code(const std::vector<Status>& statuses) {
  auto has = [&](Status s) { return std::find(statuses.begin(), statuses.end(), s) != statuses.end(); };
  if (has(Status::Error)) return 1;
  if (has(Status::Diverged)) return 3;
  if (has(Status::Fail)) return 2;
  return 0;
}

const std::vector<KindInfo>& experiment_kinds() {
  static const std::vector<KindInfo> kinds{
      {"finite-part", "ladder and extrapolation of the extension of |x|^-p on R against one bump, with oracle",
       "j,lambda,F,deltaF,ratio,extrapolated,oracle,abs_err"},
      {"extend", "extension of d(x, X)^-p along a point, affine subspace or small diagonal; ladder vs direct value",
       "phi_id,value,direct,extrapolated,tail_ratio,converged,restricted,diverged,abs_err"},
      {"growth", "dyadic shell fit of the blow-up exponent of a function near a point",
       "shell_r,sup_value,fit_s,fit_C,residual"},
      {"cutoff-check", "plateau and zero-zone exactness of the cutoff family on sampled points",
       "set,lambda,samples,plateau_violations,zero_zone_violations,range_violations"},
      {"green-check", "fundamental-solution identity and temperedness of the Green kernel",
       "check,index,value,reference,deviation,passed"},
      {"amplitude", "recursively renormalized Feynman amplitude paired with test functions",
       "phi_id,value,extrapolated,tail_ratio,converged,diverged,oracle,abs_err,rel_err"},
      {"factorize", "factorization residual of the renormalized amplitude on partition pieces",
       "piece,phi_id,lhs,rhs,residual"},
      {"consistency", "agreement of factorized pairings on two partition pieces",
       "piece1,piece2,phi_id,lhs,rhs,residual"},
  };
  return kinds;
}

namespace {

int line_of_offset(const std::string& text, std::size_t off) {
  off = std::min(off, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(off), '\n'));
}

class Ctx {
 public:
  Ctx(std::string origin, std::string text) : origin_(std::move(origin)), text_(std::move(text)) {}

  // `token` is a key or string literal near the problem, used to find a line.
  [[noreturn]] void fail(const std::string& path, const std::string& token, const std::string& msg) const {
    std::string where = origin_;
    if (!token.empty() && !text_.empty()) {
      const auto pos = text_.find("\"" + token + "\"");
      if (pos != std::string::npos) where += ":" + std::to_string(line_of_offset(text_, pos));
    }
    throw ConfigError(where + ": " + (path.empty() ? "/" : path) + ": " + msg);
  }

 private:
  std::string origin_;
  std::string text_;
};

std::string last_token(const std::string& path) {
  auto p = path.rfind('/');
  return p == std::string::npos ? path : path.substr(p + 1);
}

// Reads fields of one JSON object, records the resolved value of each in
// canonical order, and rejects keys that were never read.
class Fields {
 public:
  Fields(const Json& in, std::string path, const Ctx& ctx) : path_(std::move(path)), ctx_(ctx) {
    if (in.is_null()) {
      in_ = Json::object();
    } else if (!in.is_object()) {
      ctx_.fail(path_, last_token(path_), "expected an object");
    } else {
      in_ = in;
    }
  }

  const std::string& path() const { return path_; }
  std::string sub(const std::string& key) const { return path_ + "/" + key; }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { ctx_.fail(sub(key), key, msg); }

  const Json* get(const std::string& key) {
    used_.insert(key);
    auto it = in_.find(key);
    if (it == in_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  double number(const std::string& key, double def) {
    const Json* v = get(key);
    double x = def;
    if (v) {
      if (!v->is_number()) fail(key, "expected a number");
      x = v->get<double>();
    }
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    out_[key] = x;
    return x;
  }

  double positive(const std::string& key, double def) {
    const double x = number(key, def);
    if (!(x > 0)) fail(key, "must be positive");
    return x;
  }

  std::optional<double> optional_number(const std::string& key) {
    const Json* v = get(key);
    if (!v) {
      out_[key] = nullptr;
      return std::nullopt;
    }
    if (!v->is_number() || !std::isfinite(v->get<double>())) fail(key, "expected a finite number or null");
    out_[key] = v->get<double>();
    return v->get<double>();
  }

  long long integer(const std::string& key, long long def, long long lo, long long hi) {
    const Json* v = get(key);
    long long x = def;
    if (v) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      x = v->get<long long>();
    }
    if (x < lo || x > hi)
      fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out_[key] = x;
    return x;
  }

  long long required_integer(const std::string& key, long long lo, long long hi) {
    if (!has(key)) fail(key, "is required");
    return integer(key, 0, lo, hi);
  }

  bool boolean(const std::string& key, bool def) {
    const Json* v = get(key);
    bool x = def;
    if (v) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      x = v->get<bool>();
    }
    out_[key] = x;
    return x;
  }

  std::string string(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    const Json* v = get(key);
    std::string x = def;
    if (v) {
      if (!v->is_string()) fail(key, "expected a string");
      x = v->get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      ctx_.fail(sub(key), x, "'" + x + "' is not one of: " + list);
    }
    out_[key] = x;
    return x;
  }

  std::vector<double> vector(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) {
    const Json* v = get(key);
    std::vector<double> x;
    if (!v) {
      if (!def) fail(key, "is required");
      x = *def;
    } else {
      if (!v->is_array()) fail(key, "expected an array of numbers");
      for (const auto& e : *v) {
        if (!e.is_number() || !std::isfinite(e.get<double>())) fail(key, "expected an array of finite numbers");
        x.push_back(e.get<double>());
      }
    }
    out_[key] = x;
    return x;
  }

  bool has(const std::string& key) const {
    auto it = in_.find(key);
    return it != in_.end() && !it->is_null();
  }

  void put(const std::string& key, Json v) {
    used_.insert(key);
    out_[key] = std::move(v);
  }

  Json finish() {
    for (auto it = in_.begin(); it != in_.end(); ++it)
      if (!used_.count(it.key())) ctx_.fail(sub(it.key()), it.key(), "unknown key '" + it.key() + "'");
    return out_;
  }

 private:
  Json in_;
  std::string path_;
  const Ctx& ctx_;
  std::set<std::string> used_;
  Json out_ = Json::object();
};

// Subtraction order: "auto", "none" or an integer >= 0.
Json order_value(Fields& f, const std::string& key, Json def, bool allow_auto) {
  const Json* v = f.get(key);
  Json x = v ? *v : def;
  if (x.is_string()) {
    const auto s = x.get<std::string>();
    if (s != "none" && !(allow_auto && s == "auto"))
      f.fail(key, allow_auto ? "expected \"auto\", \"none\" or an integer >= 0" : "expected \"none\" or an integer >= 0");
  } else if (!x.is_number_integer() || x.get<long long>() < 0 || x.get<long long>() > 8) {
    f.fail(key, "order must be an integer in [0, 8], \"none\"" + std::string(allow_auto ? " or \"auto\"" : ""));
  }
  f.put(key, x);
  return x;
}

Json resolve_quadrature(const Json* in, const std::string& path, const Ctx& ctx, const QuadratureSpec& def) {
  Fields f(in ? *in : Json(), path, ctx);
  QuadratureSpec s;
  s.abs_tol = f.positive("abs_tol", def.abs_tol);
  s.rel_tol = f.number("rel_tol", def.rel_tol);
  s.max_depth = static_cast<int>(f.integer("max_depth", def.max_depth, 1, kMaxShellDepth));
  s.shell_refinement = f.boolean("shell_refinement", def.shell_refinement);
  s.max_subdivisions = static_cast<int>(f.integer("max_subdivisions", def.max_subdivisions, 1, 100000000));
  s.edge_refinement = static_cast<int>(f.integer("edge_refinement", def.edge_refinement, 0, 1024));
  s.method = quadrature_method_from_string(
      f.string("method", to_string(def.method), {"auto", "deterministic", "monte-carlo"}));
  s.mc_samples = static_cast<std::uint64_t>(
      f.integer("mc_samples", static_cast<long long>(def.mc_samples), 2, 1000000000000LL));
  try {
    s.validate();
  } catch (const Error& e) {
    ctx.fail(path, "quadrature", e.what());
  }
  return f.finish();
}

Json resolve_ladder(const Json* in, const std::string& path, const Ctx& ctx) {
  Fields f(in ? *in : Json(), path, ctx);
  LadderSpec l;
  l.j_min = static_cast<int>(f.integer("j_min", l.j_min, 0, 60));
  l.j_max = static_cast<int>(f.integer("j_max", l.j_max, 0, 60));
  try {
    l.validate();
  } catch (const Error& e) {
    ctx.fail(path, "ladder", e.what());
  }
  return f.finish();
}

Json resolve_growth(const Json* in, const std::string& path, const Ctx& ctx) {
  Fields f(in ? *in : Json(), path, ctx);
  GrowthOptions g;
  const auto jmin = f.integer("j_min", g.j_min, 0, 60);
  f.integer("j_max", g.j_max, jmin, 60);
  f.integer("resolution", g.resolution, 2, 1000);
  f.integer("directions", g.directions, 1, 100000);
  f.integer("samples", g.samples, 1, 10000000);
  return f.finish();
}

// Returns the ambient dimension of the set.
int resolve_set(const Json& in, const std::string& path, const Ctx& ctx, Json& out, bool linear_only) {
  Fields f(in, path, ctx);
  const auto type = f.string("type", "point", {"point", "affine", "small-diagonal", "big-diagonal"});
  int dim = 0;
  if (type == "point") {
    auto p = f.vector("point");
    if (p.empty()) f.fail("point", "must be nonempty");
    dim = static_cast<int>(p.size());
  } else if (type == "affine") {
    auto base = f.vector("base");
    dim = static_cast<int>(base.size());
    const Json* dirs = f.get("directions");
    if (!dirs || !dirs->is_array() || dirs->empty()) f.fail("directions", "expected a nonempty array of vectors");
    Json rd = Json::array();
    std::vector<std::vector<double>> dv;
    for (const auto& d : *dirs) {
      if (!d.is_array() || static_cast<int>(d.size()) != dim) f.fail("directions", "each direction needs the base's length");
      std::vector<double> v;
      for (const auto& e : d) {
        if (!e.is_number()) f.fail("directions", "expected numbers");
        v.push_back(e.get<double>());
      }
      dv.push_back(v);
      rd.push_back(v);
    }
    f.put("directions", rd);
    try {
      ClosedSet::affine_subspace(base, dv);
    } catch (const Error& e) {
      f.fail("directions", e.what());
    }
  } else {
    if (linear_only && type == "big-diagonal") f.fail("type", "a linear set is required here");
    const auto n = f.required_integer("n", 2, 6);
    const auto d = f.required_integer("d", 1, 3);
    dim = static_cast<int>(n * d);
  }
  out = f.finish();
  return dim;
}

// Returns the test function's dimension.
int resolve_phi(const Json& in, const std::string& path, const Ctx& ctx, Json& out) {
  Fields f(in, path, ctx);
  const auto type = f.string("type", "bump", {"bump", "bump-product", "monomial-bump", "mean-diff-bump"});
  int dim = 0;
  if (type == "bump" || type == "monomial-bump") {
    auto c = f.vector("center");
    if (c.empty()) f.fail("center", "must be nonempty");
    dim = static_cast<int>(c.size());
    f.positive("radius", 1.0);
    if (type == "monomial-bump") {
      const Json* p = f.get("powers");
      if (!p || !p->is_array() || static_cast<int>(p->size()) != dim)
        f.fail("powers", "expected one nonnegative integer per coordinate");
      for (const auto& e : *p)
        if (!e.is_number_integer() || e.get<int>() < 0 || e.get<int>() > 8)
          f.fail("powers", "expected integers in [0, 8]");
      f.put("powers", *p);
    }
  } else if (type == "bump-product") {
    auto c = f.vector("center");
    auto r = f.vector("radii");
    if (c.empty() || r.size() != c.size()) f.fail("radii", "needs one radius per center coordinate");
    for (double v : r)
      if (!(v > 0)) f.fail("radii", "radii must be positive");
    dim = static_cast<int>(c.size());
  } else {
    auto mc = f.vector("mean_center");
    f.positive("mean_radius", 1.0);
    auto dc = f.vector("diff_center");
    f.positive("diff_radius", 1.0);
    if (mc.empty() || dc.size() != mc.size()) f.fail("diff_center", "needs the length of mean_center");
    dim = static_cast<int>(2 * mc.size());
  }
  out = f.finish();
  return dim;
}

Json resolve_phis(Fields& f, const std::string& key, int dim, std::optional<Json> def, const Ctx& ctx) {
  const Json* v = f.get(key);
  Json list = v ? *v : (def ? *def : Json());
  if (list.is_null()) f.fail(key, "is required");
  if (!list.is_array() || list.empty()) f.fail(key, "expected a nonempty array of test functions");
  Json out = Json::array();
  for (std::size_t i = 0; i < list.size(); ++i) {
    Json r;
    const int d = resolve_phi(list[i], f.sub(key) + "/" + std::to_string(i), ctx, r);
    if (dim > 0 && d != dim)
      ctx.fail(f.sub(key) + "/" + std::to_string(i), key,
               "test function has dimension " + std::to_string(d) + ", expected " + std::to_string(dim));
    out.push_back(r);
  }
  f.put(key, out);
  return out;
}

struct GraphDims {
  int n = 0;
  int d = 0;
};

GraphDims resolve_graph(Fields& f, const Ctx& ctx) {
  GraphDims g;
  g.d = static_cast<int>(f.integer("d", 3, 1, 3));
  if (!(f.number("mass", 0.0) >= 0)) f.fail("mass", "must be nonnegative");
  g.n = static_cast<int>(f.integer("n", 2, 2, 3));
  const Json* e = f.get("edges");
  if (!e) f.fail("edges", "is required (upper-triangular multiplicities n12, n13, ..., n23, ...)");
  std::vector<int> upper;
  if (!e->is_array()) f.fail("edges", "expected an array of integers");
  for (const auto& x : *e) {
    if (!x.is_number_integer()) f.fail("edges", "expected an array of integers");
    upper.push_back(x.get<int>());
  }
  try {
    FeynmanGraph(g.n, upper);
  } catch (const Error& err) {
    f.fail("edges", err.what());
  }
  f.put("edges", upper);
  // Level schemes keyed by subset size.
  const Json* lv = f.get("levels");
  Json levels_in = lv ? *lv : Json::object();
  if (!levels_in.is_object()) f.fail("levels", "expected an object keyed by subset size");
  Json levels = Json::object();
  for (auto it = levels_in.begin(); it != levels_in.end(); ++it) {
    const auto& k = it.key();
    if (k.size() != 1 || k[0] < '2' || k[0] > static_cast<char>('0' + g.n))
      ctx.fail(f.sub("levels") + "/" + k, k, "level keys are subset sizes 2.." + std::to_string(g.n));
  }
  for (int size = 2; size <= g.n; ++size) {
    const auto key = std::to_string(size);
    Fields lf(levels_in.contains(key) ? levels_in[key] : Json(), f.sub("levels") + "/" + key, ctx);
    order_value(lf, "order", "auto", true);
    const double rin = lf.positive("r_in", 0.25);
    const double rout = lf.positive("r_out", 1.0);
    if (!(rout > rin)) lf.fail("r_out", "must exceed r_in");
    levels[key] = lf.finish();
  }
  f.put("levels", levels);
  const double s0 = f.number("sigma0", 0.0);
  if (s0 < 0 || s0 >= 1) f.fail("sigma0", "must lie in [0, 1); 0 selects the default threshold");
  return g;
}

void window_radii(Fields& f) {
  const double rin = f.positive("r_in", 0.25);
  const double rout = f.positive("r_out", 1.0);
  if (!(rout > rin)) f.fail("r_out", "must exceed r_in");
}

QuadratureSpec spec_with_tol(double tol) {
  QuadratureSpec s;
  s.abs_tol = tol;
  s.rel_tol = tol;
  return s;
}

Json resolve_experiment(const Json& in, std::size_t index, const Ctx& ctx) {
  const std::string path = "/experiments/" + std::to_string(index);
  if (!in.is_object()) ctx.fail(path, "experiments", "expected an object");
  Fields f(in, path, ctx);
  std::vector<std::string> names;
  for (const auto& k : experiment_kinds()) names.push_back(k.name);
  if (!f.has("kind")) f.fail("kind", "is required");
  const auto kind = f.string("kind", "", names);
  const auto name = f.string("name", std::to_string(index) + "-" + kind);
  if (name.empty() || name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
                          std::string::npos || name[0] == '.')
    ctx.fail(f.sub("name"), name, "name may only use letters, digits, '.', '_' and '-' (used as a file name)");

  if (kind == "finite-part") {
    const double p = f.positive("exponent", 1.0);
    if (p >= 2) f.fail("exponent", "must be below 2");
    order_value(f, "order", 0, false);
    window_radii(f);
    f.put("ladder", resolve_ladder(f.get("ladder"), f.sub("ladder"), ctx));
    Json phi;
    const Json* pin = f.get("phi");
    const int d = resolve_phi(pin ? *pin : Json{{"type", "bump"}, {"center", {0.0}}, {"radius", 1.0}}, f.sub("phi"), ctx, phi);
    if (d != 1) f.fail("phi", "the test function must be one-dimensional");
    if (phi["type"] != "bump" && phi["type"] != "monomial-bump") f.fail("phi", "expected a bump or monomial-bump");
    f.put("phi", phi);
    f.positive("tolerance", 1e-6);
    f.put("quadrature", resolve_quadrature(f.get("quadrature"), f.sub("quadrature"), ctx, QuadratureSpec{}));
  } else if (kind == "extend") {
    Json set;
    const Json* sin = f.get("set");
    const int dim = resolve_set(sin ? *sin : Json{{"type", "point"}, {"point", {0.0}}}, f.sub("set"), ctx, set, true);
    f.put("set", set);
    f.positive("exponent", 1.0);
    order_value(f, "order", "auto", true);
    window_radii(f);
    f.put("ladder", resolve_ladder(f.get("ladder"), f.sub("ladder"), ctx));
    resolve_phis(f, "phis", dim, std::nullopt, ctx);
    f.positive("tolerance", 1e-6);
    f.put("quadrature", resolve_quadrature(f.get("quadrature"), f.sub("quadrature"), ctx, QuadratureSpec{}));
  } else if (kind == "growth") {
    Fields ff(f.get("function") ? *f.get("function") : Json(), f.sub("function"), ctx);
    const auto type = ff.string("type", "power", {"power", "cos", "log", "green"});
    if (type == "green") {
      ff.integer("d", 3, 1, 3);
      if (!(ff.number("mass", 0.0) >= 0)) ff.fail("mass", "must be nonnegative");
    } else {
      ff.integer("dimension", 1, 1, 6);
      if (type == "power") ff.positive("exponent", 1.5);
    }
    f.put("function", ff.finish());
    f.integer("order", 0, 0, kMaxJetOrder);
    f.positive("box_half_width", 1.0);
    f.put("growth", resolve_growth(f.get("growth"), f.sub("growth"), ctx));
    f.optional_number("expected_s");
    f.optional_number("max_s");
    f.positive("tolerance", 0.1);
  } else if (kind == "cutoff-check") {
    const Json* sl = f.get("sets");
    Json list = sl ? *sl
                   : Json::parse(R"([{"type":"point","point":[0.1,-0.2,0.3]},
                                     {"type":"affine","base":[0.0,1.0,0.0],"directions":[[1.0,1.0,0.0]]},
                                     {"type":"small-diagonal","n":3,"d":1},
                                     {"type":"big-diagonal","n":3,"d":1}])");
    if (!list.is_array() || list.empty()) f.fail("sets", "expected a nonempty array of sets");
    Json sets = Json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      Json s;
      resolve_set(list[i], f.sub("sets") + "/" + std::to_string(i), ctx, s, false);
      sets.push_back(s);
    }
    f.put("sets", sets);
    auto lambdas = f.vector("lambdas", std::vector<double>{1.0, 0.5, 0.125, 0.01, 1e-4});
    if (lambdas.empty()) f.fail("lambdas", "must be nonempty");
    for (double l : lambdas)
      if (!(l > 0 && l <= 1)) f.fail("lambdas", "each lambda must lie in (0, 1]");
    f.integer("samples", 2000, 1, 100000000);
  } else if (kind == "green-check") {
    const int d = static_cast<int>(f.integer("d", 3, 1, 3));
    if (!(f.number("mass", 0.0) >= 0)) f.fail("mass", "must be nonnegative");
    const auto ud = static_cast<std::size_t>(d);
    auto at = [&](double a, double b) {
      std::vector<double> v(ud, 0.0);
      v[0] = a;
      if (ud > 1) v[1] = b;
      return v;
    };
    const Json* pl = f.get("points");
    Json pts_in = pl ? *pl : Json{at(0, 0), at(0.25, 0), at(-0.3, 0.1)};
    if (!pts_in.is_array() || pts_in.empty()) f.fail("points", "expected a nonempty array of points");
    for (const auto& p : pts_in)
      if (!p.is_array() || p.size() != ud) f.fail("points", "each point needs d coordinates");
    f.put("points", pts_in);
    Json def = Json::array();
    def.push_back({{"type", "bump"}, {"center", at(0.2, 0)}, {"radius", 1.0}});
    def.push_back({{"type", "bump"}, {"center", at(0.1, -0.1)}, {"radius", 0.8}});
    def.push_back({{"type", "bump"}, {"center", at(-0.4, 0.2)}, {"radius", 1.2}});
    auto phis = resolve_phis(f, "phis", d, def, ctx);
    if (phis.size() != pts_in.size()) f.fail("phis", "needs one test function per point");
    const Json* ol = f.get("orders");
    Json orders = ol ? *ol : Json{0, 1};
    if (!orders.is_array()) f.fail("orders", "expected an array of derivative orders");
    for (const auto& o : orders)
      if (!o.is_number_integer() || o.get<int>() < 0 || o.get<int>() > 4) f.fail("orders", "orders lie in [0, 4]");
    f.put("orders", orders);
    f.positive("tolerance", 1e-4);
    f.positive("exponent_tolerance", 0.15);
    f.put("quadrature", resolve_quadrature(f.get("quadrature"), f.sub("quadrature"), ctx, QuadratureSpec{}));
  } else {
    const auto g = resolve_graph(f, ctx);
    const int dim = g.n * g.d;
    if (kind == "amplitude") {
      f.put("ladder", resolve_ladder(f.get("ladder"), f.sub("ladder"), ctx));
      resolve_phis(f, "phis", dim, std::nullopt, ctx);
      f.boolean("oracle", true);
      f.positive("tolerance", 1e-4);
      f.put("quadrature", resolve_quadrature(f.get("quadrature"), f.sub("quadrature"), ctx, spec_with_tol(1e-7)));
    } else if (kind == "factorize") {
      const Json* pl = f.get("pieces");
      if (!pl || !pl->is_array() || pl->empty()) f.fail("pieces", "expected a nonempty array of labels like \"{1,2}|{3}\"");
      Json pieces = Json::array();
      for (const auto& p : *pl) {
        if (!p.is_string()) f.fail("pieces", "expected labels like \"{1,2}|{3}\"");
        try {
          auto pc = PartitionPiece::from_label(p.get<std::string>());
          if (pc.n() != g.n) throw DomainError("piece does not cover the " + std::to_string(g.n) + " vertices");
          pieces.push_back(pc.label());
        } catch (const Error& e) {
          ctx.fail(f.sub("pieces"), p.get<std::string>(), e.what());
        }
      }
      f.put("pieces", pieces);
      resolve_phis(f, "phis", dim, std::nullopt, ctx);
      f.positive("tolerance", 1e-3);
      f.put("quadrature", resolve_quadrature(f.get("quadrature"), f.sub("quadrature"), ctx, QuadratureSpec{}));
    } else {
      const Json* pl = f.get("pairs");
      if (!pl || !pl->is_array() || pl->empty())
        f.fail("pairs", "expected a nonempty array of label pairs like [\"{1}|{2,3}\", \"{1,2}|{3}\"]");
      Json pairs = Json::array();
      for (const auto& pr : *pl) {
        if (!pr.is_array() || pr.size() != 2 || !pr[0].is_string() || !pr[1].is_string())
          f.fail("pairs", "each pair is two piece labels");
        Json out = Json::array();
        for (const auto& p : pr) {
          try {
            auto pc = PartitionPiece::from_label(p.get<std::string>());
            if (pc.n() != g.n) throw DomainError("piece does not cover the " + std::to_string(g.n) + " vertices");
            out.push_back(pc.label());
          } catch (const Error& e) {
            ctx.fail(f.sub("pairs"), p.get<std::string>(), e.what());
          }
        }
        pairs.push_back(out);
      }
      f.put("pairs", pairs);
      resolve_phis(f, "phis", dim, std::nullopt, ctx);
      f.positive("tolerance", 1e-3);
      f.put("quadrature", resolve_quadrature(f.get("quadrature"), f.sub("quadrature"), ctx, QuadratureSpec{}));
    }
  }
  return f.finish();
}

}  // namespace

Json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto off = e.byte > 0 ? e.byte - 1 : 0;
    const int line = line_of_offset(text, off);
    const auto bol = text.rfind('\n', off == 0 ? 0 : off - 1);
    const auto col = off - (bol == std::string::npos || off == 0 ? 0 : bol + 1) + 1;
    std::string msg = e.what();
    // Drop the library's prefix ("[json.exception.parse_error.101] parse error at line 1, column 2: ").
    if (auto p = msg.rfind(": "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON: " + msg);
  }
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":1: cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

Json resolve_config(const Json& raw, const Overrides& ov, const std::string& origin, const std::string& text) {
  Ctx ctx(origin, text);
  if (!raw.is_object()) ctx.fail("", "", "the config must be a JSON object");
  Fields f(raw, "", ctx);
  const Json* out = f.get("output");
  std::string output = "distrenorm-out";
  if (out) {
    if (!out->is_string() || out->get<std::string>().empty()) f.fail("output", "expected a nonempty path string");
    output = out->get<std::string>();
  }
  if (ov.output) output = *ov.output;
  f.put("output", output);
  const Json* sd = f.get("seed");
  std::uint64_t seed = 1;
  if (sd) {
    if (!sd->is_number_unsigned() && !(sd->is_number_integer() && sd->get<long long>() >= 0))
      f.fail("seed", "expected a nonnegative integer");
    seed = sd->get<std::uint64_t>();
  }
  if (ov.seed) seed = *ov.seed;
  f.put("seed", seed);
  const Json* ex = f.get("experiments");
  if (!ex || !ex->is_array() || ex->empty()) f.fail("experiments", "expected a nonempty array of experiments");
  Json list = Json::array();
  std::set<std::string> names;
  for (std::size_t i = 0; i < ex->size(); ++i) {
    Json e = resolve_experiment((*ex)[i], i, ctx);
    const auto name = e["name"].get<std::string>();
    if (!names.insert(name).second)
      ctx.fail("/experiments/" + std::to_string(i) + "/name", name, "duplicate experiment name '" + name + "'");
    list.push_back(std::move(e));
  }
  f.put("experiments", list);
  return f.finish();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void dump_rec(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump_rec(it.value(), out, indent + 2);
      }
      out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        dump_rec(e, out, indent + 2);
      }
      out += flat ? "]" : "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      auto s = format_double(v);
      // Keep floats recognizable as floats when they print as integers.
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default: out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump_rec(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace distrenorm::cli
