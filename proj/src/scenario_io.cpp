#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "okbe/scenarios.hpp"

namespace okbe {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::Config, path + ": " + msg);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) bad(path + "." + it.key(), "unknown field");
}

const json& field(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(path + "." + key, "missing field");
  return *it;
}

long as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<long>();
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

const json& as_arr(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array");
  return j;
}

std::string idx(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

SparseDist read_dist(const json& j, const std::string& path, long size, bool check_sum = true) {
  SparseDist d;
  double sum = 0.0;
  const auto& arr = as_arr(j, path);
  for (size_t i = 0; i < arr.size(); ++i) {
    const auto& pair = as_arr(arr[i], idx(path, i));
    if (pair.size() != 2) bad(idx(path, i), "expected [index, probability]");
    long n = as_int(pair[0], idx(path, i) + "[0]");
    double p = as_num(pair[1], idx(path, i) + "[1]");
    if (n < 0 || n >= size) bad(idx(path, i) + "[0]", "index " + std::to_string(n) + " out of range");
    if (!(p >= 0.0) || !std::isfinite(p)) bad(idx(path, i) + "[1]", "probability must be finite and nonnegative");
    d.emplace_back(static_cast<Index>(n), p);
    sum += p;
  }
  if (check_sum && std::abs(sum - 1.0) > kStochasticTol)
    bad(path, "probabilities sum to " + std::to_string(sum) + ", not 1");
  return d;
}

json write_dist(const SparseDist& d) {
  json a = json::array();
  for (const auto& [n, p] : d) a.push_back({n, p});
  return a;
}

json write_kernel(const TransitionKernel& k, bool with_mode) {
  json rows = json::array();
  for (Index s = 0; s < k.num_states(); ++s)
    for (Index a = 0; a < k.num_actions(); ++a)
      for (Index m = 0; m < k.num_modes(); ++m) {
        json r = {{"s", s}, {"a", a}};
        if (with_mode) r["m"] = m;
        json nx = json::array();
        for (const auto& tr : k.row(s, a, m)) nx.push_back({tr.next, tr.prob});
        r["next"] = nx;
        rows.push_back(r);
      }
  return rows;
}

KernelPtr read_kernel(const json& j, const std::string& path, int S, int A, int M) {
  KernelBuilder kb(S, A, M);
  std::set<std::tuple<long, long, long>> seen;
  const auto& rows = as_arr(j, path);
  for (size_t i = 0; i < rows.size(); ++i) {
    std::string p = idx(path, i);
    check_keys(rows[i], p, {"s", "a", "m", "next"});
    long s = as_int(field(rows[i], p, "s"), p + ".s");
    long a = as_int(field(rows[i], p, "a"), p + ".a");
    long m = rows[i].contains("m") ? as_int(rows[i]["m"], p + ".m") : 0;
    if (s < 0 || s >= S) bad(p + ".s", "state out of range");
    if (a < 0 || a >= A) bad(p + ".a", "action out of range");
    if (m < 0 || m >= M) bad(p + ".m", "mode out of range");
    if (!seen.insert({s, a, m}).second) bad(p, "duplicate row");
    auto d = read_dist(field(rows[i], p, "next"), p + ".next", S);
    kb.set_row(static_cast<Index>(s), static_cast<Index>(a), d, static_cast<Index>(m));
  }
  if (seen.size() != static_cast<size_t>(S) * A * M)
    bad(path, "expected " + std::to_string(static_cast<size_t>(S) * A * M) + " rows, found " +
                  std::to_string(seen.size()));
  return kb.build_shared();
}

json write_table(const StateActionTable& t, double dflt) {
  json e = json::array();
  for (Index x = 0; x < t.num_states; ++x)
    for (Index a = 0; a < t.num_actions; ++a)
      if (t(x, a) != dflt) e.push_back({x, a, t(x, a)});
  return {{"default", dflt}, {"entries", e}};
}

StateActionTable read_table(const json& j, const std::string& path, int S, int A) {
  check_keys(j, path, {"default", "entries"});
  double d = j.contains("default") ? as_num(j["default"], path + ".default") : 1.0;
  StateActionTable t(S, A, d);
  if (!j.contains("entries")) return t;
  const auto& arr = as_arr(j["entries"], path + ".entries");
  for (size_t i = 0; i < arr.size(); ++i) {
    std::string p = idx(path + ".entries", i);
    const auto& e = as_arr(arr[i], p);
    if (e.size() != 3) bad(p, "expected [state, action, value]");
    long x = as_int(e[0], p + "[0]"), a = as_int(e[1], p + "[1]");
    double v = as_num(e[2], p + "[2]");
    if (x < 0 || x >= S) bad(p + "[0]", "state out of range");
    if (a < 0 || a >= A) bad(p + "[1]", "action out of range");
    if (!(v >= 0.0 && v <= 1.0)) bad(p + "[2]", "value must lie in [0, 1]");
    t.at(static_cast<Index>(x), static_cast<Index>(a)) = v;
  }
  return t;
}

json write_predicate(const StatePredicate& p, const std::vector<std::string>& names) {
  json a = json::array();
  for (const auto& c : p.clauses) a.push_back({{"space", names[c.component]}, {"values", c.values}});
  return a;
}

StatePredicate read_predicate(const json& j, const std::string& path, const std::map<std::string, int>& comp,
                              const std::vector<int>& sizes) {
  StatePredicate p;
  const auto& arr = as_arr(j, path);
  for (size_t i = 0; i < arr.size(); ++i) {
    std::string q = idx(path, i);
    check_keys(arr[i], q, {"space", "values"});
    std::string sp = as_str(field(arr[i], q, "space"), q + ".space");
    auto it = comp.find(sp);
    if (it == comp.end()) bad(q + ".space", "unknown space '" + sp + "'");
    StatePredicate::Clause c;
    c.component = it->second;
    const auto& vals = as_arr(field(arr[i], q, "values"), q + ".values");
    for (size_t k = 0; k < vals.size(); ++k) {
      long v = as_int(vals[k], idx(q + ".values", k));
      if (v < 0 || v >= sizes[c.component]) bad(idx(q + ".values", k), "value out of range");
      c.values.push_back(static_cast<Index>(v));
    }
    p.clauses.push_back(std::move(c));
  }
  return p;
}

const char* option_set_name(OptionSetKind k) {
  switch (k) {
    case OptionSetKind::Affordance: return "affordance";
    case OptionSetKind::StateAction: return "state-action";
    case OptionSetKind::Explicit: return "explicit";
  }
  return "affordance";
}

// Most frequent entry of a factor table, used as the written default.
SparseDist most_common(const std::vector<SparseDist>& table) {
  std::map<SparseDist, size_t> count;
  for (const auto& d : table) ++count[d];
  SparseDist best;
  size_t n = 0;
  for (const auto& [d, c] : count)
    if (c > n) {
      n = c;
      best = d;
    }
  return best;
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  const Ctmdp& c = s.c;
  json j;
  j["version"] = kSchemaVersion;
  j["name"] = s.name;
  j["doc"] = s.doc;
  std::vector<std::string> names{c.base_name};
  json base = {{"name", c.base_name},
               {"states", c.base->num_states()},
               {"actions", c.base->num_actions()},
               {"modes", c.base->num_modes()},
               {"action_labels", c.base_action_labels}};
  if (c.grid_rows > 0) base["grid"] = {c.grid_rows, c.grid_cols};
  json hl = json::array();
  for (const auto& h : c.hl) {
    names.push_back(h.name);
    hl.push_back({{"name", h.name},
                  {"states", h.kernel->num_states()},
                  {"actions", h.kernel->num_actions()},
                  {"default_actions", h.default_actions},
                  {"state_labels", h.state_labels},
                  {"action_labels", h.action_labels}});
  }
  j["spaces"] = {{"base", base}, {"high_level", hl}};
  json kernels;
  kernels[c.base_name] = write_kernel(*c.base, true);
  for (const auto& h : c.hl) kernels[h.name] = write_kernel(*h.kernel, false);
  j["kernels"] = kernels;
  if (s.features) {
    const auto& fp = *s.features;
    json sf = json::array();
    SparseDist dflt = most_common(fp.state_to_features);
    for (Index x = 0; x < fp.num_states; ++x)
      for (Index a = 0; a < fp.num_actions; ++a) {
        const auto& d = fp.state_to_features[static_cast<size_t>(x) * fp.num_actions + a];
        if (d != dflt) sf.push_back({{"x", x}, {"a", a}, {"dist", write_dist(d)}});
      }
    json targets = json::array();
    for (size_t t = 0; t < fp.targets.size(); ++t) {
      json m = json::array();
      for (const auto& d : fp.features_to_actions[t]) m.push_back(write_dist(d));
      targets.push_back({{"space", c.hl[fp.targets[t]].name}, {"map", m}});
    }
    j["features"] = {{"sets", fp.feature_set_names},
                     {"state_features", {{"default", write_dist(dflt)}, {"entries", sf}}},
                     {"targets", targets},
                     {"allow_stochastic", c.F.allow_stochastic}};
  } else if (!c.hl.empty()) {
    json factors = json::array();
    for (const auto& f : c.F.factors) {
      SparseDist dflt = most_common(f.table);
      json entries = json::array();
      for (Index zg = 0; zg < f.given_size; ++zg)
        for (Index x = 0; x < f.num_driver_states; ++x)
          for (Index a = 0; a < f.num_driver_actions; ++a) {
            const auto& d = f.at(zg, x, a);
            if (d == dflt) continue;
            json e = {{"x", x}, {"a", a}, {"dist", write_dist(d)}};
            if (f.given >= 0) e["given_value"] = zg;
            entries.push_back(e);
          }
      json jf = {{"target", c.hl[f.target].name}, {"default", write_dist(dflt)}, {"entries", entries}};
      if (f.given >= 0) jf["given"] = c.hl[f.given].name;
      factors.push_back(jf);
    }
    j["affordances"] = {{"allow_stochastic", c.F.allow_stochastic}, {"factors", factors}};
  }
  if (!c.zeta.map.empty()) j["modes"] = {{"num_modes", c.zeta.num_modes}, {"map", c.zeta.map}};
  json goals = json::array();
  for (const auto& g : c.base_goals) {
    json e = json::array();
    for (Index x = 0; x < g.table.num_states; ++x)
      for (Index a = 0; a < g.table.num_actions; ++a)
        if (g.table(x, a) != 0.0) e.push_back({x, a, g.table(x, a)});
    goals.push_back({{"name", g.name}, {"entries", e}});
  }
  j["goals"] = {{"base", goals},
                {"task", write_predicate(c.task_goal, names)},
                {"forbidden", write_predicate(c.task_forbidden, names)}};
  json hlc;
  for (const auto& h : c.hl) hlc[h.name] = write_table(h.constraint, 1.0);
  j["constraints"] = {{"base", write_table(c.base_constraint, 1.0)}, {"high_level", hlc.is_null() ? json::object() : hlc}};
  json start;
  for (size_t k = 0; k < c.start.size(); ++k) start[names[k]] = c.start[k];
  j["start"] = start;
  json sites = json::array();
  for (const auto& [k, v] : c.site_names) sites.push_back({k.first, k.second, v});
  json macros = json::array();
  for (const auto& m : s.macros) macros.push_back({{"name", m.name}, {"sequence", m.sequence}});
  j["options"] = {{"set", option_set_name(s.option_set)},
                  {"site_names", sites},
                  {"macros", macros},
                  {"plan_depth", s.plan_depth}};
  json ex = json::array();
  for (const auto& e : s.expects)
    ex.push_back({{"kind", e.kind},     {"option", e.option}, {"space", e.space},   {"cell", e.cell},
                  {"mode", e.mode},     {"value", e.value},   {"depth", e.depth},   {"prune", e.prune},
                  {"macros", e.macros}, {"length", e.length}, {"lo", e.lo},         {"hi", e.hi}});
  j["expects"] = ex;
  return j.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::Config,
                "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  const std::string root = "$";
  check_keys(j, root,
             {"version", "name", "doc", "spaces", "kernels", "affordances", "modes", "features", "goals",
              "constraints", "start", "options", "expects"});
  long version = as_int(field(j, root, "version"), "$.version");
  if (version != kSchemaVersion) bad("$.version", "unsupported schema version " + std::to_string(version));
  Scenario s;
  s.name = as_str(field(j, root, "name"), "$.name");
  if (j.contains("doc")) s.doc = as_str(j["doc"], "$.doc");
  Ctmdp& c = s.c;
  c.name = s.name;

  const auto& spaces = field(j, root, "spaces");
  check_keys(spaces, "$.spaces", {"base", "high_level"});
  const auto& base = field(spaces, "$.spaces", "base");
  check_keys(base, "$.spaces.base", {"name", "states", "actions", "modes", "grid", "action_labels"});
  c.base_name = as_str(field(base, "$.spaces.base", "name"), "$.spaces.base.name");
  long X = as_int(field(base, "$.spaces.base", "states"), "$.spaces.base.states");
  long A = as_int(field(base, "$.spaces.base", "actions"), "$.spaces.base.actions");
  long M = base.contains("modes") ? as_int(base["modes"], "$.spaces.base.modes") : 1;
  if (X <= 0 || A <= 0 || M <= 0) bad("$.spaces.base", "sizes must be positive");
  if (base.contains("grid")) {
    const auto& g = as_arr(base["grid"], "$.spaces.base.grid");
    if (g.size() != 2) bad("$.spaces.base.grid", "expected [rows, cols]");
    c.grid_rows = static_cast<int>(as_int(g[0], "$.spaces.base.grid[0]"));
    c.grid_cols = static_cast<int>(as_int(g[1], "$.spaces.base.grid[1]"));
    if (static_cast<long>(c.grid_rows) * c.grid_cols != X) bad("$.spaces.base.grid", "rows * cols != states");
  }
  if (base.contains("action_labels")) c.base_action_labels = base["action_labels"].get<std::vector<std::string>>();
  std::vector<std::string> names{c.base_name};
  std::map<std::string, int> comp{{c.base_name, 0}};
  std::vector<int> sizes{static_cast<int>(X)};
  struct HlDims {
    long n, a;
  };
  std::vector<HlDims> dims;
  if (spaces.contains("high_level")) {
    const auto& hl = as_arr(spaces["high_level"], "$.spaces.high_level");
    for (size_t i = 0; i < hl.size(); ++i) {
      std::string p = idx("$.spaces.high_level", i);
      check_keys(hl[i], p, {"name", "states", "actions", "default_actions", "state_labels", "action_labels"});
      HlSpace h;
      h.name = as_str(field(hl[i], p, "name"), p + ".name");
      if (comp.count(h.name)) bad(p + ".name", "duplicate space name '" + h.name + "'");
      long n = as_int(field(hl[i], p, "states"), p + ".states");
      long a = as_int(field(hl[i], p, "actions"), p + ".actions");
      if (n <= 0 || a <= 0) bad(p, "sizes must be positive");
      if (hl[i].contains("default_actions")) {
        const auto& d = as_arr(hl[i]["default_actions"], p + ".default_actions");
        for (size_t k = 0; k < d.size(); ++k) {
          long v = as_int(d[k], idx(p + ".default_actions", k));
          if (v < 0 || v >= a) bad(idx(p + ".default_actions", k), "action out of range");
          h.default_actions.push_back(static_cast<Index>(v));
        }
      }
      if (hl[i].contains("state_labels")) h.state_labels = hl[i]["state_labels"].get<std::vector<std::string>>();
      if (hl[i].contains("action_labels")) h.action_labels = hl[i]["action_labels"].get<std::vector<std::string>>();
      comp[h.name] = static_cast<int>(names.size());
      names.push_back(h.name);
      sizes.push_back(static_cast<int>(n));
      dims.push_back({n, a});
      c.hl.push_back(std::move(h));
    }
  }
  auto hl_index = [&](const std::string& name, const std::string& path) {
    auto it = comp.find(name);
    if (it == comp.end() || it->second == 0) bad(path, "unknown high-level space '" + name + "'");
    return it->second - 1;
  };

  const auto& kernels = field(j, root, "kernels");
  if (!kernels.is_object()) bad("$.kernels", "expected an object");
  for (auto it = kernels.begin(); it != kernels.end(); ++it)
    if (!comp.count(it.key())) bad("$.kernels." + it.key(), "unknown space");
  c.base = read_kernel(field(kernels, "$.kernels", c.base_name.c_str()), "$.kernels." + c.base_name,
                       static_cast<int>(X), static_cast<int>(A), static_cast<int>(M));
  for (size_t k = 0; k < c.hl.size(); ++k)
    c.hl[k].kernel = read_kernel(field(kernels, "$.kernels", c.hl[k].name.c_str()), "$.kernels." + c.hl[k].name,
                                 static_cast<int>(dims[k].n), static_cast<int>(dims[k].a), 1);

  c.F.num_driver_states = static_cast<int>(X);
  c.F.num_driver_actions = static_cast<int>(A);
  if (j.contains("features") && j.contains("affordances"))
    bad("$.features", "give either features or affordances, not both");
  if (j.contains("features")) {
    const auto& jf = j["features"];
    const std::string p = "$.features";
    check_keys(jf, p, {"sets", "state_features", "targets", "allow_stochastic"});
    FeaturePair fp;
    fp.num_states = static_cast<int>(X);
    fp.num_actions = static_cast<int>(A);
    fp.feature_set_names = field(jf, p, "sets").get<std::vector<std::string>>();
    fp.num_feature_sets = static_cast<int>(fp.feature_set_names.size());
    const auto& sf = field(jf, p, "state_features");
    check_keys(sf, p + ".state_features", {"default", "entries"});
    auto dflt = read_dist(field(sf, p + ".state_features", "default"), p + ".state_features.default",
                          fp.num_feature_sets);
    fp.state_to_features.assign(static_cast<size_t>(X) * A, dflt);
    if (sf.contains("entries")) {
      const auto& arr = as_arr(sf["entries"], p + ".state_features.entries");
      for (size_t i = 0; i < arr.size(); ++i) {
        std::string q = idx(p + ".state_features.entries", i);
        check_keys(arr[i], q, {"x", "a", "dist"});
        long x = as_int(field(arr[i], q, "x"), q + ".x"), a = as_int(field(arr[i], q, "a"), q + ".a");
        if (x < 0 || x >= X || a < 0 || a >= A) bad(q, "state-action out of range");
        fp.state_to_features[static_cast<size_t>(x) * A + a] =
            read_dist(field(arr[i], q, "dist"), q + ".dist", fp.num_feature_sets);
      }
    }
    const auto& tg = as_arr(field(jf, p, "targets"), p + ".targets");
    for (size_t i = 0; i < tg.size(); ++i) {
      std::string q = idx(p + ".targets", i);
      check_keys(tg[i], q, {"space", "map"});
      int k = hl_index(as_str(field(tg[i], q, "space"), q + ".space"), q + ".space");
      fp.targets.push_back(k);
      const auto& m = as_arr(field(tg[i], q, "map"), q + ".map");
      if (m.size() != static_cast<size_t>(fp.num_feature_sets)) bad(q + ".map", "need one entry per feature set");
      std::vector<SparseDist> row;
      for (size_t f = 0; f < m.size(); ++f) row.push_back(read_dist(m[f], idx(q + ".map", f), dims[k].a));
      fp.features_to_actions.push_back(std::move(row));
    }
    bool stoch = jf.contains("allow_stochastic") && jf["allow_stochastic"].get<bool>();
    c.F = affordance_from_features(fp, stoch);
    s.features = std::move(fp);
  } else if (j.contains("affordances")) {
    const auto& ja = j["affordances"];
    const std::string p = "$.affordances";
    check_keys(ja, p, {"allow_stochastic", "factors"});
    c.F.allow_stochastic = ja.contains("allow_stochastic") && ja["allow_stochastic"].get<bool>();
    const auto& fs = as_arr(field(ja, p, "factors"), p + ".factors");
    for (size_t i = 0; i < fs.size(); ++i) {
      std::string q = idx(p + ".factors", i);
      check_keys(fs[i], q, {"target", "given", "default", "entries"});
      int target = hl_index(as_str(field(fs[i], q, "target"), q + ".target"), q + ".target");
      int given = -1;
      if (fs[i].contains("given")) given = hl_index(as_str(fs[i]["given"], q + ".given"), q + ".given");
      auto dflt = read_dist(field(fs[i], q, "default"), q + ".default", dims[target].a);
      AffordanceFactor f;
      f.target = target;
      f.given = given;
      f.given_size = given >= 0 ? static_cast<int>(dims[given].n) : 1;
      f.num_driver_states = static_cast<int>(X);
      f.num_driver_actions = static_cast<int>(A);
      f.table.assign(static_cast<size_t>(f.given_size) * X * A, dflt);
      if (fs[i].contains("entries")) {
        const auto& arr = as_arr(fs[i]["entries"], q + ".entries");
        for (size_t e = 0; e < arr.size(); ++e) {
          std::string r = idx(q + ".entries", e);
          check_keys(arr[e], r, {"x", "a", "given_value", "dist"});
          long x = as_int(field(arr[e], r, "x"), r + ".x"), a = as_int(field(arr[e], r, "a"), r + ".a");
          long zg = arr[e].contains("given_value") ? as_int(arr[e]["given_value"], r + ".given_value") : 0;
          if (x < 0 || x >= X || a < 0 || a >= A) bad(r, "state-action out of range");
          if (zg < 0 || zg >= f.given_size) bad(r + ".given_value", "value out of range");
          f.at(static_cast<Index>(zg), static_cast<Index>(x), static_cast<Index>(a)) =
              read_dist(field(arr[e], r, "dist"), r + ".dist", dims[target].a);
        }
      }
      c.F.factors.push_back(std::move(f));
    }
  } else if (!c.hl.empty()) {
    bad("$.affordances", "high-level spaces need affordances or features");
  }

  if (j.contains("modes")) {
    const auto& jm = j["modes"];
    check_keys(jm, "$.modes", {"num_modes", "map"});
    c.zeta.num_modes = static_cast<int>(as_int(field(jm, "$.modes", "num_modes"), "$.modes.num_modes"));
    const auto& m = as_arr(field(jm, "$.modes", "map"), "$.modes.map");
    for (size_t i = 0; i < m.size(); ++i) {
      long v = as_int(m[i], idx("$.modes.map", i));
      if (v < 0 || v >= c.zeta.num_modes) bad(idx("$.modes.map", i), "mode out of range");
      c.zeta.map.push_back(static_cast<Index>(v));
    }
  }

  if (j.contains("goals")) {
    const auto& jg = j["goals"];
    check_keys(jg, "$.goals", {"base", "task", "forbidden"});
    if (jg.contains("base")) {
      const auto& arr = as_arr(jg["base"], "$.goals.base");
      for (size_t i = 0; i < arr.size(); ++i) {
        std::string q = idx("$.goals.base", i);
        check_keys(arr[i], q, {"name", "entries"});
        GoalFunction g;
        g.name = as_str(field(arr[i], q, "name"), q + ".name");
        g.table = read_table({{"default", 0.0}, {"entries", field(arr[i], q, "entries")}}, q, static_cast<int>(X),
                             static_cast<int>(A));
        c.base_goals.push_back(std::move(g));
      }
    }
    if (jg.contains("task")) c.task_goal = read_predicate(jg["task"], "$.goals.task", comp, sizes);
    if (jg.contains("forbidden")) c.task_forbidden = read_predicate(jg["forbidden"], "$.goals.forbidden", comp, sizes);
  }

  c.base_constraint = StateActionTable(static_cast<int>(X), static_cast<int>(A), 1.0);
  for (size_t k = 0; k < c.hl.size(); ++k)
    c.hl[k].constraint = StateActionTable(static_cast<int>(dims[k].n), static_cast<int>(dims[k].a), 1.0);
  if (j.contains("constraints")) {
    const auto& jc = j["constraints"];
    check_keys(jc, "$.constraints", {"base", "high_level"});
    if (jc.contains("base"))
      c.base_constraint = read_table(jc["base"], "$.constraints.base", static_cast<int>(X), static_cast<int>(A));
    if (jc.contains("high_level")) {
      const auto& h = jc["high_level"];
      if (!h.is_object()) bad("$.constraints.high_level", "expected an object");
      for (auto it = h.begin(); it != h.end(); ++it) {
        std::string q = "$.constraints.high_level." + it.key();
        int k = hl_index(it.key(), q);
        c.hl[k].constraint = read_table(it.value(), q, static_cast<int>(dims[k].n), static_cast<int>(dims[k].a));
      }
    }
  }

  const auto& js = field(j, root, "start");
  if (!js.is_object()) bad("$.start", "expected an object");
  c.start.assign(names.size(), 0);
  for (auto it = js.begin(); it != js.end(); ++it) {
    auto f = comp.find(it.key());
    if (f == comp.end()) bad("$.start." + it.key(), "unknown space");
    long v = as_int(it.value(), "$.start." + it.key());
    if (v < 0 || v >= sizes[f->second]) bad("$.start." + it.key(), "value out of range");
    c.start[f->second] = static_cast<Index>(v);
  }

  if (j.contains("options")) {
    const auto& jo = j["options"];
    check_keys(jo, "$.options", {"set", "site_names", "macros", "plan_depth"});
    if (jo.contains("set")) {
      std::string k = as_str(jo["set"], "$.options.set");
      if (k == "affordance") s.option_set = OptionSetKind::Affordance;
      else if (k == "state-action") s.option_set = OptionSetKind::StateAction;
      else if (k == "explicit") s.option_set = OptionSetKind::Explicit;
      else bad("$.options.set", "unknown option set '" + k + "'");
    }
    if (jo.contains("site_names")) {
      const auto& arr = as_arr(jo["site_names"], "$.options.site_names");
      for (size_t i = 0; i < arr.size(); ++i) {
        std::string q = idx("$.options.site_names", i);
        const auto& e = as_arr(arr[i], q);
        if (e.size() != 3) bad(q, "expected [state, action, name]");
        long x = as_int(e[0], q + "[0]"), a = as_int(e[1], q + "[1]");
        if (x < 0 || x >= X || a < 0 || a >= A) bad(q, "state-action out of range");
        c.site_names[{static_cast<Index>(x), static_cast<Index>(a)}] = as_str(e[2], q + "[2]");
      }
    }
    if (jo.contains("macros")) {
      const auto& arr = as_arr(jo["macros"], "$.options.macros");
      for (size_t i = 0; i < arr.size(); ++i) {
        std::string q = idx("$.options.macros", i);
        check_keys(arr[i], q, {"name", "sequence"});
        MacroSpec m;
        m.name = as_str(field(arr[i], q, "name"), q + ".name");
        m.sequence = field(arr[i], q, "sequence").get<std::vector<std::string>>();
        s.macros.push_back(std::move(m));
      }
    }
    if (jo.contains("plan_depth")) s.plan_depth = static_cast<int>(as_int(jo["plan_depth"], "$.options.plan_depth"));
  }

  if (j.contains("expects")) {
    const auto& arr = as_arr(j["expects"], "$.expects");
    for (size_t i = 0; i < arr.size(); ++i) {
      std::string q = idx("$.expects", i);
      check_keys(arr[i], q,
                 {"kind", "option", "space", "cell", "mode", "value", "depth", "prune", "macros", "length", "lo", "hi"});
      Expectation e;
      e.kind = as_str(field(arr[i], q, "kind"), q + ".kind");
      if (e.kind != "base_kappa" && e.kind != "plan" && e.kind != "sublimated_kappa" && e.kind != "sum_to_one")
        bad(q + ".kind", "unknown expectation kind '" + e.kind + "'");
      const auto& o = arr[i];
      if (o.contains("option")) e.option = as_str(o["option"], q + ".option");
      if (o.contains("space")) e.space = as_str(o["space"], q + ".space");
      if (o.contains("cell")) e.cell = static_cast<Index>(as_int(o["cell"], q + ".cell"));
      if (o.contains("mode")) e.mode = static_cast<Index>(as_int(o["mode"], q + ".mode"));
      if (o.contains("value")) e.value = static_cast<Index>(as_int(o["value"], q + ".value"));
      if (o.contains("depth")) e.depth = static_cast<int>(as_int(o["depth"], q + ".depth"));
      if (o.contains("prune")) e.prune = o["prune"].get<bool>();
      if (o.contains("macros")) e.macros = o["macros"].get<bool>();
      if (o.contains("length")) e.length = static_cast<int>(as_int(o["length"], q + ".length"));
      if (o.contains("lo")) e.lo = as_num(o["lo"], q + ".lo");
      if (o.contains("hi")) e.hi = as_num(o["hi"], q + ".hi");
      s.expects.push_back(std::move(e));
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Validation, "$: " + std::string(e.what()));
  }
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::Config, "cannot open " + path + " for writing");
  f << scenario_to_json(s) << "\n";
  require(static_cast<bool>(f), ErrorCode::Config, "failed writing " + path);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::Config, "cannot open scenario file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return scenario_from_json(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

namespace {

bool kernels_equal(const TransitionKernel& a, const TransitionKernel& b) {
  if (a.num_states() != b.num_states() || a.num_actions() != b.num_actions() || a.num_modes() != b.num_modes())
    return false;
  for (Index s = 0; s < a.num_states(); ++s)
    for (Index x = 0; x < a.num_actions(); ++x)
      for (Index m = 0; m < a.num_modes(); ++m) {
        auto ra = a.row(s, x, m), rb = b.row(s, x, m);
        if (ra.size() != rb.size()) return false;
        for (size_t i = 0; i < ra.size(); ++i)
          if (ra[i].next != rb[i].next || ra[i].prob != rb[i].prob) return false;
      }
  return true;
}

bool tables_equal(const StateActionTable& a, const StateActionTable& b) {
  return a.num_states == b.num_states && a.num_actions == b.num_actions && a.values == b.values;
}

bool predicates_equal(const StatePredicate& a, const StatePredicate& b) {
  if (a.clauses.size() != b.clauses.size()) return false;
  for (size_t i = 0; i < a.clauses.size(); ++i)
    if (a.clauses[i].component != b.clauses[i].component || a.clauses[i].values != b.clauses[i].values) return false;
  return true;
}

}  // namespace

bool scenarios_equal(const Scenario& a, const Scenario& b, std::string* why) {
  auto fail = [&](const std::string& w) {
    if (why) *why = w;
    return false;
  };
  if (a.name != b.name || a.doc != b.doc) return fail("name or doc");
  const Ctmdp &x = a.c, &y = b.c;
  if (!kernels_equal(*x.base, *y.base)) return fail("base kernel");
  if (x.grid_rows != y.grid_rows || x.grid_cols != y.grid_cols || x.base_action_labels != y.base_action_labels)
    return fail("base space description");
  if (!tables_equal(x.base_constraint, y.base_constraint)) return fail("base constraint");
  if (x.hl.size() != y.hl.size()) return fail("number of high-level spaces");
  for (size_t k = 0; k < x.hl.size(); ++k) {
    const auto &p = x.hl[k], &q = y.hl[k];
    if (p.name != q.name || p.default_actions != q.default_actions || p.state_labels != q.state_labels ||
        p.action_labels != q.action_labels)
      return fail("space " + p.name + " description");
    if (!kernels_equal(*p.kernel, *q.kernel)) return fail("space " + p.name + " kernel");
    if (!tables_equal(p.constraint, q.constraint)) return fail("space " + p.name + " constraint");
  }
  if (x.F.factors.size() != y.F.factors.size() || x.F.allow_stochastic != y.F.allow_stochastic)
    return fail("affordance factors");
  for (size_t i = 0; i < x.F.factors.size(); ++i) {
    const auto &p = x.F.factors[i], &q = y.F.factors[i];
    if (p.target != q.target || p.given != q.given || p.given_size != q.given_size || p.table != q.table)
      return fail("affordance factor " + std::to_string(i));
  }
  if (x.zeta.num_modes != y.zeta.num_modes || x.zeta.map != y.zeta.map) return fail("mode function");
  if (x.base_goals.size() != y.base_goals.size()) return fail("base goals");
  for (size_t i = 0; i < x.base_goals.size(); ++i)
    if (x.base_goals[i].name != y.base_goals[i].name || !tables_equal(x.base_goals[i].table, y.base_goals[i].table))
      return fail("base goal " + x.base_goals[i].name);
  if (!predicates_equal(x.task_goal, y.task_goal) || !predicates_equal(x.task_forbidden, y.task_forbidden))
    return fail("task predicates");
  if (x.start != y.start) return fail("start");
  if (x.site_names != y.site_names) return fail("site names");
  if (a.features.has_value() != b.features.has_value()) return fail("features");
  if (a.features) {
    const auto &p = *a.features, &q = *b.features;
    if (p.feature_set_names != q.feature_set_names || p.state_to_features != q.state_to_features ||
        p.targets != q.targets || p.features_to_actions != q.features_to_actions)
      return fail("feature functions");
  }
  if (a.option_set != b.option_set || a.plan_depth != b.plan_depth) return fail("option settings");
  if (a.macros.size() != b.macros.size()) return fail("macros");
  for (size_t i = 0; i < a.macros.size(); ++i)
    if (a.macros[i].name != b.macros[i].name || a.macros[i].sequence != b.macros[i].sequence) return fail("macros");
  if (a.expects.size() != b.expects.size()) return fail("expectations");
  for (size_t i = 0; i < a.expects.size(); ++i) {
    const auto &p = a.expects[i], &q = b.expects[i];
    if (p.kind != q.kind || p.option != q.option || p.space != q.space || p.cell != q.cell || p.mode != q.mode ||
        p.value != q.value || p.depth != q.depth || p.prune != q.prune || p.macros != q.macros ||
        p.length != q.length || p.lo != q.lo || p.hi != q.hi)
      return fail("expectation " + std::to_string(i));
  }
  return true;
}

}  // namespace okbe
