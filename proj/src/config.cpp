#include "navslip/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace navslip {

namespace {

using nlohmann::json;

struct Key {
  std::string name;
  std::string label;  // shown in suggestions, e.g. "μ/viscosity"
};

const std::map<std::string, std::vector<Key>>& schema() {
  static const std::map<std::string, std::vector<Key>> s{
      {"", {{"format_version", ""}, {"domain", ""}, {"discretization", ""}, {"physics", ""},
            {"time", ""}, {"forcing", ""}, {"initial", ""}, {"output", ""}, {"study", ""}}},
      {"domain", {{"geometry", ""}, {"lengths", ""}, {"half_height", "h/half_height"},
                  {"friction", "α/friction"}}},
      {"discretization", {{"modes", "m/modes"}, {"oversampling", ""}, {"nodes", ""}}},
      {"physics", {{"viscosity", "μ/viscosity"}, {"damping", "ϑ/damping"}, {"exponent", "β/exponent"}}},
      {"time", {{"dt", ""}, {"final_time", "T/final_time"}, {"scheme", ""}, {"picard_tol", ""},
                {"picard_max_iter", ""}}},
      {"forcing", {{"kind", ""}, {"mode", ""}, {"amplitude", ""}, {"case", ""}}},
      {"initial", {{"kind", ""}, {"modes", ""}, {"seed", ""}, {"decay", ""}, {"amplitude", ""},
                   {"reference_modes", ""}}},
      {"initial.modes[]", {{"index", ""}, {"amplitude", ""}}},
      {"output", {{"directory", ""}, {"record_every", ""}, {"formats", ""}}},
      {"study", {{"dts", ""}, {"modes", ""}, {"eps", ""}, {"perturbation_seed", ""},
                 {"divergence_tol", ""}, {"normal_trace_tol", ""}, {"slip_tol", ""}, {"gram_tol", ""}}},
  };
  return s;
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

class Reader {
 public:
  std::vector<ConfigIssue> issues;

  void fail(const std::string& path, const std::string& message) { issues.push_back({path, message}); }

  // Object at doc[key] (or null if absent); reports unknown keys.
  const json* section(const json& doc, const std::string& key, const std::string& schema_name) {
    if (!doc.contains(key)) return nullptr;
    const json& s = doc.at(key);
    if (!s.is_object()) {
      fail(key, "expected an object");
      return nullptr;
    }
    check_keys(s, key, schema_name);
    return &s;
  }

  void check_keys(const json& obj, const std::string& prefix, const std::string& schema_name) {
    const auto& known = schema().at(schema_name);
    std::vector<std::string> names, labels;
    for (const auto& k : known) names.push_back(k.name);
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (std::find(names.begin(), names.end(), key) != names.end()) continue;
      const std::string near = nearest_key(key, names);
      std::string msg = "unknown key";
      if (!near.empty()) {
        const auto it = std::find_if(known.begin(), known.end(), [&](const Key& k) { return k.name == near; });
        msg += "; did you mean \"" + (it->label.empty() ? near : it->label) + "\"?";
      }
      fail(join(prefix, key), msg);
    }
  }

  void number(const json* obj, const std::string& prefix, const std::string& key, double& out) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_number()) return fail(join(prefix, key), "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(join(prefix, key), "must be finite");
  }

  void integer(const json* obj, const std::string& prefix, const std::string& key, int& out) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_number_integer()) return fail(join(prefix, key), "expected an integer");
    out = v.get<int>();
  }

  void seed(const json* obj, const std::string& prefix, const std::string& key, std::uint64_t& out) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      return fail(join(prefix, key), "expected a nonnegative integer");
    out = v.get<std::uint64_t>();
  }

  void string(const json* obj, const std::string& prefix, const std::string& key, std::string& out) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_string()) return fail(join(prefix, key), "expected a string");
    out = v.get<std::string>();
  }

  template <class T>
  bool list(const json* obj, const std::string& prefix, const std::string& key, std::vector<T>& out) {
    if (!obj || !obj->contains(key)) return false;
    const json& v = obj->at(key);
    const std::string path = join(prefix, key);
    if (!v.is_array()) {
      fail(path, "expected an array");
      return false;
    }
    std::vector<T> parsed;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
      if (!ok) {
        fail(path + "[" + std::to_string(i) + "]", std::is_integral_v<T> ? "expected an integer" : "expected a number");
        return false;
      }
      parsed.push_back(v[i].get<T>());
    }
    out = std::move(parsed);
    return true;
  }
};

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  auto distance = [](const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t diag = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t up = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
        diag = up;
      }
    }
    return row[b.size()];
  };
  std::string best;
  std::size_t best_d = std::max<std::size_t>(2, key.size() / 3) + 1;
  for (const auto& c : candidates) {
    const std::size_t d = distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "invalid configuration (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << ")";
        for (const auto& i : issues) os << "\n  " << (i.path.empty() ? "<document>" : i.path) << ": " << i.message;
        return os.str();
      }()),
      issues_(std::move(issues)) {}

nlohmann::json ConfigError::to_json() const {
  json list = json::array();
  for (const auto& i : issues_) list.push_back({{"path", i.path}, {"message", i.message}});
  return {{"error", {{"kind", "config"}, {"message", "invalid configuration"}, {"issues", list}}}};
}

RunDescription parse_config(const json& doc) {
  Reader r;
  RunDescription d;
  if (!doc.is_object()) throw ConfigError(std::vector<ConfigIssue>{{"", "top level must be an object"}});
  r.check_keys(doc, "", "");

  if (!doc.contains("format_version")) {
    r.fail("format_version", "required");
  } else if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != kConfigFormatVersion) {
    r.fail("format_version", "unsupported; expected " + std::to_string(kConfigFormatVersion));
  }

  // domain
  const json* dom = r.section(doc, "domain", "domain");
  std::string geometry;
  r.string(dom, "domain", "geometry", geometry);
  if (!dom || !dom->contains("geometry")) r.fail("domain.geometry", "required (torus | slab)");
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> lengths;
  const bool has_lengths = r.list(dom, "domain", "lengths", lengths);
  double half_height = 1.0, friction = 0.0;
  r.number(dom, "domain", "half_height", half_height);
  r.number(dom, "domain", "friction", friction);
  if (geometry == "torus") {
    if (!has_lengths) lengths = {two_pi, two_pi, two_pi};
    if (lengths.size() != 3) r.fail("domain.lengths", "torus needs 3 periods");
    if (dom && dom->contains("half_height")) r.fail("domain.half_height", "slab only");
    if (dom && dom->contains("friction")) r.fail("domain.friction", "slab only");
    if (lengths.size() == 3 && std::all_of(lengths.begin(), lengths.end(), [](double l) { return l > 0.0; }))
      d.domain = DomainSpec::torus(lengths[0], lengths[1], lengths[2]);
  } else if (geometry == "slab") {
    if (!has_lengths) lengths = {two_pi, two_pi};
    if (lengths.size() != 2) r.fail("domain.lengths", "slab needs 2 horizontal periods");
    if (!(half_height > 0.0)) r.fail("domain.half_height", "h > 0 required");
    if (!(friction >= 0.0)) r.fail("domain.friction", "α ≥ 0 required");
    const bool ok = lengths.size() == 2 && lengths[0] > 0.0 && lengths[1] > 0.0;
    if (ok && half_height > 0.0 && friction >= 0.0) d.domain = DomainSpec::slab(lengths[0], lengths[1], half_height, friction);
  } else if (!geometry.empty()) {
    r.fail("domain.geometry", "expected torus or slab");
  }
  for (std::size_t i = 0; i < lengths.size(); ++i)
    if (!(lengths[i] > 0.0)) r.fail("domain.lengths[" + std::to_string(i) + "]", "period > 0 required");

  // discretization
  const json* disc = r.section(doc, "discretization", "discretization");
  if (!disc || !disc->contains("modes")) r.fail("discretization.modes", "required");
  r.integer(disc, "discretization", "modes", d.modes);
  if (disc && disc->contains("modes") && d.modes < 1) r.fail("discretization.modes", "m ≥ 1 required");
  r.number(disc, "discretization", "oversampling", d.grid.oversampling);
  if (!(d.grid.oversampling >= 1.0)) r.fail("discretization.oversampling", ">= 1 required");
  std::vector<int> nodes;
  if (r.list(disc, "discretization", "nodes", nodes)) {
    if (nodes.size() != 3 || std::any_of(nodes.begin(), nodes.end(), [](int n) { return n < 1; }))
      r.fail("discretization.nodes", "expected 3 positive counts");
    else
      d.grid.nodes = {nodes[0], nodes[1], nodes[2]};
  }

  // physics
  const json* phys = r.section(doc, "physics", "physics");
  PhysicsParams& p = d.solver.params;
  r.number(phys, "physics", "viscosity", p.viscosity);
  r.number(phys, "physics", "damping", p.damping);
  r.number(phys, "physics", "exponent", p.exponent);
  if (!(p.viscosity > 0.0)) r.fail("physics.viscosity", "μ > 0 required");
  if (!(p.damping >= 0.0)) r.fail("physics.damping", "ϑ ≥ 0 required");
  if (!(p.exponent >= 1.0)) r.fail("physics.exponent", "β ≥ 1 required");

  // time
  const json* time = r.section(doc, "time", "time");
  SolverConfig& s = d.solver;
  if (time && time->contains("dt") && !(*time)["dt"].is_null()) {
    d.auto_dt = false;
    r.number(time, "time", "dt", s.dt);
    if (!(s.dt > 0.0)) r.fail("time.dt", "dt > 0 required");
  }
  r.number(time, "time", "final_time", s.final_time);
  if (!(s.final_time > 0.0)) r.fail("time.final_time", "T > 0 required");
  if (!d.auto_dt && s.dt > 0.0 && s.final_time > 0.0) {
    const double n = s.final_time / s.dt;
    if (!(s.final_time > s.dt)) r.fail("time.dt", "dt < T required");
    else if (std::abs(n - std::round(n)) > 1e-9 * n) r.fail("time.dt", "T must be an integer multiple of dt");
  }
  std::string scheme = to_string(s.scheme);
  r.string(time, "time", "scheme", scheme);
  try {
    s.scheme = scheme_from_string(scheme);
  } catch (const std::exception&) {
    r.fail("time.scheme", "expected imex-cn or rk4");
  }
  r.number(time, "time", "picard_tol", s.picard_tol);
  if (!(s.picard_tol > 0.0)) r.fail("time.picard_tol", "> 0 required");
  r.integer(time, "time", "picard_max_iter", s.picard_max_iter);
  if (s.picard_max_iter < 1) r.fail("time.picard_max_iter", ">= 1 required");

  // forcing
  const json* forc = r.section(doc, "forcing", "forcing");
  std::string fkind = "none";
  r.string(forc, "forcing", "kind", fkind);
  if (fkind == "none") {
    d.forcing.kind = ForcingSpec::Kind::None;
  } else if (fkind == "static-mode") {
    d.forcing.kind = ForcingSpec::Kind::StaticMode;
    r.integer(forc, "forcing", "mode", d.forcing.mode);
    r.number(forc, "forcing", "amplitude", d.forcing.amplitude);
    if (d.forcing.mode < 0 || (d.modes >= 1 && d.forcing.mode >= d.modes))
      r.fail("forcing.mode", "index must lie in [0, m)");
  } else if (fkind == "mms") {
    d.forcing.kind = ForcingSpec::Kind::Mms;
    r.string(forc, "forcing", "case", d.forcing.mms_case);
  } else {
    r.fail("forcing.kind", "expected none, static-mode or mms");
  }
  if (d.forcing.kind != ForcingSpec::Kind::StaticMode)
    for (const char* k : {"mode", "amplitude"})
      if (forc && forc->contains(k)) r.fail(join("forcing", k), "only valid for kind static-mode");
  if (d.forcing.kind != ForcingSpec::Kind::Mms && forc && forc->contains("case"))
    r.fail("forcing.case", "only valid for kind mms");
  if (d.forcing.kind == ForcingSpec::Kind::Mms || (forc && forc->contains("case"))) {
    try {
      const MmsCase c = MmsCase::by_id(d.forcing.mms_case, p);
      for (const auto& t : c.terms)
        if (d.modes >= 1 && t.mode >= d.modes)
          r.fail("forcing.case", "case uses mode " + std::to_string(t.mode) + " outside the basis");
    } catch (const std::invalid_argument& e) {
      r.fail("forcing.case", e.what());
    }
  }

  // initial
  const json* init = r.section(doc, "initial", "initial");
  std::string ikind = "zero";
  r.string(init, "initial", "kind", ikind);
  InitialSpec& ini = d.initial;
  if (ikind == "zero") {
    ini.kind = InitialSpec::Kind::Zero;
  } else if (ikind == "modes") {
    ini.kind = InitialSpec::Kind::Modes;
    if (!init->contains("modes") || !(*init)["modes"].is_array()) {
      r.fail("initial.modes", "required array of {index, amplitude}");
    } else {
      const json& list = (*init)["modes"];
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "initial.modes[" + std::to_string(i) + "]";
        if (!list[i].is_object()) {
          r.fail(path, "expected an object");
          continue;
        }
        r.check_keys(list[i], path, "initial.modes[]");
        int index = -1;
        double a = 0.0;
        r.integer(&list[i], path, "index", index);
        r.number(&list[i], path, "amplitude", a);
        if (index < 0 || (d.modes >= 1 && index >= d.modes)) r.fail(path + ".index", "index must lie in [0, m)");
        ini.modes.emplace_back(index, a);
      }
    }
  } else if (ikind == "random") {
    ini.kind = InitialSpec::Kind::Random;
    r.seed(init, "initial", "seed", ini.seed);
    r.number(init, "initial", "decay", ini.decay);
    r.number(init, "initial", "amplitude", ini.amplitude);
    r.integer(init, "initial", "reference_modes", ini.reference_modes);
    if (!(ini.decay >= 0.0)) r.fail("initial.decay", ">= 0 required");
    if (ini.reference_modes < 1) r.fail("initial.reference_modes", ">= 1 required");
  } else {
    r.fail("initial.kind", "expected zero, modes or random");
  }
  if (ini.kind != InitialSpec::Kind::Random)
    for (const char* k : {"seed", "decay", "amplitude", "reference_modes"})
      if (init && init->contains(k)) r.fail(join("initial", k), "only valid for kind random");
  if (ini.kind != InitialSpec::Kind::Modes && init && init->contains("modes"))
    r.fail("initial.modes", "only valid for kind modes");

  // output
  const json* out = r.section(doc, "output", "output");
  std::string dir = d.output_directory.string();
  r.string(out, "output", "directory", dir);
  if (dir.empty()) r.fail("output.directory", "must not be empty");
  d.output_directory = dir;
  r.integer(out, "output", "record_every", s.record_every);
  if (s.record_every < 1) r.fail("output.record_every", ">= 1 required");
  if (out && out->contains("formats")) {
    const json& f = (*out)["formats"];
    if (!f.is_array()) {
      r.fail("output.formats", "expected an array");
    } else {
      d.write_csv = d.write_json = false;
      for (const auto& e : f) {
        if (e == "csv") d.write_csv = true;
        else if (e == "json") d.write_json = true;
        else r.fail("output.formats", "entries must be csv or json");
      }
    }
  }

  // study
  const json* st = r.section(doc, "study", "study");
  StudySpec& sp = d.study;
  if (r.list(st, "study", "dts", sp.dts)) {
    if (sp.dts.empty() || std::any_of(sp.dts.begin(), sp.dts.end(), [](double v) { return !(v > 0.0); }))
      r.fail("study.dts", "positive values required");
  }
  if (r.list(st, "study", "modes", sp.modes)) {
    if (sp.modes.size() < 2 || sp.modes.front() < 1 || !std::is_sorted(sp.modes.begin(), sp.modes.end()) ||
        std::adjacent_find(sp.modes.begin(), sp.modes.end()) != sp.modes.end())
      r.fail("study.modes", "at least two strictly increasing counts >= 1 required");
  }
  if (r.list(st, "study", "eps", sp.eps)) {
    if (sp.eps.empty() || !strictly_decreasing(sp.eps) || !(sp.eps.back() > 0.0))
      r.fail("study.eps", "positive, strictly decreasing values required");
  }
  r.seed(st, "study", "perturbation_seed", sp.perturbation_seed);
  r.number(st, "study", "divergence_tol", sp.divergence_tol);
  r.number(st, "study", "normal_trace_tol", sp.normal_trace_tol);
  r.number(st, "study", "slip_tol", sp.slip_tol);
  r.number(st, "study", "gram_tol", sp.gram_tol);
  if (sp.modes.empty() && d.modes >= 4) sp.modes = {d.modes / 4, d.modes / 2, d.modes};

  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  return d;
}

RunDescription parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"", std::string("malformed JSON: ") + e.what()}});
  }
  return parse_config(doc);
}

RunDescription parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<ConfigIssue>{{"", "cannot read config file '" + path.string() + "'"}});
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config_text(os.str());
}

nlohmann::json RunDescription::to_json() const {
  json dom;
  if (domain.geometry == Geometry::Torus) {
    dom = {{"geometry", "torus"}, {"lengths", domain.lengths}};
  } else {
    dom = {{"geometry", "slab"},
           {"lengths", {domain.lengths[0], domain.lengths[1]}},
           {"half_height", domain.half_height()},
           {"friction", domain.friction}};
  }
  json disc = {{"modes", modes}, {"oversampling", grid.oversampling}};
  if (grid.nodes != std::array<int, 3>{0, 0, 0}) disc["nodes"] = grid.nodes;

  json forc;
  switch (forcing.kind) {
    case ForcingSpec::Kind::None: forc = {{"kind", "none"}}; break;
    case ForcingSpec::Kind::StaticMode:
      forc = {{"kind", "static-mode"}, {"mode", forcing.mode}, {"amplitude", forcing.amplitude}};
      break;
    case ForcingSpec::Kind::Mms: forc = {{"kind", "mms"}, {"case", forcing.mms_case}}; break;
  }

  json formats = json::array();
  if (write_csv) formats.push_back("csv");
  if (write_json) formats.push_back("json");

  json doc = {
      {"format_version", kConfigFormatVersion},
      {"domain", dom},
      {"discretization", disc},
      {"physics",
       {{"viscosity", solver.params.viscosity},
        {"damping", solver.params.damping},
        {"exponent", solver.params.exponent}}},
      {"time",
       {{"dt", auto_dt ? json(nullptr) : json(solver.dt)},
        {"final_time", solver.final_time},
        {"scheme", to_string(solver.scheme)},
        {"picard_tol", solver.picard_tol},
        {"picard_max_iter", solver.picard_max_iter}}},
      {"forcing", forc},
      {"initial", initial.to_json()},
      {"output", {{"directory", output_directory.string()}, {"record_every", solver.record_every}, {"formats", formats}}},
      {"study",
       {{"dts", study.dts},
        {"eps", study.eps},
        {"perturbation_seed", study.perturbation_seed},
        {"divergence_tol", study.divergence_tol},
        {"normal_trace_tol", study.normal_trace_tol},
        {"slip_tol", study.slip_tol},
        {"gram_tol", study.gram_tol}}},
  };
  if (!study.modes.empty()) doc["study"]["modes"] = study.modes;
  return doc;
}

}  // namespace navslip
