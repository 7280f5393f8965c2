#include "kaclab/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "toml.hpp"

#include "kaclab/errors.hpp"

namespace kaclab {

using nlohmann::json;

namespace {

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (const auto* v = node.as_integer()) return json(v->get());
  if (const auto* v = node.as_floating_point()) return json(v->get());
  if (const auto* v = node.as_string()) return json(v->get());
  if (const auto* v = node.as_boolean()) return json(v->get());
  throw ConfigError("config: dates and times are not supported");
}

/// Reads keys from one table and rejects any it did not consume.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError("config: " + label() + " must be a table");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const char* key, double& out) {
    if (const json* v = take(key)) out = as_double(*v, key);
  }
  void count(const char* key, std::size_t& out) {
    if (const json* v = take(key)) out = as_size(*v, key);
  }
  void seed(const char* key, std::uint64_t& out) {
    const json* v = take(key);
    if (!v) return;
    if (v->is_number_unsigned()) {
      out = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v->get<std::int64_t>());
    } else if (v->is_string()) {
      const std::string s = v->get<std::string>();
      std::size_t used = 0;
      try {
        out = std::stoull(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size() || s.front() == '-') fail(key, "a non-negative integer");
    } else {
      fail(key, "a non-negative integer");
    }
  }
  void numbers(const char* key, std::vector<double>& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) fail(key, "an array of numbers");
    out.clear();
    for (const auto& e : *v) out.push_back(as_double(e, key));
  }
  void counts(const char* key, std::vector<std::size_t>& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) fail(key, "an array of integers");
    out.clear();
    for (const auto& e : *v) out.push_back(as_size(e, key));
  }
  void text(const char* key, std::string& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_string()) fail(key, "a string");
    out = v->get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("config: unknown key '" + k + "' in " + label());
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string, std::less<>> seen_;

  std::string label() const { return where_.empty() ? "top level" : "[" + where_ + "]"; }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("config: '" + std::string(key) + "' in " + label() + " must be " + what);
  }
  double as_double(const json& v, const char* key) const {
    if (!v.is_number()) fail(key, "a number");
    return v.get<double>();
  }
  std::size_t as_size(const json& v, const char* key) const {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::size_t>(v.get<std::int64_t>());
    fail(key, "a non-negative integer");
  }
};

InitialCondition read_initial(const json& j, const std::string& where) {
  Reader r(j, where);
  std::string kind;
  r.text("kind", kind);
  InitialCondition ic;
  if (kind == "gaussian") {
    ic = InitialCondition::gaussian(1.0);
    r.number("variance", ic.variance);
  } else if (kind == "two_point") {
    ic = InitialCondition::two_point(1.4142135623730951);
    r.number("level", ic.level);
  } else if (kind == "uniform") {
    ic = InitialCondition::uniform(-1.0, 1.0);
    r.number("lo", ic.lo);
    r.number("hi", ic.hi);
  } else if (kind == "file") {
    ic = InitialCondition::file("");
    r.text("path", ic.path);
  } else {
    throw ConfigError("config: [" + where + "] kind must be gaussian, two_point, uniform or file");
  }
  r.finish();
  return ic;
}

void validate_initial(const InitialCondition& ic, const char* where) {
  const std::string w = std::string("config: [") + where + "] ";
  switch (ic.kind) {
    case InitialCondition::Kind::Gaussian:
      if (!(ic.variance > 0.0) || !std::isfinite(ic.variance)) throw ConfigError(w + "variance must be positive");
      break;
    case InitialCondition::Kind::TwoPoint:
      if (!(ic.level > 0.0) || !std::isfinite(ic.level)) throw ConfigError(w + "level must be positive");
      break;
    case InitialCondition::Kind::Uniform:
      if (!(ic.lo < ic.hi) || !std::isfinite(ic.lo) || !std::isfinite(ic.hi))
        throw ConfigError(w + "needs finite lo < hi");
      break;
    case InitialCondition::Kind::File:
      if (ic.path.empty()) throw ConfigError(w + "path is empty");
      break;
  }
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_string(const std::string& s) { return json(s).dump(); }

void initial_toml(std::ostream& o, const InitialCondition& ic) {
  switch (ic.kind) {
    case InitialCondition::Kind::Gaussian:
      o << "kind = \"gaussian\"\nvariance = " << fmt_double(ic.variance) << "\n";
      break;
    case InitialCondition::Kind::TwoPoint:
      o << "kind = \"two_point\"\nlevel = " << fmt_double(ic.level) << "\n";
      break;
    case InitialCondition::Kind::Uniform:
      o << "kind = \"uniform\"\nlo = " << fmt_double(ic.lo) << "\nhi = " << fmt_double(ic.hi) << "\n";
      break;
    case InitialCondition::Kind::File:
      o << "kind = \"file\"\npath = " << fmt_string(ic.path) << "\n";
      break;
  }
}

json initial_json(const InitialCondition& ic) {
  switch (ic.kind) {
    case InitialCondition::Kind::Gaussian: return {{"kind", "gaussian"}, {"variance", ic.variance}};
    case InitialCondition::Kind::TwoPoint: return {{"kind", "two_point"}, {"level", ic.level}};
    case InitialCondition::Kind::Uniform: return {{"kind", "uniform"}, {"lo", ic.lo}, {"hi", ic.hi}};
    case InitialCondition::Kind::File: return {{"kind", "file"}, {"path", ic.path}};
  }
  return {};
}

template <class T>
std::string list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) s += fmt_double(v[i]);
    else s += std::to_string(v[i]);
  }
  return s + "]";
}

}  // namespace

std::vector<double> ExperimentConfig::times() const {
  return sample_times.empty() ? std::vector<double>{t_end} : sample_times;
}

SolverSettings ExperimentConfig::solver_settings(int threads) const {
  SolverSettings s;
  s.v_max = solver_v_max;
  s.half_points = solver_half_points;
  s.oversample = solver_oversample;
  s.theta_nodes = solver_theta_nodes;
  s.table_theta_nodes = solver_table_theta_nodes;
  s.dt = solver_dt;
  s.mollifier_cells = solver_mollifier_cells;
  s.output_times = times();
  s.threads = threads;
  return s;
}

void ExperimentConfig::validate() const {
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (n_particles < 2) throw ConfigError("config: n_particles must be at least 2");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("config: t_end must be positive");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = sample_times[i];
    if (!(t >= 0.0 && t <= t_end)) throw ConfigError("config: sample_times must lie in [0, t_end]");
    if (i > 0 && t < sample_times[i - 1]) throw ConfigError("config: sample_times must be nondecreasing");
  }
  if (replicas < 1) throw ConfigError("config: replicas must be at least 1");
  if (!(moment_order > 2.0) || !std::isfinite(moment_order))
    throw ConfigError("config: moment_order must exceed 2");
  for (std::size_t n : n_list)
    if (n < 2) throw ConfigError("config: n_list entries must be at least 2");
  for (std::size_t k : k_list)
    if (k < 1) throw ConfigError("config: k_list entries must be at least 1");
  validate_initial(initial, "initial");
  validate_initial(reference, "reference");
  if (!(solver_v_max >= 0.0)) throw ConfigError("config: [solver] v_max must be non-negative");
  if (solver_half_points < 16) throw ConfigError("config: [solver] half_points must be at least 16");
  if (solver_oversample < 1) throw ConfigError("config: [solver] oversample must be at least 1");
  if (solver_theta_nodes < 4 || solver_theta_nodes % 4)
    throw ConfigError("config: [solver] theta_nodes must be a positive multiple of 4");
  if (solver_table_theta_nodes < 4 || solver_table_theta_nodes % 4)
    throw ConfigError("config: [solver] table_theta_nodes must be a positive multiple of 4");
  if (!(solver_dt >= 0.0)) throw ConfigError("config: [solver] dt must be non-negative");
  if (!(solver_mollifier_cells >= 0.0)) throw ConfigError("config: [solver] mollifier_cells must be non-negative");
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: JSON syntax error: ") + e.what());
    }
  } else {
    try {
      root = toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
      std::ostringstream msg;
      msg << "config: TOML syntax error at line " << e.source().begin.line << ": " << e.description();
      throw ConfigError(msg.str());
    }
  }
  ExperimentConfig c;
  Reader r(root, "");
  r.number("lambda", c.params.lambda);
  r.number("mu", c.params.mu);
  r.number("temperature", c.params.temperature);
  r.count("n_particles", c.n_particles);
  r.number("t_end", c.t_end);
  r.numbers("sample_times", c.sample_times);
  r.count("replicas", c.replicas);
  r.seed("seed", c.seed);
  r.number("moment_order", c.moment_order);
  r.counts("n_list", c.n_list);
  r.counts("k_list", c.k_list);
  if (const json* v = r.take("initial")) c.initial = read_initial(*v, "initial");
  if (const json* v = r.take("reference")) c.reference = read_initial(*v, "reference");
  if (const json* v = r.take("solver")) {
    Reader s(*v, "solver");
    s.number("v_max", c.solver_v_max);
    s.count("half_points", c.solver_half_points);
    s.count("oversample", c.solver_oversample);
    s.count("theta_nodes", c.solver_theta_nodes);
    s.count("table_theta_nodes", c.solver_table_theta_nodes);
    s.number("dt", c.solver_dt);
    s.number("mollifier_cells", c.solver_mollifier_cells);
    s.finish();
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parse_config(ss.str());
  const auto base = path.parent_path();
  for (InitialCondition* ic : {&c.initial, &c.reference})
    if (ic->kind == InitialCondition::Kind::File && std::filesystem::path(ic->path).is_relative())
      ic->path = (base / ic->path).lexically_normal().string();
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "lambda = " << fmt_double(c.params.lambda) << "\n";
  o << "mu = " << fmt_double(c.params.mu) << "\n";
  o << "temperature = " << fmt_double(c.params.temperature) << "\n";
  o << "n_particles = " << c.n_particles << "\n";
  o << "t_end = " << fmt_double(c.t_end) << "\n";
  o << "sample_times = " << list(c.sample_times) << "\n";
  o << "replicas = " << c.replicas << "\n";
  if (c.seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    o << "seed = " << c.seed << "\n";
  else
    o << "seed = \"" << c.seed << "\"\n";
  o << "moment_order = " << fmt_double(c.moment_order) << "\n";
  o << "n_list = " << list(c.n_list) << "\n";
  o << "k_list = " << list(c.k_list) << "\n";
  o << "\n[initial]\n";
  initial_toml(o, c.initial);
  o << "\n[reference]\n";
  initial_toml(o, c.reference);
  o << "\n[solver]\n";
  o << "v_max = " << fmt_double(c.solver_v_max) << "\n";
  o << "half_points = " << c.solver_half_points << "\n";
  o << "oversample = " << c.solver_oversample << "\n";
  o << "theta_nodes = " << c.solver_theta_nodes << "\n";
  o << "table_theta_nodes = " << c.solver_table_theta_nodes << "\n";
  o << "dt = " << fmt_double(c.solver_dt) << "\n";
  o << "mollifier_cells = " << fmt_double(c.solver_mollifier_cells) << "\n";
  return o.str();
}

std::string serialize_config_json(const ExperimentConfig& c) {
  json j;
  j["lambda"] = c.params.lambda;
  j["mu"] = c.params.mu;
  j["temperature"] = c.params.temperature;
  j["n_particles"] = c.n_particles;
  j["t_end"] = c.t_end;
  j["sample_times"] = c.sample_times;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["moment_order"] = c.moment_order;
  j["n_list"] = c.n_list;
  j["k_list"] = c.k_list;
  j["initial"] = initial_json(c.initial);
  j["reference"] = initial_json(c.reference);
  j["solver"] = {{"v_max", c.solver_v_max},
                 {"half_points", c.solver_half_points},
                 {"oversample", c.solver_oversample},
                 {"theta_nodes", c.solver_theta_nodes},
                 {"table_theta_nodes", c.solver_table_theta_nodes},
                 {"dt", c.solver_dt},
                 {"mollifier_cells", c.solver_mollifier_cells}};
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(serialize_config(config)));
  return buf;
}

}  // namespace kaclab
