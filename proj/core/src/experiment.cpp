#include "csec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "csec/error.hpp"
#include "csec/format.hpp"
#include "csec/loadopt.hpp"
#include "csec/matrix_io.hpp"
#include "csec/table1.hpp"

namespace csec {

using nlohmann::json;

std::span<const double> table1_preset(std::string_view name) {
  if (name == "table1_power") return kTable1PowerIteration;
  if (name == "table1_linreg") return kTable1LinearRegression;
  return {};
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

// Walks one JSON object, tracking which keys were consumed so unknown keys
// can be rejected.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + ": expected an object", path_);
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& get(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(join(path_, key) + ": required field missing", join(path_, key));
    return obj_.at(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  std::uint64_t count(const std::string& key) { return as_count(get(key), path(key)); }

  double real(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number", path(key));
    return v.get<double>();
  }

  std::string text(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string", path(key));
    return v.get<std::string>();
  }

  bool flag(const std::string& key) {
    const json& v = get(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false", path(key));
    return v.get<bool>();
  }

  std::vector<MachineId> ids(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) throw ConfigError(path(key) + ": expected an array of machine ids", path(key));
    std::vector<MachineId> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_count(v[i], path(key) + "/" + std::to_string(i)));
    return out;
  }

  std::vector<double> reals(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) throw ConfigError(path(key) + ": expected an array of numbers", path(key));
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(path(key) + "/" + std::to_string(i) + ": expected a number", path(key) + "/" + std::to_string(i));
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path(item.key()) + ": unknown field", path(item.key()));
    }
  }

  static std::uint64_t as_count(const json& v, const std::string& where) {
    if (!v.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer", where);
    return v.get<std::uint64_t>();
  }

 private:
  std::string where() const { return path_.empty() ? "/" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

StragglerPolicy parse_policy(const json& v, const std::string& path) {
  Fields f(v, path);
  const std::string kind = f.text("kind");
  StragglerPolicy policy;
  if (kind == "none") {
    policy = NoStragglers{};
  } else if (kind == "slowest_k") {
    policy = SlowestK{f.count("k")};
  } else if (kind == "fixed_set") {
    policy = FixedSet{f.ids("ids")};
  } else if (kind == "random_k") {
    policy = RandomK{f.count("k"), f.count("seed")};
  } else {
    throw ConfigError(f.path("kind") + ": unknown straggler policy '" + kind + "'", f.path("kind"));
  }
  f.finish();
  return policy;
}

json policy_to_json(const StragglerPolicy& policy) {
  if (std::holds_alternative<NoStragglers>(policy)) return {{"kind", "none"}};
  if (const auto* p = std::get_if<SlowestK>(&policy)) return {{"kind", "slowest_k"}, {"k", p->k}};
  if (const auto* p = std::get_if<FixedSet>(&policy)) return {{"kind", "fixed_set"}, {"ids", p->ids}};
  const auto& r = std::get<RandomK>(policy);
  return {{"kind", "random_k"}, {"k", r.k}, {"seed", r.seed}};
}

Scheme parse_scheme_kind(const std::string& name, const std::string& path) {
  if (name == "uncoded") return Scheme::kUncoded;
  if (name == "homogeneous") return Scheme::kHomogeneousCyclic;
  if (name == "heterogeneous") return Scheme::kHeterogeneous;
  throw ConfigError(path + ": unknown scheme '" + name + "'", path);
}

void validate_config(const ExperimentConfig& c) {
  const std::size_t roster = c.speeds.size();
  if (c.recovery_threshold < 1) throw ConfigError("/L: must be >= 1", "/L");
  if (roster < c.recovery_threshold) throw ConfigError("/machines/speeds: fewer machines than L", "/machines/speeds");
  for (std::size_t i = 0; i < roster; ++i) {
    if (!(c.speeds[i] > 0.0) || !std::isfinite(c.speeds[i])) {
      throw ConfigError("/machines/speeds/" + std::to_string(i) + ": speeds must be positive", "/machines/speeds");
    }
  }
  for (std::size_t i = 0; i < c.elastic.size(); ++i) {
    if (c.elastic[i] >= roster) {
      throw ConfigError("/machines/elastic/" + std::to_string(i) + ": machine id out of range",
                        "/machines/elastic/" + std::to_string(i));
    }
  }
  if (!(c.p_available >= 0.0 && c.p_available <= 1.0)) {
    throw ConfigError("/machines/p_available: must lie in [0, 1]", "/machines/p_available");
  }
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw ConfigError("/gamma: must lie in [0, 1]", "/gamma");
  if (!c.initial_speed_estimate.empty()) {
    if (c.initial_speed_estimate.size() != roster) {
      throw ConfigError("/initial_speed_estimate: length must match the roster", "/initial_speed_estimate");
    }
    for (double s : c.initial_speed_estimate) {
      if (!(s > 0.0)) throw ConfigError("/initial_speed_estimate: entries must be positive", "/initial_speed_estimate");
    }
  }
  if (c.step_size && !(*c.step_size > 0.0)) throw ConfigError("/step_size: must be positive", "/step_size");
  if (!(c.speed_drift >= 0.0 && c.speed_drift < 1.0)) throw ConfigError("/speed_drift: must lie in [0, 1)", "/speed_drift");
  if (c.matrix.file.empty()) {
    if (c.matrix.rows == 0 || c.matrix.cols == 0) throw ConfigError("/matrix: dimensions must be positive", "/matrix");
    if (c.app == App::kPowerIteration && c.matrix.rows != c.matrix.cols) {
      throw ConfigError("/matrix: power iteration needs a square matrix", "/matrix");
    }
  }
  if (c.schemes.empty()) throw ConfigError("/schemes: at least one scheme required", "/schemes");
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.schemes.size(); ++i) {
    const auto& s = c.schemes[i];
    const std::string path = "/schemes/" + std::to_string(i);
    if (s.name.empty() || s.name.find_first_of(",\"\n\r") != std::string::npos) {
      throw ConfigError(path + "/name: must be non-empty without commas, quotes or newlines", path + "/name");
    }
    if (!names.insert(s.name).second) throw ConfigError(path + "/name: duplicate scheme name", path + "/name");
    for (MachineId id : s.machines) {
      if (id >= roster) throw ConfigError(path + "/machines: machine id out of range", path + "/machines");
    }
    if (std::set<MachineId>(s.machines.begin(), s.machines.end()).size() != s.machines.size()) {
      throw ConfigError(path + "/machines: duplicate machine id", path + "/machines");
    }
    if (s.scheme == Scheme::kUncoded) {
      if (s.tolerance != 0) throw ConfigError(path + "/S: uncoded scheme has no straggler tolerance", path + "/S");
      if (!s.machines.empty() && s.machines.size() != c.recovery_threshold) {
        throw ConfigError(path + "/machines: uncoded scheme uses exactly L machines", path + "/machines");
      }
    }
  }
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t column = 0;
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1, column);
    throw ConfigError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                          e.what(),
                      "", line, column);
  }

  ExperimentConfig c;
  Fields top(doc, "");
  const std::string app = top.text("app");
  if (app == "power_iteration") {
    c.app = App::kPowerIteration;
  } else if (app == "linreg") {
    c.app = App::kLinearRegression;
  } else {
    throw ConfigError("/app: expected power_iteration or linreg", "/app");
  }

  {
    Fields m(top.get("matrix"), "/matrix");
    if (m.has("preset")) {
      const std::string preset = m.text("preset");
      const bool power = c.app == App::kPowerIteration;
      if (preset == "desk") {
        c.matrix.rows = power ? 600 : 2000;
        c.matrix.cols = power ? 600 : 50;
      } else if (preset == "full") {
        c.matrix.rows = power ? 60000 : 200000;
        c.matrix.cols = power ? 60000 : 5000;
      } else {
        throw ConfigError("/matrix/preset: expected desk or full", "/matrix/preset");
      }
    } else if (m.has("file")) {
      c.matrix.file = m.text("file");
    } else {
      c.matrix.rows = m.count("rows");
      c.matrix.cols = m.count("cols");
    }
    m.finish();
  }

  c.recovery_threshold = top.count("L");

  if (top.has("generator")) {
    Fields g(top.get("generator"), "/generator");
    const std::string kind = g.text("kind");
    if (kind == "systematic_vandermonde") {
      SystematicVandermonde vm;
      if (g.has("points")) vm.points = g.reals("points");
      c.generator = vm;
    } else if (kind == "random_gaussian") {
      c.generator = RandomGaussian{g.count("seed")};
    } else {
      throw ConfigError("/generator/kind: expected systematic_vandermonde or random_gaussian", "/generator/kind");
    }
    g.finish();
  }

  {
    Fields m(top.get("machines"), "/machines");
    const json& speeds = m.get("speeds");
    if (speeds.is_string()) {
      c.speed_source = speeds.get<std::string>();
      const auto preset = table1_preset(c.speed_source);
      if (preset.empty()) {
        throw ConfigError("/machines/speeds: unknown preset '" + c.speed_source + "'", "/machines/speeds");
      }
      c.speeds.assign(preset.begin(), preset.end());
    } else {
      c.speeds = m.reals("speeds");
    }
    if (m.has("elastic")) c.elastic = m.ids("elastic");
    if (m.has("p_available")) c.p_available = m.real("p_available");
    m.finish();
  }

  const json& schemes = top.get("schemes");
  if (!schemes.is_array()) throw ConfigError("/schemes: expected an array", "/schemes");
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const std::string path = "/schemes/" + std::to_string(i);
    Fields s(schemes[i], path);
    SchemeConfig sc;
    sc.name = s.text("name");
    sc.scheme = parse_scheme_kind(s.text("scheme"), s.path("scheme"));
    if (s.has("S")) sc.tolerance = s.count("S");
    if (s.has("straggler_policy")) sc.policy = parse_policy(s.get("straggler_policy"), s.path("straggler_policy"));
    if (s.has("machines")) sc.machines = s.ids("machines");
    s.finish();
    c.schemes.push_back(std::move(sc));
  }

  if (top.has("gamma")) c.gamma = top.real("gamma");
  if (top.has("initial_speed_estimate")) c.initial_speed_estimate = top.reals("initial_speed_estimate");
  c.iterations = top.count("iterations");
  c.seed = top.count("seed");
  if (top.has("output")) c.output = top.text("output");
  if (top.has("step_size")) c.step_size = top.real("step_size");
  if (top.has("label_noise")) c.label_noise = top.real("label_noise");
  if (top.has("speed_drift")) c.speed_drift = top.real("speed_drift");
  if (top.has("degrade")) c.degrade = top.flag("degrade");
  if (top.has("retries")) c.retries = top.count("retries");
  top.finish();

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string(), "");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["app"] = c.app == App::kPowerIteration ? "power_iteration" : "linreg";
  if (!c.matrix.file.empty()) {
    doc["matrix"] = {{"file", c.matrix.file}};
  } else {
    doc["matrix"] = {{"rows", c.matrix.rows}, {"cols", c.matrix.cols}};
  }
  doc["L"] = c.recovery_threshold;
  if (c.generator) {
    if (const auto* vm = std::get_if<SystematicVandermonde>(&*c.generator)) {
      doc["generator"] = {{"kind", "systematic_vandermonde"}};
      if (!vm->points.empty()) doc["generator"]["points"] = vm->points;
    } else {
      doc["generator"] = {{"kind", "random_gaussian"}, {"seed", std::get<RandomGaussian>(*c.generator).seed}};
    }
  }
  json machines;
  if (!c.speed_source.empty()) {
    machines["speeds"] = c.speed_source;
  } else {
    machines["speeds"] = c.speeds;
  }
  machines["elastic"] = c.elastic;
  machines["p_available"] = c.p_available;
  doc["machines"] = machines;
  doc["schemes"] = json::array();
  for (const auto& s : c.schemes) {
    json item{{"name", s.name}, {"scheme", std::string(to_string(s.scheme))}, {"S", s.tolerance},
              {"straggler_policy", policy_to_json(s.policy)}};
    if (!s.machines.empty()) item["machines"] = s.machines;
    doc["schemes"].push_back(item);
  }
  doc["gamma"] = c.gamma;
  if (!c.initial_speed_estimate.empty()) doc["initial_speed_estimate"] = c.initial_speed_estimate;
  doc["iterations"] = c.iterations;
  doc["seed"] = c.seed;
  if (!c.output.empty()) doc["output"] = c.output;
  if (c.step_size) doc["step_size"] = *c.step_size;
  doc["label_noise"] = c.label_noise;
  doc["speed_drift"] = c.speed_drift;
  doc["degrade"] = c.degrade;
  doc["retries"] = c.retries;
  return doc.dump(2) + "\n";
}

ExperimentConfig ec2_preset(App app) {
  ExperimentConfig c;
  c.app = app;
  const bool power = app == App::kPowerIteration;
  c.matrix.rows = power ? 600 : 2000;
  c.matrix.cols = power ? 600 : 50;
  c.recovery_threshold = 10;
  c.generator = RandomGaussian{1};
  c.speed_source = power ? "table1_power" : "table1_linreg";
  const auto preset = table1_preset(c.speed_source);
  c.speeds.assign(preset.begin(), preset.end());
  // 6 + 6 stable, 4 + 4 elastic.
  c.elastic = {6, 7, 8, 9, 16, 17, 18, 19};
  c.p_available = 0.5;
  const std::vector<MachineId> uncoded{0, 1, 2, 3, 4, 10, 11, 12, 13, 14};
  const std::vector<MachineId> no_straggler{0, 1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 18, 19};
  c.schemes = {
      {"uncoded", Scheme::kUncoded, 0, NoStragglers{}, uncoded},
      {"homogeneous", Scheme::kHomogeneousCyclic, 0, NoStragglers{}, no_straggler},
      {"heterogeneous", Scheme::kHeterogeneous, 0, NoStragglers{}, no_straggler},
      {"homogeneous_straggler", Scheme::kHomogeneousCyclic, 2, SlowestK{2}, {}},
      {"heterogeneous_straggler", Scheme::kHeterogeneous, 2, SlowestK{2}, {}},
  };
  c.gamma = 0.5;
  c.iterations = power ? 50 : 100;
  c.seed = 2021;
  c.output = power ? "ec2_power_trace.csv" : "ec2_linreg_trace.csv";
  return c;
}

std::uint64_t scheme_seed(std::uint64_t base_seed, const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return mix64(base_seed ^ h);
}

void write_trace_rows(std::ostream& out, const std::string& scheme, const IterateTrace& trace) {
  double cum = 0.0;
  for (const auto& record : trace.iterations) {
    for (const auto& step : record.steps) {
      cum += step.step_time;
      out << scheme << ',' << step.step << ',' << record.iteration << ',' << step.available.size() << ','
          << step.stragglers.size() << ',' << format_real(step.step_time) << ',' << format_real(cum) << ','
          << format_real(record.error_metric) << ',' << (step.decode_ok ? "true" : "false") << '\n';
    }
  }
}

namespace {

struct Dataset {
  Matrix x;
  Vector y;
  Vector reference;
  Vector b0;
  double step_size = 0.0;
};

Dataset make_dataset(const ExperimentConfig& c) {
  Dataset d;
  if (c.app == App::kPowerIteration) {
    d.x = c.matrix.file.empty() ? random_symmetric_matrix(c.matrix.rows, c.seed) : load_matrix(c.matrix.file);
    if (d.x.rows() != d.x.cols()) throw Error(ErrorCode::kShape, "power iteration needs a square matrix");
    d.reference = reference_dominant_eigenvector(d.x);
    std::mt19937_64 rng(mix64(c.seed + 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    d.b0.resize(d.x.cols());
    for (Eigen::Index i = 0; i < d.b0.size(); ++i) d.b0(i) = normal(rng);
  } else {
    if (c.matrix.file.empty()) {
      auto p = random_regression_problem(c.matrix.rows, c.matrix.cols, c.seed, c.label_noise);
      d.x = std::move(p.x);
      d.y = std::move(p.y);
    } else {
      d.x = load_matrix(c.matrix.file);
      auto p = random_regression_problem(d.x.rows(), d.x.cols(), c.seed, c.label_noise);
      d.y = d.x * p.truth;
      for (Eigen::Index i = 0; i < d.y.size(); ++i) d.y(i) += p.y(i) - p.x.row(i).dot(p.truth);
    }
    d.b0 = Vector::Zero(d.x.cols());
    d.step_size = c.step_size ? *c.step_size : default_step_size(d.x);
  }
  return d;
}

std::vector<MachineId> scheme_machines(const ExperimentConfig& c, const SchemeConfig& s) {
  if (!s.machines.empty()) return s.machines;
  std::vector<MachineId> out;
  for (MachineId id = 0; id < c.speeds.size(); ++id) {
    const bool elastic = std::find(c.elastic.begin(), c.elastic.end(), id) != c.elastic.end();
    if (s.scheme == Scheme::kUncoded) {
      if (!elastic && out.size() < c.recovery_threshold) out.push_back(id);
    } else {
      out.push_back(id);
    }
  }
  if (s.scheme == Scheme::kUncoded && out.size() != c.recovery_threshold) {
    throw Error(ErrorCode::kInfeasibleTolerance, "scheme " + s.name + ": fewer than L stable machines for uncoded storage");
  }
  return out;
}

}  // namespace

std::vector<SchemeOutcome> run_experiment(const ExperimentConfig& config, std::ostream& trace_out) {
  validate_config(config);
  const std::size_t l = config.recovery_threshold;

  // Feasibility is checked for every scheme before any work is done.
  std::vector<std::vector<MachineId>> rosters;
  for (const auto& s : config.schemes) {
    auto machines = scheme_machines(config, s);
    if (s.scheme != Scheme::kUncoded && machines.size() < l + s.tolerance) {
      throw Error(ErrorCode::kInfeasibleTolerance,
                  "scheme " + s.name + ": " + std::to_string(machines.size()) + " machines cannot give L+S=" +
                      std::to_string(l + s.tolerance));
    }
    rosters.push_back(std::move(machines));
  }

  trace_out << kTraceHeader << '\n';
  std::vector<SchemeOutcome> outcomes;
  if (config.iterations == 0) return outcomes;

  const Dataset data = make_dataset(config);

  for (std::size_t si = 0; si < config.schemes.size(); ++si) {
    const auto& s = config.schemes[si];
    const auto& ids = rosters[si];
    const std::uint64_t seed = scheme_seed(config.seed, s.name);

    std::vector<MachineProfile> profiles;
    std::vector<double> estimate;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool elastic = s.scheme != Scheme::kUncoded &&
                           std::find(config.elastic.begin(), config.elastic.end(), ids[i]) != config.elastic.end();
      profiles.push_back({i, config.speeds[ids[i]], elastic, elastic ? config.p_available : 1.0});
      estimate.push_back(config.initial_speed_estimate.empty() ? 1.0 : config.initial_speed_estimate[ids[i]]);
    }

    StragglerPolicy policy = s.policy;
    if (auto* fixed = std::get_if<FixedSet>(&policy)) {
      // Config ids are roster ids; the scheme's cluster is re-indexed.
      std::vector<MachineId> local;
      for (MachineId id : fixed->ids) {
        const auto it = std::find(ids.begin(), ids.end(), id);
        if (it != ids.end()) local.push_back(static_cast<MachineId>(it - ids.begin()));
      }
      fixed->ids = std::move(local);
    }

    GeneratorMatrix g = [&] {
      if (s.scheme == Scheme::kUncoded) return GeneratorMatrix(l, l, Matrix::Identity(l, l));
      GeneratorKind kind = config.generator.value_or(GeneratorKind{SystematicVandermonde{}});
      if (auto* vm = std::get_if<SystematicVandermonde>(&kind); vm && vm->points.empty()) {
        *vm = default_vandermonde(ids.size(), l);
      }
      return build_generator(ids.size(), l, kind);
    }();

    MasterState state{std::move(estimate), config.gamma, s.tolerance, s.scheme};
    ClusterInputs cluster{std::move(profiles), policy, seed, SpeedDrift{config.speed_drift, seed}};
    ElasticRuntime runtime(g, std::move(state), std::move(cluster), {config.degrade, config.retries});

    SchemeOutcome outcome;
    outcome.name = s.name;
    try {
      if (config.app == App::kPowerIteration) {
        const CodedStore store = encode_store(data.x, g, Orientation::kRow);
        PowerIterationOptions opts;
        opts.iterations = config.iterations;
        opts.reference = data.reference;
        auto result = power_iteration(runtime, store, data.b0, opts);
        outcome.trace = std::move(result.trace);
      } else {
        const CodedStore rows = encode_store(data.x, g, Orientation::kRow);
        const CodedStore cols = encode_store(data.x, g, Orientation::kColumn);
        RegressionOptions opts;
        opts.iterations = config.iterations;
        opts.step_size = data.step_size;
        auto result = linear_regression_gd(runtime, rows, cols, data.y, data.b0, opts);
        outcome.trace = std::move(result.trace);
      }
    } catch (const AppStepFailure& failure) {
      write_trace_rows(trace_out, s.name, failure.trace());
      throw;
    }
    write_trace_rows(trace_out, s.name, outcome.trace);
    if (!outcome.trace.iterations.empty()) {
      outcome.final_error = outcome.trace.iterations.back().error_metric;
      outcome.total_time = outcome.trace.iterations.back().cum_time;
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

std::vector<SpeedAnalysisRow> analyze_speeds(std::span<const double> speeds, std::size_t recovery_threshold,
                                             std::size_t s_min, std::size_t s_max) {
  if (recovery_threshold < 1 || speeds.size() < recovery_threshold) {
    throw Error(ErrorCode::kInvalidParameters, "analysis needs N_t >= L >= 1");
  }
  const double uncoded =
      1.0 / *std::min_element(speeds.begin(), speeds.begin() + static_cast<std::ptrdiff_t>(recovery_threshold));
  std::vector<SpeedAnalysisRow> rows;
  for (std::size_t s = s_min; s <= s_max; ++s) {
    SpeedAnalysisRow row;
    row.tolerance = s;
    row.uncoded_time = uncoded;
    row.feasible = speeds.size() >= recovery_threshold + s;
    if (row.feasible) {
      const auto sol = optimal_load_vector(speeds, recovery_threshold, s);
      row.heterogeneous_time = sol.time;
      row.threshold_index = sol.threshold_index;
      row.homogeneous_time = homogeneous_optimal_time(speeds, recovery_threshold, s);
      row.heterogeneous_over_homogeneous = row.heterogeneous_time / row.homogeneous_time;
      row.heterogeneous_over_uncoded = row.heterogeneous_time / uncoded;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_analysis(std::ostream& out, const std::vector<SpeedAnalysisRow>& rows) {
  out << "S,feasible,heterogeneous_time,k_star,homogeneous_time,uncoded_time,het_over_hom,het_over_uncoded\n";
  for (const auto& r : rows) {
    out << r.tolerance << ',' << (r.feasible ? "true" : "false") << ',';
    if (r.feasible) {
      out << format_real(r.heterogeneous_time) << ',' << r.threshold_index << ',' << format_real(r.homogeneous_time)
          << ',' << format_real(r.uncoded_time) << ',' << format_real(r.heterogeneous_over_homogeneous) << ','
          << format_real(r.heterogeneous_over_uncoded) << '\n';
    } else {
      out << ",,," << format_real(r.uncoded_time) << ",,\n";
    }
  }
}

std::vector<double> load_speeds(const std::string& preset_or_path) {
  const auto preset = table1_preset(preset_or_path);
  if (!preset.empty()) return {preset.begin(), preset.end()};
  std::ifstream in(preset_or_path);
  if (!in) throw Error(ErrorCode::kIo, "unknown speed preset or unreadable file: " + preset_or_path);
  const Matrix m = read_matrix_csv(in);
  return std::vector<double>(m.data(), m.data() + m.size());
}

bool run_selftest(std::ostream& out) {
  bool all = true;
  auto check = [&](const std::string& name, bool ok) {
    out << (ok ? "PASS " : "FAIL ") << name << '\n';
    all = all && ok;
  };
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  auto near_all = [&](const std::vector<double>& a, std::initializer_list<double> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), near);
  };

  const std::vector<double> unit(5, 1.0);
  check("homogeneous S=0 time 3/5", near(homogeneous_optimal_time(unit, 3, 0), 3.0 / 5.0));
  check("homogeneous S=1 time 4/5", near(homogeneous_optimal_time(unit, 3, 1), 4.0 / 5.0));
  check("homogeneous S=2 time 1", near(homogeneous_optimal_time(unit, 3, 2), 1.0));

  const auto cyc0 = cyclic_assignment(5, 3, 0, 5);
  const std::vector<std::vector<MachineId>> p0{{0, 1, 2}, {1, 2, 3}, {2, 3, 4}, {0, 3, 4}, {0, 1, 4}};
  bool cyc0_ok = cyc0.sets.size() == 5;
  for (std::size_t i = 0; cyc0_ok && i < 5; ++i) cyc0_ok = cyc0.sets[i].machines == p0[i];
  check("cyclic S=0 machine sets", cyc0_ok);

  const auto cyc1 = cyclic_assignment(5, 3, 1, 5);
  const std::vector<std::vector<MachineId>> p1{{0, 1, 2, 3}, {1, 2, 3, 4}, {0, 2, 3, 4}, {0, 1, 3, 4}, {0, 1, 2, 4}};
  bool cyc1_ok = cyc1.sets.size() == 5;
  for (std::size_t i = 0; cyc1_ok && i < 5; ++i) cyc1_ok = cyc1.sets[i].machines == p1[i];
  check("cyclic S=1 machine sets", cyc1_ok);

  const std::vector<double> het{1, 1, 2, 2, 3};
  const auto s0 = optimal_load_vector(het, 3, 0);
  check("heterogeneous S=0 loads [1/3,1/3,2/3,2/3,1]", near_all(s0.loads, {1.0 / 3, 1.0 / 3, 2.0 / 3, 2.0 / 3, 1.0}));
  check("heterogeneous S=0 time 1/3", near(s0.time, 1.0 / 3.0));
  const auto s1 = optimal_load_vector(het, 3, 1);
  check("heterogeneous S=1 loads [1/2,1/2,1,1,1]", near_all(s1.loads, {0.5, 0.5, 1.0, 1.0, 1.0}));
  check("heterogeneous S=1 time 1/2", near(s1.time, 0.5));
  const auto fill = fill_assignment(loads_to_row_counts(s1.loads, 2, 3, 1), 4);
  check("heterogeneous S=1 assignment F=2, P1={1,3,4,5}, P2={2,3,4,5}",
        fill.sets.size() == 2 && fill.sets[0].machines == std::vector<MachineId>{0, 2, 3, 4} &&
            fill.sets[1].machines == std::vector<MachineId>{1, 2, 3, 4} && fill.sets[0].rows.size() == 1 &&
            fill.sets[1].rows.size() == 1);
  const auto s2 = optimal_load_vector(het, 3, 2);
  check("heterogeneous S=2 time 1", near(s2.time, 1.0));
  return all;
}

}  // namespace csec
