#include "nhdqpt/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace nhdqpt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError("missing key: " + qualified(key));
    return *v;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    if (!v->is_number()) throw ConfigError(qualified(key) + ": expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(qualified(key) + ": expected a finite number");
    return x;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    if (!v->is_number_integer()) throw ConfigError(qualified(key) + ": expected an integer");
    const auto x = v->get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
      throw ConfigError(qualified(key) + ": integer out of range");
    return static_cast<int>(x);
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fallback ? find(key) : &require(key);
    if (!v) return *fallback;
    if (!v->is_string()) throw ConfigError(qualified(key) + ": expected a string");
    return v->get<std::string>();
  }

  // A real number or a [re, im] pair.
  cplx complex(const std::string& key, cplx fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number()) return v->get<double>();
    if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number())
      return {(*v)[0].get<double>(), (*v)[1].get<double>()};
    throw ConfigError(qualified(key) + ": expected a number or [re, im]");
  }

  std::optional<Section> child(const std::string& key, bool required) {
    const json* v = required ? &require(key) : find(key);
    if (!v) return std::nullopt;
    return Section(*v, qualified(key));
  }

  void reject(const std::string& key, const std::string& why) {
    if (node_.contains(key)) throw ConfigError(qualified(key) + ": " + why);
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key: " + qualified(item.key()));
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E>
E parse_enum(const std::string& value, const std::string& key,
             const std::vector<std::pair<const char*, E>>& table) {
  for (const auto& [name, e] : table)
    if (value == name) return e;
  std::string options;
  for (const auto& [name, e] : table) options += (options.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(key + ": unknown value '" + value + "' (expected one of " + options + ")");
}

template <typename E>
const char* enum_name(E e, const std::vector<std::pair<const char*, E>>& table) {
  for (const auto& [name, value] : table)
    if (value == e) return name;
  return "?";
}

const std::vector<std::pair<const char*, StateKind>> kStateKinds = {
    {"pure_ground", StateKind::PureGround},
    {"pure_excited", StateKind::PureExcited},
    {"gibbs", StateKind::Gibbs},
    {"infinite_temperature", StateKind::InfiniteT},
    {"custom", StateKind::Custom},
};

const std::vector<std::pair<const char*, Formulation>> kFormulations = {
    {"biorthogonal", Formulation::Biorthogonal},
    {"non_biorthogonal", Formulation::NonBiorthogonal},
};

const std::vector<std::pair<const char*, Normalization>> kNormalizations = {
    {"none", Normalization::None},
    {"self_norm", Normalization::SelfNorm},
    {"biortho_norm", Normalization::BiorthoNorm},
};

json complex_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

std::string k_text(double k) { return format_double(k); }

}  // namespace

QuenchScenario ScenarioConfig::build() const {
  auto models = [&]() -> std::pair<TwoBandHamiltonian, TwoBandHamiltonian> {
    if (model.family == "ssh")
      return {make_ssh(model.t1, model.t2, model.gamma_pre),
              make_ssh(model.t1, model.t2, model.gamma_post)};
    // The onsite shift -i gamma is a scalar; it cancels in normalized echoes.
    return {lindblad_effective_bloch(model.t1, model.t2, model.gamma_pre, model.phi).traceless,
            lindblad_effective_bloch(model.t1, model.t2, model.gamma_post, model.phi).traceless};
  };
  auto [h0, h1] = models();

  InitialStateSpec spec;
  switch (state.kind) {
    case StateKind::PureGround: spec = InitialStateSpec::pure_ground(state.formulation); break;
    case StateKind::PureExcited: spec = InitialStateSpec::pure_excited(state.formulation); break;
    case StateKind::Gibbs: spec = InitialStateSpec::gibbs(state.beta, state.formulation); break;
    case StateKind::InfiniteT: spec = InitialStateSpec::infinite_temperature(state.formulation); break;
    case StateKind::Custom: {
      const ParticipationProbs p{state.p_plus, state.p_minus};
      spec = InitialStateSpec::custom_probs([p](double) { return p; }, state.formulation);
      break;
    }
  }
  QuenchScenario scenario{std::move(h0), std::move(h1), std::move(spec), k_grid, t_grid};
  scenario.validate();
  return scenario;
}

ScenarioConfig parse_config(const json& doc) {
  ScenarioConfig c;
  Section root(doc, "");
  const int version = root.integer("schema_version", kSchemaVersion);
  if (version != kSchemaVersion)
    throw ConfigError("schema_version: unsupported value " + std::to_string(version) +
                      " (expected " + std::to_string(kSchemaVersion) + ")");

  {
    Section m = *root.child("model", true);
    c.model.family = m.string("family");
    if (c.model.family != "ssh" && c.model.family != "lindblad_ssh")
      throw ConfigError("model.family: unknown value '" + c.model.family +
                        "' (expected one of ssh, lindblad_ssh)");
    c.model.t1 = m.number("t1");
    c.model.t2 = m.number("t2");
    if (auto pre = m.child("prequench", false)) {
      c.model.gamma_pre = pre->number("gamma", 0.0);
      pre->finish();
    }
    if (auto post = m.child("postquench", false)) {
      c.model.gamma_post = post->number("gamma", 0.0);
      post->finish();
    }
    if (c.model.family == "lindblad_ssh") {
      c.model.phi = m.number("phi", kPi / 2);
      if (c.model.gamma_pre < 0 || c.model.gamma_post < 0)
        throw ConfigError("model: lindblad_ssh requires gamma >= 0");
    } else {
      m.reject("phi", "only valid for family lindblad_ssh");
    }
    m.finish();
  }

  if (auto s = root.child("state", false)) {
    c.state.kind = parse_enum(s->string("kind", "pure_ground"), "state.kind", kStateKinds);
    c.state.formulation =
        parse_enum(s->string("formulation", "non_biorthogonal"), "state.formulation", kFormulations);
    if (c.state.kind == StateKind::Gibbs) {
      c.state.beta = s->number("beta");
      if (!(c.state.beta > 0)) throw ConfigError("state.beta: must be > 0");
    } else {
      s->reject("beta", "only valid for kind gibbs");
    }
    if (c.state.kind == StateKind::Custom) {
      c.state.p_plus = s->complex("p_plus", 0.0);
      c.state.p_minus = s->complex("p_minus", 1.0);
    } else {
      s->reject("p_plus", "only valid for kind custom");
      s->reject("p_minus", "only valid for kind custom");
    }
    s->finish();
  }

  if (auto g = root.child("grids", false)) {
    c.k_grid.count = g->integer("k_points", c.k_grid.count);
    c.t_grid.count = g->integer("t_points", c.t_grid.count);
    c.t_grid.t_max = g->number("t_max", c.t_grid.t_max);
    g->finish();
  }

  if (auto a = root.child("analysis", false)) {
    c.analysis.normalization =
        parse_enum(a->string("normalization", "self_norm"), "analysis.normalization", kNormalizations);
    c.analysis.n_max = a->integer("n_max", c.analysis.n_max);
    c.analysis.cusp_threshold = a->number("cusp_threshold", c.analysis.cusp_threshold);
    c.analysis.branch = a->integer("branch", c.analysis.branch);
    if (c.analysis.n_max < 0) throw ConfigError("analysis.n_max: must be >= 0");
    if (!(c.analysis.cusp_threshold > 0)) throw ConfigError("analysis.cusp_threshold: must be > 0");
    if (c.analysis.branch < 0) throw ConfigError("analysis.branch: must be >= 0");
    a->finish();
  }

  if (auto o = root.child("output", false)) {
    c.output.directory = o->string("directory", c.output.directory);
    if (const json* formats = o->find("formats")) {
      if (!formats->is_array()) throw ConfigError("output.formats: expected an array");
      c.output.csv = c.output.json = false;
      for (const json& f : *formats) {
        if (f == "csv") c.output.csv = true;
        else if (f == "json") c.output.json = true;
        else throw ConfigError("output.formats: unknown format " + f.dump());
      }
    }
    o->finish();
  }
  root.finish();

  try {
    c.build();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ScenarioConfig& c) {
  json model = {{"family", c.model.family},
                {"t1", c.model.t1},
                {"t2", c.model.t2},
                {"prequench", {{"gamma", c.model.gamma_pre}}},
                {"postquench", {{"gamma", c.model.gamma_post}}}};
  if (c.model.family == "lindblad_ssh") model["phi"] = c.model.phi;

  json state = {{"kind", enum_name(c.state.kind, kStateKinds)},
                {"formulation", enum_name(c.state.formulation, kFormulations)}};
  if (c.state.kind == StateKind::Gibbs) state["beta"] = c.state.beta;
  if (c.state.kind == StateKind::Custom) {
    state["p_plus"] = complex_json(c.state.p_plus);
    state["p_minus"] = complex_json(c.state.p_minus);
  }

  json formats = json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.json) formats.push_back("json");

  return {{"schema_version", kSchemaVersion},
          {"model", model},
          {"state", state},
          {"grids",
           {{"k_points", c.k_grid.count}, {"t_points", c.t_grid.count}, {"t_max", c.t_grid.t_max}}},
          {"analysis",
           {{"normalization", enum_name(c.analysis.normalization, kNormalizations)},
            {"n_max", c.analysis.n_max},
            {"cusp_threshold", c.analysis.cusp_threshold},
            {"branch", c.analysis.branch}}},
          {"output", {{"directory", c.output.directory}, {"formats", formats}}}};
}

std::vector<GridIssue> scan_grid(const QuenchScenario& scenario) {
  const int count = scenario.k_grid.count;
  std::vector<ComplexVec3> h0(static_cast<std::size_t>(count));
  std::vector<ComplexVec3> h1(h0.size());
  double scale0 = 0.0;
  double scale1 = 0.0;
  for (int i = 0; i < count; ++i) {
    const double k = scenario.k_grid.at(i);
    h0[i] = scenario.h0_model(k);
    h1[i] = scenario.h1_model(k);
    if (h0[i].is_finite()) scale0 = std::max(scale0, max_norm(h0[i]));
    if (h1[i].is_finite()) scale1 = std::max(scale1, max_norm(h1[i]));
  }

  std::vector<GridIssue> issues;
  for (int i = 0; i < count; ++i) {
    const double k = scenario.k_grid.at(i);
    if (!h0[i].is_finite() || !h1[i].is_finite()) {
      issues.push_back({k, "non-finite Hamiltonian coefficients"});
      continue;
    }
    if (eigensystem_2x2(h0[i]).near_ep || discriminant_vanishes(h0[i], scale0)) {
      issues.push_back({k, h0[i].max_imag() == 0.0 ? "prequench gap closes"
                                                   : "exceptional point in prequench model"});
    }
    if (discriminant_vanishes(h1[i], scale1)) {
      issues.push_back({k, h1[i].max_imag() == 0.0 ? "postquench gap closes"
                                                   : "exceptional point in postquench model"});
    }
  }
  return issues;
}

RunArtifacts run_scenario(const ScenarioConfig& config, int threads) {
  const QuenchScenario scenario = config.build();
  const auto issues = scan_grid(scenario);
  if (!issues.empty()) {
    std::string msg = issues.front().what + " at k = " + k_text(issues.front().k);
    if (issues.size() > 1) msg += " (" + std::to_string(issues.size() - 1) + " more)";
    throw NumericalError(msg);
  }

  RunArtifacts a;
  const int n_max = config.analysis.n_max;
  a.series = echo_series(scenario, config.analysis.normalization, threads);
  a.criticality = critical_points(scenario, n_max, threads);
  a.cusps = detect_cusps(a.series.rate, scenario.t_grid, config.analysis.cusp_threshold);

  const double window = 2.0 * scenario.t_grid.step() + 1e-12;
  for (const CriticalPoint& p : a.criticality.points) {
    for (const CriticalTime& ct : p.times) {
      MatchedCriticalTime m{ct.n, p.k, ct.t, std::nullopt};
      for (const Cusp& c : a.cusps)
        if (std::abs(c.t - ct.t) <= window && (!m.cusp_t || std::abs(c.t - ct.t) < std::abs(*m.cusp_t - ct.t)))
          m.cusp_t = c.t;
      a.critical_times.push_back(m);
    }
  }
  std::sort(a.critical_times.begin(), a.critical_times.end(),
            [](const MatchedCriticalTime& x, const MatchedCriticalTime& y) {
              return x.n != y.n ? x.n < y.n : x.k < y.k;
            });

  const Formulation f = scenario.state.formulation;
  for (int i = 0; i < scenario.k_grid.count; ++i) {
    const double k = scenario.k_grid.at(i);
    try {
      const ComplexVec3 h0 = scenario.h0_model(k);
      const ModePair mode = make_mode(h0, scenario.h1_model(k));
      const cplx coupling = state_coupling(mode, participation(scenario.state, k, h0), f);
      for (const FisherZero& z : fisher_zeros(mode.e1, coupling, f, n_max, k))
        a.fisher_zeros.push_back(z);
    } catch (const ExcludedPoint&) {
      ++a.pole_k;
    }
  }
  std::stable_sort(a.fisher_zeros.begin(), a.fisher_zeros.end(),
                   [](const FisherZero& x, const FisherZero& y) { return x.n < y.n; });

  for (int n = 0; n <= n_max; ++n) {
    const auto flow = orthogonality_flow(scenario, n, threads);
    a.orthogonality.insert(a.orthogonality.end(), flow.begin(), flow.end());
  }

  a.windings = winding_report(scenario, config.analysis.branch, threads);
  if (a.windings.chiral) a.vector_flow = chiral_quench_flow(scenario.h0_model, scenario.h1_model, scenario.k_grid);
  return a;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : out_(path), path_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }
  void header(std::initializer_list<const char*> names) {
    bool first = true;
    for (const char* n : names) {
      out_ << (first ? "" : ",") << n;
      first = false;
    }
    out_ << '\n';
  }
  template <typename... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing " + path_.string());
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }

  std::ofstream out_;
  fs::path path_;
};

}  // namespace

json summary_json(const ScenarioConfig& config, const RunArtifacts& a) {
  const WindingReport& w = a.windings;
  json critical = json::array();
  for (const auto& c : a.critical_times)
    critical.push_back({{"n", c.n}, {"k_c", c.k}, {"t_c", c.t}, {"cusp_t", optional_number(c.cusp_t)}});

  json cusps = json::array();
  const double window = 2.0 * config.t_grid.step() + 1e-12;
  for (const Cusp& c : a.cusps) {
    const bool matched = std::any_of(a.critical_times.begin(), a.critical_times.end(),
                                     [&](const MatchedCriticalTime& m) { return std::abs(m.t - c.t) <= window; });
    cusps.push_back({{"t", c.t}, {"jump", c.jump}, {"index", c.index}, {"critical", matched}});
  }

  json grazing = json::array();
  for (const auto& g : a.criticality.grazing) grazing.push_back({{"n", g.n}, {"k", g.k}, {"dot", g.dot}});

  return {
      {"tool", "dqpt-cli"},
      {"version", kToolVersion},
      {"schema_version", kSchemaVersion},
      {"nu0", a.windings.chiral ? json(w.chiral->nu0) : json(nullptr)},
      {"nu1", a.windings.chiral ? json(w.chiral->nu1) : json(nullptr)},
      {"delta_nu", a.windings.chiral ? json(w.chiral->delta_nu) : json(nullptr)},
      {"w_s", optional_number(w.w_s)},
      {"w_h", optional_number(w.w_h)},
      {"delta_w", optional_number(w.delta_w)},
      {"sufficient_dqpt", w.sufficient_dqpt},
      {"chiral_error", w.chiral_error.empty() ? json(nullptr) : json(w.chiral_error)},
      {"orthogonality_error", w.orthogonality_error.empty() ? json(nullptr) : json(w.orthogonality_error)},
      {"critical_points", critical},
      {"cusps", cusps},
      {"grazing_zeros", grazing},
      {"excluded",
       {{"k_points", a.series.excluded_k},
        {"cells", a.series.excluded_cells},
        {"clamped_echoes", a.series.clamped},
        {"pole_k_points", a.pole_k},
        {"criticality_k_points", a.criticality.excluded_k}}},
      {"config", to_json(config)},
  };
}

std::vector<fs::path> write_artifacts(const ScenarioConfig& config, const RunArtifacts& a,
                                      const fs::path& dir) {
  std::vector<fs::path> written;
  const bool created_dir = !fs::exists(dir);
  try {
    fs::create_directories(dir);
    auto open = [&](const char* name) {
      written.push_back(dir / name);
      return CsvWriter(written.back());
    };

    if (config.output.csv) {
      {
        CsvWriter csv = open("rate_function.csv");
        csv.header({"t", "lambda"});
        for (std::size_t j = 0; j < a.series.t.size(); ++j) csv.row(a.series.t[j], a.series.rate[j]);
        csv.close();
      }
      {
        CsvWriter csv = open("fisher_zeros.csv");
        csv.header({"n", "k", "re_z", "im_z"});
        for (const auto& z : a.fisher_zeros) csv.row(z.n, z.k, z.z.real(), z.z.imag());
        csv.close();
      }
      {
        CsvWriter csv = open("critical_points.csv");
        csv.header({"n", "k_c", "t_c"});
        for (const auto& c : a.critical_times) csv.row(c.n, c.k, c.t);
        csv.close();
      }
      {
        CsvWriter csv = open("vector_flow.csv");
        csv.header({"k", "re_pre", "im_pre", "re_post", "im_post", "dot"});
        if (a.vector_flow)
          for (const auto& s : a.vector_flow->samples)
            csv.row(s.k, s.pre[0], s.pre[1], s.post[0], s.post[1], s.dot);
        csv.close();
      }
      {
        CsvWriter csv = open("orthogonality_flow.csv");
        csv.header({"n", "k", "vs_x", "vs_y", "vh_x", "vh_y", "dot"});
        for (const auto& o : a.orthogonality)
          if (!o.excluded) csv.row(o.n, o.k, o.vs[0], o.vs[1], o.vh[0], o.vh[1], o.dot);
        csv.close();
      }
    }
    if (config.output.json) {
      written.push_back(dir / "summary.json");
      std::ofstream out(written.back());
      out << summary_json(config, a).dump(2) << '\n';
      out.close();
      if (!out) throw std::runtime_error("failed writing " + written.back().string());
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created_dir) fs::remove(dir, ec);  // only succeeds when empty
    throw;
  }
  return written;
}

int run_command(const fs::path& config_path, const std::optional<fs::path>& out_dir, int threads,
                std::ostream& out, std::ostream& err) {
  try {
    ScenarioConfig config = load_config(config_path);
    if (out_dir) config.output.directory = out_dir->string();
    const RunArtifacts artifacts = run_scenario(config, threads);
    const auto files = write_artifacts(config, artifacts, config.output.directory);
    out << "wrote " << files.size() << " files to " << config.output.directory << '\n';
    if (artifacts.windings.chiral)
      out << "nu0 = " << format_double(artifacts.windings.chiral->nu0)
          << ", nu1 = " << format_double(artifacts.windings.chiral->nu1)
          << ", delta_nu = " << format_double(artifacts.windings.chiral->delta_nu) << '\n';
    out << artifacts.critical_times.size() << " critical times, " << artifacts.cusps.size()
        << " cusps\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int validate_command(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const ScenarioConfig config = load_config(config_path);
    const QuenchScenario scenario = config.build();
    const auto issues = scan_grid(scenario);
    std::set<double> bad_k;
    for (const auto& issue : issues) {
      out << "warning: " << issue.what << " at k = " << k_text(issue.k) << '\n';
      bad_k.insert(issue.k);
    }
    if (issues.empty() && chiral_precondition_failure(scenario).empty()) {
      try {
        chiral_quench_flow(scenario.h0_model, scenario.h1_model, scenario.k_grid);
      } catch (const WindingError& e) {
        out << "warning: winding flows unusable on this grid: " << e.what() << '\n';
      }
    }
    out << "ok, " << bad_k.size() << " excluded k points\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nhdqpt
