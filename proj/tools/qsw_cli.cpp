// qsw: command-line front end.
//
//   qsw validate  config.json
//   qsw exact     config.json [--output-dir DIR]
//   qsw sample    config.json [--output-dir DIR] [--threads N]
//   qsw enumerate config.json [--output-dir DIR]
//   qsw ct-reduce config.json [--output-dir DIR]
//
// Exit status: 0 success, 2 invalid input, 1 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "qsw/qsw.hpp"

namespace fs = std::filesystem;

namespace {

using qsw::Json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;

/// Input problem that maps to exit status 2.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  fs::path base_dir;
  Json raw;
  fs::path output_dir = ".";

  bool has(const char* key) const { return raw.contains(key); }

  /// A value that is either an inline object or a path to a JSON file.
  Json document(const char* key) const {
    if (!raw.contains(key)) throw InvalidInput(std::string("config is missing \"") + key + "\"");
    const Json& v = raw.at(key);
    if (v.is_string()) return qsw::read_json_file((base_dir / v.get<std::string>()).string());
    return v;
  }

  template <typename T>
  T get(const char* key) const {
    if (!raw.contains(key)) throw InvalidInput(std::string("config is missing \"") + key + "\"");
    try {
      return raw.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw InvalidInput(std::string("config field \"") + key + "\": " + e.what());
    }
  }

  template <typename T>
  T get_or(const char* key, T fallback) const {
    return raw.contains(key) ? get<T>(key) : fallback;
  }
};

RunConfig load_config(const std::string& path, const std::optional<std::string>& out_override) {
  RunConfig cfg;
  cfg.raw = qsw::read_json_file(path);
  if (!cfg.raw.is_object()) throw InvalidInput("config must be a JSON object");
  cfg.base_dir = fs::path(path).parent_path();
  if (out_override) {
    cfg.output_dir = *out_override;
  } else if (cfg.raw.contains("output_dir")) {
    cfg.output_dir = cfg.base_dir / cfg.raw.at("output_dir").get<std::string>();
  }
  return cfg;
}

qsw::QswGraph load_graph(const RunConfig& cfg) {
  if (cfg.has("lindblad")) throw InvalidInput("this command takes a \"graph\", not a \"lindblad\" spec");
  return qsw::graph_from_json(cfg.document("graph"));
}

/// {"vertex": k} | {"amplitudes": {"re": [...], "im": [...]}} | {"density_matrix": path-or-object}
qsw::DensityMatrix load_initial_state(const RunConfig& cfg, Eigen::Index n) {
  const Json init = cfg.has("initial_state") ? cfg.raw.at("initial_state") : Json{{"vertex", 1}};
  if (init.contains("vertex")) {
    const auto v = init.at("vertex").get<long long>();
    if (v < 1 || v > n) throw InvalidInput("initial vertex " + std::to_string(v) + " outside 1.." + std::to_string(n));
    return qsw::DensityMatrix::basis(n, static_cast<Eigen::Index>(v - 1));
  }
  if (init.contains("amplitudes")) {
    const Json& a = init.at("amplitudes");
    const auto re = a.at("re").get<std::vector<double>>();
    const auto im = a.contains("im") ? a.at("im").get<std::vector<double>>() : std::vector<double>(re.size(), 0.0);
    if (static_cast<Eigen::Index>(re.size()) != n || im.size() != re.size()) {
      throw InvalidInput("initial amplitudes must have " + std::to_string(n) + " entries");
    }
    qsw::StateVector psi(n);
    for (Eigen::Index k = 0; k < n; ++k) psi(k) = qsw::Complex(re[static_cast<std::size_t>(k)], im[static_cast<std::size_t>(k)]);
    if (std::abs(psi.squaredNorm() - 1.0) > qsw::kStructuralTol) throw InvalidInput("initial amplitudes are not normalized");
    return qsw::DensityMatrix::pure(psi);
  }
  if (init.contains("density_matrix")) {
    const Json& d = init.at("density_matrix");
    const auto rho = qsw::density_from_json(d.is_string() ? qsw::read_json_file((cfg.base_dir / d.get<std::string>()).string()) : d);
    if (rho.dim() != n) throw InvalidInput("initial density matrix dimension does not match the graph");
    return rho;
  }
  throw InvalidInput("initial_state needs one of \"vertex\", \"amplitudes\", \"density_matrix\"");
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

double positive_dt(const RunConfig& cfg) {
  const auto dt = cfg.get<double>("dt");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  return dt;
}

int cmd_validate(const RunConfig& cfg) {
  if (cfg.has("graph") == cfg.has("lindblad")) {
    throw InvalidInput("config must contain exactly one of \"graph\" and \"lindblad\"");
  }
  if (cfg.has("graph")) {
    const auto report = qsw::validate(qsw::graph_from_json(cfg.document("graph")));
    if (report.ok()) {
      std::cout << "graph OK\n";
      return kExitOk;
    }
    std::cout << "graph invalid:\n" << report.to_string();
    return kExitInvalid;
  }
  const qsw::LindbladSpec spec = qsw::lindblad_from_json(cfg.document("lindblad"));
  const auto problems = qsw::spec_violations(spec);
  if (!problems.empty()) {
    std::cout << "Lindblad spec invalid:\n";
    for (const auto& p : problems) std::cout << p << "\n";
    return kExitInvalid;
  }
  const auto rate = qsw::uniform_rate(spec);
  if (!rate.ok()) {
    std::cout << "Lindblad spec cannot be reduced: " << rate.message() << "\n";
    return kExitInvalid;
  }
  std::cout << "Lindblad spec OK, " << rate.message() << "\n";
  return kExitOk;
}

int cmd_exact(const RunConfig& cfg) {
  const qsw::QswGraph g = load_graph(cfg);
  const auto report = qsw::validate(g);
  if (!report.ok()) throw InvalidInput("graph invalid:\n" + report.to_string());
  const auto rho0 = load_initial_state(cfg, g.n_vertices());
  const auto states = qsw::iterate(qsw::build_step_channel(g, positive_dt(cfg)), rho0, cfg.get<std::size_t>("steps"));
  write_file(cfg.output_dir / "populations.csv", qsw::populations_csv(states));
  write_file(cfg.output_dir / "final_state.json", dump(qsw::density_to_json(states.back())));
  std::cout << "wrote " << states.size() << " steps to " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, unsigned threads) {
  const qsw::QswGraph g = load_graph(cfg);
  const auto report = qsw::validate(g);
  if (!report.ok()) throw InvalidInput("graph invalid:\n" + report.to_string());
  const auto rho0 = load_initial_state(cfg, g.n_vertices());

  qsw::EnsembleConfig ec;
  ec.n_trajectories = cfg.get<std::size_t>("trajectories");
  ec.n_steps = cfg.get<std::size_t>("steps");
  ec.dt = positive_dt(cfg);
  ec.master_seed = cfg.get<std::uint64_t>("seed");
  if (ec.n_trajectories < 1) throw InvalidInput("trajectories must be >= 1");

  const auto result = qsw::run_ensemble(g, rho0, ec, threads);
  const auto exact = qsw::iterate(qsw::build_step_channel(g, ec.dt), rho0, ec.n_steps);
  const auto conv = qsw::convergence_report(result, exact);
  write_file(cfg.output_dir / "sample_populations.csv", qsw::populations_csv(result));
  write_file(cfg.output_dir / "convergence_report.json", dump(qsw::convergence_to_json(conv)));
  std::cout << "max trace distance to exact channel: " << qsw::format_double(conv.max_trace_distance) << "\n";
  return kExitOk;
}

int cmd_enumerate(const RunConfig& cfg) {
  const qsw::QswGraph g = load_graph(cfg);
  const auto report = qsw::validate(g);
  if (!report.ok()) throw InvalidInput("graph invalid:\n" + report.to_string());
  const auto rho0 = load_initial_state(cfg, g.n_vertices());
  const double dt = positive_dt(cfg);
  const auto steps = cfg.get_or<std::size_t>("steps", 1);

  const qsw::KrausChannel enumerated = qsw::enumerate_step_channel(g, dt);
  const auto exact = qsw::iterate(qsw::build_step_channel(g, dt), rho0, steps);
  std::vector<double> per_step{0.0};
  std::vector<double> ancilla{0.0};
  qsw::DensityMatrix state = qsw::embed(rho0);
  for (std::size_t k = 1; k <= steps; ++k) {
    state = qsw::apply(enumerated, state);
    per_step.push_back(qsw::trace_distance(qsw::vertex_block(state.matrix()), exact[k].matrix()));
    ancilla.push_back(qsw::max_ancilla_entry(state.matrix()));
  }
  const Json out = {{"max_trace_distance", *std::max_element(per_step.begin(), per_step.end())},
                    {"per_step", per_step},
                    {"max_ancilla_entry", *std::max_element(ancilla.begin(), ancilla.end())},
                    {"per_step_ancilla", ancilla},
                    {"operators", enumerated.size()},
                    {"completeness_defect", qsw::completeness_defect(enumerated)},
                    {"seed", nullptr},
                    {"trajectories", 0}};
  write_file(cfg.output_dir / "enumerate_report.json", dump(out));
  std::cout << "enumerated protocol vs channel: max trace distance "
            << qsw::format_double(out.at("max_trace_distance").get<double>()) << "\n";
  return kExitOk;
}

int cmd_ct_reduce(const RunConfig& cfg) {
  if (cfg.has("graph")) throw InvalidInput("ct-reduce takes a \"lindblad\" spec, not a \"graph\"");
  const qsw::LindbladSpec spec = qsw::lindblad_from_json(cfg.document("lindblad"));
  const auto problems = qsw::spec_violations(spec);
  if (!problems.empty()) {
    std::string msg = "Lindblad spec invalid:";
    for (const auto& p : problems) msg += "\n" + p;
    throw InvalidInput(msg);
  }
  const auto rate = qsw::uniform_rate(spec);
  if (!rate.ok()) throw InvalidInput(rate.message());

  const auto red = qsw::reduce_to_discrete(spec);
  const auto rho0 = load_initial_state(cfg, spec.n_vertices());
  const auto scales = cfg.get_or<std::vector<double>>("rate_scales", {1.0, 2.0, 4.0, 8.0});
  const auto table = qsw::reduction_error_table(spec, rho0, scales);

  Json graph = qsw::graph_to_json(red.graph);
  graph["dt"] = red.dt;
  write_file(cfg.output_dir / "reduced_graph.json", dump(graph));

  std::string csv = "scale,dt,trace_distance\n";
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    csv += qsw::format_double(r.scale) + "," + qsw::format_double(r.dt) + "," + qsw::format_double(r.trace_distance) + "\n";
    rows.push_back({{"scale", r.scale}, {"dt", r.dt}, {"trace_distance", r.trace_distance}});
  }
  write_file(cfg.output_dir / "error_table.csv", csv);
  write_file(cfg.output_dir / "error_table.json",
             dump({{"rows", rows}, {"loglog_slope", scales.size() >= 2 ? Json(table.loglog_slope_vs_dt) : Json(nullptr)}}));
  std::cout << "dt = " << qsw::format_double(red.dt) << ", alpha = " << qsw::format_double(red.graph.alpha()) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-time quantum stochastic walk simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output_dir;
  unsigned threads = 1;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    return sub;
  };
  CLI::App* validate = add("validate", "check a graph or Lindblad spec");
  CLI::App* exact = add("exact", "iterate the exact Kraus channel");
  CLI::App* sample = add("sample", "average protocol trajectories and compare with the exact channel");
  CLI::App* enumerate = add("enumerate", "compare the enumerated protocol channel with the exact channel");
  CLI::App* ct_reduce = add("ct-reduce", "reduce a continuous-time walk to a discrete-time walk");
  for (CLI::App* sub : {exact, sample, enumerate, ct_reduce}) {
    sub->add_option("-o,--output-dir", output_dir, "output directory (overrides the config)");
  }
  sample->add_option("-j,--threads", threads, "worker threads; results do not depend on it")
      ->check(CLI::Range(1u, 1024u));

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = load_config(config_path, output_dir);
    if (validate->parsed()) return cmd_validate(cfg);
    if (exact->parsed()) return cmd_exact(cfg);
    if (sample->parsed()) return cmd_sample(cfg, threads);
    if (enumerate->parsed()) return cmd_enumerate(cfg);
    if (ct_reduce->parsed()) return cmd_ct_reduce(cfg);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const qsw::QswError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
