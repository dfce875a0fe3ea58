#pragma once

// JSON and CSV formats. All vertex labels in files are 1-based.
//
//   graph:    {"n_vertices", "alpha", "coherent": [{"from","to","re","im"}],
//              "incoherent": [{"from","to","kappa"}], "allow_complex_couplings"?}
//   density:  {"dim", "re": [[...]], "im": [[...]]}
//   lindblad: {"n_vertices", "omega", "hamiltonian": {"re","im"}, "rates": [{"from","to","gamma"}]}

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsw/ctreduce.hpp"
#include "qsw/ensemble.hpp"
#include "qsw/graph.hpp"

namespace qsw {

using Json = nlohmann::json;

class FormatError : public QswError {
 public:
  using QswError::QswError;
};

namespace detail {

inline Eigen::Index vertex_label(const Json& j, const char* key, Eigen::Index n) {
  if (!j.contains(key)) throw FormatError(std::string("edge is missing \"") + key + "\"");
  const auto v = j.at(key).get<long long>();
  if (v < 1 || v > n) {
    throw FormatError(std::string("edge \"") + key + "\" = " + std::to_string(v) + " outside 1.." + std::to_string(n));
  }
  return static_cast<Eigen::Index>(v - 1);
}

inline Json real_rows(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RealMatrix real_rows(const Json& j, Eigen::Index n, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw FormatError(std::string(what) + " must have " + std::to_string(n) + " rows");
  }
  RealMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw FormatError(std::string(what) + " row " + std::to_string(r + 1) + " must have " + std::to_string(n) + " entries");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline ComplexMatrix complex_matrix(const Json& j, Eigen::Index n, const char* what) {
  const RealMatrix re = real_rows(j.at("re"), n, what);
  const RealMatrix im = j.contains("im") ? real_rows(j.at("im"), n, what) : RealMatrix::Zero(n, n);
  ComplexMatrix m(n, n);
  m.real() = re;
  m.imag() = im;
  return m;
}

inline Eigen::Index positive_count(const Json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing \"") + key + "\"");
  const auto n = j.at(key).get<long long>();
  if (n < 1) throw FormatError(std::string("\"") + key + "\" must be >= 1");
  return static_cast<Eigen::Index>(n);
}

}  // namespace detail

inline QswGraph graph_from_json(const Json& j) {
  try {
    const Eigen::Index n = detail::positive_count(j, "n_vertices");
    GraphBuilder b(n, j.at("alpha").get<double>());
    b.allow_complex_couplings(j.value("allow_complex_couplings", false));
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
    ComplexMatrix h = ComplexMatrix::Zero(n, n);
    for (const Json& e : j.value("coherent", Json::array())) {
      const Eigen::Index from = detail::vertex_label(e, "from", n);
      const Eigen::Index to = detail::vertex_label(e, "to", n);
      const Complex g(e.value("re", 0.0), e.value("im", 0.0));
      // A listed partner must agree with the mirrored value.
      if (seen[static_cast<std::size_t>(to)][static_cast<std::size_t>(from)] && std::abs(h(to, from) - g) > kStructuralTol) {
        throw FormatError("coherent edge " + std::to_string(from + 1) + "->" + std::to_string(to + 1) +
                          " conflicts with its Hermitian partner");
      }
      h(to, from) = g;
      h(from, to) = std::conj(g);
      seen[static_cast<std::size_t>(to)][static_cast<std::size_t>(from)] = true;
      seen[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] = true;
      b.coupling(from, to, g);
    }
    for (const Json& e : j.value("incoherent", Json::array())) {
      b.rate(detail::vertex_label(e, "from", n), detail::vertex_label(e, "to", n), e.at("kappa").get<double>());
    }
    return b.build();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what());
  }
}

inline Json graph_to_json(const QswGraph& g) {
  const Eigen::Index n = g.n_vertices();
  Json coherent = Json::array();
  for (Eigen::Index from = 0; from < n; ++from) {
    for (Eigen::Index to = from; to < n; ++to) {
      const Complex c = g.couplings()(to, from);
      if (c == Complex(0.0, 0.0)) continue;
      coherent.push_back({{"from", from + 1}, {"to", to + 1}, {"re", c.real()}, {"im", c.imag()}});
    }
  }
  Json incoherent = Json::array();
  for (Eigen::Index from = 0; from < n; ++from) {
    for (Eigen::Index to = 0; to < n; ++to) {
      if (g.kappa(from, to) == 0.0) continue;
      incoherent.push_back({{"from", from + 1}, {"to", to + 1}, {"kappa", g.kappa(from, to)}});
    }
  }
  Json j = {{"n_vertices", n}, {"alpha", g.alpha()}, {"coherent", coherent}, {"incoherent", incoherent}};
  if (g.allows_complex_couplings()) j["allow_complex_couplings"] = true;
  return j;
}

inline Json density_to_json(const DensityMatrix& rho) {
  return {{"dim", rho.dim()},
          {"re", detail::real_rows(rho.matrix().real())},
          {"im", detail::real_rows(rho.matrix().imag())}};
}

inline DensityMatrix density_from_json(const Json& j) {
  try {
    const Eigen::Index n = detail::positive_count(j, "dim");
    return DensityMatrix::from_matrix(detail::complex_matrix(j, n, "density matrix"));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("density matrix JSON: ") + e.what());
  }
}

inline LindbladSpec lindblad_from_json(const Json& j) {
  try {
    const Eigen::Index n = detail::positive_count(j, "n_vertices");
    LindbladSpec spec;
    spec.omega = j.at("omega").get<double>();
    spec.hamiltonian = j.contains("hamiltonian") ? detail::complex_matrix(j.at("hamiltonian"), n, "hamiltonian")
                                                 : ComplexMatrix::Zero(n, n);
    spec.rates = RealMatrix::Zero(n, n);
    for (const Json& e : j.value("rates", Json::array())) {
      spec.rates(detail::vertex_label(e, "from", n), detail::vertex_label(e, "to", n)) = e.at("gamma").get<double>();
    }
    return spec;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("Lindblad JSON: ") + e.what());
  }
}

inline Json lindblad_to_json(const LindbladSpec& spec) {
  Json rates = Json::array();
  for (Eigen::Index from = 0; from < spec.n_vertices(); ++from) {
    for (Eigen::Index to = 0; to < spec.n_vertices(); ++to) {
      if (spec.rates(from, to) == 0.0) continue;
      rates.push_back({{"from", from + 1}, {"to", to + 1}, {"gamma", spec.rates(from, to)}});
    }
  }
  return {{"n_vertices", spec.n_vertices()},
          {"omega", spec.omega},
          {"hamiltonian",
           {{"re", detail::real_rows(spec.hamiltonian.real())}, {"im", detail::real_rows(spec.hamiltonian.imag())}}},
          {"rates", rates}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// %.17g, enough digits to round-trip any double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// step,vertex_1,...,vertex_N,trace with one row per step.
inline std::string populations_csv(const std::vector<RealVector>& per_step, const std::vector<double>& traces) {
  std::ostringstream os;
  const Eigen::Index n = per_step.empty() ? 0 : per_step.front().size();
  os << "step";
  for (Eigen::Index v = 0; v < n; ++v) os << ",vertex_" << v + 1;
  os << ",trace\n";
  for (std::size_t k = 0; k < per_step.size(); ++k) {
    os << k;
    for (Eigen::Index v = 0; v < n; ++v) os << ',' << format_double(per_step[k](v));
    os << ',' << format_double(traces[k]) << '\n';
  }
  return os.str();
}

inline std::string populations_csv(const std::vector<DensityMatrix>& states) {
  std::vector<RealVector> pops;
  std::vector<double> traces;
  for (const auto& s : states) {
    pops.push_back(s.populations());
    traces.push_back(s.trace());
  }
  return populations_csv(pops, traces);
}

inline std::string populations_csv(const EnsembleResult& r) {
  std::vector<double> traces;
  for (const auto& p : r.per_step_populations) traces.push_back(p.sum());
  return populations_csv(r.per_step_populations, traces);
}

inline Json convergence_to_json(const ConvergenceReport& r) {
  return {{"max_trace_distance", r.max_trace_distance},
          {"mean_trace_distance", r.mean_trace_distance},
          {"inv_sqrt_m_coefficient", r.inv_sqrt_m_coefficient},
          {"per_step", r.per_step},
          {"seed", r.seed},
          {"trajectories", r.trajectories}};
}

}  // namespace qsw
