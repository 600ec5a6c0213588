#include "dyadlab/json_io.hpp"

#include <fstream>
#include <sstream>

namespace dyadlab {

using nlohmann::json;

namespace {

json cube_to_json(const CubeId& q) { return json{{"level", q.level}, {"index", q.index}}; }

CubeId cube_from_json(const json& j) {
  return CubeId{j.at("level").get<int>(), j.at("index").get<std::uint64_t>()};
}

}  // namespace

json tree_to_json(const MeasuredTree& tree) {
  std::vector<double> lex(tree.leaf_count());
  for (std::uint64_t path = 0; path < tree.leaf_count(); ++path) {
    lex[tree.leaf_path_to_lex(path)] = tree.leaf_mass(path);
  }
  return json{{"n", tree.dimension()}, {"L", tree.depth()}, {"leaf_masses", lex}};
}

MeasuredTree tree_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  const int L = j.at("L").get<int>();
  MeasurePreset p;
  p.kind = PresetKind::explicit_masses;
  p.masses = j.at("leaf_masses").get<std::vector<double>>();
  return MeasuredTree::build(n, L, p);
}

MeasuredTree load_measure(const std::string& arg, int n, int L, std::uint64_t seed) {
  if (arg.rfind("preset:", 0) == 0) {
    MeasurePreset p = MeasurePreset::parse(arg.substr(7));
    if (p.seed == 0) p.seed = seed;
    return MeasuredTree::build(n, L, p);
  }
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open measure file: " + arg);
  json j;
  in >> j;
  return tree_from_json(j);
}

json haar_to_json(const HaarSystem& hs) {
  const MeasuredTree& tree = hs.tree();
  json cubes = json::array();
  for (int lev = 0; lev < tree.depth(); ++lev) {
    for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i) {
      const CubeId q{lev, i};
      const auto& h = hs.function(q);
      std::vector<double> alphas(tree.branching());
      for (int o = 0; o < tree.branching(); ++o) alphas[o] = h.alpha(o);
      cubes.push_back(json{{"cube", cube_to_json(q)}, {"alphas", alphas}, {"m", hs.m(q)}});
    }
  }
  return json{{"functions", cubes}};
}

json shift_to_json(const HaarShift& shift) {
  json entries = json::array();
  for (const auto& e : shift.coeffs()) {
    entries.push_back(json{{"Q", cube_to_json(e.q)},
                           {"J", cube_to_json(e.j)},
                           {"K", cube_to_json(e.k)},
                           {"c", e.c}});
  }
  return json{{"s", shift.s()}, {"t", shift.t()}, {"coeffs", entries}};
}

HaarShift shift_from_json(const HaarSystem& hs, const json& j) {
  std::vector<ShiftCoeff> coeffs;
  for (const auto& e : j.at("coeffs")) {
    coeffs.push_back({cube_from_json(e.at("Q")), cube_from_json(e.at("J")),
                      cube_from_json(e.at("K")), e.at("c").get<double>()});
  }
  return HaarShift(hs, j.at("s").get<int>(), j.at("t").get<int>(), std::move(coeffs));
}

json weight_to_json(const MatrixWeight& w) {
  json leaves = json::array();
  for (std::uint64_t x = 0; x < w.tree().leaf_count(); ++x) {
    auto m = w.at(x);
    std::vector<double> row;
    for (int r = 0; r < w.dim(); ++r) {
      for (int c = 0; c < w.dim(); ++c) row.push_back(m(r, c));
    }
    leaves.push_back(row);
  }
  return json{{"d", w.dim()}, {"leaves", leaves}};
}

MatrixWeight weight_from_json(const MeasuredTree& tree, const json& j) {
  const int d = j.at("d").get<int>();
  MatrixWeight w(tree, d);
  const auto& leaves = j.at("leaves");
  if (leaves.size() != tree.leaf_count()) throw std::invalid_argument("weight leaf count mismatch");
  for (std::uint64_t x = 0; x < tree.leaf_count(); ++x) {
    const auto row = leaves[x].get<std::vector<double>>();
    Eigen::MatrixXd m(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) m(r, c) = row[r * d + c];
    }
    w.set(x, m);
  }
  w.validate();
  return w;
}

json balanced_report_to_json(const BalancedReport& rep) {
  return json{{"xi00", rep.xi00},
              {"xi10", rep.xi10},
              {"xi01", rep.xi01},
              {"ratio_max", rep.ratio_max},
              {"ratio_min", rep.ratio_min},
              {"norm_ratio_max", rep.norm_ratio_max},
              {"norm_ratio_min", rep.norm_ratio_min},
              {"is_standard", rep.is_standard},
              {"is_balanced", rep.is_balanced}};
}

json sparseness_to_json(const SparsenessReport& rep) {
  return json{{"eta_achieved", rep.eta_achieved},
              {"lambda_carleson", rep.lambda_carleson},
              {"eta_greedy_full", rep.eta_greedy_full}};
}

json certificate_to_json(const DominationCertificate& cert, const SparsenessReport& sparseness) {
  return json{{"C", cert.C},
              {"mode", cert.mode == DominationMode::plain ? "plain" : "modified"},
              {"N", cert.N},
              {"eta", sparseness.eta_achieved},
              {"lambda", sparseness.lambda_carleson},
              {"leaves_failing", cert.failing_leaves},
              {"worst_residual", cert.worst_residual},
              {"all_pass", cert.all_pass}};
}

json embedding_report_to_json(const EmbeddingReport& rep) {
  return json{{"p", rep.p},
              {"A", rep.A},
              {"C1", rep.C1},
              {"C2", rep.C2},
              {"method", rep.method == C1Method::exact ? "exact" : "ascent"},
              {"lower_ok", rep.lower_ok},
              {"upper_ratio", rep.upper_ratio}};
}

bool validate_against_schema(const json& doc, const json& schema, std::string* error) {
  const auto check_type = [](const json& v, const std::string& ty) {
    if (ty == "number") return v.is_number();
    if (ty == "string") return v.is_string();
    if (ty == "boolean") return v.is_boolean();
    if (ty == "array") return v.is_array();
    if (ty == "object") return v.is_object();
    if (ty == "integer") return v.is_number_integer() || v.is_number_unsigned();
    return false;
  };
  if (!schema.contains("required")) {
    if (error) *error = "schema has no required block";
    return false;
  }
  for (const auto& [key, ty] : schema.at("required").items()) {
    if (!doc.contains(key)) {
      if (error) *error = "missing required field: " + key;
      return false;
    }
    if (!check_type(doc.at(key), ty.get<std::string>())) {
      if (error) *error = "field has wrong type: " + key;
      return false;
    }
  }
  return true;
}

std::vector<std::pair<std::string, double>> load_pins(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pins file: " + path);
  std::vector<std::pair<std::string, double>> pins;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key.empty()) continue;
    pins.emplace_back(key, std::stod(line.substr(eq + 1)));
  }
  return pins;
}

double pin_value(const std::vector<std::pair<std::string, double>>& pins, const std::string& name) {
  for (const auto& [k, v] : pins) {
    if (k == name) return v;
  }
  throw std::runtime_error("pin not found: " + name);
}

}  // namespace dyadlab
