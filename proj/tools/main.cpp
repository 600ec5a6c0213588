#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include "dyadlab/acceptance.hpp"
#include "dyadlab/carleson.hpp"
#include "dyadlab/json_io.hpp"
#include "dyadlab/matrix_weight.hpp"
#include "dyadlab/orlicz.hpp"
#include "dyadlab/sparse.hpp"
#include "dyadlab/zonotope.hpp"

using namespace dyadlab;
using nlohmann::json;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir = "out";
  std::string format = "json";
};

void emit(const GlobalArgs& g, const std::string& name, const json& doc) {
  std::filesystem::create_directories(g.out_dir);
  const std::string path = g.out_dir + "/" + name + (g.format == "csv" ? ".csv" : ".json");
  std::ofstream out(path);
  if (g.format == "csv" && doc.is_array()) {
    // one row per (instance, characteristic, value)
    out << "instance,characteristic,value\n";
    int idx = 0;
    for (const auto& row : doc) {
      for (const auto& [k, v] : row.items()) {
        if (v.is_number()) out << idx << "," << k << "," << v.get<double>() << "\n";
      }
      ++idx;
    }
  } else {
    out << doc.dump(2) << "\n";
  }
  std::cout << doc.dump(2) << "\n";
}

// weight argument: file path or "random:d=2,kappa=100,seed=5[,smooth]"
MatrixWeight load_weight(const MeasuredTree& tree, const std::string& arg, std::uint64_t seed) {
  if (arg.rfind("random:", 0) == 0) {
    int d = 2;
    double kappa = 100.0;
    bool smooth = false;
    std::istringstream as(arg.substr(7));
    std::string kv;
    while (std::getline(as, kv, ',')) {
      const auto eq = kv.find('=');
      const std::string key = kv.substr(0, eq);
      if (key == "d") {
        d = std::stoi(kv.substr(eq + 1));
      } else if (key == "kappa") {
        kappa = std::stod(kv.substr(eq + 1));
      } else if (key == "seed") {
        seed = std::stoull(kv.substr(eq + 1));
      } else if (key == "smooth") {
        smooth = true;
      } else {
        throw std::invalid_argument("unknown weight argument: " + key);
      }
    }
    Rng rng(seed);
    return smooth ? MatrixWeight::random_smooth(tree, d, kappa, rng)
                  : MatrixWeight::random_iid(tree, d, kappa, rng);
  }
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open weight file: " + arg);
  json j;
  in >> j;
  return weight_from_json(tree, j);
}

HaarShift load_shift(const HaarSystem& hs, const std::string& arg, std::uint64_t seed) {
  if (arg.rfind("random:", 0) == 0) {
    int s = 0, t = 0;
    double floor = 0.5;
    bool l1 = false;
    std::istringstream as(arg.substr(7));
    std::string kv;
    while (std::getline(as, kv, ',')) {
      const auto eq = kv.find('=');
      const std::string key = kv.substr(0, eq);
      if (key == "s") {
        s = std::stoi(kv.substr(eq + 1));
      } else if (key == "t") {
        t = std::stoi(kv.substr(eq + 1));
      } else if (key == "seed") {
        seed = std::stoull(kv.substr(eq + 1));
      } else if (key == "floor") {
        floor = std::stod(kv.substr(eq + 1));
      } else if (key == "l1") {
        l1 = true;
      } else {
        throw std::invalid_argument("unknown shift argument: " + key);
      }
    }
    Rng rng(seed);
    return l1 ? HaarShift::random_l1_normalized(hs, s, t, rng)
              : HaarShift::random(hs, s, t, rng, 1.0, floor);
  }
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open shift file: " + arg);
  json j;
  in >> j;
  return shift_from_json(hs, j);
}

LeafFunction load_function(const MeasuredTree& tree, const std::string& arg, std::uint64_t seed) {
  if (arg.rfind("random:", 0) == 0) {
    int d = 1, spikes = 2;
    std::istringstream as(arg.substr(7));
    std::string kv;
    while (std::getline(as, kv, ',')) {
      const auto eq = kv.find('=');
      const std::string key = kv.substr(0, eq);
      if (key == "d") {
        d = std::stoi(kv.substr(eq + 1));
      } else if (key == "seed") {
        seed = std::stoull(kv.substr(eq + 1));
      } else if (key == "spikes") {
        spikes = std::stoi(kv.substr(eq + 1));
      } else {
        throw std::invalid_argument("unknown function argument: " + key);
      }
    }
    Rng rng(seed);
    return random_test_function(tree, d, rng, spikes);
  }
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open function file: " + arg);
  json j;
  in >> j;
  const int d = j.at("d").get<int>();
  LeafFunction f(tree, d);
  const auto vals = j.at("values").get<std::vector<double>>();
  if (vals.size() != f.raw().size()) throw std::invalid_argument("function length mismatch");
  f.raw() = vals;
  return f;
}

YoungFunction load_young(const std::string& arg) {
  // "power:r=2" or "power_log:r=2,s=-1.5"
  const auto colon = arg.find(':');
  const std::string kind = arg.substr(0, colon);
  double r = 2.0, s = 0.0;
  if (colon != std::string::npos) {
    std::istringstream as(arg.substr(colon + 1));
    std::string kv;
    while (std::getline(as, kv, ',')) {
      const auto eq = kv.find('=');
      const std::string key = kv.substr(0, eq);
      if (key == "r" || key == "p") {
        r = std::stod(kv.substr(eq + 1));
      } else if (key == "s") {
        s = std::stod(kv.substr(eq + 1));
      } else {
        throw std::invalid_argument("unknown young argument: " + key);
      }
    }
  }
  if (kind == "power") return YoungFunction::power(r);
  if (kind == "power_log") return YoungFunction::power_log(r, s);
  throw std::invalid_argument("unknown young function kind: " + kind);
}

Zonotope zonotope_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument("generators must be an array");
  const int d = static_cast<int>(rows.front().size());
  Zonotope z(d);
  for (const auto& row : rows) {
    auto g = row.get<std::vector<double>>();
    if (static_cast<int>(g.size()) != d) throw std::invalid_argument("ragged generator rows");
    z.add_generator(g.data());
  }
  return z;
}

int run_suite(const GlobalArgs& g, const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "cannot open config: " << config_path << "\n";
    return 2;
  }
  json cfg;
  try {
    in >> cfg;
  } catch (const std::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 2;
  }
  if (!cfg.contains("schema_version") || cfg.at("schema_version").get<int>() != 1) {
    std::cerr << "unsupported config schema\n";
    return 2;
  }
  const std::uint64_t master = cfg.value("seed", g.seed);
  const auto experiments = cfg.value("experiments", json::array());

  struct Slot {
    json result;
    bool ok = true;
  };
  std::vector<Slot> slots(experiments.size());

  auto run_one = [&](std::size_t idx) {
    const auto& exp = experiments[idx];
    const std::string kind = exp.at("kind").get<std::string>();
    const std::uint64_t seed = derive_seed(master, idx);
    json out{{"name", exp.value("name", kind)}, {"kind", kind}};
    try {
      if (kind == "acceptance") {
        acceptance::Options opts;
        opts.seed = exp.value("seed", master);
        opts.quick = exp.value("quick", false);
        opts.pins_path = exp.value("pins", std::string("pins.toml"));
        opts.out_dir = g.out_dir;
        json crits = json::array();
        bool pass = true;
        for (int id : exp.value("criteria", std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11})) {
          auto r = acceptance::run_criterion(id, opts);
          json ach;
          for (const auto& [k, v] : r.achieved) ach[k] = v;
          crits.push_back(json{{"id", r.id}, {"pass", r.pass}, {"detail", r.detail}, {"achieved", ach}});
          pass &= r.pass;
        }
        out["criteria"] = crits;
        out["pass"] = pass;
        slots[idx].ok = pass;
      } else if (kind == "haar_check") {
        const int n = exp.value("n", 1), L = exp.value("L", 4);
        auto tree = load_measure(exp.at("measure").get<std::string>(), n, L, seed);
        auto hs = tree.dimension() == 1 ? build_haar_1d(tree)
                                        : build_haar_nd(tree, SplitSpec::halfspace(0));
        auto rep = check_balanced(hs, exp.value("bound", 2.0));
        out["report"] = balanced_report_to_json(rep);
        out["pass"] = true;
      } else if (kind == "sparse_build") {
        const int n = 1, L = exp.value("L", 5);
        auto tree = load_measure(exp.at("measure").get<std::string>(), n, L, seed);
        auto hs = build_haar_1d(tree);
        auto f = load_function(tree, exp.value("f", std::string("random:d=2")), derive_seed(seed, 1));
        const std::string mode = exp.value("mode", std::string("balanced"));
        SparseBuildOptions opts;
        if (exp.contains("C") && exp.at("C").is_number()) opts.C = exp.at("C").get<double>();
        SparseBuildResult res = [&]() {
          if (mode == "multiplier") {
            Rng rng(derive_seed(seed, 2));
            auto sigma = MartingaleMultiplier::random(tree, rng);
            return build_sparse_multiplier(sigma, f, tree.root(), hs, opts);
          }
          auto shift = load_shift(hs, exp.value("shift", std::string("random:s=0,t=1")),
                                  derive_seed(seed, 3));
          return mode == "l1" ? build_sparse_l1(shift, f, tree.root(), opts)
                              : build_sparse_balanced(shift, f, tree.root(), opts);
        }();
        out["certificate"] = certificate_to_json(res.cert, res.sparseness);
        out["pass"] = res.cert.all_pass;
        slots[idx].ok = res.cert.all_pass;
      } else if (kind == "carleson_verify") {
        const int L = exp.value("L", 4);
        auto tree = load_measure(exp.value("measure", std::string("preset:lebesgue")), 1, L, seed);
        Rng rng(derive_seed(seed, 4));
        WeightFamily fam = [&]() {
          const std::string spec = exp.value("family", std::string("adversarial"));
          if (spec.rfind("matrixweight", 0) == 0) {
            auto w = MatrixWeight::random_iid(tree, 2, 100.0, rng);
            return WeightFamily::from_matrix_weight(w, exp.value("p", 2.0));
          }
          if (spec == "smooth") return WeightFamily::random_smooth(tree, rng);
          return WeightFamily::random_adversarial(tree, rng, 50.0);
        }();
        auto alpha = CarlesonData::zeros(tree);
        for (auto& a : alpha.alpha) a = rng.uniform() < 0.5 ? rng.log_uniform(0.01, 2.0) : 0.0;
        auto rep = verify_embedding_bounds(fam, alpha, exp.value("p", 2.0), seed);
        out["report"] = embedding_report_to_json(rep);
        out["pass"] = rep.p != 2.0 || rep.lower_ok;
        slots[idx].ok = out["pass"].get<bool>();
      } else if (kind == "weights_sweep") {
        const int count = exp.value("count", 20);
        json rows = json::array();
        for (int i = 0; i < count; ++i) {
          Rng rng(derive_seed(seed, 100 + i));
          auto tree = load_measure(exp.value("measure", std::string("preset:lebesgue")), 1,
                                   exp.value("L", 4), derive_seed(seed, i));
          const int d = 1 + i % 3;
          auto w = MatrixWeight::random_iid(tree, d, exp.value("kappa", 100.0), rng);
          auto sigma = MartingaleMultiplier::random(tree, rng);
          rows.push_back(json{{"d", d},
                              {"a2", ap_constant(w, 2.0).value},
                              {"norm", opnorm_l2w(tree, w, sigma)}});
        }
        out["rows"] = rows;
        out["pass"] = true;
      } else if (kind == "weak_type") {
        auto tree = load_measure(exp.value("measure", std::string("preset:lebesgue")), 1,
                                 exp.value("L", 5), seed);
        auto hs = build_haar_1d(tree);
        auto shift = load_shift(hs, exp.value("shift", std::string("random:s=0,t=1")),
                                derive_seed(seed, 5));
        auto res = weak_type_experiment(tree, shift, exp.value("trials", 10), derive_seed(seed, 6));
        out["constant"] = res.constant;
        out["pass"] = true;
      } else {
        throw std::invalid_argument("unknown experiment kind: " + kind);
      }
    } catch (const std::exception& e) {
      out["error"] = e.what();
      out["pass"] = false;
      slots[idx].ok = false;
    }
    slots[idx].result = std::move(out);
  };

  // deterministic worker pool: results land in preassigned slots
  const int jobs = std::max(1, g.jobs);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= slots.size()) return;
        run_one(idx);
      }
    });
  }
  for (auto& th : pool) th.join();

  bool pass = true;
  json results = json::array();
  for (auto& s : slots) {
    results.push_back(s.result);
    pass &= s.ok;
  }

  // pinned-constant regression guard
  json pin_checks = json::array();
  if (cfg.contains("pins")) {
    try {
      auto pins = load_pins(cfg.at("pins").get<std::string>());
      for (const auto& slot : slots) {
        if (!slot.result.contains("criteria")) continue;
        for (const auto& crit : slot.result.at("criteria")) {
          for (const auto& [k, v] : crit.at("achieved").items()) {
            for (const auto& [pk, pv] : pins) {
              if (pk != k) continue;
              json check{{"name", k}, {"achieved", v.get<double>()}, {"pin", pv}};
              if (v.get<double>() > pv * 1.05) {
                check["status"] = "regression";
                pass = false;
              } else if (v.get<double>() < pv * 0.8) {
                check["status"] = "improved (consider re-pinning)";
              } else {
                check["status"] = "ok";
              }
              pin_checks.push_back(check);
            }
          }
        }
      }
    } catch (const std::exception& e) {
      std::cerr << "pins: " << e.what() << "\n";
      return 2;
    }
  }

  json report{{"schema_version", 1},
              {"seed", master},
              {"results", results},
              {"pin_checks", pin_checks},
              {"pass", pass},
              {"timestamp", ""}};

  const std::string schema_path = cfg.value("schema", std::string("configs/report.schema.json"));
  if (std::ifstream sin(schema_path); sin) {
    json schema;
    sin >> schema;
    std::string err;
    if (!validate_against_schema(report, schema, &err)) {
      std::cerr << "report schema violation: " << err << "\n";
      return 2;
    }
  }
  emit(g, cfg.value("report_name", std::string("suite_report")), report);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyadlab: verification lab for dyadic harmonic analysis with general measures"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--jobs", g.jobs, "worker pool size for suite runs");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--format", g.format, "json|csv");

  // shared options live on each subcommand
  std::string measure = "preset:lebesgue";
  int n = 1, L = 4;
  double bound = 2.0, p = 2.0, c_flag = 1.0;
  int N = 1;
  std::string shift_arg = "random:s=0,t=1", f_arg = "random:d=2", weight_arg = "random:d=2";
  std::string mode = "balanced", c_auto = "auto";
  std::string gens_json, vec_json;
  std::string phi_arg = "power:r=2", psi_arg = "power:r=2";
  std::string config_path;
  int trials = 10;

  auto add_measure = [&](CLI::App* cmd) {
    cmd->add_option("--measure", measure, "measure file or preset:spec");
    cmd->add_option("-n,--dim", n, "ambient dimension");
    cmd->add_option("-L,--depth", L, "tree depth");
  };

  auto* tree_cmd = app.add_subcommand("tree", "build a measured tree and emit it");
  add_measure(tree_cmd);

  auto* haar_cmd = app.add_subcommand("haar", "haar system checks");
  auto* haar_check = haar_cmd->add_subcommand("check", "balanced report");
  add_measure(haar_check);
  haar_check->add_option("--bound", bound, "balance bound B");
  std::string split_arg = "axis:0";
  haar_check->add_option("--split", split_arg, "bipartition for n >= 2, e.g. axis:1");
  auto* haar_export = haar_cmd->add_subcommand("export", "emit the haar system");
  add_measure(haar_export);

  auto* shift_cmd = app.add_subcommand("shift", "haar shift operations");
  auto* shift_apply = shift_cmd->add_subcommand("apply", "apply a shift to a function");
  add_measure(shift_apply);
  shift_apply->add_option("--shift", shift_arg, "shift file or random:spec");
  shift_apply->add_option("--f", f_arg, "function file or random:spec");
  auto* shift_l1 = shift_cmd->add_subcommand("check-l1", "L1 normalization check");
  add_measure(shift_l1);
  shift_l1->add_option("--shift", shift_arg, "shift file or random:spec");
  shift_l1->add_option("--c", c_flag, "normalization constant");
  auto* shift_weak = shift_cmd->add_subcommand("weak11", "empirical weak (1,1) constant");
  add_measure(shift_weak);
  shift_weak->add_option("--shift", shift_arg, "shift file or random:spec");
  shift_weak->add_option("--trials", trials, "number of random inputs");

  auto* body_cmd = app.add_subcommand("body", "zonotope membership and john ellipsoids");
  auto* body_member = body_cmd->add_subcommand("member", "LP membership");
  body_member->add_option("--generators", gens_json, "JSON array of generator rows")->required();
  body_member->add_option("--v", vec_json, "JSON vector")->required();
  auto* body_john = body_cmd->add_subcommand("john", "inscribed john ellipsoid");
  body_john->add_option("--generators", gens_json, "JSON array of generator rows")->required();

  auto* sparse_cmd = app.add_subcommand("sparse", "sparse domination certificates");
  auto* sparse_build = sparse_cmd->add_subcommand("build", "run a stopping-time construction");
  add_measure(sparse_build);
  sparse_build->add_option("--mode", mode, "balanced|l1|multiplier");
  sparse_build->add_option("--C", c_auto, "auto or a positive constant");
  sparse_build->add_option("--shift", shift_arg, "shift file or random:spec");
  sparse_build->add_option("--f", f_arg, "function file or random:spec");

  auto* weights_cmd = app.add_subcommand("weights", "matrix weight characteristics");
  std::string weights_op = "ap";
  weights_cmd->add_option("op", weights_op, "ap|apn|apb|apinf|opnorm|necessity|sweep")->required();
  add_measure(weights_cmd);
  weights_cmd->add_option("--weight", weight_arg, "weight file or random:spec");
  weights_cmd->add_option("--p", p, "exponent");
  weights_cmd->add_option("--N", N, "complexity for apn");
  weights_cmd->add_option("--trials", trials, "instances for the sweep");

  auto* carleson_cmd = app.add_subcommand("carleson", "generalized Carleson embedding");
  auto* carleson_verify = carleson_cmd->add_subcommand("verify", "verify embedding bounds");
  add_measure(carleson_verify);
  std::string family_arg = "adversarial";
  std::string alpha_arg = "random";
  carleson_verify->add_option("--family", family_arg, "constant|smooth|adversarial|matrixweight");
  carleson_verify->add_option("--alpha", alpha_arg, "random[:seed=N] | sparse[:seed=N] | file");
  carleson_verify->add_option("--p", p, "exponent");

  auto* orlicz_cmd = app.add_subcommand("orlicz", "young functions and bumps");
  auto* orlicz_bump = orlicz_cmd->add_subcommand("bump", "two-weight bump constant");
  add_measure(orlicz_bump);
  orlicz_bump->add_option("--phi", phi_arg, "young spec, e.g. power_log:r=2,s=-1.5");
  orlicz_bump->add_option("--psi", psi_arg, "young spec");
  orlicz_bump->add_option("--p", p, "exponent");
  orlicz_bump->add_option("--N", N, "pair distance complexity");
  orlicz_bump->add_option("--weight", weight_arg, "weight file or random:spec");
  auto* orlicz_bp = orlicz_cmd->add_subcommand("bp", "B_p tail check");
  orlicz_bp->add_option("--phi", phi_arg, "young spec");
  orlicz_bp->add_option("--p", p, "exponent");

  auto* suite_cmd = app.add_subcommand("suite", "run a reproducible experiment suite");
  suite_cmd->add_option("--config", config_path, "suite config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tree_cmd->parsed()) {
      auto tree = load_measure(measure, n, L, g.seed);
      emit(g, "tree", tree_to_json(tree));
    } else if (haar_check->parsed()) {
      auto tree = load_measure(measure, n, L, g.seed);
      int axis = 0;
      if (split_arg.rfind("axis:", 0) == 0) axis = std::stoi(split_arg.substr(5));
      auto hs = tree.dimension() == 1 ? build_haar_1d(tree)
                                      : build_haar_nd(tree, SplitSpec::halfspace(axis));
      emit(g, "haar_check", balanced_report_to_json(check_balanced(hs, bound)));
    } else if (haar_export->parsed()) {
      auto tree = load_measure(measure, n, L, g.seed);
      auto hs = tree.dimension() == 1 ? build_haar_1d(tree)
                                      : build_haar_nd(tree, SplitSpec::halfspace(0));
      emit(g, "haar_system", haar_to_json(hs));
    } else if (shift_apply->parsed()) {
      auto tree = load_measure(measure, n, L, g.seed);
      auto hs = build_haar_1d(tree);
      auto shift = load_shift(hs, shift_arg, derive_seed(g.seed, 1));
      auto f = load_function(tree, f_arg, derive_seed(g.seed, 2));
      auto tf = shift.apply(f);
      emit(g, "shift_apply", json{{"d", tf.dim()}, {"values", tf.raw()}});
    } else if (shift_l1->parsed()) {
      auto tree = load_measure(measure, n, L, g.seed);
      auto hs = build_haar_1d(tree);
      auto shift = load_shift(hs, shift_arg, derive_seed(g.seed, 1));
      auto rep = shift.is_l1_normalized(c_flag);
      emit(g, "shift_l1",
           json{{"verdict", rep.verdict},
                {"achieved", rep.achieved},
                {"worst_cube", {{"level", rep.worst_cube.level}, {"index", rep.worst_cube.index}}}});
    } else if (shift_weak->parsed()) {
      auto tree = load_measure(measure, n, L, g.seed);
      auto hs = build_haar_1d(tree);
      auto shift = load_shift(hs, shift_arg, derive_seed(g.seed, 1));
      auto res = weak_type_experiment(tree, shift, trials, derive_seed(g.seed, 2));
      emit(g, "weak11", json{{"constant", res.constant}, {"worst_lambda", res.worst_lambda}});
    } else if (body_member->parsed()) {
      auto z = zonotope_from_json(json::parse(gens_json));
      auto v = json::parse(vec_json).get<std::vector<double>>();
      auto res = member(v, z);
      emit(g, "body_member",
           json{{"inside", res.inside}, {"residual", res.residual}, {"separator", res.separator}});
    } else if (body_john->parsed()) {
      auto z = zonotope_from_json(json::parse(gens_json));
      auto e = john_ellipsoid(z);
      std::vector<std::vector<double>> basis(e.d);
      for (int i = 0; i < e.d; ++i) {
        for (int r = 0; r < e.d; ++r) basis[i].push_back(e.basis(r, i));
      }
      std::vector<double> axes(e.semi_axes.data(), e.semi_axes.data() + e.d);
      emit(g, "body_john", json{{"rank", e.rank}, {"semi_axes", axes}, {"basis", basis}});
    } else if (sparse_build->parsed()) {
      auto tree = load_measure(measure, 1, L, g.seed);
      auto hs = build_haar_1d(tree);
      auto f = load_function(tree, f_arg, derive_seed(g.seed, 2));
      SparseBuildOptions opts;
      if (c_auto != "auto") opts.C = std::stod(c_auto);
      SparseBuildResult res = [&]() {
        if (mode == "multiplier") {
          Rng rng(derive_seed(g.seed, 3));
          auto sigma = MartingaleMultiplier::random(tree, rng);
          return build_sparse_multiplier(sigma, f, tree.root(), hs, opts);
        }
        auto shift = load_shift(hs, shift_arg, derive_seed(g.seed, 1));
        return mode == "l1" ? build_sparse_l1(shift, f, tree.root(), opts)
                            : build_sparse_balanced(shift, f, tree.root(), opts);
      }();
      emit(g, "sparse_certificate", certificate_to_json(res.cert, res.sparseness));
      return res.cert.all_pass ? 0 : 1;
    } else if (weights_cmd->parsed() && weights_op == "sweep") {
      json rows = json::array();
      for (int i = 0; i < trials; ++i) {
        Rng rng(derive_seed(g.seed, 100 + i));
        auto tree = load_measure(measure, 1, L, derive_seed(g.seed, i));
        const int d = 1 + i % 3;
        auto w = MatrixWeight::random_iid(tree, d, 100.0, rng);
        auto sigma = MartingaleMultiplier::random(tree, rng);
        rows.push_back(json{{"d", d},
                            {"a2", ap_constant(w, 2.0).value},
                            {"norm", opnorm_l2w(tree, w, sigma)}});
      }
      emit(g, "weights_sweep", rows);
    } else if (weights_cmd->parsed()) {
      auto tree = load_measure(measure, 1, L, g.seed);
      auto w = load_weight(tree, weight_arg, derive_seed(g.seed, 1));
      auto hs = build_haar_1d(tree);
      json out;
      if (weights_op == "ap") {
        out = json{{"value", ap_constant(w, p).value}};
      } else if (weights_op == "apn") {
        out = json{{"value", apN_constant(w, p, N, hs).value},
                   {"reducing", apN_reducing(w, p, N, hs)}};
      } else if (weights_op == "apb") {
        out = json{{"value", apb_constant(w, p, hs).value}};
      } else if (weights_op == "apinf") {
        Rng rng(derive_seed(g.seed, 7));
        out = json{{"value", ap_infty_sc(w, p, 1024, rng).value}, {"sampled", true}};
      } else if (weights_op == "opnorm") {
        Rng rng(derive_seed(g.seed, 8));
        auto sigma = MartingaleMultiplier::random(tree, rng);
        out = json{{"multiplier_norm_l2w", opnorm_l2w(tree, w, sigma)},
                   {"a2", ap_constant(w, 2.0).value}};
      } else if (weights_op == "necessity") {
        const CubeId j{tree.depth(), 1}, k{tree.depth(), tree.leaf_count() - 2};
        auto resx = necessity_experiment(w, p, hs, j, k);
        out = json{{"lhs", resx.lhs}, {"shift_norm", resx.shift_norm}, {"ratio", resx.ratio}};
      } else {
        throw std::invalid_argument("unknown weights op: " + weights_op);
      }
      emit(g, "weights_" + weights_op, out);
    } else if (carleson_verify->parsed()) {
      auto tree = load_measure(measure, 1, L, g.seed);
      Rng rng(derive_seed(g.seed, 4));
      WeightFamily fam = [&]() {
        if (family_arg.rfind("matrixweight", 0) == 0) {
          auto w = MatrixWeight::random_iid(tree, 2, 100.0, rng);
          return WeightFamily::from_matrix_weight(w, p);
        }
        if (family_arg == "smooth") return WeightFamily::random_smooth(tree, rng);
        if (family_arg == "constant") {
          std::vector<double> w(tree.leaf_count());
          for (auto& v : w) v = rng.log_uniform(0.1, 10.0);
          return WeightFamily::constant(tree, w);
        }
        return WeightFamily::random_adversarial(tree, rng, 50.0);
      }();
      auto alpha = CarlesonData::zeros(tree);
      if (alpha_arg.rfind("random", 0) == 0) {
        Rng arng(alpha_arg.size() > 7 ? std::stoull(alpha_arg.substr(12)) : derive_seed(g.seed, 9));
        for (auto& a : alpha.alpha) a = arng.uniform() < 0.5 ? arng.log_uniform(0.01, 2.0) : 0.0;
      } else if (alpha_arg.rfind("sparse", 0) == 0) {
        Rng arng(alpha_arg.size() > 7 ? std::stoull(alpha_arg.substr(12)) : derive_seed(g.seed, 10));
        std::size_t flat = 0;
        for (int lev = 0; lev <= tree.depth(); ++lev) {
          for (std::uint64_t i = 0; i < tree.cubes_at(lev); ++i, ++flat) {
            if (arng.uniform() < 0.35) alpha.alpha[flat] = tree.mu(CubeId{lev, i});
          }
        }
      } else {
        std::ifstream ain(alpha_arg);
        if (!ain) throw std::runtime_error("cannot open alpha file: " + alpha_arg);
        json aj;
        ain >> aj;
        alpha.alpha = aj.at("alpha").get<std::vector<double>>();
      }
      auto rep = verify_embedding_bounds(fam, alpha, p, g.seed);
      emit(g, "carleson_verify", embedding_report_to_json(rep));
      return (p != 2.0 || rep.lower_ok) ? 0 : 1;
    } else if (orlicz_bump->parsed()) {
      auto tree = load_measure(measure, 1, L, g.seed);
      auto hs = build_haar_1d(tree);
      auto w = load_weight(tree, weight_arg, derive_seed(g.seed, 1));
      auto v = load_weight(tree, weight_arg, derive_seed(g.seed, 2));
      auto phi = load_young(phi_arg);
      auto psi = load_young(psi_arg);
      emit(g, "orlicz_bump", json{{"bump", bump_constant(w, v, phi, psi, p, N, hs)}});
    } else if (orlicz_bp->parsed()) {
      auto phi = load_young(phi_arg);
      auto res = bp_check(phi, p);
      emit(g, "orlicz_bp",
           json{{"finite", res.finite},
                {"tail_exponent", res.tail_exponent},
                {"integral_to_cutoff", res.integral_to_cutoff},
                {"note", "verdict is a tail-extrapolation heuristic"}});
    } else if (suite_cmd->parsed()) {
      return run_suite(g, config_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
