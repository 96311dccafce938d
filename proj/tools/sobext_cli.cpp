// sobext: generate trees, build decompositions, verify lemmas, run extensions
// and the norm-ratio experiment.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sobext/errors.hpp"
#include "sobext/io.hpp"
#include "sobext/tree_extension.hpp"

using namespace sobext;

namespace {

// Exit codes.
constexpr int kOk = 0, kVerifyFail = 1, kBadInput = 2, kNumerical = 3;

struct Settings {
  std::string tree;
  std::string out;
  std::vector<double> ps{1.5};
  double epsilon = 0.01;
  int arity = 2;
  int depth = 2;
  double early_leaf = 0.0;
  double u_min = 0.5;
  double kappa = 20.0;
  double k0 = 0.05;
  double big_k0 = 50.0;
  double k1 = 0.0;  // 0 selects the default rule
  int quad_order = 12;
  int trials = 50;
  std::uint64_t seed = 0;
  std::string backend = "averaging";
  int workers = 0;
  int grid = 201;
  std::size_t max_squares = 5'000'000;
};

TreeBackend parse_backend(const std::string& s) {
  if (s == "averaging") return TreeBackend::Averaging;
  if (s == "optimal") return TreeBackend::Optimal;
  throw InputError("unknown backend '" + s + "'");
}

InstanceOptions instance_options(const Settings& s) {
  InstanceOptions o;
  o.whitney.max_squares = s.max_squares;
  o.clusters.kappa = s.kappa;
  o.clusters.k0 = s.big_k0;
  if (s.k1 > 0.0) o.clusters.k1 = s.k1;
  return o;
}

Json config_json(const Settings& s) {
  return {{"tree", s.tree},
          {"p", s.ps},
          {"kappa", s.kappa},
          {"k0", s.k0},
          {"K0", s.big_k0},
          {"K1", s.k1 > 0.0 ? Json(s.k1) : Json("default")},
          {"quad_order", s.quad_order},
          {"trials", s.trials},
          {"seed", s.seed},
          {"backend", s.backend},
          {"workers", s.workers > 0 ? s.workers : omp_get_max_threads()},
          {"max_squares", s.max_squares}};
}

std::string config_line(const Settings& s) { return "# config " + config_json(s).dump(); }

void require_tree(const Settings& s) {
  if (s.tree.empty()) throw InputError("--tree is required");
}

void require_out(const Settings& s) {
  if (s.out.empty()) throw InputError("--out is required");
}

WeightedTree load_valid_tree(const Settings& s) {
  require_tree(s);
  WeightedTree t = read_tree_file(s.tree);
  const auto v = validate(t);
  if (!v.empty()) throw InputError("invalid tree: node '" + v.front().node + "': " + v.front().message);
  return t;
}

int cmd_gen_tree(const Settings& s) {
  require_out(s);
  if (s.arity < 2) throw InputError("N must be at least 2");
  if (s.depth < 1) throw InputError("depth must be at least 1");
  if (s.epsilon > s.k0 / s.arity) throw InputError("epsilon exceeds k0 / N");
  const WeightedTree t = random_tree({.arity = s.arity, .depth = s.depth, .epsilon = s.epsilon, .early_leaf_probability = s.early_leaf, .u_min = s.u_min}, s.seed);
  write_json_file(s.out, tree_to_json(t));
  return kOk;
}

int cmd_build(const Settings& s) {
  require_out(s);
  const Instance inst = Instance::build(load_valid_tree(s), instance_options(s));
  std::filesystem::create_directories(s.out);
  const std::filesystem::path dir(s.out);
  Json ps = planar_set_to_json(inst.ps);
  ps["config"] = config_json(s);
  write_json_file((dir / "planar_set.json").string(), ps);
  Json cl = cluster_dump(inst, s.ps);
  cl["config"] = config_json(s);
  write_json_file((dir / "clusters.json").string(), cl);
  std::ofstream csv(dir / "whitney.csv");
  write_decomposition_csv(csv, *inst.wd, inst.ps);
  std::cout << "squares " << inst.wd->size() << ", clusters " << inst.ct.size() << ", K1 " << inst.ct.k1() << '\n';
  return kOk;
}

int cmd_verify(const Settings& s) {
  require_tree(s);
  const WeightedTree t = read_tree_file(s.tree);
  VerifyReport rep;
  if (!validate(t).empty()) {
    // Report the structural violations without building on a broken tree.
    rep.tree_violations = validate(t);
  } else {
    const Instance inst = Instance::build(t, instance_options(s));
    VerifyOptions vo;
    vo.instance = instance_options(s);
    vo.ps = s.ps;
    vo.seed = s.seed;
    vo.quad.order = s.quad_order;
    rep = verify_instance(inst, vo);
  }
  Json j = verify_report_to_json(rep);
  j["config"] = config_json(s);
  if (s.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(s.out, j);
  }
  for (const auto& f : rep.failures()) std::cerr << "failed: " << f << '\n';
  if (!rep.exact_ok()) return kVerifyFail;
  if (!rep.constants_ok()) return kNumerical;
  return kOk;
}

LeafFunction leaf_data(const WeightedTree& t, std::uint64_t seed) { return random_leaf_data(t.leaf_count(), seed, 0); }

int cmd_extend_plane(const Settings& s) {
  require_out(s);
  const Instance inst = Instance::build(load_valid_tree(s), instance_options(s));
  const double p = s.ps.front();
  const LeafFunction phi = leaf_data(inst.tree, s.seed);
  const PlanarData f = PlanarData::from_leaf_values(phi, inst.ps);
  const PatchedInterpolant F = planar_extend(inst, f, make_tree_backend(parse_backend(s.backend), p));
  const RestrictionCheck rc = check_restriction(inst, F, f, 10000, s.seed);
  const SeminormResult sn = planar_seminorm(F, p, {.order = s.quad_order});
  std::ofstream out(s.out);
  out << config_line(s) << '\n';
  write_samples_csv(out, F, {-0.5, 2.5, -0.5, 1.5}, s.grid, s.grid);
  std::cout << "seminorm " << sn.value << " (estimate " << sn.error_estimate << "), restriction error E2 "
            << rc.max_rel_e2 << ", E1 " << rc.max_rel_e1 << '\n';
  return rc.ok(1e-9) ? kOk : kNumerical;
}

int cmd_extend_tree(const Settings& s) {
  require_out(s);
  const Instance inst = Instance::build(load_valid_tree(s), instance_options(s));
  const double p = s.ps.front();
  const LeafFunction phi = leaf_data(inst.tree, s.seed);
  const PlanarExtensionOp planar = make_planar_backend(inst, make_tree_backend(parse_backend(s.backend), p));
  const NodeFunction Phi = tree_extend_from_planar(inst, phi, planar);
  Json values = Json::object();
  for (const auto& n : inst.tree.nodes()) values[n.id] = Phi[inst.tree.index_of(n.id)];
  const double trace = trace_seminorm(inst.tree, phi, p);
  Json j{{"config", config_json(s)},
         {"values", std::move(values)},
         {"seminorm", seminorm_tree(inst.tree, Phi, p)},
         {"trace_seminorm", trace}};
  write_json_file(s.out, j);
  return kOk;
}

int cmd_experiment(const Settings& s) {
  require_out(s);
  const Instance inst = Instance::build(load_valid_tree(s), instance_options(s));
  const ExperimentEngine engine(inst, {.order = s.quad_order});
  std::ofstream out(s.out);
  if (!out) throw InputError("cannot write " + s.out);
  out << config_line(s) << '\n';
  bool first = true;
  for (double p : s.ps) {
    ExperimentOptions eo;
    eo.p = p;
    eo.trials = s.trials;
    eo.seed = s.seed;
    eo.backend = parse_backend(s.backend);
    eo.quad.order = s.quad_order;
    const ExperimentReport rep = norm_ratio_experiment(engine, eo);
    std::ostringstream block;
    write_experiment_csv(block, rep);
    // Keep one comment and header line for the whole file.
    std::istringstream lines(block.str());
    std::string line;
    int k = 0;
    while (std::getline(lines, line)) {
      if (k++ < 2 && !first) continue;
      out << line << '\n';
    }
    first = false;
    std::cout << "p " << p << ": rho_plane median " << rep.plane.median << " [" << rep.plane.min << ", "
              << rep.plane.max << "], rho_tree median " << rep.tree.median << " [" << rep.tree.min << ", "
              << rep.tree.max << "], quadrature " << rep.max_quad_rel_error << '\n';
  }
  return kOk;
}

template <class F>
double seconds(F&& f) {
  const auto a = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
}

int cmd_bench(const Settings& s) {
  const Instance inst = Instance::build(load_valid_tree(s), instance_options(s));
  const auto& wd = *inst.wd;
  const double p = s.ps.front();
  const LeafFunction phi = leaf_data(inst.tree, s.seed);
  const PatchedInterpolant F =
      planar_extend(inst, PlanarData::from_leaf_values(phi, inst.ps), make_tree_backend(TreeBackend::Averaging, p));
  std::cout << "kernel,serial_s,parallel_s\n";
  auto row = [](const char* name, double a, double b) { std::cout << name << ',' << a << ',' << b << '\n'; };
  row("neighbors", seconds([&] { wd.build_neighbors(Exec::Serial); }),
      seconds([&] { wd.build_neighbors(Exec::Parallel); }));
  row("assign_clusters", seconds([&] { assign_clusters(inst.ct, wd, Exec::Serial); }),
      seconds([&] { assign_clusters(inst.ct, wd, Exec::Parallel); }));
  row("patching_sum", seconds([&] { patching_sum(F, p, Exec::Serial); }),
      seconds([&] { patching_sum(F, p, Exec::Parallel); }));
  row("planar_seminorm", seconds([&] { planar_seminorm(F, p, {.order = s.quad_order, .exec = Exec::Serial}); }),
      seconds([&] { planar_seminorm(F, p, {.order = s.quad_order, .exec = Exec::Parallel}); }));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace extension operators on trees and planar sets", "sobext"};
  app.set_config("--config", "", "TOML or INI file with one [subcommand] section; flags override it");
  app.require_subcommand(1);
  Settings s;

  auto common = [&](CLI::App* c) {
    c->add_option("--tree", s.tree, "Tree JSON file");
    c->add_option("--out", s.out, "Output file or directory");
    c->add_option("--p", s.ps, "Exponent(s) in (1, 2]")->delimiter(',');
    c->add_option("--kappa", s.kappa, "Ball dilation kappa")->capture_default_str();
    c->add_option("--K0", s.big_k0, "Disjointness dilation K0")->capture_default_str();
    c->add_option("--K1", s.k1, "Ball constant K1 (default rule when omitted)");
    c->add_option("--k0", s.k0, "Constant k0 in epsilon <= k0 / N")->capture_default_str();
    c->add_option("--quad-order", s.quad_order, "Gauss points per panel per axis")->capture_default_str();
    c->add_option("--seed", s.seed, "Random seed")->capture_default_str();
    c->add_option("--backend", s.backend, "Tree extension: optimal or averaging")->capture_default_str();
    c->add_option("--workers", s.workers, "OpenMP threads (0 keeps the default)");
    c->add_option("--max-squares", s.max_squares, "Whitney square cap")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen-tree", "Write a random tree");
  common(gen);
  gen->add_option("--N,--arity", s.arity, "Maximum children per node")->capture_default_str();
  gen->add_option("--depth", s.depth, "Tree depth")->capture_default_str();
  gen->add_option("--epsilon", s.epsilon, "Weight decay")->capture_default_str();
  gen->add_option("--early-leaf", s.early_leaf, "Probability of an early leaf")->capture_default_str();
  gen->add_option("--u-min", s.u_min, "Lower end of the weight factor U")->capture_default_str();

  auto* build = app.add_subcommand("build", "Write E, the Whitney squares and the clusters");
  common(build);
  auto* verify = app.add_subcommand("verify", "Check every lemma and measure the constants");
  common(verify);
  auto* ext_plane = app.add_subcommand("extend-plane", "Planar extension of random tree data, sampled on a grid");
  common(ext_plane);
  ext_plane->add_option("--grid", s.grid, "Samples per axis")->capture_default_str();
  auto* ext_tree = app.add_subcommand("extend-tree", "Tree extension through the planar operator");
  common(ext_tree);
  auto* exp = app.add_subcommand("experiment", "Norm-ratio experiment, CSV output");
  common(exp);
  exp->add_option("--trials", s.trials, "Trials per exponent")->capture_default_str();
  auto* bench = app.add_subcommand("bench", "Serial and parallel kernel timings");
  common(bench);

  // The config file belongs to the top-level app; accept it after the
  // subcommand too.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config" && i > 0) {
      std::rotate(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }
  if (s.workers > 0) omp_set_num_threads(s.workers);

  try {
    for (double p : s.ps)
      if (!(p > 1.0 && p <= 2.0)) throw InputError("p must lie in (1, 2]");
    if (gen->parsed()) return cmd_gen_tree(s);
    if (build->parsed()) return cmd_build(s);
    if (verify->parsed()) return cmd_verify(s);
    if (ext_plane->parsed()) return cmd_extend_plane(s);
    if (ext_tree->parsed()) return cmd_extend_tree(s);
    if (exp->parsed()) return cmd_experiment(s);
    if (bench->parsed()) return cmd_bench(s);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kVerifyFail;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
