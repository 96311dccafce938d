#include "sobext/io.hpp"

#include <fstream>
#include <ostream>

#include "sobext/errors.hpp"

namespace sobext {

Json tree_to_json(const WeightedTree& t) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes()) nodes.push_back({{"id", n.id}, {"weight", n.weight}});
  return {{"N", t.arity()}, {"epsilon", t.epsilon()}, {"nodes", std::move(nodes)}};
}

WeightedTree tree_from_json(const Json& j) {
  try {
    std::vector<std::pair<std::string, double>> w;
    for (const auto& n : j.at("nodes")) w.emplace_back(n.at("id").get<std::string>(), n.at("weight").get<double>());
    return WeightedTree::build(j.at("N").get<int>(), j.at("epsilon").get<double>(), std::move(w));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed tree document: ") + e.what());
  }
}

WeightedTree read_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return tree_from_json(j);
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << j.dump(2) << '\n';
}

Json planar_set_to_json(const PlanarSet& ps) {
  Json e2 = Json::array();
  for (const auto& x : ps.e2()) e2.push_back({x.x1, x.x2});
  return {{"delta", ps.delta()},
          {"e1", {{"first", 0.0}, {"step", ps.delta()}, {"count", ps.e1_count()}}},
          {"e2", std::move(e2)}};
}

Json cluster_dump(const Instance& inst, const std::vector<double>& ps) {
  const auto pairs = pair_sets(inst.ct, *inst.wd, inst.as);
  std::vector<std::vector<double>> rc;
  for (double p : ps) rc.push_back(pair_ratios(inst.ct, *inst.wd, pairs, p));
  Json out = Json::array();
  for (std::size_t c = 0; c < inst.ct.size(); ++c) {
    const auto& cl = inst.ct.cluster(static_cast<int>(c));
    Json r = Json::object();
    for (std::size_t k = 0; k < ps.size(); ++k) r[std::to_string(ps[k])] = rc[k][c];
    out.push_back({{"id", inst.tree.node(static_cast<NodeIndex>(c)).id},
                   {"weight", cl.weight},
                   {"y", {cl.y.x1, cl.y.x2}},
                   {"radius", cl.radius},
                   {"R_C", std::move(r)}});
  }
  return {{"kappa", inst.ct.kappa()}, {"K1", inst.ct.k1()}, {"K0", inst.ct.k0()}, {"clusters", std::move(out)}};
}

void write_decomposition_csv(std::ostream& os, const WhitneyDecomposition& wd, const PlanarSet& ps) {
  os << "level,ix,iy,type,boundary,z1,w1\n";
  os.precision(17);
  for (const auto& s : wd.squares())
    os << s.sq.level << ',' << s.sq.ix << ',' << s.sq.iy << ',' << to_string(s.type) << ',' << (s.boundary ? 1 : 0)
       << ',' << ps.e1_x(s.z) << ',' << ps.e1_x(s.w) << '\n';
}

Json verify_report_to_json(const VerifyReport& rep) {
  Json viol = Json::array();
  for (const auto& v : rep.tree_violations) viol.push_back({{"node", v.node}, {"message", v.message}});
  const auto& w = rep.whitney;
  const auto& b = rep.balls;
  const auto& c = rep.cluster_lemma;
  Json exps = Json::array();
  for (const auto& e : rep.exponents)
    exps.push_back({{"p", e.p},
                    {"max_R_C", e.max_pair_ratio},
                    {"patching_C_meas", {{"min", e.patching.min}, {"max", e.patching.max}}},
                    {"ball_estimate_ratio", {{"min", e.ball_estimate.min}, {"max", e.ball_estimate.max}}}});
  return {
      {"exact_ok", rep.exact_ok()},
      {"constants_ok", rep.constants_ok()},
      {"failures", rep.failures()},
      {"tree", {{"violations", std::move(viol)}}},
      {"lemma_psi",
       {{"order_preserving", rep.psi.order_preserving},
        {"K", rep.psi.k_measured},
        {"max_upper_ratio", rep.psi.max_upper_ratio},
        {"max_lower_ratio", rep.psi.max_lower_ratio}}},
      {"lemma_sep",
       {{"part1_inside_box", rep.sep.inside_box},
        {"part2_separated", rep.sep.separated},
        {"part2_height_bounds", rep.sep.height_bounds},
        {"part3_e2_spacing", rep.sep.e2_spacing},
        {"min_separation_over_delta", rep.sep.min_separation},
        {"max_e1_ratio", rep.sep.max_e1_ratio},
        {"min_e2_ratio", rep.sep.min_e2_ratio}}},
      {"whitney",
       {{"partition_exact", w.partition_exact},
        {"cz1", w.cz1},
        {"cz2", w.cz2},
        {"min_side", w.min_side},
        {"boundary_side", w.boundary_side},
        {"boundary_type_III", w.boundary_type},
        {"neighbors_symmetric", w.neighbors_symmetric},
        {"basepoints_in_K0Q", w.basepoints_in_k0q},
        {"squares", w.squares},
        {"type_counts", {w.type_count[0], w.type_count[1], w.type_count[2]}},
        {"boundary_squares", w.boundary_count},
        {"max_level", w.max_level},
        {"max_neighbors", w.max_neighbors},
        {"max_multiplicity", w.max_multiplicity},
        {"min_side_over_delta", w.min_side_over_delta},
        {"type3_ratio", {w.type3_ratio_min, w.type3_ratio_max}},
        {"dist_ratio", {w.dist_bd_min, w.dist_bd_max}},
        {"basepoint_K_max", w.basepoint_k0_max},
        {"basepoint_gap", {w.basepoint_gap_min, w.basepoint_gap_max}},
        {"pou_derivative_max", {w.pou_deriv_max[0], w.pou_deriv_max[1], w.pou_deriv_max[2]}}}},
      {"balls",
       {{"K1", rep.k1},
        {"mirrors_tree", b.mirrors_tree},
        {"B1", b.b1},
        {"B2", b.b2},
        {"B3", b.b3},
        {"B4", b.b4},
        {"B5", b.b5},
        {"B6", b.b6},
        {"Q0_in_root_ball", b.q0_in_root_ball},
        {"violation_count", b.violation_count},
        {"violations", b.violations},
        {"B4_constant", b.b4_constant},
        {"K0_disjoint_max", b.k0_disjoint_max},
        {"diam_ratio", {b.diam_ratio_min, b.diam_ratio_max}}}},
      {"cluster_lemma",
       {{"A_violations", c.a_violations},
        {"B_violations", c.b_violations},
        {"C_violations", c.c_violations},
        {"ambiguous_squares", c.ambiguous}}},
      {"exponents", std::move(exps)},
  };
}

void write_experiment_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "# ratios use quadrature seminorms and numerical ball averages; only their stability is assessable\n";
  os << "seed,trial,N,depth,epsilon,p,backend,rho_plane,rho_tree,quad_error\n";
  os.precision(17);
  for (const auto& r : rep.rows)
    os << r.seed << ',' << r.trial << ',' << rep.arity << ',' << rep.depth << ',' << rep.epsilon << ',' << rep.p << ','
       << rep.backend << ',' << r.rho_plane << ',' << r.rho_tree << ',' << r.quad_error << '\n';
}

}  // namespace sobext
