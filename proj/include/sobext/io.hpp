#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "sobext/verify.hpp"

namespace sobext {

using Json = nlohmann::ordered_json;

/// {"N", "epsilon", "nodes": [{"id", "weight"}, ...]} with ids in preorder.
Json tree_to_json(const WeightedTree& t);
/// Throws InputError on malformed documents or trees.
WeightedTree tree_from_json(const Json& j);

WeightedTree read_tree_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// delta, the E1 range and the E2 points.
Json planar_set_to_json(const PlanarSet& ps);

/// Clusters in tree order with weight, y_C, radius and R_C per exponent.
Json cluster_dump(const Instance& inst, const std::vector<double>& ps);

/// Rows level, ix, iy, type, boundary, z and w coordinates.
void write_decomposition_csv(std::ostream& os, const WhitneyDecomposition& wd, const PlanarSet& ps);

/// Lemma-by-lemma results and measured constants.
Json verify_report_to_json(const VerifyReport& rep);

/// One row per trial; a leading comment line records that the ratios come
/// from quadrature and numerical ball averages.
void write_experiment_csv(std::ostream& os, const ExperimentReport& rep);

}  // namespace sobext
