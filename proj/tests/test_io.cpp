#include <sstream>

#include "doctest.h"
#include "sobext/errors.hpp"
#include "sobext/io.hpp"

using namespace sobext;

TEST_CASE("tree JSON round trip") {
  const WeightedTree t = random_tree({.arity = 3, .depth = 2, .epsilon = 0.01}, 5);
  const Json j = tree_to_json(t);
  const WeightedTree u = tree_from_json(j);
  REQUIRE(u.size() == t.size());
  CHECK(u.arity() == t.arity());
  CHECK(u.epsilon() == t.epsilon());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = static_cast<NodeIndex>(i);
    CHECK(u.node(v).id == t.node(v).id);
    CHECK(u.weight(v) == t.weight(v));
  }
  // Text form survives a parse exactly.
  CHECK(tree_to_json(tree_from_json(Json::parse(j.dump(2)))).dump(2) == j.dump(2));
}

TEST_CASE("same seed gives identical documents") {
  const auto a = tree_to_json(random_tree({.arity = 2, .depth = 3, .epsilon = 0.02}, 11)).dump(2);
  const auto b = tree_to_json(random_tree({.arity = 2, .depth = 3, .epsilon = 0.02}, 11)).dump(2);
  const auto c = tree_to_json(random_tree({.arity = 2, .depth = 3, .epsilon = 0.02}, 12)).dump(2);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("malformed tree documents are input errors") {
  CHECK_THROWS_AS(tree_from_json(Json::parse(R"({"N": 2})")), InputError);
  CHECK_THROWS_AS(tree_from_json(Json::parse(R"({"N": 2, "epsilon": 0.01, "nodes": [{"id": ""}]})")), InputError);
  CHECK_THROWS_AS(tree_from_json(Json::parse(R"({"N": "two", "epsilon": 0.01, "nodes": []})")), InputError);
  // Missing parent of "01".
  CHECK_THROWS_AS(tree_from_json(Json::parse(
                      R"({"N": 2, "epsilon": 0.01, "nodes": [{"id": "", "weight": 1}, {"id": "01", "weight": 1e-4}]})")),
                  InputError);
  CHECK_THROWS_AS(read_tree_file("/nonexistent/tree.json"), InputError);
}

TEST_CASE("decomposition CSV has one row per square") {
  const Instance inst = Instance::build(random_tree({.arity = 2, .depth = 1, .epsilon = 0.02}, 2));
  std::ostringstream os;
  write_decomposition_csv(os, *inst.wd, inst.ps);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "level,ix,iy,type,boundary,z1,w1");
  std::size_t rows = 0, boundary = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string f[7];
    for (auto& x : f) std::getline(ls, x, ',');
    if (f[4] == "1") {
      ++boundary;
      CHECK(f[3] == "III");
    }
  }
  CHECK(rows == inst.wd->size());
  CHECK(boundary > 0);
}

TEST_CASE("cluster dump and planar set") {
  const Instance inst = Instance::build(random_tree({.arity = 2, .depth = 1, .epsilon = 0.02}, 2));
  const Json d = cluster_dump(inst, {1.5});
  REQUIRE(d["clusters"].size() == inst.ct.size());
  CHECK(d["clusters"][0]["id"] == "");
  CHECK(d["clusters"][0]["weight"].get<double>() == 1.0);
  CHECK(d["K1"].get<double>() == inst.ct.k1());
  const Json e = planar_set_to_json(inst.ps);
  CHECK(e["e2"].size() == inst.ps.e2_count());
  CHECK(e["delta"].get<double>() == inst.ps.delta());
}
