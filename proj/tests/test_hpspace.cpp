// Copyright 2026 The adaptive-hpo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ahpo/error.hpp"
#include "ahpo/hpspace.hpp"

namespace ahpo::hpspace {
namespace {

ConfigSpace mixed_space() {
  return ConfigSpace({ParamSpec::log("lr", 1e-4, 1e-1, 1e-2),
                      ParamSpec::linear("dropout", 0.0, 0.5, 0.1),
                      ParamSpec::integer("epochs", 1, 20, 5),
                      ParamSpec::categorical("opt", {"a", "b", "c", "d"}, "b")});
}

TEST(Encode, LogBoundsMapToUnitEnds) {
  const auto p = ParamSpec::log("lr", 1e-4, 1e-1, 1e-2);
  EXPECT_DOUBLE_EQ(p.encode(1e-4), 0.0);
  EXPECT_DOUBLE_EQ(p.encode(1e-1), 1.0);
}

TEST(Encode, CategoricalBinMidpoint) {
  const auto p = ParamSpec::categorical("c", {"a", "b", "c", "d"}, "a");
  EXPECT_DOUBLE_EQ(p.encode(std::string("b")), 0.375);
}

TEST(Encode, IntegerBinMidpoint) {
  const auto p = ParamSpec::integer("n", 1, 20, 5);
  EXPECT_DOUBLE_EQ(p.encode(std::int64_t{1}), 0.5 / 20.0);
  EXPECT_DOUBLE_EQ(p.encode(std::int64_t{20}), 19.5 / 20.0);
}

TEST(Encode, OutOfDomainNamesParameter) {
  const auto space = mixed_space();
  auto c = space.default_configuration();
  c.set("lr", 0.5);
  try {
    space.encode(c);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("lr"), std::string::npos);
  }
}

TEST(Encode, RoundTrip) {
  const auto space = mixed_space();
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto c = sample_uniform(space, rng);
    const auto u = space.encode(c);
    for (double x : u) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
    }
    const auto back = space.decode(u);
    EXPECT_EQ(back.integer("epochs"), c.integer("epochs"));
    EXPECT_EQ(back.label("opt"), c.label("opt"));
    EXPECT_NEAR(back.number("lr"), c.number("lr"), 1e-12 * c.number("lr"));
    EXPECT_NEAR(back.number("dropout"), c.number("dropout"), 1e-12);
  }
}

TEST(Encode, DecodeClampsAndCoversBins) {
  const auto p = ParamSpec::integer("n", 0, 3, 0);
  EXPECT_EQ(std::get<std::int64_t>(p.decode(0.0)), 0);
  EXPECT_EQ(std::get<std::int64_t>(p.decode(1.0)), 3);
  EXPECT_EQ(std::get<std::int64_t>(p.decode(0.26)), 1);
}

TEST(Spec, Invariants) {
  EXPECT_THROW(ParamSpec::log("lr", 0.0, 1.0, 0.5).validate(), DomainError);
  EXPECT_THROW(ParamSpec::linear("x", 1.0, 1.0, 1.0).validate(), DomainError);
  EXPECT_THROW(ParamSpec::categorical("c", {"a"}, "a").validate(), DomainError);
  EXPECT_THROW(ParamSpec::linear("", 0.0, 1.0, 0.5).validate(), DomainError);
  EXPECT_THROW(ParamSpec::linear("x", 0.0, 1.0, 2.0).validate(), DomainError);
  EXPECT_THROW(ConfigSpace(std::vector<ParamSpec>{}), DomainError);
  EXPECT_THROW(ConfigSpace({ParamSpec::linear("x", 0, 1, 0), ParamSpec::linear("x", 0, 1, 0)}),
               DomainError);
}

TEST(SampleUniform, DegenerateInteger) {
  const ConfigSpace space({ParamSpec::integer("k", 3, 3, 3)});
  Rng rng(1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_uniform(space, rng).integer("k"), 3);
}

TEST(SampleUniform, Deterministic) {
  const auto space = mixed_space();
  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_uniform(space, a), sample_uniform(space, b));
}

TEST(SampleUniform, LogUniformMedian) {
  // Median of log-uniform on [1e-4, 1e-1] is 10^-2.5.
  const ConfigSpace space({ParamSpec::log("lr", 1e-4, 1e-1, 1e-2)});
  Rng rng(2024);
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(sample_uniform(space, rng).number("lr"));
  std::nth_element(v.begin(), v.begin() + 5000, v.end());
  EXPECT_GE(v[5000], 2.8e-3);
  EXPECT_LE(v[5000], 3.6e-3);
}

TEST(Restrict, TopKByValue) {
  const ConfigSpace space({ParamSpec::log("lr", 1e-4, 1e-1, 1e-2),
                           ParamSpec::log("wd", 1e-6, 1e-1, 1e-4),
                           ParamSpec::integer("mem", 20, 500, 200)});
  const auto anchor = space.default_configuration();
  const auto r = restrict_top_k(space, {{"lr", 0.7}, {"wd", 0.05}, {"mem", 0.2}}, 2, anchor);
  EXPECT_EQ(r.subspace.free_names(), (std::vector<std::string>{"lr", "mem"}));
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Restrict, TiesUseDeclarationOrder) {
  const ConfigSpace space({ParamSpec::linear("a", 0, 1, 0), ParamSpec::linear("b", 0, 1, 0),
                           ParamSpec::linear("c", 0, 1, 0)});
  const auto r = restrict_top_k(space, {{"a", 0.3}, {"b", 0.3}, {"c", 0.3}}, 1,
                                space.default_configuration());
  EXPECT_EQ(r.subspace.free_names(), std::vector<std::string>{"a"});
}

TEST(Restrict, ClampsWithWarning) {
  const ConfigSpace space({ParamSpec::linear("a", 0, 1, 0), ParamSpec::linear("b", 0, 1, 0),
                           ParamSpec::linear("c", 0, 1, 0)});
  const auto r = restrict_top_k(space, {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}, 5,
                                space.default_configuration());
  EXPECT_EQ(r.subspace.free_dim(), 3u);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_THROW(restrict_top_k(space, {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}, 0,
                              space.default_configuration()),
               DomainError);
}

TEST(Restrict, ScaleInvariant) {
  const auto space = mixed_space();
  const std::map<std::string, double> imp{{"lr", 0.4}, {"dropout", 0.1}, {"epochs", 0.3},
                                          {"opt", 0.2}};
  std::map<std::string, double> scaled;
  for (const auto& [k, v] : imp) scaled[k] = 7.5 * v;
  for (std::size_t k = 1; k <= 4; ++k) {
    EXPECT_EQ(restrict_top_k(space, imp, k, space.default_configuration()).subspace.free_names(),
              restrict_top_k(space, scaled, k, space.default_configuration())
                  .subspace.free_names());
  }
}

TEST(Restrict, ImportanceMassRule) {
  const auto space = mixed_space();
  const std::map<std::string, double> imp{{"lr", 0.5}, {"dropout", 0.05}, {"epochs", 0.3},
                                          {"opt", 0.15}};
  EXPECT_EQ(k_for_importance_mass(space, imp, 0.75), 2u);
  EXPECT_EQ(k_for_importance_mass(space, imp, 0.5), 1u);
  EXPECT_EQ(k_for_importance_mass(space, imp, 1.0), 4u);
}

TEST(Subspace, ComposeKeepsAnchor) {
  const auto space = mixed_space();
  auto anchor = space.default_configuration();
  anchor.set("epochs", std::int64_t{17});
  const Subspace sub(space, {"lr", "opt"}, anchor);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto c = sample_uniform(sub, rng);
    EXPECT_TRUE(sub.contains(c));
    EXPECT_EQ(c.integer("epochs"), 17);
    EXPECT_EQ(c.number("dropout"), anchor.number("dropout"));
  }
  auto off = anchor;
  off.set("dropout", 0.3);
  EXPECT_FALSE(sub.contains(off));
  EXPECT_TRUE(sub.contains(sub.project(off)));
  EXPECT_THROW(Subspace(space, {}, anchor), DomainError);
  EXPECT_THROW(Subspace(space, {"nope"}, anchor), DomainError);
}

TEST(Json, SpaceRoundTripIsLossless) {
  const auto space = mixed_space();
  const auto j = space.to_json();
  EXPECT_EQ(ConfigSpace::from_json(j), space);
  EXPECT_EQ(ConfigSpace::from_json(nlohmann::json::parse(j.dump())), space);
  const Subspace sub(space, {"lr"}, space.default_configuration());
  EXPECT_EQ(Subspace::from_json(nlohmann::json::parse(sub.to_json().dump())), sub);
}

}  // namespace
}  // namespace ahpo::hpspace
