/*
 * Copyright 2026 The robust-ce Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rce/data.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "gtest/gtest.h"
#include "rce/io.hpp"
#include "rce/train.hpp"

namespace rce {
namespace {

Schema xy_schema() {
  return Schema::from_json(json::parse(R"({"features":[{"name":"a"},{"name":"b","kind":"continuous"}],"label":"y"})"));
}

TEST(CsvTest, ParsesByHeaderName) {
  std::istringstream in("y,b,a\n0,2.5,1\n1,-3,0.25\n1,0,4e2\n");
  const Dataset d = parse_csv(in, xy_schema());
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.x[0], (FeatureVector{1, 2.5}));
  EXPECT_EQ(d.x[1], (FeatureVector{0.25, -3}));
  EXPECT_EQ(d.x[2], (FeatureVector{400, 0}));
  EXPECT_EQ(d.y, (std::vector<Label>{0, 1, 1}));
  EXPECT_EQ(d.num_classes, 2u);
}

TEST(CsvTest, ErrorsCarryLineNumbers) {
  std::istringstream missing("a,y\n1,0\n");
  EXPECT_THROW(parse_csv(missing, xy_schema()), std::invalid_argument);
  std::istringstream bad("a,b,y\n1,2,0\n1,x,1\n");
  try {
    parse_csv(bad, xy_schema(), "f.csv");
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream ragged("a,b,y\n1,2\n");
  EXPECT_THROW(parse_csv(ragged, xy_schema()), std::invalid_argument);
  std::istringstream label("a,b,y\n1,2,0.5\n");
  EXPECT_THROW(parse_csv(label, xy_schema()), std::invalid_argument);
}

TEST(CsvTest, RoundTripIsBitExact) {
  Dataset d = synth_binary(50, 0.3, 0.1, 2);
  d.x[0][0] = 0.1 + 0.2;  // not representable in short form
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream in(out.str());
  const Dataset back = parse_csv(in, schema_of(d));
  EXPECT_EQ(back.x, d.x);
  EXPECT_EQ(back.y, d.y);
  const Schema s = Schema::from_json(schema_of(d).to_json());
  EXPECT_EQ(s.features.size(), 2u);
}

TEST(CsvTest, OneHotGroupsChecked) {
  const Schema s = Schema::from_json(json::parse(
      R"({"features":[{"name":"a"},{"name":"c1","kind":"onehot","group":"c"},{"name":"c2","kind":"onehot","group":"c"}],"label":"y"})"));
  std::istringstream good("a,c1,c2,y\n5,1,0,0\n7,0,1,1\n");
  const Dataset d = parse_csv(good, s);
  EXPECT_EQ(d.onehot_groups().size(), 1u);
  const Dataset sc = scaled(d);
  EXPECT_EQ(sc.x[0], (FeatureVector{0, 1, 0}));
  EXPECT_EQ(sc.x[1], (FeatureVector{1, 0, 1}));
  EXPECT_NO_THROW(sc.validate());
  std::istringstream broken("a,c1,c2,y\n5,1,1,0\n");
  EXPECT_THROW(parse_csv(broken, s), std::invalid_argument);
}

TEST(ScaleTest, MinMaxAndInverse) {
  Dataset d;
  d.features = {{"a", FeatureKind::Continuous, ""}, {"b", FeatureKind::Continuous, ""}, {"c", FeatureKind::Continuous, ""}};
  d.x = {{1, -5, 3}, {3, 5, 3}, {2, 0, 3}};
  d.y = {0, 1, 0};
  const Scaler s = fit_scale(d);
  EXPECT_EQ(apply_scale(s, FeatureVector{1, -5, 3}), (FeatureVector{0, 0, 0}));
  EXPECT_EQ(apply_scale(s, FeatureVector{3, 5, 3}), (FeatureVector{1, 1, 0}));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const FeatureVector x{rng.uniform(1, 3), rng.uniform(-5, 5), 3};
    const FeatureVector back = inverse_scale(s, apply_scale(s, x));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(back[j], x[j], 1e-12);
  }
  const Dataset once = scaled(d);
  const Dataset twice = scaled(once);
  EXPECT_EQ(once.x, twice.x);
  EXPECT_THROW(apply_scale(s, FeatureVector{1}), std::invalid_argument);
}

TEST(SplitTest, SizesDisjointDeterministic) {
  Dataset d = synth_binary(100, 0.3, 0.1, 1);
  for (std::size_t i = 0; i < d.size(); ++i) d.x[i][0] = static_cast<double>(i);  // row ids
  const Split a = split(d, {0.5, 1.0, 7});
  EXPECT_EQ(a.d1_train.size(), 50u);
  EXPECT_EQ(a.d2_train.size(), 50u);
  EXPECT_EQ(a.d1_test.size(), 0u);
  const Split b = split(d, {0.5, 0.8, 7});
  EXPECT_EQ(b.d1_train.size(), 40u);
  EXPECT_EQ(b.d1_test.size(), 10u);
  std::set<double> ids;
  for (const Dataset* p : {&b.d1_train, &b.d1_test, &b.d2_train, &b.d2_test}) {
    for (const auto& row : p->x) ids.insert(row[0]);
  }
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_EQ(split(d, {0.5, 0.8, 7}).d1_train.x, b.d1_train.x);
  EXPECT_NE(split(d, {0.5, 0.8, 8}).d1_train.x, b.d1_train.x);
  EXPECT_THROW(split(d, {0.0, 0.8, 7}), std::invalid_argument);
}

TEST(SynthTest, DeterministicScaledSeparable) {
  EXPECT_EQ(synth_binary(80, 0.5, 0.05, 3).x, synth_binary(80, 0.5, 0.05, 3).x);
  EXPECT_THROW(synth_binary(0, 0.5, 0.05, 3), std::invalid_argument);
  EXPECT_THROW(synth_multiclass(0, 3, 1), std::invalid_argument);
  const Dataset d = synth_binary(400, 1.5, 0.05, 4);
  for (const auto& row : d.x) {
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  TrainConfig cfg;
  cfg.seed = 2;
  EXPECT_GE(accuracy(train(d, Architecture::for_data(d, {}), cfg), d), 0.95);
  const Dataset m = synth_multiclass(90, 3, 5);
  EXPECT_EQ(m.num_classes, 3u);
  EXPECT_EQ(std::count(m.y.begin(), m.y.end(), 2), 30);
}

TEST(ModelJsonTest, RoundTripIsBitExact) {
  Rng rng(9);
  const Model net = testing::random_network(rng, 3, {4}, 2);
  EXPECT_EQ(flatten(model_from_json(json::parse(to_json(net).dump()))), flatten(net));
  const Model nobias = testing::toy_binary_net();
  const Model back = model_from_json(json::parse(to_json(nobias).dump()));
  EXPECT_EQ(back.parameter_count(), 6u);
  const Model lr = Model::logistic({0.1 + 0.2, -1.0 / 3.0}, 0.7);
  const Model lr_back = model_from_json(to_json(lr));
  EXPECT_EQ(lr_back.type(), ModelType::Logistic);
  EXPECT_EQ(flatten(lr_back), flatten(lr));
  EXPECT_THROW(model_from_json(json::parse(R"({"type":"tree","layers":[]})")), std::invalid_argument);
}

TEST(RecordJsonTest, FieldsAndCeLines) {
  CounterfactualRecord r;
  r.x = {0.7, 0.5};
  r.x_prime = {0.7, 0.86};
  r.method = "mce-r";
  r.found = true;
  r.distance = 0.18;
  r.trace = {0.0, 0.1};
  r.shift = ShiftSet::linf(0.1);
  const json j = to_json(r);
  EXPECT_EQ(j["margin_trace"].size(), 2u);
  EXPECT_EQ(j["shift"]["p"], "inf");
  std::istringstream in(j.dump() + "\n\n{\"found\":false,\"x_prime\":null}\n{\"x_prime\":[1,2],\"target\":0}\n");
  const auto ces = parse_ce_lines(in);
  ASSERT_EQ(ces.size(), 2u);
  EXPECT_EQ(ces[0].x_prime, (FeatureVector{0.7, 0.86}));
  EXPECT_EQ(ces[1].target, 0);
  std::istringstream bad("{nope\n");
  EXPECT_THROW(parse_ce_lines(bad), std::invalid_argument);
  EXPECT_TRUE(number(std::nan("")).is_null());
}

}  // namespace
}  // namespace rce
