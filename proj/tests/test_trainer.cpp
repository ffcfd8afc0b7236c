#include <doctest.h>

#include <random>

#include "cenet/error.hpp"
#include "cenet/inference.hpp"
#include "cenet/synth.hpp"
#include "cenet/trainer.hpp"

using namespace cenet;

namespace {

struct Fixture {
  Dataset ds;
  std::vector<Query> queries;
  explicit Fixture(double repeat = 0.6, std::uint64_t seed = 1) {
    SynthSpec spec;
    spec.entity_count = 30;
    spec.relation_count = 3;
    spec.timestamp_count = 20;
    spec.quads_per_snapshot = 15;
    spec.repeat_probability = repeat;
    spec.seed = seed;
    ds = generate(spec).dataset;
    queries = split_queries(ds, Split::train, true);
  }
};

TrainOptions small_options(std::int64_t e1, std::int64_t e2) {
  TrainOptions o;
  o.batch = 64;
  o.adam.lr = 0.01;
  o.epochs1 = e1;
  o.epochs2 = e2;
  return o;
}

Model small_model(const Dataset& ds, std::uint64_t seed = 3) {
  return make_model({ds.vocab.entity_count, ds.vocab.relation_count, 12}, Hyper{}, seed);
}

}  // namespace

TEST_CASE("zero epochs keep the initial parameters") {
  Fixture f;
  auto model = small_model(f.ds);
  const auto before = model.params.store.value_checksum(model.params.encoder_names());
  const auto losses = train_stage1(model, f.queries, small_options(0, 0));
  CHECK(losses.empty());
  CHECK(model.params.store.value_checksum(model.params.encoder_names()) == before);
}

TEST_CASE("seeded training is repeatable") {
  Fixture f;
  auto a = small_model(f.ds);
  auto b = small_model(f.ds);
  const auto la = train_stage1(a, f.queries, small_options(3, 0));
  const auto lb = train_stage1(b, f.queries, small_options(3, 0));
  REQUIRE(la.size() == 3);
  for (std::size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].total == lb[i].total);
    CHECK(la[i].ce == lb[i].ce);
    CHECK(la[i].sup == lb[i].sup);
  }
  const auto names = a.params.encoder_names();
  CHECK(a.params.store.value_checksum(names) == b.params.store.value_checksum(names));
}

TEST_CASE("loss falls every epoch on a repeating stream") {
  Fixture f(1.0, 4);
  auto model = small_model(f.ds);
  const auto losses = train_stage1(model, f.queries, small_options(5, 0));
  REQUIRE(losses.size() == 5);
  for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i].total < losses[i - 1].total);
}

TEST_CASE("stage 1 leaves the classifier untouched") {
  Fixture f;
  auto model = small_model(f.ds);
  model.params.value(model.params.cls_weight).setConstant(0.25);
  train_stage1(model, f.queries, small_options(2, 0));
  CHECK(model.params.value(model.params.cls_weight) == Matrix::Constant(1, 12, 0.25));
  CHECK(model.stage1_done);
}

TEST_CASE("stage 2 needs stage 1 and only moves the classifier") {
  Fixture f;
  auto model = small_model(f.ds);
  CHECK_THROWS_AS(train_stage2(model, f.queries, small_options(0, 2)), ContractError);
  train_stage1(model, f.queries, small_options(2, 0));
  const auto names = model.params.encoder_names();
  const auto before = model.params.store.value_checksum(names);
  const auto cls_before = model.params.store.value_checksum(model.params.classifier_names());
  train_stage2(model, f.queries, small_options(0, 3));
  CHECK(model.params.store.value_checksum(names) == before);
  CHECK(model.params.store.value_checksum(model.params.classifier_names()) != cls_before);
  CHECK(model.stage2_done);
}

TEST_CASE("classifier separates two caps on the sphere") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.25);
  const int d = 8, count = 400;
  Matrix features(count, d);
  std::vector<Label> labels(count);
  for (int i = 0; i < count; ++i) {
    const bool positive = i % 2 == 0;
    for (int j = 0; j < d; ++j) features(i, j) = n(rng);
    features(i, 0) += positive ? 1.0 : -1.0;
    features.row(i).normalize();
    labels[static_cast<std::size_t>(i)] = positive ? 1 : 0;
  }
  auto params = ModelParams::zeros({2, 1, d});
  TrainOptions o = small_options(0, 20);
  o.batch = 32;
  fit_classifier(params, features, labels, o, 1);
  const auto probs = classifier_probability(params, features);
  int correct = 0;
  for (int i = 0; i < count; ++i) correct += predicted_label(probs[static_cast<std::size_t>(i)]) == (labels[static_cast<std::size_t>(i)] == 1);
  CHECK(static_cast<double>(correct) / count >= 0.95);
}

TEST_CASE("single-label training data predicts that label everywhere") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix features(100, 6);
  for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = n(rng);
  features.rowwise().normalize();
  for (Label target : {Label{0}, Label{1}}) {
    auto params = ModelParams::zeros({2, 1, 6});
    std::vector<Label> labels(100, target);
    fit_classifier(params, features, labels, small_options(0, 20), 5);
    for (double p : classifier_probability(params, features)) CHECK(predicted_label(p) == (target == 1));
  }
}

TEST_CASE("bad batch size is a config error") {
  Fixture f;
  auto model = small_model(f.ds);
  auto o = small_options(1, 0);
  o.batch = 0;
  CHECK_THROWS_AS(train_stage1(model, f.queries, o), ConfigError);
}

TEST_CASE("early stopping halts on a flat validation score") {
  Fixture f;
  auto model = small_model(f.ds);
  auto o = small_options(10, 0);
  o.early_stop_patience = 2;
  int calls = 0;
  const auto losses = train_stage1(model, f.queries, o, [&](const Model&) {
    ++calls;
    return 1.0;
  });
  CHECK(losses.size() == 3);
  CHECK(calls == 3);
}

TEST_CASE("represent_all matches one-shot representations") {
  Fixture f;
  auto model = small_model(f.ds);
  const auto chunked = represent_all(model.params, f.queries, 7);
  const auto whole = query_representation(model.params, f.queries);
  CHECK((chunked - whole).cwiseAbs().maxCoeff() < 1e-12);
}
