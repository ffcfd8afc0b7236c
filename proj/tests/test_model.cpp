#include <doctest.h>

#include <fstream>
#include <random>

#include "cenet/error.hpp"
#include "cenet/model.hpp"
#include "oracles.hpp"

using namespace cenet;

namespace {

// Random queries whose label agrees with their history. Labels alternate so
// both classes are present.
std::vector<Query> random_queries(std::mt19937_64& rng, int entities, int relations, int count) {
  std::uniform_int_distribution<int> e(0, entities - 1), r(0, 2 * relations - 1), c(1, 3);
  std::vector<Query> out;
  for (int i = 0; i < count; ++i) {
    Query q;
    q.subject = e(rng);
    q.predicate = r(rng);
    q.time = i;
    q.truth = e(rng);
    std::set<EntityId> hist;
    const int size = 1 + static_cast<int>(rng() % 4);
    while (static_cast<int>(hist.size()) < size) hist.insert(e(rng));
    if (i % 2 == 0) {
      hist.insert(q.truth);
    } else {
      hist.erase(q.truth);
    }
    for (auto o : hist) q.freq.push_back({o, static_cast<std::uint32_t>(c(rng))});
    q.label = contains(q.freq, q.truth) ? 1 : 0;
    out.push_back(q);
  }
  return out;
}

Matrix zeros_like(const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); }

double max_param_error(ModelParams& params, const std::function<double()>& f, const std::vector<std::string>& names) {
  double worst = 0.0;
  for (auto& p : params.store) {
    if (std::find(names.begin(), names.end(), p.name) == names.end()) continue;
    const Matrix analytic = p.grad;
    worst = std::max(worst, oracle::max_relative_error(p.value, analytic, f));
  }
  return worst;
}

}  // namespace

TEST_CASE("zero parameters reduce the scores to the copy term") {
  auto params = ModelParams::zeros({3, 1, 4});
  std::vector<Query> batch{{0, 0, 0, 1, {{1, 2}}, 1}};
  const auto his = score_historical(params, batch, 2.0);
  const auto nhis = score_nonhistorical(params, batch, 2.0);
  const auto z = z_transform(batch[0].freq, 2.0, 3);
  for (int o = 0; o < 3; ++o) {
    CHECK(his(0, o) == z[static_cast<std::size_t>(o)]);
    CHECK(nhis(0, o) == -z[static_cast<std::size_t>(o)]);
  }
}

TEST_CASE("scores decompose into similarity plus copy term") {
  std::mt19937_64 rng(1);
  ModelParams params({12, 3, 6}, 7);
  const auto batch = random_queries(rng, 12, 3, 5);
  const auto sim_his = score_historical(params, batch, 0.0);
  const auto sim_nhis = score_nonhistorical(params, batch, 0.0);
  const auto his = score_historical(params, batch, 2.0);
  const auto nhis = score_nonhistorical(params, batch, 2.0);
  for (std::size_t q = 0; q < batch.size(); ++q) {
    const auto z = z_transform(batch[q].freq, 2.0, 12);
    for (int o = 0; o < 12; ++o) {
      const auto i = static_cast<Eigen::Index>(q);
      CHECK(his(i, o) == sim_his(i, o) + z[static_cast<std::size_t>(o)]);
      CHECK(nhis(i, o) == sim_nhis(i, o) - z[static_cast<std::size_t>(o)]);
    }
  }
}

TEST_CASE("identical branch weights differ by exactly twice the copy term") {
  std::mt19937_64 rng(2);
  ModelParams params({10, 2, 5}, 3);
  params.value(params.nhis_weight) = params.value(params.his_weight);
  params.value(params.nhis_bias) = params.value(params.his_bias);
  const auto batch = random_queries(rng, 10, 2, 4);
  const Matrix diff = score_historical(params, batch, 2.0) - score_nonhistorical(params, batch, 2.0);
  for (std::size_t q = 0; q < batch.size(); ++q) {
    const auto z = z_transform(batch[q].freq, 2.0, 10);
    for (int o = 0; o < 10; ++o) {
      CHECK(diff(static_cast<Eigen::Index>(q), o) == doctest::Approx(2.0 * z[static_cast<std::size_t>(o)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("hand-evaluated scores with d = 2 and three entities") {
  auto params = ModelParams::zeros({3, 1, 2});
  params.value(params.entity) << 1.0, 0.0, 0.0, 1.0, 0.5, -0.5;
  params.value(params.relation) << 0.2, 0.1, -0.3, 0.4;
  params.value(params.his_weight) << 0.5, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 2.0;
  params.value(params.his_bias) << 0.1, -0.2;
  params.value(params.nhis_weight) << -0.5, 0.3, 0.0, 1.0, 0.7, 0.0, -1.0, 0.0;
  params.value(params.nhis_bias) << 0.0, 0.3;
  std::vector<Query> batch{{0, 0, 0, 1, {{2, 1}}, 0}};
  // x = s ++ p = [1, 0, 0.2, 0.1]
  const double x[4] = {1.0, 0.0, 0.2, 0.1};
  const double wh[2][4] = {{0.5, 0.0, 1.0, 0.0}, {0.0, -1.0, 0.0, 2.0}};
  const double wn[2][4] = {{-0.5, 0.3, 0.0, 1.0}, {0.7, 0.0, -1.0, 0.0}};
  const double bh[2] = {0.1, -0.2}, bn[2] = {0.0, 0.3};
  const double e[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {0.5, -0.5}};
  const double z[3] = {-2.0, -2.0, 2.0};
  double ah[2], an[2];
  for (int i = 0; i < 2; ++i) {
    double sh = bh[i], sn = bn[i];
    for (int j = 0; j < 4; ++j) {
      sh += wh[i][j] * x[j];
      sn += wn[i][j] * x[j];
    }
    ah[i] = std::tanh(sh);
    an[i] = std::tanh(sn);
  }
  const auto his = score_historical(params, batch, 2.0);
  const auto nhis = score_nonhistorical(params, batch, 2.0);
  for (int o = 0; o < 3; ++o) {
    CHECK(his(0, o) == doctest::Approx(ah[0] * e[o][0] + ah[1] * e[o][1] + z[o]).epsilon(1e-12));
    CHECK(nhis(0, o) == doctest::Approx(an[0] * e[o][0] + an[1] * e[o][1] - z[o]).epsilon(1e-12));
  }
}

TEST_CASE("out-of-range ids are bounds errors") {
  auto params = ModelParams::zeros({3, 1, 2});
  std::vector<Query> bad_subject{{3, 0, 0, 1, {}, 0}};
  std::vector<Query> bad_relation{{0, 2, 0, 1, {}, 0}};
  CHECK_THROWS_AS(score_historical(params, bad_subject, 2.0), BoundsError);
  CHECK_THROWS_AS(score_nonhistorical(params, bad_relation, 2.0), BoundsError);
  std::vector<Query> ok{{0, 1, 0, 1, {}, 0}};
  CHECK_NOTHROW(score_historical(params, ok, 2.0));
}

TEST_CASE("cross-entropy values") {
  Matrix zero = Matrix::Zero(1, 2);
  const std::vector<EntityId> t0{0}, t1{1};
  CHECK(loss_ce({zero, zero}, t1, Branches::both) == doctest::Approx(0.0));

  Matrix h(1, 2);
  h << 1.0, 0.0;
  const double e = std::exp(1.0);
  const double expected = -std::log(2.0 * e / (e + 1.0));
  CHECK(expected == doctest::Approx(-0.3799).epsilon(1e-3));
  CHECK(loss_ce({h, h}, t0, Branches::both) == doctest::Approx(expected).epsilon(1e-12));

  Matrix h2(2, 2);
  h2 << 1.0, 0.0, 1.0, 0.0;
  const std::vector<EntityId> t00{0, 0};
  CHECK(loss_ce({h2, h2}, t00, Branches::both) == doctest::Approx(2.0 * expected).epsilon(1e-12));

  CHECK(loss_ce({h, Matrix()}, t0, Branches::historical_only) == doctest::Approx(-std::log(e / (e + 1.0))));
  CHECK(loss_ce({Matrix(), h}, t1, Branches::nonhistorical_only) == doctest::Approx(-std::log(1.0 / (e + 1.0))));
}

TEST_CASE("combined distribution") {
  Matrix a = Matrix::Zero(1, 2);
  Matrix b(1, 2);
  b << std::log(3.0), 0.0;
  const auto p = combined_distribution({a, b}, Branches::both);
  CHECK(p(0, 0) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(0.375).epsilon(1e-12));
  const auto same = combined_distribution({b, b}, Branches::both);
  CHECK(same(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(combined_distribution({a, b}, Branches::nonhistorical_only)(0, 0) == doctest::Approx(0.75));
}

TEST_CASE("query representations are unit rows and react to history") {
  std::mt19937_64 rng(5);
  ModelParams params({15, 2, 8}, 11);
  auto batch = random_queries(rng, 15, 2, 6);
  batch.push_back(batch[0]);
  const auto v = query_representation(params, batch);
  for (Eigen::Index i = 0; i < v.rows(); ++i) CHECK(std::abs(v.row(i).norm() - 1.0) < 1e-6);
  CHECK(v.row(0) == v.row(6));

  Query empty = batch[0];
  empty.freq.clear();
  const std::vector<Query> pair{batch[0], empty};
  const auto w = query_representation(params, pair);
  CHECK((w.row(0) - w.row(1)).norm() > 1e-9);
}

TEST_CASE("positive sets") {
  const std::vector<Label> l{1, 1, 0};
  CHECK(positive_set(l, 0) == std::vector<std::size_t>{1});
  CHECK(positive_set(l, 2).empty());
  CHECK_THROWS_AS(positive_set(l, 3), ContractError);

  std::mt19937_64 rng(6);
  std::vector<Label> big(1024);
  for (auto& x : big) x = static_cast<Label>(rng() & 1u);
  for (std::size_t q = 0; q < big.size(); q += 37) {
    std::vector<std::size_t> expected;
    for (std::size_t m = 0; m < big.size(); ++m) {
      if (m != q && big[m] == big[q]) expected.push_back(m);
    }
    CHECK(positive_set(big, q) == expected);
  }
}

TEST_CASE("contrastive loss edge cases") {
  Matrix v(2, 2);
  v << 1.0, 0.0, 0.0, 1.0;
  const std::vector<Label> same{1, 1}, diff{1, 0}, one{1};
  CHECK(loss_supcon(v, same, 0.1) == doctest::Approx(0.0));
  CHECK(loss_supcon(v, diff, 0.1) == 0.0);
  CHECK(loss_supcon(v.topRows(1), one, 0.1) == 0.0);
  CHECK_THROWS_AS(loss_supcon(v, same, 0.0), ContractError);
}

TEST_CASE("contrastive loss matches a double-loop oracle") {
  Matrix v(3, 2);
  const double a0 = 0.0, a1 = 0.4, a2 = 2.0;
  v << std::cos(a0), std::sin(a0), std::cos(a1), std::sin(a1), std::cos(a2), std::sin(a2);
  const std::vector<Label> labels{1, 1, 0};
  const double tau = 0.1;
  double expected = 0.0;
  for (int q = 0; q < 3; ++q) {
    std::vector<int> pos;
    for (int k = 0; k < 3; ++k) {
      if (k != q && labels[k] == labels[q]) pos.push_back(k);
    }
    if (pos.empty()) continue;
    double denom = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (a != q) denom += std::exp(v.row(q).dot(v.row(a)) / tau);
    }
    double inner = 0.0;
    for (int k : pos) inner += std::log(std::exp(v.row(q).dot(v.row(k)) / tau) / denom);
    expected += -inner / static_cast<double>(pos.size());
  }
  CHECK(loss_supcon(v, labels, tau) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("contrastive loss is non-negative") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix v(6, 4);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = n(rng);
    v.rowwise().normalize();
    std::vector<Label> labels(6);
    for (auto& l : labels) l = static_cast<Label>(rng() & 1u);
    CHECK(loss_supcon(v, labels, 0.1) >= 0.0);
  }
}

TEST_CASE("loss_total") {
  CHECK(loss_total(1.3, 0.7, 1.0) == 1.3);
  CHECK(loss_total(1.3, 0.7, 0.0) == 0.7);
  CHECK(loss_total(1.0, 0.5, 0.2) == doctest::Approx(0.6));
  CHECK_THROWS_AS(loss_total(1.0, 0.5, 1.5), ContractError);
}

TEST_CASE("classifier output") {
  auto params = ModelParams::zeros({4, 1, 3});
  Matrix v(1, 3);
  v << 0.6, 0.0, 0.8;
  CHECK(classifier_probability(params, v)[0] == 0.5);
  CHECK(predicted_label(0.5));
  CHECK_FALSE(predicted_label(0.4999999));
  params.value(params.cls_weight) = 10.0 * v;
  CHECK(classifier_probability(params, v)[0] == doctest::Approx(0.99995).epsilon(1e-5));
}

TEST_CASE("cross-entropy gradient wrt scores") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 2.0);
    Matrix his(8, 20), nhis(8, 20);
    for (Eigen::Index i = 0; i < his.size(); ++i) {
      his.data()[i] = n(rng);
      nhis.data()[i] = n(rng);
    }
    std::vector<EntityId> truth(8);
    for (auto& t : truth) t = static_cast<EntityId>(rng() % 20);
    for (auto branches : {Branches::both, Branches::historical_only, Branches::nonhistorical_only}) {
      ContextScores s{branches == Branches::nonhistorical_only ? Matrix() : his,
                      branches == Branches::historical_only ? Matrix() : nhis};
      ContextScores g;
      loss_ce(s, truth, branches, &g);
      auto f = [&]() { return loss_ce(s, truth, branches); };
      if (branches != Branches::nonhistorical_only) CHECK(oracle::max_relative_error(s.his, g.his, f) < 1e-4);
      if (branches != Branches::historical_only) CHECK(oracle::max_relative_error(s.nhis, g.nhis, f) < 1e-4);
    }
  }
}

TEST_CASE("contrastive gradient wrt representations") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix v(8, 8);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = n(rng);
    v.rowwise().normalize();
    std::vector<Label> labels{1, 0, 1, 1, 0, 0, 1, 0};
    Matrix g;
    loss_supcon(v, labels, 0.1, &g);
    auto f = [&]() { return loss_supcon(v, labels, 0.1); };
    CHECK(oracle::max_relative_error(v, g, f) < 1e-4);
  }
}

TEST_CASE("parameter gradients of every loss match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    ModelParams params({20, 3, 8}, seed);
    const auto batch = random_queries(rng, 20, 3, 8);
    const auto encoder = params.encoder_names();

    SUBCASE("cross-entropy") {
      for (auto branches : {Branches::both, Branches::historical_only, Branches::nonhistorical_only}) {
        const StageOneOptions o{1.0, 2.0, 0.1, branches};
        params.store.zero_grad();
        stage1_loss(params, batch, o, true);
        auto f = [&]() { return stage1_loss(params, batch, o, false).total; };
        CHECK(max_param_error(params, f, encoder) < 1e-4);
      }
    }
    SUBCASE("contrastive") {
      const StageOneOptions o{0.0, 2.0, 0.1, Branches::both};
      params.store.zero_grad();
      stage1_loss(params, batch, o, true);
      auto f = [&]() { return stage1_loss(params, batch, o, false).total; };
      CHECK(max_param_error(params, f, encoder) < 1e-4);
    }
    SUBCASE("combined") {
      const StageOneOptions o{0.2, 2.0, 0.1, Branches::both};
      params.store.zero_grad();
      const auto parts = stage1_loss(params, batch, o, true);
      CHECK(parts.total == doctest::Approx(0.2 * parts.ce + 0.8 * parts.sup));
      auto f = [&]() { return stage1_loss(params, batch, o, false).total; };
      CHECK(max_param_error(params, f, encoder) < 1e-4);
    }
    SUBCASE("classifier") {
      params.value(params.cls_weight).setRandom();
      params.value(params.cls_bias)(0, 0) = 0.3;
      const auto v = query_representation(params, batch);
      std::vector<Label> labels;
      for (const auto& q : batch) labels.push_back(q.label);
      params.store.zero_grad();
      loss_bce(params, v, labels, true);
      auto f = [&]() { return loss_bce(params, v, labels, false); };
      CHECK(max_param_error(params, f, params.classifier_names()) < 1e-4);
    }
  }
}

TEST_CASE("stage-1 gradients leave the classifier alone") {
  std::mt19937_64 rng(4);
  ModelParams params({20, 3, 8}, 1);
  const auto batch = random_queries(rng, 20, 3, 8);
  stage1_loss(params, batch, StageOneOptions{}, true);
  CHECK(params.store.at("classifier.weight").grad.isZero());
  CHECK(params.store.at("classifier.bias").grad.isZero());
  CHECK_FALSE(params.store.at("entity_embedding").grad.isZero());
}

TEST_CASE("checkpoint round trip and metadata sidecar") {
  oracle::TempDir dir("model");
  auto m = make_model({9, 2, 4}, Hyper{0.3, 1.5, 0.2, Branches::historical_only}, 77);
  m.stage1_done = true;
  const auto path = dir.path / "m.bin";
  save_model(path, m);
  CHECK(std::filesystem::exists(metadata_path(path)));
  const auto back = load_model(path);
  CHECK(back.params.shape.entity_count == 9);
  CHECK(back.hyper.alpha == 0.3);
  CHECK(back.hyper.branches == Branches::historical_only);
  CHECK(back.seed == 77);
  CHECK(back.stage1_done);
  CHECK_FALSE(back.stage2_done);
  for (std::size_t i = 0; i < m.params.store.size(); ++i) CHECK(back.params.store[i].value == m.params.store[i].value);

  std::ofstream(dir.path / "junk.bin") << "garbage";
  CHECK_THROWS_AS(load_model(dir.path / "junk.bin"), Error);
}

TEST_CASE("initialisation bounds") {
  ModelParams params({30, 4, 16}, 5);
  const double bound = 1.0 / std::sqrt(16.0);
  for (const auto& p : params.store) {
    CHECK(p.value.cwiseAbs().maxCoeff() <= bound);
    if (p.name.find("bias") != std::string::npos) CHECK(p.value.isZero());
  }
  CHECK(params.value(params.relation).rows() == 8);
  CHECK(params.value(params.his_weight).cols() == 32);
  CHECK(params.value(params.freq_weight).cols() == 30);
  CHECK(params.value(params.mlp_w1).cols() == 48);
}
