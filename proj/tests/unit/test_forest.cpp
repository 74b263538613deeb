#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "random.hpp"
#include "threadminer/error.hpp"
#include "threadminer/forest.hpp"

using namespace threadminer;
namespace rnd = threadminer::detail;

namespace {

struct Data {
  FeatureMatrix x;
  std::vector<std::size_t> y;
};

// Two gaussian blobs in 5 dimensions, separated along every axis.
Data blobs(std::size_t n, std::uint64_t seed, double gap = 4.0) {
  rnd::Rng rng(seed);
  Data d{FeatureMatrix(5), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 2;
    std::vector<double> row(5);
    for (auto& v : row) v = (c ? gap : 0.0) + rnd::normal(rng);
    d.x.push_row(row);
    d.y.push_back(c);
  }
  return d;
}

double train_accuracy(const Forest& f, const Data& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) ok += f.predict(d.x.row(i)) == d.y[i];
  return double(ok) / d.y.size();
}

}  // namespace

TEST_CASE("separable blobs are learned") {
  const auto d = blobs(200, 1);
  ForestParams p;
  p.trees = 50;
  const auto f = train_forest(d.x, d.y, 2, {}, p);
  CHECK(f.trees().size() == 50);
  CHECK(f.n_classes() == 2);
  CHECK(f.n_features() == 5);
  CHECK(train_accuracy(f, d) >= 0.99);
  const auto held = blobs(100, 2);
  CHECK(train_accuracy(f, held) >= 0.95);
}

TEST_CASE("one unbagged tree memorises distinct rows") {
  rnd::Rng rng(3);
  Data d{FeatureMatrix(3), {}};
  for (std::size_t i = 0; i < 150; ++i) {
    d.x.push_row(std::vector<double>{rnd::normal(rng), rnd::normal(rng), rnd::normal(rng)});
    d.y.push_back(rnd::uniform_index(rng, 3));
  }
  ForestParams p;
  p.trees = 1;
  p.bootstrap = false;
  const auto f = train_forest(d.x, d.y, 3, {}, p);
  CHECK(train_accuracy(f, d) == 1.0);
}

TEST_CASE("same seed gives the same forest regardless of workers") {
  const auto d = blobs(120, 4, 1.0);
  const auto held = blobs(200, 5, 1.0);
  ForestParams p;
  p.trees = 30;
  p.seed = 9;
  const auto a = train_forest(d.x, d.y, 2, {}, p);
  p.workers = 4;
  const auto b = train_forest(d.x, d.y, 2, {}, p);
  std::stringstream sa, sb;
  a.save(sa);
  b.save(sb);
  CHECK(sa.str() == sb.str());
  for (std::size_t i = 0; i < held.y.size(); ++i) {
    CHECK(a.predict(held.x.row(i)) == b.predict(held.x.row(i)));
    CHECK(a.vote_fractions(held.x.row(i)) == b.vote_fractions(held.x.row(i)));
  }
  p.workers = 1;
  p.seed = 10;
  const auto c = train_forest(d.x, d.y, 2, {}, p);
  std::stringstream sc;
  c.save(sc);
  CHECK(sc.str() != sa.str());
}

TEST_CASE("training input errors") {
  auto d = blobs(20, 6);
  ForestParams p;
  p.trees = 3;
  const std::vector<std::size_t> single(20, 0);
  CHECK_THROWS_AS(train_forest(d.x, single, 2, {}, p), Error);
  CHECK_THROWS_AS(train_forest(d.x, d.y, 1, {}, p), Error);
  auto nan = d;
  nan.x.data[7] = std::nan("");
  CHECK_THROWS_AS(train_forest(nan.x, nan.y, 2, {}, p), Error);
  const std::vector<std::size_t> short_y(5, 0);
  CHECK_THROWS_AS(train_forest(d.x, short_y, 2, {}, p), Error);
  std::vector<double> w(20, 1.0);
  w[3] = 0.0;
  CHECK_THROWS_AS(train_forest(d.x, d.y, 2, w, p), Error);
  const std::vector<double> short_w(3, 1.0);
  CHECK_THROWS_AS(train_forest(d.x, d.y, 2, short_w, p), Error);
}

TEST_CASE("sample weights move a pure-noise decision") {
  // identical features: only the class weights can decide
  Data d{FeatureMatrix(1), {}};
  for (std::size_t i = 0; i < 10; ++i) {
    d.x.push_row(std::vector<double>{1.0});
    d.y.push_back(i < 6 ? 0 : 1);
  }
  ForestParams p;
  p.trees = 1;
  p.bootstrap = false;
  CHECK(train_forest(d.x, d.y, 2, {}, p).predict(std::vector<double>{1.0}) == 0);
  std::vector<double> w(10, 1.0);
  for (std::size_t i = 6; i < 10; ++i) w[i] = 2.0;
  CHECK(train_forest(d.x, d.y, 2, w, p).predict(std::vector<double>{1.0}) == 1);
}

TEST_CASE("depth and leaf limits are honoured") {
  const auto d = blobs(200, 7, 0.5);
  ForestParams p;
  p.trees = 5;
  p.max_depth = 2;
  const auto shallow = train_forest(d.x, d.y, 2, {}, p);
  for (const auto& t : shallow.trees()) CHECK(t.depth() <= 2);
  p.max_depth = 0;
  p.trees = 1;
  p.min_leaf = 200;
  CHECK(train_forest(d.x, d.y, 2, {}, p).trees()[0].node_count() == 1);
}

TEST_CASE("vote fractions sum to one") {
  const auto d = blobs(100, 8, 1.0);
  ForestParams p;
  p.trees = 17;
  const auto f = train_forest(d.x, d.y, 2, {}, p);
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const auto v = f.vote_fractions(d.x.row(i));
    CHECK(v[0] + v[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("save and load round trip") {
  const auto d = blobs(100, 9, 1.0);
  ForestParams p;
  p.trees = 12;
  const auto f = train_forest(d.x, d.y, 2, {}, p);
  std::stringstream ss;
  f.save(ss);
  const auto g = Forest::load(ss);
  CHECK(g.trees().size() == f.trees().size());
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    CHECK(g.vote_fractions(d.x.row(i)) == f.vote_fractions(d.x.row(i)));
  }
  std::istringstream bad(ss.str().substr(0, ss.str().size() / 2));
  CHECK_THROWS_AS(Forest::load(bad), Error);
}
