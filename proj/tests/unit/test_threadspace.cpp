#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "random.hpp"
#include "threadminer/error.hpp"
#include "threadminer/threadspace.hpp"

using namespace threadminer;
using Vec = std::vector<double>;

namespace {

// x=(1,0), y=(0,1), n1=(-2,-3), n2=(-1,-5), h=(0.5,-1)
EmbeddingMatrix tiny() {
  return tmtest::make_embedding({"x", "y", "n1", "n2", "h"}, 2,
                                {1, 0, 0, 1, -2, -3, -1, -5, 0.5, -1});
}

}  // namespace

TEST_CASE("average projection examples") {
  const auto e = tiny();
  CHECK(project_avg({"t", {"h"}}, e) == Vec{0.5, -1.0});
  CHECK(project_avg({"t", {"x", "y"}}, e) == Vec{0.5, 0.5});
  CHECK(project_avg({"t", {"x", "x", "y", "nope"}}, e)[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("max projection examples") {
  const auto e = tiny();
  CHECK(project_max({"t", {"x", "y"}}, e) == Vec{1, 1});
  CHECK(project_max({"t", {"n1", "n2"}}, e) == Vec{-1, -3});
  CHECK(project_max({"t", {"h"}}, e) == Vec{0.5, -1.0});
}

TEST_CASE("full projection concatenates") {
  const auto e = tiny();
  const auto tv = project_thread({"t", {"x", "y", "oov"}}, e);
  CHECK(tv.full == Vec{0.5, 0.5, 1, 1});
  CHECK(tv.in_vocab_count == 2);
  CHECK(tv.dims() == 2);
  CHECK(Vec(tv.avg().begin(), tv.avg().end()) == Vec{0.5, 0.5});
  CHECK(Vec(tv.max().begin(), tv.max().end()) == Vec{1, 1});
  const auto single = project_thread({"t", {"h"}}, e);
  CHECK(single.full == Vec{0.5, -1, 0.5, -1});

  const auto big = tmtest::random_embedding(30, 100, 1);
  CHECK(project_thread(tmtest::random_doc(big, 10, 0.2, 2, "b"), big).full.size() == 200);
}

TEST_CASE("a thread with no known token is unprojectable") {
  const auto e = tiny();
  const TokenizedDoc doc{"lost", {"nope", "never"}};
  CHECK_THROWS_AS(project_avg(doc, e), UnprojectableThread);
  CHECK_THROWS_AS(project_max(doc, e), UnprojectableThread);
  try {
    project_thread(doc, e);
    FAIL("expected error");
  } catch (const UnprojectableThread& u) {
    CHECK(u.thread_id() == "lost");
  }
  CHECK_THROWS_AS(project_thread({"empty", {}}, e), UnprojectableThread);
}

TEST_CASE("cosine examples") {
  CHECK(cosine_similarity(Vec{3, 4}, Vec{3, 4}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(Vec{1, 0}, Vec{0, 1}) == 0.0);
  CHECK(cosine_similarity(Vec{1, 2}, Vec{2, 1}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(cosine_similarity(Vec{1, 0}, Vec{-1, 0}) == -1.0);
  CHECK_THROWS_AS(cosine_similarity(Vec{0, 0}, Vec{1, 0}), Error);
  CHECK_THROWS_AS(cosine_similarity(Vec{1, 0}, Vec{1, 0, 0}), Error);
}

TEST_CASE("projections match the loop reference on random docs") {
  const auto e = tmtest::random_embedding(50, 8, 77);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto doc = tmtest::random_doc(e, 1 + s % 30, 0.25, 1000 + s, "d");
    const auto tv = project_thread(doc, e);
    CHECK(tmtest::max_abs_diff(project_avg(doc, e), tmtest::ref_avg(doc, e)) <= 1e-12);
    CHECK(tmtest::max_abs_diff(project_max(doc, e), tmtest::ref_max(doc, e)) <= 1e-12);
    CHECK(tmtest::max_abs_diff(tv.full, tmtest::ref_full(doc, e)) <= 1e-12);
    for (std::size_t k = 0; k < tv.dims(); ++k) CHECK(tv.max()[k] >= tv.avg()[k]);
  }
}

TEST_CASE("token order does not matter") {
  const auto e = tmtest::random_embedding(50, 8, 78);
  threadminer::detail::Rng rng(3);
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto doc = tmtest::random_doc(e, 20, 0.1, 2000 + s, "d");
    const auto a = project_thread(doc, e);
    threadminer::detail::shuffle(doc.tokens.begin(), doc.tokens.end(), rng);
    const auto b = project_thread(doc, e);
    CHECK(tmtest::max_abs_diff(a.full, b.full) <= 1e-12);
    CHECK(a.in_vocab_count == b.in_vocab_count);
  }
}

TEST_CASE("cosine is symmetric and scale invariant") {
  threadminer::detail::Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    Vec a(16), b(16), a2(16);
    for (std::size_t k = 0; k < 16; ++k) {
      a[k] = threadminer::detail::normal(rng);
      b[k] = threadminer::detail::normal(rng);
      a2[k] = 2 * a[k];
    }
    const double s = cosine_similarity(a, b);
    CHECK(s == doctest::Approx(cosine_similarity(b, a)).epsilon(1e-12));
    CHECK(std::abs(s - cosine_similarity(a2, b)) <= 1e-12);
    CHECK(std::abs(s - tmtest::ref_cosine(a, b)) <= 1e-12);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("weights scale vectors before pooling") {
  const auto e = tiny();
  const Vec w{2, 1, 1, 1, 1};
  const auto tv = project_thread({"t", {"x", "y"}}, e, w);
  CHECK(tv.full == Vec{1, 0.5, 2, 1});
  CHECK_THROWS_AS(project_thread({"t", {"x"}}, e, Vec{1, 2}), Error);
}
