#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "threadminer/embedding.hpp"
#include "threadminer/error.hpp"

using namespace threadminer;

namespace {

TrainParams small_params(std::size_t dims = 20) {
  TrainParams p;
  p.dims = dims;
  p.seed = 3;
  return p;
}

bool all_finite(const EmbeddingMatrix& e) {
  return std::all_of(e.data().begin(), e.data().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TEST_CASE("twin-context words end up closer than an unrelated word") {
  const auto docs = tmtest::twin_context_corpus(10000, 1);
  const auto vocab = build_vocabulary(docs, 1);
  const auto emb = train_skipgram(docs, vocab, small_params());
  const double ab = tmtest::ref_cosine(emb.vector("alpha"), emb.vector("beta"));
  const double ag = tmtest::ref_cosine(emb.vector("alpha"), emb.vector("gamma"));
  CHECK(ab > ag);
  CHECK(ab > 0.5);
}

TEST_CASE("training input errors") {
  const std::vector<TokenizedDoc> none;
  const std::vector<TokenizedDoc> docs{{"1", {"a", "b", "a"}}};
  const auto vocab = build_vocabulary(docs, 1);
  CHECK_THROWS_AS(train_skipgram(none, vocab, small_params()), Error);
  CHECK_THROWS_AS(train_skipgram(docs, Vocabulary{}, small_params()), Error);
  auto p = small_params();
  p.dims = 0;
  CHECK_THROWS_AS(train_skipgram(docs, vocab, p), Error);
  p = small_params();
  p.window = 0;
  CHECK_THROWS_AS(train_skipgram(docs, vocab, p), Error);
}

TEST_CASE("default dimension gives 100-long columns") {
  const auto docs = tmtest::twin_context_corpus(2000, 2);
  const auto vocab = build_vocabulary(docs, 1);
  TrainParams p;
  CHECK(p.dims == 100);
  CHECK(p.window == 10);
  p.epochs = 1;
  const auto emb = train_skipgram(docs, vocab, p);
  CHECK(emb.dims() == 100);
  CHECK(emb.size() == vocab.size());
  for (std::size_t i = 0; i < emb.size(); ++i) CHECK(emb.column(i).size() == 100);
  CHECK(emb.data().size() == 100 * vocab.size());
}

TEST_CASE("single worker training is reproducible") {
  const auto docs = tmtest::twin_context_corpus(5000, 4);
  const auto vocab = build_vocabulary(docs, 1);
  const auto a = train_skipgram(docs, vocab, small_params(12));
  const auto b = train_skipgram(docs, vocab, small_params(12));
  CHECK(a.data() == b.data());
  CHECK(embedding_fingerprint(a) == embedding_fingerprint(b));
  auto p = small_params(12);
  p.seed = 4;
  const auto c = train_skipgram(docs, vocab, p);
  CHECK(a.data() != c.data());
}

TEST_CASE("multi worker training stays finite") {
  const auto docs = tmtest::twin_context_corpus(5000, 5);
  const auto vocab = build_vocabulary(docs, 1);
  auto p = small_params(12);
  p.workers = 3;
  const auto e = train_skipgram(docs, vocab, p);
  CHECK(all_finite(e));
  CHECK(e.size() == vocab.size());
}

TEST_CASE("degenerate corpora produce finite vectors") {
  const std::vector<std::vector<TokenizedDoc>> corpora{
      {{"1", {"solo"}}},
      {{"1", {"x", "x", "x", "x", "x", "x", "x", "x"}}},
      {{"1", {"a"}}, {"2", {"b"}}, {"3", {}}},
      {{"1", {"a", "b"}}, {"2", {"oov", "a"}}},
  };
  for (const auto& docs : corpora) {
    const auto vocab = build_vocabulary(docs, 1);
    auto p = small_params(8);
    p.learning_rate = 5.0;  // deliberately hostile
    const auto e = train_skipgram(docs, vocab, p);
    CHECK(all_finite(e));
  }
}

TEST_CASE("epoch loss decreases over the first epochs") {
  const auto docs = tmtest::twin_context_corpus(10000, 6);
  const auto vocab = build_vocabulary(docs, 1);
  TrainReport rep;
  train_skipgram(docs, vocab, small_params(), &rep);
  REQUIRE(rep.epoch_loss.size() == 5);
  CHECK(rep.epoch_loss[1] <= rep.epoch_loss[0]);
  CHECK(rep.epoch_loss[2] <= rep.epoch_loss[1] * 1.05);
  for (auto n : rep.epoch_pairs) CHECK(n > 0);
}

TEST_CASE("nearest neighbours") {
  // columns: q, dup of q, orthogonal, opposite
  const auto emb = tmtest::make_embedding({"q", "dup", "orth", "opp"}, 2,
                                          {1, 1, 1, 1, -1, 1, -1, -1});
  const auto top = nearest_neighbors(emb, "q", 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].word == "dup");
  CHECK(top[0].score == doctest::Approx(1.0).epsilon(1e-12));

  const auto all = nearest_neighbors(emb, "q", 3);
  REQUIRE(all.size() == 3);
  CHECK(all[0].word == "dup");
  CHECK(all[1].word == "orth");
  CHECK(all[2].word == "opp");
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i].score <= all[i - 1].score);
  for (const auto& n : all) CHECK(n.word != "q");

  CHECK_THROWS_AS(nearest_neighbors(emb, "missing", 1), Error);
  try {
    nearest_neighbors(emb, "missing", 1);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
  CHECK_THROWS_AS(nearest_neighbors(emb, "q", 0), Error);
  CHECK_THROWS_AS(nearest_neighbors(emb, "q", 4), Error);
}

TEST_CASE("nearest neighbour ties follow vocabulary order") {
  const auto emb = tmtest::make_embedding({"q", "b", "a"}, 2, {1, 0, 0, 1, 0, 1});
  const auto top = nearest_neighbors(emb, "q", 2);
  CHECK(top[0].word == "b");
  CHECK(top[1].word == "a");
}

TEST_CASE("binary round trip is exact") {
  const auto emb = tmtest::random_embedding(40, 7, 8);
  std::stringstream ss;
  save_embedding_binary(emb, ss, "seed=8");
  std::string prov;
  const auto back = load_embedding_binary(ss, &prov);
  CHECK(prov == "seed=8");
  CHECK(back.dims() == 7);
  CHECK(back.vocab().words() == emb.vocab().words());
  CHECK(back.vocab().counts() == emb.vocab().counts());
  CHECK(back.data() == emb.data());

  std::string truncated = ss.str().substr(0, 10);
  std::istringstream bad(truncated);
  CHECK_THROWS_AS(load_embedding_binary(bad), Error);
  std::istringstream junk("not an embedding at all");
  CHECK_THROWS_AS(load_embedding_binary(junk), Error);
}

TEST_CASE("text round trip within 1e-6") {
  const auto emb = tmtest::random_embedding(40, 7, 9);
  std::stringstream ss;
  save_embedding_text(emb, ss);
  const auto header = ss.str().substr(0, ss.str().find('\n'));
  CHECK(header == "40 7");
  const auto back = load_embedding_text(ss);
  CHECK(back.vocab().words() == emb.vocab().words());
  CHECK(tmtest::max_abs_diff(back.data(), emb.data()) <= 1e-6);
}

TEST_CASE("text rows with the wrong length are rejected") {
  std::istringstream short_row("2 3\na 1 2 3\nb 1 2\n");
  CHECK_THROWS_AS(load_embedding_text(short_row), Error);
  std::istringstream long_row("2 3\na 1 2 3\nb 1 2 3 4\n");
  CHECK_THROWS_AS(load_embedding_text(long_row), Error);
  std::istringstream missing_row("2 3\na 1 2 3\n");
  CHECK_THROWS_AS(load_embedding_text(missing_row), Error);
  std::istringstream bad_number("1 2\na 1 x\n");
  CHECK_THROWS_AS(load_embedding_text(bad_number), Error);
  std::istringstream nan_value("1 2\na 1 nan\n");
  CHECK_THROWS_AS(load_embedding_text(nan_value), Error);
}

TEST_CASE("matrix construction checks") {
  CHECK_THROWS_AS(tmtest::make_embedding({"a"}, 2, {1}), Error);
  CHECK_THROWS_AS(tmtest::make_embedding({"a"}, 1, {std::nan("")}), Error);
  CHECK_THROWS_AS(tmtest::make_embedding({"a"}, 0, {}), Error);
  const auto e = tmtest::make_embedding({"a", "b"}, 1, {1, 2});
  CHECK(e.vector("b")[0] == 2);
  CHECK_THROWS_AS(e.vector("c"), Error);
}
