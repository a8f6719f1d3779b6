#include <cmath>
#include <random>

#include "docqa/embed.hpp"
#include "docqa/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using docqa::Vector;

namespace {
double norm(const Vector& v) { return std::sqrt(docqa::dot(v, v)); }
}  // namespace

TEST_CASE("default PHOC has 540 dimensions") {
  CHECK(docqa::PhocConfig{}.dim() == 540);
  CHECK(docqa::phoc_embed("word").size() == 540);
}

TEST_CASE("PHOC of a single character") {
  const Vector v = docqa::phoc_embed("a");
  // One bin per level: the first region of every level holds 'a'.
  std::size_t offset = 0;
  std::size_t set = 0;
  for (int s = 1; s <= 5; ++s) {
    CHECK(v[offset] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
    offset += static_cast<std::size_t>(s) * 36;
  }
  for (double x : v) set += x != 0.0 ? 1 : 0;
  CHECK(set == 5);
  CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("PHOC matches the region-occupancy oracle") {
  std::mt19937_64 rng(17);
  const std::string chars = "abcdefghijklmnopqrstuvwxyz0123456789";
  for (int t = 0; t < 300; ++t) {
    std::string w;
    for (int i = std::uniform_int_distribution<int>(1, 14)(rng); i > 0; --i) w += chars[rng() % chars.size()];
    const Vector a = docqa::phoc_embed(w);
    const Vector b = testsupport::phoc_oracle(w);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("characters outside the charset are ignored") {
  CHECK(docqa::phoc_embed("O'Neil!") == docqa::phoc_embed("oneil"));
  CHECK_THROWS_AS(docqa::phoc_embed("?!-"), docqa::UnembeddableToken);
}

TEST_CASE("PHOC is order sensitive and prefix-similar") {
  CHECK(docqa::phoc_embed("abc") != docqa::phoc_embed("cba"));
  const Vector e = docqa::phoc_embed("embedding");
  CHECK(docqa::dot(e, docqa::phoc_embed("embedded")) > docqa::dot(e, docqa::phoc_embed("zurich")));
}

TEST_CASE("noisy embedding") {
  CHECK(docqa::noisy_image_embed("river", 0.0, 4) == docqa::phoc_embed("river"));
  CHECK(docqa::noisy_image_embed("river", 0.1, 4) == docqa::noisy_image_embed("river", 0.1, 4));
  CHECK(docqa::noisy_image_embed("river", 0.1, 4) != docqa::noisy_image_embed("river", 0.1, 5));
  CHECK(norm(docqa::noisy_image_embed("river", 0.3, 4)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(docqa::noisy_image_embed("river", -1.0, 4), docqa::ModelError);
}

TEST_CASE("small noise keeps a word closest to its own clean embedding") {
  std::mt19937_64 rng(23);
  std::vector<std::string> vocab;
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  while (vocab.size() < 50) {
    std::string w;
    for (int i = std::uniform_int_distribution<int>(4, 9)(rng); i > 0; --i) w += letters[rng() % 26];
    if (std::find(vocab.begin(), vocab.end(), w) == vocab.end()) vocab.push_back(w);
  }
  const std::string& target = vocab[0];
  const Vector clean = docqa::phoc_embed(target);
  Vector mean(clean.size(), 0.0);
  for (int t = 0; t < 1000; ++t) {
    const Vector v = docqa::noisy_image_embed(target, 0.05, 1000 + static_cast<std::uint64_t>(t));
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i] / 1000.0;
  }
  const double own = testsupport::cosine_oracle(mean, clean);
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    CHECK(own > testsupport::cosine_oracle(mean, docqa::phoc_embed(vocab[i])));
  }
}

TEST_CASE("providers return unit vectors") {
  const auto doc = testsupport::make_document("d", {{"alpha", "beta", "c3po"}});
  docqa::PhocProvider phoc;
  docqa::NoisyPhocProvider noisy(0.2, 9);
  for (const auto& w : doc.words) {
    CHECK(norm(phoc.embed_word_image(doc, w)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(norm(noisy.embed_word_image(doc, w)) == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Question text is never noised.
  CHECK(noisy.embed_text("alpha") == phoc.embed_text("alpha"));
  CHECK(noisy.embed_word_image(doc, doc.words[0]) != phoc.embed_word_image(doc, doc.words[0]));
  CHECK(phoc.fingerprint() != noisy.fingerprint());
  CHECK(noisy.fingerprint() != docqa::NoisyPhocProvider(0.2, 10).fingerprint());
}

TEST_CASE("embedding store lookups") {
  docqa::EmbeddingStore store;
  store.dim = 8;
  for (int i = 0; i < 3; ++i) {
    Vector v(8, 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    store.add(docqa::EmbeddingStore::text_key("w" + std::to_string(i)), v);
  }
  docqa::StoreProvider p(store);
  CHECK(p.dim() == 8);
  CHECK(p.embed_text("w1")[1] == 1.0);
  try {
    p.embed_text("w9");
    FAIL("expected MissingEmbedding");
  } catch (const docqa::MissingEmbedding& e) {
    CHECK(e.key() == "t:w9");
  }
  CHECK_THROWS_AS(store.add("t:bad", Vector(16, 0.25)), docqa::ModelError);
}

TEST_CASE("image keys win over the text fallback") {
  auto doc = testsupport::make_document("d", {{"alpha", "beta"}});
  docqa::EmbeddingStore store;
  store.dim = 2;
  store.add(docqa::EmbeddingStore::text_key("alpha"), {1.0, 0.0});
  store.add(docqa::EmbeddingStore::image_key("d", "w0"), {0.0, 1.0});
  docqa::StoreProvider p(store);
  CHECK(p.embed_word_image(doc, doc.words[0]) == Vector{0.0, 1.0});
  CHECK_THROWS_AS(p.embed_word_image(doc, doc.words[1]), docqa::MissingEmbedding);
  doc.words[1].text = "alpha";
  CHECK(p.embed_word_image(doc, doc.words[1]) == Vector{1.0, 0.0});
}

TEST_CASE("store round trip") {
  docqa::EmbeddingStore store;
  store.dim = 4;
  // Unit vectors with float-representable coordinates survive float32 storage exactly.
  store.add("t:a", {0.5, 0.5, 0.5, 0.5});
  store.add("t:b", {0.0, 0.6, 0.8, 0.0});
  store.add("i:d:w0", {1.0, 0.0, 0.0, 0.0});
  testsupport::TempDir dir;
  docqa::save_embedding_store(store, dir.path() / "store.bin");
  docqa::save_embedding_store_json(store, dir.path() / "store.json");
  for (const char* name : {"store.bin", "store.json"}) {
    const auto back = docqa::read_embedding_store(dir.path() / name);
    REQUIRE(back.entries.size() == 3);
    for (const auto& [k, v] : store.entries) {
      for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(back.at(k)[i] - v[i]) < 1e-7);
    }
  }
  // JSON keeps full double precision.
  docqa::EmbeddingStore odd;
  odd.dim = 3;
  odd.add("t:x", {0.1, 0.2, std::sqrt(1.0 - 0.05)});
  docqa::save_embedding_store_json(odd, dir.path() / "odd.json");
  const auto odd_back = docqa::read_embedding_store(dir.path() / "odd.json");
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(odd_back.at("t:x")[i] - odd.at("t:x")[i]) < 1e-12);
}

TEST_CASE("store mixing dimensions fails to load") {
  testsupport::TempDir dir;
  docqa::write_file(dir.path() / "mixed.json",
                    R"({"dim":8,"entries":{"t:a":[1,0,0,0,0,0,0,0],"t:b":[1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}})");
  CHECK_THROWS_AS(docqa::read_embedding_store(dir.path() / "mixed.json"), docqa::ModelError);
  docqa::write_file(dir.path() / "broken.bin", std::string("\x08\x00\x00\x00", 4));
  CHECK_THROWS_AS(docqa::read_embedding_store(dir.path() / "broken.bin"), docqa::Error);
}
