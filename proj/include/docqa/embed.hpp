#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "docqa/corpus.hpp"
#include "docqa/util.hpp"

namespace docqa {

// Pyramidal histogram of characters. Each level s splits the word into s
// equal regions; a character at relative position p lands in region floor(p*s).
struct PhocConfig {
  std::vector<int> levels{1, 2, 3, 4, 5};
  std::string charset = "abcdefghijklmnopqrstuvwxyz0123456789";

  std::size_t dim() const;
  std::string describe() const;
};

// Binary PHOC of `word` (lowercased, characters outside the charset removed),
// L2-normalized. Throws UnembeddableToken when nothing is left.
Vector phoc_embed(std::string_view word, const PhocConfig& config = {});

// phoc_embed plus i.i.d. N(0, sigma^2) noise on every coordinate, re-normalized.
// sigma == 0 returns phoc_embed exactly.
Vector noisy_image_embed(std::string_view word, double sigma, std::uint64_t seed,
                         const PhocConfig& config = {});

// Maps question words and document word images into one space. Every output
// has unit L2 norm; implementations are immutable and safe to share across threads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const = 0;
  virtual Vector embed_text(std::string_view word) const = 0;
  virtual Vector embed_word_image(const Document& doc, const WordToken& word) const = 0;
  // Identifies the embedding configuration inside artifact fingerprints.
  virtual std::string fingerprint() const = 0;
};

// Noiseless PHOC for both modalities; word images are embedded from their transcription.
class PhocProvider final : public EmbeddingProvider {
 public:
  explicit PhocProvider(PhocConfig config = {}) : config_(std::move(config)) {}

  std::size_t dim() const override { return config_.dim(); }
  Vector embed_text(std::string_view word) const override;
  Vector embed_word_image(const Document& doc, const WordToken& word) const override;
  std::string fingerprint() const override;

 private:
  PhocConfig config_;
};

// Clean PHOC for question text, noisy PHOC for word images. The noise seed of
// a word image is derived from (seed, doc id, word id).
class NoisyPhocProvider final : public EmbeddingProvider {
 public:
  NoisyPhocProvider(double sigma, std::uint64_t seed, PhocConfig config = {});

  std::size_t dim() const override { return config_.dim(); }
  Vector embed_text(std::string_view word) const override;
  Vector embed_word_image(const Document& doc, const WordToken& word) const override;
  std::string fingerprint() const override;

  double sigma() const { return sigma_; }

 private:
  double sigma_;
  std::uint64_t seed_;
  PhocConfig config_;
};

// Externally computed vectors keyed by "t:<word>" (text) and
// "i:<doc_id>:<word_id>" (word images).
struct EmbeddingStore {
  std::size_t dim = 0;
  std::map<std::string, Vector> entries;

  static std::string text_key(std::string_view word);
  static std::string image_key(std::string_view doc_id, std::string_view word_id);

  const Vector& at(const std::string& key) const;
  void add(std::string key, Vector values);
};

// Binary layout (little endian): u32 dim, u64 count, count x {u32 len, key bytes},
// then count*dim float32 in key-table order.
void save_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path);
// JSON fallback {dim, entries:{key:[floats]}}.
void save_embedding_store_json(const EmbeddingStore& store, const std::filesystem::path& path);
// Paths ending in ".json" are read as JSON, anything else as binary. Vectors
// whose norm differs from 1 by more than 1e-6 are re-normalized.
EmbeddingStore read_embedding_store(const std::filesystem::path& path);

class StoreProvider final : public EmbeddingProvider {
 public:
  explicit StoreProvider(EmbeddingStore store);

  std::size_t dim() const override { return store_.dim; }
  Vector embed_text(std::string_view word) const override;
  // Prefers the image key; falls back to the text key when the word has a transcription.
  Vector embed_word_image(const Document& doc, const WordToken& word) const override;
  std::string fingerprint() const override { return fingerprint_; }

  const EmbeddingStore& store() const { return store_; }

 private:
  EmbeddingStore store_;
  std::string fingerprint_;
};

std::shared_ptr<const EmbeddingProvider> load_embedding_store(const std::filesystem::path& path);

}  // namespace docqa
