#include "docqa/embed.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>

#include "docqa/error.hpp"
#include "json.hpp"

namespace docqa {

std::size_t PhocConfig::dim() const {
  std::size_t regions = 0;
  for (int s : levels) regions += static_cast<std::size_t>(s);
  return regions * charset.size();
}

std::string PhocConfig::describe() const {
  std::string out = "levels=";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(levels[i]);
  }
  return out + ";charset=" + charset;
}

Vector phoc_embed(std::string_view word, const PhocConfig& config) {
  std::array<int, 256> slot;
  slot.fill(-1);
  for (std::size_t i = 0; i < config.charset.size(); ++i) {
    slot[static_cast<unsigned char>(config.charset[i])] = static_cast<int>(i);
  }
  std::vector<int> chars;
  chars.reserve(word.size());
  for (char c : word) {
    int s = slot[static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(c)))];
    if (s >= 0) chars.push_back(s);
  }
  if (chars.empty()) throw UnembeddableToken(std::string(word));

  const std::size_t n = chars.size();
  const std::size_t alphabet = config.charset.size();
  Vector v(config.dim(), 0.0);
  std::size_t offset = 0;
  for (int level : config.levels) {
    if (level < 1) throw ModelError("PHOC levels must be >= 1");
    const std::size_t s = static_cast<std::size_t>(level);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t region = k * s / n;  // floor((k/n) * s)
      v[offset + region * alphabet + static_cast<std::size_t>(chars[k])] = 1.0;
    }
    offset += s * alphabet;
  }
  const double norm = l2_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

Vector noisy_image_embed(std::string_view word, double sigma, std::uint64_t seed,
                         const PhocConfig& config) {
  if (!(sigma >= 0.0)) throw ModelError("noise sigma must be >= 0");
  Vector v = phoc_embed(word, config);
  if (sigma == 0.0) return v;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& x : v) x += noise(rng);
  const double norm = l2_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

namespace {

const std::string& require_text(const Document& doc, const WordToken& word) {
  if (!word.text) {
    throw Error("word '" + word.id + "' in document '" + doc.id +
                "' has no transcription; the PHOC provider embeds images from text");
  }
  return *word.text;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vector unit(const Vector& v) {
  const double norm = l2_norm(v);
  Vector out(v);
  for (double& x : out) x /= norm;
  return out;
}

}  // namespace

Vector PhocProvider::embed_text(std::string_view word) const { return phoc_embed(word, config_); }

Vector PhocProvider::embed_word_image(const Document& doc, const WordToken& word) const {
  return phoc_embed(require_text(doc, word), config_);
}

std::string PhocProvider::fingerprint() const { return "phoc[" + config_.describe() + "]"; }

NoisyPhocProvider::NoisyPhocProvider(double sigma, std::uint64_t seed, PhocConfig config)
    : sigma_(sigma), seed_(seed), config_(std::move(config)) {
  if (!(sigma >= 0.0)) throw ModelError("noise sigma must be >= 0");
}

Vector NoisyPhocProvider::embed_text(std::string_view word) const {
  return phoc_embed(word, config_);
}

Vector NoisyPhocProvider::embed_word_image(const Document& doc, const WordToken& word) const {
  const std::uint64_t seed =
      Fnv1a().update(seed_).update(doc.id).update(std::string_view("\x1f", 1)).update(word.id).digest();
  return noisy_image_embed(require_text(doc, word), sigma_, seed, config_);
}

std::string NoisyPhocProvider::fingerprint() const {
  return "phoc-noisy[" + config_.describe() + ";sigma=" + format_double(sigma_) +
         ";seed=" + std::to_string(seed_) + "]";
}

std::string EmbeddingStore::text_key(std::string_view word) { return "t:" + std::string(word); }

std::string EmbeddingStore::image_key(std::string_view doc_id, std::string_view word_id) {
  return "i:" + std::string(doc_id) + ":" + std::string(word_id);
}

const Vector& EmbeddingStore::at(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw MissingEmbedding(key);
  return it->second;
}

void EmbeddingStore::add(std::string key, Vector values) {
  if (entries.empty() && dim == 0) dim = values.size();
  if (values.size() != dim) {
    throw ModelError("embedding '" + key + "' has dimension " + std::to_string(values.size()) +
                     ", store dimension is " + std::to_string(dim));
  }
  const double norm = l2_norm(values);
  if (norm == 0.0 || !std::isfinite(norm)) throw ModelError("embedding '" + key + "' has zero or non-finite norm");
  if (std::abs(norm - 1.0) > 1e-6) {
    for (double& x : values) x /= norm;
  }
  entries.insert_or_assign(std::move(key), std::move(values));
}

void save_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::string out;
  binary::put_u32(out, static_cast<std::uint32_t>(store.dim));
  binary::put_u64(out, store.entries.size());
  for (const auto& [key, v] : store.entries) binary::put_string(out, key);
  for (const auto& [key, v] : store.entries) {
    for (double x : v) binary::put_f32(out, static_cast<float>(x));
  }
  write_file(path, out);
}

void save_embedding_store_json(const EmbeddingStore& store, const std::filesystem::path& path) {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [key, v] : store.entries) entries[key] = v;
  nlohmann::json doc = {{"dim", store.dim}, {"entries", std::move(entries)}};
  write_file(path, doc.dump());
}

EmbeddingStore read_embedding_store(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  EmbeddingStore store;
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(data);
      store.dim = doc.at("dim").get<std::size_t>();
      for (const auto& [key, values] : doc.at("entries").items()) {
        store.add(key, values.get<Vector>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ModelError(path.string() + ": malformed embedding store: " + e.what());
    }
    return store;
  }

  binary::Reader in(data, path.string());
  store.dim = in.u32();
  const std::uint64_t count = in.u64();
  std::vector<std::string> keys;
  keys.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) keys.push_back(in.string());
  for (std::uint64_t i = 0; i < count; ++i) {
    Vector v(store.dim);
    for (double& x : v) x = in.f32();
    store.add(std::move(keys[i]), std::move(v));
  }
  if (!in.at_end()) throw ModelError(path.string() + ": trailing bytes after embedding vectors");
  return store;
}

StoreProvider::StoreProvider(EmbeddingStore store) : store_(std::move(store)) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(store_.dim));
  for (const auto& [key, v] : store_.entries) {
    h.update(key);
    for (double x : v) h.update(std::bit_cast<std::uint64_t>(x));
  }
  fingerprint_ = "store[" + h.hex() + "]";
}

Vector StoreProvider::embed_text(std::string_view word) const {
  return unit(store_.at(EmbeddingStore::text_key(word)));
}

Vector StoreProvider::embed_word_image(const Document& doc, const WordToken& word) const {
  const std::string key = EmbeddingStore::image_key(doc.id, word.id);
  if (auto it = store_.entries.find(key); it != store_.entries.end()) return unit(it->second);
  if (word.text) {
    if (auto it = store_.entries.find(EmbeddingStore::text_key(*word.text)); it != store_.entries.end()) {
      return unit(it->second);
    }
  }
  throw MissingEmbedding(key);
}

std::shared_ptr<const EmbeddingProvider> load_embedding_store(const std::filesystem::path& path) {
  return std::make_shared<StoreProvider>(read_embedding_store(path));
}

}  // namespace docqa
