#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docqa/aggregate.hpp"
#include "docqa/corpus.hpp"
#include "docqa/embed.hpp"
#include "docqa/pca.hpp"

namespace docqa {

// Everything needed to turn a bag of words into an aggregate vector:
// embedding provider, optional PCA, aggregation scheme.
struct Stage {
  std::shared_ptr<const EmbeddingProvider> provider;
  std::shared_ptr<const PcaModel> pca;
  AggregateConfig aggregation;

  void validate() const;
  std::size_t embedding_dim() const;
  std::size_t vector_dim() const;
  std::string fingerprint() const;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Embeds (and PCA-projects) the given words of `doc`. Stop words must be filtered by the caller.
std::vector<Vector> embed_words(const Document& doc, std::span<const std::size_t> word_positions,
                                const Stage& stage);
// Content words of `doc` on lines [first_line, last_line].
std::vector<std::size_t> content_words(const Document& doc, std::size_t first_line,
                                       std::size_t last_line);
std::vector<std::size_t> content_words(const Document& doc);

// Aggregate of all content words; the zero vector when there are none.
Vector document_vector(const Document& doc, const Stage& stage);
Vector snippet_vector(const Document& doc, const Snippet& snippet, const Stage& stage);
// nullopt when the question has no embeddable content token.
std::optional<Vector> question_vector(const Question& question, const Stage& stage);

struct DocumentIndex {
  std::string fingerprint;
  std::size_t dim = 0;
  std::vector<std::string> doc_ids;
  // Row-major, one float32 row per document.
  std::vector<float> vectors;

  std::size_t size() const { return doc_ids.size(); }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
};

DocumentIndex build_index(std::span<const Document> documents, const Stage& stage);

// Binary, little endian: {u32 len, fingerprint}, u32 dim, u64 count,
// count x {u32 len, doc_id}, count*dim float32.
void save_index(const DocumentIndex& index, const std::filesystem::path& path);
// Throws FingerprintMismatch when `expected_fingerprint` is non-empty and differs.
DocumentIndex load_index(const std::filesystem::path& path,
                         const std::string& expected_fingerprint = {});

struct ScoredDocument {
  std::string doc_id;
  double score = 0.0;
};

struct RetrievalResult {
  // Descending score, ties by ascending doc_id.
  std::vector<ScoredDocument> ranked;
  std::size_t n = 0;
  // Set when the question had no content words; `ranked` is then empty.
  bool abstained = false;
};

// Sorts (doc_id, score) pairs by the ranking rule and keeps the first n.
std::vector<ScoredDocument> rank_documents(std::vector<ScoredDocument> scored, std::size_t n);

RetrievalResult retrieve_documents(const DocumentIndex& index, const Question& question,
                                   const Stage& stage, std::size_t n);

struct SnippetWindow {
  std::size_t window = 2;
  std::size_t step = 1;
};

struct ScoredSnippet {
  Snippet snippet;
  double score = 0.0;
};

struct AnswerResult {
  std::optional<Snippet> snippet;
  double score = 0.0;
  // Best candidates in rank order, at most `keep_top` entries.
  std::vector<ScoredSnippet> ranked_snippets;
  bool abstained = false;
};

// Scores every sliding-window snippet of every proposal against the question
// and returns the argmax; ties go to (doc_id, start_line) ascending.
AnswerResult extract_answer(std::span<const Document* const> proposals, const Question& question,
                            const Stage& stage, SnippetWindow window = {},
                            std::size_t keep_top = 0);

struct PipelineConfig {
  Stage retriever;
  Stage snippet;
  SnippetWindow window;
};

struct QaOutcome {
  RetrievalResult retrieval;
  AnswerResult answer;
};

// Document retrieval with n proposals, then snippet extraction over them.
QaOutcome answer_question(const Corpus& corpus, const DocumentIndex& index,
                          const Question& question, const PipelineConfig& config,
                          std::size_t n = 5);

}  // namespace docqa
