#include "docqa/retrieve.hpp"

#include <algorithm>
#include <exception>
#include <numeric>

#include "docqa/error.hpp"
#include "docqa/kernels.hpp"

namespace docqa {

void Stage::validate() const {
  if (!provider) throw ModelError("stage has no embedding provider");
  if (pca && pca->input_dim != provider->dim()) {
    throw ModelError("PCA input dimension " + std::to_string(pca->input_dim) +
                     " does not match embedding dimension " + std::to_string(provider->dim()));
  }
  aggregation.validate();
  if (aggregation.scheme == AggregationScheme::Fisher && aggregation.gmm->dim() != embedding_dim()) {
    throw ModelError("GMM dimension " + std::to_string(aggregation.gmm->dim()) +
                     " does not match projected embedding dimension " + std::to_string(embedding_dim()));
  }
}

std::size_t Stage::embedding_dim() const { return pca ? pca->output_dim : provider->dim(); }

std::size_t Stage::vector_dim() const { return aggregation.output_dim(embedding_dim()); }

std::string Stage::fingerprint() const {
  const std::string canonical = provider->fingerprint() + "|pca=" + (pca ? pca->fingerprint() : "off") +
                                "|agg=" + aggregation.describe();
  return hex64(fnv1a(canonical));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<Vector> embed_words(const Document& doc, std::span<const std::size_t> word_positions,
                                const Stage& stage) {
  std::vector<Vector> out;
  out.reserve(word_positions.size());
  for (std::size_t pos : word_positions) {
    Vector v;
    try {
      v = stage.provider->embed_word_image(doc, doc.words[pos]);
    } catch (const UnembeddableToken&) {
      continue;
    }
    out.push_back(stage.pca ? pca_transform(*stage.pca, v) : std::move(v));
  }
  return out;
}

std::vector<std::size_t> content_words(const Document& doc, std::size_t first_line, std::size_t last_line) {
  std::vector<std::size_t> out;
  for (std::size_t l = first_line; l <= last_line && l < doc.lines.size(); ++l) {
    for (std::size_t pos : doc.lines[l].words) {
      if (!doc.words[pos].stop_word) out.push_back(pos);
    }
  }
  return out;
}

std::vector<std::size_t> content_words(const Document& doc) {
  if (doc.lines.empty()) return {};
  return content_words(doc, 0, doc.lines.size() - 1);
}

namespace {

Vector aggregate_or_zero(std::span<const Vector> embeddings, const Stage& stage) {
  if (embeddings.empty()) return Vector(stage.vector_dim(), 0.0);
  return aggregate(embeddings, stage.aggregation).values;
}

}  // namespace

Vector document_vector(const Document& doc, const Stage& stage) {
  const auto words = content_words(doc);
  return aggregate_or_zero(embed_words(doc, words, stage), stage);
}

Vector snippet_vector(const Document& doc, const Snippet& snippet, const Stage& stage) {
  const auto words = content_words(doc, snippet.start_line, snippet.end_line);
  return aggregate_or_zero(embed_words(doc, words, stage), stage);
}

std::optional<Vector> question_vector(const Question& question, const Stage& stage) {
  std::vector<Vector> embedded;
  for (std::size_t i = 0; i < question.tokens.size(); ++i) {
    if (i < question.token_stop.size() && question.token_stop[i]) continue;
    Vector v;
    try {
      v = stage.provider->embed_text(question.tokens[i]);
    } catch (const UnembeddableToken&) {
      continue;
    }
    embedded.push_back(stage.pca ? pca_transform(*stage.pca, v) : std::move(v));
  }
  if (embedded.empty()) return std::nullopt;
  return aggregate(embedded, stage.aggregation).values;
}

DocumentIndex build_index(std::span<const Document> documents, const Stage& stage) {
  stage.validate();
  DocumentIndex index;
  index.fingerprint = stage.fingerprint();
  index.dim = stage.vector_dim();
  index.doc_ids.reserve(documents.size());
  for (const Document& d : documents) index.doc_ids.push_back(d.id);

  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(documents.size());
  std::vector<Vector> vectors(documents.size());
  std::vector<std::exception_ptr> errors(documents.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      vectors[i] = document_vector(documents[i], stage);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  index.vectors.reserve(documents.size() * index.dim);
  for (const Vector& v : vectors) {
    for (double x : v) index.vectors.push_back(static_cast<float>(x));
  }
  return index;
}

void save_index(const DocumentIndex& index, const std::filesystem::path& path) {
  std::string out;
  binary::put_string(out, index.fingerprint);
  binary::put_u32(out, static_cast<std::uint32_t>(index.dim));
  binary::put_u64(out, index.doc_ids.size());
  for (const std::string& id : index.doc_ids) binary::put_string(out, id);
  for (float v : index.vectors) binary::put_f32(out, v);
  write_file(path, out);
}

DocumentIndex load_index(const std::filesystem::path& path, const std::string& expected_fingerprint) {
  const std::string data = read_file(path);
  binary::Reader in(data, path.string());
  DocumentIndex index;
  index.fingerprint = in.string();
  if (!expected_fingerprint.empty() && index.fingerprint != expected_fingerprint) {
    throw FingerprintMismatch(expected_fingerprint, index.fingerprint);
  }
  index.dim = in.u32();
  const std::uint64_t count = in.u64();
  for (std::uint64_t i = 0; i < count; ++i) index.doc_ids.push_back(in.string());
  index.vectors.resize(count * index.dim);
  for (float& v : index.vectors) v = in.f32();
  if (!in.at_end()) throw Error(path.string() + ": trailing bytes after index vectors");
  return index;
}

std::vector<ScoredDocument> rank_documents(std::vector<ScoredDocument> scored, std::size_t n) {
  const auto better = [](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  n = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
  scored.resize(n);
  return scored;
}

RetrievalResult retrieve_documents(const DocumentIndex& index, const Question& question,
                                   const Stage& stage, std::size_t n) {
  if (n == 0) throw Error("number of proposals must be >= 1");
  const std::string expected = stage.fingerprint();
  if (index.fingerprint != expected) throw FingerprintMismatch(expected, index.fingerprint);

  RetrievalResult result;
  result.n = n;
  const std::optional<Vector> query = question_vector(question, stage);
  if (!query) {
    result.abstained = true;
    return result;
  }
  std::vector<double> scores(index.size());
  kernels::cosine_scores(index.vectors, index.dim, *query, scores);
  std::vector<ScoredDocument> scored;
  scored.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) scored.push_back({index.doc_ids[i], scores[i]});
  result.ranked = rank_documents(std::move(scored), n);
  return result;
}

namespace {

std::vector<ScoredSnippet> score_document_snippets(const Document& doc, const Vector& query,
                                                   const Stage& stage, SnippetWindow window) {
  std::vector<ScoredSnippet> out;
  if (doc.lines.empty()) return out;
  // Embed each content word once; snippets share lines.
  std::vector<std::optional<Vector>> embedded(doc.words.size());
  for (std::size_t pos : content_words(doc)) {
    try {
      Vector v = stage.provider->embed_word_image(doc, doc.words[pos]);
      embedded[pos] = stage.pca ? pca_transform(*stage.pca, v) : std::move(v);
    } catch (const UnembeddableToken&) {
    }
  }
  for (Snippet& s : enumerate_snippets(doc, window.window, window.step)) {
    std::vector<Vector> members;
    for (std::size_t pos : content_words(doc, s.start_line, s.end_line)) {
      if (embedded[pos]) members.push_back(*embedded[pos]);
    }
    const Vector v = aggregate_or_zero(members, stage);
    out.push_back({std::move(s), cosine_similarity(v, query)});
  }
  return out;
}

}  // namespace

AnswerResult extract_answer(std::span<const Document* const> proposals, const Question& question,
                            const Stage& stage, SnippetWindow window, std::size_t keep_top) {
  if (proposals.empty()) throw Error("extract_answer needs at least one document proposal");
  stage.validate();
  AnswerResult result;
  const std::optional<Vector> query = question_vector(question, stage);
  if (!query) {
    result.abstained = true;
    return result;
  }

  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(proposals.size());
  std::vector<std::vector<ScoredSnippet>> per_doc(proposals.size());
  std::vector<std::exception_ptr> errors(proposals.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      per_doc[i] = score_document_snippets(*proposals[i], *query, stage, window);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<ScoredSnippet> all;
  for (auto& v : per_doc) std::move(v.begin(), v.end(), std::back_inserter(all));
  if (all.empty()) {
    result.abstained = true;
    return result;
  }
  const auto better = [](const ScoredSnippet& a, const ScoredSnippet& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.snippet.doc_id != b.snippet.doc_id) return a.snippet.doc_id < b.snippet.doc_id;
    return a.snippet.start_line < b.snippet.start_line;
  };
  const std::size_t keep = std::max<std::size_t>(1, std::min(keep_top, all.size()));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  result.snippet = all.front().snippet;
  result.score = all.front().score;
  if (keep_top > 0) result.ranked_snippets.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
  return result;
}

QaOutcome answer_question(const Corpus& corpus, const DocumentIndex& index, const Question& question,
                          const PipelineConfig& config, std::size_t n) {
  QaOutcome out;
  out.retrieval = retrieve_documents(index, question, config.retriever, n);
  if (out.retrieval.abstained || out.retrieval.ranked.empty()) {
    out.answer.abstained = true;
    return out;
  }
  std::vector<const Document*> proposals;
  for (const ScoredDocument& s : out.retrieval.ranked) {
    const Document* doc = corpus.find_document(s.doc_id);
    if (!doc) throw Error("index refers to document '" + s.doc_id + "' missing from the corpus");
    proposals.push_back(doc);
  }
  out.answer = extract_answer(proposals, question, config.snippet, config.window);
  return out;
}

}  // namespace docqa
