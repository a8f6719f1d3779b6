#include "docqa/tfidf.hpp"

#include <cmath>

#include "docqa/error.hpp"

namespace docqa {

TfIdfRetriever::TfIdfRetriever(std::span<const Document> documents) {
  std::map<std::string, std::size_t> df;
  std::vector<std::map<std::string, double>> tf;
  for (const Document& doc : documents) {
    std::map<std::string, double> counts;
    for (const WordToken& w : doc.words) {
      if (w.stop_word) continue;
      if (!w.text) {
        throw CorpusError("document '" + doc.id + "': word '" + w.id +
                          "' has no transcription; TF-IDF needs transcribed documents");
      }
      counts[*w.text] += 1.0;
    }
    for (const auto& [term, c] : counts) ++df[term];
    doc_ids_.push_back(doc.id);
    tf.push_back(std::move(counts));
  }
  const double m = static_cast<double>(documents.size());
  for (const auto& [term, d] : df) idf_[term] = std::log(m / static_cast<double>(d));
  for (auto& counts : tf) {
    double norm = 0.0;
    for (auto& [term, weight] : counts) {
      weight *= idf_[term];
      norm += weight * weight;
    }
    norms_.push_back(std::sqrt(norm));
    weights_.push_back(std::move(counts));
  }
}

double TfIdfRetriever::idf(const std::string& term) const {
  auto it = idf_.find(term);
  return it == idf_.end() ? 0.0 : it->second;
}

RetrievalResult TfIdfRetriever::retrieve(const Question& question, std::size_t n) const {
  if (n == 0) throw Error("number of proposals must be >= 1");
  RetrievalResult result;
  result.n = n;
  std::map<std::string, double> query;
  for (std::size_t i = 0; i < question.tokens.size(); ++i) {
    if (i < question.token_stop.size() && question.token_stop[i]) continue;
    query[question.tokens[i]] += 1.0;
  }
  if (query.empty()) {
    result.abstained = true;
    return result;
  }
  double qnorm = 0.0;
  for (auto& [term, weight] : query) {
    weight *= idf(term);
    qnorm += weight * weight;
  }
  qnorm = std::sqrt(qnorm);

  std::vector<ScoredDocument> scored;
  scored.reserve(doc_ids_.size());
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    double s = 0.0;
    if (qnorm > 0.0 && norms_[d] > 0.0) {
      for (const auto& [term, weight] : query) {
        if (auto it = weights_[d].find(term); it != weights_[d].end()) s += weight * it->second;
      }
      s /= qnorm * norms_[d];
    }
    scored.push_back({doc_ids_[d], s});
  }
  result.ranked = rank_documents(std::move(scored), n);
  return result;
}

RetrievalResult tfidf_retrieve(std::span<const Document> documents, const Question& question,
                               std::size_t n) {
  return TfIdfRetriever(documents).retrieve(question, n);
}

}  // namespace docqa
