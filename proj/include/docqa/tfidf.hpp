#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "docqa/corpus.hpp"
#include "docqa/retrieve.hpp"

namespace docqa {

// Bag-of-words baseline over gold transcriptions: weights tf(t,d) * log(M/df(t)),
// cosine ranking, same tie-break as the embedding retriever.
class TfIdfRetriever {
 public:
  // Throws CorpusError if a content word has no transcription.
  explicit TfIdfRetriever(std::span<const Document> documents);

  RetrievalResult retrieve(const Question& question, std::size_t n) const;
  double idf(const std::string& term) const;
  std::size_t size() const { return doc_ids_.size(); }

 private:
  std::vector<std::string> doc_ids_;
  std::map<std::string, double> idf_;
  std::vector<std::map<std::string, double>> weights_;
  std::vector<double> norms_;
};

RetrievalResult tfidf_retrieve(std::span<const Document> documents, const Question& question,
                               std::size_t n);

}  // namespace docqa
