#pragma once

#include <functional>
#include <set>
#include <string>
#include <string_view>

#include "docqa/corpus.hpp"

namespace docqa {

using StopWordPredicate = std::function<bool(std::string_view)>;

class StopWordList {
 public:
  StopWordList() = default;
  explicit StopWordList(std::set<std::string, std::less<>> words) : words_(std::move(words)) {}

  // The list compiled in from data/stopwords_en.txt.
  static const StopWordList& english();
  // One word per line, '#' comments.
  static StopWordList parse(std::string_view text);

  bool contains(std::string_view word) const { return words_.find(word) != words_.end(); }
  std::size_t size() const { return words_.size(); }
  const std::set<std::string, std::less<>>& words() const { return words_; }
  // The predicate refers to this list, which must outlive it.
  StopWordPredicate predicate() const;

 private:
  std::set<std::string, std::less<>> words_;
};

// Sets stop_word on every word whose text matches the predicate (flags are
// never cleared, so the operation is idempotent). Words without text keep
// their external stop flag; a word with neither throws CorpusError.
void mark_stop_words(Document& doc, const StopWordPredicate& is_stop);
void mark_stop_words(Question& question, const StopWordPredicate& is_stop);
void mark_stop_words(Corpus& corpus, const StopWordPredicate& is_stop);

}  // namespace docqa
