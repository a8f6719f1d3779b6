#include "docqa/stopwords.hpp"

#include <cctype>

#include "docqa/error.hpp"
#include "stopwords_data.hpp"

namespace docqa {

const StopWordList& StopWordList::english() {
  static const StopWordList list = parse(detail::kEnglishStopWords);
  return list;
}

StopWordList StopWordList::parse(std::string_view text) {
  std::set<std::string, std::less<>> words;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') {
      std::string word = normalize_token(line);
      if (!word.empty()) words.insert(std::move(word));
    }
    pos = end + 1;
  }
  return StopWordList(std::move(words));
}

StopWordPredicate StopWordList::predicate() const {
  return [this](std::string_view w) { return contains(w); };
}

void mark_stop_words(Document& doc, const StopWordPredicate& is_stop) {
  for (WordToken& w : doc.words) {
    if (w.text) {
      if (is_stop(*w.text)) w.stop_word = true;
    } else if (!w.stop_hint) {
      throw CorpusError("document '" + doc.id + "': word '" + w.id +
                        "' has no text and no stop flag; cannot classify");
    }
  }
}

void mark_stop_words(Question& question, const StopWordPredicate& is_stop) {
  question.token_stop.resize(question.tokens.size(), false);
  for (std::size_t i = 0; i < question.tokens.size(); ++i) {
    if (is_stop(question.tokens[i])) question.token_stop[i] = true;
  }
}

void mark_stop_words(Corpus& corpus, const StopWordPredicate& is_stop) {
  for (Document& d : corpus.documents) mark_stop_words(d, is_stop);
  for (Question& q : corpus.questions) mark_stop_words(q, is_stop);
}

}  // namespace docqa
