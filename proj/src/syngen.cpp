#include "docqa/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_set>

#include "docqa/error.hpp"
#include "docqa/stopwords.hpp"

namespace docqa {

namespace {

bool nonempty(IntRange r) { return r.lo <= r.hi; }
bool nonempty(RealRange r) { return r.lo <= r.hi; }

int draw(IntRange r, std::mt19937_64& rng) { return std::uniform_int_distribution<int>(r.lo, r.hi)(rng); }

double draw(RealRange r, std::mt19937_64& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

bool chance(double p, std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  // Fisher-Yates with our own draws: std::shuffle's output is library-specific.
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(v[i - 1], v[j]);
  }
}

bool representable(int total, IntRange r) {
  if (total == 0) return true;
  if (total < 0 || r.hi <= 0) return false;
  for (int k = 1; k * r.lo <= total; ++k) {
    if (total <= k * r.hi) return true;
  }
  return false;
}

std::string padded_id(const char* prefix, std::size_t i, int width) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

int digits_for(std::size_t n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

bool alpha_only(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

// Hands out words from a shared pool and a pool of words used at most once.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> shared, std::vector<std::string> unique)
      : shared_(std::move(shared)), unique_(std::move(unique)) {}

  const std::string& shared(std::mt19937_64& rng) const { return pick(shared_, rng); }
  bool has_shared() const { return !shared_.empty(); }

  std::string take_unique() {
    if (next_ >= unique_.size()) {
      throw CorpusError("vocabulary exhausted: " + std::to_string(unique_.size()) +
                        " document-unique words were not enough for the requested corpus");
    }
    return unique_[next_++];
  }

 private:
  std::vector<std::string> shared_;
  std::vector<std::string> unique_;
  std::size_t next_ = 0;
};

Vocabulary build_vocabulary(const SynGenConfig& config, const StopWordList& stops) {
  std::vector<std::string> words;
  if (config.vocabulary.empty()) {
    const std::size_t per_doc = static_cast<std::size_t>(std::max(config.words_per_document.hi, 1)) + config.topic_words;
    words = builtin_pseudo_words(config.shared_vocabulary_size + config.num_documents * per_doc,
                                 config.seed ^ 0x9e3779b97f4a7c15ULL);
  } else {
    std::set<std::string> seen;
    for (const std::string& raw : config.vocabulary) {
      std::string w = normalize_token(raw);
      if (!alpha_only(w) || stops.contains(w) || !seen.insert(w).second) continue;
      words.push_back(std::move(w));
    }
    std::mt19937_64 rng(config.seed ^ 0x51ed270b27b6c2f3ULL);
    shuffle(words, rng);
  }
  const std::size_t n_shared = std::min(config.shared_vocabulary_size, words.size());
  std::vector<std::string> shared(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(n_shared));
  std::vector<std::string> unique(words.begin() + static_cast<std::ptrdiff_t>(n_shared), words.end());
  return Vocabulary(std::move(shared), std::move(unique));
}

struct PassageWord {
  std::string text;
  bool stop = false;
  bool topic = false;
  bool unique = false;
};

struct Passage {
  std::vector<PassageWord> words;
  std::vector<int> line_lengths;
};

Passage sample_passage(const SynGenConfig& config, Vocabulary& vocab, const std::vector<std::string>& stop_pool,
                       std::mt19937_64& rng) {
  const int n = draw(config.words_per_document, rng);
  const int n_content = static_cast<int>(std::lround(n * (1.0 - config.stop_word_fraction)));
  const int n_topic = static_cast<int>(config.topic_words * config.topic_repeats);
  if (n_topic > n_content) {
    throw CorpusError("topic_words * topic_repeats exceeds the content words of a " + std::to_string(n) +
                      "-word passage");
  }
  std::vector<PassageWord> content;
  for (std::size_t t = 0; t < config.topic_words; ++t) {
    const std::string w = vocab.take_unique();
    for (std::size_t r = 0; r < config.topic_repeats; ++r) content.push_back({w, false, true, true});
  }
  for (int i = n_topic; i < n_content; ++i) {
    if (!vocab.has_shared() || chance(config.local_unique_fraction, rng)) {
      content.push_back({vocab.take_unique(), false, false, true});
    } else {
      content.push_back({vocab.shared(rng), false, false, false});
    }
  }
  shuffle(content, rng);
  // Interleave stop words at random positions, keeping the content order.
  std::vector<bool> is_stop(static_cast<std::size_t>(n), false);
  for (int i = n_content; i < n; ++i) is_stop[static_cast<std::size_t>(i)] = true;
  shuffle(is_stop, rng);
  Passage p;
  std::size_t next = 0;
  for (bool s : is_stop) {
    if (s) {
      p.words.push_back({pick(stop_pool, rng), true, false, false});
    } else {
      p.words.push_back(content[next++]);
    }
  }
  p.line_lengths = split_lines(n, config.words_per_line, rng);
  return p;
}

struct Layout {
  Document doc;
  LayoutRecord record;
};

Layout lay_out(const std::string& doc_id, const Passage& passage, const SynGenConfig& config, std::mt19937_64& rng) {
  LayoutRecord rec;
  rec.doc_id = doc_id;
  rec.char_width = draw(config.char_width, rng);
  rec.word_height = std::llround(static_cast<double>(rec.char_width) * config.line_height_factor);
  rec.word_spacing = rec.char_width;
  rec.line_spacing = rec.word_height;
  rec.irregular = chance(config.irregular_spacing_fraction, rng);
  if (rec.irregular) {
    rec.word_spacing = std::llround(static_cast<double>(rec.char_width) * draw(config.irregular_word_spacing, rng));
    rec.line_spacing = std::llround(static_cast<double>(rec.word_height) * draw(config.irregular_line_spacing, rng));
  }
  auto border = [&] {
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(rec.word_spacing) * draw(config.border_factor, rng)));
  };
  rec.border_left = border();
  rec.border_top = border();
  rec.border_right = border();
  rec.border_bottom = border();

  Document doc;
  doc.id = doc_id;
  std::size_t pos = 0;
  std::int64_t widest = 0;
  for (std::size_t l = 0; l < passage.line_lengths.size(); ++l) {
    TextLine line;
    line.index = l;
    const std::int64_t y = rec.border_top + static_cast<std::int64_t>(l) * (rec.word_height + rec.line_spacing);
    std::int64_t x = rec.border_left;
    for (int k = 0; k < passage.line_lengths[l]; ++k, ++pos) {
      const PassageWord& pw = passage.words[pos];
      WordToken w;
      w.id = "w" + std::to_string(pos);
      w.text = pw.text;
      w.box = {x, y, rec.char_width * static_cast<std::int64_t>(pw.text.size()), rec.word_height};
      w.line_index = l;
      line.box = line.words.empty() ? w.box : unite(line.box, w.box);
      line.words.push_back(doc.words.size());
      doc.words.push_back(std::move(w));
      x += doc.words.back().box.w + rec.word_spacing;
    }
    widest = std::max(widest, line.box.right() - rec.border_left);
    doc.lines.push_back(std::move(line));
  }
  const std::int64_t n_lines = static_cast<std::int64_t>(doc.lines.size());
  doc.page_width = rec.border_left + widest + rec.border_right;
  doc.page_height = rec.border_top + n_lines * rec.word_height + (n_lines - 1) * rec.line_spacing + rec.border_bottom;
  return {std::move(doc), rec};
}

// Positions of the passage words on lines [first, first + count).
std::vector<std::size_t> window_positions(const Document& doc, std::size_t first, std::size_t count) {
  std::vector<std::size_t> out;
  for (std::size_t l = first; l < first + count && l < doc.lines.size(); ++l) {
    out.insert(out.end(), doc.lines[l].words.begin(), doc.lines[l].words.end());
  }
  return out;
}

Question make_question(const Document& doc, const Passage& passage, const SynGenConfig& config,
                       const std::vector<std::string>& stop_pool, const std::string& question_id,
                       std::mt19937_64& rng) {
  // A question is drawn from a two-line window holding enough document-unique
  // words to pin down the document. Windows that also hold a non-topic unique
  // word are preferred since they separate neighbouring windows.
  const std::size_t span = std::min<std::size_t>(2, doc.lines.size());
  const std::size_t need_topics = std::min<std::size_t>(2, config.topic_words);
  std::vector<std::size_t> preferred;
  std::vector<std::size_t> acceptable;
  for (std::size_t a = 0; a + span <= doc.lines.size(); ++a) {
    std::set<std::string> topics;
    std::set<std::string> uniques;
    bool local = false;
    for (std::size_t pos : window_positions(doc, a, span)) {
      const PassageWord& pw = passage.words[pos];
      if (pw.topic) topics.insert(pw.text);
      if (pw.unique) uniques.insert(pw.text);
      if (pw.unique && !pw.topic) local = true;
    }
    // One unique word is reserved for a possible answer span.
    if (topics.size() < need_topics || uniques.size() < config.min_unique_keywords) continue;
    (local ? preferred : acceptable).push_back(a);
  }
  const std::vector<std::size_t>& pool = preferred.empty() ? acceptable : preferred;
  if (pool.empty()) {
    throw CorpusError("document '" + doc.id + "' has no window with " + std::to_string(config.min_unique_keywords) +
                      " document-unique words; cannot form a question");
  }
  const std::size_t first_line = pick(pool, rng);
  const std::vector<std::size_t> window = window_positions(doc, first_line, span);

  std::vector<std::size_t> content;
  for (std::size_t pos : window) {
    if (!passage.words[pos].stop) content.push_back(pos);
  }

  // Keywords: two distinct topic words first.
  std::vector<std::string> topic_texts;
  for (std::size_t pos : content) {
    const std::string& t = passage.words[pos].text;
    if (passage.words[pos].topic && std::find(topic_texts.begin(), topic_texts.end(), t) == topic_texts.end()) {
      topic_texts.push_back(t);
    }
  }
  shuffle(topic_texts, rng);
  topic_texts.resize(std::min(topic_texts.size(), need_topics));
  std::set<std::string> keywords(topic_texts.begin(), topic_texts.end());

  // Answer: a contiguous run of content words, none of them a chosen keyword.
  const int want = draw(config.answer_span, rng);
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end) into `content`
  for (int len = want; len >= 1 && spans.empty(); --len) {
    for (std::size_t b = 0; b + static_cast<std::size_t>(len) <= content.size(); ++b) {
      bool ok = true;
      for (std::size_t k = b; k < b + static_cast<std::size_t>(len); ++k) {
        if (passage.words[content[k]].topic) ok = false;
      }
      if (ok) spans.emplace_back(b, b + static_cast<std::size_t>(len));
    }
  }
  if (spans.empty()) {
    throw CorpusError("document '" + doc.id + "': no answer span available in window at line " +
                      std::to_string(first_line));
  }
  const auto [ab, ae] = pick(spans, rng);
  std::set<std::string> answer_texts;
  std::vector<std::string> answer_ids;
  for (std::size_t k = ab; k < ae; ++k) {
    answer_texts.insert(passage.words[content[k]].text);
    answer_ids.push_back(doc.words[content[k]].id);
  }

  // Remaining context words: local unique ones first, then shared.
  std::vector<std::string> local;
  std::vector<std::string> shared;
  for (std::size_t pos : content) {
    const PassageWord& pw = passage.words[pos];
    if (pw.topic || answer_texts.count(pw.text)) continue;
    std::vector<std::string>& bucket = pw.unique ? local : shared;
    if (std::find(bucket.begin(), bucket.end(), pw.text) == bucket.end()) bucket.push_back(pw.text);
  }
  shuffle(local, rng);
  shuffle(shared, rng);
  const std::size_t target = static_cast<std::size_t>(std::max(0, draw(config.question_content_words, rng)));
  for (const auto* bucket : {&local, &shared}) {
    for (const std::string& w : *bucket) {
      if (keywords.size() >= target) break;
      keywords.insert(w);
    }
  }

  // Keywords in passage order, stop words sprinkled in.
  std::vector<std::string> words;
  std::set<std::string> placed;
  for (std::size_t pos : content) {
    const std::string& t = passage.words[pos].text;
    if (keywords.count(t) && placed.insert(t).second) words.push_back(t);
  }
  const int n_stop = draw(config.question_stop_words, rng);
  for (int i = 0; i < n_stop; ++i) {
    const std::size_t at = std::uniform_int_distribution<std::size_t>(0, words.size())(rng);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), pick(stop_pool, rng));
  }

  Question q;
  q.id = question_id;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) q.text += ' ';
    q.text += words[i];
  }
  q.text += '?';
  q.tokens = tokenize(q.text);
  q.token_stop.assign(q.tokens.size(), false);
  q.answers.push_back(derive_ground_truth_boxes(doc, answer_ids));
  return q;
}

}  // namespace

void SynGenConfig::validate() const {
  auto fail = [](const std::string& what) { throw CorpusError("syngen config: " + what); };
  if (num_documents == 0) fail("num_documents must be >= 1");
  if (!nonempty(words_per_document) || words_per_document.lo < 1) fail("words_per_document range is empty");
  if (!nonempty(words_per_line) || words_per_line.lo < 1) fail("words_per_line range is empty");
  if (!(stop_word_fraction >= 0.0 && stop_word_fraction < 1.0)) fail("stop_word_fraction must lie in [0, 1)");
  if (!(local_unique_fraction >= 0.0 && local_unique_fraction <= 1.0)) fail("local_unique_fraction must lie in [0, 1]");
  if (!nonempty(char_width) || char_width.lo < 1) fail("char_width range is empty");
  if (!(line_height_factor > 0.0)) fail("line_height_factor must be positive");
  if (!(irregular_spacing_fraction >= 0.0 && irregular_spacing_fraction <= 1.0)) {
    fail("irregular_spacing_fraction must lie in [0, 1]");
  }
  if (!nonempty(irregular_word_spacing) || irregular_word_spacing.lo <= 0.0) fail("irregular_word_spacing range is empty");
  if (!nonempty(irregular_line_spacing) || irregular_line_spacing.lo <= 0.0) fail("irregular_line_spacing range is empty");
  if (!nonempty(border_factor) || border_factor.lo <= 0.0) fail("border_factor range is empty");
  if (!nonempty(questions_per_document) || questions_per_document.lo < 0) fail("questions_per_document range is empty");
  if (!(distractor_fraction >= 0.0 && distractor_fraction < 1.0)) fail("distractor_fraction must lie in [0, 1)");
  if (!nonempty(answer_span) || answer_span.lo < 1) fail("answer_span range is empty");
  if (!nonempty(question_content_words) || question_content_words.lo < 1) fail("question_content_words range is empty");
  if (!nonempty(question_stop_words) || question_stop_words.lo < 0) fail("question_stop_words range is empty");
  for (int n = words_per_document.lo; n <= words_per_document.hi; ++n) {
    if (!representable(n, words_per_line)) {
      fail(std::to_string(n) + " words cannot be split into lines of " + std::to_string(words_per_line.lo) + "-" +
           std::to_string(words_per_line.hi) + " words");
    }
  }
}

std::vector<int> split_lines(int total, IntRange per_line, std::mt19937_64& rng) {
  if (!nonempty(per_line) || per_line.lo < 1 || total < 1 || !representable(total, per_line)) {
    throw CorpusError(std::to_string(total) + " words cannot be split into lines of " + std::to_string(per_line.lo) +
                      "-" + std::to_string(per_line.hi) + " words");
  }
  std::vector<int> out;
  int left = total;
  while (left > 0) {
    std::vector<int> options;
    for (int k = per_line.lo; k <= std::min(per_line.hi, left); ++k) {
      if (representable(left - k, per_line)) options.push_back(k);
    }
    const int k = pick(options, rng);
    out.push_back(k);
    left -= k;
  }
  return out;
}

std::vector<std::string> builtin_pseudo_words(std::size_t count, std::uint64_t seed) {
  static const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                        "br", "dr", "gl", "pl", "st", "tr", "ch", "sh"};
  static const char* const kVowels[] = {"a", "e", "i", "o", "u"};
  static const char* const kCodas[] = {"", "", "", "n", "r", "s", "l", "m"};
  const StopWordList& stops = StopWordList::english();
  std::mt19937_64 rng(seed);
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100 * count + 10000) throw CorpusError("could not generate enough distinct pseudo-words");
    const int syllables = std::uniform_int_distribution<int>(2, 3)(rng);
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kOnsets[std::uniform_int_distribution<std::size_t>(0, std::size(kOnsets) - 1)(rng)];
      w += kVowels[std::uniform_int_distribution<std::size_t>(0, std::size(kVowels) - 1)(rng)];
    }
    w += kCodas[std::uniform_int_distribution<std::size_t>(0, std::size(kCodas) - 1)(rng)];
    if (w.size() < 3 || stops.contains(w) || !seen.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

SyntheticCorpus generate_corpus(const SynGenConfig& config) {
  config.validate();
  const StopWordList& stops = StopWordList::english();
  std::vector<std::string> stop_pool;
  for (const std::string& w : stops.words()) {
    if (alpha_only(w)) stop_pool.push_back(w);
  }
  Vocabulary vocab = build_vocabulary(config, stops);
  std::mt19937_64 rng(config.seed);

  SyntheticCorpus out;
  std::vector<Passage> passages;
  const int width = std::max(3, digits_for(config.num_documents - 1));
  for (std::size_t d = 0; d < config.num_documents; ++d) {
    passages.push_back(sample_passage(config, vocab, stop_pool, rng));
    Layout layout = lay_out(padded_id("doc", d, width), passages.back(), config, rng);
    validate_document(layout.doc);
    out.corpus.documents.push_back(std::move(layout.doc));
    out.layouts.push_back(layout.record);
  }

  std::vector<std::size_t> order(config.num_documents);
  for (std::size_t d = 0; d < order.size(); ++d) order[d] = d;
  shuffle(order, rng);
  const std::size_t n_distractors =
      static_cast<std::size_t>(std::llround(static_cast<double>(config.num_documents) * config.distractor_fraction));
  std::vector<bool> distractor(config.num_documents, false);
  for (std::size_t i = 0; i < n_distractors; ++i) distractor[order[i]] = true;
  std::vector<std::size_t> labeled;
  for (std::size_t d = 0; d < config.num_documents; ++d) {
    if (distractor[d]) {
      out.distractors.push_back(out.corpus.documents[d].id);
    } else {
      labeled.push_back(d);
    }
  }

  // Questions per labeled document.
  std::vector<std::size_t> quota(config.num_documents, 0);
  if (config.total_questions > 0) {
    if (labeled.empty()) throw CorpusError("syngen config: questions requested but every document is a distractor");
    std::vector<std::size_t> turn = labeled;
    shuffle(turn, rng);
    for (std::size_t i = 0; i < config.total_questions; ++i) ++quota[turn[i % turn.size()]];
  } else {
    for (std::size_t d : labeled) quota[d] = static_cast<std::size_t>(draw(config.questions_per_document, rng));
  }

  std::size_t total = 0;
  for (std::size_t q : quota) total += q;
  const int qwidth = std::max(4, digits_for(total == 0 ? 0 : total - 1));
  std::size_t next_id = 0;
  for (std::size_t d : labeled) {
    for (std::size_t k = 0; k < quota[d]; ++k) {
      out.corpus.questions.push_back(make_question(out.corpus.documents[d], passages[d], config, stop_pool,
                                                   padded_id("q", next_id++, qwidth), rng));
    }
  }
  mark_stop_words(out.corpus, stops.predicate());
  return out;
}

SynGenConfig acceptance_config(std::uint64_t seed) {
  SynGenConfig c;
  c.seed = seed;
  c.num_documents = 100;
  c.total_questions = 200;
  c.distractor_fraction = 0.3;
  c.question_content_words = {5, 6};
  c.min_unique_keywords = 2;
  return c;
}

SyntheticCorpus generate_acceptance_corpus(std::uint64_t seed) { return generate_corpus(acceptance_config(seed)); }

}  // namespace docqa
