#include <map>
#include <set>

#include "docqa/error.hpp"
#include "docqa/stopwords.hpp"
#include "docqa/syngen.hpp"
#include "docqa/util.hpp"
#include "doctest.h"
#include "test_support.hpp"

using docqa::SynGenConfig;

TEST_CASE("a three-line document has 5-7 words per line") {
  SynGenConfig cfg;
  cfg.num_documents = 1;
  cfg.words_per_document = {18, 18};
  cfg.topic_repeats = 2;
  cfg.questions_per_document = {1, 1};
  cfg.distractor_fraction = 0.0;
  const auto syn = docqa::generate_corpus(cfg);
  REQUIRE(syn.corpus.documents.size() == 1);
  const auto& doc = syn.corpus.documents[0];
  CHECK(doc.lines.size() == 3);
  for (const auto& line : doc.lines) {
    CHECK(line.words.size() >= 5);
    CHECK(line.words.size() <= 7);
  }
}

TEST_CASE("same seed gives byte-identical corpus files") {
  SynGenConfig cfg;
  cfg.seed = 42;
  testsupport::TempDir a, b;
  docqa::save_corpus(docqa::generate_corpus(cfg).corpus, a.path());
  docqa::save_corpus(docqa::generate_corpus(cfg).corpus, b.path());
  for (const char* f : {"documents.jsonl", "questions.jsonl"}) {
    CHECK(docqa::read_file(a.path() / f) == docqa::read_file(b.path() / f));
  }
  cfg.seed = 43;
  testsupport::TempDir c;
  docqa::save_corpus(docqa::generate_corpus(cfg).corpus, c.path());
  CHECK(docqa::read_file(a.path() / "documents.jsonl") != docqa::read_file(c.path() / "documents.jsonl"));
}

TEST_CASE("generated corpora load cleanly and answers nest") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SynGenConfig cfg;
    cfg.seed = seed;
    const auto syn = docqa::generate_corpus(cfg);
    testsupport::TempDir dir;
    docqa::save_corpus(syn.corpus, dir.path());
    auto loaded = docqa::load_corpus(dir.path());
    docqa::mark_stop_words(loaded, docqa::StopWordList::english().predicate());
    CHECK(loaded == syn.corpus);
    for (const auto& q : syn.corpus.questions) {
      REQUIRE(q.answers.size() == 1);
      const auto& a = q.answers[0];
      const auto* doc = syn.corpus.find_document(a.doc_id);
      REQUIRE(doc);
      CHECK(testsupport::rect_inside(a.sb, a.lb));
      for (const auto& id : a.word_ids) {
        REQUIRE(doc->find_word(id));
        CHECK(testsupport::rect_inside(doc->words[*doc->find_word(id)].box, a.sb));
      }
      CHECK(std::find(syn.distractors.begin(), syn.distractors.end(), a.doc_id) == syn.distractors.end());
    }
  }
}

TEST_CASE("layout follows the spacing rules exactly") {
  SynGenConfig cfg;
  cfg.seed = 9;
  cfg.num_documents = 60;
  const auto syn = docqa::generate_corpus(cfg);
  std::set<std::size_t> per_line;
  std::size_t irregular = 0;
  for (std::size_t d = 0; d < syn.corpus.documents.size(); ++d) {
    const auto& doc = syn.corpus.documents[d];
    const auto& rec = syn.layouts[d];
    REQUIRE(rec.doc_id == doc.id);
    irregular += rec.irregular ? 1 : 0;
    if (!rec.irregular) {
      CHECK(rec.word_spacing == rec.char_width);
      CHECK(rec.line_spacing == rec.word_height);
    }
    for (std::int64_t b : {rec.border_left, rec.border_top, rec.border_right, rec.border_bottom}) {
      CHECK(b >= static_cast<std::int64_t>(std::floor(1.5 * static_cast<double>(rec.word_spacing))));
      CHECK(b <= static_cast<std::int64_t>(std::ceil(5.0 * static_cast<double>(rec.word_spacing))));
    }
    for (std::size_t l = 0; l < doc.lines.size(); ++l) {
      const auto& line = doc.lines[l];
      per_line.insert(line.words.size());
      CHECK(line.box.x == rec.border_left);
      if (l > 0) CHECK(line.box.y - doc.lines[l - 1].box.bottom() == rec.line_spacing);
      for (std::size_t i = 0; i < line.words.size(); ++i) {
        const auto& w = doc.words[line.words[i]];
        CHECK(w.box.w == rec.char_width * static_cast<std::int64_t>(w.text->size()));
        CHECK(w.box.h == rec.word_height);
        if (i > 0) CHECK(w.box.x - doc.words[line.words[i - 1]].box.right() == rec.word_spacing);
      }
    }
    CHECK(doc.lines.front().box.y == rec.border_top);
    CHECK(doc.page_height - doc.lines.back().box.bottom() == rec.border_bottom);
  }
  CHECK(per_line == std::set<std::size_t>{5, 6, 7});
  CHECK(irregular > 0);
  CHECK(irregular < 30);
}

TEST_CASE("acceptance corpus shape and unique keywords") {
  const auto syn = docqa::generate_acceptance_corpus(7);
  const auto& c = syn.corpus;
  CHECK(c.documents.size() == 100);
  CHECK(c.questions.size() == 200);
  CHECK(syn.distractors.size() == 30);
  std::size_t words = 0;
  std::map<std::string, std::set<std::string>> where;
  for (const auto& d : c.documents) {
    words += d.words.size();
    for (const auto& w : d.words) where[*w.text].insert(d.id);
  }
  const double mean = static_cast<double>(words) / 100.0;
  CHECK(mean >= 100.0);
  CHECK(mean <= 140.0);
  for (const auto& q : c.questions) {
    std::set<std::string> unique;
    for (std::size_t i = 0; i < q.tokens.size(); ++i) {
      if (q.token_stop[i]) continue;
      const auto it = where.find(q.tokens[i]);
      REQUIRE(it != where.end());
      if (it->second.size() == 1) {
        CHECK(*it->second.begin() == q.answers[0].doc_id);
        unique.insert(q.tokens[i]);
      }
    }
    CHECK(unique.size() >= 2);
  }
}

TEST_CASE("vocabulary exhaustion is an error") {
  SynGenConfig cfg;
  cfg.num_documents = 5;
  for (int i = 0; i < 60; ++i) cfg.vocabulary.push_back("word" + std::string(1, static_cast<char>('a' + i % 26)) +
                                                         std::string(1, static_cast<char>('a' + i / 26)));
  cfg.shared_vocabulary_size = 40;
  CHECK_THROWS_AS(docqa::generate_corpus(cfg), docqa::CorpusError);
}

TEST_CASE("line splitting") {
  std::mt19937_64 rng(1);
  for (int total : {5, 6, 7, 10, 14, 15, 16, 120}) {
    const auto parts = docqa::split_lines(total, {5, 7}, rng);
    int sum = 0;
    for (int p : parts) {
      CHECK(p >= 5);
      CHECK(p <= 7);
      sum += p;
    }
    CHECK(sum == total);
  }
  CHECK_THROWS_AS(docqa::split_lines(8, {5, 7}, rng), docqa::CorpusError);
  CHECK_THROWS_AS(docqa::split_lines(9, {5, 7}, rng), docqa::CorpusError);
  CHECK_THROWS_AS(docqa::split_lines(4, {5, 7}, rng), docqa::CorpusError);
}

TEST_CASE("built-in pseudo-words") {
  const auto words = docqa::builtin_pseudo_words(3000, 5);
  std::set<std::string> distinct(words.begin(), words.end());
  CHECK(distinct.size() == 3000);
  for (const auto& w : words) {
    CHECK(w.size() >= 3);
    CHECK_FALSE(docqa::StopWordList::english().contains(w));
  }
  CHECK(words == docqa::builtin_pseudo_words(3000, 5));
}

TEST_CASE("invalid configs are rejected") {
  SynGenConfig cfg;
  cfg.words_per_line = {7, 5};
  CHECK_THROWS_AS(cfg.validate(), docqa::CorpusError);
  cfg = {};
  cfg.words_per_document = {8, 9};
  CHECK_THROWS_AS(cfg.validate(), docqa::CorpusError);
  cfg = {};
  cfg.distractor_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), docqa::CorpusError);
}
