#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docqa/geometry.hpp"

namespace docqa {

// A segmented word. `text` is the lowercase transcription when one exists;
// `stop_hint` is an externally supplied stop-word flag (the corpus `stop` field).
struct WordToken {
  std::string id;
  std::optional<std::string> text;
  Rect box;
  std::size_t line_index = 0;
  bool stop_word = false;
  std::optional<bool> stop_hint;

  friend bool operator==(const WordToken&, const WordToken&) = default;
};

struct TextLine {
  std::size_t index = 0;
  Rect box;
  // Positions into Document::words, in reading order.
  std::vector<std::size_t> words;

  friend bool operator==(const TextLine&, const TextLine&) = default;
};

struct Document {
  std::string id;
  std::int64_t page_width = 0;
  std::int64_t page_height = 0;
  std::vector<TextLine> lines;
  std::vector<WordToken> words;

  std::optional<std::size_t> find_word(std::string_view word_id) const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct GroundTruthAnswer {
  std::string doc_id;
  std::vector<std::string> word_ids;
  Rect sb;
  Rect lb;
  // Sorted, distinct line indices holding answer words.
  std::vector<std::size_t> answer_lines;

  friend bool operator==(const GroundTruthAnswer&, const GroundTruthAnswer&) = default;
};

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<bool> token_stop;
  std::vector<GroundTruthAnswer> answers;

  friend bool operator==(const Question&, const Question&) = default;
};

// Contiguous lines [start_line, end_line] of one document.
struct Snippet {
  std::string doc_id;
  std::size_t start_line = 0;
  std::size_t end_line = 0;
  Rect box;

  std::size_t line_count() const { return end_line - start_line + 1; }
  friend bool operator==(const Snippet&, const Snippet&) = default;
};

struct Corpus {
  // Sorted by id.
  std::vector<Document> documents;
  std::vector<Question> questions;

  const Document* find_document(std::string_view doc_id) const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Lowercases and strips leading/trailing ASCII punctuation. May return "".
std::string normalize_token(std::string_view raw);
// Whitespace split followed by normalize_token; empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Throws CorpusError when a structural invariant does not hold.
void validate_document(const Document& doc);

// Reads `documents.jsonl` and (optionally) `questions.jsonl` from `dir`.
// Unknown fields are reported through `warnings` when it is non-null.
Corpus load_corpus(const std::filesystem::path& dir,
                   std::vector<std::string>* warnings = nullptr);
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

GroundTruthAnswer derive_ground_truth_boxes(const Document& doc,
                                            std::span<const std::string> answer_word_ids);

Snippet make_snippet(const Document& doc, std::size_t start_line, std::size_t end_line);
std::vector<Snippet> enumerate_snippets(const Document& doc, std::size_t window,
                                        std::size_t step);

}  // namespace docqa
