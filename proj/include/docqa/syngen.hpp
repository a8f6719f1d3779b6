#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "docqa/corpus.hpp"

namespace docqa {

// Inclusive integer range.
struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Layout follows the synthetic-handwriting recipe at box level: 5-7 words per
// line, inter-word spacing equal to the average character width, inter-line
// spacing equal to the word height, borders of 1.5-5x the inter-word spacing.
struct SynGenConfig {
  std::uint64_t seed = 0;
  std::size_t num_documents = 20;
  // Empty vocabulary selects the built-in pseudo-word generator.
  std::vector<std::string> vocabulary;
  std::size_t shared_vocabulary_size = 400;

  IntRange words_per_document{110, 130};
  IntRange words_per_line{5, 7};
  double stop_word_fraction = 0.45;
  // Words repeated through a passage, unique to it.
  std::size_t topic_words = 3;
  std::size_t topic_repeats = 5;
  // Probability that a non-topic content word is unique to the document.
  double local_unique_fraction = 0.4;

  IntRange char_width{14, 26};
  double line_height_factor = 2.2;
  double irregular_spacing_fraction = 0.15;
  RealRange irregular_word_spacing{0.9, 2.5};
  RealRange irregular_line_spacing{0.9, 1.3};
  RealRange border_factor{1.5, 5.0};

  IntRange questions_per_document{2, 3};
  double distractor_fraction = 0.3;
  // Exact question count; when non-zero overrides questions_per_document.
  std::size_t total_questions = 0;
  IntRange answer_span{1, 2};
  // Content words taken from the answer window into the question.
  IntRange question_content_words{4, 6};
  IntRange question_stop_words{2, 4};
  // Minimum number of document-unique content words per question.
  std::size_t min_unique_keywords = 2;

  void validate() const;
};

// Per-document layout statistics recorded during generation.
struct LayoutRecord {
  std::string doc_id;
  std::int64_t char_width = 0;
  std::int64_t word_height = 0;
  std::int64_t word_spacing = 0;
  std::int64_t line_spacing = 0;
  std::int64_t border_left = 0;
  std::int64_t border_top = 0;
  std::int64_t border_right = 0;
  std::int64_t border_bottom = 0;
  bool irregular = false;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<LayoutRecord> layouts;
  // doc ids that carry no questions.
  std::vector<std::string> distractors;
};

SyntheticCorpus generate_corpus(const SynGenConfig& config);

// 100 documents of ~120 words, 200 questions with >= 2 document-unique
// keywords each, 30% distractors.
SynGenConfig acceptance_config(std::uint64_t seed);
SyntheticCorpus generate_acceptance_corpus(std::uint64_t seed);

// Splits `total` words into line lengths drawn from `per_line`; throws
// CorpusError when no split exists.
std::vector<int> split_lines(int total, IntRange per_line, std::mt19937_64& rng);

std::vector<std::string> builtin_pseudo_words(std::size_t count, std::uint64_t seed);

}  // namespace docqa
