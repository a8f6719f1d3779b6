#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docqa/corpus.hpp"
#include "docqa/retrieve.hpp"

namespace docqa {

inline constexpr double kDisThreshold = 0.8;

// Double Inclusion Score: (|AB n SB| / |SB|) * (|AB n LB| / |AB|).
// Throws docqa::Error for a rect with non-positive area.
double dis(const Rect& ab, const Rect& sb, const Rect& lb);

struct Judgement {
  bool correct = false;
  double dis_best = 0.0;
};

// Best DIS over the answers lying in the predicted snippet's document;
// correct iff dis_best > threshold (strict).
Judgement judge_snippet(const Snippet& predicted, std::span<const GroundTruthAnswer> answers,
                        double threshold = kDisThreshold);

// Line-level F1 between the predicted snippet lines and the answer lines; 0 across documents.
double line_f1(const Snippet& predicted, const GroundTruthAnswer& answer);
double best_line_f1(const Snippet& predicted, std::span<const GroundTruthAnswer> answers);

struct TopNAccuracy {
  std::map<std::size_t, double> percent;
  std::size_t evaluated = 0;
  std::size_t unlabeled_excluded = 0;
};

// `results[i]` is the ranking produced for `questions[i]`.
TopNAccuracy topn_accuracy(std::span<const RetrievalResult> results,
                           std::span<const Question> questions,
                           std::span<const std::size_t> n_values);

// 1-based rank of the first ground-truth document in `result`, if present.
std::optional<std::size_t> target_rank(const RetrievalResult& result, const Question& question);

struct QuestionOutcome {
  std::string question_id;
  double dis_best = 0.0;
  bool correct = false;
  double line_f1 = 0.0;
  std::optional<std::size_t> target_rank;
  std::size_t question_length = 0;
  bool abstained = false;
  std::string error;
  std::optional<Snippet> predicted;
};

struct EvalReport {
  double snippet_accuracy = 0.0;
  std::map<std::size_t, double> topn_accuracy;
  double line_f1_mean = 0.0;
  std::vector<QuestionOutcome> per_question;

  std::size_t question_count = 0;
  std::size_t evaluated = 0;
  std::size_t unlabeled_excluded = 0;
  std::size_t abstained = 0;
  std::size_t errors = 0;
  std::size_t proposals = 0;
  double threshold = kDisThreshold;
};

struct EvalOptions {
  std::size_t proposals = 5;
  std::vector<std::size_t> n_values{1, 5, 10};
  double threshold = kDisThreshold;
  // Worker threads for per-question evaluation; 0 keeps the OpenMP default.
  int jobs = 0;
};

// Runs retrieval over the whole index (so the target rank is always known),
// extracts an answer from the first `options.proposals` documents, and scores it.
EvalReport evaluate_pipeline(const Corpus& corpus, const DocumentIndex& index,
                             const PipelineConfig& config, const EvalOptions& options);

std::string report_to_json(const EvalReport& report);
std::string metrics_csv(const EvalReport& report);
// Writes report.json and metrics.csv under `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace docqa
