#include "docqa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "docqa/error.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace docqa {

double dis(const Rect& ab, const Rect& sb, const Rect& lb) {
  if (!ab.valid() || !sb.valid() || !lb.valid()) throw Error("dis: rectangles must have positive area");
  const double inner = static_cast<double>(intersection_area(ab, sb)) / static_cast<double>(sb.area());
  const double outer = static_cast<double>(intersection_area(ab, lb)) / static_cast<double>(ab.area());
  return inner * outer;
}

Judgement judge_snippet(const Snippet& predicted, std::span<const GroundTruthAnswer> answers,
                        double threshold) {
  Judgement j;
  for (const GroundTruthAnswer& a : answers) {
    if (a.doc_id != predicted.doc_id) continue;
    j.dis_best = std::max(j.dis_best, dis(predicted.box, a.sb, a.lb));
  }
  j.correct = j.dis_best > threshold;
  return j;
}

double line_f1(const Snippet& predicted, const GroundTruthAnswer& answer) {
  if (predicted.doc_id != answer.doc_id || answer.answer_lines.empty()) return 0.0;
  std::size_t common = 0;
  for (std::size_t l : answer.answer_lines) {
    if (l >= predicted.start_line && l <= predicted.end_line) ++common;
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / static_cast<double>(predicted.line_count());
  const double r = static_cast<double>(common) / static_cast<double>(answer.answer_lines.size());
  return 2.0 * p * r / (p + r);
}

double best_line_f1(const Snippet& predicted, std::span<const GroundTruthAnswer> answers) {
  double best = 0.0;
  for (const GroundTruthAnswer& a : answers) best = std::max(best, line_f1(predicted, a));
  return best;
}

std::optional<std::size_t> target_rank(const RetrievalResult& result, const Question& question) {
  std::set<std::string_view> targets;
  for (const GroundTruthAnswer& a : question.answers) targets.insert(a.doc_id);
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    if (targets.count(result.ranked[i].doc_id)) return i + 1;
  }
  return std::nullopt;
}

TopNAccuracy topn_accuracy(std::span<const RetrievalResult> results, std::span<const Question> questions,
                           std::span<const std::size_t> n_values) {
  if (results.size() != questions.size()) throw Error("topn_accuracy: one result per question expected");
  TopNAccuracy acc;
  std::vector<std::optional<std::size_t>> ranks;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (questions[i].answers.empty()) {
      ++acc.unlabeled_excluded;
      continue;
    }
    ranks.push_back(target_rank(results[i], questions[i]));
  }
  acc.evaluated = ranks.size();
  for (std::size_t n : n_values) {
    std::size_t hits = 0;
    for (const auto& r : ranks) hits += (r && *r <= n) ? 1 : 0;
    acc.percent[n] = ranks.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return acc;
}

namespace {

QuestionOutcome evaluate_question(const Corpus& corpus, const DocumentIndex& index,
                                  const PipelineConfig& config, const EvalOptions& options,
                                  const Question& q) {
  QuestionOutcome out;
  out.question_id = q.id;
  out.question_length = q.tokens.size();
  try {
    const RetrievalResult full = retrieve_documents(index, q, config.retriever, std::max<std::size_t>(1, index.size()));
    if (full.abstained) {
      out.abstained = true;
      return out;
    }
    out.target_rank = target_rank(full, q);
    std::vector<const Document*> proposals;
    const std::size_t n = std::min(options.proposals, full.ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
      const Document* doc = corpus.find_document(full.ranked[i].doc_id);
      if (!doc) throw Error("index refers to document '" + full.ranked[i].doc_id + "' missing from the corpus");
      proposals.push_back(doc);
    }
    if (proposals.empty()) {
      out.abstained = true;
      return out;
    }
    const AnswerResult answer = extract_answer(proposals, q, config.snippet, config.window);
    if (!answer.snippet) {
      out.abstained = true;
      return out;
    }
    const Judgement j = judge_snippet(*answer.snippet, q.answers, options.threshold);
    out.dis_best = j.dis_best;
    out.correct = j.correct;
    out.line_f1 = best_line_f1(*answer.snippet, q.answers);
    out.predicted = answer.snippet;
  } catch (const std::exception& e) {
    out = QuestionOutcome{};
    out.question_id = q.id;
    out.question_length = q.tokens.size();
    out.error = e.what();
  }
  return out;
}

}  // namespace

EvalReport evaluate_pipeline(const Corpus& corpus, const DocumentIndex& index, const PipelineConfig& config,
                             const EvalOptions& options) {
  config.retriever.validate();
  config.snippet.validate();
  EvalReport report;
  report.question_count = corpus.questions.size();
  report.proposals = options.proposals;
  report.threshold = options.threshold;

  std::vector<const Question*> labeled;
  for (const Question& q : corpus.questions) {
    if (q.answers.empty()) {
      ++report.unlabeled_excluded;
    } else {
      labeled.push_back(&q);
    }
  }
  report.per_question.resize(labeled.size());
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(labeled.size());
#ifdef _OPENMP
  const int threads = options.jobs > 0 ? options.jobs : omp_get_max_threads();
#endif
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    report.per_question[i] = evaluate_question(corpus, index, config, options, *labeled[i]);
  }

  report.evaluated = labeled.size();
  std::size_t correct = 0;
  double f1 = 0.0;
  for (const QuestionOutcome& o : report.per_question) {
    correct += o.correct ? 1 : 0;
    f1 += o.line_f1;
    report.abstained += o.abstained ? 1 : 0;
    report.errors += o.error.empty() ? 0 : 1;
  }
  const double denom = static_cast<double>(std::max<std::size_t>(1, report.evaluated));
  report.snippet_accuracy = report.evaluated ? 100.0 * static_cast<double>(correct) / denom : 0.0;
  report.line_f1_mean = report.evaluated ? 100.0 * f1 / denom : 0.0;
  for (std::size_t n : options.n_values) {
    std::size_t hits = 0;
    for (const QuestionOutcome& o : report.per_question) hits += (o.target_rank && *o.target_rank <= n) ? 1 : 0;
    report.topn_accuracy[n] = report.evaluated ? 100.0 * static_cast<double>(hits) / denom : 0.0;
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  json topn = json::object();
  for (const auto& [n, pct] : report.topn_accuracy) topn[std::to_string(n)] = pct;
  json per = json::array();
  for (const QuestionOutcome& o : report.per_question) {
    json q = {{"question_id", o.question_id},
              {"dis_best", o.dis_best},
              {"correct", o.correct},
              {"line_f1", o.line_f1},
              {"question_length", o.question_length},
              {"abstained", o.abstained},
              {"proposal_rank_of_target", o.target_rank ? json(*o.target_rank) : json(nullptr)}};
    if (o.predicted) {
      q["predicted"] = {{"doc_id", o.predicted->doc_id},
                        {"start_line", o.predicted->start_line},
                        {"end_line", o.predicted->end_line},
                        {"box", {o.predicted->box.x, o.predicted->box.y, o.predicted->box.w, o.predicted->box.h}}};
    }
    if (!o.error.empty()) q["error"] = o.error;
    per.push_back(std::move(q));
  }
  json j = {{"snippet_accuracy", report.snippet_accuracy},
            {"topn_accuracy", std::move(topn)},
            {"line_f1_mean", report.line_f1_mean},
            {"threshold", report.threshold},
            {"proposals", report.proposals},
            {"question_count", report.question_count},
            {"evaluated", report.evaluated},
            {"unlabeled_excluded", report.unlabeled_excluded},
            {"abstained", report.abstained},
            {"errors", report.errors},
            {"per_question", std::move(per)}};
  return j.dump(2) + "\n";
}

std::string metrics_csv(const EvalReport& report) {
  std::string out = "question_id,dis_best,correct,line_f1,target_rank\n";
  char buf[128];
  for (const QuestionOutcome& o : report.per_question) {
    out += o.question_id;
    std::snprintf(buf, sizeof(buf), ",%.6f,%d,%.6f,", o.dis_best, o.correct ? 1 : 0, o.line_f1);
    out += buf;
    if (o.target_rank) out += std::to_string(*o.target_rank);
    out += '\n';
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  write_file(dir / "report.json", report_to_json(report));
  write_file(dir / "metrics.csv", metrics_csv(report));
}

}  // namespace docqa
