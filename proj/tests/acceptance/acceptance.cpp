// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "docqa/aggregate.hpp"
#include "docqa/eval.hpp"
#include "docqa/gmm.hpp"
#include "docqa/pca.hpp"
#include "docqa/retrieve.hpp"
#include "docqa/syngen.hpp"
#include "docqa/tfidf.hpp"
#include "docqa/util.hpp"
#include "test_support.hpp"

namespace {

using docqa::AggregateConfig;
using docqa::Document;
using docqa::Question;
using docqa::Rect;
using docqa::Stage;
using docqa::Vector;

constexpr double kHandCaseTol = 1e-12;
constexpr double kFvOracleTol = 1e-6;
constexpr double kEmMonotoneTol = 1e-9;
constexpr double kClusterMeanTol = 0.2;
constexpr double kClusterWeightTol = 0.05;
constexpr double kOracleScoreTol = 1e-9;
constexpr double kSnippetAccuracyMin = 90.0;
constexpr std::uint64_t kAcceptanceSeed = 7;
const std::vector<double> kSigmas{0.0, 0.05, 0.2, 0.5};
const std::vector<std::size_t> kTrendN{1, 2, 5, 10, 25, 100};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> run;
};

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Shared between criteria 5 to 7.
const docqa::SyntheticCorpus& acceptance_corpus() {
  static const docqa::SyntheticCorpus c = docqa::generate_acceptance_corpus(kAcceptanceSeed);
  return c;
}

Stage sum_stage(std::shared_ptr<const docqa::EmbeddingProvider> provider) {
  Stage s;
  s.provider = std::move(provider);
  s.aggregation = AggregateConfig::sum();
  return s;
}

double top_n(const std::vector<std::optional<std::size_t>>& ranks, std::size_t n) {
  std::size_t hits = 0;
  for (const auto& r : ranks) hits += (r && *r <= n) ? 1 : 0;
  return ranks.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::vector<std::optional<std::size_t>> target_ranks(const docqa::Corpus& corpus, const Stage& stage) {
  const docqa::DocumentIndex index = docqa::build_index(corpus.documents, stage);
  std::vector<std::optional<std::size_t>> out;
  for (const Question& q : corpus.questions) {
    if (q.answers.empty()) continue;
    out.push_back(docqa::target_rank(docqa::retrieve_documents(index, q, stage, index.size()), q));
  }
  return out;
}

int cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = docqa::cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome metric_correctness() {
  Outcome o;
  const Rect r{3, 4, 10, 6};
  o.require(docqa::dis(r, r, r) == 1.0, "identical rects");
  o.require(docqa::dis({0, 0, 10, 10}, {2, 2, 4, 4}, {0, 0, 20, 20}) == 1.0, "nested rects");
  o.require(docqa::dis({0, 0, 10, 10}, {20, 20, 5, 5}, {0, 0, 30, 30}) == 0.0, "disjoint AB and SB");
  const double oversized = docqa::dis({0, 0, 10, 40}, {0, 0, 10, 10}, {0, 0, 10, 30});
  o.require(oversized == 0.75, "oversized snippet gave " + fmt(oversized, 6));
  o.require(!docqa::judge_snippet({"d", 0, 0, Rect{0, 0, 10, 40}}, std::vector<docqa::GroundTruthAnswer>{
                                      {"d", {"w0"}, Rect{0, 0, 10, 10}, Rect{0, 0, 10, 30}, {0}}})
                 .correct,
            "oversized snippet judged correct");

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::int64_t> pos(0, 30), len(1, 20);
  std::size_t ones = 0;
  for (int t = 0; t < 10000; ++t) {
    Rect rs[3];
    for (Rect& x : rs) x = {pos(rng), pos(rng), len(rng), len(rng)};
    // Bias a share of the triples towards nesting so both sides of the biconditional are exercised.
    if (t % 4 == 0) {
      Rect& ab = rs[0];
      rs[2] = {ab.x - pos(rng) % 4, ab.y - pos(rng) % 4, ab.w + 8, ab.h + 8};
      rs[1] = {ab.x + (ab.w > 1 ? pos(rng) % ab.w : 0), ab.y, 1, 1};
    }
    const double v = docqa::dis(rs[0], rs[1], rs[2]);
    const bool nested = testsupport::rect_inside(rs[1], rs[0]) && testsupport::rect_inside(rs[0], rs[2]);
    if (!(v >= 0.0 && v <= 1.0)) {
      o.require(false, "DIS out of range at triple " + std::to_string(t));
      break;
    }
    if ((v == 1.0) != nested) {
      o.require(false, "biconditional broken at triple " + std::to_string(t));
      break;
    }
    ones += nested ? 1 : 0;
  }
  o.require(ones > 0, "no nested triple generated");
  if (o.pass) o.detail = "4 examples exact, 10000 triples (" + std::to_string(ones) + " nested)";
  return o;
}

Outcome fv_correctness() {
  Outcome o;
  auto one = std::make_shared<const docqa::GmmModel>(docqa::GmmModel{{1.0}, {{0.0}}, {{1.0}}});
  const Vector hand =
      docqa::aggregate_fv(std::vector<Vector>{{2.0}}, AggregateConfig::fisher(one, true, 0.5, false, false)).values;
  o.require(hand.size() == 2 && std::abs(hand[0] - 2.0) < kHandCaseTol &&
                std::abs(hand[1] - 3.0 / std::sqrt(2.0)) < kHandCaseTol,
            "hand-computed K=1 D=1 case");

  std::mt19937_64 rng(11);
  for (std::size_t k : {1, 2, 3, 8}) {
    for (std::size_t d : {1, 4, 16}) {
      auto g = std::make_shared<const docqa::GmmModel>(testsupport::random_gmm(k, d, rng));
      const auto xs = testsupport::gaussian_samples(3, d, 0.0, 1.0, rng);
      const auto mu = docqa::aggregate_fv(xs, AggregateConfig::fisher(g, false)).values;
      const auto both = docqa::aggregate_fv(xs, AggregateConfig::fisher(g, true)).values;
      o.require(mu.size() == k * d && both.size() == 2 * k * d,
                "dimension at K=" + std::to_string(k) + " D=" + std::to_string(d));
    }
  }

  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const std::size_t k = 1 + rng() % 4, d = 1 + rng() % 5, m = 1 + rng() % 6;
    auto g = std::make_shared<const docqa::GmmModel>(testsupport::random_gmm(k, d, rng));
    const auto xs = testsupport::gaussian_samples(m, d, 0.0, 1.2, rng);
    const bool sigma = c % 2 == 0;
    const Vector got = docqa::aggregate_fv(xs, AggregateConfig::fisher(g, sigma, 0.5, false, false)).values;
    const Vector want = testsupport::fv_oracle(*g, xs, sigma);
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  o.require(worst < kFvOracleTol, "oracle deviation " + sci(worst));
  if (o.pass) o.detail = "hand case, 12 dimension checks, 20 oracle cases (max dev " + sci(worst) + ")";
  return o;
}

Outcome em_soundness() {
  Outcome o;
  double worst_drop = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t d = 2 + seed % 3, k = 2 + seed % 3;
    std::vector<Vector> xs;
    for (std::size_t c = 0; c < k + 1; ++c) {
      const double centre = 4.0 * static_cast<double>(c) - 3.0;
      for (auto& x : testsupport::gaussian_samples(150, d, centre, 1.0 + 0.3 * c, rng)) xs.push_back(x);
    }
    const docqa::GmmFit fit = docqa::fit_gmm(xs, k, {.max_iter = 100, .tol = 0.0, .seed = seed});
    const auto& trace = fit.log_likelihood_trace;
    for (std::size_t i = 1; i < trace.size(); ++i) worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
  }
  o.require(worst_drop <= kEmMonotoneTol, "log-likelihood dropped by " + sci(worst_drop));

  std::mt19937_64 rng(42);
  constexpr std::size_t d = 3;
  std::vector<Vector> xs;
  for (double sign : {1.0, -1.0}) {
    for (auto x : testsupport::gaussian_samples(500, d, 0.0, 1.0, rng)) {
      x[0] += sign * 10.0;
      xs.push_back(x);
    }
  }
  const docqa::GmmModel g = docqa::fit_gmm(xs, 2, {.seed = 3}).model;
  const std::size_t pos = g.means[0][0] > 0 ? 0 : 1;
  double mean_err = 0.0, weight_err = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double target = i == pos ? 10.0 : -10.0;
    double e = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = j == 0 ? target : 0.0;
      e += (g.means[i][j] - t) * (g.means[i][j] - t);
    }
    mean_err = std::max(mean_err, std::sqrt(e));
    weight_err = std::max(weight_err, std::abs(g.weights[i] - 0.5));
  }
  o.require(mean_err < kClusterMeanTol, "cluster mean error " + fmt(mean_err, 4));
  o.require(weight_err < kClusterWeightTol, "cluster weight error " + fmt(weight_err, 4));
  if (o.pass) {
    o.detail = "5 datasets monotone (max drop " + sci(worst_drop) + "), recovery mean err " +
               fmt(mean_err, 4) + ", weight err " + fmt(weight_err, 4);
  }
  return o;
}

// Scores every document and every snippet directly and compares with the library.
Outcome oracle_equivalence() {
  Outcome o;
  docqa::SynGenConfig cfg;
  cfg.seed = 20;
  cfg.num_documents = 20;
  cfg.total_questions = 50;
  cfg.distractor_fraction = 0.2;
  const docqa::Corpus corpus = docqa::generate_corpus(cfg).corpus;
  o.require(corpus.questions.size() == 50, "corpus has " + std::to_string(corpus.questions.size()) + " questions");

  auto phoc = std::make_shared<const docqa::PhocProvider>();
  std::vector<Vector> words;
  Stage raw = sum_stage(phoc);
  for (const Document& d : corpus.documents) {
    for (Vector& v : docqa::embed_words(d, docqa::content_words(d), raw)) words.push_back(std::move(v));
  }
  auto pca = std::make_shared<const docqa::PcaModel>(docqa::fit_pca(words, 16));
  auto gmm = std::make_shared<const docqa::GmmModel>(
      docqa::fit_gmm(docqa::pca_transform(*pca, words), 8, {.seed = 5}).model);
  Stage fv;
  fv.provider = phoc;
  fv.pca = pca;
  fv.aggregation = AggregateConfig::fisher(gmm);

  constexpr std::size_t proposals = 5;
  const docqa::SnippetWindow window{};
  std::size_t compared = 0;
  for (const auto& [name, stage] : {std::pair<std::string, Stage>{"sum", raw}, {"fv", fv}}) {
    const docqa::DocumentIndex index = docqa::build_index(corpus.documents, stage);
    std::vector<Vector> doc_vectors;
    for (const Document& d : corpus.documents) {
      Vector v = docqa::document_vector(d, stage);
      for (double& x : v) x = static_cast<double>(static_cast<float>(x));
      doc_vectors.push_back(std::move(v));
    }
    for (const Question& q : corpus.questions) {
      const auto query = docqa::question_vector(q, stage);
      const auto got = docqa::retrieve_documents(index, q, stage, proposals);
      if (!query) {
        o.require(got.abstained, name + ": " + q.id + " should abstain");
        continue;
      }
      std::vector<std::pair<double, std::string>> scan;
      for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        scan.emplace_back(testsupport::cosine_oracle(*query, doc_vectors[i]), corpus.documents[i].id);
      }
      std::sort(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      bool same = got.ranked.size() == proposals;
      for (std::size_t i = 0; same && i < proposals; ++i) {
        same = got.ranked[i].doc_id == scan[i].second &&
               std::abs(got.ranked[i].score - scan[i].first) < kOracleScoreTol;
      }
      o.require(same, name + ": ranking differs for " + q.id);

      std::vector<const Document*> docs;
      for (const auto& s : got.ranked) docs.push_back(corpus.find_document(s.doc_id));
      const auto answer = docqa::extract_answer(docs, q, stage, window);
      std::optional<docqa::Snippet> best;
      double best_score = -2.0;
      for (const Document* d : docs) {
        for (std::size_t start = 0; start < d->lines.size(); start += window.step) {
          const std::size_t end = std::min(start + window.window, d->lines.size()) - 1;
          const docqa::Snippet s = docqa::make_snippet(*d, start, end);
          const double score = testsupport::cosine_oracle(docqa::snippet_vector(*d, s, stage), *query);
          const bool better = !best || score > best_score ||
                              (score == best_score && (s.doc_id < best->doc_id ||
                                                       (s.doc_id == best->doc_id && s.start_line < best->start_line)));
          if (better) {
            best = s;
            best_score = score;
          }
          if (end + 1 == d->lines.size()) break;
        }
      }
      const bool same_snippet = answer.snippet && best && answer.snippet->doc_id == best->doc_id &&
                                answer.snippet->start_line == best->start_line &&
                                answer.snippet->end_line == best->end_line && answer.snippet->box == best->box &&
                                std::abs(answer.score - best_score) < kOracleScoreTol;
      o.require(same_snippet, name + ": snippet differs for " + q.id);
      ++compared;
    }
  }
  if (o.pass) o.detail = std::to_string(compared) + " question/config pairs match (SUM, FV K=8 D_w=16)";
  return o;
}

Outcome retrieval_quality() {
  Outcome o;
  const docqa::Corpus& corpus = acceptance_corpus().corpus;
  docqa::PipelineConfig config;
  config.retriever = sum_stage(std::make_shared<const docqa::PhocProvider>());
  config.snippet = config.retriever;
  const docqa::DocumentIndex index = docqa::build_index(corpus.documents, config.retriever);
  docqa::EvalOptions options;
  options.proposals = 5;
  options.n_values = {1, 5};
  const docqa::EvalReport r = docqa::evaluate_pipeline(corpus, index, config, options);
  o.require(r.evaluated == 200, std::to_string(r.evaluated) + " questions evaluated");
  o.require(r.topn_accuracy.at(5) == 100.0, "top-5 " + fmt(r.topn_accuracy.at(5)) + "%");
  o.require(r.snippet_accuracy >= kSnippetAccuracyMin, "snippet accuracy " + fmt(r.snippet_accuracy) + "%");
  std::size_t missed = 0;
  for (const auto& q : r.per_question) missed += (!q.target_rank || *q.target_rank > 5) ? 1 : 0;
  o.detail = (o.pass ? "" : o.detail + "; ") + "top-1 " + fmt(r.topn_accuracy.at(1)) + "%, top-5 " +
             fmt(r.topn_accuracy.at(5)) + "% (" + std::to_string(missed) + " missed), snippet accuracy " +
             fmt(r.snippet_accuracy) + "% over " + std::to_string(r.evaluated) + " questions";
  return o;
}

Outcome proposal_trend() {
  Outcome o;
  const docqa::Corpus& corpus = acceptance_corpus().corpus;
  const auto ranks = target_ranks(corpus, sum_stage(std::make_shared<const docqa::PhocProvider>()));
  std::string curve;
  double prev = -1.0;
  for (std::size_t n : kTrendN) {
    const double v = top_n(ranks, n);
    o.require(v >= prev, "rate drops at n=" + std::to_string(n));
    prev = v;
    curve += (curve.empty() ? "" : " ") + std::to_string(n) + ":" + fmt(v, 1);
  }
  o.require(top_n(ranks, corpus.documents.size()) == 100.0, "not 100% at n = corpus size");
  o.detail = (o.pass ? "" : o.detail + "; ") + "target-in-proposals " + curve;
  return o;
}

Outcome noise_degradation() {
  Outcome o;
  const docqa::Corpus& corpus = acceptance_corpus().corpus;
  std::string curve;
  double prev = 101.0, last = 0.0;
  for (double sigma : kSigmas) {
    const auto provider = std::make_shared<const docqa::NoisyPhocProvider>(sigma, kAcceptanceSeed);
    const double v = top_n(target_ranks(corpus, sum_stage(provider)), 5);
    o.require(v <= prev, "top-5 rises at sigma=" + fmt(sigma));
    prev = last = v;
    curve += (curve.empty() ? "" : " ") + fmt(sigma) + ":" + fmt(v, 1);
  }
  const docqa::TfIdfRetriever tfidf(corpus.documents);
  std::vector<std::optional<std::size_t>> ranks;
  for (const Question& q : corpus.questions) {
    if (!q.answers.empty()) ranks.push_back(docqa::target_rank(tfidf.retrieve(q, tfidf.size()), q));
  }
  const double baseline = top_n(ranks, 5);
  o.require(baseline > last, "TF-IDF " + fmt(baseline, 1) + "% does not exceed " + fmt(last, 1) + "%");
  o.detail = (o.pass ? "" : o.detail + "; ") + "top-5 by sigma " + curve + ", TF-IDF " + fmt(baseline, 1);
  return o;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(docqa::read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

Outcome power_norm_report() {
  Outcome o;
  testsupport::TempDir dir("docqa-accept");
  const std::string d = dir.path().string();
  if (cli({"gen-corpus", "--acceptance", "--seed", std::to_string(kAcceptanceSeed), "--out", d + "/c"}) != 0 ||
      cli({"ablate", "--corpus", d + "/c", "--k-values", "4,8,16", "--pca-dims", "16", "--out", d + "/a"}) != 0) {
    o.require(false, "ablate failed");
    return o;
  }
  const auto rows = read_csv(d + "/a/curves/fv_size.csv");
  const std::vector<std::string> header{"pca_dim", "k", "fv_dim", "top1_power", "top1_nopower", "top5_power",
                                        "top5_nopower"};
  o.require(!rows.empty() && rows[0] == header, "unexpected fv_size.csv header");
  std::set<std::string> ks;
  std::string summary;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      o.require(false, "row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) + " cells");
      continue;
    }
    ks.insert(rows[r][1]);
    const double pca_dim = std::stod(rows[r][0]), k = std::stod(rows[r][1]);
    o.require(std::stod(rows[r][2]) == pca_dim * k, "fv_dim mismatch in row " + std::to_string(r));
    for (std::size_t c = 3; c < rows[r].size(); ++c) {
      const double v = std::stod(rows[r][c]);
      o.require(v >= 0.0 && v <= 100.0, "accuracy out of range in row " + std::to_string(r));
    }
    summary += " K=" + rows[r][1] + " " + rows[r][5] + "/" + rows[r][6];
  }
  o.require(ks.size() >= 3, "only " + std::to_string(ks.size()) + " K values");
  if (o.pass) o.detail = "top-5 power/nopower:" + summary;
  return o;
}

Outcome determinism() {
  Outcome o;
  testsupport::TempDir dir("docqa-determinism");
  std::vector<std::string> report, metrics, index;
  for (const char* run : {"run1", "run2"}) {
    const std::string d = (dir.path() / run).string();
    if (cli({"gen-corpus", "--acceptance", "--seed", std::to_string(kAcceptanceSeed), "--out", d}) != 0 ||
        cli({"fit-pca", "--corpus", d, "--dim", "16", "--out", d}) != 0 ||
        cli({"fit-gmm", "--corpus", d, "--pca", d + "/pca.json", "-k", "8", "--seed", "1", "--out", d}) != 0 ||
        cli({"build-index", "--corpus", d, "--retriever", "fv", "--retriever-gmm", d + "/gmm.json",
             "--retriever-pca", d + "/pca.json", "--out", d}) != 0 ||
        cli({"evaluate", "--corpus", d, "--index", d + "/index.bin", "--retriever", "fv", "--retriever-gmm",
             d + "/gmm.json", "--retriever-pca", d + "/pca.json", "--out", d}) != 0) {
      o.require(false, std::string(run) + " failed");
      return o;
    }
    report.push_back(docqa::read_file(d + "/report.json"));
    metrics.push_back(docqa::read_file(d + "/metrics.csv"));
    index.push_back(docqa::read_file(d + "/index.bin"));
  }
  o.require(report[0] == report[1], "report.json differs");
  o.require(metrics[0] == metrics[1], "metrics.csv differs");
  o.require(index[0] == index[1], "index.bin differs");
  if (o.pass) o.detail = "report.json, metrics.csv and index.bin identical (" + std::to_string(report[0].size()) + " report bytes)";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "metric correctness", 5, metric_correctness},
      {2, "Fisher Vector correctness", 10, fv_correctness},
      {3, "EM soundness", 30, em_soundness},
      {4, "oracle equivalence", 60, oracle_equivalence},
      {5, "end-to-end retrieval quality", 120, retrieval_quality},
      {6, "proposal trend", 0, proposal_trend},
      {7, "noise degradation", 0, noise_degradation},
      {8, "power-norm ablation report", 0, power_norm_report},
      {9, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.pass = false;
      o.detail += "; took " + fmt(secs) + " s, limit " + fmt(c.time_limit, 0) + " s";
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << " (" << fmt(secs) << " s): " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
