#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "docqa/aggregate.hpp"
#include "docqa/corpus.hpp"
#include "docqa/embed.hpp"
#include "docqa/error.hpp"
#include "docqa/eval.hpp"
#include "docqa/gmm.hpp"
#include "docqa/pca.hpp"
#include "docqa/retrieve.hpp"
#include "docqa/stopwords.hpp"
#include "docqa/syngen.hpp"
#include "docqa/tfidf.hpp"
#include "json.hpp"

namespace docqa::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct EmbedOptions {
  std::string spec = "phoc";
  double sigma = 0.0;
  std::uint64_t seed = 0;

  json to_json() const { return {{"embed", spec}, {"sigma", sigma}, {"embed_seed", seed}}; }
};

struct StageOptions {
  std::string aggregation = "sum";
  std::string gmm;
  std::string pca;

  json to_json() const { return {{"aggregation", aggregation}, {"gmm", gmm}, {"pca", pca}}; }
};

void add_embed_options(CLI::App* sub, EmbedOptions& o) {
  sub->add_option("--embed", o.spec, "Embedding provider: phoc | phoc-noisy | store:PATH")->capture_default_str();
  sub->add_option("--sigma", o.sigma, "Noise std for phoc-noisy")->capture_default_str();
  sub->add_option("--embed-seed", o.seed, "Noise seed for phoc-noisy")->capture_default_str();
}

void add_stage_options(CLI::App* sub, StageOptions& o, const std::string& name) {
  sub->add_option("--" + name, o.aggregation,
                  "Aggregation for the " + name + ": sum | fv[:sigma,nopower,nol2,alpha=A]")
      ->capture_default_str();
  sub->add_option("--" + name + "-gmm", o.gmm, "GMM file for --" + name + " fv");
  sub->add_option("--" + name + "-pca", o.pca, "PCA model applied before the " + name + " aggregation");
}

std::shared_ptr<const EmbeddingProvider> make_provider(const EmbedOptions& o) {
  if (o.spec == "phoc") return std::make_shared<PhocProvider>();
  if (o.spec == "phoc-noisy") return std::make_shared<NoisyPhocProvider>(o.sigma, o.seed);
  if (o.spec.rfind("store:", 0) == 0) return load_embedding_store(o.spec.substr(6));
  throw Error("unknown embedding provider '" + o.spec + "' (expected phoc, phoc-noisy or store:PATH)");
}

AggregateConfig parse_aggregation(const std::string& spec, const std::string& gmm_path, const std::string& flag) {
  if (spec == "sum") return AggregateConfig::sum();
  if (spec.rfind("fv", 0) != 0 || (spec.size() > 2 && spec[2] != ':')) {
    throw Error("unknown aggregation '" + spec + "' for --" + flag + " (expected sum or fv[:options])");
  }
  if (gmm_path.empty()) throw Error("--" + flag + " fv needs a GMM (--" + flag + "-gmm FILE)");
  AggregateConfig c = AggregateConfig::fisher(std::make_shared<const GmmModel>(load_gmm(gmm_path)));
  if (spec.size() > 3) {
    std::stringstream opts(spec.substr(3));
    std::string opt;
    while (std::getline(opts, opt, ',')) {
      if (opt == "sigma") {
        c.include_sigma = true;
      } else if (opt == "nopower") {
        c.power_norm = false;
      } else if (opt == "nol2") {
        c.l2_norm = false;
      } else if (opt.rfind("alpha=", 0) == 0) {
        try {
          c.alpha = std::stod(opt.substr(6));
        } catch (const std::exception&) {
          throw Error("bad alpha in '" + spec + "'");
        }
      } else {
        throw Error("unknown fv option '" + opt + "' in '" + spec + "'");
      }
    }
  }
  return c;
}

std::shared_ptr<const PcaModel> maybe_pca(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const PcaModel>(load_pca(path));
}

Stage make_stage(std::shared_ptr<const EmbeddingProvider> provider, const StageOptions& o, const std::string& flag) {
  Stage s;
  s.provider = std::move(provider);
  s.pca = maybe_pca(o.pca);
  s.aggregation = parse_aggregation(o.aggregation, o.gmm, flag);
  s.validate();
  return s;
}

Corpus read_corpus(const std::string& dir, std::ostream& err) {
  if (dir.empty()) throw Error("no corpus directory given (--corpus DIR)");
  std::vector<std::string> warnings;
  Corpus c = load_corpus(dir, &warnings);
  for (const std::string& w : warnings) err << "docqa: warning: " << w << "\n";
  mark_stop_words(c, StopWordList::english().predicate());
  return c;
}

fs::path resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  throw Error(std::string("no output directory: pass --out or set ") + kOutDirEnv);
}

// Each command records its configuration, seed and input hashes under its own
// key of <out>/manifest.json; other commands' entries are preserved.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  json& config() { return entry_["config"]; }
  void seed(std::uint64_t s) { entry_["seed"] = s; }
  void input(const std::string& role, const fs::path& path) { entry_["inputs"][role] = hash_file(path); }
  void corpus(const fs::path& dir) {
    input("corpus/documents.jsonl", dir / "documents.jsonl");
    if (fs::exists(dir / "questions.jsonl")) input("corpus/questions.jsonl", dir / "questions.jsonl");
  }
  void output(const std::string& name) { entry_["outputs"].push_back(name); }
  void set(const std::string& key, json value) { entry_[key] = std::move(value); }

  void write(const fs::path& dir) const {
    const fs::path path = dir / "manifest.json";
    json all = json::object();
    if (fs::exists(path)) {
      try {
        all = json::parse(read_file(path));
      } catch (const json::exception&) {
        all = json::object();
      }
    }
    all["commands"][command_] = entry_;
    write_file(path, all.dump(2) + "\n");
  }

 private:
  std::string command_;
  json entry_ = json::object();
};

std::vector<Vector> content_embeddings(const Corpus& corpus, const EmbeddingProvider& provider,
                                       const PcaModel* pca) {
  Stage s;
  s.provider = std::shared_ptr<const EmbeddingProvider>(&provider, [](const EmbeddingProvider*) {});
  std::vector<Vector> out;
  for (const Document& d : corpus.documents) {
    for (Vector& v : embed_words(d, content_words(d), s)) out.push_back(pca ? pca_transform(*pca, v) : std::move(v));
  }
  if (out.empty()) throw Error("corpus has no embeddable content words");
  return out;
}

Question text_question(const std::string& text) {
  Question q;
  q.id = "text";
  q.text = text;
  q.tokens = tokenize(text);
  if (q.tokens.empty()) throw Error("question text has no tokens");
  mark_stop_words(q, StopWordList::english().predicate());
  return q;
}

std::vector<Question> select_questions(const Corpus& corpus, const std::string& id, const std::string& text) {
  if (!text.empty()) return {text_question(text)};
  if (id.empty()) return corpus.questions;
  for (const Question& q : corpus.questions) {
    if (q.id == id) return {q};
  }
  throw Error("question '" + id + "' not found in the corpus");
}

json snippet_json(const Snippet& s) {
  return {{"doc_id", s.doc_id},
          {"start_line", s.start_line},
          {"end_line", s.end_line},
          {"box", {s.box.x, s.box.y, s.box.w, s.box.h}}};
}

// Target ranks of the labeled questions under full-depth retrieval.
std::vector<std::optional<std::size_t>> ranks_for(const Corpus& corpus, const DocumentIndex& index, const Stage& stage) {
  std::vector<std::optional<std::size_t>> out;
  for (const Question& q : corpus.questions) {
    if (q.answers.empty()) continue;
    out.push_back(target_rank(retrieve_documents(index, q, stage, std::max<std::size_t>(1, index.size())), q));
  }
  return out;
}

std::vector<std::optional<std::size_t>> tfidf_ranks(const Corpus& corpus) {
  TfIdfRetriever tfidf(corpus.documents);
  std::vector<std::optional<std::size_t>> out;
  for (const Question& q : corpus.questions) {
    if (q.answers.empty()) continue;
    out.push_back(target_rank(tfidf.retrieve(q, std::max<std::size_t>(1, tfidf.size())), q));
  }
  return out;
}

double hit_rate(const std::vector<std::optional<std::size_t>>& ranks, std::size_t n) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : ranks) hits += (r && *r <= n) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

void print_summary(const EvalReport& r, std::ostream& out) {
  out << "questions " << r.question_count << "  evaluated " << r.evaluated << "  unlabeled " << r.unlabeled_excluded
      << "  abstained " << r.abstained << "  errors " << r.errors << "\n";
  for (const auto& [n, pct] : r.topn_accuracy) out << "  top-" << n << " accuracy   " << fixed(pct, 2) << "%\n";
  out << "  snippet accuracy " << fixed(r.snippet_accuracy, 2) << "% (DIS > " << r.threshold << ", " << r.proposals
      << " proposals)\n";
  out << "  mean line F1     " << fixed(r.line_f1_mean, 2) << "\n";
}

// Accuracy by question length (token count), from an evaluation report.
std::string question_length_csv(const EvalReport& r) {
  struct Bucket {
    std::size_t count = 0, correct = 0, top5 = 0;
  };
  std::map<std::size_t, Bucket> buckets;
  for (const QuestionOutcome& o : r.per_question) {
    Bucket& b = buckets[o.question_length];
    ++b.count;
    b.correct += o.correct ? 1 : 0;
    b.top5 += (o.target_rank && *o.target_rank <= 5) ? 1 : 0;
  }
  std::string csv = "question_length,questions,top5_accuracy,snippet_accuracy\n";
  for (const auto& [len, b] : buckets) {
    const double n = static_cast<double>(b.count);
    csv += std::to_string(len) + "," + std::to_string(b.count) + "," + fixed(100.0 * b.top5 / n) + "," +
           fixed(100.0 * b.correct / n) + "\n";
  }
  return csv;
}

std::string topn_csv(const EvalReport& r) {
  std::string csv = "n,target_in_proposals\n";
  for (const auto& [n, pct] : r.topn_accuracy) csv += std::to_string(n) + "," + fixed(pct) + "\n";
  return csv;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        out.push_back(std::stod(item, &used));
      } else {
        const long long v = std::stoll(item, &used);
        if (v < 0) throw std::invalid_argument("negative");
        out.push_back(static_cast<T>(v));
      }
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("bad value '" + item + "' in --" + flag);
    }
  }
  if (out.empty()) throw Error("--" + flag + " needs at least one value");
  return out;
}

// ---- commands -------------------------------------------------------------

struct GenCorpusArgs {
  std::uint64_t seed = 0;
  bool acceptance = false;
  std::size_t documents = 20;
  std::size_t questions = 0;
  double distractors = 0.3;
  std::string out;
};

void gen_corpus(const GenCorpusArgs& a, std::ostream& out) {
  const fs::path dir = resolve_out(a.out);
  SynGenConfig config = a.acceptance ? acceptance_config(a.seed) : SynGenConfig{};
  if (!a.acceptance) {
    config.seed = a.seed;
    config.num_documents = a.documents;
    config.total_questions = a.questions;
    config.distractor_fraction = a.distractors;
  }
  const SyntheticCorpus syn = generate_corpus(config);
  save_corpus(syn.corpus, dir);
  std::string layouts = "doc_id,char_width,word_height,word_spacing,line_spacing,border_left,border_top,border_right,border_bottom,irregular\n";
  for (const LayoutRecord& l : syn.layouts) {
    layouts += l.doc_id + "," + std::to_string(l.char_width) + "," + std::to_string(l.word_height) + "," +
               std::to_string(l.word_spacing) + "," + std::to_string(l.line_spacing) + "," +
               std::to_string(l.border_left) + "," + std::to_string(l.border_top) + "," +
               std::to_string(l.border_right) + "," + std::to_string(l.border_bottom) + "," +
               (l.irregular ? "1" : "0") + "\n";
  }
  write_file(dir / "layouts.csv", layouts);

  Manifest m("gen-corpus");
  m.config() = {{"acceptance", a.acceptance},
                {"num_documents", config.num_documents},
                {"total_questions", config.total_questions},
                {"distractor_fraction", config.distractor_fraction}};
  m.seed(a.seed);
  for (const char* f : {"documents.jsonl", "questions.jsonl", "layouts.csv"}) m.output(f);
  m.set("distractors", syn.distractors);
  m.write(dir);
  out << "wrote " << syn.corpus.documents.size() << " documents and " << syn.corpus.questions.size()
      << " questions to " << dir.string() << "\n";
}

struct FitPcaArgs {
  std::string corpus;
  EmbedOptions embed;
  std::size_t dim = 64;
  std::string file = "pca.json";
  std::string out;
};

void fit_pca_cmd(const FitPcaArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir = resolve_out(a.out);
  const Corpus corpus = read_corpus(a.corpus, err);
  const auto provider = make_provider(a.embed);
  const std::vector<Vector> samples = content_embeddings(corpus, *provider, nullptr);
  const PcaModel model = fit_pca(samples, a.dim);
  save_pca(model, dir / a.file);

  Manifest m("fit-pca");
  m.config() = a.embed.to_json();
  m.config()["corpus"] = a.corpus;
  m.config()["dim"] = a.dim;
  m.corpus(a.corpus);
  m.output(a.file);
  m.set("fingerprint", model.fingerprint());
  m.set("samples", samples.size());
  m.write(dir);
  out << "fitted PCA " << model.input_dim << " -> " << model.output_dim << " on " << samples.size()
      << " word embeddings; wrote " << (dir / a.file).string() << "\n";
}

struct FitGmmArgs {
  std::string corpus;
  EmbedOptions embed;
  std::string pca;
  std::size_t k = 16;
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-6;
  std::string file = "gmm.json";
  std::string out;
};

void fit_gmm_cmd(const FitGmmArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir = resolve_out(a.out);
  const Corpus corpus = read_corpus(a.corpus, err);
  const auto provider = make_provider(a.embed);
  const auto pca = maybe_pca(a.pca);
  if (pca && pca->input_dim != provider->dim()) {
    throw ModelError("PCA model " + a.pca + " expects dimension " + std::to_string(pca->input_dim) +
                     " but the embedding has " + std::to_string(provider->dim()));
  }
  const std::vector<Vector> samples = content_embeddings(corpus, *provider, pca.get());
  GmmFitConfig config;
  config.seed = a.seed;
  config.max_iter = a.max_iter;
  config.tol = a.tol;
  const GmmFit fit = fit_gmm(samples, a.k, config);
  save_gmm(fit.model, dir / a.file);

  Manifest m("fit-gmm");
  m.config() = a.embed.to_json();
  m.config()["corpus"] = a.corpus;
  m.config()["pca"] = a.pca;
  m.config()["K"] = a.k;
  m.config()["max_iter"] = a.max_iter;
  m.config()["tol"] = a.tol;
  m.seed(a.seed);
  m.corpus(a.corpus);
  if (pca) m.input("pca", a.pca);
  m.output(a.file);
  m.set("fingerprint", fit.model.fingerprint());
  m.set("iterations", fit.iterations);
  m.set("converged", fit.converged);
  m.set("log_likelihood_trace", fit.log_likelihood_trace);
  m.write(dir);
  out << "fitted GMM K=" << a.k << " D=" << fit.model.dim() << " in " << fit.iterations << " iterations"
      << (fit.converged ? "" : " (not converged)") << ", mean log-likelihood "
      << fixed(fit.log_likelihood_trace.back(), 6) << "; wrote " << (dir / a.file).string() << "\n";
}

struct StageArgs {
  std::string corpus;
  EmbedOptions embed;
  StageOptions retriever;
  StageOptions snippet;
};

void record_stage_inputs(Manifest& m, const StageOptions& s, const std::string& name) {
  if (!s.pca.empty()) m.input(name + "-pca", s.pca);
  if (!s.gmm.empty()) m.input(name + "-gmm", s.gmm);
}

struct BuildIndexArgs {
  StageArgs stage;
  std::string file = "index.bin";
  std::string out;
};

void build_index_cmd(const BuildIndexArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir = resolve_out(a.out);
  const Corpus corpus = read_corpus(a.stage.corpus, err);
  const Stage stage = make_stage(make_provider(a.stage.embed), a.stage.retriever, "retriever");
  const DocumentIndex index = build_index(corpus.documents, stage);
  save_index(index, dir / a.file);

  Manifest m("build-index");
  m.config() = a.stage.embed.to_json();
  m.config()["corpus"] = a.stage.corpus;
  m.config()["retriever"] = a.stage.retriever.to_json();
  m.corpus(a.stage.corpus);
  record_stage_inputs(m, a.stage.retriever, "retriever");
  m.output(a.file);
  m.set("fingerprint", index.fingerprint);
  m.write(dir);
  out << "indexed " << index.size() << " documents (dim " << index.dim << ", fingerprint " << index.fingerprint
      << "); wrote " << (dir / a.file).string() << "\n";
}

struct QueryArgs {
  StageArgs stage;
  std::string index;
  std::string question;
  std::string text;
  std::size_t n = 5;
  std::size_t window = 2;
  std::size_t step = 1;
  std::string out;
};

DocumentIndex open_index(const std::string& path, const Stage& stage) {
  if (path.empty()) throw Error("no index given (--index FILE)");
  return load_index(path, stage.fingerprint());
}

void retrieve_cmd(const QueryArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir = resolve_out(a.out);
  const Corpus corpus = read_corpus(a.stage.corpus, err);
  const Stage stage = make_stage(make_provider(a.stage.embed), a.stage.retriever, "retriever");
  const DocumentIndex index = open_index(a.index, stage);
  json results = json::array();
  for (const Question& q : select_questions(corpus, a.question, a.text)) {
    const RetrievalResult r = retrieve_documents(index, q, stage, a.n);
    json ranked = json::array();
    out << q.id << ":";
    if (r.abstained) out << " (abstained: no content words)";
    for (const ScoredDocument& s : r.ranked) {
      ranked.push_back({{"doc_id", s.doc_id}, {"score", s.score}});
      out << " " << s.doc_id << " (" << fixed(s.score) << ")";
    }
    out << "\n";
    results.push_back({{"question_id", q.id}, {"abstained", r.abstained}, {"ranked", std::move(ranked)}});
  }
  write_file(dir / "retrieval.json", results.dump(2) + "\n");

  Manifest m("retrieve");
  m.config() = a.stage.embed.to_json();
  m.config()["corpus"] = a.stage.corpus;
  m.config()["retriever"] = a.stage.retriever.to_json();
  m.config()["n"] = a.n;
  m.config()["question"] = a.question;
  m.config()["text"] = a.text;
  m.corpus(a.stage.corpus);
  m.input("index", a.index);
  record_stage_inputs(m, a.stage.retriever, "retriever");
  m.output("retrieval.json");
  m.write(dir);
}

PipelineConfig make_pipeline(const StageArgs& a, SnippetWindow window) {
  const auto provider = make_provider(a.embed);
  return {make_stage(provider, a.retriever, "retriever"), make_stage(provider, a.snippet, "snippet"), window};
}

void answer_cmd(const QueryArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir = resolve_out(a.out);
  const Corpus corpus = read_corpus(a.stage.corpus, err);
  const PipelineConfig pipeline = make_pipeline(a.stage, {a.window, a.step});
  const DocumentIndex index = open_index(a.index, pipeline.retriever);
  json results = json::array();
  for (const Question& q : select_questions(corpus, a.question, a.text)) {
    const QaOutcome o = answer_question(corpus, index, q, pipeline, a.n);
    json proposals = json::array();
    for (const ScoredDocument& s : o.retrieval.ranked) proposals.push_back(s.doc_id);
    json entry = {{"question_id", q.id}, {"proposals", std::move(proposals)}, {"abstained", o.answer.abstained}};
    out << q.id << ": ";
    if (o.answer.snippet) {
      const Snippet& s = *o.answer.snippet;
      entry["snippet"] = snippet_json(s);
      entry["score"] = o.answer.score;
      out << s.doc_id << " lines " << s.start_line << "-" << s.end_line << " box [" << s.box.x << "," << s.box.y
          << "," << s.box.w << "," << s.box.h << "] score " << fixed(o.answer.score) << "\n";
    } else {
      out << "(abstained)\n";
    }
    results.push_back(std::move(entry));
  }
  write_file(dir / "answers.json", results.dump(2) + "\n");

  Manifest m("answer");
  m.config() = a.stage.embed.to_json();
  m.config()["corpus"] = a.stage.corpus;
  m.config()["retriever"] = a.stage.retriever.to_json();
  m.config()["snippet"] = a.stage.snippet.to_json();
  m.config()["n"] = a.n;
  m.config()["window"] = a.window;
  m.config()["step"] = a.step;
  m.config()["question"] = a.question;
  m.config()["text"] = a.text;
  m.corpus(a.stage.corpus);
  m.input("index", a.index);
  record_stage_inputs(m, a.stage.retriever, "retriever");
  record_stage_inputs(m, a.stage.snippet, "snippet");
  m.output("answers.json");
  m.write(dir);
}

struct EvaluateArgs {
  QueryArgs query;
  std::string n_values = "1,5,10";
  double threshold = kDisThreshold;
  int jobs = 0;
};

void evaluate_cmd(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const QueryArgs& q = a.query;
  const fs::path dir = resolve_out(q.out);
  const Corpus corpus = read_corpus(q.stage.corpus, err);
  const PipelineConfig pipeline = make_pipeline(q.stage, {q.window, q.step});
  const DocumentIndex index = open_index(q.index, pipeline.retriever);
  EvalOptions options;
  options.proposals = q.n;
  options.n_values = parse_list<std::size_t>(a.n_values, "n-values");
  options.threshold = a.threshold;
  options.jobs = a.jobs;
  const EvalReport report = evaluate_pipeline(corpus, index, pipeline, options);
  write_report(report, dir);
  write_file(dir / "curves" / "topn.csv", topn_csv(report));
  write_file(dir / "curves" / "question_length.csv", question_length_csv(report));

  Manifest m("evaluate");
  m.config() = q.stage.embed.to_json();
  m.config()["corpus"] = q.stage.corpus;
  m.config()["retriever"] = q.stage.retriever.to_json();
  m.config()["snippet"] = q.stage.snippet.to_json();
  m.config()["proposals"] = q.n;
  m.config()["window"] = q.window;
  m.config()["step"] = q.step;
  m.config()["threshold"] = a.threshold;
  m.config()["n_values"] = options.n_values;
  m.corpus(q.stage.corpus);
  m.input("index", q.index);
  record_stage_inputs(m, q.stage.retriever, "retriever");
  record_stage_inputs(m, q.stage.snippet, "snippet");
  for (const char* f : {"report.json", "metrics.csv", "curves/topn.csv", "curves/question_length.csv"}) m.output(f);
  m.set("index_fingerprint", index.fingerprint);
  m.write(dir);
  print_summary(report, out);
}

struct AblateArgs {
  std::string corpus;
  EmbedOptions embed;
  std::string n_values = "1,2,5,10,25,100";
  std::string k_values = "4,8,16";
  std::string pca_dims = "16,32";
  std::string sigmas = "0,0.05,0.2,0.5";
  std::string proposals = "1,2,5,10,20";
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string out;
};

void ablate_cmd(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir = resolve_out(a.out);
  const Corpus corpus = read_corpus(a.corpus, err);
  const auto n_values = parse_list<std::size_t>(a.n_values, "n-values");
  const auto k_values = parse_list<std::size_t>(a.k_values, "k-values");
  const auto pca_dims = parse_list<std::size_t>(a.pca_dims, "pca-dims");
  const auto sigmas = parse_list<double>(a.sigmas, "sigmas");
  const auto proposal_counts = parse_list<std::size_t>(a.proposals, "proposals");
  const auto provider = make_provider(a.embed);

  // Baseline SUM/SUM pipeline: full report plus top-n and question length curves.
  Stage sum_stage;
  sum_stage.provider = provider;
  const DocumentIndex sum_index = build_index(corpus.documents, sum_stage);
  const PipelineConfig baseline{sum_stage, sum_stage, {}};
  EvalOptions options;
  options.n_values = n_values;
  options.jobs = a.jobs;
  const EvalReport report = evaluate_pipeline(corpus, sum_index, baseline, options);
  write_report(report, dir);
  write_file(dir / "curves" / "question_length.csv", question_length_csv(report));

  // Snippet accuracy against the number of proposals.
  std::string proposals_csv = "proposals,snippet_accuracy,line_f1\n";
  for (std::size_t p : proposal_counts) {
    EvalOptions po = options;
    po.proposals = p;
    const EvalReport r = p == options.proposals ? report : evaluate_pipeline(corpus, sum_index, baseline, po);
    proposals_csv += std::to_string(p) + "," + fixed(r.snippet_accuracy) + "," + fixed(r.line_f1_mean) + "\n";
  }
  write_file(dir / "curves" / "proposals.csv", proposals_csv);

  // FV over (D_w, K), each with and without power normalization.
  const std::vector<Vector> raw = content_embeddings(corpus, *provider, nullptr);
  std::vector<std::string> topn_columns{"target_in_proposals"};
  std::vector<std::vector<std::optional<std::size_t>>> topn_ranks{ranks_for(corpus, sum_index, sum_stage)};
  std::string fv_csv = "pca_dim,k,fv_dim,top1_power,top1_nopower,top5_power,top5_nopower\n";
  std::string schemes_csv = "scheme,pca_dim,k,power_norm,top1,top5,top10\n";
  schemes_csv += "sum,off,0,0," + fixed(hit_rate(topn_ranks[0], 1)) + "," + fixed(hit_rate(topn_ranks[0], 5)) + "," +
                 fixed(hit_rate(topn_ranks[0], 10)) + "\n";
  for (std::size_t d : pca_dims) {
    const auto pca = std::make_shared<const PcaModel>(fit_pca(raw, d));
    const std::vector<Vector> projected = pca_transform(*pca, raw);
    for (std::size_t k : k_values) {
      GmmFitConfig gc;
      gc.seed = a.seed;
      const auto gmm = std::make_shared<const GmmModel>(fit_gmm(projected, k, gc).model);
      std::vector<std::optional<std::size_t>> power_ranks;
      std::vector<std::optional<std::size_t>> plain_ranks;
      for (bool power : {true, false}) {
        Stage s;
        s.provider = provider;
        s.pca = pca;
        s.aggregation = AggregateConfig::fisher(gmm, false, 0.5, power, true);
        const DocumentIndex index = build_index(corpus.documents, s);
        auto ranks = ranks_for(corpus, index, s);
        schemes_csv += "fv," + std::to_string(d) + "," + std::to_string(k) + "," + (power ? "1" : "0") + "," +
                       fixed(hit_rate(ranks, 1)) + "," + fixed(hit_rate(ranks, 5)) + "," + fixed(hit_rate(ranks, 10)) +
                       "\n";
        (power ? power_ranks : plain_ranks) = std::move(ranks);
      }
      fv_csv += std::to_string(d) + "," + std::to_string(k) + "," + std::to_string(d * k) + "," +
                fixed(hit_rate(power_ranks, 1)) + "," + fixed(hit_rate(plain_ranks, 1)) + "," +
                fixed(hit_rate(power_ranks, 5)) + "," + fixed(hit_rate(plain_ranks, 5)) + "\n";
      topn_columns.push_back("fv_d" + std::to_string(d) + "_k" + std::to_string(k));
      topn_ranks.push_back(std::move(power_ranks));
    }
  }
  write_file(dir / "curves" / "fv_size.csv", fv_csv);
  write_file(dir / "curves" / "schemes.csv", schemes_csv);

  std::string topn = "n";
  for (const std::string& c : topn_columns) topn += "," + c;
  topn += "\n";
  for (std::size_t n : n_values) {
    topn += std::to_string(n);
    for (const auto& ranks : topn_ranks) topn += "," + fixed(hit_rate(ranks, n));
    topn += "\n";
  }
  write_file(dir / "curves" / "topn.csv", topn);

  // Embedding noise against the transcription baseline.
  const auto tfidf = tfidf_ranks(corpus);
  std::string noise_csv = "sigma,top1,top5,tfidf_top1,tfidf_top5\n";
  for (double sigma : sigmas) {
    Stage s;
    s.provider = std::make_shared<NoisyPhocProvider>(sigma, a.embed.seed);
    const DocumentIndex index = build_index(corpus.documents, s);
    const auto ranks = ranks_for(corpus, index, s);
    noise_csv += fixed(sigma) + "," + fixed(hit_rate(ranks, 1)) + "," + fixed(hit_rate(ranks, 5)) + "," +
                 fixed(hit_rate(tfidf, 1)) + "," + fixed(hit_rate(tfidf, 5)) + "\n";
  }
  write_file(dir / "curves" / "noise.csv", noise_csv);

  Manifest m("ablate");
  m.config() = a.embed.to_json();
  m.config()["corpus"] = a.corpus;
  m.config()["n_values"] = n_values;
  m.config()["k_values"] = k_values;
  m.config()["pca_dims"] = pca_dims;
  m.config()["sigmas"] = sigmas;
  m.config()["proposals"] = proposal_counts;
  m.seed(a.seed);
  m.corpus(a.corpus);
  for (const char* f : {"report.json", "metrics.csv", "curves/topn.csv", "curves/fv_size.csv", "curves/schemes.csv",
                        "curves/question_length.csv", "curves/proposals.csv", "curves/noise.csv"}) {
    m.output(f);
  }
  m.write(dir);
  print_summary(report, out);
  out << "curves written to " << (dir / "curves").string() << "\n";
}

void add_query_options(CLI::App* sub, QueryArgs& q, bool with_snippet) {
  sub->add_option("--corpus", q.stage.corpus, "Corpus directory")->required();
  add_embed_options(sub, q.stage.embed);
  add_stage_options(sub, q.stage.retriever, "retriever");
  if (with_snippet) {
    add_stage_options(sub, q.stage.snippet, "snippet");
    sub->add_option("--window", q.window, "Snippet window in lines")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--step", q.step, "Snippet step in lines")->capture_default_str()->check(CLI::PositiveNumber);
  }
  sub->add_option("--index", q.index, "Index file from build-index")->required();
  sub->add_option("-n,--proposals", q.n, "Number of document proposals")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--out", q.out, "Run directory (default: $" + std::string(kOutDirEnv) + ")");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recognition-free question answering over segmented document images", "docqa"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic labeled corpus");
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_flag("--acceptance", gen.acceptance, "Use the fixed 100-document benchmark configuration");
  gen_cmd->add_option("--documents", gen.documents, "Number of documents")->capture_default_str();
  gen_cmd->add_option("--questions", gen.questions, "Total questions (0: 2-3 per labeled document)")->capture_default_str();
  gen_cmd->add_option("--distractors", gen.distractors, "Fraction of documents without questions")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory");

  FitPcaArgs pca;
  auto* pca_cmd = app.add_subcommand("fit-pca", "Fit PCA on the corpus word embeddings");
  pca_cmd->add_option("--corpus", pca.corpus, "Corpus directory")->required();
  add_embed_options(pca_cmd, pca.embed);
  pca_cmd->add_option("--dim", pca.dim, "Output dimension")->capture_default_str();
  pca_cmd->add_option("--file", pca.file, "Model file name inside the run directory")->capture_default_str();
  pca_cmd->add_option("--out", pca.out, "Run directory");

  FitGmmArgs gmm;
  auto* gmm_cmd = app.add_subcommand("fit-gmm", "Fit a diagonal GMM on (projected) word embeddings");
  gmm_cmd->add_option("--corpus", gmm.corpus, "Corpus directory")->required();
  add_embed_options(gmm_cmd, gmm.embed);
  gmm_cmd->add_option("--pca", gmm.pca, "PCA model applied before fitting");
  gmm_cmd->add_option("-k,--components", gmm.k, "Number of components")->capture_default_str();
  gmm_cmd->add_option("--seed", gmm.seed, "Initialization seed")->capture_default_str();
  gmm_cmd->add_option("--max-iter", gmm.max_iter, "EM iteration cap")->capture_default_str();
  gmm_cmd->add_option("--tol", gmm.tol, "Stop when the mean log-likelihood gain drops below this")->capture_default_str();
  gmm_cmd->add_option("--file", gmm.file, "Model file name inside the run directory")->capture_default_str();
  gmm_cmd->add_option("--out", gmm.out, "Run directory");

  BuildIndexArgs idx;
  auto* idx_cmd = app.add_subcommand("build-index", "Aggregate and store one vector per document");
  idx_cmd->add_option("--corpus", idx.stage.corpus, "Corpus directory")->required();
  add_embed_options(idx_cmd, idx.stage.embed);
  add_stage_options(idx_cmd, idx.stage.retriever, "retriever");
  idx_cmd->add_option("--file", idx.file, "Index file name inside the run directory")->capture_default_str();
  idx_cmd->add_option("--out", idx.out, "Run directory");

  QueryArgs ret;
  auto* ret_cmd = app.add_subcommand("retrieve", "Rank documents for questions");
  add_query_options(ret_cmd, ret, false);
  ret_cmd->add_option("--question", ret.question, "Question id (default: all questions)");
  ret_cmd->add_option("--text", ret.text, "Free-text question");

  QueryArgs ans;
  auto* ans_cmd = app.add_subcommand("answer", "Retrieve documents and extract an answer snippet");
  add_query_options(ans_cmd, ans, true);
  ans_cmd->add_option("--question", ans.question, "Question id (default: all questions)");
  ans_cmd->add_option("--text", ans.text, "Free-text question");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score the two-stage pipeline on labeled questions");
  add_query_options(ev_cmd, ev.query, true);
  ev_cmd->add_option("--n-values", ev.n_values, "Comma separated n for top-n accuracy")->capture_default_str();
  ev_cmd->add_option("--threshold", ev.threshold, "DIS threshold")->capture_default_str();
  ev_cmd->add_option("--jobs", ev.jobs, "Worker threads (0: OpenMP default)")->capture_default_str();

  AblateArgs ab;
  auto* ab_cmd = app.add_subcommand("ablate", "Sweep aggregation, FV size, proposals and noise; write curves");
  ab_cmd->add_option("--corpus", ab.corpus, "Corpus directory")->required();
  add_embed_options(ab_cmd, ab.embed);
  ab_cmd->add_option("--n-values", ab.n_values, "Comma separated n for top-n curves")->capture_default_str();
  ab_cmd->add_option("--k-values", ab.k_values, "Comma separated GMM sizes")->capture_default_str();
  ab_cmd->add_option("--pca-dims", ab.pca_dims, "Comma separated PCA dimensions")->capture_default_str();
  ab_cmd->add_option("--sigmas", ab.sigmas, "Comma separated embedding noise levels")->capture_default_str();
  ab_cmd->add_option("--proposals", ab.proposals, "Comma separated proposal counts")->capture_default_str();
  ab_cmd->add_option("--seed", ab.seed, "GMM seed")->capture_default_str();
  ab_cmd->add_option("--jobs", ab.jobs, "Worker threads (0: OpenMP default)")->capture_default_str();
  ab_cmd->add_option("--out", ab.out, "Run directory");

  std::vector<const char*> argv{"docqa"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen_cmd) gen_corpus(gen, out);
    if (*pca_cmd) fit_pca_cmd(pca, out, err);
    if (*gmm_cmd) fit_gmm_cmd(gmm, out, err);
    if (*idx_cmd) build_index_cmd(idx, out, err);
    if (*ret_cmd) retrieve_cmd(ret, out, err);
    if (*ans_cmd) answer_cmd(ans, out, err);
    if (*ev_cmd) evaluate_cmd(ev, out, err);
    if (*ab_cmd) ablate_cmd(ab, out, err);
  } catch (const std::exception& e) {
    err << "docqa: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace docqa::cli
