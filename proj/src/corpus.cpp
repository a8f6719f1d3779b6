#include "docqa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "docqa/error.hpp"
#include "docqa/util.hpp"
#include "json.hpp"

namespace docqa {

using nlohmann::json;

std::optional<std::size_t> Document::find_word(std::string_view word_id) const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].id == word_id) return i;
  }
  return std::nullopt;
}

const Document* Corpus::find_document(std::string_view doc_id) const {
  auto it = std::lower_bound(documents.begin(), documents.end(), doc_id,
                             [](const Document& d, std::string_view id) { return d.id < id; });
  if (it == documents.end() || it->id != doc_id) return nullptr;
  return &*it;
}

std::string normalize_token(std::string_view raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out(raw.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::string tok = normalize_token(text.substr(i, j - i));
      if (!tok.empty()) out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

void validate_document(const Document& doc) {
  auto fail = [&](const std::string& what) {
    throw CorpusError("document '" + doc.id + "': " + what);
  };
  if (doc.id.empty()) fail("empty doc_id");
  if (doc.page_width <= 0 || doc.page_height <= 0) fail("page size must be positive");
  const Rect page{0, 0, doc.page_width, doc.page_height};

  std::set<std::string_view> ids;
  for (const WordToken& w : doc.words) {
    if (w.line_index >= doc.lines.size()) {
      fail("word '" + w.id + "': line index out of range (" + std::to_string(w.line_index) +
           " >= " + std::to_string(doc.lines.size()) + ")");
    }
    if (!ids.insert(w.id).second) fail("duplicate word id '" + w.id + "'");
    if (!w.box.valid()) fail("word '" + w.id + "': box must have positive width and height");
    if (!page.contains(w.box)) fail("word '" + w.id + "': box lies outside the page");
  }

  std::vector<int> membership(doc.words.size(), 0);
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const TextLine& line = doc.lines[i];
    const std::string where = "line " + std::to_string(i) + ": ";
    if (line.index != i) fail(where + "line indices must be contiguous from 0");
    if (line.words.empty()) fail(where + "no words");
    if (!line.box.valid()) fail(where + "box must have positive width and height");
    if (i > 0 && line.box.y < doc.lines[i - 1].box.y) fail(where + "lines must be ordered top to bottom");
    for (std::size_t pos : line.words) {
      if (pos >= doc.words.size()) fail(where + "word position out of range");
      const WordToken& w = doc.words[pos];
      if (w.line_index != i) fail("word '" + w.id + "': line index mismatch");
      if (!line.box.contains(w.box)) fail(where + "box does not contain word '" + w.id + "'");
      ++membership[pos];
    }
  }
  for (std::size_t pos = 0; pos < doc.words.size(); ++pos) {
    if (membership[pos] != 1) fail("word '" + doc.words[pos].id + "' must belong to exactly one line");
  }
}

namespace {

struct Source {
  std::string file;
  std::size_t line = 0;
  std::vector<std::string>* warnings = nullptr;

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw CorpusError(file + ":" + std::to_string(line) + ": field '" + field + "': " + what);
  }
  void warn_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& context) const {
    if (!warnings) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool found = std::any_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; });
      if (!found) {
        warnings->push_back(file + ":" + std::to_string(line) + ": ignoring unknown field '" +
                            context + it.key() + "'");
      }
    }
  }
};

const json& require(const json& obj, const char* key, const Source& src, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) src.fail(path + key, "missing");
  return *it;
}

std::int64_t as_int(const json& v, const Source& src, const std::string& field) {
  if (!v.is_number_integer()) src.fail(field, "expected an integer");
  return v.get<std::int64_t>();
}

Rect as_rect(const json& v, const Source& src, const std::string& field) {
  if (!v.is_array() || v.size() != 4) src.fail(field, "expected [x, y, w, h]");
  Rect r{as_int(v[0], src, field), as_int(v[1], src, field), as_int(v[2], src, field),
         as_int(v[3], src, field)};
  if (!r.valid()) src.fail(field, "width and height must be positive");
  return r;
}

std::string as_id(const json& v, const Source& src, const std::string& field) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.empty()) src.fail(field, "empty identifier");
    return s;
  }
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    return std::to_string(v.get<std::uint64_t>());
  }
  src.fail(field, "expected a string or non-negative integer identifier");
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }

Document parse_document(const json& obj, const Source& src) {
  if (!obj.is_object()) src.fail("<record>", "expected a JSON object");
  src.warn_unknown(obj, {"doc_id", "page", "lines"}, "");

  Document doc;
  doc.id = as_id(require(obj, "doc_id", src, ""), src, "doc_id");
  const json& page = require(obj, "page", src, "");
  if (!page.is_object()) src.fail("page", "expected {w, h}");
  src.warn_unknown(page, {"w", "h"}, "page.");
  doc.page_width = as_int(require(page, "w", src, "page."), src, "page.w");
  doc.page_height = as_int(require(page, "h", src, "page."), src, "page.h");
  if (doc.page_width <= 0 || doc.page_height <= 0) src.fail("page", "size must be positive");

  const json& lines = require(obj, "lines", src, "");
  if (!lines.is_array()) src.fail("lines", "expected an array");
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string lp = "lines[" + std::to_string(li) + "]";
    const json& lobj = lines[li];
    if (!lobj.is_object()) src.fail(lp, "expected an object");
    src.warn_unknown(lobj, {"box", "words"}, lp + ".");
    TextLine line;
    line.index = li;
    line.box = as_rect(require(lobj, "box", src, lp + "."), src, lp + ".box");
    const json& words = require(lobj, "words", src, lp + ".");
    if (!words.is_array() || words.empty()) src.fail(lp + ".words", "expected a non-empty array");
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
      const std::string wp = lp + ".words[" + std::to_string(wi) + "]";
      const json& wobj = words[wi];
      if (!wobj.is_object()) src.fail(wp, "expected an object");
      src.warn_unknown(wobj, {"id", "text", "box", "stop", "line"}, wp + ".");
      WordToken w;
      w.id = as_id(require(wobj, "id", src, wp + "."), src, wp + ".id");
      w.box = as_rect(require(wobj, "box", src, wp + "."), src, wp + ".box");
      w.line_index = li;
      if (auto it = wobj.find("line"); it != wobj.end()) {
        std::int64_t declared = as_int(*it, src, wp + ".line");
        if (declared < 0 || static_cast<std::size_t>(declared) >= lines.size()) {
          src.fail(wp + ".line", "line index out of range");
        }
        if (static_cast<std::size_t>(declared) != li) src.fail(wp + ".line", "line index mismatch");
      }
      if (auto it = wobj.find("text"); it != wobj.end() && !it->is_null()) {
        if (!it->is_string()) src.fail(wp + ".text", "expected a string");
        w.text = normalize_token(it->get<std::string>());
      }
      if (auto it = wobj.find("stop"); it != wobj.end() && !it->is_null()) {
        if (!it->is_boolean()) src.fail(wp + ".stop", "expected a boolean");
        w.stop_hint = it->get<bool>();
        w.stop_word = *w.stop_hint;
      }
      line.words.push_back(doc.words.size());
      doc.words.push_back(std::move(w));
    }
    doc.lines.push_back(std::move(line));
  }

  try {
    validate_document(doc);
  } catch (const CorpusError& e) {
    src.fail("doc_id", e.what());
  }
  return doc;
}

json document_json(const Document& doc) {
  json lines = json::array();
  for (const TextLine& line : doc.lines) {
    json words = json::array();
    for (std::size_t pos : line.words) {
      const WordToken& w = doc.words[pos];
      json wj = {{"id", w.id}, {"box", rect_json(w.box)}};
      if (w.text) wj["text"] = *w.text;
      if (w.stop_hint) wj["stop"] = *w.stop_hint;
      words.push_back(std::move(wj));
    }
    lines.push_back({{"box", rect_json(line.box)}, {"words", std::move(words)}});
  }
  return {{"doc_id", doc.id},
          {"page", {{"w", doc.page_width}, {"h", doc.page_height}}},
          {"lines", std::move(lines)}};
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, std::vector<std::string>* warnings, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::string text;
  Source src{path.filename().string(), 0, warnings};
  while (std::getline(in, text)) {
    ++src.line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      src.fail("<record>", std::string("invalid JSON: ") + e.what());
    }
    fn(obj, src);
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir, std::vector<std::string>* warnings) {
  Corpus corpus;
  std::set<std::string> seen;
  for_each_record(dir / "documents.jsonl", warnings, [&](const json& obj, const Source& src) {
    Document doc = parse_document(obj, src);
    if (!seen.insert(doc.id).second) src.fail("doc_id", "duplicate document '" + doc.id + "'");
    corpus.documents.push_back(std::move(doc));
  });
  std::sort(corpus.documents.begin(), corpus.documents.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });

  const auto qpath = dir / "questions.jsonl";
  if (!std::filesystem::exists(qpath)) return corpus;
  std::set<std::string> qids;
  for_each_record(qpath, warnings, [&](const json& obj, const Source& src) {
    if (!obj.is_object()) src.fail("<record>", "expected a JSON object");
    src.warn_unknown(obj, {"question_id", "text", "answers"}, "");
    Question q;
    q.id = as_id(require(obj, "question_id", src, ""), src, "question_id");
    if (!qids.insert(q.id).second) src.fail("question_id", "duplicate question '" + q.id + "'");
    const json& text = require(obj, "text", src, "");
    if (!text.is_string()) src.fail("text", "expected a string");
    q.text = text.get<std::string>();
    q.tokens = tokenize(q.text);
    if (q.tokens.empty()) src.fail("text", "question has no tokens");
    q.token_stop.assign(q.tokens.size(), false);

    if (auto it = obj.find("answers"); it != obj.end()) {
      if (!it->is_array()) src.fail("answers", "expected an array");
      for (std::size_t ai = 0; ai < it->size(); ++ai) {
        const std::string ap = "answers[" + std::to_string(ai) + "]";
        const json& aobj = (*it)[ai];
        if (!aobj.is_object()) src.fail(ap, "expected an object");
        src.warn_unknown(aobj, {"doc_id", "word_ids"}, ap + ".");
        std::string doc_id = as_id(require(aobj, "doc_id", src, ap + "."), src, ap + ".doc_id");
        const Document* doc = corpus.find_document(doc_id);
        if (!doc) src.fail(ap + ".doc_id", "unknown document '" + doc_id + "'");
        const json& ids = require(aobj, "word_ids", src, ap + ".");
        if (!ids.is_array() || ids.empty()) src.fail(ap + ".word_ids", "expected a non-empty array");
        std::vector<std::string> word_ids;
        for (const json& id : ids) word_ids.push_back(as_id(id, src, ap + ".word_ids"));
        try {
          q.answers.push_back(derive_ground_truth_boxes(*doc, word_ids));
        } catch (const CorpusError& e) {
          src.fail(ap + ".word_ids", e.what());
        }
      }
    }
    corpus.questions.push_back(std::move(q));
  });
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::string docs;
  for (const Document& doc : corpus.documents) {
    docs += document_json(doc).dump();
    docs += '\n';
  }
  write_file(dir / "documents.jsonl", docs);

  std::string qs;
  for (const Question& q : corpus.questions) {
    json answers = json::array();
    for (const GroundTruthAnswer& a : q.answers) {
      answers.push_back({{"doc_id", a.doc_id}, {"word_ids", a.word_ids}});
    }
    qs += json{{"question_id", q.id}, {"text", q.text}, {"answers", std::move(answers)}}.dump();
    qs += '\n';
  }
  write_file(dir / "questions.jsonl", qs);
}

GroundTruthAnswer derive_ground_truth_boxes(const Document& doc,
                                            std::span<const std::string> answer_word_ids) {
  if (answer_word_ids.empty()) throw CorpusError("answer has no words");
  if (doc.lines.empty()) throw CorpusError("document '" + doc.id + "' has no lines");
  GroundTruthAnswer gt;
  gt.doc_id = doc.id;
  gt.word_ids.assign(answer_word_ids.begin(), answer_word_ids.end());
  std::set<std::size_t> lines;
  bool first = true;
  for (const std::string& id : answer_word_ids) {
    auto pos = doc.find_word(id);
    if (!pos) throw CorpusError("unknown word id '" + id + "' in document '" + doc.id + "'");
    const WordToken& w = doc.words[*pos];
    gt.sb = first ? w.box : unite(gt.sb, w.box);
    first = false;
    lines.insert(w.line_index);
  }
  gt.answer_lines.assign(lines.begin(), lines.end());

  const std::size_t lo = gt.answer_lines.front() == 0 ? 0 : gt.answer_lines.front() - 1;
  const std::size_t hi = std::min(gt.answer_lines.back() + 1, doc.lines.size() - 1);
  gt.lb = doc.lines[lo].box;
  for (std::size_t i = lo + 1; i <= hi; ++i) gt.lb = unite(gt.lb, doc.lines[i].box);
  return gt;
}

Snippet make_snippet(const Document& doc, std::size_t start_line, std::size_t end_line) {
  if (start_line > end_line || end_line >= doc.lines.size()) {
    throw CorpusError("snippet lines out of range in document '" + doc.id + "'");
  }
  Snippet s{doc.id, start_line, end_line, doc.lines[start_line].box};
  for (std::size_t i = start_line + 1; i <= end_line; ++i) s.box = unite(s.box, doc.lines[i].box);
  return s;
}

std::vector<Snippet> enumerate_snippets(const Document& doc, std::size_t window, std::size_t step) {
  if (window == 0 || step == 0) throw CorpusError("snippet window and step must be >= 1");
  const std::size_t l = doc.lines.size();
  if (l == 0) throw CorpusError("document '" + doc.id + "' has no lines");
  if (l <= window) return {make_snippet(doc, 0, l - 1)};

  std::vector<Snippet> out;
  std::size_t start = 0;
  for (; start + window <= l; start += step) out.push_back(make_snippet(doc, start, start + window - 1));
  // A step larger than one can leave trailing lines uncovered; close with a final full window.
  if (out.back().end_line < l - 1) out.push_back(make_snippet(doc, l - window, l - 1));
  return out;
}

}  // namespace docqa
