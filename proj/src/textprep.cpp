#include "embench/textprep.hpp"

#include <fstream>

#include <json.hpp>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "embench/error.hpp"

namespace embench {

std::string fold_case(std::string_view text) {
  bool ascii = true;
  for (unsigned char c : text) {
    if (c >= 0x80) {
      ascii = false;
      break;
    }
  }
  if (ascii) {
    std::string out(text);
    for (char& c : out) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
  }
  auto ustr = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  ustr.foldCase(U_FOLD_CASE_DEFAULT);
  std::string out;
  ustr.toUTF8String(out);
  return out;
}

std::vector<std::string_view> utf8_code_points(std::string_view text) {
  std::vector<std::string_view> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = lead < 0xF0 ? 3 : 1;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Appends `raw` to `out` with whitespace collapsed and trimmed; drops empties.
void push_sentence(std::string_view raw, std::vector<std::string>& out) {
  std::string sentence;
  sentence.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !sentence.empty();
      continue;
    }
    if (pending_space) sentence.push_back(' ');
    pending_space = false;
    sentence.push_back(c);
  }
  if (!sentence.empty()) out.push_back(std::move(sentence));
}

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

SentenceCorpus normalize_and_split(std::span<const Document> documents) {
  SentenceCorpus corpus;
  for (const auto& doc : documents) {
    const std::string lowered = fold_case(doc.text);
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < lowered.size()) {
      if (is_terminal(lowered[i])) {
        while (i < lowered.size() && is_terminal(lowered[i])) ++i;
        push_sentence(std::string_view(lowered).substr(start, i - start), sentences);
        start = i;
      } else {
        ++i;
      }
    }
    push_sentence(std::string_view(lowered).substr(start), sentences);
    for (auto& s : sentences) {
      corpus.sentences.push_back(std::move(s));
      corpus.source_doc_ids.push_back(doc.id);
    }
  }
  return corpus;
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string()) {
      throw ParseError(path.string() + ":" + std::to_string(number) + ": missing string id");
    }
    Document doc;
    doc.id = obj["id"].get<std::string>();
    doc.text = obj.value("text", std::string());
    docs.push_back(std::move(doc));
  }
  return docs;
}

void write_sentence_corpus(const SentenceCorpus& corpus, const std::filesystem::path& sentences_path,
                           const std::filesystem::path& sidecar_path) {
  std::ofstream text(sentences_path, std::ios::binary | std::ios::trunc);
  std::ofstream side(sidecar_path, std::ios::binary | std::ios::trunc);
  if (!text || !side) throw IoError("cannot write sentence corpus to " + sentences_path.string());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    text << corpus.sentences[i] << '\n';
    side << (i + 1) << '\t' << corpus.source_doc_ids[i] << '\n';
  }
  if (!text || !side) throw IoError("write failed for " + sentences_path.string());
}

SentenceCorpus read_sentence_corpus(const std::filesystem::path& sentences_path) {
  std::ifstream in(sentences_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + sentences_path.string());
  SentenceCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    corpus.sentences.push_back(line);
    corpus.source_doc_ids.push_back(std::to_string(corpus.sentences.size()));
  }
  return corpus;
}

}  // namespace embench
