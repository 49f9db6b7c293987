#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embench {

// Full Unicode case folding of UTF-8 text (e.g. "Straße" -> "strasse").
std::string fold_case(std::string_view text);

// Splits UTF-8 text into code points, each returned as its byte sequence.
// Invalid bytes are passed through one at a time.
std::vector<std::string_view> utf8_code_points(std::string_view text);

// Whitespace-delimited words of the text.
std::vector<std::string_view> split_whitespace(std::string_view text);

struct Document {
  std::string id;
  std::string text;
};

struct SentenceCorpus {
  std::vector<std::string> sentences;
  std::vector<std::string> source_doc_ids;  // parallel to sentences

  std::size_t size() const noexcept { return sentences.size(); }
};

// Lowercases every document and splits it after runs of '.', '!' or '?'.
// Terminal punctuation stays with its sentence, whitespace runs collapse to
// one space, and empty sentences are dropped.
SentenceCorpus normalize_and_split(std::span<const Document> documents);

std::vector<Document> load_documents(const std::filesystem::path& path);

// One sentence per line, plus a sidecar TSV of "line<TAB>doc_id" (1-based).
void write_sentence_corpus(const SentenceCorpus& corpus, const std::filesystem::path& sentences_path,
                           const std::filesystem::path& sidecar_path);

SentenceCorpus read_sentence_corpus(const std::filesystem::path& sentences_path);

}  // namespace embench
