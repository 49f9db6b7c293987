#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embench/textprep.hpp"

namespace embench::wordpiece {

inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kMask = "[MASK]";
inline constexpr std::string_view kContinuation = "##";

inline constexpr std::size_t kDefaultVocabSize = 30522;
inline constexpr std::size_t kDefaultMaxLength = 128;
inline constexpr std::size_t kMaxWordChars = 100;

using TokenId = std::int32_t;

// Ordered token list; a token's id is its position. Specials must each
// appear exactly once; trained vocabularies place them at ids 0..4.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  // Specials followed by `pieces`.
  static Vocab with_specials(std::vector<std::string> pieces);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  bool is_special(TokenId id) const;

  TokenId pad_id() const noexcept { return pad_; }
  TokenId unk_id() const noexcept { return unk_; }
  TokenId cls_id() const noexcept { return cls_; }
  TokenId sep_id() const noexcept { return sep_; }
  TokenId mask_id() const noexcept { return mask_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId pad_ = -1, unk_ = -1, cls_ = -1, sep_ = -1, mask_ = -1;
};

Vocab load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);

struct TrainOptions {
  std::size_t target_size = kDefaultVocabSize;
  std::size_t min_frequency = 2;
};

// Builds a vocabulary from whitespace-separated words of the corpus: specials,
// then every observed character (word-initial and "##" forms, byte-sorted),
// then merged pieces in merge order. Each round merges the adjacent pair
// with the highest count(ab) / (count(a) * count(b)) among pairs seen at
// least min_frequency times; ties go to the lexicographically smallest
// merged string.
Vocab train_vocab(const SentenceCorpus& corpus, const TrainOptions& options = {});

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> attention_mask;
  std::size_t max_length = 0;
};

// Greedy longest-match-first pieces of a single (already lowercased) word.
// Returns {unk} when any remainder cannot be matched or the word is longer
// than kMaxWordChars code points.
std::vector<TokenId> segment_word(std::string_view word, const Vocab& vocab);

// Lowercases, segments each word, frames with [CLS] ... [SEP], then
// truncates or pads to max_length (at least 2).
TokenSequence encode(std::string_view text, const Vocab& vocab,
                     std::size_t max_length = kDefaultMaxLength);

// Drops framing and padding tokens and fuses "##" pieces onto the preceding
// piece. [UNK] is rendered literally. Unknown ids raise ValidationError.
std::string decode(const TokenSequence& seq, const Vocab& vocab);

}  // namespace embench::wordpiece
