#include "embench/wordpiece.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <unordered_set>

#include "embench/error.hpp"

namespace embench::wordpiece {

namespace {

constexpr std::string_view kSpecials[] = {kPad, kUnk, kCls, kSep, kMask};

bool has_continuation_prefix(std::string_view piece) {
  return piece.size() > kContinuation.size() && piece.substr(0, kContinuation.size()) == kContinuation;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw ValidationError("empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ValidationError("duplicate token '" + tokens_[i] + "'");
    }
  }
  auto special = [&](std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ValidationError("vocabulary lacks " + std::string(name));
    return it->second;
  };
  pad_ = special(kPad);
  unk_ = special(kUnk);
  cls_ = special(kCls);
  sep_ = special(kSep);
  mask_ = special(kMask);
}

Vocab Vocab::with_specials(std::vector<std::string> pieces) {
  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  tokens.insert(tokens.end(), std::make_move_iterator(pieces.begin()),
                std::make_move_iterator(pieces.end()));
  return Vocab(std::move(tokens));
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocab::is_special(TokenId id) const {
  return id == pad_ || id == unk_ || id == cls_ || id == sep_ || id == mask_;
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return Vocab(std::move(tokens));
  } catch (const ValidationError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : vocab.tokens()) out << t << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

using PairKey = std::uint64_t;

PairKey make_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<PairKey>(a) << 32) | b;
}
std::uint32_t key_left(PairKey k) { return static_cast<std::uint32_t>(k >> 32); }
std::uint32_t key_right(PairKey k) { return static_cast<std::uint32_t>(k & 0xffffffffu); }

struct Candidate {
  std::uint64_t pair_count;
  std::uint64_t left_count;
  std::uint64_t right_count;
  std::string merged;
  PairKey key;
};

// True when `x` should be merged before `y`.
bool ranks_before(const Candidate& x, const Candidate& y) {
  using u128 = unsigned __int128;
  const u128 lhs = static_cast<u128>(x.pair_count) * y.left_count * y.right_count;
  const u128 rhs = static_cast<u128>(y.pair_count) * x.left_count * x.right_count;
  if (lhs != rhs) return lhs > rhs;
  if (x.merged != y.merged) return x.merged < y.merged;
  return x.key < y.key;
}

struct HeapOrder {
  bool operator()(const Candidate& x, const Candidate& y) const { return ranks_before(y, x); }
};

class Trainer {
 public:
  Trainer(const SentenceCorpus& corpus, const TrainOptions& options) : options_(options) {
    std::map<std::string, std::uint64_t> word_counts;
    for (const auto& sentence : corpus.sentences) {
      const std::string lowered = fold_case(sentence);
      for (auto word : split_whitespace(lowered)) ++word_counts[std::string(word)];
    }

    std::set<std::string> alphabet;
    std::vector<std::vector<std::string>> spelled;
    for (const auto& [word, count] : word_counts) {
      auto cps = utf8_code_points(word);
      if (cps.size() > kMaxWordChars) continue;
      std::vector<std::string> symbols;
      for (std::size_t i = 0; i < cps.size(); ++i) {
        symbols.push_back(i == 0 ? std::string(cps[i]) : std::string(kContinuation) + std::string(cps[i]));
        alphabet.insert(symbols.back());
      }
      spelled.push_back(std::move(symbols));
      word_freq_.push_back(count);
    }
    if (spelled.empty()) throw ValidationError("cannot train a vocabulary on an empty corpus");

    const std::size_t floor = std::size(kSpecials) + alphabet.size();
    if (options_.target_size < floor) {
      throw ValidationError("target_size " + std::to_string(options_.target_size) +
                            " is below specials + alphabet = " + std::to_string(floor));
    }
    if (options_.min_frequency == 0) throw ValidationError("min_frequency must be positive");

    for (const auto& s : alphabet) intern(s);
    for (const auto& symbols : spelled) {
      std::vector<std::uint32_t> ids;
      ids.reserve(symbols.size());
      for (const auto& s : symbols) ids.push_back(index_.at(s));
      words_.push_back(std::move(ids));
    }
    token_count_.assign(pieces_.size(), 0);
    for (std::size_t w = 0; w < words_.size(); ++w) {
      for (auto t : words_[w]) token_count_[t] += word_freq_[w];
      add_pairs(w);
    }
    for (const auto& [key, count] : pair_count_) push(key);
  }

  std::vector<std::string> run() {
    std::size_t vocab_size = std::size(kSpecials) + pieces_.size();
    while (vocab_size < options_.target_size && !heap_.empty()) {
      Candidate top = heap_.top();
      heap_.pop();
      if (!is_current(top)) continue;
      const std::size_t before = pieces_.size();
      merge(top);
      if (pieces_.size() > before) ++vocab_size;
    }
    return pieces_;
  }

 private:
  std::uint32_t intern(const std::string& piece) {
    auto [it, inserted] = index_.emplace(piece, static_cast<std::uint32_t>(pieces_.size()));
    if (inserted) {
      pieces_.push_back(piece);
      token_count_.push_back(0);
    }
    return it->second;
  }

  std::string merged_string(PairKey key) const {
    const auto& right = pieces_[key_right(key)];
    return pieces_[key_left(key)] + right.substr(kContinuation.size());
  }

  void bump_pair(PairKey key, std::int64_t delta, std::size_t word) {
    auto& count = pair_count_[key];
    const bool was_zero = count == 0;
    count = static_cast<std::uint64_t>(static_cast<std::int64_t>(count) + delta);
    dirty_.insert(key);
    if (count == 0) {
      pair_count_.erase(key);
      token_pairs_[key_left(key)].erase(key);
      token_pairs_[key_right(key)].erase(key);
    } else if (was_zero) {
      token_pairs_[key_left(key)].insert(key);
      token_pairs_[key_right(key)].insert(key);
    }
    if (delta > 0) pair_words_[key].push_back(static_cast<std::uint32_t>(word));
  }

  void add_pairs(std::size_t w) {
    const auto& sym = words_[w];
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      bump_pair(make_key(sym[i], sym[i + 1]), static_cast<std::int64_t>(word_freq_[w]), w);
    }
  }

  void remove_pairs(std::size_t w) {
    const auto& sym = words_[w];
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      bump_pair(make_key(sym[i], sym[i + 1]), -static_cast<std::int64_t>(word_freq_[w]), w);
    }
  }

  void push(PairKey key) {
    auto it = pair_count_.find(key);
    if (it == pair_count_.end() || it->second < options_.min_frequency) return;
    heap_.push(Candidate{it->second, token_count_[key_left(key)], token_count_[key_right(key)],
                         merged_string(key), key});
  }

  bool is_current(const Candidate& c) const {
    auto it = pair_count_.find(c.key);
    return it != pair_count_.end() && it->second == c.pair_count &&
           it->second >= options_.min_frequency &&
           token_count_[key_left(c.key)] == c.left_count &&
           token_count_[key_right(c.key)] == c.right_count;
  }

  void merge(const Candidate& c) {
    const std::uint32_t left = key_left(c.key);
    const std::uint32_t right = key_right(c.key);
    const std::uint32_t merged = intern(c.merged);
    dirty_.clear();

    auto words = std::move(pair_words_[c.key]);
    pair_words_.erase(c.key);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());

    for (auto w : words) {
      auto& sym = words_[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        if (sym[i] == left && sym[i + 1] == right) {
          present = true;
          break;
        }
      }
      if (!present) continue;
      remove_pairs(w);
      std::vector<std::uint32_t> next;
      next.reserve(sym.size());
      std::uint64_t merges = 0;
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
          next.push_back(merged);
          ++merges;
          ++i;
        } else {
          next.push_back(sym[i]);
        }
      }
      sym = std::move(next);
      const std::uint64_t moved = merges * word_freq_[w];
      token_count_[left] -= moved;
      token_count_[right] -= moved;
      token_count_[merged] += moved;
      add_pairs(w);
    }

    // Every pair touching a token whose count changed has a new score.
    for (auto t : {left, right, merged}) {
      for (auto key : token_pairs_[t]) dirty_.insert(key);
    }
    for (auto key : dirty_) push(key);
  }

  TrainOptions options_;
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::vector<std::uint32_t>> words_;
  std::vector<std::uint64_t> word_freq_;
  std::vector<std::uint64_t> token_count_;
  std::unordered_map<PairKey, std::uint64_t> pair_count_;
  std::unordered_map<PairKey, std::vector<std::uint32_t>> pair_words_;
  std::unordered_map<std::uint32_t, std::unordered_set<PairKey>> token_pairs_;
  std::unordered_set<PairKey> dirty_;
  std::priority_queue<Candidate, std::vector<Candidate>, HeapOrder> heap_;
};

}  // namespace

Vocab train_vocab(const SentenceCorpus& corpus, const TrainOptions& options) {
  Trainer trainer(corpus, options);
  return Vocab::with_specials(trainer.run());
}

std::vector<TokenId> segment_word(std::string_view word, const Vocab& vocab) {
  const auto cps = utf8_code_points(word);
  if (cps.empty()) return {};
  if (cps.size() > kMaxWordChars) return {vocab.unk_id()};

  std::vector<std::size_t> offsets;
  offsets.reserve(cps.size() + 1);
  for (auto cp : cps) offsets.push_back(static_cast<std::size_t>(cp.data() - word.data()));
  offsets.push_back(word.size());

  std::vector<TokenId> pieces;
  std::string candidate;
  std::size_t start = 0;
  while (start < cps.size()) {
    std::optional<TokenId> found;
    std::size_t end = cps.size();
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate.append(kContinuation);
      candidate.append(word.substr(offsets[start], offsets[end] - offsets[start]));
      if ((found = vocab.find(candidate))) break;
    }
    if (!found) return {vocab.unk_id()};
    pieces.push_back(*found);
    start = end;
  }
  return pieces;
}

TokenSequence encode(std::string_view text, const Vocab& vocab, std::size_t max_length) {
  if (max_length < 2) throw ValidationError("max_length must be at least 2");
  const std::string lowered = fold_case(text);

  TokenSequence seq;
  seq.max_length = max_length;
  seq.ids.reserve(max_length);
  seq.ids.push_back(vocab.cls_id());
  for (auto word : split_whitespace(lowered)) {
    for (auto id : segment_word(word, vocab)) {
      if (seq.ids.size() + 1 >= max_length) break;
      seq.ids.push_back(id);
    }
    if (seq.ids.size() + 1 >= max_length) break;
  }
  seq.ids.push_back(vocab.sep_id());
  seq.attention_mask.assign(seq.ids.size(), 1);
  seq.ids.resize(max_length, vocab.pad_id());
  seq.attention_mask.resize(max_length, 0);
  return seq;
}

std::string decode(const TokenSequence& seq, const Vocab& vocab) {
  std::string out;
  for (auto id : seq.ids) {
    const std::string& piece = vocab.token(id);
    if (id != vocab.unk_id() && vocab.is_special(id)) continue;
    if (!out.empty() && id != vocab.unk_id() && has_continuation_prefix(piece)) {
      out.append(piece, kContinuation.size());
      continue;
    }
    if (!out.empty()) out.push_back(' ');
    out.append(piece);
  }
  return out;
}

}  // namespace embench::wordpiece
