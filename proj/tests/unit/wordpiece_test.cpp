#include <random>

#include <gtest/gtest.h>

#include "embench/error.hpp"
#include "embench/textprep.hpp"
#include "embench/wordpiece.hpp"
#include "support/support.hpp"

using namespace embench;
using namespace embench::wordpiece;

namespace {

SentenceCorpus corpus_of(std::vector<std::string> sentences) {
  SentenceCorpus c;
  c.sentences = std::move(sentences);
  c.source_doc_ids.assign(c.sentences.size(), "d");
  return c;
}

std::vector<std::string> pieces(const TokenSequence& seq, const Vocab& vocab) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.attention_mask[i]) out.push_back(vocab.token(seq.ids[i]));
  }
  return out;
}

// Reference segmenter: at every start, scan the whole vocabulary for the
// longest piece that matches there.
std::vector<TokenId> brute_force_segment(const std::string& word, const Vocab& vocab) {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < word.size()) {
    std::size_t best_len = 0;
    TokenId best = -1;
    for (TokenId id = 0; id < static_cast<TokenId>(vocab.size()); ++id) {
      if (vocab.is_special(id)) continue;
      std::string piece = vocab.token(id);
      const bool cont = piece.rfind("##", 0) == 0;
      if (cont != (pos > 0)) continue;
      if (cont) piece = piece.substr(2);
      if (piece.empty() || piece.size() <= best_len) continue;
      if (word.compare(pos, piece.size(), piece) == 0) {
        best_len = piece.size();
        best = id;
      }
    }
    if (best < 0) return {vocab.unk_id()};
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

}  // namespace

TEST(WordPiece, HugCorpusMergesByPairScore) {
  // Alphabet h | ##g ##s ##u. Round 1: (##u,##g) and (h,##u) both score
  // 3/(3*3); "##ug" < "hu" lexicographically. Round 2: (h,##ug) scores
  // 3/(3*3) against (##ug,##s) at 1/(3*1) with count 1 < min_frequency.
  const auto vocab = train_vocab(corpus_of({"hug", "hug", "hugs"}), {100, 2});
  const std::vector<std::string> expected{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "##g",
                                          "##s",   "##u",   "h",     "##ug",  "hug"};
  EXPECT_EQ(vocab.tokens(), expected);
  EXPECT_TRUE(vocab.contains("hug"));
  EXPECT_TRUE(vocab.contains("##s"));
}

TEST(WordPiece, TargetAtAlphabetSizeMeansNoMerges) {
  const auto vocab = train_vocab(corpus_of({"hug", "hug", "hugs"}), {9, 2});
  EXPECT_EQ(vocab.size(), 9u);
  for (const auto& t : vocab.tokens()) EXPECT_LE(t.size(), 6u);
  EXPECT_FALSE(vocab.contains("##ug"));
  EXPECT_EQ(train_vocab(corpus_of({"hug"}), {8, 2}).size(), 8u);
  EXPECT_THROW(train_vocab(corpus_of({"hug"}), {7, 2}), ValidationError);
}

TEST(WordPiece, TrainingIsDeterministicAndHitsExactSize) {
  std::mt19937 gen(5);
  std::vector<std::string> sentences;
  const std::string letters = "abcdefghij";
  for (int s = 0; s < 300; ++s) {
    std::string sentence;
    for (int w = 0; w < 8; ++w) {
      const int len = 2 + static_cast<int>(gen() % 6);
      if (w) sentence += ' ';
      for (int c = 0; c < len; ++c) sentence += letters[gen() % 4 + (w % 3)];
    }
    sentences.push_back(sentence);
  }
  const auto corpus = corpus_of(sentences);
  const auto v1 = train_vocab(corpus, {120, 2});
  const auto v2 = train_vocab(corpus, {120, 2});
  EXPECT_EQ(v1, v2);
  EXPECT_EQ(v1.size(), 120u);
}

TEST(WordPiece, EncodeGreedyAndFramed) {
  const auto vocab = Vocab::with_specials({"p", "play", "##i", "##in", "##ing", "##n", "##g", "##s"});
  const auto seq = encode("Playing", vocab, 8);
  EXPECT_EQ(pieces(seq, vocab), (std::vector<std::string>{"[CLS]", "play", "##ing", "[SEP]"}));
  ASSERT_EQ(seq.ids.size(), 8u);
  ASSERT_EQ(seq.attention_mask.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(seq.attention_mask[i], seq.ids[i] == vocab.pad_id() ? 0 : 1);
  }
  EXPECT_EQ(decode(seq, vocab), "playing");
}

TEST(WordPiece, UnmatchableAndLongWordsBecomeUnk) {
  const auto vocab = Vocab::with_specials({"a", "##a"});
  EXPECT_EQ(pieces(encode("zzzz", vocab, 8), vocab), (std::vector<std::string>{"[CLS]", "[UNK]", "[SEP]"}));
  EXPECT_EQ(segment_word("ab", vocab), std::vector<TokenId>{vocab.unk_id()});
  EXPECT_EQ(segment_word(std::string(101, 'a'), vocab), std::vector<TokenId>{vocab.unk_id()});
  EXPECT_EQ(segment_word(std::string(100, 'a'), vocab).size(), 100u);
}

TEST(WordPiece, TruncationKeepsFrame) {
  const auto vocab = Vocab::with_specials({"a", "b", "c"});
  const auto seq = encode("a b c a b", vocab, 4);
  EXPECT_EQ(pieces(seq, vocab), (std::vector<std::string>{"[CLS]", "a", "b", "[SEP]"}));
  EXPECT_EQ(encode("", vocab, 2).ids, (std::vector<TokenId>{vocab.cls_id(), vocab.sep_id()}));
  EXPECT_THROW(encode("a", vocab, 1), ValidationError);
}

TEST(WordPiece, PaddingInvisibleToDecode) {
  const auto vocab = Vocab::with_specials({"a", "b", "##b"});
  EXPECT_EQ(decode(encode("ab a", vocab, 6), vocab), decode(encode("ab a", vocab, 40), vocab));
}

TEST(WordPiece, DecodeRejectsUnknownId) {
  const auto vocab = Vocab::with_specials({"a"});
  TokenSequence seq{{0, 1, 99}, {1, 1, 1}, 3};
  EXPECT_THROW(decode(seq, vocab), ValidationError);
}

TEST(WordPiece, GreedyMatchesBruteForce) {
  std::mt19937 gen(17);
  const std::string letters = "abcde";
  std::vector<std::string> pieces_in{"a", "b", "c", "ab", "abc", "bc", "cab", "##a", "##b", "##c",
                                     "##d", "##ab", "##bca", "##ca", "##dd", "##abcd", "e", "##ee"};
  const auto vocab = Vocab::with_specials(pieces_in);
  for (int i = 0; i < 1000; ++i) {
    std::string w;
    const int len = 1 + static_cast<int>(gen() % 9);
    for (int c = 0; c < len; ++c) w += letters[gen() % letters.size()];
    EXPECT_EQ(segment_word(w, vocab), brute_force_segment(w, vocab)) << w;
  }
}

TEST(WordPiece, VocabFileRoundTrip) {
  embench::testing::TempDir dir;
  const auto vocab = train_vocab(corpus_of({"hug", "hug", "hugs"}), {100, 2});
  save_vocab(vocab, dir / "vocab.txt");
  EXPECT_EQ(embench::testing::read_text(dir / "vocab.txt"),
            "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n##g\n##s\n##u\nh\n##ug\nhug\n");
  EXPECT_EQ(load_vocab(dir / "vocab.txt"), vocab);
}
