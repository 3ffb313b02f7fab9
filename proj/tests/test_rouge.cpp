#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rehearsal/rouge.hpp"

using namespace rehearsal::rouge;

namespace {

TokenSeq seq(std::vector<std::string> tokens) { return TokenSeq{std::move(tokens)}; }

TokenSeq random_seq(std::mt19937_64& rng, std::size_t max_len,
                    std::size_t vocab) {
  TokenSeq s;
  std::size_t len = rng() % (max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    s.tokens.push_back("w" + std::to_string(rng() % vocab));
  }
  return s;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs") {
  CHECK(tokenize("The dog runs.").tokens ==
        std::vector<std::string>{"the", "dog", "runs"});
  CHECK(tokenize("").tokens.empty());
  CHECK(tokenize("Wi-Fi 5GHz!").tokens ==
        std::vector<std::string>{"wi", "fi", "5ghz"});
  CHECK(tokenize("  \t\n ").tokens.empty());
  CHECK(tokenize("a,b;;c").tokens == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("rouge_n identity and disjoint cases") {
  TokenSeq x = seq({"the", "cat", "sat", "down"});
  CHECK(rouge_n(x, x, 1).f1 == doctest::Approx(1.0));
  CHECK(rouge_n(x, x, 2).f1 == doctest::Approx(1.0));

  TokenSeq y = seq({"dog", "ran", "away"});
  CHECK(rouge_n(x, y, 1).f1 == doctest::Approx(0.0));
  CHECK(rouge_n(x, y, 2).f1 == doctest::Approx(0.0));
}

TEST_CASE("rouge_1 matches the hand-enumerated 2/3 case") {
  // Unigram multisets {the,cat,sat} vs {the,cat,ran}: overlap 2 of 3.
  TokenSeq cand = seq({"the", "cat", "sat"});
  TokenSeq ref = seq({"the", "cat", "ran"});
  RougeScore s = rouge_n(cand, ref, 1);
  CHECK(s.precision == doctest::Approx(2.0 / 3.0));
  CHECK(s.recall == doctest::Approx(2.0 / 3.0));
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("rouge_n clipping caps repeated candidate tokens") {
  // cand repeats "the" three times; ref has it once.
  RougeScore s = rouge_n(seq({"the", "the", "the"}), seq({"the", "cat"}), 1);
  CHECK(s.precision == doctest::Approx(1.0 / 3.0));
  CHECK(s.recall == doctest::Approx(1.0 / 2.0));
}

TEST_CASE("rouge_l identity, empty, and the LCS=3 case") {
  TokenSeq x = seq({"a", "b", "c"});
  CHECK(rouge_l(x, x).f1 == doctest::Approx(1.0));
  CHECK(rouge_l(seq({}), x).f1 == doctest::Approx(0.0));
  CHECK(rouge_l(x, seq({})).f1 == doctest::Approx(0.0));

  // Frozen from the exhaustive-subsequence oracle: LCS({a,b,c,d},{a,c,b,d})=3.
  TokenSeq cand = seq({"a", "b", "c", "d"});
  TokenSeq ref = seq({"a", "c", "b", "d"});
  CHECK(oracle::lcs_exhaustive(cand.tokens, ref.tokens) == 3);
  RougeScore s = rouge_l(cand, ref);
  CHECK(s.f1 == doctest::Approx(0.75));
}

TEST_CASE("rouge_sum_against perfect and disjoint references") {
  CHECK(rouge_sum_against("the fit is great", {"the fit is great"}) ==
        doctest::Approx(3.0));
  CHECK(rouge_sum_against("totally unrelated words",
                          {"zip quality bad", "price too high"}) ==
        doctest::Approx(0.0));
}

TEST_CASE("rouge_sum_against concatenates refs; oracle agrees") {
  std::string ref1 = "the shoes fit very well and look great";
  std::string ref2 = "price was too high for the quality offered";
  std::string cand = "the shoes fit very well";  // first half of ref1

  oracle::Tokens c = tokenize(cand).tokens;
  oracle::Tokens r = tokenize(ref1 + "\n\n" + ref2).tokens;
  double expected = oracle::rouge_n(c, r, 1).f1 + oracle::rouge_n(c, r, 2).f1 +
                    oracle::rouge_l(c, r).f1;
  CHECK(rouge_sum_against(cand, {ref1, ref2}) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("property: identity scores 1 for all non-empty sequences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    TokenSeq x = random_seq(rng, 20, 6);
    if (x.empty()) continue;
    CHECK(rouge_n(x, x, 1).f1 == doctest::Approx(1.0));
    CHECK(rouge_l(x, x).f1 == doctest::Approx(1.0));
    if (x.size() >= 2) CHECK(rouge_n(x, x, 2).f1 == doctest::Approx(1.0));
  }
}

TEST_CASE("property: adding a matching token never decreases recall") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    TokenSeq cand = random_seq(rng, 15, 5);
    TokenSeq ref = random_seq(rng, 15, 5);
    if (ref.empty()) continue;
    double before = rouge_n(cand, ref, 1).recall;
    TokenSeq extended = cand;
    extended.tokens.push_back(ref.tokens[rng() % ref.size()]);
    CHECK(rouge_n(extended, ref, 1).recall >= before - 1e-12);
  }
}

TEST_CASE("property: rouge_l F1 never exceeds rouge_1 F1") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    TokenSeq cand = random_seq(rng, 25, 8);
    TokenSeq ref = random_seq(rng, 25, 8);
    CHECK(rouge_l(cand, ref).f1 <= rouge_n(cand, ref, 1).f1 + 1e-12);
  }
}

TEST_CASE("oracle equivalence on 200 random pairs") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    TokenSeq cand = random_seq(rng, 30, 10);
    TokenSeq ref = random_seq(rng, 30, 10);

    for (int n : {1, 2}) {
      RougeScore mine = rouge_n(cand, ref, n);
      oracle::Score want = oracle::rouge_n(cand.tokens, ref.tokens, n);
      CHECK(mine.precision == doctest::Approx(want.precision).epsilon(1e-9));
      CHECK(mine.recall == doctest::Approx(want.recall).epsilon(1e-9));
      CHECK(mine.f1 == doctest::Approx(want.f1).epsilon(1e-9));
    }
    RougeScore mine = rouge_l(cand, ref);
    oracle::Score want = oracle::rouge_l(cand.tokens, ref.tokens);
    CHECK(mine.f1 == doctest::Approx(want.f1).epsilon(1e-9));

    // The two oracle LCS routes agree on small inputs.
    if (cand.size() <= 12) {
      CHECK(oracle::lcs(cand.tokens, ref.tokens) ==
            oracle::lcs_exhaustive(cand.tokens, ref.tokens));
    }
  }
}
