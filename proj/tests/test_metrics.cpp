#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "kw2sent/metrics.hpp"
#include "kw2sent/rng.hpp"
#include "kw2sent/stemmer.hpp"
#include "kw2sent/tagger.hpp"
#include "kw2sent/toy_grammar.hpp"
#include "support/oracles.hpp"

using namespace kw2sent;

namespace {

Sentence words(std::initializer_list<const char*> ws) {
  Sentence s;
  for (const char* w : ws) s.emplace_back(w);
  return s;
}

// random corpora over a small shared vocabulary so n-gram overlaps happen
std::pair<std::vector<Sentence>, std::vector<Sentence>> random_corpus(
    std::size_t n, Rng& rng) {
  static const std::vector<std::string> vocab = {
      "the", "a",   "dog",  "cat",   "sat",   "ran",  "fast", "slow",
      "big", "red", "house", "tree", "jumped", "over", "under"};
  std::vector<Sentence> cands, refs;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence c, r;
    std::size_t lc = 1 + rng.index(8), lr = 1 + rng.index(8);
    for (std::size_t k = 0; k < lc; ++k)
      c.push_back(vocab[rng.index(vocab.size())]);
    for (std::size_t k = 0; k < lr; ++k)
      r.push_back(vocab[rng.index(vocab.size())]);
    cands.push_back(std::move(c));
    refs.push_back(std::move(r));
  }
  return {cands, refs};
}

}  // namespace

TEST_CASE("porter stemmer canonical cases") {
  REQUIRE(porter_stem("caresses") == "caress");
  REQUIRE(porter_stem("ponies") == "poni");
  REQUIRE(porter_stem("cats") == "cat");
  REQUIRE(porter_stem("feed") == "feed");
  REQUIRE(porter_stem("agreed") == "agre");
  REQUIRE(porter_stem("motoring") == "motor");
  REQUIRE(porter_stem("hopping") == "hop");
  REQUIRE(porter_stem("happy") == "happi");
  REQUIRE(porter_stem("sky") == "sky");
  REQUIRE(porter_stem("relational") == "relat");
  REQUIRE(porter_stem("chased") == "chase");
  REQUIRE(porter_stem("chases") == "chase");
}

TEST_CASE("bleu") {
  SECTION("identity corpus scores 100") {
    std::vector<Sentence> c = {words({"the", "dog", "barked", "loudly"}),
                               words({"a", "cat", "sat", "down"})};
    REQUIRE(bleu(c, c) == Catch::Approx(100.0).margin(1e-9));
  }

  SECTION("fully disjoint corpus scores 0") {
    std::vector<Sentence> c = {words({"x", "y", "z", "w"})};
    std::vector<Sentence> r = {words({"a", "b", "c", "d"})};
    REQUIRE(bleu(c, r) == 0.0);
  }

  SECTION("clipped unigram precision") {
    auto st = bleu_statistics({words({"the", "the", "the"})},
                              {words({"the", "cat", "sat"})});
    REQUIRE(st.total[0] == 3);
    REQUIRE(st.matched[0] == 1);  // "the" clipped to its single ref occurrence
    REQUIRE(st.precision(1) == Catch::Approx(1.0 / 3).margin(1e-12));
  }

  SECTION("brevity penalty applies to short candidates") {
    // candidate is a strict prefix: all precisions 1, BP = exp(1 - 6/4)
    std::vector<Sentence> c = {words({"a", "b", "c", "d"})};
    std::vector<Sentence> r = {words({"a", "b", "c", "d", "e", "f"})};
    REQUIRE(bleu(c, r) ==
            Catch::Approx(100.0 * std::exp(1.0 - 6.0 / 4.0)).margin(1e-9));
  }

  SECTION("empty corpus is an error") {
    REQUIRE_THROWS_AS(bleu({}, {}), DataError);
  }
}

TEST_CASE("rouge_l") {
  SECTION("identity scores 100") {
    std::vector<Sentence> c = {words({"the", "dog", "barked"})};
    REQUIRE(rouge_l(c, c) == Catch::Approx(100.0).margin(1e-9));
  }

  SECTION("disjoint scores 0") {
    REQUIRE(rouge_l({words({"x", "y"})}, {words({"a", "b"})}) == 0.0);
  }

  SECTION("hand-checked LCS case") {
    // c = a b c d, r = a c d: LCS 3, P = 3/4, R = 1, F = 75/91
    double f = rouge_l({words({"a", "b", "c", "d"})}, {words({"a", "c", "d"})});
    REQUIRE(f == Catch::Approx(100.0 * 75.0 / 91.0).margin(1e-9));
    REQUIRE(lcs_length(words({"a", "b", "c", "d"}), words({"a", "c", "d"})) ==
            3);
  }
}

TEST_CASE("meteor_lite") {
  SECTION("zero matches scores 0") {
    REQUIRE(meteor_lite({words({"x", "y"})}, {words({"a", "b"})}) == 0.0);
  }

  SECTION("hand-evaluated single pair") {
    // c = the cat sat, r = the cat sat down: m=3, P=1, R=3/4, 1 chunk
    double score =
        meteor_lite({words({"the", "cat", "sat"})},
                    {words({"the", "cat", "sat", "down"})});
    double fmean = (1.0 * 0.75) / (0.9 * 1.0 + 0.1 * 0.75);
    double penalty = 0.5 * std::pow(1.0 / 3.0, 3.0);
    REQUIRE(score == Catch::Approx(100.0 * fmean * (1 - penalty)).margin(1e-9));
  }

  SECTION("identity pair: single chunk, minimum penalty") {
    auto st = meteor_align(words({"a", "b", "c"}), words({"a", "b", "c"}));
    REQUIRE(st.matches == 3);
    REQUIRE(st.chunks == 1);
  }

  SECTION("stem stage matches inflected forms") {
    auto st = meteor_align(words({"the", "dog", "barks"}),
                           words({"the", "dog", "barked"}));
    REQUIRE(st.matches == 3);  // barks/barked unify via stems
  }
}

TEST_CASE("metric oracles agree on 50 random pairs") {
  Rng rng(2024);
  auto [cands, refs] = random_corpus(50, rng);

  REQUIRE(bleu(cands, refs) ==
          Catch::Approx(oracles::bleu_oracle(cands, refs)).margin(1e-9));
  REQUIRE(rouge_l(cands, refs) ==
          Catch::Approx(oracles::rouge_l_oracle(cands, refs)).margin(1e-9));
  REQUIRE(meteor_lite(cands, refs) ==
          Catch::Approx(oracles::meteor_oracle(cands, refs)).margin(1e-9));

  // also per-pair, where bucket zeros force exact zeros
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::vector<Sentence> c = {cands[i]}, r = {refs[i]};
    REQUIRE(bleu(c, r) == Catch::Approx(oracles::bleu_oracle(c, r)).margin(1e-9));
    REQUIRE(rouge_l(c, r) ==
            Catch::Approx(oracles::rouge_l_oracle(c, r)).margin(1e-9));
    REQUIRE(meteor_lite(c, r) ==
            Catch::Approx(oracles::meteor_oracle(c, r)).margin(1e-9));
  }
}

TEST_CASE("metrics are deterministic") {
  Rng rng(7);
  auto [cands, refs] = random_corpus(20, rng);
  REQUIRE(bleu(cands, refs) == bleu(cands, refs));
  REQUIRE(rouge_l(cands, refs) == rouge_l(cands, refs));
  REQUIRE(meteor_lite(cands, refs) == meteor_lite(cands, refs));
}

TEST_CASE("posmatch") {
  auto corpus = ToyGrammar::generate(300, 55);
  auto tagger = train_perceptron_tagger(corpus, 10, 3);

  SECTION("predictions that re-tag to their template score 100") {
    std::vector<Sentence> preds;
    std::vector<std::vector<std::string>> templates;
    for (std::size_t i = 0; i < 20; ++i) {
      preds.push_back(corpus[i].tokens);
      templates.push_back(tagger.tag(corpus[i].tokens));
    }
    REQUIRE(posmatch(preds, templates, tagger) ==
            Catch::Approx(100.0).margin(1e-12));
  }

  SECTION("all-mismatch scores 0") {
    std::vector<Sentence> preds = {words({"the", "dog"})};
    std::vector<std::vector<std::string>> templates = {{"VBZ", "IN"}};
    auto got = tagger.tag(preds[0]);
    REQUIRE(got[0] != "VBZ");
    REQUIRE(got[1] != "IN");
    REQUIRE(posmatch(preds, templates, tagger) == 0.0);
  }

  SECTION("per-position vs whole-sequence") {
    std::vector<Sentence> preds = {words({"the", "dog", "barked", "."})};
    auto tags = tagger.tag(preds[0]);
    auto wrong = tags;
    wrong[1] = "VBZ";  // one position off
    std::vector<std::vector<std::string>> templates = {wrong};
    REQUIRE(posmatch(preds, templates, tagger) == Catch::Approx(75.0));
    REQUIRE(posmatch(preds, templates, tagger, /*whole_sequence=*/true) == 0.0);
  }

  SECTION("length mismatch is a validation error") {
    std::vector<Sentence> preds = {words({"the", "dog"})};
    std::vector<std::vector<std::string>> templates = {{"DT"}};
    REQUIRE_THROWS_AS(posmatch(preds, templates, tagger), DataError);
  }
}
