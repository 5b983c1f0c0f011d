#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "kw2sent/dataset.hpp"
#include "kw2sent/lemmatizer.hpp"
#include "kw2sent/tagger.hpp"
#include "kw2sent/toy_grammar.hpp"
#include "kw2sent/vocab.hpp"

using namespace kw2sent;

namespace {

std::filesystem::path tmpdir() {
  auto p = std::filesystem::temp_directory_path() / "kw2sent_corpus_tests";
  std::filesystem::create_directories(p);
  return p;
}

const std::vector<TaggedSentence>& toy_corpus() {
  static const auto corpus = ToyGrammar::generate(500, 1234);
  return corpus;
}

const TaggerModel& toy_tagger() {
  static const TaggerModel model = train_perceptron_tagger(toy_corpus(), 10, 7);
  return model;
}

}  // namespace

TEST_CASE("word vocabulary basics") {
  WordVocabulary v;
  REQUIRE(v.size() == 4);
  REQUIRE(v.lookup("dog") == WordVocabulary::kUnk);
  int id = v.add("dog");
  REQUIRE(id == 4);
  REQUIRE(v.add("dog") == 4);
  REQUIRE(v.lookup("dog") == 4);
  REQUIRE(v.word(WordVocabulary::kPad) == "<pad>");

  auto path = (tmpdir() / "vocab.txt").string();
  v.add("cat");
  v.save(path);
  auto loaded = WordVocabulary::load(path);
  REQUIRE(loaded.lookup("dog") == 4);
  REQUIRE(loaded.lookup("cat") == 5);
  REQUIRE(loaded.size() == 6);
}

TEST_CASE("tag vocabulary mapping is total and duplicate-free") {
  auto tv = ToyGrammar::tag_vocabulary();
  REQUIRE(tv.fine_tags().size() == 13);
  // every fine tag maps somewhere
  for (const auto& f : tv.fine_tags()) REQUIRE_NOTHROW(tv.universal_of(f));
  REQUIRE(tv.universal_of("NN") == "NOUN");
  REQUIRE(tv.universal_of("VBD") == "VERB");
  REQUIRE(tv.universal_of("MD") == "AUX");
  REQUIRE(tv.size() == tv.fine_tags().size() + tv.universal_tags().size());

  // union ids are distinct
  std::set<int> ids;
  for (const auto& f : tv.fine_tags()) ids.insert(tv.fine_id(f));
  for (const auto& u : tv.universal_tags()) ids.insert(tv.universal_id(u));
  REQUIRE(ids.size() == tv.size());

  REQUIRE_THROWS_AS(tv.fine_id("ZZZ"), IndexError);
  REQUIRE_THROWS_AS(TagVocabulary::from_fine_tags({"NN", "QQQ"}), DataError);

  auto path = (tmpdir() / "tags.txt").string();
  tv.save(path);
  auto loaded = TagVocabulary::load(path);
  REQUIRE(loaded.fine_tags() == tv.fine_tags());
  REQUIRE(loaded.universal_tags() == tv.universal_tags());
  REQUIRE(loaded.fine_id("VBZ") == tv.fine_id("VBZ"));
}

TEST_CASE("lemmatizer rules") {
  Lemmatizer lem;
  REQUIRE(lem.lemmatize("dogs", "NOUN") == "dog");
  REQUIRE(lem.lemmatize("began", "VERB") == "begin");
  REQUIRE(lem.lemmatize("running", "VERB") == "run");
  REQUIRE(lem.lemmatize("stories", "NOUN") == "story");
  REQUIRE(lem.lemmatize("watches", "VERB") == "watch");
  REQUIRE(lem.lemmatize("chases", "VERB") == "chase");
  REQUIRE(lem.lemmatize("chased", "VERB") == "chase");
  REQUIRE(lem.lemmatize("liked", "VERB") == "like");
  REQUIRE(lem.lemmatize("hopping", "VERB") == "hop");
  REQUIRE(lem.lemmatize("hoping", "VERB") == "hope");
  REQUIRE(lem.lemmatize("glasses", "NOUN") == "glass");
  REQUIRE(lem.lemmatize("houses", "NOUN") == "house");
  REQUIRE(lem.lemmatize("men", "NOUN") == "man");
  REQUIRE(lem.lemmatize("bigger", "ADJ") == "big");
  REQUIRE(lem.lemmatize("happier", "ADJ") == "happy");
  REQUIRE(lem.lemmatize("quickly", "ADV") == "quickly");
  REQUIRE(lem.lemmatize("The", "DET") == "the");  // unknown category: lowercase only

  SECTION("idempotent over the toy lexicon and inflection rules") {
    auto tv = ToyGrammar::tag_vocabulary();
    for (const auto& [word, fine] : ToyGrammar::lexicon()) {
      const auto& u = tv.universal_of(fine);
      auto once = lem.lemmatize(word, u);
      REQUIRE(lem.lemmatize(once, u) == once);
    }
  }

  SECTION("loads exception files") {
    auto path = (tmpdir() / "exc.txt").string();
    std::ofstream(path) << "# comment\nwent VERB go\nfoo NOUN bar\n";
    Lemmatizer custom;
    custom.load_exceptions(path);
    REQUIRE(custom.lemmatize("foo", "NOUN") == "bar");
    REQUIRE_THROWS_AS(custom.load_exceptions("/nonexistent/x"), DataError);
  }
}

TEST_CASE("toy grammar generates a clean corpus") {
  const auto& corpus = toy_corpus();
  REQUIRE(corpus.size() == 500);
  const auto& lex = ToyGrammar::lexicon();
  std::set<std::string> sigs;
  for (const auto& s : corpus) {
    REQUIRE(s.tokens.size() == s.fine_tags.size());
    REQUIRE(s.tokens.size() <= 12);
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      REQUIRE(lex.at(s.tokens[i]) == s.fine_tags[i]);
  }
  // deterministic
  auto again = ToyGrammar::generate(500, 1234);
  REQUIRE(again.size() == corpus.size());
  REQUIRE(again[0].tokens == corpus[0].tokens);
  REQUIRE(again[499].tokens == corpus[499].tokens);
}

TEST_CASE("perceptron tagger") {
  const auto& model = toy_tagger();

  SECTION("closed-test accuracy on the toy corpus") {
    REQUIRE(model.accuracy(toy_corpus()) >= 0.97);
  }

  SECTION("deterministic tagging") {
    std::vector<std::string> s = {"the", "dog", "barked", "."};
    REQUIRE(model.tag(s) == model.tag(s));
    REQUIRE(model.tag(s) ==
            std::vector<std::string>{"DT", "NN", "VBD", "."});
  }

  SECTION("single token emits one tag") {
    REQUIRE(model.tag({"yes"}).size() == 1);
  }

  SECTION("empty input is an error") {
    REQUIRE_THROWS_AS(model.tag({}), DataError);
    REQUIRE_THROWS_AS(train_perceptron_tagger({}, 5), DataError);
  }

  SECTION("zero epochs predicts the most frequent tag") {
    auto zero = train_perceptron_tagger(toy_corpus(), 0, 7);
    // count gold frequencies
    std::map<std::string, int> freq;
    for (const auto& s : toy_corpus())
      for (const auto& t : s.fine_tags) freq[t] += 1;
    std::string top;
    int best = -1;
    for (const auto& [t, n] : freq)
      if (n > best) {
        best = n;
        top = t;
      }
    auto tags = zero.tag({"the", "dog", "barked"});
    for (const auto& t : tags) REQUIRE(t == top);
  }

  SECTION("training is deterministic given seed and corpus order") {
    auto a = train_perceptron_tagger(toy_corpus(), 3, 42);
    auto b = train_perceptron_tagger(toy_corpus(), 3, 42);
    std::vector<std::string> s = {"every", "happy", "student", "visits",
                                  "some", "garden", "."};
    REQUIRE(a.tag(s) == b.tag(s));
    auto pa = (tmpdir() / "tag_a.model").string();
    auto pb = (tmpdir() / "tag_b.model").string();
    a.save(pa);
    b.save(pb);
    std::ifstream fa(pa), fb(pb);
    std::string ca((std::istreambuf_iterator<char>(fa)), {});
    std::string cb((std::istreambuf_iterator<char>(fb)), {});
    REQUIRE(ca == cb);
  }

  SECTION("model round-trips through its file format") {
    auto path = (tmpdir() / "tagger.model").string();
    model.save(path);
    auto loaded = TaggerModel::load(path);
    std::vector<std::string> s = {"some", "brave", "kings", "chase",
                                  "a", "ship", "."};
    REQUIRE(loaded.tag(s) == model.tag(s));
    REQUIRE_THROWS_AS(TaggerModel::load("/nonexistent/x"), DataError);
  }
}

TEST_CASE("extract_example follows the data construction recipe") {
  const auto& model = toy_tagger();
  Lemmatizer lem;
  auto tags = ToyGrammar::tag_vocabulary();
  WordVocabulary vocab;

  TaggedSentence s{{"the", "dog", "barked"}, {"DT", "NN", "VBD"}};
  auto ex = extract_example(s, model, lem, vocab, tags, /*grow_vocab=*/true);
  REQUIRE(ex.has_value());
  REQUIRE(ex->keywords.size() == 2);
  REQUIRE(vocab.word(ex->keywords[0]) == "dog");
  REQUIRE(vocab.word(ex->keywords[1]) == "bark");
  REQUIRE(ex->keyword_tags ==
          std::vector<int>{tags.universal_id("NOUN"), tags.universal_id("VERB")});
  REQUIRE(ex->template_tags ==
          std::vector<int>{tags.fine_id("DT"), tags.fine_id("NN"),
                           tags.fine_id("VBD")});
  REQUIRE(ex->reference.size() == ex->template_tags.size());

  SECTION("function-word-only sentences are skipped") {
    TaggedSentence fs{{"the", "."}, {"DT", "."}};
    REQUIRE_FALSE(extract_example(fs, model, lem, vocab, tags, true).has_value());
  }

  SECTION("keyword tags are unique and keywords are lemma fixed points") {
    for (const auto& sent : toy_corpus()) {
      auto e = extract_example(sent, model, lem, vocab, tags, true);
      if (!e) continue;
      std::set<int> kt(e->keyword_tags.begin(), e->keyword_tags.end());
      REQUIRE(kt.size() == e->keyword_tags.size());
      REQUIRE(e->reference.size() == e->template_tags.size());
      for (int k : e->keywords) {
        REQUIRE(k != WordVocabulary::kPad);
        const auto& w = vocab.word(k);
        // fixed point under the tag the pipeline derives for the keyword
        const auto& u = tags.universal_of(model.tag_word(w));
        REQUIRE(lem.lemmatize(w, u) == w);
      }
    }
  }
}

TEST_CASE("dataset jsonl round trip") {
  auto tags = ToyGrammar::tag_vocabulary();
  WordVocabulary vocab;
  for (const auto& [word, tag] : ToyGrammar::lexicon()) {
    (void)tag;
    vocab.add(word);
  }

  SECTION("empty file gives an empty stream") {
    auto path = (tmpdir() / "empty.jsonl").string();
    std::ofstream(path).close();
    REQUIRE(load_dataset(path, vocab, tags).empty());
  }

  SECTION("single record preserves fields") {
    auto path = (tmpdir() / "one.jsonl").string();
    std::ofstream(path) << R"({"keywords": ["dog"], "keyword_tags": ["NOUN"], )"
                        << R"("template": ["DT", "NN"], "reference": ["the", "dog"]})"
                        << "\n";
    auto ds = load_dataset(path, vocab, tags);
    REQUIRE(ds.size() == 1);
    REQUIRE(vocab.word(ds[0].keywords[0]) == "dog");
    REQUIRE(ds[0].template_tags ==
            std::vector<int>{tags.fine_id("DT"), tags.fine_id("NN")});
  }

  SECTION("field order in saved files is fixed") {
    TrainingExample ex;
    ex.keywords = {vocab.lookup("dog")};
    ex.keyword_tags = {tags.universal_id("NOUN")};
    ex.template_tags = {tags.fine_id("DT"), tags.fine_id("NN")};
    ex.reference = {vocab.lookup("the"), vocab.lookup("dog")};
    auto path = (tmpdir() / "order.jsonl").string();
    save_dataset(path, {ex}, vocab, tags);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    auto k = line.find("\"keywords\"");
    auto kt = line.find("\"keyword_tags\"");
    auto t = line.find("\"template\"");
    auto r = line.find("\"reference\"");
    REQUIRE(k < kt);
    REQUIRE(kt < t);
    REQUIRE(t < r);
  }

  SECTION("round trip of 1000 random examples is the identity") {
    Rng rng(99);
    std::vector<int> word_ids, fine_ids, uni_ids;
    for (std::size_t i = 4; i < vocab.size(); ++i)
      word_ids.push_back(static_cast<int>(i));
    for (const auto& f : tags.fine_tags()) fine_ids.push_back(tags.fine_id(f));
    for (const auto& u : tags.universal_tags())
      uni_ids.push_back(tags.universal_id(u));

    std::vector<TrainingExample> data;
    for (int i = 0; i < 1000; ++i) {
      TrainingExample ex;
      std::size_t nk = 1 + rng.index(4);
      for (std::size_t j = 0; j < nk; ++j)
        ex.keywords.push_back(word_ids[rng.index(word_ids.size())]);
      auto pool = uni_ids;
      rng.shuffle(pool);
      std::size_t nt = 1 + rng.index(3);
      ex.keyword_tags.assign(pool.begin(), pool.begin() + nt);
      std::size_t m = 1 + rng.index(10);
      for (std::size_t j = 0; j < m; ++j) {
        ex.template_tags.push_back(fine_ids[rng.index(fine_ids.size())]);
        ex.reference.push_back(word_ids[rng.index(word_ids.size())]);
      }
      data.push_back(std::move(ex));
    }
    auto path = (tmpdir() / "roundtrip.jsonl").string();
    save_dataset(path, data, vocab, tags);
    auto loaded = load_dataset(path, vocab, tags);
    REQUIRE(loaded == data);
  }

  SECTION("malformed lines report their line number") {
    auto path = (tmpdir() / "bad.jsonl").string();
    std::ofstream(path) << R"({"keywords": ["dog"], "keyword_tags": ["NOUN"], )"
                        << R"("template": ["DT", "NN"], "reference": ["the", "dog"]})"
                        << "\n"
                        << "this is not json\n";
    REQUIRE_THROWS_WITH(load_dataset(path, vocab, tags),
                        Catch::Matchers::ContainsSubstring("line 2"));
  }

  SECTION("length mismatch is a validation error") {
    auto path = (tmpdir() / "mismatch.jsonl").string();
    std::ofstream(path) << R"({"keywords": ["dog"], "keyword_tags": ["NOUN"], )"
                        << R"("template": ["DT"], "reference": ["the", "dog"]})"
                        << "\n";
    REQUIRE_THROWS_AS(load_dataset(path, vocab, tags), DataError);
  }

  SECTION("duplicate keyword tags are rejected") {
    auto path = (tmpdir() / "dup.jsonl").string();
    std::ofstream(path)
        << R"({"keywords": ["dog"], "keyword_tags": ["NOUN", "NOUN"], )"
        << R"("template": ["NN"], "reference": ["dog"]})"
        << "\n";
    REQUIRE_THROWS_AS(load_dataset(path, vocab, tags), DataError);
  }
}

TEST_CASE("corpus stats") {
  auto tags = ToyGrammar::tag_vocabulary();
  WordVocabulary vocab;
  vocab.add("dog");

  REQUIRE(corpus_stats({}).empty);
  REQUIRE(corpus_stats({}).count == 0);
  REQUIRE(corpus_stats({}).avg_keywords == 0.0);

  TrainingExample a, b;
  a.keywords = {4, 4};
  a.keyword_tags = {0};
  a.template_tags = {0, 0, 0};
  a.reference = {4, 4, 4};
  b.keywords = {4, 4, 4, 4};
  b.keyword_tags = {0};
  b.template_tags = {0};
  b.reference = {4};
  auto st = corpus_stats({a, b});
  REQUIRE_FALSE(st.empty);
  REQUIRE(st.count == 2);
  REQUIRE(st.avg_keywords == Catch::Approx(3.0));
  REQUIRE(st.avg_sentence_length == Catch::Approx(2.0));
}

TEST_CASE("pretagged corpus parsing") {
  auto path = (tmpdir() / "pretagged.txt").string();
  std::ofstream(path) << "the_DT dog_NN barked_VBD ._.\n\nhe_PRP sees_VBZ\n";
  auto corpus = load_pretagged(path);
  REQUIRE(corpus.size() == 2);
  REQUIRE(corpus[0].tokens ==
          std::vector<std::string>{"the", "dog", "barked", "."});
  REQUIRE(corpus[0].fine_tags ==
          std::vector<std::string>{"DT", "NN", "VBD", "."});

  auto bad = (tmpdir() / "pretagged_bad.txt").string();
  std::ofstream(bad) << "the_DT dog\n";
  REQUIRE_THROWS_WITH(load_pretagged(bad),
                      Catch::Matchers::ContainsSubstring("line 1"));
}
