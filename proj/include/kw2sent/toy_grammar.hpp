#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kw2sent/errors.hpp"
#include "kw2sent/lemmatizer.hpp"
#include "kw2sent/rng.hpp"
#include "kw2sent/tagger.hpp"
#include "kw2sent/vocab.hpp"

namespace kw2sent {

/// Small English-like grammar with an unambiguous word-to-tag lexicon for
/// desk-scale corpora: every word carries exactly one fine tag, sentences
/// are at most 12 tokens, and the vocabulary stays around a hundred words.
///
/// Noun slots draw from disjoint classes (subjects are animate, objects are
/// things, prepositional objects are places) and function words are bound to
/// their neighbours (each noun owns its determiner, each place noun its
/// preposition, each verb its modal), so the map from (keyword set,
/// template) to the sentence is a function the generator can actually learn
/// rather than a table of arbitrary choices. Corpora are additionally
/// deduplicated by that (keywords, template) signature.
class ToyGrammar {
 public:
  /// word -> fine tag, unambiguous by construction.
  static const std::map<std::string, std::string>& lexicon() {
    static const std::map<std::string, std::string> lex = [] {
      std::map<std::string, std::string> m;
      auto put = [&m](const std::vector<std::string>& words, const char* tag) {
        for (const auto& w : words) m[w] = tag;
      };
      put(subjects(), "NN");
      put(plurals(subjects()), "NNS");
      put(things(), "NN");
      put(plurals(things()), "NNS");
      put(places(), "NN");
      put(plurals(places()), "NNS");
      put(verbs_base(), "VB");
      put(verbs_vbz(), "VBZ");
      put(verbs_vbd(), "VBD");
      put(subject_adjectives(), "JJ");
      put(object_adjectives(), "JJ");
      put(adverbs(), "RB");
      put({"the", "a", "every", "some"}, "DT");
      put({"she", "they"}, "PRP");
      put({"in", "near", "behind", "under", "with"}, "IN");
      put({"and"}, "CC");
      put({"can", "will", "must"}, "MD");
      put({"."}, ".");
      return m;
    }();
    return lex;
  }

  static const std::vector<std::string>& fine_tags() {
    static const std::vector<std::string> tags = {
        "DT", "NN", "NNS", "VB", "VBZ", "VBD", "JJ",
        "RB", "PRP", "IN", "CC", "MD", "."};
    return tags;
  }

  static TagVocabulary tag_vocabulary() {
    return TagVocabulary::from_fine_tags(fine_tags());
  }

  /// Sample one tagged sentence.
  static TaggedSentence sample(Rng& rng) {
    TaggedSentence s;
    double r = rng.uniform();
    if (r < 0.4)
      clause(s, rng, Number::Singular, Tense::Present);
    else if (r < 0.7)
      clause(s, rng, Number::Plural, Tense::Present);
    else
      clause(s, rng, rng.bernoulli(0.5) ? Number::Singular : Number::Plural,
             Tense::Past);
    emit(s, ".", ".");
    if (s.tokens.size() > 12)
      throw StateError("toy grammar produced an over-long sentence");
    return s;
  }

  /// n unique sentences with pairwise distinct (keywords, template)
  /// signatures; deterministic in the seed.
  static std::vector<TaggedSentence> generate(std::size_t n,
                                              std::uint64_t seed) {
    Rng rng(seed);
    Lemmatizer lem;
    TagVocabulary tags = tag_vocabulary();
    std::set<std::string> signatures;
    std::vector<TaggedSentence> corpus;
    std::size_t attempts = 0;
    while (corpus.size() < n) {
      if (++attempts > n * 500)
        throw StateError("toy grammar ran out of unique sentences");
      TaggedSentence s = sample(rng);
      std::string sig = signature(s, lem, tags);
      if (signatures.insert(sig).second) corpus.push_back(std::move(s));
    }
    return corpus;
  }

  static void write_pretagged(const std::string& path,
                              const std::vector<TaggedSentence>& corpus) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write pretagged corpus: " + path);
    for (const auto& s : corpus) {
      for (std::size_t i = 0; i < s.tokens.size(); ++i)
        out << (i ? " " : "") << s.tokens[i] << "_" << s.fine_tags[i];
      out << "\n";
    }
  }

 private:
  enum class Number { Singular, Plural };
  enum class Tense { Present, Past };

  static const std::vector<std::string>& subjects() {
    static const std::vector<std::string> v = {
        "dog", "cat", "bird", "boy", "girl", "king",
        "teacher", "student", "friend", "farmer"};
    return v;
  }
  static const std::vector<std::string>& things() {
    static const std::vector<std::string> v = {
        "ship", "story", "movie", "song", "letter", "picture", "wall",
        "door"};
    return v;
  }
  static const std::vector<std::string>& places() {
    static const std::vector<std::string> v = {"garden", "river", "house",
                                               "school", "park", "farm"};
    return v;
  }
  static const std::vector<std::string>& verbs_base() {
    static const std::vector<std::string> v = {
        "chase", "see",   "like", "find", "follow",
        "paint", "watch", "help", "visit", "bark"};
    return v;
  }
  static const std::vector<std::string>& verbs_vbz() {
    static const std::vector<std::string> v = {
        "chases", "sees",   "likes", "finds", "follows",
        "paints", "watches", "helps", "visits", "barks"};
    return v;
  }
  static const std::vector<std::string>& verbs_vbd() {
    static const std::vector<std::string> v = {
        "chased", "saw",    "liked", "found", "followed",
        "painted", "watched", "helped", "visited", "barked"};
    return v;
  }
  static const std::vector<std::string>& subject_adjectives() {
    static const std::vector<std::string> v = {"big", "small", "old",
                                               "young", "brave", "quiet"};
    return v;
  }
  static const std::vector<std::string>& object_adjectives() {
    static const std::vector<std::string> v = {"red", "new", "long",
                                               "strange"};
    return v;
  }
  static const std::vector<std::string>& adverbs() {
    static const std::vector<std::string> v = {"quickly", "slowly", "often",
                                               "never", "carefully"};
    return v;
  }

  static std::vector<std::string> plurals(const std::vector<std::string>& ns) {
    std::vector<std::string> out;
    out.reserve(ns.size());
    for (const auto& n : ns) {
      if (n.size() >= 2 && n.back() == 'y' &&
          n[n.size() - 2] != 'a' && n[n.size() - 2] != 'e' &&
          n[n.size() - 2] != 'o' && n[n.size() - 2] != 'u')
        out.push_back(n.substr(0, n.size() - 1) + "ies");
      else
        out.push_back(n + "s");
    }
    return out;
  }

  enum class Slot { Subject, Object, CoordThing, CoordPlace, Prep };

  /// Determiners are a function of slot and number alone, so they stay
  /// predictable from the template without consulting the keywords. Place
  /// prepositions and verb modals are bound to their content word instead.
  static const char* determiner_for(Slot slot, Number num) {
    switch (slot) {
      case Slot::Subject:
        return num == Number::Singular ? "the" : "some";
      case Slot::Object:
        return num == Number::Singular ? "a" : "some";
      case Slot::CoordThing:
        return "a";
      case Slot::CoordPlace:
        return "every";
      case Slot::Prep:
        return num == Number::Singular ? "the" : "some";
    }
    return "the";
  }
  static const std::string& preposition_for(const std::string& lemma) {
    static const std::vector<std::string> preps = {"in", "near", "behind",
                                                   "under", "with"};
    return preps[hash_of(lemma) % preps.size()];
  }
  static const std::string& modal_for(const std::string& lemma) {
    static const std::vector<std::string> modals = {"can", "will", "must"};
    return modals[hash_of(lemma) % modals.size()];
  }
  static std::size_t hash_of(const std::string& s) {
    std::size_t h = 1469598103934665603ull;
    for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
    return h;
  }

  static void emit(TaggedSentence& s, std::string w, std::string t) {
    s.tokens.push_back(std::move(w));
    s.fine_tags.push_back(std::move(t));
  }

  static void noun_phrase(TaggedSentence& s, Rng& rng,
                          const std::vector<std::string>& lemmas, Number num,
                          Slot slot, const std::vector<std::string>* adjectives,
                          double adjective_p) {
    const std::string& lemma = lemmas[rng.index(lemmas.size())];
    emit(s, determiner_for(slot, num), "DT");
    if (adjectives && rng.bernoulli(adjective_p))
      emit(s, (*adjectives)[rng.index(adjectives->size())], "JJ");
    if (num == Number::Singular)
      emit(s, lemma, "NN");
    else
      emit(s, plurals({lemma})[0], "NNS");
  }

  static void clause(TaggedSentence& s, Rng& rng, Number num, Tense tense) {
    // subject: animate noun phrase, or a pronoun fixed by number and tense
    if (rng.bernoulli(0.12)) {
      if (tense == Tense::Past)
        emit(s, "they", "PRP");
      else
        emit(s, num == Number::Singular ? "she" : "they", "PRP");
    } else {
      noun_phrase(s, rng, subjects(), num, Slot::Subject,
                  &subject_adjectives(), 0.4);
    }

    std::size_t v = rng.index(verbs_base().size());
    bool modal = tense == Tense::Present && rng.bernoulli(0.15);
    if (modal) {
      emit(s, modal_for(verbs_base()[v]), "MD");
      emit(s, verbs_base()[v], "VB");
    } else if (tense == Tense::Past) {
      emit(s, verbs_vbd()[v], "VBD");
    } else if (num == Number::Singular) {
      emit(s, verbs_vbz()[v], "VBZ");
    } else {
      emit(s, verbs_base()[v], "VB");
    }

    double r = rng.uniform();
    if (r < 0.15) {
      emit(s, adverbs()[rng.index(adverbs().size())], "RB");
      return;
    }
    if (r < 0.27) {
      // coordinated object: a thing and a place
      noun_phrase(s, rng, things(), Number::Singular, Slot::CoordThing,
                  nullptr, 0);
      emit(s, "and", "CC");
      noun_phrase(s, rng, places(), Number::Singular, Slot::CoordPlace,
                  nullptr, 0);
      return;
    }
    Number obj_num = rng.bernoulli(0.35) ? Number::Plural : Number::Singular;
    noun_phrase(s, rng, things(), obj_num, Slot::Object, &object_adjectives(),
                0.35);
    if (r > 0.78) {
      const std::string& place = places()[rng.index(places().size())];
      emit(s, preposition_for(place), "IN");
      Number pnum = rng.bernoulli(0.3) ? Number::Plural : Number::Singular;
      emit(s, determiner_for(Slot::Prep, pnum), "DT");
      if (pnum == Number::Plural)
        emit(s, plurals({place})[0], "NNS");
      else
        emit(s, place, "NN");
    }
  }

  static std::string signature(const TaggedSentence& s, const Lemmatizer& lem,
                               const TagVocabulary& tags) {
    std::vector<std::string> lemmas;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& u = tags.universal_of(s.fine_tags[i]);
      if (tags.is_content_universal(u))
        lemmas.push_back(lem.lemmatize(s.tokens[i], u));
    }
    std::sort(lemmas.begin(), lemmas.end());
    std::string sig;
    for (const auto& l : lemmas) sig += l + " ";
    sig += "||";
    for (const auto& t : s.fine_tags) sig += " " + t;
    return sig;
  }
};

}  // namespace kw2sent
