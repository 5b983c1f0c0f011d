#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "kw2sent/errors.hpp"

namespace kw2sent {

namespace detail {

inline bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace detail

/// Rule-based lemmatizer: exception lexicon first, then per-category suffix
/// rules (plural stripping for nouns, -s/-ed/-ing with consonant-doubling
/// undo and e-restoration for verbs, -er/-est for adjectives and adverbs).
/// Unknown patterns pass through unchanged; the rules are a fixed point, so
/// lemmatize(lemmatize(w)) == lemmatize(w).
class Lemmatizer {
 public:
  Lemmatizer() { load_builtin_exceptions(); }

  /// Merge "word tag lemma" lines from a file into the exception lexicon.
  void load_exceptions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read lemma exception file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string word, tag, lemma;
      if (!(ss >> word >> tag >> lemma))
        throw DataError("lemma exception line " + std::to_string(lineno) +
                        ": expected 'word TAG lemma'");
      exceptions_[{lower(word), tag}] = lower(lemma);
    }
  }

  std::string lemmatize(const std::string& word,
                        const std::string& universal_tag) const {
    std::string w = lower(word);
    if (auto it = exceptions_.find({w, universal_tag}); it != exceptions_.end())
      return it->second;
    if (universal_tag == "NOUN") return noun_rules(w);
    if (universal_tag == "VERB") return verb_rules(w);
    if (universal_tag == "ADJ" || universal_tag == "ADV") return adj_rules(w);
    return w;
  }

 private:
  static std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  }

  static bool sibilant_stem(const std::string& stem) {
    using detail::ends_with;
    return ends_with(stem, "ch") || ends_with(stem, "sh") ||
           ends_with(stem, "ss") || ends_with(stem, "x") ||
           ends_with(stem, "z") || ends_with(stem, "o");
  }

  static std::string noun_rules(const std::string& w) {
    using detail::ends_with;
    if (ends_with(w, "ies") && w.size() >= 5)
      return w.substr(0, w.size() - 3) + "y";
    if (ends_with(w, "es") && w.size() >= 4) {
      std::string stem = w.substr(0, w.size() - 2);
      if (sibilant_stem(stem)) return stem;
    }
    if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() >= 4)
      return w.substr(0, w.size() - 1);
    return w;
  }

  // Undo consonant doubling (stopp -> stop) except for letters that double in
  // base forms, then restore a dropped final e (mak -> make, chas -> chase).
  static std::string fix_stripped_stem(std::string stem) {
    if (stem.size() >= 3) {
      char a = stem[stem.size() - 1], b = stem[stem.size() - 2];
      if (a == b && !detail::is_vowel(a) && a != 'l' && a != 's' && a != 'z' &&
          a != 'f') {
        stem.pop_back();
        return stem;
      }
    }
    if (stem.size() < 2) return stem;
    char c = stem[stem.size() - 1];
    if (c == stem[stem.size() - 2]) return stem;  // pass, buzz, tell
    bool short_stem = stem.size() <= 3 && !detail::is_vowel(c);
    bool e_dropper = c == 'c' || c == 'g' || c == 's' || c == 'v' || c == 'z' ||
                     c == 'u';
    if (short_stem || e_dropper) stem += 'e';
    return stem;
  }

  static std::string verb_rules(const std::string& w) {
    using detail::ends_with;
    if (ends_with(w, "ies") && w.size() >= 5)
      return w.substr(0, w.size() - 3) + "y";
    if (ends_with(w, "es") && w.size() >= 4) {
      std::string stem = w.substr(0, w.size() - 2);
      if (sibilant_stem(stem)) return stem;
    }
    if (ends_with(w, "ied") && w.size() >= 4)
      return w.substr(0, w.size() - 3) + "y";
    if (ends_with(w, "ing") && w.size() >= 5)
      return fix_stripped_stem(w.substr(0, w.size() - 3));
    if (ends_with(w, "ed") && w.size() >= 4)
      return fix_stripped_stem(w.substr(0, w.size() - 2));
    if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() >= 4)
      return w.substr(0, w.size() - 1);
    return w;
  }

  static std::string adj_rules(const std::string& w) {
    using detail::ends_with;
    if (ends_with(w, "ier") && w.size() >= 5)
      return w.substr(0, w.size() - 3) + "y";
    if (ends_with(w, "iest") && w.size() >= 6)
      return w.substr(0, w.size() - 4) + "y";
    if (ends_with(w, "est") && w.size() >= 5)
      return fix_stripped_stem(w.substr(0, w.size() - 3));
    if (ends_with(w, "er") && w.size() >= 4)
      return fix_stripped_stem(w.substr(0, w.size() - 2));
    return w;
  }

  void load_builtin_exceptions() {
    // Irregular verbs and nouns common enough to ship by default; the same
    // entries are available as data/irregulars.txt for external tooling.
    static const char* kVerb[][2] = {
        {"was", "be"},      {"were", "be"},    {"is", "be"},
        {"are", "be"},      {"am", "be"},      {"been", "be"},
        {"being", "be"},    {"has", "have"},   {"had", "have"},
        {"having", "have"}, {"does", "do"},    {"did", "do"},
        {"done", "do"},     {"goes", "go"},    {"went", "go"},
        {"gone", "go"},     {"began", "begin"},{"begun", "begin"},
        {"saw", "see"},     {"seen", "see"},   {"made", "make"},
        {"making", "make"}, {"took", "take"},  {"taken", "take"},
        {"taking", "take"}, {"came", "come"},  {"coming", "come"},
        {"found", "find"},  {"gave", "give"},  {"given", "give"},
        {"giving", "give"}, {"got", "get"},    {"gotten", "get"},
        {"getting", "get"}, {"knew", "know"},  {"known", "know"},
        {"ran", "run"},     {"said", "say"},   {"sang", "sing"},
        {"sung", "sing"},   {"sat", "sit"},    {"spoke", "speak"},
        {"spoken", "speak"},{"told", "tell"},  {"thought", "think"},
        {"wrote", "write"}, {"written", "write"}, {"writing", "write"},
        {"flew", "fly"},    {"flown", "fly"},  {"ate", "eat"},
        {"eaten", "eat"},   {"drank", "drink"},{"drunk", "drink"},
        {"slept", "sleep"}, {"left", "leave"}, {"kept", "keep"},
        {"felt", "feel"},   {"held", "hold"},  {"stood", "stand"},
        {"heard", "hear"},  {"met", "meet"},   {"paid", "pay"},
        {"built", "build"}, {"sold", "sell"},  {"brought", "bring"},
        {"bought", "buy"},  {"caught", "catch"}, {"taught", "teach"},
        {"lost", "lose"},   {"won", "win"},    {"sent", "send"},
        {"broke", "break"}, {"broken", "break"}, {"chose", "choose"},
        {"chosen", "choose"}, {"fell", "fall"}, {"fallen", "fall"},
        {"grew", "grow"},   {"grown", "grow"},
    };
    static const char* kNoun[][2] = {
        {"men", "man"},        {"women", "woman"},  {"children", "child"},
        {"people", "person"},  {"feet", "foot"},    {"teeth", "tooth"},
        {"geese", "goose"},    {"mice", "mouse"},   {"wives", "wife"},
        {"knives", "knife"},   {"lives", "life"},   {"leaves", "leaf"},
        {"wolves", "wolf"},    {"shelves", "shelf"},{"glasses", "glass"},
    };
    static const char* kAdj[][2] = {
        {"better", "good"}, {"best", "good"}, {"worse", "bad"},
        {"worst", "bad"},   {"larger", "large"}, {"largest", "large"},
        {"closer", "close"},{"closest", "close"},
    };
    for (const auto& e : kVerb) exceptions_[{e[0], "VERB"}] = e[1];
    for (const auto& e : kNoun) exceptions_[{e[0], "NOUN"}] = e[1];
    for (const auto& e : kAdj) {
      exceptions_[{e[0], "ADJ"}] = e[1];
      exceptions_[{e[0], "ADV"}] = e[1];
    }
  }

  std::map<std::pair<std::string, std::string>, std::string> exceptions_;
};

}  // namespace kw2sent
