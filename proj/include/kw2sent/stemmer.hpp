#pragma once

#include <algorithm>
#include <cctype>
#include <string>

namespace kw2sent {

namespace detail {

inline bool porter_is_consonant(const std::string& w, std::size_t i) {
  char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
  if (c == 'y') return i == 0 ? true : !porter_is_consonant(w, i - 1);
  return true;
}

/// Number of VC sequences in [C](VC)^m[V].
inline int porter_measure(const std::string& w) {
  int m = 0;
  std::size_t i = 0, n = w.size();
  while (i < n && porter_is_consonant(w, i)) ++i;
  while (i < n) {
    while (i < n && !porter_is_consonant(w, i)) ++i;
    if (i >= n) break;
    ++m;
    while (i < n && porter_is_consonant(w, i)) ++i;
  }
  return m;
}

inline bool porter_has_vowel(const std::string& w) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!porter_is_consonant(w, i)) return true;
  return false;
}

inline bool porter_double_consonant(const std::string& w) {
  std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && porter_is_consonant(w, n - 1);
}

inline bool porter_cvc(const std::string& w) {
  std::size_t n = w.size();
  if (n < 3) return false;
  if (!porter_is_consonant(w, n - 3) || porter_is_consonant(w, n - 2) ||
      !porter_is_consonant(w, n - 1))
    return false;
  char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

inline bool porter_ends(const std::string& w, const char* suf) {
  std::size_t ls = std::char_traits<char>::length(suf);
  return w.size() >= ls && w.compare(w.size() - ls, ls, suf) == 0;
}

// replace suffix if the measure condition on the remaining stem holds
inline bool porter_replace(std::string& w, const char* suf, const char* rep,
                           int min_m) {
  if (!porter_ends(w, suf)) return false;
  std::size_t ls = std::char_traits<char>::length(suf);
  std::string stem = w.substr(0, w.size() - ls);
  if (porter_measure(stem) > min_m) {
    w = stem + rep;
    return true;
  }
  return true;  // suffix matched; rule consumed even when condition failed
}

}  // namespace detail

/// The classic Porter stemming algorithm, used for the stem-match stage of
/// the METEOR-style metric.
inline std::string porter_stem(std::string w) {
  using namespace detail;
  std::transform(w.begin(), w.end(), w.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (w.size() <= 2) return w;

  // step 1a
  if (porter_ends(w, "sses"))
    w.erase(w.size() - 2);
  else if (porter_ends(w, "ies"))
    w.erase(w.size() - 2);
  else if (!porter_ends(w, "ss") && porter_ends(w, "s"))
    w.pop_back();

  // step 1b
  if (porter_ends(w, "eed")) {
    std::string stem = w.substr(0, w.size() - 3);
    if (porter_measure(stem) > 0) w.pop_back();
  } else {
    bool fired = false;
    if (porter_ends(w, "ed")) {
      std::string stem = w.substr(0, w.size() - 2);
      if (porter_has_vowel(stem)) {
        w = stem;
        fired = true;
      }
    } else if (porter_ends(w, "ing")) {
      std::string stem = w.substr(0, w.size() - 3);
      if (porter_has_vowel(stem)) {
        w = stem;
        fired = true;
      }
    }
    if (fired) {
      if (porter_ends(w, "at") || porter_ends(w, "bl") || porter_ends(w, "iz"))
        w += 'e';
      else if (porter_double_consonant(w) && !porter_ends(w, "l") &&
               !porter_ends(w, "s") && !porter_ends(w, "z"))
        w.pop_back();
      else if (porter_measure(w) == 1 && porter_cvc(w))
        w += 'e';
    }
  }

  // step 1c
  if (porter_ends(w, "y") && porter_has_vowel(w.substr(0, w.size() - 1)))
    w.back() = 'i';

  // step 2
  static const char* kStep2[][2] = {
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
      {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
      {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
      {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
      {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
      {"iviti", "ive"},   {"biliti", "ble"}};
  for (const auto& r : kStep2)
    if (porter_replace(w, r[0], r[1], 0)) break;

  // step 3
  static const char* kStep3[][2] = {{"icate", "ic"}, {"ative", ""},
                                    {"alize", "al"}, {"iciti", "ic"},
                                    {"ical", "ic"},  {"ful", ""},
                                    {"ness", ""}};
  for (const auto& r : kStep3)
    if (porter_replace(w, r[0], r[1], 0)) break;

  // step 4
  static const char* kStep4[] = {"al",    "ance", "ence", "er",  "ic",
                                 "able",  "ible", "ant",  "ement", "ment",
                                 "ent",   "ou",   "ism",  "ate", "iti",
                                 "ous",   "ive",  "ize"};
  for (const char* suf : kStep4) {
    if (!porter_ends(w, suf)) continue;
    std::string stem = w.substr(0, w.size() - std::string(suf).size());
    if (porter_measure(stem) > 1) w = stem;
    break;
  }
  if (porter_ends(w, "ion")) {
    std::string stem = w.substr(0, w.size() - 3);
    if (porter_measure(stem) > 1 &&
        (porter_ends(stem, "s") || porter_ends(stem, "t")))
      w = stem;
  }

  // step 5a
  if (porter_ends(w, "e")) {
    std::string stem = w.substr(0, w.size() - 1);
    int m = porter_measure(stem);
    if (m > 1 || (m == 1 && !porter_cvc(stem))) w = stem;
  }
  // step 5b
  if (porter_measure(w) > 1 && porter_double_consonant(w) &&
      porter_ends(w, "l"))
    w.pop_back();

  return w;
}

}  // namespace kw2sent
