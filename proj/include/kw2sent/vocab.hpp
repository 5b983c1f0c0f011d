#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kw2sent/errors.hpp"

namespace kw2sent {

/// Shared word vocabulary with four reserved ids. Unknown lookups map to UNK.
class WordVocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  WordVocabulary() {
    for (const char* w : {"<pad>", "<unk>", "<bos>", "<eos>"}) add_internal(w);
  }

  int add(const std::string& word) {
    auto it = ids_.find(word);
    if (it != ids_.end()) return it->second;
    return add_internal(word);
  }

  int lookup(const std::string& word) const {
    auto it = ids_.find(word);
    return it == ids_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& word) const { return ids_.count(word) > 0; }

  const std::string& word(int id) const {
    if (id < 0 || id >= static_cast<int>(words_.size()))
      throw IndexError("word id " + std::to_string(id) + " out of range");
    return words_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const { return words_.size(); }

  /// Newline-delimited tokens; line number equals id minus the 4 reserved ids.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocab file: " + path);
    for (std::size_t i = 4; i < words_.size(); ++i) out << words_[i] << "\n";
  }

  static WordVocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read vocab file: " + path);
    WordVocabulary v;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      v.add(line);
    }
    return v;
  }

  const std::vector<std::string>& words() const { return words_; }

 private:
  int add_internal(const std::string& word) {
    int id = static_cast<int>(words_.size());
    words_.push_back(word);
    ids_.emplace(word, id);
    return id;
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

/// The standard Penn-treebank-to-universal tag table bundled with the
/// toolkit. Extendable at vocabulary construction time.
inline const std::map<std::string, std::string>& default_fine_to_universal() {
  static const std::map<std::string, std::string> table = {
      {"NN", "NOUN"},   {"NNS", "NOUN"},  {"NNP", "NOUN"},  {"NNPS", "NOUN"},
      {"VB", "VERB"},   {"VBD", "VERB"},  {"VBG", "VERB"},  {"VBN", "VERB"},
      {"VBP", "VERB"},  {"VBZ", "VERB"},  {"JJ", "ADJ"},    {"JJR", "ADJ"},
      {"JJS", "ADJ"},   {"RB", "ADV"},    {"RBR", "ADV"},   {"RBS", "ADV"},
      {"WRB", "ADV"},   {"DT", "DET"},    {"PDT", "DET"},   {"WDT", "DET"},
      {"IN", "ADP"},    {"CC", "CONJ"},   {"PRP", "PRON"},  {"PRP$", "PRON"},
      {"WP", "PRON"},   {"WP$", "PRON"},  {"EX", "PRON"},   {"CD", "NUM"},
      {"MD", "AUX"},    {"UH", "INTJ"},   {"POS", "PRT"},   {"TO", "PRT"},
      {"RP", "PRT"},    {".", "PUNCT"},   {",", "PUNCT"},   {":", "PUNCT"},
      {"``", "PUNCT"},  {"''", "PUNCT"},  {"-LRB-", "PUNCT"},
      {"-RRB-", "PUNCT"}, {"HYPH", "PUNCT"}, {"FW", "X"},   {"LS", "X"},
      {"SYM", "X"},     {"NFP", "X"},     {"XX", "X"},
  };
  return table;
}

/// Fine-grained and universal POS tags in one id space: fine tags first (file
/// order), then universal tags in first-appearance order. Every fine tag maps
/// to exactly one universal tag.
class TagVocabulary {
 public:
  TagVocabulary() = default;

  /// Build from an ordered list of fine tags, resolving universals through
  /// the given table (defaults to the bundled Penn mapping).
  static TagVocabulary from_fine_tags(
      const std::vector<std::string>& fine,
      const std::map<std::string, std::string>& table =
          default_fine_to_universal()) {
    TagVocabulary tv;
    for (const auto& f : fine) {
      if (tv.fine_ids_.count(f)) continue;
      auto it = table.find(f);
      if (it == table.end())
        throw DataError("fine tag '" + f +
                        "' has no universal mapping; extend the tag map");
      tv.fine_tags_.push_back(f);
      tv.fine_to_universal_[f] = it->second;
    }
    for (const auto& f : tv.fine_tags_) {
      const auto& u = tv.fine_to_universal_[f];
      if (std::find(tv.universal_tags_.begin(), tv.universal_tags_.end(), u) ==
          tv.universal_tags_.end())
        tv.universal_tags_.push_back(u);
    }
    tv.reindex();
    return tv;
  }

  std::size_t size() const { return fine_tags_.size() + universal_tags_.size(); }
  const std::vector<std::string>& fine_tags() const { return fine_tags_; }
  const std::vector<std::string>& universal_tags() const {
    return universal_tags_;
  }

  bool is_fine(const std::string& tag) const { return fine_ids_.count(tag) > 0; }
  bool is_universal(const std::string& tag) const {
    return universal_ids_.count(tag) > 0;
  }

  int fine_id(const std::string& tag) const {
    auto it = fine_ids_.find(tag);
    if (it == fine_ids_.end())
      throw IndexError("unknown fine tag '" + tag + "'");
    return it->second;
  }

  int universal_id(const std::string& tag) const {
    auto it = universal_ids_.find(tag);
    if (it == universal_ids_.end())
      throw IndexError("unknown universal tag '" + tag + "'");
    return it->second;
  }

  /// Id of any tag in the union space.
  int id(const std::string& tag) const {
    if (auto it = fine_ids_.find(tag); it != fine_ids_.end()) return it->second;
    if (auto it = universal_ids_.find(tag); it != universal_ids_.end())
      return it->second;
    throw IndexError("unknown tag '" + tag + "'");
  }

  const std::string& tag(int id) const {
    std::size_t i = static_cast<std::size_t>(id);
    if (id < 0 || i >= size())
      throw IndexError("tag id " + std::to_string(id) + " out of range");
    if (i < fine_tags_.size()) return fine_tags_[i];
    return universal_tags_[i - fine_tags_.size()];
  }

  const std::string& universal_of(const std::string& fine) const {
    auto it = fine_to_universal_.find(fine);
    if (it == fine_to_universal_.end())
      throw IndexError("unknown fine tag '" + fine + "'");
    return it->second;
  }

  int universal_id_of_fine(int fine) const {
    return universal_id(universal_of(tag(fine)));
  }

  bool is_content_universal(const std::string& u) const {
    return u == "NOUN" || u == "VERB" || u == "ADJ" || u == "ADV";
  }

  /// Lines of "FINE UNIVERSAL"; fine ids follow file order.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write tag vocab file: " + path);
    for (const auto& f : fine_tags_)
      out << f << " " << fine_to_universal_.at(f) << "\n";
  }

  static TagVocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read tag vocab file: " + path);
    TagVocabulary tv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string f, u;
      if (!(ss >> f >> u))
        throw DataError("tag vocab line " + std::to_string(lineno) +
                        ": expected 'FINE UNIVERSAL'");
      if (tv.fine_ids_.count(f))
        throw DataError("tag vocab line " + std::to_string(lineno) +
                        ": duplicate fine tag '" + f + "'");
      tv.fine_tags_.push_back(f);
      tv.fine_ids_[f] = 0;  // placeholder, reindex below
      tv.fine_to_universal_[f] = u;
      if (std::find(tv.universal_tags_.begin(), tv.universal_tags_.end(), u) ==
          tv.universal_tags_.end())
        tv.universal_tags_.push_back(u);
    }
    tv.reindex();
    return tv;
  }

  /// Rebuild from explicit lists (checkpoint loading).
  static TagVocabulary from_parts(
      std::vector<std::string> fine, std::vector<std::string> universal,
      std::map<std::string, std::string> mapping) {
    TagVocabulary tv;
    tv.fine_tags_ = std::move(fine);
    tv.universal_tags_ = std::move(universal);
    tv.fine_to_universal_ = std::move(mapping);
    for (const auto& f : tv.fine_tags_)
      if (!tv.fine_to_universal_.count(f))
        throw DataError("fine tag '" + f + "' missing from mapping");
    tv.reindex();
    return tv;
  }

  const std::map<std::string, std::string>& mapping() const {
    return fine_to_universal_;
  }

 private:
  void reindex() {
    fine_ids_.clear();
    universal_ids_.clear();
    for (std::size_t i = 0; i < fine_tags_.size(); ++i)
      fine_ids_[fine_tags_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < universal_tags_.size(); ++i)
      universal_ids_[universal_tags_[i]] =
          static_cast<int>(fine_tags_.size() + i);
    // the union must stay duplicate-free
    for (const auto& u : universal_tags_)
      if (fine_ids_.count(u))
        throw DataError("tag '" + u + "' appears as both fine and universal");
  }

  std::vector<std::string> fine_tags_;
  std::vector<std::string> universal_tags_;
  std::unordered_map<std::string, int> fine_ids_;
  std::unordered_map<std::string, int> universal_ids_;
  std::map<std::string, std::string> fine_to_universal_;
};

}  // namespace kw2sent
