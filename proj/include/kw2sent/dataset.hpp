#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kw2sent/errors.hpp"
#include "kw2sent/lemmatizer.hpp"
#include "kw2sent/tagger.hpp"
#include "kw2sent/vocab.hpp"

namespace kw2sent {

/// One (keywords, keyword-tags, template, reference) quadruple in id space.
/// The reference and the template always have the same length; keyword tags
/// are unique universal tags.
struct TrainingExample {
  std::vector<int> keywords;       // word ids, lemmatized content words
  std::vector<int> keyword_tags;   // unique universal tag ids
  std::vector<int> template_tags;  // fine tag ids
  std::vector<int> reference;      // word ids, |reference| == |template_tags|

  bool operator==(const TrainingExample&) const = default;
};

/// Tag a token list with the given model. Deterministic for a fixed model.
inline TaggedSentence tag_sentence(const std::vector<std::string>& tokens,
                                   const TaggerModel& tagger) {
  if (tokens.empty()) throw DataError("tag_sentence: empty input");
  return tagger.tag_sentence(tokens);
}

/// Build one training example from a tagged sentence: content words
/// (NOUN/VERB/ADJ/ADV) are lemmatized into keywords in sentence order, each
/// keyword is re-tagged independently as a one-token sentence for its
/// universal tag, the fine tag sequence becomes the template and the tokens
/// the reference. Returns nothing when the sentence has no content words.
inline std::optional<TrainingExample> extract_example(
    const TaggedSentence& s, const TaggerModel& tagger,
    const Lemmatizer& lemmatizer, WordVocabulary& vocab,
    const TagVocabulary& tags, bool grow_vocab = false) {
  if (s.tokens.size() != s.fine_tags.size())
    throw DataError("extract_example: token/tag length mismatch");
  TrainingExample ex;
  std::vector<int> seen_tags;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const std::string& fine = s.fine_tags[i];
    const std::string& universal = tags.universal_of(fine);
    ex.template_tags.push_back(tags.fine_id(fine));
    ex.reference.push_back(grow_vocab ? vocab.add(s.tokens[i])
                                      : vocab.lookup(s.tokens[i]));
    if (!tags.is_content_universal(universal)) continue;
    std::string lemma = lemmatizer.lemmatize(s.tokens[i], universal);
    ex.keywords.push_back(grow_vocab ? vocab.add(lemma) : vocab.lookup(lemma));
    // tagging for each keyword is performed independently of the sentence
    std::string kw_fine = tagger.tag_word(lemma);
    int kt = tags.universal_id(tags.universal_of(kw_fine));
    if (std::find(seen_tags.begin(), seen_tags.end(), kt) == seen_tags.end())
      seen_tags.push_back(kt);
  }
  if (ex.keywords.empty()) return std::nullopt;
  ex.keyword_tags = std::move(seen_tags);
  return ex;
}

namespace detail {

inline nlohmann::ordered_json example_to_json(const TrainingExample& ex,
                                              const WordVocabulary& vocab,
                                              const TagVocabulary& tags) {
  nlohmann::ordered_json j;
  auto words = nlohmann::ordered_json::array();
  for (int id : ex.keywords) words.push_back(vocab.word(id));
  j["keywords"] = std::move(words);
  auto kts = nlohmann::ordered_json::array();
  for (int id : ex.keyword_tags) kts.push_back(tags.tag(id));
  j["keyword_tags"] = std::move(kts);
  auto tpl = nlohmann::ordered_json::array();
  for (int id : ex.template_tags) tpl.push_back(tags.tag(id));
  j["template"] = std::move(tpl);
  auto ref = nlohmann::ordered_json::array();
  for (int id : ex.reference) ref.push_back(vocab.word(id));
  j["reference"] = std::move(ref);
  return j;
}

}  // namespace detail

/// Write examples as UTF-8 JSON lines with the fixed field order
/// keywords, keyword_tags, template, reference.
inline void save_dataset(const std::string& path,
                         const std::vector<TrainingExample>& examples,
                         const WordVocabulary& vocab,
                         const TagVocabulary& tags) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset: " + path);
  for (const auto& ex : examples)
    out << detail::example_to_json(ex, vocab, tags).dump() << "\n";
}

/// Parse one JSONL record; lineno is used for error reporting only.
inline TrainingExample parse_example(const std::string& line,
                                     const WordVocabulary& vocab,
                                     const TagVocabulary& tags,
                                     std::size_t lineno) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("line " + std::to_string(lineno) +
                    ": malformed JSON: " + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key) || !j[key].is_array())
      throw DataError("line " + std::to_string(lineno) + ": missing array '" +
                      std::string(key) + "'");
    return j[key];
  };
  TrainingExample ex;
  try {
    for (const auto& w : need("keywords"))
      ex.keywords.push_back(vocab.lookup(w.get<std::string>()));
    for (const auto& t : need("keyword_tags"))
      ex.keyword_tags.push_back(tags.universal_id(t.get<std::string>()));
    for (const auto& t : need("template"))
      ex.template_tags.push_back(tags.fine_id(t.get<std::string>()));
    for (const auto& w : need("reference"))
      ex.reference.push_back(vocab.lookup(w.get<std::string>()));
  } catch (const IndexError& e) {
    throw DataError("line " + std::to_string(lineno) + ": " + e.what());
  }
  if (ex.reference.size() != ex.template_tags.size())
    throw DataError("line " + std::to_string(lineno) + ": reference length " +
                    std::to_string(ex.reference.size()) +
                    " != template length " +
                    std::to_string(ex.template_tags.size()));
  if (ex.keywords.empty())
    throw DataError("line " + std::to_string(lineno) + ": no keywords");
  if (ex.template_tags.empty())
    throw DataError("line " + std::to_string(lineno) + ": empty template");
  for (std::size_t a = 0; a < ex.keyword_tags.size(); ++a)
    for (std::size_t b = a + 1; b < ex.keyword_tags.size(); ++b)
      if (ex.keyword_tags[a] == ex.keyword_tags[b])
        throw DataError("line " + std::to_string(lineno) +
                        ": duplicate keyword tag");
  return ex;
}

inline std::vector<TrainingExample> load_dataset(const std::string& path,
                                                 const WordVocabulary& vocab,
                                                 const TagVocabulary& tags) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset: " + path);
  std::vector<TrainingExample> examples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    examples.push_back(parse_example(line, vocab, tags, lineno));
  }
  return examples;
}

/// Arithmetic means over a dataset. An empty dataset reports zeros with the
/// empty flag set.
struct CorpusStats {
  std::size_t count = 0;
  double avg_keywords = 0;
  double avg_sentence_length = 0;
  bool empty = true;
};

inline CorpusStats corpus_stats(const std::vector<TrainingExample>& data) {
  CorpusStats st;
  st.count = data.size();
  st.empty = data.empty();
  if (st.empty) return st;
  double kw = 0, len = 0;
  for (const auto& ex : data) {
    kw += static_cast<double>(ex.keywords.size());
    len += static_cast<double>(ex.reference.size());
  }
  st.avg_keywords = kw / static_cast<double>(data.size());
  st.avg_sentence_length = len / static_cast<double>(data.size());
  return st;
}

/// Stats straight off a JSONL file, without needing vocabularies.
inline CorpusStats corpus_stats_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset: " + path);
  CorpusStats st;
  double kw = 0, len = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(lineno) +
                      ": malformed JSON: " + e.what());
    }
    st.count += 1;
    kw += j.value("keywords", nlohmann::json::array()).size();
    len += j.value("reference", nlohmann::json::array()).size();
  }
  st.empty = st.count == 0;
  if (!st.empty) {
    st.avg_keywords = kw / static_cast<double>(st.count);
    st.avg_sentence_length = len / static_cast<double>(st.count);
  }
  return st;
}

}  // namespace kw2sent
