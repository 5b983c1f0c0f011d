#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kw2sent/errors.hpp"
#include "kw2sent/rng.hpp"

namespace kw2sent {

/// A sentence with one fine-grained POS tag per token.
struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> fine_tags;
};

/// Greedy left-to-right averaged perceptron POS tagger with the usual
/// contextual features (surrounding words, suffixes up to three characters,
/// previous predicted tags) plus a tag dictionary shortcut for words that
/// were frequent and unambiguous in the training data. With all-zero weights
/// it falls back to the most frequent tag seen at training time.
class TaggerModel {
 public:
  std::vector<std::string> tag(const std::vector<std::string>& tokens) const {
    if (tokens.empty()) throw DataError("tag: empty token list");
    std::vector<std::string> context;
    context.reserve(tokens.size() + 4);
    context.push_back("-START2-");
    context.push_back("-START-");
    for (const auto& t : tokens) context.push_back(normalize(t));
    context.push_back("-END-");
    context.push_back("-END2-");

    std::vector<std::string> tags;
    tags.reserve(tokens.size());
    std::string prev = "-START-", prev2 = "-START2-";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::string guess;
      auto dict = tagdict_.find(context[i + 2]);
      if (dict != tagdict_.end()) {
        guess = dict->second;
      } else {
        auto feats = features(i, context, prev, prev2);
        guess = predict(feats);
      }
      tags.push_back(guess);
      prev2 = prev;
      prev = std::move(guess);
    }
    return tags;
  }

  TaggedSentence tag_sentence(const std::vector<std::string>& tokens) const {
    return TaggedSentence{tokens, tag(tokens)};
  }

  /// Fine tag of a word tagged independently, as a one-token sentence.
  std::string tag_word(const std::string& word) const {
    return tag(std::vector<std::string>{word})[0];
  }

  const std::vector<std::string>& classes() const { return classes_; }

  /// Token accuracy against gold tags.
  double accuracy(const std::vector<TaggedSentence>& corpus) const {
    std::size_t correct = 0, total = 0;
    for (const auto& s : corpus) {
      auto predicted = tag(s.tokens);
      for (std::size_t i = 0; i < predicted.size(); ++i) {
        total += 1;
        if (predicted[i] == s.fine_tags[i]) correct += 1;
      }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write tagger model: " + path);
    out.precision(17);
    out << "KW2TAG1\n";
    out << "classes " << classes_.size() << "\n";
    for (std::size_t i = 0; i < classes_.size(); ++i)
      out << classes_[i] << " " << class_freq_[i] << "\n";
    out << "tagdict " << tagdict_.size() << "\n";
    for (const auto& [word, tag] : tagdict_) out << word << " " << tag << "\n";
    std::size_t n = 0;
    for (const auto& [feat, per_class] : weights_) {
      (void)feat;
      n += per_class.size();
    }
    out << "weights " << n << "\n";
    for (const auto& [feat, per_class] : weights_)
      for (const auto& [cls, w] : per_class)
        out << feat << "\t" << cls << "\t" << w << "\n";
  }

  static TaggerModel load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read tagger model: " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != "KW2TAG1")
      throw DataError("not a tagger model file: " + path);
    TaggerModel m;
    std::string key;
    std::size_t n = 0;
    if (!(in >> key >> n) || key != "classes")
      throw DataError("malformed tagger model (classes header)");
    for (std::size_t i = 0; i < n; ++i) {
      std::string cls;
      std::uint64_t freq;
      if (!(in >> cls >> freq))
        throw DataError("malformed tagger model (class list)");
      m.classes_.push_back(cls);
      m.class_freq_.push_back(freq);
    }
    if (!(in >> key >> n) || key != "tagdict")
      throw DataError("malformed tagger model (tagdict header)");
    for (std::size_t i = 0; i < n; ++i) {
      std::string word, tag;
      if (!(in >> word >> tag))
        throw DataError("malformed tagger model (tagdict)");
      m.tagdict_[word] = tag;
    }
    if (!(in >> key >> n) || key != "weights")
      throw DataError("malformed tagger model (weights header)");
    in.ignore();  // newline after the header
    for (std::size_t i = 0; i < n; ++i) {
      std::string line;
      if (!std::getline(in, line))
        throw DataError("malformed tagger model (truncated weights)");
      auto t1 = line.find('\t');
      auto t2 = line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos)
        throw DataError("malformed tagger model weight line: " + line);
      m.weights_[line.substr(0, t1)][line.substr(t1 + 1, t2 - t1 - 1)] =
          std::stod(line.substr(t2 + 1));
    }
    m.finalize();
    return m;
  }

 private:
  friend TaggerModel train_perceptron_tagger(
      const std::vector<TaggedSentence>&, int, std::uint64_t);

  static std::string normalize(const std::string& w) {
    std::string out = w;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  }

  static std::vector<std::string> features(std::size_t i,
                                           const std::vector<std::string>& ctx,
                                           const std::string& prev,
                                           const std::string& prev2) {
    const std::size_t p = i + 2;  // offset past the two start markers
    const std::string& word = ctx[p];
    auto suffix = [](const std::string& w) {
      return w.size() <= 3 ? w : w.substr(w.size() - 3);
    };
    std::vector<std::string> f;
    f.reserve(13);
    f.push_back("bias");
    f.push_back("w=" + word);
    f.push_back("suf=" + suffix(word));
    f.push_back("pre=" + std::string(1, word[0]));
    f.push_back("t-1=" + prev);
    f.push_back("t-2=" + prev2);
    f.push_back("t-1t-2=" + prev + "|" + prev2);
    f.push_back("t-1w=" + prev + "|" + word);
    f.push_back("w-1=" + ctx[p - 1]);
    f.push_back("suf-1=" + suffix(ctx[p - 1]));
    f.push_back("w-2=" + ctx[p - 2]);
    f.push_back("w+1=" + ctx[p + 1]);
    f.push_back("suf+1=" + suffix(ctx[p + 1]));
    f.push_back("w+2=" + ctx[p + 2]);
    return f;
  }

  /// Argmax over class scores; ties resolve by class order (descending
  /// training frequency, then name), so zero weights yield the most
  /// frequent tag.
  std::string predict(const std::vector<std::string>& feats) const {
    if (classes_.empty()) throw StateError("tagger has no classes");
    std::vector<double> scores(classes_.size(), 0.0);
    for (const auto& f : feats) {
      auto it = weights_.find(f);
      if (it == weights_.end()) continue;
      for (const auto& [cls, w] : it->second) scores[class_index_.at(cls)] += w;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
      if (scores[c] > scores[best]) best = c;
    return classes_[best];
  }

  void finish_classes() {
    class_index_.clear();
    for (std::size_t i = 0; i < classes_.size(); ++i)
      class_index_[classes_[i]] = i;
  }

  // feature -> class -> weight; ordered maps keep score accumulation and
  // serialization deterministic
  std::map<std::string, std::map<std::string, double>> weights_;
  std::map<std::string, std::string> tagdict_;
  std::vector<std::string> classes_;
  std::vector<std::uint64_t> class_freq_;
  std::unordered_map<std::string, std::size_t> class_index_;

 public:
  /// Called after training or deserialization fills classes_.
  void finalize() { finish_classes(); }
};

/// Train an averaged perceptron on gold-tagged sentences. Sentence order is
/// shuffled each epoch from the given seed; weight averaging uses the usual
/// lazy timestamp trick.
inline TaggerModel train_perceptron_tagger(
    const std::vector<TaggedSentence>& corpus, int epochs,
    std::uint64_t seed = 1) {
  if (corpus.empty())
    throw DataError("train_perceptron_tagger: empty corpus");
  for (const auto& s : corpus) {
    if (s.tokens.empty())
      throw DataError("train_perceptron_tagger: empty sentence in corpus");
    if (s.tokens.size() != s.fine_tags.size())
      throw DataError("train_perceptron_tagger: token/tag length mismatch");
  }

  TaggerModel model;
  // classes in descending frequency, ties by name
  std::map<std::string, std::uint64_t> freq;
  for (const auto& s : corpus)
    for (const auto& t : s.fine_tags) freq[t] += 1;
  std::vector<std::pair<std::string, std::uint64_t>> by_freq(freq.begin(),
                                                             freq.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  for (const auto& [cls, n] : by_freq) {
    model.classes_.push_back(cls);
    model.class_freq_.push_back(n);
  }
  model.finalize();

  // words frequent and nearly unambiguous in the gold data bypass the
  // perceptron entirely; a zero-epoch model learns nothing, including this
  if (epochs > 0) {
    std::map<std::string, std::map<std::string, std::uint64_t>> word_tags;
    for (const auto& s : corpus)
      for (std::size_t i = 0; i < s.tokens.size(); ++i)
        word_tags[TaggerModel::normalize(s.tokens[i])][s.fine_tags[i]] += 1;
    for (const auto& [word, tag_counts] : word_tags) {
      std::uint64_t total = 0, best = 0;
      std::string best_tag;
      for (const auto& [tag, n] : tag_counts) {
        total += n;
        if (n > best) {
          best = n;
          best_tag = tag;
        }
      }
      if (total >= 5 &&
          static_cast<double>(best) >= 0.97 * static_cast<double>(total))
        model.tagdict_[word] = best_tag;
    }
  }

  std::map<std::string, std::map<std::string, double>> totals;
  std::map<std::string, std::map<std::string, std::uint64_t>> stamps;
  std::uint64_t instances = 0;

  auto update = [&](const std::string& feat, const std::string& cls,
                    double delta) {
    auto& w = model.weights_[feat][cls];
    auto& total = totals[feat][cls];
    auto& stamp = stamps[feat][cls];
    total += static_cast<double>(instances - stamp) * w;
    stamp = instances;
    w += delta;
  };

  Rng rng(seed);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t si : order) {
      const auto& sent = corpus[si];
      std::vector<std::string> context;
      context.push_back("-START2-");
      context.push_back("-START-");
      for (const auto& t : sent.tokens)
        context.push_back(TaggerModel::normalize(t));
      context.push_back("-END-");
      context.push_back("-END2-");

      std::string prev = "-START-", prev2 = "-START2-";
      for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
        std::string guess;
        auto dict = model.tagdict_.find(context[i + 2]);
        if (dict != model.tagdict_.end()) {
          guess = dict->second;
        } else {
          instances += 1;
          auto feats = TaggerModel::features(i, context, prev, prev2);
          guess = model.predict(feats);
          const std::string& truth = sent.fine_tags[i];
          if (guess != truth) {
            for (const auto& f : feats) {
              update(f, truth, 1.0);
              update(f, guess, -1.0);
            }
          }
        }
        prev2 = prev;
        prev = std::move(guess);
      }
    }
  }

  // average: each weight becomes its running mean over all update instants
  if (instances > 0) {
    for (auto& [feat, per_class] : model.weights_) {
      for (auto& [cls, w] : per_class) {
        double total = totals[feat][cls] +
                       static_cast<double>(instances - stamps[feat][cls]) * w;
        w = total / static_cast<double>(instances);
      }
    }
  }
  return model;
}

/// Parse a "word_TAG word_TAG ..." line-oriented corpus.
inline std::vector<TaggedSentence> load_pretagged(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read pretagged corpus: " + path);
  std::vector<TaggedSentence> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TaggedSentence s;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      auto us = tok.rfind('_');
      if (us == std::string::npos || us == 0 || us + 1 == tok.size())
        throw DataError("line " + std::to_string(lineno) +
                        ": expected word_TAG, got '" + tok + "'");
      s.tokens.push_back(tok.substr(0, us));
      s.fine_tags.push_back(tok.substr(us + 1));
    }
    if (!s.tokens.empty()) corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace kw2sent
