#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "kw2sent/errors.hpp"
#include "kw2sent/stemmer.hpp"
#include "kw2sent/tagger.hpp"

namespace kw2sent {

using Sentence = std::vector<std::string>;

namespace detail {

inline void check_corpus(const std::vector<Sentence>& cands,
                         const std::vector<Sentence>& refs, const char* op) {
  if (cands.empty())
    throw DataError(std::string(op) + ": empty corpus");
  if (cands.size() != refs.size())
    throw DataError(std::string(op) + ": " + std::to_string(cands.size()) +
                    " candidates vs " + std::to_string(refs.size()) +
                    " references");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BLEU-4, corpus level, single reference, no smoothing.
// ---------------------------------------------------------------------------

struct BleuStats {
  std::array<std::size_t, 4> matched{};  // clipped n-gram matches
  std::array<std::size_t, 4> total{};    // candidate n-gram counts
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  double precision(std::size_t n) const {
    return total[n - 1] == 0
               ? 0.0
               : static_cast<double>(matched[n - 1]) / total[n - 1];
  }
};

inline BleuStats bleu_statistics(const std::vector<Sentence>& cands,
                                 const std::vector<Sentence>& refs) {
  detail::check_corpus(cands, refs, "bleu");
  BleuStats st;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    const auto& c = cands[s];
    const auto& r = refs[s];
    st.candidate_length += c.size();
    st.reference_length += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      if (c.size() < n) continue;
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      if (r.size() >= n)
        for (std::size_t i = 0; i + n <= r.size(); ++i)
          ref_counts[{r.begin() + i, r.begin() + i + n}] += 1;
      std::map<std::vector<std::string>, std::size_t> cand_counts;
      for (std::size_t i = 0; i + n <= c.size(); ++i)
        cand_counts[{c.begin() + i, c.begin() + i + n}] += 1;
      for (const auto& [gram, cnt] : cand_counts) {
        st.total[n - 1] += cnt;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          st.matched[n - 1] += std::min(cnt, it->second);
      }
    }
  }
  return st;
}

/// Corpus BLEU-4 as a percentage: geometric mean of the clipped n-gram
/// precisions times the brevity penalty. Any empty precision bucket makes
/// the corpus score exactly zero.
inline double bleu(const std::vector<Sentence>& cands,
                   const std::vector<Sentence>& refs) {
  BleuStats st = bleu_statistics(cands, refs);
  double log_sum = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    if (st.total[n - 1] == 0 || st.matched[n - 1] == 0) return 0.0;
    log_sum += 0.25 * std::log(st.precision(n));
  }
  double bp = 1.0;
  if (st.candidate_length < st.reference_length)
    bp = std::exp(1.0 - static_cast<double>(st.reference_length) /
                            static_cast<double>(st.candidate_length));
  return 100.0 * bp * std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// ROUGE-L: mean per-sentence LCS F-measure with beta = P/R.
// ---------------------------------------------------------------------------

inline std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// F = (1 + beta^2) R P / (R + beta^2 P) with beta = P/R, averaged over
/// sentences, as a percentage.
inline double rouge_l(const std::vector<Sentence>& cands,
                      const std::vector<Sentence>& refs) {
  detail::check_corpus(cands, refs, "rouge_l");
  double acc = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    const auto& c = cands[s];
    const auto& r = refs[s];
    if (c.empty() || r.empty()) continue;
    double l = static_cast<double>(lcs_length(c, r));
    if (l == 0) continue;
    double p = l / static_cast<double>(c.size());
    double rr = l / static_cast<double>(r.size());
    double beta2 = (p / rr) * (p / rr);
    acc += (1 + beta2) * rr * p / (rr + beta2 * p);
  }
  return 100.0 * acc / static_cast<double>(cands.size());
}

// ---------------------------------------------------------------------------
// METEOR-lite: greedy exact-then-stem unigram alignment, no synonym stage.
// ---------------------------------------------------------------------------

struct MeteorStats {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

inline MeteorStats meteor_align(const Sentence& cand, const Sentence& ref) {
  MeteorStats st;
  st.candidate_length = cand.size();
  st.reference_length = ref.size();
  constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);
  std::vector<std::size_t> match(cand.size(), kUnmatched);
  std::vector<bool> ref_used(ref.size(), false);

  // stage 1: exact matches, leftmost reference slot first
  for (std::size_t i = 0; i < cand.size(); ++i)
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!ref_used[j] && cand[i] == ref[j]) {
        match[i] = j;
        ref_used[j] = true;
        break;
      }

  // stage 2: stem matches over what is left
  std::vector<std::string> cand_stem(cand.size()), ref_stem(ref.size());
  for (std::size_t i = 0; i < cand.size(); ++i) cand_stem[i] = porter_stem(cand[i]);
  for (std::size_t j = 0; j < ref.size(); ++j) ref_stem[j] = porter_stem(ref[j]);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (match[i] != kUnmatched) continue;
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!ref_used[j] && cand_stem[i] == ref_stem[j]) {
        match[i] = j;
        ref_used[j] = true;
        break;
      }
  }

  // chunks: maximal runs adjacent in both sentences
  std::size_t prev_j = kUnmatched;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (match[i] == kUnmatched) {
      prev_j = kUnmatched;
      continue;
    }
    st.matches += 1;
    if (prev_j == kUnmatched || match[i] != prev_j + 1) st.chunks += 1;
    prev_j = match[i];
  }
  return st;
}

inline double meteor_score_from(const MeteorStats& st, double alpha = 0.9,
                                double beta = 3.0, double gamma = 0.5) {
  if (st.matches == 0 || st.candidate_length == 0 || st.reference_length == 0)
    return 0.0;
  double m = static_cast<double>(st.matches);
  double p = m / static_cast<double>(st.candidate_length);
  double r = m / static_cast<double>(st.reference_length);
  double fmean = p * r / (alpha * p + (1 - alpha) * r);
  double penalty =
      gamma * std::pow(static_cast<double>(st.chunks) / m, beta);
  return fmean * (1.0 - penalty);
}

/// Corpus METEOR-lite as a percentage, aggregated over summed statistics.
inline double meteor_lite(const std::vector<Sentence>& cands,
                          const std::vector<Sentence>& refs) {
  detail::check_corpus(cands, refs, "meteor_lite");
  MeteorStats total;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    MeteorStats st = meteor_align(cands[s], refs[s]);
    total.matches += st.matches;
    total.chunks += st.chunks;
    total.candidate_length += st.candidate_length;
    total.reference_length += st.reference_length;
  }
  return 100.0 * meteor_score_from(total);
}

// ---------------------------------------------------------------------------
// POSMatch: re-tag predictions with the template-producing tagger and count
// per-position agreement.
// ---------------------------------------------------------------------------

/// Per-position POS agreement between re-tagged predictions and their
/// templates, averaged over examples, as a percentage. whole_sequence makes
/// each example count 1 only when every position matches.
inline double posmatch(const std::vector<Sentence>& predictions,
                       const std::vector<std::vector<std::string>>& templates,
                       const TaggerModel& tagger,
                       bool whole_sequence = false) {
  if (predictions.empty()) throw DataError("posmatch: empty corpus");
  if (predictions.size() != templates.size())
    throw DataError("posmatch: prediction/template count mismatch");
  double acc = 0;
  for (std::size_t s = 0; s < predictions.size(); ++s) {
    if (predictions[s].size() != templates[s].size())
      throw DataError("posmatch: example " + std::to_string(s) +
                      " prediction length " +
                      std::to_string(predictions[s].size()) +
                      " != template length " +
                      std::to_string(templates[s].size()));
    auto tags = tagger.tag(predictions[s]);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < tags.size(); ++i)
      if (tags[i] == templates[s][i]) hit += 1;
    if (whole_sequence)
      acc += hit == tags.size() ? 1.0 : 0.0;
    else
      acc += static_cast<double>(hit) / static_cast<double>(tags.size());
  }
  return 100.0 * acc / static_cast<double>(predictions.size());
}

}  // namespace kw2sent
