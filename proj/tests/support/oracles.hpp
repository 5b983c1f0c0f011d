#pragma once

// Brute-force metric implementations kept deliberately independent of the
// library versions: different data structures, different loop organization.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kw2sent/stemmer.hpp"

namespace oracles {

using Sent = std::vector<std::string>;

inline std::string join_gram(const Sent& s, std::size_t start, std::size_t n) {
  std::string out;
  for (std::size_t k = 0; k < n; ++k) out += s[start + k] + "\x1f";
  return out;
}

inline double bleu_oracle(const std::vector<Sent>& cands,
                          const std::vector<Sent>& refs) {
  double cand_len = 0, ref_len = 0;
  double matched[5] = {0}, total[5] = {0};
  for (std::size_t s = 0; s < cands.size(); ++s) {
    cand_len += static_cast<double>(cands[s].size());
    ref_len += static_cast<double>(refs[s].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::string, int> rc;
      for (std::size_t i = 0; i + n <= refs[s].size(); ++i)
        rc[join_gram(refs[s], i, n)] += 1;
      std::map<std::string, int> cc;
      for (std::size_t i = 0; i + n <= cands[s].size(); ++i)
        cc[join_gram(cands[s], i, n)] += 1;
      for (auto& [g, c] : cc) {
        total[n] += c;
        int r = rc.count(g) ? rc[g] : 0;
        matched[n] += c < r ? c : r;
      }
    }
  }
  double logp = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    logp += std::log(matched[n] / total[n]) / 4.0;
  }
  double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return 100.0 * bp * std::exp(logp);
}

// plain recursive LCS with memoization
inline std::size_t lcs_rec(const Sent& a, const Sent& b, std::size_t i,
                           std::size_t j,
                           std::map<std::pair<std::size_t, std::size_t>,
                                    std::size_t>& memo) {
  if (i == 0 || j == 0) return 0;
  auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  std::size_t r;
  if (a[i - 1] == b[j - 1])
    r = lcs_rec(a, b, i - 1, j - 1, memo) + 1;
  else {
    std::size_t x = lcs_rec(a, b, i - 1, j, memo);
    std::size_t y = lcs_rec(a, b, i, j - 1, memo);
    r = x > y ? x : y;
  }
  memo[key] = r;
  return r;
}

inline double rouge_l_oracle(const std::vector<Sent>& cands,
                             const std::vector<Sent>& refs) {
  double acc = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    double l = static_cast<double>(
        lcs_rec(cands[s], refs[s], cands[s].size(), refs[s].size(), memo));
    if (l == 0 || cands[s].empty() || refs[s].empty()) continue;
    double p = l / cands[s].size();
    double r = l / refs[s].size();
    double b2 = (p / r) * (p / r);
    acc += (1 + b2) * r * p / (r + b2 * p);
  }
  return 100.0 * acc / cands.size();
}

inline double meteor_oracle(const std::vector<Sent>& cands,
                            const std::vector<Sent>& refs) {
  double m_total = 0, chunks_total = 0, clen = 0, rlen = 0;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    const Sent& c = cands[s];
    const Sent& r = refs[s];
    clen += static_cast<double>(c.size());
    rlen += static_cast<double>(r.size());
    // alignment as a list of (ci, rj) pairs; exact stage then stem stage,
    // candidate order, first free reference slot
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::set<std::size_t> used_c, used_r;
    for (int stage = 0; stage < 2; ++stage) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (used_c.count(i)) continue;
        for (std::size_t j = 0; j < r.size(); ++j) {
          if (used_r.count(j)) continue;
          bool hit = stage == 0
                         ? c[i] == r[j]
                         : kw2sent::porter_stem(c[i]) ==
                               kw2sent::porter_stem(r[j]);
          if (hit) {
            pairs.emplace_back(i, j);
            used_c.insert(i);
            used_r.insert(j);
            break;
          }
        }
      }
    }
    std::sort(pairs.begin(), pairs.end());
    m_total += static_cast<double>(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      bool continues = k > 0 && pairs[k].first == pairs[k - 1].first + 1 &&
                       pairs[k].second == pairs[k - 1].second + 1;
      if (!continues) chunks_total += 1;
    }
  }
  if (m_total == 0 || clen == 0 || rlen == 0) return 0.0;
  double p = m_total / clen;
  double rr = m_total / rlen;
  double fmean = p * rr / (0.9 * p + 0.1 * rr);
  double pen = 0.5 * std::pow(chunks_total / m_total, 3.0);
  return 100.0 * fmean * (1.0 - pen);
}

}  // namespace oracles
