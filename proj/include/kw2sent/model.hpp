#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "kw2sent/adam.hpp"
#include "kw2sent/dataset.hpp"
#include "kw2sent/errors.hpp"
#include "kw2sent/rng.hpp"
#include "kw2sent/tensor.hpp"

namespace kw2sent {

/// Hyperparameters of the generator. Tag embeddings are square with side
/// equal to the tag vocabulary size and start as the identity, so tags begin
/// one-hot and drift together during training.
struct ModelConfig {
  std::size_t vocab_size = 0;  // V, including the 4 reserved ids
  std::size_t tag_count = 0;   // T, fine plus universal tags

  std::size_t word_dim = 500;      // word embedding width
  std::size_t keyword_dim = 500;   // keyword encoder output width
  std::size_t template_dim = 100;  // per-direction template GRU width
  std::size_t decoder_dim = 500;   // decoder state, template reduction, mixer
  std::size_t attention_dim = 100; // attention energy hidden width

  double dropout = 0.5;
  bool no_template = false;

  double init_range = 0.08;
  double matcher_weight_init = 5.0;
  double matcher_bias_init = -2.5;

  int pad_id = WordVocabulary::kPad;
  int bos_id = WordVocabulary::kBos;
  int eos_id = WordVocabulary::kEos;
};

template <class Real>
struct GruCell {
  Tensor<Real> wz, wr, wn;  // [hidden x input]
  Tensor<Real> uz, ur, un;  // [hidden x hidden]
  Tensor<Real> bz, br, bn;  // [hidden]

  Tensor<Real> step(const Tensor<Real>& x, const Tensor<Real>& h) const {
    auto z = sigmoid(add(add(matvec(wz, x), matvec(uz, h)), bz));
    auto r = sigmoid(add(add(matvec(wr, x), matvec(ur, h)), br));
    auto n = kw2sent::tanh(add(add(matvec(wn, x), matvec(un, mul(r, h))), bn));
    return add(mul(one_minus(z), n), mul(z, h));
  }
};

/// Keyword encodings: one row per keyword (row i depends only on keyword i),
/// a validity mask, and the canonical reduction order (unmasked positions,
/// stable-sorted by word id) that makes every cross-keyword reduction
/// invariant to the input order.
template <class Real>
struct EncodedKeywords {
  std::vector<Tensor<Real>> rows;
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> canonical;
  std::vector<int> ids;

  std::size_t real_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

template <class Real>
struct EncodedTemplate {
  std::vector<Tensor<Real>> rows;  // each row sees the whole template
};

template <class Real>
struct DecoderState {
  Tensor<Real> s;
  std::size_t t = 0;
};

template <class Real>
struct StepOutputs {
  Tensor<Real> lambda;   // scalar, strictly inside (0, 1)
  Tensor<Real> alpha;    // [N], sums to 1 over unmasked keywords
  Tensor<Real> context;  // keyword context c_t
  Tensor<Real> mixed;    // blended context m_t
  Tensor<Real> logits;   // [V]
  std::size_t lambda_argmax = 0;
};

struct TraceStep {
  int token = 0;
  double lambda = 0;
  std::vector<double> alpha;
  int template_tag = -1;
};

using DecodeTrace = std::vector<TraceStep>;

template <class Real>
struct MatchResult {
  Tensor<Real> lambda;
  Tensor<Real> score;
  std::size_t argmax = 0;
};

/// A batch padded to its own maxima, with masks delimiting the real data.
struct Batch {
  std::size_t size = 0, n_max = 0, u_max = 0, m_max = 0;
  std::vector<int> keywords;              // [size x n_max]
  std::vector<std::uint8_t> keyword_mask;
  std::vector<int> keyword_tags;          // [size x u_max]
  std::vector<std::uint8_t> keyword_tag_mask;
  std::vector<int> templates;             // [size x m_max]
  std::vector<int> references;            // [size x m_max]
  std::vector<std::uint8_t> target_mask;

  static Batch from_examples(const std::vector<TrainingExample>& examples,
                             int pad_word_id = WordVocabulary::kPad) {
    if (examples.empty()) throw DataError("batch: no examples");
    Batch b;
    b.size = examples.size();
    for (const auto& ex : examples) {
      b.n_max = std::max(b.n_max, ex.keywords.size());
      b.u_max = std::max(b.u_max, ex.keyword_tags.size());
      b.m_max = std::max(b.m_max, ex.template_tags.size());
    }
    auto pad_to = [](std::vector<int>& flat, std::vector<std::uint8_t>* mask,
                     const std::vector<int>& row, std::size_t width, int fill) {
      for (std::size_t i = 0; i < width; ++i) {
        flat.push_back(i < row.size() ? row[i] : fill);
        if (mask) mask->push_back(i < row.size() ? 1 : 0);
      }
    };
    for (const auto& ex : examples) {
      pad_to(b.keywords, &b.keyword_mask, ex.keywords, b.n_max, pad_word_id);
      pad_to(b.keyword_tags, &b.keyword_tag_mask, ex.keyword_tags, b.u_max, 0);
      pad_to(b.templates, nullptr, ex.template_tags, b.m_max, 0);
      pad_to(b.references, &b.target_mask, ex.reference, b.m_max, pad_word_id);
    }
    return b;
  }
};

/// The keyword-to-sentence generator: order-agnostic keyword encoder,
/// bidirectional template encoder, tag-matching gate, template-aware
/// attention decoder with greedy and beam generation.
template <class Real>
class Generator {
 public:
  Generator(ModelConfig config, Rng& rng) : cfg_(std::move(config)) {
    build(rng);
  }

  /// All-zero parameters of the right shapes (checkpoint loading).
  static Generator zeros(ModelConfig config) {
    Rng rng(0);
    Generator g(std::move(config), rng);
    for (auto& [name, p] : g.params_) {
      (void)name;
      std::fill(p.value().begin(), p.value().end(), Real(0));
    }
    return g;
  }

  const ModelConfig& config() const { return cfg_; }
  ParamMap<Real>& params() { return params_; }
  const ParamMap<Real>& params() const { return params_; }

  /// The PAD embedding row stays frozen at zero: clear its gradient before
  /// the optimizer step.
  void freeze_reserved_rows() {
    if (!word_emb_.has_grad()) return;
    auto& g = word_emb_.grad();
    std::size_t off = static_cast<std::size_t>(cfg_.pad_id) * cfg_.word_dim;
    for (std::size_t j = 0; j < cfg_.word_dim; ++j) g[off + j] = Real(0);
  }

  // -- encoders ------------------------------------------------------------

  EncodedKeywords<Real> encode_keywords(const std::vector<int>& ids,
                                        const std::vector<std::uint8_t>* mask,
                                        bool train = false,
                                        Rng* rng = nullptr) const {
    if (ids.empty()) throw DataError("encode_keywords: no keywords");
    EncodedKeywords<Real> ek;
    ek.ids = ids;
    ek.mask = mask ? *mask : std::vector<std::uint8_t>(ids.size(), 1);
    if (ek.mask.size() != ids.size())
      throw ShapeError("encode_keywords: mask length mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      check_word_id(ids[i]);
      auto e = row(word_emb_, static_cast<std::size_t>(ids[i]));
      auto h1 = apply_dropout(
          kw2sent::tanh(add(matvec(kmlp_w1_, e), kmlp_b1_)), train, rng);
      auto h2 = apply_dropout(
          kw2sent::tanh(add(matvec(kmlp_w2_, h1), kmlp_b2_)), train, rng);
      ek.rows.push_back(std::move(h2));
    }
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ek.mask[i]) ek.canonical.push_back(i);
    std::stable_sort(ek.canonical.begin(), ek.canonical.end(),
                     [&ids](std::size_t a, std::size_t b) {
                       return ids[a] < ids[b];
                     });
    if (ek.canonical.empty())
      throw MaskError("encode_keywords: all keywords masked");
    return ek;
  }

  EncodedTemplate<Real> encode_template(const std::vector<int>& tag_ids) const {
    if (tag_ids.empty()) throw DataError("encode_template: empty template");
    const std::size_t m = tag_ids.size();
    std::vector<Tensor<Real>> fwd(m), bwd(m);
    auto h = Tensor<Real>::zeros({cfg_.template_dim});
    for (std::size_t t = 0; t < m; ++t) {
      h = tenc_fwd_.step(tag_row(tag_ids[t]), h);
      fwd[t] = h;
    }
    h = Tensor<Real>::zeros({cfg_.template_dim});
    for (std::size_t t = m; t-- > 0;) {
      h = tenc_bwd_.step(tag_row(tag_ids[t]), h);
      bwd[t] = h;
    }
    EncodedTemplate<Real> et;
    et.rows.reserve(m);
    for (std::size_t t = 0; t < m; ++t)
      et.rows.push_back(kw2sent::tanh(
          add(matvec(tenc_red_w_, concat({fwd[t], bwd[t]})), tenc_red_b_)));
    return et;
  }

  // -- the tag-matching gate -----------------------------------------------

  /// lambda = sigmoid(W_s * max_j cosine(e_tt, e_ktj) + b). The max is a
  /// subgradient: only the winning keyword tag receives gradient; ties pick
  /// the lowest index.
  MatchResult<Real> match_lambda(int template_tag_id,
                                 const std::vector<int>& keyword_tag_ids) const {
    if (keyword_tag_ids.empty())
      throw DataError("match_lambda: no keyword tags");
    auto e_tt = tag_row(template_tag_id);
    std::vector<Tensor<Real>> sims;
    sims.reserve(keyword_tag_ids.size());
    for (int kt : keyword_tag_ids) sims.push_back(cosine(e_tt, tag_row(kt)));
    auto [score, argmax] = max_with_index(stack_scalars(sims));
    auto lam = sigmoid(add(mul(score, matcher_w_), matcher_b_));
    clamp_open_unit(lam);
    MatchResult<Real> r;
    r.lambda = std::move(lam);
    r.score = std::move(score);
    r.argmax = argmax;
    return r;
  }

  // -- attention and one decoder step ---------------------------------------

  /// Attention over keyword rows, with the template row joining the energy
  /// input. Masked keywords get weight exactly zero.
  std::pair<Tensor<Real>, Tensor<Real>> attend(
      const Tensor<Real>& s_prev, const EncodedKeywords<Real>& ek,
      const Tensor<Real>& h_tt) const {
    std::vector<Tensor<Real>> energies(ek.rows.size());
    for (std::size_t j = 0; j < ek.rows.size(); ++j) {
      if (!ek.mask[j]) {
        energies[j] = Tensor<Real>::scalar(Real(0));
        continue;
      }
      auto hidden = kw2sent::tanh(
          add(matvec(attn_w1_, concat({s_prev, ek.rows[j], h_tt})), attn_b1_));
      energies[j] = matvec(attn_v_, hidden);
    }
    auto alpha = softmax(stack_scalars(energies), &ek.mask, &ek.canonical);
    auto ctx = weighted_sum(alpha, ek.rows, &ek.mask, &ek.canonical);
    return {std::move(alpha), std::move(ctx)};
  }

  DecoderState<Real> initial_state(const EncodedKeywords<Real>& ek,
                                   const Tensor<Real>& h_tt_last) const {
    Tensor<Real> mean;
    for (std::size_t idx : ek.canonical)
      mean = mean.defined() ? add(mean, ek.rows[idx]) : ek.rows[idx];
    mean = scale(mean, Real(1) / static_cast<Real>(ek.canonical.size()));
    DecoderState<Real> st;
    st.s = kw2sent::tanh(matvec(init_w_, concat({mean, h_tt_last})));
    st.t = 0;
    return st;
  }

  std::pair<StepOutputs<Real>, DecoderState<Real>> decode_step(
      int y_prev, const DecoderState<Real>& state,
      const EncodedKeywords<Real>& ek, const Tensor<Real>& h_tt,
      const MatchResult<Real>& match, bool train = false,
      Rng* rng = nullptr) const {
    check_word_id(y_prev);
    StepOutputs<Real> out;
    out.lambda = match.lambda;
    out.lambda_argmax = match.argmax;
    std::tie(out.alpha, out.context) = attend(state.s, ek, h_tt);
    out.mixed = kw2sent::tanh(
        add(matvec(mixer_w_, concat({scale(out.context, match.lambda),
                                     scale(h_tt, one_minus(match.lambda))})),
            mixer_b_));
    auto e_prev = row(word_emb_, static_cast<std::size_t>(y_prev));
    DecoderState<Real> next;
    next.s = dec_gru_.step(concat({e_prev, out.mixed}), state.s);
    next.t = state.t + 1;
    if (!all_finite(next.s))
      throw NumericError("decode_step: non-finite decoder state at step " +
                         std::to_string(next.t));
    auto g = apply_dropout(
        kw2sent::tanh(add(
            matvec(readout_w_, concat({e_prev, next.s, out.mixed})),
            readout_b_)),
        train, rng);
    out.logits = add(matvec(out_w_, g), out_b_);
    return {std::move(out), std::move(next)};
  }

  // -- teacher-forced loss ---------------------------------------------------

  /// Mean cross entropy over the real target positions of a padded batch.
  /// In template mode the decoder runs one step per real template position;
  /// the no-template variant appends EOS to every target sequence.
  Tensor<Real> forward_loss(const Batch& batch, bool train = false,
                            Rng* rng = nullptr) const {
    if (batch.size == 0) throw DataError("forward_loss: empty batch");
    Tensor<Real> total;
    std::size_t count = 0;
    for (std::size_t b = 0; b < batch.size; ++b) {
      std::vector<int> kw(batch.keywords.begin() + b * batch.n_max,
                          batch.keywords.begin() + (b + 1) * batch.n_max);
      std::vector<std::uint8_t> kw_mask(
          batch.keyword_mask.begin() + b * batch.n_max,
          batch.keyword_mask.begin() + (b + 1) * batch.n_max);
      std::vector<int> kts, tt;
      for (std::size_t u = 0; u < batch.u_max; ++u)
        if (batch.keyword_tag_mask[b * batch.u_max + u])
          kts.push_back(batch.keyword_tags[b * batch.u_max + u]);
      std::size_t m = 0;
      for (std::size_t t = 0; t < batch.m_max; ++t)
        if (batch.target_mask[b * batch.m_max + t]) m += 1;
      for (std::size_t t = 0; t < m; ++t)
        tt.push_back(batch.templates[b * batch.m_max + t]);

      auto ek = encode_keywords(kw, &kw_mask, train, rng);
      std::vector<int> targets(batch.references.begin() + b * batch.m_max,
                               batch.references.begin() + b * batch.m_max + m);

      EncodedTemplate<Real> et;
      std::vector<MatchResult<Real>> matches;
      if (!cfg_.no_template) {
        et = encode_template(tt);
        matches.reserve(m);
        for (std::size_t t = 0; t < m; ++t)
          matches.push_back(match_lambda(tt[t], kts));
      } else {
        targets.push_back(cfg_.eos_id);
      }

      auto state = initial_state(ek, template_row(et, m, m - 1));
      int y_prev = cfg_.bos_id;
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto& h_tt = template_row(et, m, std::min(t, m - 1));
        const auto& match =
            cfg_.no_template ? unit_match() : matches[t];
        auto [step, next] =
            decode_step(y_prev, state, ek, h_tt, match, train, rng);
        auto ce = cross_entropy(step.logits,
                                static_cast<std::size_t>(targets[t]));
        total = total.defined() ? add(total, ce) : ce;
        count += 1;
        state = std::move(next);
        y_prev = targets[t];
      }
    }
    return scale(total, Real(1) / static_cast<Real>(count));
  }

  // -- generation -------------------------------------------------------------

  /// One token per template position, argmax at each step; PAD and BOS are
  /// excluded from the argmax. In no-template mode decodes until EOS or
  /// max_length.
  std::pair<std::vector<int>, DecodeTrace> generate_greedy(
      const std::vector<int>& keywords, const std::vector<int>& keyword_tags,
      const std::vector<int>& template_tags, std::size_t max_length = 40) const {
    return generate_beam(keywords, keyword_tags, template_tags, 1, max_length);
  }

  /// Length-synchronized beam search; width 1 reduces exactly to greedy.
  std::pair<std::vector<int>, DecodeTrace> generate_beam(
      const std::vector<int>& keywords, const std::vector<int>& keyword_tags,
      const std::vector<int>& template_tags, std::size_t width,
      std::size_t max_length = 40) const {
    if (width < 1) throw DataError("generate_beam: width must be >= 1");
    auto ek = encode_keywords(keywords, nullptr);
    EncodedTemplate<Real> et;
    std::vector<MatchResult<Real>> matches;
    std::size_t steps;
    if (!cfg_.no_template) {
      if (template_tags.empty())
        throw DataError("generate: empty template");
      et = encode_template(template_tags);
      steps = template_tags.size();
      matches.reserve(steps);
      for (std::size_t t = 0; t < steps; ++t)
        matches.push_back(match_lambda(template_tags[t], keyword_tags));
    } else {
      steps = max_length;
    }

    struct Hyp {
      std::vector<int> tokens;
      double logp = 0;
      DecoderState<Real> state;
      DecodeTrace trace;
      bool finished = false;
    };
    const std::size_t m = cfg_.no_template ? 0 : template_tags.size();
    Hyp start;
    start.state = initial_state(ek, template_row(et, m, m == 0 ? 0 : m - 1));
    std::vector<Hyp> beam = {std::move(start)};

    for (std::size_t t = 0; t < steps; ++t) {
      bool all_done = true;
      for (const auto& h : beam) all_done = all_done && h.finished;
      if (all_done) break;

      struct Cand {
        double logp;
        std::size_t parent;
        int token;
      };
      std::vector<Cand> cands;
      std::vector<DecoderState<Real>> next_states(beam.size());
      std::vector<StepOutputs<Real>> step_outs(beam.size());
      for (std::size_t p = 0; p < beam.size(); ++p) {
        if (beam[p].finished) {
          cands.push_back({beam[p].logp, p, -1});
          continue;
        }
        int y_prev = beam[p].tokens.empty() ? cfg_.bos_id
                                            : beam[p].tokens.back();
        const auto& h_tt = template_row(et, m, m == 0 ? 0 : std::min(t, m - 1));
        const auto& match = cfg_.no_template ? unit_match() : matches[t];
        auto [step, next] = decode_step(y_prev, beam[p].state, ek, h_tt, match);
        auto lsm = log_softmax_values(step.logits.value());
        for (std::size_t v = 0; v < lsm.size(); ++v) {
          if (static_cast<int>(v) == cfg_.pad_id ||
              static_cast<int>(v) == cfg_.bos_id)
            continue;
          cands.push_back({beam[p].logp + lsm[v], p, static_cast<int>(v)});
        }
        next_states[p] = std::move(next);
        step_outs[p] = std::move(step);
      }
      std::stable_sort(cands.begin(), cands.end(),
                       [](const Cand& a, const Cand& b) {
                         if (a.logp != b.logp) return a.logp > b.logp;
                         if (a.parent != b.parent) return a.parent < b.parent;
                         return a.token < b.token;
                       });
      if (cands.size() > width) cands.resize(width);

      std::vector<Hyp> next_beam;
      next_beam.reserve(cands.size());
      for (const auto& c : cands) {
        const Hyp& parent = beam[c.parent];
        if (c.token < 0) {
          next_beam.push_back(parent);
          continue;
        }
        Hyp h;
        h.tokens = parent.tokens;
        h.tokens.push_back(c.token);
        h.logp = c.logp;
        h.state = next_states[c.parent];
        h.trace = parent.trace;
        const auto& so = step_outs[c.parent];
        TraceStep ts;
        ts.token = c.token;
        ts.lambda = static_cast<double>(so.lambda.item());
        ts.alpha.reserve(so.alpha.numel());
        for (Real a : so.alpha.value()) ts.alpha.push_back(static_cast<double>(a));
        ts.template_tag = cfg_.no_template ? -1 : template_tags[t];
        h.trace.push_back(std::move(ts));
        h.finished = cfg_.no_template && c.token == cfg_.eos_id;
        next_beam.push_back(std::move(h));
      }
      beam = std::move(next_beam);
    }
    return {beam.front().tokens, beam.front().trace};
  }

  /// Cumulative log-probability of a token sequence under teacher forcing
  /// with the given inputs (used by tests and beam diagnostics).
  double sequence_logprob(const std::vector<int>& keywords,
                          const std::vector<int>& keyword_tags,
                          const std::vector<int>& template_tags,
                          const std::vector<int>& tokens) const {
    auto ek = encode_keywords(keywords, nullptr);
    EncodedTemplate<Real> et;
    std::vector<MatchResult<Real>> matches;
    const std::size_t m = cfg_.no_template ? 0 : template_tags.size();
    if (!cfg_.no_template) {
      et = encode_template(template_tags);
      for (std::size_t t = 0; t < template_tags.size(); ++t)
        matches.push_back(match_lambda(template_tags[t], keyword_tags));
    }
    auto state = initial_state(ek, template_row(et, m, m == 0 ? 0 : m - 1));
    double logp = 0;
    int y_prev = cfg_.bos_id;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const auto& h_tt = template_row(et, m, m == 0 ? 0 : std::min(t, m - 1));
      const auto& match = cfg_.no_template ? unit_match() : matches[t];
      auto [step, next] = decode_step(y_prev, state, ek, h_tt, match);
      auto lsm = log_softmax_values(step.logits.value());
      logp += lsm[static_cast<std::size_t>(tokens[t])];
      state = std::move(next);
      y_prev = tokens[t];
    }
    return logp;
  }

 private:
  void check_word_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size)
      throw IndexError("word id " + std::to_string(id) +
                       " out of range for vocab of " +
                       std::to_string(cfg_.vocab_size));
  }

  Tensor<Real> tag_row(int tag_id) const {
    if (tag_id < 0 || static_cast<std::size_t>(tag_id) >= cfg_.tag_count)
      throw IndexError("tag id " + std::to_string(tag_id) +
                       " out of range for " + std::to_string(cfg_.tag_count) +
                       " tags");
    return row(tag_emb_, static_cast<std::size_t>(tag_id));
  }

  /// Template row for step t, or the learned constant in no-template mode.
  const Tensor<Real>& template_row(const EncodedTemplate<Real>& et,
                                   std::size_t m, std::size_t t) const {
    if (cfg_.no_template) return nt_ctx_;
    (void)m;
    return et.rows.at(t);
  }

  const MatchResult<Real>& unit_match() const { return unit_match_; }

  Tensor<Real> apply_dropout(Tensor<Real> x, bool train, Rng* rng) const {
    if (!train || cfg_.dropout <= 0) return x;
    if (!rng)
      throw StateError("dropout requested in train mode without an rng");
    auto mask = Tensor<Real>::zeros(x.shape());
    const Real keep_scale = Real(1.0 / (1.0 - cfg_.dropout));
    for (auto& v : mask.value())
      v = rng->uniform() < cfg_.dropout ? Real(0) : keep_scale;
    return mul(x, mask);
  }

  static std::vector<double> log_softmax_values(const std::vector<Real>& x) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Real v : x) mx = std::max(mx, static_cast<double>(v));
    double z = 0;
    for (Real v : x) z += std::exp(static_cast<double>(v) - mx);
    double lse = mx + std::log(z);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = static_cast<double>(x[i]) - lse;
    return out;
  }

  /// Keep lambda strictly inside (0, 1) even in 32-bit training, where a
  /// saturated sigmoid rounds to exactly 1.
  static void clamp_open_unit(Tensor<Real>& x) {
    Real lo = std::numeric_limits<Real>::min();
    Real hi = Real(1) - std::numeric_limits<Real>::epsilon() / 2;
    for (auto& v : x.value()) v = std::min(std::max(v, lo), hi);
  }

  Tensor<Real> reg(const std::string& name, Shape shape, Rng& rng) {
    auto t = Tensor<Real>::uniform(std::move(shape), -cfg_.init_range,
                                   cfg_.init_range, rng)
                 .set_requires_grad(true);
    params_[name] = t;
    return t;
  }

  GruCell<Real> reg_gru(const std::string& prefix, std::size_t in,
                        std::size_t hidden, Rng& rng) {
    GruCell<Real> g;
    g.wz = reg(prefix + ".wz", {hidden, in}, rng);
    g.wr = reg(prefix + ".wr", {hidden, in}, rng);
    g.wn = reg(prefix + ".wn", {hidden, in}, rng);
    g.uz = reg(prefix + ".uz", {hidden, hidden}, rng);
    g.ur = reg(prefix + ".ur", {hidden, hidden}, rng);
    g.un = reg(prefix + ".un", {hidden, hidden}, rng);
    g.bz = reg(prefix + ".bz", {hidden}, rng);
    g.br = reg(prefix + ".br", {hidden}, rng);
    g.bn = reg(prefix + ".bn", {hidden}, rng);
    return g;
  }

  void build(Rng& rng) {
    if (cfg_.vocab_size < 5) throw DataError("model: vocab too small");
    if (!cfg_.no_template && cfg_.tag_count < 2)
      throw DataError("model: tag vocabulary too small");
    const auto W = cfg_.word_dim, K = cfg_.keyword_dim, D = cfg_.decoder_dim,
               Td = cfg_.template_dim, A = cfg_.attention_dim,
               V = cfg_.vocab_size, T = cfg_.tag_count;

    word_emb_ = reg("word_emb", {V, W}, rng);
    // PAD row starts and stays zero
    for (std::size_t j = 0; j < W; ++j)
      word_emb_.value()[static_cast<std::size_t>(cfg_.pad_id) * W + j] = Real(0);

    kmlp_w1_ = reg("kmlp.w1", {K, W}, rng);
    kmlp_b1_ = reg("kmlp.b1", {K}, rng);
    kmlp_w2_ = reg("kmlp.w2", {K, K}, rng);
    kmlp_b2_ = reg("kmlp.b2", {K}, rng);

    attn_w1_ = reg("attn.w1", {A, D + K + D}, rng);
    attn_b1_ = reg("attn.b1", {A}, rng);
    attn_v_ = reg("attn.v", {1, A}, rng);

    dec_gru_ = reg_gru("dec", W + D, D, rng);

    readout_w_ = reg("readout.w", {D, W + D + D}, rng);
    readout_b_ = reg("readout.b", {D}, rng);
    out_w_ = reg("out.w", {V, D}, rng);
    out_b_ = reg("out.b", {V}, rng);

    mixer_w_ = reg("mixer.w", {D, K + D}, rng);
    mixer_b_ = reg("mixer.b", {D}, rng);

    init_w_ = reg("init.w", {D, K + D}, rng);

    if (cfg_.no_template) {
      nt_ctx_ = reg("nt_ctx", {D}, rng);
      unit_match_.lambda = Tensor<Real>::scalar(Real(1));
      unit_match_.score = Tensor<Real>::scalar(Real(1));
    } else {
      tag_emb_ = reg("tag_emb", {T, T}, rng);
      {
        auto& v = tag_emb_.value();
        std::fill(v.begin(), v.end(), Real(0));
        for (std::size_t i = 0; i < T; ++i) v[i * T + i] = Real(1);
      }
      tenc_fwd_ = reg_gru("tenc.f", T, Td, rng);
      tenc_bwd_ = reg_gru("tenc.b", T, Td, rng);
      tenc_red_w_ = reg("tenc.red.w", {D, 2 * Td}, rng);
      tenc_red_b_ = reg("tenc.red.b", {D}, rng);
      matcher_w_ = reg("matcher.w", {1}, rng);
      matcher_b_ = reg("matcher.b", {1}, rng);
      matcher_w_.value()[0] = static_cast<Real>(cfg_.matcher_weight_init);
      matcher_b_.value()[0] = static_cast<Real>(cfg_.matcher_bias_init);
    }
  }

  ModelConfig cfg_;
  ParamMap<Real> params_;

  Tensor<Real> word_emb_, tag_emb_;
  Tensor<Real> kmlp_w1_, kmlp_b1_, kmlp_w2_, kmlp_b2_;
  Tensor<Real> attn_w1_, attn_b1_, attn_v_;
  GruCell<Real> dec_gru_, tenc_fwd_, tenc_bwd_;
  Tensor<Real> tenc_red_w_, tenc_red_b_;
  Tensor<Real> readout_w_, readout_b_, out_w_, out_b_;
  Tensor<Real> mixer_w_, mixer_b_;
  Tensor<Real> init_w_;
  Tensor<Real> matcher_w_, matcher_b_;
  Tensor<Real> nt_ctx_;
  MatchResult<Real> unit_match_;
};

}  // namespace kw2sent
