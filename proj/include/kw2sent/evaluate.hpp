#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kw2sent/dataset.hpp"
#include "kw2sent/metrics.hpp"
#include "kw2sent/model.hpp"
#include "kw2sent/tagger.hpp"
#include "kw2sent/vocab.hpp"

namespace kw2sent {

/// Exact evaluates against each example's own template (the reference's POS
/// sequence); Similar uses exemplar-derived templates, which generally have
/// different lengths than the references.
enum class EvalScenario { Exact, Similar };

inline const char* scenario_name(EvalScenario s) {
  return s == EvalScenario::Exact ? "exact" : "similar";
}

struct EvalRecord {
  std::vector<std::string> prediction;
  std::vector<std::string> reference;
  std::vector<std::string> template_tags;
};

/// Corpus-level metric values for one scenario. posmatch is absent for the
/// no-template baseline, whose outputs have no template to match.
struct EvalReport {
  std::string scenario;
  std::string decode_mode;
  double bleu = 0;
  double meteor_lite = 0;
  double rouge_l = 0;
  std::optional<double> posmatch;
  std::size_t n_examples = 0;
  std::vector<EvalRecord> records;
};

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["decode_mode"] = r.decode_mode;
  j["bleu"] = r.bleu;
  j["meteor_lite"] = r.meteor_lite;
  j["rouge_l"] = r.rouge_l;
  if (r.posmatch)
    j["posmatch"] = *r.posmatch;
  else
    j["posmatch"] = nullptr;
  j["n_examples"] = r.n_examples;
  return j;
}

/// Generate for every example under the scenario's template source and score
/// with all metrics. Exemplar templates for Similar come from the exemplars
/// dataset when given, otherwise from the next example in order (a fixed
/// rotation, so evaluation stays deterministic).
template <class Real>
EvalReport evaluate(const Generator<Real>& model,
                    const std::vector<TrainingExample>& data,
                    EvalScenario scenario, std::size_t beam_width,
                    const WordVocabulary& words, const TagVocabulary& tags,
                    const TaggerModel* tagger,
                    const std::vector<TrainingExample>* exemplars = nullptr,
                    bool posmatch_whole_sequence = false,
                    std::size_t no_template_max_len = 30) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  if (beam_width < 1) throw DataError("evaluate: beam width must be >= 1");
  const bool no_template = model.config().no_template;
  if (no_template && scenario == EvalScenario::Similar)
    throw DataError(
        "evaluate: the no-template baseline has no Similar scenario");

  EvalReport report;
  report.scenario = scenario_name(scenario);
  report.decode_mode = beam_width == 1 ? "greedy"
                                       : "beam" + std::to_string(beam_width);
  report.n_examples = data.size();

  std::vector<Sentence> predictions, references;
  std::vector<std::vector<std::string>> used_templates;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    const std::vector<int>* tpl = &ex.template_tags;
    if (scenario == EvalScenario::Similar) {
      const TrainingExample& src =
          exemplars ? (*exemplars)[i % exemplars->size()]
                    : data[(i + 1) % data.size()];
      tpl = &src.template_tags;
    }
    auto [tokens, trace] = model.generate_beam(
        ex.keywords, ex.keyword_tags, *tpl, beam_width, no_template_max_len);
    (void)trace;
    Sentence pred;
    for (int t : tokens) {
      if (no_template && t == model.config().eos_id) break;
      pred.push_back(words.word(t));
    }
    Sentence ref;
    for (int t : ex.reference) ref.push_back(words.word(t));
    std::vector<std::string> tpl_str;
    for (int t : *tpl) tpl_str.push_back(tags.tag(t));
    predictions.push_back(std::move(pred));
    references.push_back(std::move(ref));
    used_templates.push_back(std::move(tpl_str));
  }

  report.bleu = bleu(predictions, references);
  report.meteor_lite = meteor_lite(predictions, references);
  report.rouge_l = rouge_l(predictions, references);
  if (!no_template && tagger)
    report.posmatch = posmatch(predictions, used_templates, *tagger,
                               posmatch_whole_sequence);

  report.records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    report.records.push_back(
        {predictions[i], references[i], used_templates[i]});
  return report;
}

/// Reports on the original data and on a keyword-reversed copy, with
/// per-metric deltas (original minus reversed).
struct ReversalReport {
  EvalReport original;
  EvalReport reversed;
  double d_bleu = 0, d_meteor = 0, d_rouge = 0;
  std::optional<double> d_posmatch;
};

template <class Real>
ReversalReport reversal_robustness(
    const Generator<Real>& model, const std::vector<TrainingExample>& data,
    EvalScenario scenario, std::size_t beam_width, const WordVocabulary& words,
    const TagVocabulary& tags, const TaggerModel* tagger,
    const std::vector<TrainingExample>* exemplars = nullptr) {
  std::vector<TrainingExample> reversed = data;
  for (auto& ex : reversed) {
    std::reverse(ex.keywords.begin(), ex.keywords.end());
    std::reverse(ex.keyword_tags.begin(), ex.keyword_tags.end());
  }
  ReversalReport r;
  r.original = evaluate(model, data, scenario, beam_width, words, tags, tagger,
                        exemplars);
  r.reversed = evaluate(model, reversed, scenario, beam_width, words, tags,
                        tagger, exemplars);
  r.d_bleu = r.original.bleu - r.reversed.bleu;
  r.d_meteor = r.original.meteor_lite - r.reversed.meteor_lite;
  r.d_rouge = r.original.rouge_l - r.reversed.rouge_l;
  if (r.original.posmatch && r.reversed.posmatch)
    r.d_posmatch = *r.original.posmatch - *r.reversed.posmatch;
  return r;
}

}  // namespace kw2sent
