// kw2sent: keyword-to-sentence generation with POS-tag templates.
//
// Subcommands cover the whole pipeline: data preparation (prepare, stats),
// tagger training (tag-train), model training (train), generation (generate,
// repl) and evaluation/diagnostics (evaluate, inspect).

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kw2sent/checkpoint.hpp"
#include "kw2sent/dataset.hpp"
#include "kw2sent/evaluate.hpp"
#include "kw2sent/lemmatizer.hpp"
#include "kw2sent/metrics.hpp"
#include "kw2sent/model.hpp"
#include "kw2sent/tagger.hpp"
#include "kw2sent/training.hpp"
#include "kw2sent/vocab.hpp"

namespace {

using namespace kw2sent;
using nlohmann::ordered_json;

std::vector<std::string> split_tokens(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_commas(const std::string& s,
                                      bool to_lower = true) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += to_lower
                 ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                 : c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::map<std::string, std::string> load_tag_map(const std::string& path) {
  auto table = default_fine_to_universal();
  if (path.empty()) return table;
  std::ifstream in(path);
  if (!in) throw DataError("cannot read tag map: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string fine, uni;
    if (!(ss >> fine >> uni))
      throw DataError("tag map line " + std::to_string(lineno) +
                      ": expected 'FINE UNIVERSAL'");
    table[fine] = uni;
  }
  return table;
}

// keywords on the command line: lowercase, derive the universal tag for each
// word independently, lemmatize, then re-tag the lemma for the final tag
struct CliKeywords {
  std::vector<int> ids;
  std::vector<int> tag_ids;
  std::vector<std::string> lemmas;
};

CliKeywords resolve_keywords(const std::vector<std::string>& raw,
                             const std::vector<std::string>& tag_override,
                             const TaggerModel* tagger,
                             const Lemmatizer& lemmatizer,
                             const WordVocabulary& words,
                             const TagVocabulary& tags) {
  if (raw.empty()) throw DataError("no keywords given");
  if (!tag_override.empty() && tag_override.size() != raw.size())
    throw DataError("--keyword-tags must list one tag per keyword");
  if (tag_override.empty() && !tagger)
    throw DataError("a tagger is required to derive keyword tags; pass "
                    "--tagger or --keyword-tags");
  CliKeywords out;
  std::vector<int> seen;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::string universal;
    if (!tag_override.empty()) {
      universal = tag_override[i];
      if (!tags.is_universal(universal))
        throw DataError("unknown universal tag '" + universal + "'");
    } else {
      universal = tags.universal_of(tagger->tag_word(raw[i]));
    }
    std::string lemma = lemmatizer.lemmatize(raw[i], universal);
    if (tag_override.empty())
      universal = tags.universal_of(tagger->tag_word(lemma));
    out.lemmas.push_back(lemma);
    int id = words.lookup(lemma);
    if (id == WordVocabulary::kUnk)
      std::cerr << "note: keyword '" << lemma << "' is out of vocabulary\n";
    out.ids.push_back(id);
    int kt = tags.universal_id(universal);
    if (std::find(seen.begin(), seen.end(), kt) == seen.end()) seen.push_back(kt);
  }
  out.tag_ids = std::move(seen);
  return out;
}

std::vector<int> resolve_template(const std::string& template_str,
                                  const std::string& exemplar,
                                  const TaggerModel* tagger,
                                  const TagVocabulary& tags) {
  std::vector<std::string> fine;
  if (!template_str.empty()) {
    fine = split_tokens(template_str);
  } else {
    if (!tagger)
      throw DataError("--exemplar needs --tagger to derive its tag sequence");
    auto tokens = split_tokens(lowercase(exemplar));
    if (tokens.empty()) throw DataError("empty exemplar sentence");
    fine = tagger->tag(tokens);
  }
  std::vector<int> ids;
  for (const auto& f : fine) {
    if (!tags.is_fine(f)) {
      std::string known;
      for (const auto& t : tags.fine_tags()) known += " " + t;
      throw DataError("unknown template tag '" + f + "'; known tags:" + known);
    }
    ids.push_back(tags.fine_id(f));
  }
  if (ids.empty()) throw DataError("empty template");
  return ids;
}

ordered_json trace_to_json(const DecodeTrace& trace,
                           const WordVocabulary& words,
                           const TagVocabulary& tags) {
  ordered_json steps = ordered_json::array();
  for (const auto& ts : trace) {
    ordered_json row;
    row["token"] = words.word(ts.token);
    row["template_tag"] = ts.template_tag < 0 ? "" : tags.tag(ts.template_tag);
    row["lambda"] = ts.lambda;
    row["alpha"] = ts.alpha;
    std::vector<double> la;
    la.reserve(ts.alpha.size());
    for (double a : ts.alpha) la.push_back(ts.lambda * a);
    row["lambda_alpha"] = std::move(la);
    steps.push_back(std::move(row));
  }
  return steps;
}

void require_template_mode(const LoadedModel& loaded) {
  if (loaded.model.config().no_template)
    throw DataError(
        "this checkpoint was trained without templates (no_template); it "
        "cannot run in template mode");
}

// ---------------------------------------------------------------------------

int cmd_prepare(const std::string& input, const std::string& pretagged,
                const std::string& tagger_path, const std::string& out_path,
                const std::string& word_vocab_path,
                const std::string& tag_vocab_path,
                const std::string& tag_map_path,
                const std::string& lemma_exceptions, std::size_t max_len) {
  TaggerModel tagger = TaggerModel::load(tagger_path);
  Lemmatizer lemmatizer;
  if (!lemma_exceptions.empty()) lemmatizer.load_exceptions(lemma_exceptions);

  std::vector<TaggedSentence> sentences;
  if (!pretagged.empty()) {
    sentences = load_pretagged(pretagged);
    for (auto& s : sentences)
      for (auto& t : s.tokens) t = lowercase(t);
  } else {
    std::ifstream in(input);
    if (!in) throw DataError("cannot read input: " + input);
    std::string line;
    while (std::getline(in, line)) {
      auto tokens = split_tokens(lowercase(line));
      if (tokens.empty()) continue;
      sentences.push_back(tagger.tag_sentence(tokens));
    }
  }
  if (sentences.empty()) throw DataError("no sentences in input");

  // tag vocabulary over observed fine tags, in first-appearance order
  auto table = load_tag_map(tag_map_path);
  std::vector<std::string> observed;
  for (const auto& s : sentences)
    for (const auto& t : s.fine_tags)
      if (std::find(observed.begin(), observed.end(), t) == observed.end())
        observed.push_back(t);
  TagVocabulary tags = TagVocabulary::from_fine_tags(observed, table);

  WordVocabulary words;
  std::vector<TrainingExample> examples;
  std::size_t dropped_no_content = 0, dropped_too_long = 0;
  for (const auto& s : sentences) {
    if (s.tokens.size() > max_len) {
      dropped_too_long += 1;
      continue;
    }
    auto ex = extract_example(s, tagger, lemmatizer, words, tags,
                              /*grow_vocab=*/true);
    if (!ex) {
      dropped_no_content += 1;
      continue;
    }
    examples.push_back(std::move(*ex));
  }

  save_dataset(out_path, examples, words, tags);
  if (!word_vocab_path.empty()) words.save(word_vocab_path);
  if (!tag_vocab_path.empty()) tags.save(tag_vocab_path);

  auto st = corpus_stats(examples);
  ordered_json summary;
  summary["written"] = examples.size();
  summary["dropped_no_content"] = dropped_no_content;
  summary["dropped_too_long"] = dropped_too_long;
  summary["word_vocab_size"] = words.size();
  summary["tag_vocab_size"] = tags.size();
  summary["stats"] = {{"count", st.count},
                      {"avg_keywords", st.avg_keywords},
                      {"avg_sentence_length", st.avg_sentence_length},
                      {"empty", st.empty}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_tag_train(const std::string& input, const std::string& out,
                  int epochs, double heldout, std::uint64_t seed) {
  auto corpus = load_pretagged(input);
  if (corpus.empty()) throw DataError("no sentences in " + input);
  std::size_t n_held = static_cast<std::size_t>(heldout * corpus.size());
  ordered_json summary;
  summary["sentences"] = corpus.size();
  if (n_held > 0 && n_held < corpus.size()) {
    std::vector<TaggedSentence> train_part(corpus.begin(),
                                           corpus.end() - n_held);
    std::vector<TaggedSentence> held(corpus.end() - n_held, corpus.end());
    auto probe = train_perceptron_tagger(train_part, epochs, seed);
    summary["heldout_sentences"] = held.size();
    summary["heldout_accuracy"] = probe.accuracy(held);
  }
  auto model = train_perceptron_tagger(corpus, epochs, seed);
  summary["closed_accuracy"] = model.accuracy(corpus);
  summary["classes"] = model.classes().size();
  model.save(out);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& dev_path,
              const std::string& word_vocab_path,
              const std::string& tag_vocab_path,
              const std::string& tagger_path, TrainConfig cfg,
              const std::string& out_path, const std::string& best_path,
              const std::string& history_path) {
  auto words = WordVocabulary::load(word_vocab_path);
  auto tags = TagVocabulary::load(tag_vocab_path);
  auto data = load_dataset(data_path, words, tags);
  if (data.empty()) throw DataError("training dataset is empty");
  std::vector<TrainingExample> dev;
  if (!dev_path.empty()) dev = load_dataset(dev_path, words, tags);
  std::optional<TaggerModel> tagger;
  if (!tagger_path.empty()) tagger = TaggerModel::load(tagger_path);

  Rng rng(cfg.seed);
  Generator<float> model(cfg.model_config(words.size(), tags.size()), rng);
  auto result = train(model, data, dev.empty() ? nullptr : &dev, cfg, words,
                      tags, tagger ? &*tagger : nullptr, best_path, out_path);
  if (!history_path.empty()) save_history_csv(history_path, result.history);

  for (const auto& r : result.history) {
    std::cout << "epoch " << r.epoch << " loss " << r.train_loss;
    if (r.dev_bleu) std::cout << " dev_bleu " << *r.dev_bleu;
    if (r.dev_posmatch) std::cout << " dev_posmatch " << *r.dev_posmatch;
    std::cout << "\n";
  }
  ordered_json summary;
  summary["epochs_run"] = result.history.size();
  summary["steps"] = result.steps;
  summary["diverged"] = result.diverged;
  if (result.best_dev_bleu >= 0) {
    summary["best_dev_bleu"] = result.best_dev_bleu;
    summary["best_epoch"] = result.best_epoch;
  }
  summary["checkpoint"] = out_path;
  std::cout << summary.dump(2) << "\n";
  return result.diverged ? 3 : 0;
}

int cmd_generate(const std::string& model_path, const std::string& keywords,
                 const std::string& keyword_tags, const std::string& template_str,
                 const std::string& exemplar, const std::string& tagger_path,
                 std::size_t beam, const std::string& trace_path,
                 std::size_t max_len) {
  auto loaded = load_checkpoint(model_path);
  std::optional<TaggerModel> tagger;
  if (!tagger_path.empty()) tagger = TaggerModel::load(tagger_path);
  Lemmatizer lemmatizer;

  auto kw = resolve_keywords(split_commas(keywords),
                             keyword_tags.empty()
                                 ? std::vector<std::string>{}
                                 : split_commas(keyword_tags, false),
                             tagger ? &*tagger : nullptr, lemmatizer,
                             loaded.words, loaded.tags);

  std::vector<int> tpl;
  if (!loaded.model.config().no_template) {
    if (template_str.empty() && exemplar.empty())
      throw DataError("give --template or --exemplar");
    tpl = resolve_template(template_str, exemplar,
                           tagger ? &*tagger : nullptr, loaded.tags);
  } else if (!template_str.empty() || !exemplar.empty()) {
    throw DataError(
        "this checkpoint was trained without templates; --template and "
        "--exemplar do not apply");
  }

  auto [tokens, trace] =
      loaded.model.generate_beam(kw.ids, kw.tag_ids, tpl, beam, max_len);
  std::string sentence;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (loaded.model.config().no_template &&
        tokens[i] == loaded.model.config().eos_id)
      break;
    sentence += (i ? " " : "") + loaded.words.word(tokens[i]);
  }
  std::cout << sentence << "\n";

  if (!trace_path.empty()) {
    ordered_json j;
    j["keywords"] = kw.lemmas;
    j["sentence"] = sentence;
    j["steps"] = trace_to_json(trace, loaded.words, loaded.tags);
    std::ofstream out(trace_path);
    if (!out) throw DataError("cannot write trace: " + trace_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_repl(const std::string& model_path, const std::string& tagger_path,
             std::size_t beam, bool show_lambda, std::size_t max_len) {
  auto loaded = load_checkpoint(model_path);
  std::optional<TaggerModel> tagger;
  if (!tagger_path.empty()) tagger = TaggerModel::load(tagger_path);
  Lemmatizer lemmatizer;
  const bool no_template = loaded.model.config().no_template;

  std::cout << "enter keywords (comma separated); :quit exits\n";
  std::string line;
  while (true) {
    std::cout << "keywords> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == ":quit" || line == ":q") break;
    if (line.empty()) continue;
    try {
      auto kw = resolve_keywords(split_commas(line), {},
                                 tagger ? &*tagger : nullptr, lemmatizer,
                                 loaded.words, loaded.tags);
      std::vector<int> tpl;
      if (!no_template) {
        std::cout << "template> " << std::flush;
        std::string tline;
        if (!std::getline(std::cin, tline)) break;
        if (tline == ":quit" || tline == ":q") break;
        auto toks = split_tokens(tline);
        if (toks.empty()) throw DataError("empty template line");
        bool all_tags = true;
        for (const auto& t : toks) all_tags = all_tags && loaded.tags.is_fine(t);
        if (all_tags)
          tpl = resolve_template(tline, "", nullptr, loaded.tags);
        else
          tpl = resolve_template("", tline, tagger ? &*tagger : nullptr,
                                 loaded.tags);
      }
      auto [tokens, trace] =
          loaded.model.generate_beam(kw.ids, kw.tag_ids, tpl, beam, max_len);
      std::string sentence;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (no_template && tokens[i] == loaded.model.config().eos_id) break;
        sentence += (i ? " " : "") + loaded.words.word(tokens[i]);
      }
      std::cout << sentence << "\n";
      if (show_lambda) {
        std::cout << "lambda:";
        for (const auto& ts : trace)
          std::cout << " " << loaded.words.word(ts.token) << "="
                    << ts.lambda;
        std::cout << "\n";
      }
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& scenario_str, std::size_t beam,
                 const std::string& tagger_path, const std::string& exemplars_path,
                 const std::string& out_path, const std::string& audit_path,
                 bool reversal, bool posmatch_binary, std::size_t max_len) {
  auto loaded = load_checkpoint(model_path);
  auto data = load_dataset(data_path, loaded.words, loaded.tags);
  std::optional<TaggerModel> tagger;
  if (!tagger_path.empty()) tagger = TaggerModel::load(tagger_path);

  EvalScenario scenario;
  if (scenario_str == "exact")
    scenario = EvalScenario::Exact;
  else if (scenario_str == "similar")
    scenario = EvalScenario::Similar;
  else
    throw DataError("scenario must be exact or similar");
  // any checkpoint may run Exact; Similar requires template mode
  if (scenario == EvalScenario::Similar) require_template_mode(loaded);

  std::optional<std::vector<TrainingExample>> exemplars;
  if (!exemplars_path.empty())
    exemplars = load_dataset(exemplars_path, loaded.words, loaded.tags);

  ordered_json out_json;
  EvalReport main_report;
  if (reversal) {
    auto r = reversal_robustness(loaded.model, data, scenario, beam,
                                 loaded.words, loaded.tags,
                                 tagger ? &*tagger : nullptr,
                                 exemplars ? &*exemplars : nullptr);
    out_json["original"] = report_to_json(r.original);
    out_json["reversed"] = report_to_json(r.reversed);
    ordered_json deltas;
    deltas["bleu"] = r.d_bleu;
    deltas["meteor_lite"] = r.d_meteor;
    deltas["rouge_l"] = r.d_rouge;
    if (r.d_posmatch)
      deltas["posmatch"] = *r.d_posmatch;
    else
      deltas["posmatch"] = nullptr;
    out_json["deltas"] = std::move(deltas);
    main_report = std::move(r.original);
  } else {
    main_report = evaluate(loaded.model, data, scenario, beam, loaded.words,
                           loaded.tags, tagger ? &*tagger : nullptr,
                           exemplars ? &*exemplars : nullptr, posmatch_binary,
                           max_len);
    out_json = report_to_json(main_report);
  }

  if (!audit_path.empty()) {
    std::ofstream audit(audit_path);
    if (!audit) throw DataError("cannot write audit file: " + audit_path);
    for (const auto& rec : main_report.records) {
      ordered_json row;
      row["prediction"] = rec.prediction;
      row["reference"] = rec.reference;
      row["template"] = rec.template_tags;
      audit << row.dump() << "\n";
    }
  }

  if (out_path.empty())
    std::cout << out_json.dump(2) << "\n";
  else {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write report: " + out_path);
    out << out_json.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_inspect(const std::string& model_path, const std::string& input_path,
                const std::string& out_path) {
  auto loaded = load_checkpoint(model_path);
  require_template_mode(loaded);
  auto data = load_dataset(input_path, loaded.words, loaded.tags);
  if (data.empty()) throw DataError("inspect: empty dataset");

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write traces: " + out_path);

  double lambda_content = 0, lambda_function = 0;
  std::size_t n_content = 0, n_function = 0;
  for (const auto& ex : data) {
    auto [tokens, trace] = loaded.model.generate_greedy(
        ex.keywords, ex.keyword_tags, ex.template_tags);
    ordered_json row;
    std::vector<std::string> words;
    for (int t : tokens) words.push_back(loaded.words.word(t));
    row["tokens"] = words;
    row["steps"] = trace_to_json(trace, loaded.words, loaded.tags);
    out << row.dump() << "\n";
    for (const auto& ts : trace) {
      const auto& fine = loaded.tags.tag(ts.template_tag);
      const auto& u = loaded.tags.universal_of(fine);
      if (loaded.tags.is_content_universal(u)) {
        lambda_content += ts.lambda;
        n_content += 1;
      } else {
        lambda_function += ts.lambda;
        n_function += 1;
      }
    }
  }
  ordered_json summary;
  summary["examples"] = data.size();
  summary["mean_lambda_content"] =
      n_content ? lambda_content / static_cast<double>(n_content) : 0.0;
  summary["mean_lambda_function"] =
      n_function ? lambda_function / static_cast<double>(n_function) : 0.0;
  summary["content_positions"] = n_content;
  summary["function_positions"] = n_function;
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_stats(const std::string& data_path) {
  auto st = corpus_stats_file(data_path);
  ordered_json j;
  j["count"] = st.count;
  j["avg_keywords"] = st.avg_keywords;
  j["avg_sentence_length"] = st.avg_sentence_length;
  j["empty"] = st.empty;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keyword-to-sentence generation with POS-tag templates"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "build a JSONL dataset and vocabularies from sentences");
  std::string p_input, p_pretagged, p_tagger, p_out, p_wv, p_tv, p_map, p_lex;
  std::size_t p_maxlen = 30;
  auto* p_in_opt = prepare->add_option("--input", p_input,
                                       "raw sentences, one per line");
  auto* p_pre_opt = prepare->add_option("--pretagged", p_pretagged,
                                        "word_TAG sentences, one per line");
  p_in_opt->check(CLI::ExistingFile)->excludes(p_pre_opt);
  p_pre_opt->check(CLI::ExistingFile);
  prepare->add_option("--tagger", p_tagger, "tagger model file")
      ->required()
      ->check(CLI::ExistingFile);
  prepare->add_option("--out", p_out, "output dataset (JSONL)")->required();
  prepare->add_option("--word-vocab", p_wv, "write the word vocabulary here");
  prepare->add_option("--tag-vocab", p_tv, "write the tag vocabulary here");
  prepare->add_option("--tag-map", p_map, "extra FINE UNIVERSAL mappings")
      ->check(CLI::ExistingFile);
  prepare->add_option("--lemma-exceptions", p_lex,
                      "extra lemmatizer exceptions")
      ->check(CLI::ExistingFile);
  prepare->add_option("--max-len", p_maxlen, "sentence length cap");

  // tag-train
  auto* tagtrain = app.add_subcommand(
      "tag-train", "train the averaged-perceptron POS tagger");
  std::string tt_input, tt_out;
  int tt_epochs = 10;
  double tt_heldout = 0.1;
  std::uint64_t tt_seed = 1;
  tagtrain->add_option("--input", tt_input, "word_TAG sentences")
      ->required()
      ->check(CLI::ExistingFile);
  tagtrain->add_option("--out", tt_out, "output model file")->required();
  tagtrain->add_option("--epochs", tt_epochs, "training epochs");
  tagtrain->add_option("--heldout", tt_heldout,
                       "fraction held out for the accuracy report");
  tagtrain->add_option("--seed", tt_seed, "shuffle seed");

  // train
  auto* traincmd = app.add_subcommand("train", "train the generator");
  std::string tr_data, tr_dev, tr_wv, tr_tv, tr_tagger, tr_config, tr_preset =
      "desk";
  std::string tr_out, tr_best, tr_history;
  TrainConfig tr_overrides;  // filled after preset/config resolution
  double tr_lr = -1, tr_dropout = -1;
  long long tr_epochs = -1, tr_batch = -1;
  long long tr_seed = -1, tr_eval_every = -1;
  bool tr_no_template = false;
  std::string tr_unit;
  traincmd->add_option("--data", tr_data, "training dataset (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  traincmd->add_option("--dev", tr_dev, "dev dataset (JSONL)")
      ->check(CLI::ExistingFile);
  traincmd->add_option("--word-vocab", tr_wv, "word vocabulary")
      ->required()
      ->check(CLI::ExistingFile);
  traincmd->add_option("--tag-vocab", tr_tv, "tag vocabulary")
      ->required()
      ->check(CLI::ExistingFile);
  traincmd->add_option("--tagger", tr_tagger, "tagger for dev POSMatch")
      ->check(CLI::ExistingFile);
  traincmd->add_option("--preset", tr_preset, "paper or desk");
  traincmd->add_option("--config", tr_config, "key=value config file")
      ->check(CLI::ExistingFile);
  traincmd->add_option("--out", tr_out, "final checkpoint path")->required();
  traincmd->add_option("--best", tr_best, "best-dev checkpoint path");
  traincmd->add_option("--history", tr_history, "training history CSV");
  traincmd->add_option("--lr", tr_lr, "learning rate override");
  traincmd->add_option("--dropout", tr_dropout, "dropout override");
  traincmd->add_option("--epochs", tr_epochs, "epoch/step count override");
  traincmd->add_option("--batch-size", tr_batch, "batch size override");
  traincmd->add_option("--seed", tr_seed, "seed override");
  traincmd->add_option("--eval-every", tr_eval_every,
                       "dev evaluation period override");
  traincmd->add_option("--iteration-unit", tr_unit, "epochs or steps");
  traincmd->add_flag("--no-template", tr_no_template,
                     "train the keywords-only baseline");

  // generate
  auto* gen = app.add_subcommand("generate", "generate one sentence");
  std::string g_model, g_keywords, g_ktags, g_template, g_exemplar, g_tagger,
      g_trace;
  std::size_t g_beam = 1, g_maxlen = 30;
  gen->add_option("--model", g_model, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  gen->add_option("--keywords", g_keywords, "comma-separated keywords")
      ->required();
  gen->add_option("--keyword-tags", g_ktags,
                  "universal tags, one per keyword (skips the tagger)");
  auto* g_tpl_opt = gen->add_option("--template", g_template,
                                    "space-separated fine POS tags");
  gen->add_option("--exemplar", g_exemplar,
                  "sentence whose tag sequence becomes the template")
      ->excludes(g_tpl_opt);
  gen->add_option("--tagger", g_tagger, "tagger model file")
      ->check(CLI::ExistingFile);
  gen->add_option("--beam", g_beam, "beam width (1 = greedy)");
  gen->add_option("--trace", g_trace, "write the decode trace as JSON here");
  gen->add_option("--max-len", g_maxlen, "length cap for no-template models");

  // repl
  auto* repl = app.add_subcommand("repl", "interactive generation loop");
  std::string r_model, r_tagger;
  std::size_t r_beam = 1, r_maxlen = 30;
  bool r_lambda = false;
  repl->add_option("--model", r_model, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  repl->add_option("--tagger", r_tagger, "tagger model file")
      ->check(CLI::ExistingFile);
  repl->add_option("--beam", r_beam, "beam width (1 = greedy)");
  repl->add_flag("--show-lambda", r_lambda, "print per-token lambda values");
  repl->add_option("--max-len", r_maxlen, "length cap for no-template models");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run the metric suite");
  std::string e_model, e_data, e_scenario = "exact", e_tagger, e_exemplars,
      e_out, e_audit;
  std::size_t e_beam = 1, e_maxlen = 30;
  bool e_reversal = false, e_posbinary = false;
  ev->add_option("--model", e_model, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--data", e_data, "evaluation dataset (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--scenario", e_scenario, "exact or similar");
  ev->add_option("--beam", e_beam, "beam width (1 = greedy)");
  ev->add_option("--tagger", e_tagger, "tagger for POSMatch")
      ->check(CLI::ExistingFile);
  ev->add_option("--exemplars", e_exemplars,
                 "dataset supplying exemplar templates for similar")
      ->check(CLI::ExistingFile);
  ev->add_option("--out", e_out, "write the report JSON here");
  ev->add_option("--audit", e_audit, "write per-example JSONL here");
  ev->add_flag("--reversal", e_reversal,
               "also evaluate with reversed keywords and report deltas");
  ev->add_flag("--posmatch-binary", e_posbinary,
               "whole-sequence POSMatch instead of per-position");
  ev->add_option("--max-len", e_maxlen, "length cap for no-template models");

  // inspect
  auto* ins = app.add_subcommand(
      "inspect", "export decode traces and lambda summaries");
  std::string i_model, i_input, i_out;
  ins->add_option("--model", i_model, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  ins->add_option("--input", i_input, "dataset (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  ins->add_option("--out", i_out, "trace JSONL output")->required();

  // stats
  auto* st = app.add_subcommand("stats", "dataset statistics");
  std::string s_data;
  st->add_option("--data", s_data, "dataset (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems exit 1; --help exits 0
  }

  try {
    if (prepare->parsed()) {
      if (p_input.empty() && p_pretagged.empty())
        throw DataError("give --input or --pretagged");
      return cmd_prepare(p_input, p_pretagged, p_tagger, p_out, p_wv, p_tv,
                         p_map, p_lex, p_maxlen);
    }
    if (tagtrain->parsed())
      return cmd_tag_train(tt_input, tt_out, tt_epochs, tt_heldout, tt_seed);
    if (traincmd->parsed()) {
      TrainConfig cfg = tr_config.empty() ? TrainConfig::preset(tr_preset)
                                          : TrainConfig::load(tr_config);
      if (tr_lr >= 0) cfg.lr = tr_lr;
      if (tr_dropout >= 0) cfg.dropout = tr_dropout;
      if (tr_epochs >= 0) cfg.epochs = static_cast<std::size_t>(tr_epochs);
      if (tr_batch > 0) cfg.batch_size = static_cast<std::size_t>(tr_batch);
      if (tr_seed >= 0) cfg.seed = static_cast<std::uint64_t>(tr_seed);
      if (tr_eval_every >= 0)
        cfg.eval_every = static_cast<std::size_t>(tr_eval_every);
      if (!tr_unit.empty()) {
        if (tr_unit != "epochs" && tr_unit != "steps")
          throw DataError("iteration unit must be epochs or steps");
        cfg.iteration_unit = tr_unit;
      }
      if (tr_no_template) cfg.no_template = true;
      return cmd_train(tr_data, tr_dev, tr_wv, tr_tv, tr_tagger, cfg, tr_out,
                       tr_best, tr_history);
    }
    if (gen->parsed())
      return cmd_generate(g_model, g_keywords, g_ktags, g_template, g_exemplar,
                          g_tagger, g_beam, g_trace, g_maxlen);
    if (repl->parsed())
      return cmd_repl(r_model, r_tagger, r_beam, r_lambda, r_maxlen);
    if (ev->parsed())
      return cmd_evaluate(e_model, e_data, e_scenario, e_beam, e_tagger,
                          e_exemplars, e_out, e_audit, e_reversal, e_posbinary,
                          e_maxlen);
    if (ins->parsed()) return cmd_inspect(i_model, i_input, i_out);
    if (st->parsed()) return cmd_stats(s_data);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
