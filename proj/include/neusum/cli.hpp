#pragma once

// `neusum` command-line front end. run_cli() returns the process exit code:
// 0 success, 1 runtime or I/O failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "neusum/checkpoint.hpp"
#include "neusum/corpus.hpp"
#include "neusum/diagnostics.hpp"
#include "neusum/inference.hpp"
#include "neusum/oracle.hpp"
#include "neusum/parallel.hpp"
#include "neusum/rouge.hpp"
#include "neusum/trainer.hpp"

namespace neusum::cli {

namespace detail {

inline Sentences read_sentence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open", path);
  Sentences out;
  std::string line;
  while (std::getline(in, line)) {
    Tokens t = tokenize(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<Document> load_truncated(const std::string& path, std::size_t max_sentences, std::size_t max_words,
                                            std::ostream& err) {
  LoadedCorpus c = load_corpus(path);
  if (c.skipped_empty) err << "warning: skipped " << c.skipped_empty << " document(s) with no sentences in " << path << '\n';
  for (auto& d : c.documents) d = truncate(d, max_sentences, max_words);
  return std::move(c.documents);
}

inline OracleSets oracle_sets(const std::vector<LabelRecord>& labels) {
  OracleSets out;
  for (const auto& l : labels) out[l.id] = l.selected;
  return out;
}

}  // namespace detail

struct Caps {
  std::size_t max_sentences = 80;
  std::size_t max_words = 100;
};

inline int build_vocab_cmd(const std::string& input, std::size_t top_k, const std::string& out_path, std::ostream& out,
                           std::ostream& err) {
  const LoadedCorpus c = load_corpus(input);
  if (c.skipped_empty) err << "warning: skipped " << c.skipped_empty << " empty document(s)\n";
  const Vocabulary v = build_vocab(c.documents, top_k);
  save_vocab(out_path, v);
  out << "vocabulary: " << v.size() - Vocabulary::kSpecials << " tokens (+" << Vocabulary::kSpecials
      << " specials) -> " << out_path << '\n';
  return 0;
}

inline int make_oracle_cmd(const std::string& input, std::size_t max_k, double tau, const std::string& variant,
                           bool stem, const Caps& caps, const std::string& out_path, std::ostream& out,
                           std::ostream& err) {
  const auto docs = detail::load_truncated(input, caps.max_sentences, caps.max_words, err);
  const GainMetric metric = GainMetric::parse(variant, stem);
  std::vector<std::optional<LabelRecord>> records(docs.size());
  parallel_for(docs.size(), [&](std::size_t i) {
    const Document& d = docs[i];
    if (flatten(d.reference).empty()) return;
    const OracleLabels labels = best_combination(d, max_k);
    const auto steps = build_training_targets(d, labels, metric, tau);
    records[i] = make_label_record(d, labels, steps, metric, tau);
  });
  std::vector<LabelRecord> kept;
  for (auto& r : records)
    if (r) kept.push_back(std::move(*r));
  if (kept.size() != docs.size())
    err << "warning: skipped " << docs.size() - kept.size() << " document(s) with an empty reference\n";
  save_labels(out_path, kept);
  out << "labels: " << kept.size() << " documents -> " << out_path << '\n';
  return 0;
}

inline int train_cmd(const std::string& config_path, const std::string& corpus_path, const std::string& labels_path,
                     const std::string& vocab_path, const std::string& embeddings_path, const std::string& out_dir,
                     std::ostream& out, std::ostream& err) {
  TrainConfig config = load_train_config(config_path);
  config.checkpoint_dir = out_dir;
  const Vocabulary vocab = load_vocab(vocab_path);
  const auto docs = detail::load_truncated(corpus_path, config.max_sentences, config.max_words, err);
  const ExampleSet train_set = make_examples(docs, load_labels(labels_path), vocab);
  if (train_set.skipped_empty) err << "warning: skipped " << train_set.skipped_empty << " document(s) with empty labels\n";
  ExampleSet val_set;
  if (!config.validation_corpus.empty()) {
    if (config.validation_labels.empty()) throw Error("train config: validation_corpus needs validation_labels");
    const auto vdocs = detail::load_truncated(config.validation_corpus, config.max_sentences, config.max_words, err);
    val_set = make_examples(vdocs, load_labels(config.validation_labels), vocab);
  }
  std::optional<EmbeddingTable> embeddings;
  if (!embeddings_path.empty()) {
    Rng rng(neusum::detail::mix_seed(config.seed, 0x656d62ULL));
    embeddings = load_embeddings(embeddings_path, vocab, config.dims.embedding, rng);
    out << "embeddings: coverage " << std::fixed << std::setprecision(4) << embeddings->coverage << std::defaultfloat
        << '\n';
  }
  const TrainResult result =
      train(config, train_set.examples, val_set.examples, vocab, embeddings ? &*embeddings : nullptr);
  out << "trained " << result.log.records.back().step << " steps; best validation loss " << result.best_val_loss
      << '\n';
  out << "best checkpoint: " << result.best_checkpoint << '\n';
  return 0;
}

inline int summarize_cmd(const std::string& checkpoint, const std::string& vocab_path, const std::string& input,
                         std::size_t budget, bool use_lead3, const Caps& caps, const std::string& out_path,
                         std::ostream& out, std::ostream& err) {
  const auto docs = detail::load_truncated(input, caps.max_sentences, caps.max_words, err);
  std::vector<Extraction> xs(docs.size());
  if (use_lead3) {
    for (std::size_t i = 0; i < docs.size(); ++i) xs[i] = lead3(docs[i], budget);
  } else {
    if (checkpoint.empty()) throw Error("summarize: --checkpoint is required unless --lead3 is given");
    Checkpoint ck = load_checkpoint(checkpoint);
    std::optional<Vocabulary> vocab = ck.vocab;
    if (!vocab_path.empty()) vocab = load_vocab(vocab_path);
    if (!vocab) throw Error("summarize: checkpoint has no vocab.txt; pass --vocab");
    if (vocab->size() != ck.params.config.dims.vocab)
      throw Error("summarize: vocabulary size " + std::to_string(vocab->size()) + " does not match the checkpoint (" +
                  std::to_string(ck.params.config.dims.vocab) + ")");
    parallel_for(docs.size(), [&](std::size_t i) { xs[i] = extract(ck.params, encode(docs[i], *vocab), budget, docs[i].id); });
  }
  save_extractions(out_path, xs);
  out << "extracted " << xs.size() << " documents -> " << out_path << '\n';
  return 0;
}

inline int evaluate_cmd(const std::string& extractions_path, const std::string& corpus_path,
                        const std::string& labels_path, const std::string& report_path, bool stem, std::ostream& out,
                        std::ostream& err) {
  const LoadedCorpus c = load_corpus(corpus_path);
  if (c.skipped_empty) err << "warning: skipped " << c.skipped_empty << " empty document(s)\n";
  const auto xs = load_extractions(extractions_path);
  std::optional<OracleSets> oracles;
  if (!labels_path.empty()) oracles = detail::oracle_sets(load_labels(labels_path));
  EvalOptions opts;
  opts.stemming = stem;
  const EvalReport report = evaluate(xs, c.documents, oracles ? &*oracles : nullptr, opts);
  {
    std::ofstream f(report_path);
    if (!f) throw IoError("cannot write report", report_path);
    f << to_json(report).dump(2) << '\n';
  }
  const std::string hist_path = std::filesystem::path(report_path).replace_extension(".histogram.csv").string();
  {
    std::ofstream f(hist_path);
    if (!f) throw IoError("cannot write histogram", hist_path);
    f << histogram_csv(report);
  }
  out << std::fixed << std::setprecision(4) << "documents " << report.documents << "\nROUGE-1 F1 " << report.rouge1
      << "\nROUGE-2 F1 " << report.rouge2 << "\nROUGE-L F1 " << report.rougeL << '\n';
  for (std::size_t t = 0; t < report.precision_at.size(); ++t)
    out << "p(@" << t + 1 << ") " << report.precision_at[t] << '\n';
  out << std::defaultfloat;
  return 0;
}

inline int rouge_cmd(const std::string& candidate, const std::string& reference, const std::string& variant, bool stem,
                     std::ostream& out) {
  const RougeVariant v = RougeVariant::parse(variant, stem);
  const RougeScore s = score_summary(detail::read_sentence_file(candidate), detail::read_sentence_file(reference), v);
  out << std::fixed << std::setprecision(6) << v.name() << " P " << s.precision << " R " << s.recall << " F1 " << s.f1
      << std::defaultfloat << '\n';
  return 0;
}

inline int grad_check_cmd(std::size_t dims, std::uint64_t seed, std::size_t sentences, std::size_t words,
                          double tolerance, bool reverse_kl, const FiniteDifference& fd, std::ostream& out) {
  ToyProblem toy = make_toy_problem(dims, seed, sentences, words);
  const auto result = check_model_gradients(
      toy, reverse_kl ? ops::KlDirection::model_to_target : ops::KlDirection::target_to_model, fd);
  out << std::scientific << std::setprecision(3);
  for (std::size_t i = 0; i < result.names.size(); ++i)
    out << std::left << std::setw(32) << result.names[i] << ' ' << result.report.per_tensor[i] << '\n';
  out << "max relative error " << result.report.max_relative_error << '\n' << std::defaultfloat;
  const bool ok = result.report.max_relative_error < tolerance;
  out << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Extractive summarization by joint sentence scoring and selection", "neusum"};
  app.require_subcommand(1);
  Caps caps;

  auto* bv = app.add_subcommand("build-vocab", "Build a frequency-ranked vocabulary from a corpus");
  std::string bv_input, bv_out;
  std::size_t bv_top_k = 100000;
  bv->add_option("--input", bv_input, "Corpus (JSON Lines)")->required();
  bv->add_option("--top-k", bv_top_k, "Vocabulary size excluding specials")->capture_default_str();
  bv->add_option("--out", bv_out, "Vocabulary file")->required();

  auto* mo = app.add_subcommand("make-oracle", "Build oracle selections and per-step gain targets");
  std::string mo_input, mo_out, mo_variant = "rouge-2";
  std::size_t mo_max_k = 5;
  double mo_tau = 20.0;
  bool mo_stem = false;
  mo->add_option("--input", mo_input, "Corpus (JSON Lines)")->required();
  mo->add_option("--max-k", mo_max_k, "Largest combination size searched")->capture_default_str();
  mo->add_option("--tau", mo_tau, "Target softmax temperature")->capture_default_str();
  mo->add_option("--variant", mo_variant, "Gain metric: rouge-1, rouge-2, rouge-l or mean")->capture_default_str();
  mo->add_flag("--stem", mo_stem, "Stem tokens when computing gains");
  mo->add_option("--max-sentences", caps.max_sentences)->capture_default_str();
  mo->add_option("--max-words", caps.max_words)->capture_default_str();
  mo->add_option("--out", mo_out, "Labels file")->required();

  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_config, tr_corpus, tr_labels, tr_vocab, tr_embeddings, tr_out;
  tr->add_option("--config", tr_config, "Training config (JSON)")->required();
  tr->add_option("--corpus", tr_corpus, "Training corpus")->required();
  tr->add_option("--labels", tr_labels, "Oracle labels for the corpus")->required();
  tr->add_option("--vocab", tr_vocab, "Vocabulary file")->required();
  tr->add_option("--embeddings", tr_embeddings, "Pre-trained embeddings (token v1 ... vE)");
  tr->add_option("--out-dir", tr_out, "Checkpoint and log directory")->required();

  auto* su = app.add_subcommand("summarize", "Extract summaries with a trained model or LEAD3");
  std::string su_checkpoint, su_vocab, su_input, su_out;
  std::size_t su_budget = 3;
  bool su_lead3 = false;
  su->add_option("--checkpoint", su_checkpoint, "Checkpoint directory");
  su->add_option("--vocab", su_vocab, "Vocabulary (defaults to the checkpoint's)");
  su->add_option("--input", su_input, "Corpus (JSON Lines)")->required();
  su->add_option("--budget", su_budget, "Sentences per summary")->capture_default_str();
  su->add_flag("--lead3", su_lead3, "Take the leading sentences instead of running a model");
  su->add_option("--max-sentences", caps.max_sentences)->capture_default_str();
  su->add_option("--max-words", caps.max_words)->capture_default_str();
  su->add_option("--out", su_out, "Extractions file")->required();

  auto* ev = app.add_subcommand("evaluate", "Score extractions: ROUGE, precision at step t, positions");
  std::string ev_extractions, ev_corpus, ev_labels, ev_report;
  bool ev_no_stem = false;
  ev->add_option("--extractions", ev_extractions)->required();
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--labels", ev_labels, "Oracle labels; enables p(@t)");
  ev->add_option("--report", ev_report, "Report JSON; the histogram CSV is written next to it")->required();
  ev->add_flag("--no-stem", ev_no_stem, "Disable Porter stemming");

  auto* ro = app.add_subcommand("rouge", "Score one candidate file against one reference file");
  std::string ro_candidate, ro_reference, ro_variant = "rouge-2";
  bool ro_stem = false;
  ro->add_option("--candidate", ro_candidate, "One sentence per line")->required();
  ro->add_option("--reference", ro_reference, "One sentence per line")->required();
  ro->add_option("--variant", ro_variant, "rouge-1, rouge-2 or rouge-l")->capture_default_str();
  ro->add_flag("--stem", ro_stem, "Porter-stem tokens first");

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the training gradients");
  std::size_t gc_dims = 4, gc_sentences = 2, gc_words = 3;
  std::uint64_t gc_seed = 7;
  double gc_tol = 1e-4;
  bool gc_reverse = false, gc_two_point = false;
  double gc_eps = kModelCheck.eps;
  gc->add_option("--dims", gc_dims, "Width of every layer")->capture_default_str();
  gc->add_option("--seed", gc_seed)->capture_default_str();
  gc->add_option("--sentences", gc_sentences)->capture_default_str();
  gc->add_option("--words", gc_words)->capture_default_str();
  gc->add_option("--tolerance", gc_tol)->capture_default_str();
  gc->add_flag("--reverse-kl", gc_reverse, "Check D(P||Q) instead of D(Q||P)");
  gc->add_option("--eps", gc_eps, "Finite-difference step")->capture_default_str();
  gc->add_flag("--two-point", gc_two_point, "Use the two-point central stencil instead of four points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*bv) return build_vocab_cmd(bv_input, bv_top_k, bv_out, out, err);
    if (*mo) return make_oracle_cmd(mo_input, mo_max_k, mo_tau, mo_variant, mo_stem, caps, mo_out, out, err);
    if (*tr) return train_cmd(tr_config, tr_corpus, tr_labels, tr_vocab, tr_embeddings, tr_out, out, err);
    if (*su) return summarize_cmd(su_checkpoint, su_vocab, su_input, su_budget, su_lead3, caps, su_out, out, err);
    if (*ev) return evaluate_cmd(ev_extractions, ev_corpus, ev_labels, ev_report, !ev_no_stem, out, err);
    if (*ro) return rouge_cmd(ro_candidate, ro_reference, ro_variant, ro_stem, out);
    if (*gc) return grad_check_cmd(gc_dims, gc_seed, gc_sentences, gc_words, gc_tol, gc_reverse,
                                 {gc_eps, gc_two_point ? Stencil::two_point : Stencil::four_point}, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace neusum::cli
