// probation: command-line driver for the probation prediction pipeline.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "probation/experiment.hpp"
#include "probation/gradcheck.hpp"
#include "probation/kernels.hpp"
#include "probation/manifest.hpp"

namespace fs = std::filesystem;
using namespace probation;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string isa = "auto";
};

std::uint64_t require_seed(const Common& c, const std::string& command) {
  if (!c.seed) {
    throw CLI::RequiredError("--seed (or PROBATION_SEED) for '" + command + "'");
  }
  return *c.seed;
}

fs::path manifest_for(const fs::path& out) {
  if (fs::is_directory(out)) return out / "manifest.json";
  return fs::path(out.string() + ".manifest.json");
}

struct ManifestBuilder {
  RunManifest m;

  ManifestBuilder(std::string command, std::uint64_t seed) {
    m.command = std::move(command);
    m.seed = seed;
    m.isa = std::string(kernels::isa_name(kernels::active().isa));
  }
  ManifestBuilder& set(std::string key, std::string value) {
    m.config.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  template <typename T>
  ManifestBuilder& num(std::string key, T value) {
    std::ostringstream s;
    s << value;
    return set(std::move(key), s.str());
  }
  ManifestBuilder& input(const fs::path& p) {
    if (!p.empty()) m.inputs.push_back(p.string());
    return *this;
  }
  ManifestBuilder& output(const fs::path& p) {
    m.outputs.push_back(p.string());
    return *this;
  }
  void write(const fs::path& corpus, const fs::path& out) {
    if (!corpus.empty()) m.corpus_hash = sha256_file(corpus);
    write_manifest(manifest_for(out), m);
  }
};

void add_train_options(CLI::App* cmd, TrainConfig& t) {
  cmd->add_option("--lambda", t.lambda, "Auxiliary loss weight")->capture_default_str();
  cmd->add_option("--epochs", t.epochs)->capture_default_str();
  cmd->add_option("--batch", t.batch_size)->capture_default_str();
  cmd->add_option("--runs", t.runs, "Independent runs with seeds seed, seed+1, ...")
      ->capture_default_str();
  cmd->add_option("--dim", t.dim, "Embedding size d")->capture_default_str();
  cmd->add_option("--hidden", t.hidden, "Classifier hidden size h")->capture_default_str();
  cmd->add_option("--lr", t.learning_rate)->capture_default_str();
  cmd->add_option("--dropout", t.dropout)->capture_default_str();
  cmd->add_option("--max-len", t.max_len)->capture_default_str();
  cmd->add_option("--min-freq", t.min_freq)->capture_default_str();
  cmd->add_option("--init-scale", t.init_scale)->capture_default_str();
  cmd->add_flag("--shared-embedding", t.shared_embedding);
}

void record_train(ManifestBuilder& mb, const TrainConfig& t) {
  mb.num("lambda", t.lambda).num("epochs", t.epochs).num("batch", t.batch_size);
  mb.num("runs", t.runs).num("dim", t.dim).num("hidden", t.hidden);
  mb.num("lr", t.learning_rate).num("dropout", t.dropout).num("max_len", t.max_len);
  mb.num("min_freq", t.min_freq).num("shared_embedding", t.shared_embedding);
  mb.num("init_scale", t.init_scale);
}

ElementRegistry registry_or_default(const std::string& path) {
  return path.empty() ? canonical_registry() : load_registry(path);
}

PreparedCorpus prepare_for_training(const std::vector<JudgmentDocument>& docs,
                                    const std::string& sequences, const DatasetSplit& split,
                                    const TrainConfig& t) {
  const auto seqs = load_sequences(sequences);
  return prepare_corpus(docs, interpretation_channel(seqs), split.train, t.max_len, t.min_freq);
}

void print_metrics(const std::string& label, const Metrics& m, std::size_t n) {
  std::printf("%-10s n=%-6zu acc=%s mp=%s mr=%s f1=%s\n", label.c_str(), n,
              percent(m.accuracy).c_str(), percent(m.macro_precision).c_str(),
              percent(m.macro_recall).c_str(), percent(m.macro_f1).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr,
                 "usage: probation <command> [options]\n"
                 "commands: corpus {synth|split|stats}, extract, seq, train, run, eval, sweep,\n"
                 "          attribution, gradcheck, e2e, defaults\n"
                 "run 'probation --help' for details\n");
    return 2;
  }

  CLI::App app{"Probation prediction pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Seed for all randomness")->envname("PROBATION_SEED");
  app.add_option("--isa", common.isa, "Kernel variant: auto, scalar or avx2")
      ->envname("PROBATION_ISA")
      ->capture_default_str();

  // corpus ------------------------------------------------------------------
  auto* corpus = app.add_subcommand("corpus", "Synthetic corpus, splits and statistics");
  corpus->require_subcommand(1);

  SyntheticConfig synth = default_synthetic_config();
  std::string synth_out;
  auto* synth_cmd = corpus->add_subcommand("synth", "Generate a planted-label corpus");
  synth_cmd->add_option("--n", synth.n_docs, "Number of documents")->capture_default_str();
  synth_cmd->add_option("--positive-rate", synth.positive_rate_target)->capture_default_str();
  synth_cmd->add_option("--rate-tolerance", synth.rate_tolerance, "Accepted gap to the target rate")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth.label_noise, "Label flip probability")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Corpus file (JSONL)")->required();

  std::string split_corpus_path, split_out;
  auto* split_cmd = corpus->add_subcommand("split", "80/10/10 train/val/test split");
  split_cmd->add_option("--corpus", split_corpus_path)->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out", split_out, "Split file (JSON)")->required();

  std::string stats_corpus_path;
  auto* stats_cmd = corpus->add_subcommand("stats", "Label rates and length percentiles");
  stats_cmd->add_option("--corpus", stats_corpus_path)->required()->check(CLI::ExistingFile);

  // extract / seq -------------------------------------------------------------
  std::string ex_rules, ex_registry, ex_corpus, ex_out;
  auto* extract_cmd = app.add_subcommand("extract", "Rule-based element extraction");
  extract_cmd->add_option("--rules", ex_rules, "Rules file; built-in synthetic rules if omitted")
      ->check(CLI::ExistingFile);
  extract_cmd->add_option("--registry", ex_registry)->check(CLI::ExistingFile);
  extract_cmd->add_option("--corpus", ex_corpus)->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--out", ex_out, "Vectors file (JSONL)")->required();

  std::string seq_kb, seq_registry, seq_vectors, seq_out;
  auto* seq_cmd = app.add_subcommand("seq", "Interpretation sequences from element vectors");
  seq_cmd->add_option("--kb", seq_kb, "Knowledge base; built-in synthetic KB if omitted")
      ->check(CLI::ExistingFile);
  seq_cmd->add_option("--registry", seq_registry)->check(CLI::ExistingFile);
  seq_cmd->add_option("--vectors", seq_vectors)->required()->check(CLI::ExistingFile);
  seq_cmd->add_option("--out", seq_out, "Sequences file (JSONL)")->required();

  // train / run / eval ----------------------------------------------------------
  TrainConfig train_cfg;
  std::string tr_framework, tr_corpus, tr_seqs, tr_split, tr_out;
  auto* train_cmd = app.add_subcommand("train", "Train a framework");
  train_cmd->add_option("--framework", tr_framework, "ts-le, ts-dt or mt-dt")->required();
  train_cmd->add_option("--corpus", tr_corpus)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--sequences", tr_seqs)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--split", tr_split)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr_out, "Model directory")->required();
  add_train_options(train_cmd, train_cfg);

  std::string run_framework, run_model, run_corpus, run_seqs, run_split, run_part = "test", run_out;
  bool run_override = false, run_all = false;
  auto* run_cmd = app.add_subcommand("run", "Predict with a trained framework");
  run_cmd->add_option("--framework", run_framework, "Must match the checkpoint when given");
  run_cmd->add_option("--model", run_model)->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--corpus", run_corpus)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--sequences", run_seqs)->required()->check(CLI::ExistingFile);
  auto* run_split_opt = run_cmd->add_option("--split", run_split)->check(CLI::ExistingFile);
  run_cmd->add_option("--part", run_part, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->needs(run_split_opt);
  auto* run_all_opt = run_cmd->add_flag("--all", run_all, "Predict every document");
  run_all_opt->excludes(run_split_opt);
  run_cmd->add_flag("--override-meta", run_override, "Apply the mandatory-probation rule");
  run_cmd->add_option("--out", run_out, "Predictions file (JSONL)")->required();

  std::string ev_preds, ev_corpus, ev_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold labels");
  eval_cmd->add_option("--predictions", ev_preds)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", ev_corpus)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ev_out, "Report file (JSON)");

  // sweep / attribution / gradcheck / e2e / defaults ------------------------------
  TrainConfig sweep_cfg;
  std::vector<double> sw_grid = default_lambda_grid();
  std::string sw_corpus, sw_seqs, sw_split, sw_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "MT-DT lambda sweep");
  sweep_cmd->add_option("--corpus", sw_corpus)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--sequences", sw_seqs)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--split", sw_split)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--grid", sw_grid, "Lambda values")->delimiter(',');
  sweep_cmd->add_option("--out", sw_out, "Table file (TSV)")->required();
  add_train_options(sweep_cmd, sweep_cfg);

  std::string at_model, at_corpus, at_seqs, at_doc, at_out;
  auto* attr_cmd = app.add_subcommand("attribution", "Export attention weights for one document");
  attr_cmd->add_option("--model", at_model)->required()->check(CLI::ExistingDirectory);
  attr_cmd->add_option("--corpus", at_corpus)->required()->check(CLI::ExistingFile);
  attr_cmd->add_option("--sequences", at_seqs)->required()->check(CLI::ExistingFile);
  attr_cmd->add_option("--doc", at_doc, "Document id")->required();
  attr_cmd->add_option("--out", at_out, "Attribution file (TSV)")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");

  std::string e2e_config, e2e_out;
  auto* e2e_cmd = app.add_subcommand("e2e", "Full experiment from one config");
  e2e_cmd->add_option("--config", e2e_config, "JSON config; defaults if omitted")
      ->check(CLI::ExistingFile);
  e2e_cmd->add_option("--out", e2e_out, "Output directory")->required();

  std::string def_out;
  auto* defaults_cmd = app.add_subcommand("defaults", "Write the built-in registry, rules and KB");
  defaults_cmd->add_option("--out", def_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (common.isa != "auto") kernels::set_active_isa(kernels::parse_isa(common.isa));

    if (synth_cmd->parsed()) {
      synth.seed = require_seed(common, "corpus synth");
      const SyntheticCorpus c = generate_synthetic_corpus(synth);
      save_corpus(synth_out, c.docs);
      std::printf("wrote %zu documents (threshold %d, positive rate %.4f)\n", c.docs.size(),
                  c.threshold, c.realized_positive_rate);
      ManifestBuilder mb("corpus synth", synth.seed);
      mb.num("n", synth.n_docs)
          .num("positive_rate", synth.positive_rate_target)
          .num("rate_tolerance", synth.rate_tolerance);
      mb.num("noise", synth.label_noise).output(synth_out).write(synth_out, synth_out);
    } else if (split_cmd->parsed()) {
      const std::uint64_t seed = require_seed(common, "corpus split");
      const auto docs = load_corpus(split_corpus_path);
      const DatasetSplit s = split_corpus(docs, seed);
      save_split(split_out, s);
      std::printf("train %zu  val %zu  test %zu\n", s.train.size(), s.val.size(), s.test.size());
      ManifestBuilder mb("corpus split", seed);
      mb.input(split_corpus_path).output(split_out).write(split_corpus_path, split_out);
    } else if (stats_cmd->parsed()) {
      const CorpusStats s = corpus_stats(load_corpus(stats_corpus_path));
      std::printf("documents      %zu\n", s.n_docs);
      std::printf("aux positive   %zu / %zu (%s%%)\n", s.n_aux_positive, s.n_aux_labeled,
                  percent(s.aux_rate).c_str());
      std::printf("main positive  %zu / %zu (%s%%)\n", s.n_main_positive, s.n_main_labeled,
                  percent(s.main_rate).c_str());
      std::printf("fact tokens    min %zu  p50 %zu  p90 %zu  p99 %zu  max %zu\n", s.len_min,
                  s.len_p50, s.len_p90, s.len_p99, s.len_max);
    } else if (extract_cmd->parsed()) {
      const ElementRegistry registry = registry_or_default(ex_registry);
      const CompiledRules rules = ex_rules.empty() ? compile_rules(default_synthetic_rules(), registry)
                                                   : compile_rules(fs::path(ex_rules), registry);
      const auto docs = load_corpus(ex_corpus);
      save_vectors(ex_out, batch_extract(docs, rules));
      std::printf("extracted %zu vectors\n", docs.size());
      ManifestBuilder mb("extract", common.seed.value_or(0));
      mb.set("rules", ex_rules.empty() ? "builtin" : ex_rules);
      mb.set("registry", ex_registry.empty() ? "builtin" : ex_registry);
      mb.input(ex_corpus).input(ex_rules).input(ex_registry).output(ex_out).write(ex_corpus, ex_out);
    } else if (seq_cmd->parsed()) {
      const ElementRegistry registry = registry_or_default(seq_registry);
      const InterpretationKB kb = seq_kb.empty() ? default_synthetic_kb(registry) : load_kb(seq_kb, registry);
      std::vector<LegalSequence> seqs;
      for (const auto& v : load_vectors(seq_vectors)) seqs.push_back(generate_sequence(v.id, v.elements, kb));
      save_sequences(seq_out, seqs);
      std::printf("wrote %zu sequences\n", seqs.size());
      ManifestBuilder mb("seq", common.seed.value_or(0));
      mb.set("kb", seq_kb.empty() ? "builtin" : seq_kb);
      mb.input(seq_vectors).input(seq_kb).input(seq_registry).output(seq_out).write({}, seq_out);
    } else if (train_cmd->parsed()) {
      train_cfg.seed = require_seed(common, "train");
      const FrameworkKind kind = parse_framework(tr_framework);
      const auto docs = load_corpus(tr_corpus);
      const DatasetSplit split = load_split(tr_split);
      const PreparedCorpus prepared = prepare_for_training(docs, tr_seqs, split, train_cfg);
      const auto runs = train_runs(kind, prepared, split, train_cfg);
      fs::create_directories(tr_out);
      ManifestBuilder mb("train", train_cfg.seed);
      mb.set("framework", tr_framework);
      record_train(mb, train_cfg);
      mb.input(tr_corpus).input(tr_seqs).input(tr_split);
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const fs::path dir = runs.size() == 1 ? fs::path(tr_out) : fs::path(tr_out) / ("run" + std::to_string(r));
        save_framework(dir, runs[r]);
        mb.output(dir);
        const auto ev = evaluate_framework(runs[r], prepared, split.val);
        print_metrics("run " + std::to_string(r) + " val", ev.task2, split.val.size());
      }
      mb.write(tr_corpus, tr_out);
    } else if (run_cmd->parsed()) {
      const TrainedFramework fw = load_framework(run_model);
      if (!run_framework.empty() && parse_framework(run_framework) != fw.kind) {
        throw CLI::ValidationError("--framework " + run_framework + " conflicts with checkpoint (" +
                                   std::string(framework_name(fw.kind)) + ")");
      }
      const auto docs = load_corpus(run_corpus);
      const auto seqs = load_sequences(run_seqs);
      const PreparedCorpus prepared =
          prepare_corpus(docs, interpretation_channel(seqs), fw.vocab, fw.cfg.max_len);
      std::vector<std::string> ids;
      if (!run_split.empty()) {
        const DatasetSplit s = load_split(run_split);
        ids = run_part == "train" ? s.train : run_part == "val" ? s.val : s.test;
      } else {
        for (const auto& d : docs) ids.push_back(d.id);
      }
      const auto ev = evaluate_framework(fw, prepared, ids, run_override);
      save_predictions(run_out, ev.predictions);
      std::printf("wrote %zu predictions\n", ev.predictions.size());
      ManifestBuilder mb("run", fw.cfg.seed);
      mb.set("framework", std::string(framework_name(fw.kind)));
      mb.num("override_meta", run_override).set("part", run_split.empty() ? "all" : run_part);
      mb.input(run_model).input(run_corpus).input(run_seqs).input(run_split);
      mb.output(run_out).write(run_corpus, run_out);
    } else if (eval_cmd->parsed()) {
      const auto preds = load_predictions(ev_preds);
      const auto docs = load_corpus(ev_corpus);
      std::map<std::string, const JudgmentDocument*> by_id;
      for (const auto& d : docs) by_id[d.id] = &d;
      std::vector<int> p1, g1, p2, g2;
      for (const auto& p : preds) {
        const auto it = by_id.find(p.doc_id);
        if (it == by_id.end()) throw std::invalid_argument("prediction for unknown document " + p.doc_id);
        if (it->second->gold_aux) {
          p1.push_back(p.y_aux_hat);
          g1.push_back(*it->second->gold_aux);
        }
        if (it->second->gold_main) {
          p2.push_back(p.y_main_hat);
          g2.push_back(*it->second->gold_main);
        }
      }
      const MetricsReport t1 = metrics_report(confusion(p1, g1), "task1");
      const MetricsReport t2 = metrics_report(confusion(p2, g2), "task2");
      print_metrics("task1", t1.mean, t1.n);
      print_metrics("task2", t2.mean, t2.n);
      if (!ev_out.empty()) {
        nlohmann::ordered_json j;
        for (const auto* r : {&t1, &t2}) {
          j[r->task] = {{"n", r->n},
                        {"acc", percent(r->mean.accuracy)},
                        {"mp", percent(r->mean.macro_precision)},
                        {"mr", percent(r->mean.macro_recall)},
                        {"f1", percent(r->mean.macro_f1)}};
        }
        std::ofstream(ev_out) << j.dump(2) << '\n';
        ManifestBuilder mb("eval", common.seed.value_or(0));
        mb.input(ev_preds).input(ev_corpus).output(ev_out).write(ev_corpus, ev_out);
      }
    } else if (sweep_cmd->parsed()) {
      sweep_cfg.seed = require_seed(common, "sweep");
      const auto docs = load_corpus(sw_corpus);
      const DatasetSplit split = load_split(sw_split);
      const PreparedCorpus prepared = prepare_for_training(docs, sw_seqs, split, sweep_cfg);
      const SweepTable table = lambda_sweep(sw_grid, prepared, split, sweep_cfg);
      const std::string text = format_sweep(table);
      std::ofstream(sw_out) << text;
      std::fputs(text.c_str(), stdout);
      ManifestBuilder mb("sweep", sweep_cfg.seed);
      record_train(mb, sweep_cfg);
      std::string grid;
      for (double l : sw_grid) grid += (grid.empty() ? "" : ",") + std::to_string(l);
      mb.set("grid", grid).input(sw_corpus).input(sw_seqs).input(sw_split);
      mb.output(sw_out).write(sw_corpus, sw_out);
    } else if (attr_cmd->parsed()) {
      const TrainedFramework fw = load_framework(at_model);
      const auto docs = load_corpus(at_corpus);
      const auto seqs = load_sequences(at_seqs);
      const PreparedCorpus prepared =
          prepare_corpus(docs, interpretation_channel(seqs), fw.vocab, fw.cfg.max_len);
      const auto rows = export_attribution(prepared.at(at_doc), fw);
      save_attribution(at_out, rows);
      std::printf("wrote %zu attribution rows\n", rows.size());
      ManifestBuilder mb("attribution", fw.cfg.seed);
      mb.set("doc", at_doc).input(at_model).input(at_corpus).input(at_seqs);
      mb.output(at_out).write(at_corpus, at_out);
    } else if (grad_cmd->parsed()) {
      const GradCheckReport r = gradient_check(require_seed(common, "gradcheck"));
      for (const auto& g : r.groups) {
        std::printf("%-24s %4zu  %.3e\n", g.name.c_str(), g.entries, g.max_rel_error);
      }
      std::printf("max relative error %.3e\n", r.max_rel_error);
      return r.max_rel_error <= kGradCheckTolerance ? 0 : 1;
    } else if (e2e_cmd->parsed()) {
      const std::uint64_t seed = require_seed(common, "e2e");
      const EndToEndConfig cfg = e2e_config.empty() ? default_end_to_end_config(seed)
                                                    : load_end_to_end_config(e2e_config, seed);
      const EndToEndResult r = end_to_end(cfg, e2e_out);
      std::fputs(r.comparison.c_str(), stdout);
      if (r.sweep) std::fputs(format_sweep(*r.sweep).c_str(), stdout);
    } else if (defaults_cmd->parsed()) {
      fs::create_directories(def_out);
      const ElementRegistry registry = canonical_registry();
      const fs::path dir(def_out);
      save_registry(dir / "registry.jsonl", registry);
      const auto rules = default_synthetic_rules();
      save_rules(dir / "rules.jsonl", rules);
      save_kb(dir / "kb.jsonl", default_synthetic_kb(registry));
      ManifestBuilder mb("defaults", common.seed.value_or(0));
      for (const char* f : {"registry.jsonl", "rules.jsonl", "kb.jsonl"}) mb.output(dir / f);
      mb.write({}, dir);
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
