#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "probation/experiment.hpp"
#include "probation/kernels.hpp"
#include "probation/manifest.hpp"

namespace probation {

using nlohmann::ordered_json;

FrameworkEvaluation evaluate_framework(const TrainedFramework& fw, const PreparedCorpus& corpus,
                                       std::span<const std::string> ids, bool override_meta) {
  FrameworkEvaluation ev;
  ev.kind = fw.kind;
  const auto docs = corpus.select(ids);
  std::vector<int> p1, g1, p2, g2, p2_raw;
  for (const PreparedDoc* d : docs) {
    PipelinePrediction p = predict(fw, *d);
    if (override_meta) p = apply_mandatory_override(std::move(p), d->meta);
    if (d->gold_aux) {
      p1.push_back(p.y_aux_hat);
      g1.push_back(*d->gold_aux);
    }
    if (d->gold_main) {
      p2.push_back(p.y_main_hat);
      p2_raw.push_back(p.y_main_raw);
      g2.push_back(*d->gold_main);
    }
    ev.predictions.push_back(std::move(p));
  }
  ev.n = docs.size();
  if (!p1.empty()) ev.task1 = metrics(confusion(p1, g1));
  if (!p2.empty()) {
    ev.task2 = metrics(confusion(p2, g2));
    ev.task2_raw = metrics(confusion(p2_raw, g2));
  }
  ev.accounting = cascade_accounting(ev.predictions, docs);
  return ev;
}

FrameworkReport averaged_eval(std::span<const TrainedFramework> checkpoints,
                              const PreparedCorpus& corpus, std::span<const std::string> test_ids) {
  if (checkpoints.empty()) throw std::invalid_argument("averaged_eval needs at least one checkpoint");
  FrameworkReport r;
  r.kind = checkpoints.front().kind;
  std::vector<Metrics> t1, t2, t2_raw;
  for (const auto& fw : checkpoints) {
    if (fw.kind != r.kind) throw std::invalid_argument("averaged_eval: mixed framework kinds");
    FrameworkEvaluation ev = evaluate_framework(fw, corpus, test_ids);
    t1.push_back(ev.task1);
    t2.push_back(ev.task2);
    t2_raw.push_back(ev.task2_raw);
    r.accounting.push_back(ev.accounting);
  }
  r.task1 = average_runs(t1, test_ids.size(), "task1");
  r.task2 = average_runs(t2, test_ids.size(), "task2");
  r.task2_raw = average_runs(t2_raw, test_ids.size(), "task2_raw");
  return r;
}

std::vector<TrainedFramework> train_runs(FrameworkKind kind, const PreparedCorpus& corpus,
                                         const DatasetSplit& split, const TrainConfig& cfg) {
  std::vector<TrainedFramework> out;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + r;
    out.push_back(train_framework(kind, corpus, split, run_cfg));
  }
  return out;
}

std::vector<double> default_lambda_grid() { return {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}; }

SweepTable lambda_sweep(std::span<const double> grid, const PreparedCorpus& corpus,
                        const DatasetSplit& split, const TrainConfig& cfg) {
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  for (double l : grid) {
    if (!(l >= 0.0)) throw std::invalid_argument("negative lambda in grid");
  }
  SweepTable table;
  for (double l : grid) {
    TrainConfig c = cfg;
    c.lambda = l;
    TrainedFramework fw = train_framework(FrameworkKind::MtDt, corpus, split, c);
    SweepRow row;
    row.lambda = l;
    row.metrics = evaluate_framework(fw, corpus, split.test).task2;
    row.excluded = l == 0.0;
    table.rows.push_back(row);
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].metrics.accuracy > table.rows[table.best_index].metrics.accuracy) {
      table.best_index = i;
    }
  }
  table.rows[table.best_index].best = true;
  return table;
}

std::string format_sweep(const SweepTable& table) {
  std::ostringstream out;
  out << "lambda\tacc\tmp\tmr\tf1\tmark\n";
  for (const auto& r : table.rows) {
    char lam[32];
    std::snprintf(lam, sizeof lam, "%g", r.lambda);
    std::string mark;
    if (r.excluded) mark = "excluded";
    if (r.best) mark += mark.empty() ? "*" : ",*";
    if (mark.empty()) mark = "-";
    out << lam << '\t' << percent(r.metrics.accuracy) << '\t' << percent(r.metrics.macro_precision)
        << '\t' << percent(r.metrics.macro_recall) << '\t' << percent(r.metrics.macro_f1) << '\t'
        << mark << '\n';
  }
  return out.str();
}

ChannelTexts ablation_channel(AblationVariant variant, std::span<const ExtractedVector> vectors,
                              const InterpretationKB& kb) {
  ChannelTexts out;
  if (variant == AblationVariant::A) return out;
  for (const auto& v : vectors) {
    out[v.id] = variant == AblationVariant::B ? element_value_tokens(v.elements)
                                              : generate_sequence(v.id, v.elements, kb).text;
  }
  return out;
}

AblationResult run_ablation(AblationVariant variant, std::span<const JudgmentDocument> docs,
                            std::span<const ExtractedVector> vectors, const InterpretationKB& kb,
                            const DatasetSplit& split, const TrainConfig& cfg) {
  const ChannelTexts channel = ablation_channel(variant, vectors, kb);
  const PreparedCorpus corpus = prepare_corpus(docs, channel, split.train, cfg.max_len, cfg.min_freq);
  const auto runs = train_runs(FrameworkKind::MtDt, corpus, split, cfg);
  return {variant, averaged_eval(runs, corpus, split.test).task2};
}

namespace {

std::string upper_name(FrameworkKind k) {
  std::string s(framework_name(k));
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void table_row(std::ostringstream& out, const std::string& model, const std::string& task,
               const Metrics& m) {
  out << "| " << model << " | " << task << " | " << percent(m.accuracy) << " | "
      << percent(m.macro_precision) << " | " << percent(m.macro_recall) << " | "
      << percent(m.macro_f1) << " |\n";
}

ordered_json metrics_json(const Metrics& m) {
  return {{"acc", percent(m.accuracy)},
          {"mp", percent(m.macro_precision)},
          {"mr", percent(m.macro_recall)},
          {"f1", percent(m.macro_f1)}};
}

ordered_json report_json(const MetricsReport& r) {
  ordered_json runs = ordered_json::array();
  for (const auto& m : r.runs) runs.push_back(metrics_json(m));
  return {{"task", r.task},
          {"n", r.n},
          {"mean", metrics_json(r.mean)},
          {"stddev", metrics_json(r.stddev)},
          {"runs", runs}};
}

}  // namespace

std::string format_comparison(std::span<const FrameworkReport> reports) {
  std::ostringstream out;
  out << "| Model | Task | ACC(%) | MP(%) | MR(%) | F1(%) |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const std::string name = upper_name(r.kind);
    if (r.kind == FrameworkKind::MtDt) {
      table_row(out, name, "Task 2", r.task2.mean);
      table_row(out, name, "Task 2 (unmasked)", r.task2_raw.mean);
      table_row(out, name, "Task 1 (aux head)", r.task1.mean);
    } else {
      table_row(out, name, "Task 1", r.task1.mean);
      table_row(out, name, "Task 2", r.task2.mean);
    }
  }
  out << "\nCascade error accounting (stage-1 misses on granted cases vs. all stage-1 misses and "
         "Task 2 false negatives):\n";
  for (const auto& r : reports) {
    if (r.kind == FrameworkKind::MtDt) continue;
    for (std::size_t i = 0; i < r.accounting.size(); ++i) {
      const auto& a = r.accounting[i];
      out << "- " << upper_name(r.kind) << " run " << i << ": stage1_fn=" << a.stage1_false_negatives
          << " task2_fn=" << a.task2_false_negatives
          << " stage1_fn_eligible=" << a.stage1_false_negatives_eligible << " ("
          << (a.holds() ? "holds" : "VIOLATED") << ")\n";
    }
  }
  return out.str();
}

// --- end to end ---------------------------------------------------------------

EndToEndConfig default_end_to_end_config(std::uint64_t seed) {
  EndToEndConfig cfg;
  cfg.synth = default_synthetic_config();
  cfg.synth.seed = seed;
  cfg.split_seed = seed;
  cfg.train.seed = seed;
  return cfg;
}

EndToEndConfig load_end_to_end_config(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  EndToEndConfig cfg = default_end_to_end_config(seed);
  static const std::vector<std::string> known = {
      "n_docs", "positive_rate", "rate_tolerance", "noise", "corpus", "registry", "rules", "kb", "frameworks",
      "batch", "epochs", "lambda", "runs", "dropout", "max_len", "d", "h", "learning_rate",
      "shared_embedding", "min_freq", "init_scale", "override_meta", "sweep", "sweep_grid", "ablation"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  cfg.synth.n_docs = j.value("n_docs", cfg.synth.n_docs);
  cfg.synth.positive_rate_target = j.value("positive_rate", cfg.synth.positive_rate_target);
  cfg.synth.rate_tolerance = j.value("rate_tolerance", cfg.synth.rate_tolerance);
  cfg.synth.label_noise = j.value("noise", cfg.synth.label_noise);
  if (j.contains("corpus")) cfg.corpus = j["corpus"].get<std::string>();
  if (j.contains("registry")) cfg.registry = j["registry"].get<std::string>();
  if (j.contains("rules")) cfg.rules = j["rules"].get<std::string>();
  if (j.contains("kb")) cfg.kb = j["kb"].get<std::string>();
  if (j.contains("frameworks")) {
    cfg.frameworks.clear();
    for (const auto& f : j["frameworks"]) cfg.frameworks.push_back(parse_framework(f.get<std::string>()));
  }
  TrainConfig& t = cfg.train;
  t.batch_size = j.value("batch", t.batch_size);
  t.epochs = j.value("epochs", t.epochs);
  t.lambda = j.value("lambda", t.lambda);
  t.runs = j.value("runs", t.runs);
  t.dropout = j.value("dropout", t.dropout);
  t.max_len = j.value("max_len", t.max_len);
  t.dim = j.value("d", t.dim);
  t.hidden = j.value("h", t.hidden);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.shared_embedding = j.value("shared_embedding", t.shared_embedding);
  t.min_freq = j.value("min_freq", t.min_freq);
  t.init_scale = j.value("init_scale", t.init_scale);
  cfg.override_meta = j.value("override_meta", cfg.override_meta);
  cfg.sweep = j.value("sweep", cfg.sweep);
  cfg.sweep_grid = j.value("sweep_grid", cfg.sweep_grid);
  cfg.ablation = j.value("ablation", cfg.ablation);
  return cfg;
}

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage '") + name + "' failed: " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_log(const std::filesystem::path& path, std::span<const EpochLog> log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : log) {
    out << nlohmann::ordered_json{{"epoch", e.epoch},  {"l_main", e.l_main},
                                  {"l_aux", e.l_aux},  {"total", e.total},
                                  {"val_acc", e.val_acc}, {"val_f1", e.val_f1}}
               .dump()
        << '\n';
  }
}

}  // namespace

EndToEndResult end_to_end(const EndToEndConfig& cfg, const std::filesystem::path& out_dir) {
  validate(cfg.train);
  std::filesystem::create_directories(out_dir);
  EndToEndResult result;
  auto artifact = [&](const std::string& name) {
    result.artifacts.push_back(out_dir / name);
    return out_dir / name;
  };

  const auto docs = stage("synth", [&] {
    if (cfg.corpus) return load_corpus(*cfg.corpus);
    return generate_synthetic_corpus(cfg.synth).docs;
  });
  const auto corpus_path = artifact("corpus.jsonl");
  stage("synth", [&] { save_corpus(corpus_path, docs); });

  const auto vectors = stage("extract", [&] {
    const ElementRegistry registry = cfg.registry ? load_registry(*cfg.registry) : canonical_registry();
    if (auto errors = validate_registry(registry); !errors.empty()) {
      throw std::invalid_argument("invalid registry: " + errors.front());
    }
    const auto rules = cfg.rules ? load_rules(*cfg.rules) : default_synthetic_rules();
    const CompiledRules compiled(rules, registry);
    auto v = batch_extract(docs, compiled);
    save_vectors(artifact("vectors.jsonl"), v);
    return v;
  });

  const InterpretationKB kb = stage("seq", [&] {
    const ElementRegistry registry = cfg.registry ? load_registry(*cfg.registry) : canonical_registry();
    return cfg.kb ? load_kb(*cfg.kb, registry) : default_synthetic_kb(registry);
  });
  const auto seqs = stage("seq", [&] {
    std::vector<LegalSequence> s;
    for (const auto& v : vectors) s.push_back(generate_sequence(v.id, v.elements, kb));
    save_sequences(artifact("sequences.jsonl"), s);
    return s;
  });

  const DatasetSplit split = stage("split", [&] {
    auto s = split_corpus(docs, cfg.split_seed);
    save_split(artifact("split.json"), s);
    return s;
  });

  const PreparedCorpus prepared = stage("train", [&] {
    return prepare_corpus(docs, interpretation_channel(seqs), split.train, cfg.train.max_len,
                          cfg.train.min_freq);
  });
  stage("train", [&] { prepared.vocab.save(artifact("vocab.tsv")); });

  // Task 1 models are shared by the two cascades within a run.
  std::vector<std::optional<TrainResult>> stage1(cfg.train.runs);
  for (FrameworkKind kind : cfg.frameworks) {
    const std::string name(framework_name(kind));
    std::vector<TrainedFramework> runs = stage("train", [&] {
      std::vector<TrainedFramework> out;
      for (std::size_t r = 0; r < cfg.train.runs; ++r) {
        TrainConfig c = cfg.train;
        c.seed = cfg.train.seed + r;
        if (kind != FrameworkKind::MtDt && !stage1[r]) stage1[r] = train_stage1(prepared, split, c);
        out.push_back(train_framework(kind, prepared, split, c,
                                      kind == FrameworkKind::MtDt ? nullptr : &*stage1[r]));
        const std::string run_dir = "models/" + name + "/run" + std::to_string(r);
        save_framework(out_dir / run_dir, out.back());
        result.artifacts.push_back(out_dir / run_dir);
        for (std::size_t s = 0; s < out.back().logs.size(); ++s) {
          write_log(artifact("train_log_" + name + "_run" + std::to_string(r) + "_stage" +
                             std::to_string(s) + ".jsonl"),
                    out.back().logs[s]);
        }
      }
      return out;
    });
    stage("eval", [&] {
      FrameworkReport rep = averaged_eval(runs, prepared, split.test);
      FrameworkEvaluation first = evaluate_framework(runs.front(), prepared, split.test, cfg.override_meta);
      save_predictions(artifact("predictions_" + name + ".jsonl"), first.predictions);
      result.reports.push_back(std::move(rep));
    });
  }

  stage("eval", [&] {
    result.comparison = format_comparison(result.reports);
    write_text(artifact("comparison.md"), result.comparison);
    ordered_json report = ordered_json::array();
    for (const auto& r : result.reports) {
      ordered_json acc = ordered_json::array();
      for (const auto& a : r.accounting) {
        acc.push_back({{"stage1_false_negatives", a.stage1_false_negatives},
                       {"task2_false_negatives", a.task2_false_negatives},
                       {"stage1_false_negatives_eligible", a.stage1_false_negatives_eligible},
                       {"holds", a.holds()}});
      }
      report.push_back({{"framework", framework_name(r.kind)},
                        {"task1", report_json(r.task1)},
                        {"task2", report_json(r.task2)},
                        {"task2_unmasked", report_json(r.task2_raw)},
                        {"cascade_accounting", acc}});
    }
    write_text(artifact("report.json"), report.dump(2) + "\n");
  });

  if (cfg.sweep) {
    stage("sweep", [&] {
      result.sweep = lambda_sweep(cfg.sweep_grid, prepared, split, cfg.train);
      write_text(artifact("sweep.tsv"), format_sweep(*result.sweep));
    });
  }
  if (cfg.ablation) {
    stage("ablation", [&] {
      std::ostringstream tsv;
      tsv << "variant\tacc\tmp\tmr\tf1\n";
      for (auto v : {AblationVariant::A, AblationVariant::B, AblationVariant::C}) {
        result.ablations.push_back(run_ablation(v, docs, vectors, kb, split, cfg.train));
        const Metrics& m = result.ablations.back().task2.mean;
        tsv << "ABC"[static_cast<int>(v)] << '\t' << percent(m.accuracy) << '\t'
            << percent(m.macro_precision) << '\t' << percent(m.macro_recall) << '\t'
            << percent(m.macro_f1) << '\n';
      }
      const double delta = result.ablations[2].task2.mean.accuracy - result.ablations[0].task2.mean.accuracy;
      tsv << "# C - A accuracy delta: " << percent(delta) << "\n";
      write_text(artifact("ablation.tsv"), tsv.str());
    });
  }

  RunManifest m;
  m.command = "e2e";
  m.seed = cfg.train.seed;
  m.config = {{"n_docs", std::to_string(cfg.synth.n_docs)},
              {"positive_rate", std::to_string(cfg.synth.positive_rate_target)},
              {"noise", std::to_string(cfg.synth.label_noise)},
              {"batch", std::to_string(cfg.train.batch_size)},
              {"epochs", std::to_string(cfg.train.epochs)},
              {"lambda", std::to_string(cfg.train.lambda)},
              {"runs", std::to_string(cfg.train.runs)},
              {"d", std::to_string(cfg.train.dim)},
              {"h", std::to_string(cfg.train.hidden)},
              {"learning_rate", std::to_string(cfg.train.learning_rate)},
              {"dropout", std::to_string(cfg.train.dropout)},
              {"max_len", std::to_string(cfg.train.max_len)}};
  if (cfg.corpus) m.inputs.push_back(cfg.corpus->string());
  for (const auto* p : {&cfg.registry, &cfg.rules, &cfg.kb}) {
    if (*p) m.inputs.push_back((*p)->string());
  }
  for (const auto& a : result.artifacts) m.outputs.push_back(std::filesystem::relative(a, out_dir).string());
  m.corpus_hash = sha256_file(corpus_path);
  m.isa = std::string(kernels::isa_name(kernels::active().isa));
  write_manifest(out_dir / "manifest.json", m);
  return result;
}

}  // namespace probation
