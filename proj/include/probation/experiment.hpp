#pragma once
// Experiment drivers: framework evaluation, multi-run averaging, the lambda
// sweep, input ablations and the end-to-end pipeline.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probation/evaluation.hpp"
#include "probation/extraction.hpp"
#include "probation/frameworks.hpp"
#include "probation/knowledge.hpp"

namespace probation {

struct FrameworkEvaluation {
  FrameworkKind kind = FrameworkKind::MtDt;
  std::vector<PipelinePrediction> predictions;
  Metrics task1;
  Metrics task2;      // final (masked) predictions
  Metrics task2_raw;  // main-head argmax before masking
  CascadeAccounting accounting;
  std::size_t n = 0;
};

FrameworkEvaluation evaluate_framework(const TrainedFramework& fw, const PreparedCorpus& corpus,
                                       std::span<const std::string> ids, bool override_meta = false);

struct FrameworkReport {
  FrameworkKind kind = FrameworkKind::MtDt;
  MetricsReport task1;
  MetricsReport task2;
  MetricsReport task2_raw;
  std::vector<CascadeAccounting> accounting;  // one per run
};

// Evaluates every checkpoint on the same documents and averages.
FrameworkReport averaged_eval(std::span<const TrainedFramework> checkpoints,
                              const PreparedCorpus& corpus, std::span<const std::string> test_ids);

// Trains cfg.runs models with seeds cfg.seed, cfg.seed + 1, ...
std::vector<TrainedFramework> train_runs(FrameworkKind kind, const PreparedCorpus& corpus,
                                         const DatasetSplit& split, const TrainConfig& cfg);

struct SweepRow {
  double lambda = 0.0;
  Metrics metrics;
  bool best = false;      // maximum test accuracy (first on ties)
  bool excluded = false;  // lambda = 0: auxiliary loss left out
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::size_t best_index = 0;
};

std::vector<double> default_lambda_grid();
SweepTable lambda_sweep(std::span<const double> grid, const PreparedCorpus& corpus,
                        const DatasetSplit& split, const TrainConfig& cfg);
// Tab-separated, header row first, values as percentages.
std::string format_sweep(const SweepTable& table);

struct AblationResult {
  AblationVariant variant = AblationVariant::C;
  MetricsReport task2;
};

AblationResult run_ablation(AblationVariant variant, std::span<const JudgmentDocument> docs,
                            std::span<const ExtractedVector> vectors, const InterpretationKB& kb,
                            const DatasetSplit& split, const TrainConfig& cfg);

ChannelTexts ablation_channel(AblationVariant variant, std::span<const ExtractedVector> vectors,
                              const InterpretationKB& kb);

// Table-shaped comparison: one row per (framework, task), percentages with
// two decimals.
std::string format_comparison(std::span<const FrameworkReport> reports);

struct EndToEndConfig {
  SyntheticConfig synth;
  std::optional<std::filesystem::path> corpus;  // use instead of synthesizing
  std::optional<std::filesystem::path> registry;
  std::optional<std::filesystem::path> rules;
  std::optional<std::filesystem::path> kb;
  std::vector<FrameworkKind> frameworks{FrameworkKind::TsLe, FrameworkKind::TsDt,
                                        FrameworkKind::MtDt};
  TrainConfig train;
  std::uint64_t split_seed = 0;
  bool override_meta = false;
  bool sweep = false;
  std::vector<double> sweep_grid = default_lambda_grid();
  bool ablation = false;
};

EndToEndConfig default_end_to_end_config(std::uint64_t seed);
// JSON object; missing keys keep the defaults of default_end_to_end_config.
EndToEndConfig load_end_to_end_config(const std::filesystem::path& path, std::uint64_t seed);

struct EndToEndResult {
  std::vector<FrameworkReport> reports;
  std::string comparison;
  std::optional<SweepTable> sweep;
  std::vector<AblationResult> ablations;
  std::vector<std::filesystem::path> artifacts;
};

// synth -> extract -> seq -> split -> train (x runs) -> eval -> reports, all
// written under out_dir.
EndToEndResult end_to_end(const EndToEndConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace probation
