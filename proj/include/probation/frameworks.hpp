#pragma once
// The three prediction frameworks, the mandatory-probation override and
// framework checkpoints.
//
//   TS-LE  cascade; Task 1 on F, Task 2 on Q for documents predicted eligible
//   TS-DT  cascade; Task 1 on F, Task 2 on F ⊕ Q
//   MT-DT  joint;   aux head on ENC_aux(F), main head on ENC_main(F ⊕ Q),
//          trained with L = L_main + lambda L_aux

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probation/corpus.hpp"
#include "probation/encoding.hpp"
#include "probation/model.hpp"

namespace probation {

enum class FrameworkKind { TsLe, TsDt, MtDt };

std::string_view framework_name(FrameworkKind kind);
FrameworkKind parse_framework(std::string_view name);

struct PreparedDoc {
  std::string id;
  TokenSequence fact;      // F
  TokenSequence sequence;  // SEP ⊕ Q
  TokenSequence joint;     // F ⊕ SEP ⊕ Q
  std::optional<int> gold_aux;
  std::optional<int> gold_main;
  std::optional<DefendantMeta> meta;
};

struct PreparedCorpus {
  Vocabulary vocab;
  std::size_t max_len = kDefaultMaxLen;
  std::vector<PreparedDoc> docs;
  std::unordered_map<std::string, std::size_t> index;

  const PreparedDoc& at(const std::string& id) const;
  std::vector<const PreparedDoc*> select(std::span<const std::string> ids) const;
};

// Q text per document id; documents without an entry get an empty Q.
using ChannelTexts = std::unordered_map<std::string, std::string>;

ChannelTexts interpretation_channel(std::span<const LegalSequence> seqs);

// Builds the vocabulary from the facts and Q texts of vocab_ids (the
// training split), then tokenizes every document.
PreparedCorpus prepare_corpus(std::span<const JudgmentDocument> docs, const ChannelTexts& channel,
                              std::span<const std::string> vocab_ids, std::size_t max_len,
                              std::size_t min_freq = 1);
PreparedCorpus prepare_corpus(std::span<const JudgmentDocument> docs, const ChannelTexts& channel,
                              Vocabulary vocab, std::size_t max_len);

struct TrainedFramework {
  FrameworkKind kind = FrameworkKind::MtDt;
  TrainConfig cfg;
  Vocabulary vocab;
  // MT-DT: {joint}. Cascades: {stage 1 (Task 1 on F), stage 2 (Task 2)}.
  std::vector<Network> stages;
  std::vector<std::vector<EpochLog>> logs;

  bool trained() const;
};

// stage1 lets TS-LE and TS-DT share one Task 1 model.
TrainedFramework train_framework(FrameworkKind kind, const PreparedCorpus& corpus,
                                 const DatasetSplit& split, const TrainConfig& cfg,
                                 const TrainResult* stage1 = nullptr);
TrainResult train_stage1(const PreparedCorpus& corpus, const DatasetSplit& split,
                         const TrainConfig& cfg);

struct PipelinePrediction {
  std::string doc_id;
  FrameworkKind framework = FrameworkKind::MtDt;
  int y_aux_hat = 0;
  int y_main_hat = 0;
  // Main-head argmax before any masking or override.
  int y_main_raw = 0;
  ProbPair aux_prob{};
  std::optional<ProbPair> main_prob;  // absent when a cascade stopped at Task 1
  bool override_applied = false;
  bool masked = false;  // MT-DT: main prediction zeroed because y_aux_hat = 0
};

PipelinePrediction run_ts_le(const PreparedDoc& doc, const Network& stage1, const Network& stage2);
PipelinePrediction run_ts_dt(const PreparedDoc& doc, const Network& stage1, const Network& stage2);
PipelinePrediction run_mt_dt(const PreparedDoc& doc, const Network& joint);
PipelinePrediction predict(const TrainedFramework& fw, const PreparedDoc& doc);

// Offenders under 18, pregnant, or over 75 whose sentence meets the
// prerequisite must be granted probation.
PipelinePrediction apply_mandatory_override(PipelinePrediction pred,
                                            const std::optional<DefendantMeta>& meta);

void save_predictions(const std::filesystem::path& path,
                      std::span<const PipelinePrediction> preds);
std::vector<PipelinePrediction> load_predictions(const std::filesystem::path& path);

// Stage-1 misses among probation-granted documents can never be recovered,
// so each one is both a stage-1 false negative and a Task 2 false negative.
struct CascadeAccounting {
  std::size_t stage1_false_negatives = 0;           // gold_aux = 1, predicted 0
  std::size_t task2_false_negatives = 0;            // gold_main = 1, predicted 0
  std::size_t stage1_false_negatives_eligible = 0;  // gold_main = 1, stage 1 predicted 0
  bool holds() const {
    return stage1_false_negatives >= stage1_false_negatives_eligible &&
           task2_false_negatives >= stage1_false_negatives_eligible;
  }
};

CascadeAccounting cascade_accounting(std::span<const PipelinePrediction> preds,
                                     std::span<const PreparedDoc* const> docs);

std::vector<AttributionRow> export_attribution(const PreparedDoc& doc, const TrainedFramework& fw);

// Directory with vocab.tsv and model.ckpt.
void save_framework(const std::filesystem::path& dir, const TrainedFramework& fw);
TrainedFramework load_framework(const std::filesystem::path& dir);

// Ablation inputs for the main task: A fact only, B fact + raw element
// values as 33 slot tokens, C fact + interpretation sequence.
enum class AblationVariant { A, B, C };

AblationVariant parse_variant(std::string_view name);
std::string element_value_tokens(const ElementVector& v);

}  // namespace probation
