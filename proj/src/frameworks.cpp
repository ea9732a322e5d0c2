#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "probation/frameworks.hpp"

namespace probation {

using nlohmann::json;

std::string_view framework_name(FrameworkKind kind) {
  switch (kind) {
    case FrameworkKind::TsLe: return "ts-le";
    case FrameworkKind::TsDt: return "ts-dt";
    case FrameworkKind::MtDt: return "mt-dt";
  }
  return "?";
}

FrameworkKind parse_framework(std::string_view name) {
  if (name == "ts-le") return FrameworkKind::TsLe;
  if (name == "ts-dt") return FrameworkKind::TsDt;
  if (name == "mt-dt") return FrameworkKind::MtDt;
  throw std::invalid_argument("unknown framework '" + std::string(name) +
                              "' (expected ts-le|ts-dt|mt-dt)");
}

AblationVariant parse_variant(std::string_view name) {
  if (name == "A" || name == "a") return AblationVariant::A;
  if (name == "B" || name == "b") return AblationVariant::B;
  if (name == "C" || name == "c") return AblationVariant::C;
  throw std::invalid_argument("invalid ablation variant '" + std::string(name) + "' (expected A|B|C)");
}

std::string element_value_tokens(const ElementVector& v) {
  std::string out;
  char buf[16];
  for (int k = 1; k <= kNumElements; ++k) {
    std::snprintf(buf, sizeof buf, "PLE%02d_%d", k, v[k]);
    if (k > 1) out += ' ';
    out += buf;
  }
  return out;
}

// --- preparation -------------------------------------------------------------

const PreparedDoc& PreparedCorpus::at(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) throw std::out_of_range("unknown document id '" + id + "'");
  return docs[it->second];
}

std::vector<const PreparedDoc*> PreparedCorpus::select(std::span<const std::string> ids) const {
  std::vector<const PreparedDoc*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(&at(id));
  return out;
}

ChannelTexts interpretation_channel(std::span<const LegalSequence> seqs) {
  ChannelTexts out;
  for (const auto& s : seqs) out[s.doc_id] = s.text;
  return out;
}

PreparedCorpus prepare_corpus(std::span<const JudgmentDocument> docs, const ChannelTexts& channel,
                              Vocabulary vocab, std::size_t max_len) {
  PreparedCorpus pc;
  pc.vocab = std::move(vocab);
  pc.max_len = max_len;
  pc.docs.reserve(docs.size());
  for (const auto& doc : docs) {
    if (doc.fact.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw std::invalid_argument("document '" + doc.id + "' has an empty fact description");
    }
    PreparedDoc pd;
    pd.id = doc.id;
    pd.fact = tokenize(doc.fact, pc.vocab, max_len);
    auto it = channel.find(doc.id);
    const TokenSequence q = tokenize(it == channel.end() ? std::string_view{} : it->second,
                                     pc.vocab, max_len);
    pd.sequence = concat_inputs(TokenSequence{}, q, max_len);
    pd.joint = concat_inputs(pd.fact, q, max_len);
    pd.gold_aux = doc.gold_aux;
    pd.gold_main = doc.gold_main;
    pd.meta = doc.meta;
    pc.index.emplace(pd.id, pc.docs.size());
    pc.docs.push_back(std::move(pd));
  }
  return pc;
}

PreparedCorpus prepare_corpus(std::span<const JudgmentDocument> docs, const ChannelTexts& channel,
                              std::span<const std::string> vocab_ids, std::size_t max_len,
                              std::size_t min_freq) {
  std::unordered_map<std::string, const JudgmentDocument*> by_id;
  for (const auto& d : docs) by_id.emplace(d.id, &d);
  std::vector<std::string_view> texts;
  for (const auto& id : vocab_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::out_of_range("split id '" + id + "' not in corpus");
    texts.push_back(it->second->fact);
    if (auto c = channel.find(id); c != channel.end()) texts.push_back(c->second);
  }
  if (texts.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty training split");
  return prepare_corpus(docs, channel, build_vocab_from_texts(texts, min_freq), max_len);
}

// --- training ----------------------------------------------------------------

bool TrainedFramework::trained() const {
  return stages.size() == (kind == FrameworkKind::MtDt ? 1u : 2u);
}

namespace {

enum class Stage { Task1, Task2OnQ, Task2OnJoint, Joint };

std::vector<Example> make_examples(const PreparedCorpus& pc, std::span<const std::string> ids,
                                   Stage stage) {
  std::vector<Example> out;
  for (const PreparedDoc* d : pc.select(ids)) {
    switch (stage) {
      case Stage::Task1:
        if (d->gold_aux) out.push_back({{&d->fact}, {*d->gold_aux}});
        break;
      case Stage::Task2OnQ:
      case Stage::Task2OnJoint:
        // Clean stage-2 population: documents that truly meet the prerequisite.
        if (d->gold_aux == 1 && d->gold_main) {
          out.push_back({{stage == Stage::Task2OnQ ? &d->sequence : &d->joint}, {*d->gold_main}});
        }
        break;
      case Stage::Joint:
        if (d->gold_aux && d->gold_main) {
          out.push_back({{&d->fact, &d->joint}, {*d->gold_aux, *d->gold_main}});
        }
        break;
    }
  }
  return out;
}

NetworkShape shape_of(const PreparedCorpus& pc, const TrainConfig& cfg) {
  NetworkShape s;
  s.vocab_size = pc.vocab.size();
  s.dim = cfg.dim;
  s.hidden = cfg.hidden;
  s.dropout = cfg.dropout;
  s.init_scale = cfg.init_scale;
  return s;
}

TrainResult train_single(const PreparedCorpus& pc, const DatasetSplit& split,
                         const TrainConfig& cfg, Stage stage, std::uint64_t tag,
                         const char* name) {
  const auto train = make_examples(pc, split.train, stage);
  const auto val = make_examples(pc, split.val, stage);
  if (train.empty()) {
    throw std::invalid_argument(std::string("no labeled training documents for ") + name);
  }
  Network init = make_single_task(shape_of(pc, cfg), derive_seed(cfg.seed, tag), name);
  return train_network(std::move(init), train, val, cfg, derive_seed(cfg.seed, tag, 0x7A1));
}

}  // namespace

TrainResult train_stage1(const PreparedCorpus& corpus, const DatasetSplit& split,
                         const TrainConfig& cfg) {
  return train_single(corpus, split, cfg, Stage::Task1, 1, "stage1");
}

TrainedFramework train_framework(FrameworkKind kind, const PreparedCorpus& corpus,
                                 const DatasetSplit& split, const TrainConfig& cfg,
                                 const TrainResult* stage1) {
  validate(cfg);
  TrainedFramework fw;
  fw.kind = kind;
  fw.cfg = cfg;
  fw.vocab = corpus.vocab;
  if (kind == FrameworkKind::MtDt) {
    const auto train = make_examples(corpus, split.train, Stage::Joint);
    const auto val = make_examples(corpus, split.val, Stage::Joint);
    if (train.empty()) throw std::invalid_argument("no fully labeled training documents for MT-DT");
    Network init = make_joint(shape_of(corpus, cfg), derive_seed(cfg.seed, 3), cfg.shared_embedding);
    TrainResult r = train_network(std::move(init), train, val, cfg, derive_seed(cfg.seed, 3, 0x7A1));
    fw.stages.push_back(std::move(r.model));
    fw.logs.push_back(std::move(r.log));
    return fw;
  }
  TrainResult s1 = stage1 ? *stage1 : train_stage1(corpus, split, cfg);
  TrainResult s2 = train_single(corpus, split, cfg,
                                kind == FrameworkKind::TsLe ? Stage::Task2OnQ : Stage::Task2OnJoint,
                                2, "stage2");
  fw.stages.push_back(std::move(s1.model));
  fw.stages.push_back(std::move(s2.model));
  fw.logs.push_back(std::move(s1.log));
  fw.logs.push_back(std::move(s2.log));
  return fw;
}

// --- prediction --------------------------------------------------------------

namespace {

int argmax(const ProbPair& p) { return p[1] > p[0] ? 1 : 0; }

void require_trained(const Network& net, const char* what) {
  if (net.branches.empty()) throw std::logic_error(std::string(what) + " is not trained");
}

PipelinePrediction run_cascade(const PreparedDoc& doc, const Network& stage1,
                               const Network& stage2, const TokenSequence& task2_input,
                               FrameworkKind kind) {
  require_trained(stage1, "stage 1");
  require_trained(stage2, "stage 2");
  PipelinePrediction p;
  p.doc_id = doc.id;
  p.framework = kind;
  p.aux_prob = infer_branch(stage1, stage1.main_branch(), doc.fact).probs;
  p.y_aux_hat = argmax(p.aux_prob);
  if (p.y_aux_hat == 1) {
    p.main_prob = infer_branch(stage2, stage2.main_branch(), task2_input).probs;
    p.y_main_hat = argmax(*p.main_prob);
  }
  p.y_main_raw = p.y_main_hat;
  return p;
}

}  // namespace

PipelinePrediction run_ts_le(const PreparedDoc& doc, const Network& stage1, const Network& stage2) {
  return run_cascade(doc, stage1, stage2, doc.sequence, FrameworkKind::TsLe);
}

PipelinePrediction run_ts_dt(const PreparedDoc& doc, const Network& stage1, const Network& stage2) {
  return run_cascade(doc, stage1, stage2, doc.joint, FrameworkKind::TsDt);
}

PipelinePrediction run_mt_dt(const PreparedDoc& doc, const Network& joint) {
  require_trained(joint, "joint model");
  if (!joint.joint()) throw std::invalid_argument("MT-DT needs a two-branch network");
  PipelinePrediction p;
  p.doc_id = doc.id;
  p.framework = FrameworkKind::MtDt;
  p.aux_prob = infer_branch(joint, 0, doc.fact).probs;
  p.main_prob = infer_branch(joint, 1, doc.joint).probs;
  p.y_aux_hat = argmax(p.aux_prob);
  p.y_main_raw = argmax(*p.main_prob);
  p.y_main_hat = p.y_main_raw;
  if (p.y_aux_hat == 0 && p.y_main_raw == 1) {
    p.y_main_hat = 0;
    p.masked = true;
  }
  return p;
}

PipelinePrediction predict(const TrainedFramework& fw, const PreparedDoc& doc) {
  if (!fw.trained()) throw std::logic_error("framework is not trained");
  switch (fw.kind) {
    case FrameworkKind::TsLe: return run_ts_le(doc, fw.stages[0], fw.stages[1]);
    case FrameworkKind::TsDt: return run_ts_dt(doc, fw.stages[0], fw.stages[1]);
    case FrameworkKind::MtDt: return run_mt_dt(doc, fw.stages[0]);
  }
  throw std::logic_error("unknown framework");
}

PipelinePrediction apply_mandatory_override(PipelinePrediction pred,
                                            const std::optional<DefendantMeta>& meta) {
  if (!meta || pred.y_aux_hat != 1) return pred;
  if (meta->age_years < 18 || meta->pregnant || meta->age_years > 75) {
    pred.y_main_hat = 1;
    pred.override_applied = true;
  }
  return pred;
}

CascadeAccounting cascade_accounting(std::span<const PipelinePrediction> preds,
                                     std::span<const PreparedDoc* const> docs) {
  if (preds.size() != docs.size()) throw std::invalid_argument("prediction/document count mismatch");
  CascadeAccounting acc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    acc.stage1_false_negatives += docs[i]->gold_aux == 1 && preds[i].y_aux_hat == 0;
    if (docs[i]->gold_main != 1) continue;
    acc.task2_false_negatives += preds[i].y_main_hat == 0;
    acc.stage1_false_negatives_eligible += preds[i].y_aux_hat == 0;
  }
  return acc;
}

void save_predictions(const std::filesystem::path& path,
                      std::span<const PipelinePrediction> preds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions " + path.string());
  for (const auto& p : preds) {
    json j{{"doc_id", p.doc_id},
           {"framework", framework_name(p.framework)},
           {"y_aux_hat", p.y_aux_hat},
           {"y_main_hat", p.y_main_hat},
           {"y_main_raw", p.y_main_raw},
           {"probs", {{"aux", p.aux_prob}, {"main", p.main_prob ? json(*p.main_prob) : json(nullptr)}}},
           {"override_applied", p.override_applied},
           {"masked_flag", p.masked}};
    out << j.dump() << '\n';
  }
}

std::vector<PipelinePrediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions " + path.string());
  std::vector<PipelinePrediction> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    PipelinePrediction p;
    p.doc_id = j.at("doc_id").get<std::string>();
    p.framework = parse_framework(j.at("framework").get<std::string>());
    p.y_aux_hat = j.at("y_aux_hat").get<int>();
    p.y_main_hat = j.at("y_main_hat").get<int>();
    p.y_main_raw = j.value("y_main_raw", p.y_main_hat);
    p.aux_prob = j.at("probs").at("aux").get<ProbPair>();
    if (!j["probs"]["main"].is_null()) p.main_prob = j["probs"]["main"].get<ProbPair>();
    p.override_applied = j.value("override_applied", false);
    p.masked = j.value("masked_flag", false);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<AttributionRow> export_attribution(const PreparedDoc& doc, const TrainedFramework& fw) {
  if (!fw.trained()) throw std::logic_error("cannot export attribution from an untrained model");
  std::vector<AttributionRow> rows;
  auto emit = [&](const Network& net, std::size_t branch, const TokenSequence& input,
                  const std::string& encoder) {
    const BranchOutput out = infer_branch(net, branch, input);
    for (std::size_t t = 0; t < input.length; ++t) {
      rows.push_back({doc.id, encoder, input.surface[t], out.alpha[t]});
    }
  };
  if (fw.kind == FrameworkKind::MtDt) {
    emit(fw.stages[0], 0, doc.fact, "aux");
    emit(fw.stages[0], 1, doc.joint, "main");
  } else {
    emit(fw.stages[0], 0, doc.fact, "stage1");
    emit(fw.stages[1], 0, fw.kind == FrameworkKind::TsLe ? doc.sequence : doc.joint, "stage2");
  }
  return rows;
}

}  // namespace probation
