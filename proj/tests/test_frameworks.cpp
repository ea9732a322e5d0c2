#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"

using namespace probation;
using probation::testing::make_pipeline;
using probation::testing::quick_config;

namespace {

// A branch whose output ignores its input: zero weights, biases log(p).
void force_probs(Network& net, std::size_t branch, ProbPair p) {
  ClassifierParams& h = net.branches[branch].head;
  for (Tensor* t : {&h.hidden, &h.hidden_bias, &h.output}) t->zero();
  h.output_bias.data = {std::log(p[0]), std::log(p[1])};
}

Network constant_single(std::size_t vocab, ProbPair p) {
  Network n = make_single_task({vocab, 4, 3, 0.3, 0.05}, 1);
  force_probs(n, 0, p);
  return n;
}

Network constant_joint(std::size_t vocab, ProbPair aux, ProbPair main) {
  Network n = make_joint({vocab, 4, 3, 0.3, 0.05}, 1);
  force_probs(n, 0, aux);
  force_probs(n, 1, main);
  return n;
}

PreparedDoc tiny_doc(std::optional<DefendantMeta> meta = std::nullopt) {
  std::vector<JudgmentDocument> docs(1);
  docs[0].id = "d";
  docs[0].fact = "A B";
  docs[0].meta = meta;
  ChannelTexts q{{"d", "C"}};
  std::vector<std::string> ids{"d"};
  return prepare_corpus(docs, q, ids, 16).docs[0];
}

}  // namespace

TEST_CASE("framework names") {
  for (auto k : {FrameworkKind::TsLe, FrameworkKind::TsDt, FrameworkKind::MtDt}) {
    CHECK(parse_framework(framework_name(k)) == k);
  }
  CHECK(framework_name(FrameworkKind::TsLe) == "ts-le");
  CHECK_THROWS(parse_framework("ts-xx"));
  CHECK(parse_variant("A") == AblationVariant::A);
  CHECK_THROWS(parse_variant("D"));
}

TEST_CASE("cascade gate") {
  const PreparedDoc doc = tiny_doc();
  const Network reject = constant_single(8, {0.8, 0.2}), accept = constant_single(8, {0.1, 0.9});
  const Network grant = constant_single(8, {0.3, 0.7});
  for (auto run : {&run_ts_le, &run_ts_dt}) {
    const PipelinePrediction no = run(doc, reject, grant);
    CHECK(no.y_aux_hat == 0);
    CHECK(no.y_main_hat == 0);
    CHECK_FALSE(no.main_prob.has_value());
    const PipelinePrediction yes = run(doc, accept, grant);
    CHECK(yes.y_aux_hat == 1);
    CHECK(yes.y_main_hat == 1);
    REQUIRE(yes.main_prob.has_value());
    CHECK((*yes.main_prob)[1] == doctest::Approx(0.7));
  }
  CHECK_THROWS(run_ts_le(doc, Network{}, grant));
}

TEST_CASE("degenerate Q") {
  std::vector<JudgmentDocument> docs(1);
  docs[0].id = "d";
  docs[0].fact = "A B";
  std::vector<std::string> ids{"d"};
  const PreparedCorpus pc = prepare_corpus(docs, ChannelTexts{}, ids, 16);
  const PreparedDoc& d = pc.docs[0];
  CHECK(d.joint.length == 3);
  CHECK(d.joint.ids[2] == Vocabulary::kSep);
  CHECK(d.sequence.length == 1);
  const PipelinePrediction p = run_ts_dt(d, constant_single(pc.vocab.size(), {0.1, 0.9}),
                                         constant_single(pc.vocab.size(), {0.6, 0.4}));
  CHECK(p.main_prob.has_value());
  CHECK(p.y_main_hat == 0);
}

TEST_CASE("mt-dt masking") {
  const PreparedDoc doc = tiny_doc();
  const PipelinePrediction p = run_mt_dt(doc, constant_joint(8, {0.9, 0.1}, {0.2, 0.8}));
  CHECK(p.main_prob.has_value());
  CHECK(p.y_aux_hat == 0);
  CHECK(p.y_main_raw == 1);
  CHECK(p.y_main_hat == 0);
  CHECK(p.masked);
  const PipelinePrediction q = run_mt_dt(doc, constant_joint(8, {0.1, 0.9}, {0.2, 0.8}));
  CHECK(q.y_main_hat == 1);
  CHECK_FALSE(q.masked);
  CHECK_THROWS(run_mt_dt(doc, constant_single(8, {0.5, 0.5})));
}

TEST_CASE("mandatory override") {
  auto pred = [](int aux, int main) {
    PipelinePrediction p;
    p.y_aux_hat = aux;
    p.y_main_hat = main;
    return p;
  };
  const DefendantMeta minor{16, false, 12, false}, adult{40, false, 12, false};
  const DefendantMeta elder{76, false, 12, false}, pregnant{40, true, 12, false};

  const auto a = apply_mandatory_override(pred(1, 0), minor);
  CHECK(a.y_main_hat == 1);
  CHECK(a.override_applied);
  CHECK_FALSE(apply_mandatory_override(pred(1, 0), adult).override_applied);
  CHECK(apply_mandatory_override(pred(1, 0), adult).y_main_hat == 0);
  CHECK(apply_mandatory_override(pred(0, 0), minor).y_main_hat == 0);
  CHECK(apply_mandatory_override(pred(1, 0), elder).override_applied);
  CHECK(apply_mandatory_override(pred(1, 0), pregnant).override_applied);
  CHECK_FALSE(apply_mandatory_override(pred(1, 0), std::nullopt).override_applied);
  // Boundaries: 18 and 75 are not covered.
  CHECK_FALSE(apply_mandatory_override(pred(1, 0), DefendantMeta{18, false, 1, false}).override_applied);
  CHECK_FALSE(apply_mandatory_override(pred(1, 0), DefendantMeta{75, false, 1, false}).override_applied);
}

TEST_CASE("element value tokens") {
  ElementVector v;
  v.set(2, 1);
  v.set(33, 5);
  const std::string s = element_value_tokens(v);
  CHECK(s.rfind("PLE01_0 PLE02_1 PLE03_0", 0) == 0);
  CHECK(s.substr(s.size() - 7) == "PLE33_5");
  CHECK(split_whitespace(s).size() == 33);
}

TEST_CASE("trained frameworks on a small planted corpus") {
  const auto p = make_pipeline(400, 3);
  const TrainConfig cfg = quick_config(5);
  const TrainResult s1 = train_stage1(p.prepared, p.split, cfg);
  const TrainedFramework le = train_framework(FrameworkKind::TsLe, p.prepared, p.split, cfg, &s1);
  const TrainedFramework dt = train_framework(FrameworkKind::TsDt, p.prepared, p.split, cfg, &s1);
  const TrainedFramework mt = train_framework(FrameworkKind::MtDt, p.prepared, p.split, cfg);
  CHECK(le.trained());
  CHECK(mt.trained());
  CHECK(mt.stages.size() == 1);

  for (const PreparedDoc* d : p.prepared.select(p.split.test)) {
    const auto a = predict(le, *d), b = predict(dt, *d), c = predict(mt, *d);
    CHECK(a.y_aux_hat == b.y_aux_hat);
    CHECK(a.y_main_hat <= a.y_aux_hat);
    CHECK(b.y_main_hat <= b.y_aux_hat);
    CHECK(c.y_main_hat <= c.y_aux_hat);
    CHECK(c.main_prob.has_value());
  }

  SUBCASE("checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "probation_fw_test";
    save_framework(dir, dt);
    const TrainedFramework back = load_framework(dir);
    CHECK(back.kind == FrameworkKind::TsDt);
    CHECK(back.vocab == dt.vocab);
    CHECK(back.cfg.learning_rate == dt.cfg.learning_rate);
    for (const PreparedDoc* d : p.prepared.select(p.split.test)) {
      const auto x = predict(dt, *d), y = predict(back, *d);
      CHECK(x.aux_prob == y.aux_prob);
      CHECK(x.main_prob == y.main_prob);
    }
    std::filesystem::remove_all(dir);
  }

  SUBCASE("predictions file") {
    const FrameworkEvaluation ev = evaluate_framework(mt, p.prepared, p.split.test, true);
    const auto path = std::filesystem::temp_directory_path() / "probation_preds_test.jsonl";
    save_predictions(path, ev.predictions);
    const auto back = load_predictions(path);
    REQUIRE(back.size() == ev.predictions.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].doc_id == ev.predictions[i].doc_id);
      CHECK(back[i].y_main_hat == ev.predictions[i].y_main_hat);
      CHECK(back[i].aux_prob == ev.predictions[i].aux_prob);
      CHECK(back[i].override_applied == ev.predictions[i].override_applied);
      CHECK(back[i].masked == ev.predictions[i].masked);
    }
    std::filesystem::remove(path);
  }

  SUBCASE("attribution") {
    const PreparedDoc& d = p.prepared.at(p.split.test.front());
    const auto rows = export_attribution(d, mt);
    CHECK(rows.size() == d.fact.length + d.joint.length);
    double aux = 0.0, main = 0.0;
    for (const auto& r : rows) (r.encoder == "aux" ? aux : main) += r.weight;
    CHECK(aux == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(main == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(export_attribution(d, le).back().encoder == "stage2");
    CHECK_THROWS(export_attribution(d, TrainedFramework{}));
  }

  SUBCASE("cascade accounting") {
    const auto docs = p.prepared.select(p.split.test);
    for (const auto* fw : {&le, &dt}) {
      std::vector<PipelinePrediction> preds;
      for (const auto* d : docs) preds.push_back(predict(*fw, *d));
      const CascadeAccounting acc = cascade_accounting(preds, docs);
      CHECK(acc.holds());
    }
  }
}

TEST_CASE("cascade accounting counts") {
  // gold (aux, main) and predicted (aux, main) per document.
  const int rows[][4] = {{1, 1, 0, 0}, {1, 1, 1, 0}, {1, 0, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 1, 1}};
  std::vector<PreparedDoc> docs(6);
  std::vector<PipelinePrediction> preds(6);
  std::vector<const PreparedDoc*> ptrs;
  for (std::size_t i = 0; i < 6; ++i) {
    docs[i].gold_aux = rows[i][0];
    docs[i].gold_main = rows[i][1];
    preds[i].y_aux_hat = rows[i][2];
    preds[i].y_main_hat = rows[i][3];
    ptrs.push_back(&docs[i]);
  }
  const CascadeAccounting acc = cascade_accounting(preds, ptrs);
  CHECK(acc.stage1_false_negatives == 2);
  CHECK(acc.task2_false_negatives == 2);
  CHECK(acc.stage1_false_negatives_eligible == 1);
  CHECK(acc.holds());
  CHECK_FALSE(CascadeAccounting{0, 3, 1}.holds());
  CHECK_FALSE(CascadeAccounting{3, 0, 1}.holds());
  preds.pop_back();
  CHECK_THROWS(cascade_accounting(preds, ptrs));
}

TEST_CASE("training loss decreases on the planted corpus") {
  const auto p = make_pipeline(600, 8);
  const TrainedFramework mt = train_framework(FrameworkKind::MtDt, p.prepared, p.split, quick_config(2, 6));
  REQUIRE(mt.logs.size() == 1);
  REQUIRE(mt.logs[0].size() == 6);
  CHECK(mt.logs[0].back().total < mt.logs[0].front().total);
}
