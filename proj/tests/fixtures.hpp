#pragma once
// Small planted-corpus pipelines shared by the framework and experiment tests.

#include "probation/experiment.hpp"

namespace probation::testing {

struct Pipeline {
  SyntheticCorpus corpus;
  std::vector<ExtractedVector> vectors;
  InterpretationKB kb;
  std::vector<LegalSequence> sequences;
  DatasetSplit split;
  PreparedCorpus prepared;
};

inline Pipeline make_pipeline(std::size_t n, std::uint64_t seed, std::size_t max_len = kDefaultMaxLen) {
  Pipeline p;
  SyntheticConfig cfg = default_synthetic_config();
  cfg.n_docs = n;
  cfg.seed = seed;
  cfg.rate_tolerance = 0.1;  // small corpora sample the rate coarsely
  p.corpus = generate_synthetic_corpus(cfg);
  const ElementRegistry registry = canonical_registry();
  p.vectors = batch_extract(p.corpus.docs, compile_rules(default_synthetic_rules(), registry));
  p.kb = default_synthetic_kb(registry);
  for (const auto& v : p.vectors) p.sequences.push_back(generate_sequence(v.id, v.elements, p.kb));
  p.split = split_corpus(p.corpus.docs, seed);
  p.prepared = prepare_corpus(p.corpus.docs, interpretation_channel(p.sequences), p.split.train, max_len);
  return p;
}

inline TrainConfig quick_config(std::uint64_t seed, std::size_t epochs = 2) {
  TrainConfig c;
  c.seed = seed;
  c.epochs = epochs;
  c.dim = 16;
  c.hidden = 8;
  return c;
}

}  // namespace probation::testing
