#include <cstdio>
#include <fstream>
#include <map>

#include "probation/frameworks.hpp"

namespace probation {

namespace {

constexpr const char* kMagic = "PROBATION-CHECKPOINT";
constexpr int kVersion = 1;

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number " + s);
  return x;
}

}  // namespace

void save_framework(const std::filesystem::path& dir, const TrainedFramework& fw) {
  if (!fw.trained()) throw std::logic_error("refusing to save an untrained framework");
  std::filesystem::create_directories(dir);
  fw.vocab.save(dir / "vocab.tsv");
  std::ofstream out(dir / "model.ckpt");
  if (!out) throw std::runtime_error("cannot write checkpoint in " + dir.string());
  const TrainConfig& c = fw.cfg;
  out << kMagic << ' ' << kVersion << '\n'
      << "framework " << framework_name(fw.kind) << '\n'
      << "d " << c.dim << '\n'
      << "h " << c.hidden << '\n'
      << "vocab " << fw.vocab.size() << '\n'
      << "lambda " << hex(c.lambda) << '\n'
      << "seed " << c.seed << '\n'
      << "max_len " << c.max_len << '\n'
      << "dropout " << hex(c.dropout) << '\n'
      << "batch " << c.batch_size << '\n'
      << "epochs " << c.epochs << '\n'
      << "runs " << c.runs << '\n'
      << "learning_rate " << hex(c.learning_rate) << '\n'
      << "shared_embedding " << (c.shared_embedding ? 1 : 0) << '\n'
      << "min_freq " << c.min_freq << '\n'
      << "init_scale " << hex(c.init_scale) << '\n'
      << "stages " << fw.stages.size() << '\n';
  for (const auto& net : fw.stages) write_network(out, net);
}

TrainedFramework load_framework(const std::filesystem::path& dir) {
  TrainedFramework fw;
  fw.vocab = Vocabulary::load(dir / "vocab.tsv");
  std::ifstream in(dir / "model.ckpt");
  if (!in) throw std::runtime_error("cannot open checkpoint in " + dir.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic) throw std::runtime_error("not a checkpoint file: " + (dir / "model.ckpt").string());
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, std::string> header;
  std::string key, value;
  while (in >> key >> value) {
    header[key] = value;
    if (key == "stages") break;
  }
  auto get = [&](const char* k) {
    auto it = header.find(k);
    if (it == header.end()) throw std::runtime_error(std::string("checkpoint header lacks ") + k);
    return it->second;
  };
  fw.kind = parse_framework(get("framework"));
  TrainConfig& c = fw.cfg;
  c.dim = std::stoul(get("d"));
  c.hidden = std::stoul(get("h"));
  c.lambda = parse_double(get("lambda"));
  c.seed = std::stoull(get("seed"));
  c.max_len = std::stoul(get("max_len"));
  c.dropout = parse_double(get("dropout"));
  c.batch_size = std::stoul(get("batch"));
  c.epochs = std::stoul(get("epochs"));
  c.runs = std::stoul(get("runs"));
  c.learning_rate = parse_double(get("learning_rate"));
  c.shared_embedding = get("shared_embedding") == "1";
  c.min_freq = std::stoul(get("min_freq"));
  c.init_scale = parse_double(get("init_scale"));
  if (std::stoul(get("vocab")) != fw.vocab.size()) {
    throw std::runtime_error("checkpoint vocabulary size does not match vocab.tsv");
  }
  const std::size_t stages = std::stoul(get("stages"));
  for (std::size_t s = 0; s < stages; ++s) fw.stages.push_back(read_network(in));
  if (!fw.trained()) throw std::runtime_error("checkpoint has the wrong number of stages");
  for (const auto& net : fw.stages) {
    for (std::size_t b = 0; b < net.branches.size(); ++b) {
      if (net.embedding(b).rows != fw.vocab.size()) {
        throw std::runtime_error("checkpoint embedding rows do not match the vocabulary");
      }
    }
  }
  return fw;
}

}  // namespace probation
