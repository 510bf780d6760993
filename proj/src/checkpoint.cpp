#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "qbm/bytes.hpp"
#include "qbm/error.hpp"
#include "qbm/trainer.hpp"

namespace qbm {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'Q', 'B', 'M', '1'};

json config_to_json(const ModelConfig& cfg) {
  json stages = json::array();
  for (const auto& st : cfg.grid_stages) {
    stages.push_back({{"filters", st.filters}, {"kernel", st.kernel}});
  }
  return json{{"variant", variant_name(cfg.variant)},
              {"max_len", cfg.max_len},
              {"bag_capacity", cfg.bag_capacity},
              {"embed_dim", cfg.embed_dim},
              {"conv1_filters", cfg.conv1_filters},
              {"conv1_width", cfg.conv1_width},
              {"grid_stages", stages},
              {"cov_hidden", cfg.cov_hidden},
              {"head_hidden", cfg.head_hidden},
              {"br_terms", cfg.br_terms},
              {"dropout", cfg.dropout}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  cfg.max_len = j.at("max_len").get<int>();
  cfg.bag_capacity = j.at("bag_capacity").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.conv1_filters = j.at("conv1_filters").get<int>();
  cfg.conv1_width = j.at("conv1_width").get<int>();
  cfg.grid_stages.clear();
  for (const auto& st : j.at("grid_stages")) {
    cfg.grid_stages.push_back(
        {st.at("filters").get<int>(), st.at("kernel").get<int>()});
  }
  cfg.cov_hidden = j.at("cov_hidden").get<int>();
  cfg.head_hidden = j.at("head_hidden").get<int>();
  cfg.br_terms = j.at("br_terms").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  return cfg;
}

void append_array(std::string& out, const std::vector<float>& values) {
  for (float v : values) append_f32_le(out, v);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  const auto named = cp.params.named();
  json manifest = json::array();
  for (const auto& [name, t] : named) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}});
  }
  json header{{"config", config_to_json(cp.config)},
              {"vocab", {{"min_count", cp.vocab.min_count()},
                         {"tokens", cp.vocab.tokens()}}},
              {"epoch", cp.epoch},
              {"val_f1", cp.val_f1},
              {"seed", cp.seed},
              {"adam", {{"lr", cp.opt.lr},
                        {"beta1", cp.opt.beta1},
                        {"beta2", cp.opt.beta2},
                        {"epsilon", cp.opt.epsilon},
                        {"step", cp.opt.step_count}}},
              {"arrays", manifest}};
  const std::string header_bytes = header.dump();

  std::string blob;
  blob.append(kMagic, 4);
  append_u32_le(blob, Checkpoint::kVersion);
  append_u64_le(blob, header_bytes.size());
  blob += header_bytes;
  for (const auto& [name, t] : named) append_array(blob, t.values());
  if (cp.opt.m.size() != named.size()) {
    throw CheckpointError("checkpoint: optimizer state does not match " +
                          std::to_string(named.size()) + " parameter arrays");
  }
  for (const auto& m : cp.opt.m) append_array(blob, m);
  for (const auto& v : cp.opt.v) append_array(blob, v);
  append_u64_le(blob, fnv1a64(blob));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("checkpoint: cannot write " + tmp);
    out.write(blob.data(), std::streamsize(blob.size()));
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 24) throw CheckpointError("checkpoint: file too short");
  if (std::string_view(blob.data(), 4) != std::string_view(kMagic, 4)) {
    throw CheckpointError("checkpoint: bad magic bytes");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  const uint32_t version = read_u32_le(bytes + 4);
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("checkpoint: incompatible version " +
                          std::to_string(version) + " (expected " +
                          std::to_string(Checkpoint::kVersion) + ")");
  }
  const uint64_t stored_sum = read_u64_le(bytes + blob.size() - 8);
  const uint64_t actual_sum = fnv1a64(std::string_view(blob.data(), blob.size() - 8));
  if (stored_sum != actual_sum) {
    throw CheckpointError("checkpoint: checksum mismatch (truncated or corrupt file)");
  }
  const uint64_t header_len = read_u64_le(bytes + 8);
  if (16 + header_len + 8 > blob.size()) {
    throw CheckpointError("checkpoint: header length exceeds file size");
  }
  json header;
  try {
    header = json::parse(blob.substr(16, header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  }

  Checkpoint cp;
  cp.config = config_from_json(header.at("config"));
  cp.vocab = Vocabulary::from_tokens(
      header.at("vocab").at("tokens").get<std::vector<std::string>>(),
      header.at("vocab").at("min_count").get<int>());
  cp.epoch = header.at("epoch").get<int>();
  cp.val_f1 = header.at("val_f1").get<double>();
  cp.seed = header.at("seed").get<uint64_t>();

  cp.params = ModelParams<float>::init(cp.config, cp.vocab.size(), Rng(0));
  auto named = cp.params.named();
  const auto& manifest = header.at("arrays");
  if (manifest.size() != named.size()) {
    throw CheckpointError("checkpoint: manifest lists " +
                          std::to_string(manifest.size()) + " arrays, model has " +
                          std::to_string(named.size()));
  }
  size_t off = 16 + header_len;
  auto read_array = [&](std::vector<float>& dst) {
    const size_t need = dst.size() * 4;
    if (off + need + 8 > blob.size()) {
      throw CheckpointError("checkpoint: arrays truncated");
    }
    for (size_t i = 0; i < dst.size(); ++i) {
      dst[i] = read_f32_le(bytes + off + i * 4);
    }
    off += need;
  };
  for (size_t i = 0; i < named.size(); ++i) {
    const auto& entry = manifest.at(i);
    if (entry.at("name").get<std::string>() != named[i].first ||
        entry.at("shape").get<Shape>() != named[i].second.shape()) {
      throw CheckpointError("checkpoint: array '" + named[i].first +
                            "' does not match the stored manifest");
    }
    read_array(named[i].second.values());
  }
  cp.opt = AdamState<float>::init(cp.params.tensors(), header.at("adam").at("lr").get<double>());
  cp.opt.beta1 = header.at("adam").at("beta1").get<double>();
  cp.opt.beta2 = header.at("adam").at("beta2").get<double>();
  cp.opt.epsilon = header.at("adam").at("epsilon").get<double>();
  cp.opt.step_count = header.at("adam").at("step").get<long>();
  for (auto& m : cp.opt.m) read_array(m);
  for (auto& v : cp.opt.v) read_array(v);
  if (off + 8 != blob.size()) {
    throw CheckpointError("checkpoint: trailing bytes after arrays");
  }
  return cp;
}

}  // namespace qbm
