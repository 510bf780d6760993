#include "qbm/model.hpp"

#include "qbm/forward.hpp"

namespace qbm {

Variant parse_variant(const std::string& name) {
  if (name == "base") return Variant::base;
  if (name == "base+mc") return Variant::base_mc;
  if (name == "base+br") return Variant::base_br;
  if (name == "base+br_nocov") return Variant::base_br_nocov;
  if (name == "qbm") return Variant::qbm;
  if (name == "qq") return Variant::qq;
  if (name == "bagcon") return Variant::bagcon;
  throw ConfigError("unknown variant '" + name +
                    "' (expected base, base+mc, base+br, base+br_nocov, qbm, "
                    "qq, or bagcon)");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::base: return "base";
    case Variant::base_mc: return "base+mc";
    case Variant::base_br: return "base+br";
    case Variant::base_br_nocov: return "base+br_nocov";
    case Variant::qbm: return "qbm";
    case Variant::qq: return "qq";
    case Variant::bagcon: return "bagcon";
  }
  return "?";
}

QqMode parse_qq_mode(const std::string& name) {
  if (name == "max") return QqMode::max;
  if (name == "mean") return QqMode::mean;
  if (name == "none" || name.empty()) return QqMode::none;
  throw ConfigError("unknown qq mode '" + name + "' (expected max or mean)");
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) {
      throw ConfigError(std::string("config: ") + what + " must be positive, got " +
                        std::to_string(v));
    }
  };
  positive(max_len, "max_len");
  positive(bag_capacity, "bag_capacity");
  positive(embed_dim, "embed_dim");
  positive(conv1_filters, "conv1_filters");
  positive(conv1_width, "conv1_width");
  positive(cov_hidden, "cov_hidden");
  positive(head_hidden, "head_hidden");
  positive(br_terms, "br_terms");
  if (conv1_width % 2 == 0) {
    throw ConfigError("config: conv1_width must be odd, got " +
                      std::to_string(conv1_width));
  }
  if (grid_stages.empty()) throw ConfigError("config: no grid stages");
  for (const auto& st : grid_stages) {
    positive(st.filters, "grid filters");
    positive(st.kernel, "grid kernel");
    if (st.kernel % 2 == 0) {
      throw ConfigError("config: grid kernel must be odd, got " +
                        std::to_string(st.kernel));
    }
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("config: dropout must be in [0, 1), got " +
                      std::to_string(dropout));
  }
}

}  // namespace qbm
