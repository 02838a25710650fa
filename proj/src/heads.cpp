#include "relabel/heads.hpp"

namespace relabel::heads {

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "pooled") return HeadKind::pooled;
  if (s == "single") return HeadKind::single_attention;
  if (s == "per-label") return HeadKind::per_label_attention;
  throw data_error("unknown head kind: \"" + s + "\" (expected pooled, single or per-label)");
}

const std::string& head_kind_to_string(HeadKind k) {
  static const std::string names[] = {"pooled", "single", "per-label"};
  return names[static_cast<int>(k)];
}

}  // namespace relabel::heads
