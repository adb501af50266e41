#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tsgcn/util/error.hpp"

namespace tsgcn::nn {

/// Architecture wirings of the ablation grid. `full` is the two-stream model
/// with attention in the C-stream, max-pooling in the N-stream, and
/// normalization plus self-attention fusion.
enum class Variant {
  full,
  c_only,           // TSGCN-C
  n_only,           // TSGCN-N
  single_stream,    // TSGCN-S
  m_m,
  a_a,
  m_a,
  l_fusion,
  concat_fusion,    // TSGCN-Concatenation
  norm_fusion,      // TSGCN-Normalization
  attention_fusion  // TSGCN-Attention
};

enum class Input { coords, normals, both };

enum class Fusion {
  none,                // one stream, fed straight to the head
  concat,
  normalize,
  attention,
  normalize_attention
};

struct VariantTraits {
  bool two_stream = true;
  Input single_input = Input::coords;  // single-stream variants only
  bool c_attention = true;
  bool n_attention = false;
  bool low_level_fusion = false;
  Fusion fusion = Fusion::normalize_attention;
};

inline VariantTraits traits(Variant v) {
  VariantTraits t;
  switch (v) {
    case Variant::full: break;
    case Variant::c_only:
      t.two_stream = false;
      t.fusion = Fusion::none;
      break;
    case Variant::n_only:
      t.two_stream = false;
      t.single_input = Input::normals;
      t.c_attention = false;
      t.fusion = Fusion::none;
      break;
    case Variant::single_stream:
      t.two_stream = false;
      t.single_input = Input::both;
      t.fusion = Fusion::none;
      break;
    case Variant::m_m: t.c_attention = false; break;
    case Variant::a_a: t.n_attention = true; break;
    case Variant::m_a:
      t.c_attention = false;
      t.n_attention = true;
      break;
    case Variant::l_fusion: t.low_level_fusion = true; break;
    case Variant::concat_fusion: t.fusion = Fusion::concat; break;
    case Variant::norm_fusion: t.fusion = Fusion::normalize; break;
    case Variant::attention_fusion: t.fusion = Fusion::attention; break;
  }
  return t;
}

struct VariantName {
  std::string_view name;
  Variant variant;
};

// First entry per variant is its canonical label.
inline constexpr std::array<VariantName, 20> kVariantNames{{
    {"full", Variant::full},
    {"TSGCN", Variant::full},
    {"A+M", Variant::full},
    {"H-fusion", Variant::full},
    {"TSGCN-C", Variant::c_only},
    {"C-only", Variant::c_only},
    {"TSGCN-N", Variant::n_only},
    {"N-only", Variant::n_only},
    {"TSGCN-S", Variant::single_stream},
    {"single-stream", Variant::single_stream},
    {"M+M", Variant::m_m},
    {"A+A", Variant::a_a},
    {"M+A", Variant::m_a},
    {"L-fusion", Variant::l_fusion},
    {"TSGCN-Concatenation", Variant::concat_fusion},
    {"concat-fusion", Variant::concat_fusion},
    {"TSGCN-Normalization", Variant::norm_fusion},
    {"norm-only", Variant::norm_fusion},
    {"TSGCN-Attention", Variant::attention_fusion},
    {"attention-only", Variant::attention_fusion},
}};

inline Variant parse_variant(std::string_view name) {
  for (const auto& e : kVariantNames)
    if (e.name == name) return e.variant;
  std::string known;
  for (const auto& e : kVariantNames) known += (known.empty() ? "" : ", ") + std::string(e.name);
  throw ContractError("unknown variant '" + std::string(name) + "' (known: " + known + ")");
}

inline std::string_view variant_name(Variant v) {
  for (const auto& e : kVariantNames)
    if (e.variant == v) return e.name;
  return "?";
}

/// One representative of every distinct wiring, in grid order.
inline std::vector<Variant> all_variants() {
  return {Variant::full,   Variant::c_only, Variant::n_only,        Variant::single_stream,
          Variant::m_m,    Variant::a_a,    Variant::m_a,           Variant::l_fusion,
          Variant::concat_fusion, Variant::norm_fusion, Variant::attention_fusion};
}

}  // namespace tsgcn::nn
