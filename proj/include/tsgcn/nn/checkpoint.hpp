#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tsgcn/ad/adam.hpp"
#include "tsgcn/nn/model.hpp"

namespace tsgcn::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O writes the host byte order and assumes little-endian");

inline constexpr char kCheckpointMagic[8] = {'T', 'S', 'G', 'C', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof v);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void put_doubles(const std::vector<double>& v) {
    const auto* p = reinterpret_cast<const char*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size() * sizeof(double));
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  template <typename T>
  T get() {
    T v;
    need(sizeof v);
    std::memcpy(&v, data_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> get_doubles(std::size_t n) {
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw ContractError(source_ + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated checkpoint");
  }
  std::vector<char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Everything needed to rebuild a model: its configuration, its parameters and
/// batch-norm statistics, and optionally the optimizer state.
struct Checkpoint {
  ModelConfig config;
  std::vector<std::pair<std::string, ad::Tensor>> params;
  std::vector<std::pair<std::string, ad::BatchNormStats>> stats;
  std::optional<ad::AdamState> adam;
};

inline Checkpoint capture(const Model& model, const ad::AdamState* adam = nullptr) {
  Checkpoint ck;
  ck.config = model.config();
  for (const auto& [name, v] : model.params().named_params()) ck.params.emplace_back(name, v.value());
  for (const auto& name : model.params().stats_names())
    ck.stats.emplace_back(name, model.params().stats(name));
  if (adam) ck.adam = *adam;
  return ck;
}

inline std::vector<char> encode(const Checkpoint& ck) {
  detail::ByteWriter w;
  for (char c : kCheckpointMagic) w.put(c);
  w.put(kCheckpointVersion);
  const auto& cfg = ck.config;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.classes));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.k));
  w.put_string(std::string(variant_name(cfg.variant)));
  for (auto v : cfg.stream_widths) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.fuse_width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.head_widths.size()));
  for (auto v : cfg.head_widths) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  for (auto v : cfg.tnet_widths) w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  w.put<std::uint64_t>(cfg.seed);

  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, t] : ck.params) {
    w.put_string(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) w.put<std::uint64_t>(d);
    w.put_doubles(t.data);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.stats.size()));
  for (const auto& [name, s] : ck.stats) {
    w.put_string(name);
    w.put<std::uint64_t>(s.mean.size());
    w.put_doubles(s.mean);
    w.put_doubles(s.var);
  }
  w.put<std::uint8_t>(ck.adam ? 1 : 0);
  if (ck.adam) {
    const auto& a = *ck.adam;
    w.put(a.beta1);
    w.put(a.beta2);
    w.put(a.eps);
    w.put(a.step);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(a.first_moment.size()));
    for (std::size_t i = 0; i < a.first_moment.size(); ++i) {
      w.put<std::uint64_t>(a.first_moment[i].size());
      w.put_doubles(a.first_moment[i]);
      w.put_doubles(a.second_moment[i]);
    }
  }
  return w.bytes();
}

inline Checkpoint decode(std::vector<char> bytes, const std::string& source = "<checkpoint>") {
  detail::ByteReader r(std::move(bytes), source);
  for (char c : kCheckpointMagic)
    if (r.get<char>() != c) r.fail("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  auto& cfg = ck.config;
  cfg.classes = r.get<std::uint32_t>();
  cfg.k = r.get<std::uint32_t>();
  cfg.variant = parse_variant(r.get_string());
  for (auto& v : cfg.stream_widths) v = r.get<std::uint32_t>();
  cfg.fuse_width = r.get<std::uint32_t>();
  cfg.head_widths.resize(r.get<std::uint32_t>());
  for (auto& v : cfg.head_widths) v = r.get<std::uint32_t>();
  for (auto& v : cfg.tnet_widths) v = r.get<std::uint32_t>();
  cfg.seed = r.get<std::uint64_t>();

  const auto np = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < np; ++i) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail("implausible rank for " + name);
    ad::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.get<std::uint64_t>();
      n *= d;
    }
    ad::Tensor t(shape);
    t.data = r.get_doubles(n);
    ck.params.emplace_back(std::move(name), std::move(t));
  }
  const auto ns = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < ns; ++i) {
    std::string name = r.get_string();
    const auto ch = r.get<std::uint64_t>();
    ad::BatchNormStats s;
    s.mean = r.get_doubles(ch);
    s.var = r.get_doubles(ch);
    ck.stats.emplace_back(std::move(name), std::move(s));
  }
  if (r.get<std::uint8_t>() != 0) {
    ad::AdamState a;
    a.beta1 = r.get<double>();
    a.beta2 = r.get<double>();
    a.eps = r.get<double>();
    a.step = r.get<std::uint64_t>();
    const auto slots = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < slots; ++i) {
      const auto n = r.get<std::uint64_t>();
      a.first_moment.push_back(r.get_doubles(n));
      a.second_moment.push_back(r.get_doubles(n));
    }
    ck.adam = std::move(a);
  }
  if (!r.at_end()) r.fail("trailing bytes after checkpoint");
  return ck;
}

/// Copies stored values into a model built from the same configuration.
inline void apply(const Checkpoint& ck, Model& model) {
  auto& store = model.params();
  require(ck.params.size() == store.named_params().size(),
          "checkpoint has " + std::to_string(ck.params.size()) + " parameters, model expects " +
              std::to_string(store.named_params().size()));
  for (const auto& [name, t] : ck.params) {
    require(store.has(name), "checkpoint parameter " + name + " is not in the model");
    auto& v = store.param(name);
    require(v.shape() == t.shape, "checkpoint shape mismatch for " + name + ": " +
                                      ad::shape_string(t.shape) + " vs " +
                                      ad::shape_string(v.shape()));
    v.mutable_value().data = t.data;
  }
  require(ck.stats.size() == store.stats_names().size(), "checkpoint batch-norm layer count mismatch");
  for (const auto& [name, s] : ck.stats) {
    auto& dst = store.stats(name);
    require(dst.mean.size() == s.mean.size(), "checkpoint batch-norm width mismatch for " + name);
    dst = s;
  }
}

inline Model restore_model(const Checkpoint& ck) {
  Model model(ck.config);
  apply(ck, model);
  return model;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(std::move(bytes), path.string());
}

}  // namespace tsgcn::nn
