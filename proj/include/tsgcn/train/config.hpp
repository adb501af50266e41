#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tsgcn/nn/model.hpp"
#include "tsgcn/util/kv_file.hpp"

namespace tsgcn::train {

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 4;
  double lr = 1e-3;
  double lr_decay = 0.5;
  int lr_decay_every = 20;
  std::size_t k = 32;
  std::size_t classes = 5;
  std::uint64_t seed = 1;
  bool augment = true;
  // Architecture widths; the defaults are the full-size network.
  std::array<std::size_t, 3> stream_widths{64, 128, 256};
  std::size_t fuse_width = 512;
  std::vector<std::size_t> head_widths{512, 256, 128};

  void validate() const {
    require(epochs >= 0, "config: epochs must be non-negative");
    require(batch_size >= 1, "config: batch_size must be positive");
    require(lr >= 0.0 && std::isfinite(lr), "config: lr must be a finite non-negative number");
    require(lr_decay > 0.0 && lr_decay <= 1.0, "config: lr_decay must lie in (0, 1]");
    require(lr_decay_every >= 1, "config: lr_decay_every must be positive");
    require(k >= 1, "config: k must be positive");
    require(classes >= 1, "config: classes must be positive");
    for (auto w : stream_widths) require(w >= 1, "config: stream widths must be positive");
    require(fuse_width >= 1, "config: fuse_width must be positive");
    for (auto w : head_widths) require(w >= 1, "config: head widths must be positive");
  }

  nn::ModelConfig model(nn::Variant variant) const {
    nn::ModelConfig m;
    m.variant = variant;
    m.classes = classes;
    m.k = k;
    m.stream_widths = stream_widths;
    m.fuse_width = fuse_width;
    m.head_widths = head_widths;
    m.seed = seed;
    return m;
  }
};

/// Step schedule: lr * decay^floor(epoch / decay_every).
inline double lr_at(int epoch, const TrainConfig& cfg) {
  require(epoch >= 0, "lr_at: epoch must be non-negative");
  return cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
}

/// Applies `key = value` entries on top of `base`. Unknown keys are errors.
inline TrainConfig parse_config(const std::vector<KvEntry>& entries, const std::string& source,
                                TrainConfig base = {}) {
  TrainConfig c = std::move(base);
  for (const auto& e : entries) {
    if (e.key == "epochs") {
      c.epochs = parse_number<int>(e, source);
    } else if (e.key == "batch_size") {
      c.batch_size = parse_number<std::size_t>(e, source);
    } else if (e.key == "lr") {
      c.lr = parse_number<double>(e, source);
    } else if (e.key == "lr_decay") {
      c.lr_decay = parse_number<double>(e, source);
    } else if (e.key == "lr_decay_every") {
      c.lr_decay_every = parse_number<int>(e, source);
    } else if (e.key == "k") {
      c.k = parse_number<std::size_t>(e, source);
    } else if (e.key == "classes") {
      c.classes = parse_number<std::size_t>(e, source);
    } else if (e.key == "seed") {
      c.seed = parse_number<std::uint64_t>(e, source);
    } else if (e.key == "augment") {
      c.augment = parse_bool(e, source);
    } else if (e.key == "stream_widths") {
      const auto v = parse_list<std::size_t>(e, source);
      if (v.size() != 3) throw ParseError(source, e.line, "stream_widths needs three values");
      std::copy(v.begin(), v.end(), c.stream_widths.begin());
    } else if (e.key == "fuse_width") {
      c.fuse_width = parse_number<std::size_t>(e, source);
    } else if (e.key == "head_widths") {
      c.head_widths = parse_list<std::size_t>(e, source);
    } else {
      throw ParseError(source, e.line, "unknown config key '" + e.key + "'");
    }
  }
  c.validate();
  return c;
}

inline TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {}) {
  return parse_config(read_kv(path), path.string(), std::move(base));
}

}  // namespace tsgcn::train
