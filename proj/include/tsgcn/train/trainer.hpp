#pragma once

#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tsgcn/ad/adam.hpp"
#include "tsgcn/metrics/metrics.hpp"
#include "tsgcn/nn/checkpoint.hpp"
#include "tsgcn/train/augment.hpp"
#include "tsgcn/train/config.hpp"
#include "tsgcn/train/dataset.hpp"

namespace tsgcn::train {

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;  // mean per-mesh cross-entropy
  double oa = 0.0;
  double miou = 0.0;
};

inline std::string log_header() { return "epoch,lr,loss,oa,miou"; }

inline std::string log_row(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", e.epoch, e.lr, e.loss, e.oa, e.miou);
  return buf;
}

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_miou = -1.0;
  nn::ParamStore::Snapshot best;  // parameters as they were when best_epoch was evaluated
};

/// The augmentation stream of mesh `index` in `epoch`. It depends only on the
/// seed, so every variant sees the same data.
inline Rng augmentation_rng(std::uint64_t seed, int epoch, std::size_t index) {
  return Rng({seed, 0xa06u, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(index)});
}

/// Mini-batch training in a fixed mesh order. Batch norm runs per mesh; the
/// gradients of a batch are averaged before one Adam step. Metrics come from
/// the training forward passes.
class Trainer {
 public:
  /// Return false to stop after this epoch.
  using EpochCallback = std::function<bool(const EpochLog&)>;

  Trainer(const TrainConfig& cfg, nn::Variant variant)
      : cfg_(cfg), model_((cfg.validate(), cfg.model(variant))), adam_(model_.params().vars()) {}

  nn::Model& model() { return model_; }
  ad::Adam& optimizer() { return adam_; }
  const TrainConfig& config() const { return cfg_; }

  TrainResult run(const Dataset& data, const EpochCallback& on_epoch = {}) {
    require(!data.samples.empty(), "train: dataset is empty");
    require(data.classes == cfg_.classes,
            "train: dataset has " + std::to_string(data.classes) + " classes, config says " +
                std::to_string(cfg_.classes));
    for (const auto& s : data.samples) check_labels(s, cfg_.classes);

    std::vector<mesh::CellDescriptors> fixed;
    if (!cfg_.augment)
      for (const auto& s : data.samples) fixed.push_back(mesh::cell_descriptors(s.mesh));

    TrainResult result;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      auto start = model_.params().snapshot();
      const EpochLog e = run_epoch(data, fixed, epoch);
      result.log.push_back(e);
      if (e.miou > result.best_miou) {
        result.best_miou = e.miou;
        result.best_epoch = epoch;
        result.best = std::move(start);
      }
      if (on_epoch && !on_epoch(e)) break;
    }
    return result;
  }

 private:
  EpochLog run_epoch(const Dataset& data, const std::vector<mesh::CellDescriptors>& fixed, int epoch) {
    EpochLog e;
    e.epoch = epoch;
    e.lr = lr_at(epoch, cfg_);
    metrics::ConfusionMatrix cm(cfg_.classes);
    double loss_sum = 0.0;
    const std::size_t n = data.samples.size();
    for (std::size_t first = 0; first < n; first += cfg_.batch_size) {
      const std::size_t last = std::min(n, first + cfg_.batch_size);
      const double weight = 1.0 / static_cast<double>(last - first);
      adam_.zero_grad();
      for (std::size_t i = first; i < last; ++i) {
        const auto& sample = data.samples[i];
        std::optional<mesh::CellDescriptors> desc;
        if (cfg_.augment) {
          Rng rng = augmentation_rng(cfg_.seed, epoch, i);
          desc = mesh::cell_descriptors(augment(sample.mesh, rng));
        }
        const auto& labels = *sample.mesh.labels;
        ad::Tape tape;
        auto fwd = model_.forward(tape, desc ? *desc : fixed[i]);
        ad::Var loss = ad::cross_entropy(tape, fwd.probs, labels);
        loss_sum += loss.value().data[0];
        const auto pred = nn::Model::predict(fwd.probs.value());
        cm.add(pred, labels);
        tape.backward(ad::scale(tape, loss, weight));
      }
      adam_.step(e.lr);
    }
    e.loss = loss_sum / static_cast<double>(n);
    e.oa = cm.overall_accuracy();
    e.miou = cm.mean_iou();
    return e;
  }

  TrainConfig cfg_;
  nn::Model model_;
  ad::Adam adam_;
};

/// Per-cell argmax labels in eval mode (running batch-norm statistics).
inline std::vector<int> segment(nn::Model& model, const mesh::Mesh& m) {
  ad::Tape tape(ad::Tape::Mode::inference);
  nn::ForwardOptions opt;
  opt.mode = ad::NormMode::eval;
  auto fwd = model.forward(tape, mesh::cell_descriptors(m), opt);
  return nn::Model::predict(fwd.probs.value());
}

}  // namespace tsgcn::train
