#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsgcn/util/error.hpp"

namespace tsgcn::metrics {

/// C x C counts; rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
    require(classes >= 1, "confusion matrix needs at least one class");
  }

  void add(std::span<const int> pred, std::span<const int> truth) {
    require(pred.size() == truth.size(), "metrics: " + std::to_string(pred.size()) +
                                             " predictions for " + std::to_string(truth.size()) +
                                             " ground-truth labels");
    for (std::size_t i = 0; i < pred.size(); ++i) {
      check_label(pred[i], "prediction");
      check_label(truth[i], "ground-truth");
      ++counts_[static_cast<std::size_t>(truth[i]) * classes_ + static_cast<std::size_t>(pred[i])];
    }
    total_ += pred.size();
  }

  void merge(const ConfusionMatrix& other) {
    require(other.classes_ == classes_, "metrics: cannot merge matrices of different class counts");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
  }

  std::size_t classes() const noexcept { return classes_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }

  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (std::size_t c = 0; c < classes_; ++c) t += at(c, c);
    return t;
  }

  double overall_accuracy() const {
    require(total_ > 0, "metrics: no cells evaluated");
    return static_cast<double>(trace()) / static_cast<double>(total_);
  }

  /// TP / (TP + FP + FN); empty when the class occurs in neither labeling.
  std::optional<double> iou(std::size_t c) const {
    std::uint64_t row = 0, col = 0;
    for (std::size_t k = 0; k < classes_; ++k) {
      row += at(c, k);
      col += at(k, c);
    }
    const std::uint64_t tp = at(c, c);
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(uni);
  }

  std::vector<std::optional<double>> iou_per_class() const {
    std::vector<std::optional<double>> out(classes_);
    for (std::size_t c = 0; c < classes_; ++c) out[c] = iou(c);
    return out;
  }

  /// Mean IoU over classes present in the prediction or the ground truth.
  double mean_iou() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < classes_; ++c)
      if (auto v = iou(c)) {
        sum += *v;
        ++n;
      }
    require(n > 0, "metrics: no classes present");
    return sum / static_cast<double>(n);
  }

 private:
  void check_label(int label, const char* what) const {
    require(label >= 0 && static_cast<std::size_t>(label) < classes_,
            std::string("metrics: ") + what + " label " + std::to_string(label) +
                " outside [0, " + std::to_string(classes_) + ")");
  }

  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

inline double overall_accuracy(std::span<const int> pred, std::span<const int> truth,
                               std::size_t classes) {
  ConfusionMatrix cm(classes);
  cm.add(pred, truth);
  return cm.overall_accuracy();
}

inline std::vector<std::optional<double>> iou_per_class(std::span<const int> pred,
                                                        std::span<const int> truth,
                                                        std::size_t classes) {
  ConfusionMatrix cm(classes);
  cm.add(pred, truth);
  return cm.iou_per_class();
}

inline double mean_iou(std::span<const int> pred, std::span<const int> truth, std::size_t classes) {
  ConfusionMatrix cm(classes);
  cm.add(pred, truth);
  return cm.mean_iou();
}

/// CSV report: header "name,oa,miou,iou_c0,..."; absent classes print as nan.
inline std::string csv_header(std::size_t classes) {
  std::string h = "name,oa,miou";
  for (std::size_t c = 0; c < classes; ++c) h += ",iou_c" + std::to_string(c);
  return h;
}

inline std::string csv_row(const std::string& name, const ConfusionMatrix& cm) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  std::string row = name + "," + fmt(cm.overall_accuracy()) + "," + fmt(cm.mean_iou());
  for (const auto& v : cm.iou_per_class()) row += "," + (v ? fmt(*v) : std::string("nan"));
  return row;
}

}  // namespace tsgcn::metrics
