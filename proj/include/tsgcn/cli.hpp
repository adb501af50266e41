#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tsgcn/nn/checkpoint.hpp"
#include "tsgcn/nn/grad_suite.hpp"
#include "tsgcn/train/trainer.hpp"

namespace tsgcn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

namespace fs = std::filesystem;

inline void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  mesh::detail::write_text(path, text);
}

// ---- synth ----

struct SynthArgs {
  fs::path out;
  train::SynthOptions options;
};

inline int run_synth(const SynthArgs& a, std::ostream& os) {
  const auto samples = train::synthesize(a.options);
  train::write_dataset(a.out, samples, a.options);
  os << "wrote " << samples.size() << " meshes to " << a.out.string() << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  fs::path data;
  std::optional<fs::path> config;
  std::string variant = "full";
  fs::path out;
  std::optional<fs::path> log;  // default: the checkpoint path with a .csv extension
};

inline train::TrainConfig config_for(const std::optional<fs::path>& path, const train::Dataset& data) {
  train::TrainConfig base;
  base.classes = data.classes;
  return path ? train::load_config(*path, base) : (base.validate(), base);
}

inline int run_train(const TrainArgs& a, std::ostream& os) {
  const auto data = train::load_dataset(a.data);
  const auto cfg = config_for(a.config, data);
  const auto variant = nn::parse_variant(a.variant);
  train::Trainer trainer(cfg, variant);
  std::vector<std::string> rows{train::log_header()};
  os << rows.front() << "\n";
  auto result = trainer.run(data, [&](const train::EpochLog& e) {
    rows.push_back(train::log_row(e));
    os << rows.back() << "\n" << std::flush;
    return true;
  });
  if (result.best_epoch >= 0) trainer.model().params().restore(result.best);
  nn::save_checkpoint(a.out, nn::capture(trainer.model()));
  write_lines(a.log ? *a.log : fs::path(a.out).replace_extension(".csv"), rows);
  os << "best epoch " << result.best_epoch << " (miou " << result.best_miou << "), saved "
     << a.out.string() << "\n";
  return kExitOk;
}

// ---- segment ----

struct SegmentArgs {
  fs::path model;
  fs::path mesh;
  fs::path out;
  std::optional<fs::path> color_mesh;
  std::optional<std::size_t> classes;  // checked against the checkpoint when given
};

inline int run_segment(const SegmentArgs& a, std::ostream& os) {
  const auto ck = nn::load_checkpoint(a.model);
  if (a.classes)
    require(*a.classes == ck.config.classes,
            "segment: checkpoint predicts " + std::to_string(ck.config.classes) + " classes, not " +
                std::to_string(*a.classes));
  auto model = nn::restore_model(ck);
  const auto m = mesh::load_mesh(a.mesh);
  mesh::validate(m);
  const auto labels = train::segment(model, m);
  mesh::write_labels(a.out, labels);
  if (a.color_mesh) mesh::save_colored_obj(*a.color_mesh, m, labels);
  os << "segmented " << labels.size() << " cells\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::vector<fs::path> pred;
  std::vector<fs::path> truth;
  std::size_t classes = 0;
};

inline int run_eval(const EvalArgs& a, std::ostream& os) {
  require(a.pred.size() == a.truth.size(),
          "eval: " + std::to_string(a.pred.size()) + " prediction files for " +
              std::to_string(a.truth.size()) + " ground-truth files");
  require(!a.pred.empty(), "eval: no label files given");
  metrics::ConfusionMatrix all(a.classes);
  std::vector<std::string> rows{metrics::csv_header(a.classes)};
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    const auto p = mesh::read_labels(a.pred[i]);
    const auto t = mesh::read_labels(a.truth[i]);
    metrics::ConfusionMatrix cm(a.classes);
    cm.add(p, t);
    all.merge(cm);
    rows.push_back(metrics::csv_row(a.pred[i].stem().string(), cm));
  }
  if (a.pred.size() > 1) rows.push_back(metrics::csv_row("all", all));
  for (const auto& r : rows) os << r << "\n";
  return kExitOk;
}

// ---- ablate ----

/// One training run of an ablation grid.
struct AblationRun {
  std::string study;
  nn::Variant variant;
  std::size_t k;
  std::string label() const {
    return std::string(nn::variant_name(variant)) + "_k" + std::to_string(k);
  }
};

/// Which comparison a variant belongs to in the summary table.
inline std::string study_of(nn::Variant v) {
  switch (v) {
    case nn::Variant::full: return "reference";
    case nn::Variant::c_only:
    case nn::Variant::n_only:
    case nn::Variant::single_stream: return "streams";
    case nn::Variant::m_m:
    case nn::Variant::a_a:
    case nn::Variant::m_a: return "aggregation";
    case nn::Variant::l_fusion: return "fusion-level";
    case nn::Variant::concat_fusion:
    case nn::Variant::norm_fusion:
    case nn::Variant::attention_fusion: return "fusion-kind";
  }
  return "?";
}

/// Grid grammar (key = value lines): `variant = NAME` entries run at the
/// config's K; `k = N` entries add a K sweep of `k_variant` (default full).
inline std::vector<AblationRun> parse_grid(const std::vector<KvEntry>& entries,
                                           const std::string& source, std::size_t default_k) {
  std::vector<AblationRun> runs;
  std::vector<std::size_t> sweep;
  nn::Variant sweep_variant = nn::Variant::full;
  for (const auto& e : entries) {
    if (e.key == "variant") {
      const auto v = nn::parse_variant(e.value);
      runs.push_back({study_of(v), v, default_k});
    } else if (e.key == "k") {
      sweep.push_back(parse_number<std::size_t>(e, source));
    } else if (e.key == "k_variant") {
      sweep_variant = nn::parse_variant(e.value);
    } else {
      throw ParseError(source, e.line, "unknown grid key '" + e.key + "'");
    }
  }
  for (auto k : sweep) runs.push_back({"k-sweep", sweep_variant, k});
  require(!runs.empty(), source + ": grid lists no runs");
  return runs;
}

struct AblateArgs {
  fs::path data;
  std::optional<fs::path> config;
  fs::path grid;
  fs::path out;
};

struct AblationRow {
  AblationRun run;
  std::size_t epochs = 0;
  double first_loss = 0.0, final_loss = 0.0;
  int best_epoch = -1;
  double best_oa = 0.0, best_miou = 0.0;
};

inline std::string summary_header() {
  return "study,variant,k,epochs,epoch0_loss,final_loss,best_epoch,best_oa,best_miou";
}

inline std::string summary_row(const AblationRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.10g,%.10g,%d,%.10g,%.10g", r.run.study.c_str(),
                std::string(nn::variant_name(r.run.variant)).c_str(), r.run.k, r.epochs, r.first_loss,
                r.final_loss, r.best_epoch, r.best_oa, r.best_miou);
  return buf;
}

/// Trains every run of the grid on the same data, seed and augmentation draws.
inline int run_ablate(const AblateArgs& a, std::ostream& os) {
  const auto data = train::load_dataset(a.data);
  const auto base = config_for(a.config, data);
  const auto runs = parse_grid(read_kv(a.grid), a.grid.string(), base.k);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Error("cannot create " + a.out.string() + ": " + ec.message());

  std::vector<std::string> summary{summary_header()};
  for (const auto& run : runs) {
    auto cfg = base;
    cfg.k = run.k;
    train::Trainer trainer(cfg, run.variant);
    std::vector<std::string> rows{train::log_header()};
    const auto result = trainer.run(data, [&](const train::EpochLog& e) {
      rows.push_back(train::log_row(e));
      return true;
    });
    write_lines(a.out / (run.label() + ".csv"), rows);
    AblationRow r{run};
    r.epochs = result.log.size();
    if (!result.log.empty()) {
      r.first_loss = result.log.front().loss;
      r.final_loss = result.log.back().loss;
      r.best_epoch = result.best_epoch;
      r.best_oa = result.log[static_cast<std::size_t>(result.best_epoch)].oa;
      r.best_miou = result.best_miou;
    }
    summary.push_back(summary_row(r));
    os << summary.back() << "\n" << std::flush;
  }
  write_lines(a.out / "summary.csv", summary);
  return kExitOk;
}

// ---- gradcheck ----

struct GradcheckArgs {
  nn::GradSuiteOptions options;
  double tolerance = 1e-4;
};

inline int run_gradcheck(const GradcheckArgs& a, std::ostream& os) {
  bool ok = true;
  for (const auto& r : nn::run_grad_suite(a.options)) {
    const bool pass = r.report.passed(a.tolerance);
    ok = ok && pass;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-32s max_rel_err=%.3e %s", r.name.c_str(),
                  r.report.max_rel_error(), pass ? "PASS" : "FAIL");
    os << buf << "\n";
  }
  return ok ? kExitOk : kExitData;
}

}  // namespace tsgcn::cli
