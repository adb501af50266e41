// tsgcn: synthetic data, training, segmentation, evaluation and ablations.

#include <iostream>

#include "CLI11.hpp"
#include "tsgcn/cli.hpp"

namespace {

using namespace tsgcn;

const CLI::Validator kVariantName(
    [](std::string& s) -> std::string {
      try {
        nn::parse_variant(s);
        return {};
      } catch (const ContractError& e) {
        return e.what();
      }
    },
    "VARIANT");

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream graph convolutional mesh segmentation"};
  app.require_subcommand(1);

  cli::SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate labeled synthetic dental arches");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--count", synth.options.count, "Number of meshes")->check(CLI::PositiveNumber);
  s->add_option("--cells", synth.options.cells, "Target cell count per mesh")->check(CLI::Range(100, 1 << 24));
  s->add_option("--classes", synth.options.classes, "Classes including the gingiva")->check(CLI::Range(1, 64));
  s->add_option("--seed", synth.options.seed, "Random seed");

  cli::TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", train.data, "Dataset directory with manifest.txt")->required()->check(CLI::ExistingDirectory);
  t->add_option("--config", train.config, "key = value config file")->check(CLI::ExistingFile);
  t->add_option("--variant", train.variant, "Architecture variant")->check(kVariantName);
  t->add_option("--out", train.out, "Checkpoint to write")->required();
  t->add_option("--log", train.log, "CSV training log (default: checkpoint path with .csv)");

  cli::SegmentArgs seg;
  auto* g = app.add_subcommand("segment", "Label the cells of a mesh");
  g->add_option("--model", seg.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  g->add_option("--mesh", seg.mesh, "Mesh file (.off or .obj)")->required()->check(CLI::ExistingFile);
  g->add_option("--out", seg.out, "Label file to write")->required();
  g->add_option("--color-mesh", seg.color_mesh, "Also write an OBJ colored by class");
  g->add_option("--classes", seg.classes, "Expected class count");

  cli::EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predicted labels against ground truth");
  e->add_option("--pred", ev.pred, "Predicted label files")->required()->check(CLI::ExistingFile);
  e->add_option("--truth", ev.truth, "Ground-truth label files")->required()->check(CLI::ExistingFile);
  e->add_option("--classes", ev.classes, "Class count")->required()->check(CLI::PositiveNumber);

  cli::AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Train every variant of a grid on paired seeds");
  a->add_option("--data", ab.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  a->add_option("--config", ab.config, "key = value config file")->check(CLI::ExistingFile);
  a->add_option("--grid", ab.grid, "Grid file")->required()->check(CLI::ExistingFile);
  a->add_option("--out", ab.out, "Output directory")->required();

  cli::GradcheckArgs gc;
  std::vector<std::string> variants;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference checks of every layer and the network");
  c->add_option("--seed", gc.options.seed, "Random seed");
  c->add_option("--cells", gc.options.network_cells, "Cells of the network check")->check(CLI::Range(4, 32));
  c->add_option("--k", gc.options.network.k, "Neighbors of the network check")->check(CLI::PositiveNumber);
  c->add_option("--entries", gc.options.network_entries, "Entries probed per network tensor (0 = all)");
  c->add_option("--variant", variants, "Variants to check (default full)")->check(kVariantName);
  c->add_option("--tol", gc.tolerance, "Relative error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*s) return cli::run_synth(synth, std::cout);
    if (*t) return cli::run_train(train, std::cout);
    if (*g) return cli::run_segment(seg, std::cout);
    if (*e) return cli::run_eval(ev, std::cout);
    if (*a) return cli::run_ablate(ab, std::cout);
    if (*c) {
      if (!variants.empty()) {
        gc.options.variants.clear();
        for (const auto& v : variants) gc.options.variants.push_back(nn::parse_variant(v));
      }
      return cli::run_gradcheck(gc, std::cout);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return cli::kExitData;
  }
  return cli::kExitUsage;
}
