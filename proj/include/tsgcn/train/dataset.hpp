#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tsgcn/mesh/io.hpp"
#include "tsgcn/synth/arch.hpp"
#include "tsgcn/util/kv_file.hpp"

namespace tsgcn::train {

inline constexpr const char* kManifestName = "manifest.txt";

struct Sample {
  std::string name;
  mesh::Mesh mesh;  // labeled
};

struct Dataset {
  std::size_t classes = 0;
  std::vector<Sample> samples;
};

inline void check_labels(const Sample& s, std::size_t classes) {
  require(s.mesh.labels.has_value(), "dataset: mesh " + s.name + " has no labels");
  require(s.mesh.labels->size() == s.mesh.cell_count(), "dataset: label count mismatch for " + s.name);
  for (int l : *s.mesh.labels)
    require(l >= 0 && static_cast<std::size_t>(l) < classes,
            "dataset: label " + std::to_string(l) + " in " + s.name + " is outside [0, " +
                std::to_string(classes) + ")");
}

/// Manifest grammar (key = value lines): one `classes = C` entry and one
/// `mesh = <mesh file> <label file>` entry per sample, paths relative to the
/// manifest's directory. Other keys are informational.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest = dir / kManifestName;
  const auto entries = read_kv(manifest);
  Dataset d;
  for (const auto& e : entries) {
    if (e.key == "classes") {
      d.classes = parse_number<std::size_t>(e, manifest.string());
    } else if (e.key == "mesh") {
      const auto parts = mesh::detail::split_ws(e.value);
      if (parts.size() != 2)
        throw ParseError(manifest.string(), e.line, "expected 'mesh = <mesh> <labels>'");
      Sample s;
      s.name = std::filesystem::path(parts[0]).stem().string();
      s.mesh = mesh::load_mesh(dir / std::string(parts[0]));
      s.mesh.labels = mesh::read_labels(dir / std::string(parts[1]), s.mesh.cell_count());
      d.samples.push_back(std::move(s));
    }
  }
  require(d.classes >= 1, manifest.string() + ": missing 'classes' entry");
  require(!d.samples.empty(), manifest.string() + ": dataset is empty");
  for (const auto& s : d.samples) check_labels(s, d.classes);
  return d;
}

struct SynthOptions {
  std::size_t count = 4;
  std::size_t cells = 1024;
  int classes = 5;
  std::uint64_t seed = 1;
};

/// Arch i uses the seed drawn from (seed, i), so any prefix of a larger set
/// matches a smaller one.
inline std::vector<Sample> synthesize(const SynthOptions& opt) {
  require(opt.count >= 1, "synth: count must be positive");
  require(opt.classes >= 1, "synth: classes must be positive");
  std::vector<Sample> out;
  for (std::size_t i = 0; i < opt.count; ++i) {
    synth::ArchSpec spec;
    spec.teeth = opt.classes - 1;
    spec.cells = opt.cells;
    spec.seed = Rng({opt.seed, static_cast<std::uint64_t>(i)}).next();
    char name[32];
    std::snprintf(name, sizeof name, "arch_%03zu", i);
    out.push_back({name, synth::generate_arch(spec)});
  }
  return out;
}

inline void write_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples,
                          const SynthOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  std::string manifest = "# synthetic dental arches\nclasses = " + std::to_string(opt.classes) +
                         "\ncells = " + std::to_string(opt.cells) +
                         "\nseed = " + std::to_string(opt.seed) + "\n";
  for (const auto& s : samples) {
    const std::string mesh_file = s.name + ".off", label_file = s.name + ".labels";
    mesh::save_mesh(dir / mesh_file, s.mesh, mesh::MeshFormat::off);
    mesh::write_labels(dir / label_file, *s.mesh.labels);
    manifest += "mesh = " + mesh_file + " " + label_file + "\n";
  }
  mesh::detail::write_text(dir / kManifestName, manifest);
}

}  // namespace tsgcn::train
