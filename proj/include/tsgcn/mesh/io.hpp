#pragma once

// ASCII OFF / OBJ readers and writers plus newline-separated label files.
// The accepted grammar is documented in docs/formats.md.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsgcn/mesh/mesh.hpp"

namespace tsgcn::mesh {

enum class MeshFormat { off, obj };

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

inline double parse_double(std::string_view tok, const std::string& src, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(src, line, "expected a number, got '" + std::string(tok) + "'");
  return v;
}

inline long long parse_int(std::string_view tok, const std::string& src, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(src, line, "expected an integer, got '" + std::string(tok) + "'");
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LineReader {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  // Next line with comments removed that still has tokens; false at EOF.
  bool next(std::vector<std::string_view>& tokens) {
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      const auto line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      tokens = split_ws(strip_comment(line));
      if (!tokens.empty()) return true;
    }
    return false;
  }
};

inline std::uint32_t checked_index(long long idx, std::size_t vertex_count, const std::string& src,
                                   std::size_t line) {
  if (idx < 0 || static_cast<std::size_t>(idx) >= vertex_count)
    throw ParseError(src, line, "vertex index " + std::to_string(idx) + " out of range [0, " +
                                    std::to_string(vertex_count) + ")");
  return static_cast<std::uint32_t>(idx);
}

}  // namespace detail

inline Mesh parse_off(std::string_view text, const std::string& source = "<off>") {
  detail::LineReader reader{text};
  std::vector<std::string_view> tok;
  if (!reader.next(tok) || tok[0] != "OFF")
    throw ParseError(source, reader.line_no, "missing OFF header");
  // Counts may share the header line ("OFF 3 1 0").
  std::vector<std::string_view> counts(tok.begin() + 1, tok.end());
  if (counts.empty()) {
    if (!reader.next(tok)) throw ParseError(source, reader.line_no, "missing element counts");
    counts = tok;
  }
  if (counts.size() < 2) throw ParseError(source, reader.line_no, "expected 'V F [E]'");
  const long long nv = detail::parse_int(counts[0], source, reader.line_no);
  const long long nf = detail::parse_int(counts[1], source, reader.line_no);
  if (nv < 0 || nf < 0) throw ParseError(source, reader.line_no, "negative element count");

  Mesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i) {
    if (!reader.next(tok)) throw ParseError(source, reader.line_no, "unexpected end of vertices");
    if (tok.size() < 3) throw ParseError(source, reader.line_no, "vertex needs 3 coordinates");
    mesh.vertices.push_back({detail::parse_double(tok[0], source, reader.line_no),
                             detail::parse_double(tok[1], source, reader.line_no),
                             detail::parse_double(tok[2], source, reader.line_no)});
  }
  mesh.faces.reserve(static_cast<std::size_t>(nf));
  for (long long i = 0; i < nf; ++i) {
    if (!reader.next(tok)) throw ParseError(source, reader.line_no, "unexpected end of faces");
    const long long n = detail::parse_int(tok[0], source, reader.line_no);
    if (n != 3)
      throw ParseError(source, reader.line_no,
                       "non-triangle face with " + std::to_string(n) + " vertices");
    if (tok.size() < 4) throw ParseError(source, reader.line_no, "face lists fewer than 3 indices");
    Face f{};
    for (int k = 0; k < 3; ++k)
      f[k] = detail::checked_index(detail::parse_int(tok[1 + k], source, reader.line_no),
                                   mesh.vertices.size(), source, reader.line_no);
    mesh.faces.push_back(f);
  }
  validate(mesh);
  return mesh;
}

inline Mesh parse_obj(std::string_view text, const std::string& source = "<obj>") {
  detail::LineReader reader{text};
  std::vector<std::string_view> tok;
  Mesh mesh;
  struct PendingFace {
    std::array<long long, 3> idx;
    std::size_t line;
  };
  std::vector<PendingFace> pending;
  while (reader.next(tok)) {
    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError(source, reader.line_no, "vertex needs 3 coordinates");
      mesh.vertices.push_back({detail::parse_double(tok[1], source, reader.line_no),
                               detail::parse_double(tok[2], source, reader.line_no),
                               detail::parse_double(tok[3], source, reader.line_no)});
    } else if (tok[0] == "f") {
      if (tok.size() != 4)
        throw ParseError(source, reader.line_no,
                         "non-triangle face with " + std::to_string(tok.size() - 1) + " vertices");
      PendingFace pf{{}, reader.line_no};
      for (int k = 0; k < 3; ++k) {
        auto t = tok[1 + k];
        t = t.substr(0, t.find('/'));  // "v/vt/vn" -> "v"
        pf.idx[k] = detail::parse_int(t, source, reader.line_no);
      }
      pending.push_back(pf);
    }
    // vn, vt, g, o, s, usemtl, mtllib, ... are ignored
  }
  for (const auto& pf : pending) {
    Face f{};
    for (int k = 0; k < 3; ++k)
      f[k] = detail::checked_index(pf.idx[k] - 1, mesh.vertices.size(), source, pf.line);
    mesh.faces.push_back(f);
  }
  validate(mesh);
  return mesh;
}

inline MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".obj") return MeshFormat::obj;
  throw Error("unknown mesh extension '" + ext + "' (expected .off or .obj)");
}

inline Mesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const std::string text = detail::read_file(path);
  return format == MeshFormat::off ? parse_off(text, path.string()) : parse_obj(text, path.string());
}

inline Mesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

namespace detail {

inline void put_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace detail

/// Coordinates are written in shortest round-trip form, so load(write(m)) == m.
inline std::string format_off(const Mesh& mesh) {
  std::string out = "OFF\n" + std::to_string(mesh.vertices.size()) + " " +
                    std::to_string(mesh.faces.size()) + " 0\n";
  for (const auto& v : mesh.vertices) {
    detail::put_double(out, v[0]);
    out += ' ';
    detail::put_double(out, v[1]);
    out += ' ';
    detail::put_double(out, v[2]);
    out += '\n';
  }
  for (const auto& f : mesh.faces)
    out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
  return out;
}

inline std::string format_obj(const Mesh& mesh) {
  std::string out;
  for (const auto& v : mesh.vertices) {
    out += "v ";
    detail::put_double(out, v[0]);
    out += ' ';
    detail::put_double(out, v[1]);
    out += ' ';
    detail::put_double(out, v[2]);
    out += '\n';
  }
  for (const auto& f : mesh.faces)
    out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) + " " +
           std::to_string(f[2] + 1) + "\n";
  return out;
}

inline void save_mesh(const std::filesystem::path& path, const Mesh& mesh, MeshFormat format) {
  detail::write_text(path, format == MeshFormat::off ? format_off(mesh) : format_obj(mesh));
}

inline void save_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  save_mesh(path, mesh, format_from_path(path));
}

/// OBJ with per-vertex colors ("v x y z r g b"). Every face gets its own three
/// vertices so that each cell can carry the color of its class.
inline void save_colored_obj(const std::filesystem::path& path, const Mesh& mesh,
                             const std::vector<int>& labels) {
  require(labels.size() == mesh.faces.size(), "save_colored_obj: one label per face required");
  static constexpr std::array<std::array<double, 3>, 10> palette{{{0.85, 0.85, 0.85},
                                                                  {0.90, 0.30, 0.25},
                                                                  {0.25, 0.60, 0.90},
                                                                  {0.30, 0.80, 0.35},
                                                                  {0.95, 0.75, 0.20},
                                                                  {0.65, 0.35, 0.85},
                                                                  {0.20, 0.80, 0.80},
                                                                  {0.95, 0.50, 0.70},
                                                                  {0.55, 0.45, 0.30},
                                                                  {0.40, 0.40, 0.90}}};
  std::string out;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& color = palette[static_cast<std::size_t>(labels[f]) % palette.size()];
    for (auto vi : mesh.faces[f]) {
      const auto& v = mesh.vertices[vi];
      out += "v ";
      for (double c : v) {
        detail::put_double(out, c);
        out += ' ';
      }
      for (int k = 0; k < 3; ++k) {
        detail::put_double(out, color[k]);
        out += k < 2 ? " " : "\n";
      }
    }
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    out += "f " + std::to_string(3 * f + 1) + " " + std::to_string(3 * f + 2) + " " +
           std::to_string(3 * f + 3) + "\n";
  detail::write_text(path, out);
}

inline void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::string out;
  out.reserve(labels.size() * 3);
  for (int l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  detail::write_text(path, out);
}

inline std::vector<int> parse_labels(std::string_view text, const std::string& source = "<labels>") {
  detail::LineReader reader{text};
  std::vector<std::string_view> tok;
  std::vector<int> labels;
  while (reader.next(tok)) {
    if (tok.size() != 1) throw ParseError(source, reader.line_no, "expected one label per line");
    const long long v = detail::parse_int(tok[0], source, reader.line_no);
    if (v < 0 || v > 1'000'000) throw ParseError(source, reader.line_no, "label out of range");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
  return parse_labels(detail::read_file(path), path.string());
}

/// Reads a label file that must pair with a mesh of `expected_count` faces.
inline std::vector<int> read_labels(const std::filesystem::path& path, std::size_t expected_count) {
  auto labels = read_labels(path);
  if (labels.size() != expected_count)
    throw ContractError(path.string() + ": " + std::to_string(labels.size()) +
                        " labels for a mesh with " + std::to_string(expected_count) + " faces");
  return labels;
}

}  // namespace tsgcn::mesh
