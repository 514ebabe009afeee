#include "morpho/mesh_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "morpho/error.hpp"

namespace fs = std::filesystem;

namespace morpho {
namespace {

// Next non-empty, non-comment line; false at EOF.
bool next_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

[[noreturn]] void fail(const fs::path& path, int lineno, const std::string& what) {
  throw FormatError("file '" + path.string() + "' line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

TriMesh read_off(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mesh file '" + path.string() + "'");
  std::string line;
  int lineno = 0;
  if (!next_line(in, line, lineno)) fail(path, lineno, "empty file");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") fail(path, lineno, "missing OFF header");
  long nv = -1, nf = -1, ne = 0;
  // Counts may share the header line.
  if (!(header >> nv)) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "missing element counts");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf)) fail(path, lineno, "malformed element counts");
    counts >> ne;
  } else if (!(header >> nf)) {
    fail(path, lineno, "malformed element counts");
  }
  if (nv < 0 || nf < 0) fail(path, lineno, "negative element counts");

  TriMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long i = 0; i < nv; ++i) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "unexpected end of file in vertex list");
    std::istringstream row(line);
    double x, y, z;
    if (!(row >> x >> y >> z)) fail(path, lineno, "malformed vertex");
    mesh.vertices.row(i) << x, y, z;
  }
  mesh.faces.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!next_line(in, line, lineno)) fail(path, lineno, "unexpected end of file in face list");
    std::istringstream row(line);
    int k;
    Face f;
    if (!(row >> k)) fail(path, lineno, "malformed face");
    if (k != 3) fail(path, lineno, "only triangular faces are supported");
    if (!(row >> f[0] >> f[1] >> f[2])) fail(path, lineno, "malformed face");
    mesh.faces.push_back(f);
  }
  try {
    mesh.validate();
  } catch (const Error& e) {
    throw FormatError("file '" + path.string() + "': " + e.what());
  }
  return mesh;
}

void write_off(const fs::path& path, const TriMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write mesh file '" + path.string() + "'");
  out << "OFF\n" << mesh.n_vertices() << ' ' << mesh.faces.size() << " 0\n";
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i) {
    out << format_double(mesh.vertices(i, 0)) << ' ' << format_double(mesh.vertices(i, 1)) << ' '
        << format_double(mesh.vertices(i, 2)) << '\n';
  }
  for (const Face& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

std::vector<Region> read_region_map(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open region map '" + path.string() + "'");
  std::vector<Region> regions;
  std::string line;
  int lineno = 0;
  while (next_line(in, line, lineno)) {
    std::istringstream row(line);
    std::string label;
    row >> label;
    try {
      regions.push_back(parse_region(label));
    } catch (const FormatError& e) {
      fail(path, lineno, e.what());
    }
  }
  return regions;
}

void write_region_map(const fs::path& path, const std::vector<Region>& regions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write region map '" + path.string() + "'");
  for (Region r : regions) out << region_name(r) << '\n';
}

MeshCorpus load_corpus(const fs::path& dir, const std::optional<fs::path>& region_map) {
  if (!fs::is_directory(dir)) throw FormatError("mesh directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".off") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError("no .off meshes in '" + dir.string() + "'");

  MeshCorpus corpus;
  corpus.templ = read_off(files.front());
  const Eigen::Index width = 3 * corpus.templ.n_vertices();
  corpus.shapes.resize(static_cast<Eigen::Index>(files.size()), width);
  for (std::size_t i = 0; i < files.size(); ++i) {
    TriMesh m = i == 0 ? corpus.templ : read_off(files[i]);
    if (!m.same_connectivity(corpus.templ)) {
      throw FormatError("file '" + files[i].string() + "': connectivity differs from '" + files.front().string() +
                        "'");
    }
    corpus.ids.push_back(files[i].stem().string());
    corpus.shapes.row(static_cast<Eigen::Index>(i)) = flatten(m).coords().transpose();
  }

  fs::path regions_path = region_map.value_or(dir / kRegionMapName);
  if (region_map || fs::exists(regions_path)) {
    corpus.templ.regions = read_region_map(regions_path);
    if (static_cast<Eigen::Index>(corpus.templ.regions.size()) != corpus.templ.n_vertices()) {
      throw FormatError("region map '" + regions_path.string() + "' has " +
                        std::to_string(corpus.templ.regions.size()) + " labels for " +
                        std::to_string(corpus.templ.n_vertices()) + " vertices");
    }
  }
  return corpus;
}

void write_corpus(const fs::path& dir, const std::vector<std::string>& ids, const ShapeMatrix& shapes,
                  const TriMesh& templ) {
  if (static_cast<Eigen::Index>(ids.size()) != shapes.rows()) {
    throw DimensionError("write_corpus: id count does not match shape rows");
  }
  fs::create_directories(dir);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    write_off(dir / (ids[i] + ".off"), unflatten(row_shape(shapes, static_cast<Eigen::Index>(i)), templ));
  }
  if (!templ.regions.empty()) write_region_map(dir / kRegionMapName, templ.regions);
}

}  // namespace morpho
