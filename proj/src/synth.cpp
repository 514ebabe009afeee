#include "morpho/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "morpho/error.hpp"
#include "morpho/measure.hpp"
#include "morpho/mesh_io.hpp"
#include "morpho/random.hpp"

namespace morpho {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sphere {
  std::vector<Eigen::Vector3d> points;
  std::vector<Face> faces;
};

Sphere icosphere(int resolution) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Sphere s;
  s.points = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
              {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : s.points) p.normalize();
  s.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int r = 0; r < resolution; ++r) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      s.points.push_back((s.points[static_cast<std::size_t>(a)] + s.points[static_cast<std::size_t>(b)]).normalized());
      const int idx = static_cast<int>(s.points.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(s.faces.size() * 4);
    for (const Face& f : s.faces) {
      const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    s.faces = std::move(next);
  }
  return s;
}

struct ShellGeometry {
  Eigen::Vector3d centre;
  Eigen::Vector3d radii;
};

const std::array<ShellGeometry, 3> kShells = {{
    {{0.0, 0.0, 0.0}, {25.0, 25.0, 50.0}},   // LV endocardium
    {{0.0, 0.0, 0.0}, {33.0, 33.0, 57.0}},   // LV epicardium
    {{53.0, 0.0, 0.0}, {18.0, 35.0, 50.0}},  // RV
}};

// Vertex ranges per shell for a template built by make_template.
struct Layout {
  Eigen::Index per_shell = 0;
  Eigen::Index begin(int shell) const { return shell * per_shell; }
  Eigen::Index end(int shell) const { return (shell + 1) * per_shell; }
};

Layout layout_of(const TriMesh& templ) {
  if (templ.n_vertices() % 3 != 0 || templ.regions.size() != static_cast<std::size_t>(templ.n_vertices()))
    throw DimensionError("effect generators need a template built by make_template");
  return {templ.n_vertices() / 3};
}

// Area-weighted outward vertex normals (unit) and per-shell surface areas.
void normals_and_areas(const TriMesh& m, const Layout& lay, Eigen::MatrixX3d& normals, std::array<double, 3>& areas) {
  normals = Eigen::MatrixX3d::Zero(m.n_vertices(), 3);
  areas = {0.0, 0.0, 0.0};
  for (const Face& f : m.faces) {
    const Eigen::Vector3d a = m.vertices.row(f[0]).transpose();
    const Eigen::Vector3d b = m.vertices.row(f[1]).transpose();
    const Eigen::Vector3d c = m.vertices.row(f[2]).transpose();
    const Eigen::Vector3d n = (b - a).cross(c - a);
    for (int k = 0; k < 3; ++k) normals.row(f[static_cast<std::size_t>(k)]) += n.transpose();
    areas[static_cast<std::size_t>(f[0] / lay.per_shell)] += 0.5 * n.norm();
  }
  normals.rowwise().normalize();
}

// Normalised height along the long axis within a shell: 0 at apex, 1 at base.
double height(const TriMesh& m, const Layout& lay, Eigen::Index v) {
  const int shell = static_cast<int>(v / lay.per_shell);
  const auto& g = kShells[static_cast<std::size_t>(shell)];
  const double z = (m.vertices(v, 2) - g.centre.z()) / g.radii.z();
  return std::clamp((z + 1.0) / 2.0, 0.0, 1.0);
}

Eigen::VectorXd random_field(const TriMesh& m, std::uint64_t seed, std::uint64_t k) {
  Rng rng = make_stream(seed ^ 0x5eedf1e1dULL, k);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Matrix<double, 3, 9> a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 9; ++j) a(i, j) = gauss(rng);
  const Eigen::RowVector3d centroid = m.vertices.colwise().mean();
  Eigen::VectorXd d(3 * m.n_vertices());
  for (Eigen::Index v = 0; v < m.n_vertices(); ++v) {
    const Eigen::RowVector3d p = (m.vertices.row(v) - centroid) / 50.0;
    Eigen::Matrix<double, 9, 1> phi;
    phi << p.x(), p.y(), p.z(), p.x() * p.x(), p.y() * p.y(), p.z() * p.z(), p.x() * p.y(), p.x() * p.z(),
        p.y() * p.z();
    d.segment<3>(3 * v) = a * phi;
  }
  return d;
}

}  // namespace

TriMesh make_template(int resolution) {
  if (resolution < 0 || resolution > 6) throw ConfigError("template resolution must be in [0, 6]");
  const Sphere s = icosphere(resolution);
  const auto per = static_cast<Eigen::Index>(s.points.size());
  TriMesh m;
  m.vertices.resize(3 * per, 3);
  m.regions.resize(static_cast<std::size_t>(3 * per));
  for (int shell = 0; shell < 3; ++shell) {
    const auto& g = kShells[static_cast<std::size_t>(shell)];
    for (Eigen::Index i = 0; i < per; ++i) {
      const Eigen::Vector3d& u = s.points[static_cast<std::size_t>(i)];
      m.vertices.row(shell * per + i) = (g.centre + g.radii.cwiseProduct(u)).transpose();
      Region r = shell == 0 ? Region::LvEndo : shell == 1 ? Region::LvEpi : Region::Rv;
      if (shell == 2 && u.x() < -0.5) r = Region::Septum;
      m.regions[static_cast<std::size_t>(shell * per + i)] = r;
    }
    for (const Face& f : s.faces) {
      const auto off = static_cast<std::int32_t>(shell * per);
      m.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    }
  }
  return m;
}

std::vector<std::string> generator_names() {
  return {"dilate_lv", "thicken_lv", "thicken_lv_base", "concentric_lv", "dilate_rv", "dilate_rv_outflow", "scale"};
}

Eigen::VectorXd effect_direction(const TriMesh& templ, const std::string& generator, std::uint64_t seed) {
  const Layout lay = layout_of(templ);
  const Eigen::Index n = templ.n_vertices();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(3 * n);

  if (generator.rfind("random:", 0) == 0) {
    std::uint64_t k = 0;
    try {
      k = std::stoull(generator.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("bad random generator '" + generator + "' (expected random:<k>)");
    }
    d = random_field(templ, seed, k);
  } else if (generator == "scale") {
    const Eigen::RowVector3d centroid = templ.vertices.colwise().mean();
    for (Eigen::Index v = 0; v < n; ++v) d.segment<3>(3 * v) = (templ.vertices.row(v) - centroid).transpose();
  } else {
    Eigen::MatrixX3d normals;
    std::array<double, 3> area{};
    normals_and_areas(templ, lay, normals, area);
    // Per-shell weights along the outward normal; w(v) may depend on height.
    auto push = [&](int shell, double amount, bool basal) {
      for (Eigen::Index v = lay.begin(shell); v < lay.end(shell); ++v) {
        double w = amount;
        if (basal) w *= std::pow(height(templ, lay, v), 2.0);
        d.segment<3>(3 * v) += w * normals.row(v).transpose();
      }
    };
    if (generator == "dilate_lv") {
      push(0, 1.0, false);
      push(1, area[0] / area[1], false);
    } else if (generator == "thicken_lv") {
      push(1, 1.0, false);
    } else if (generator == "thicken_lv_base") {
      push(1, 1.0, true);
    } else if (generator == "concentric_lv") {
      push(0, -1.0, false);
      push(1, 1.0, false);
    } else if (generator == "dilate_rv") {
      push(2, 1.0, false);
    } else if (generator == "dilate_rv_outflow") {
      push(2, 1.0, true);
    } else {
      throw ConfigError("unknown effect generator '" + generator + "'");
    }
  }
  const double norm = d.norm();
  if (!(norm > 0.0)) throw NumericalError("effect generator '" + generator + "' produced a zero field");
  return d / norm;
}

namespace {

Eigen::VectorXd effect_unit(const TriMesh& templ, const Effect& e, std::uint64_t seed, const std::string& what) {
  if (e.terms.empty()) throw ConfigError(what + ": effect has no terms");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(3 * templ.n_vertices());
  for (const auto& t : e.terms) d += t.weight * effect_direction(templ, t.generator, seed);
  const double norm = d.norm();
  if (!(norm > 0.0)) throw ConfigError(what + ": effect terms cancel out");
  return d / norm;
}

// --- JSON -------------------------------------------------------------------

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

Effect parse_effect(const json& j, const std::string& where, const char* size_key) {
  check_keys(j, {size_key, "terms", "generator", "column"}, where);
  Effect e;
  e.magnitude = j.value(size_key, 0.0);
  if (j.contains("generator")) e.terms.push_back({j.at("generator").get<std::string>(), 1.0});
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      check_keys(t, {"generator", "weight"}, where + ".terms");
      e.terms.push_back({t.at("generator").get<std::string>(), t.value("weight", 1.0)});
    }
  }
  return e;
}

json effect_json(const Effect& e, const char* size_key) {
  json terms = json::array();
  for (const auto& t : e.terms) terms.push_back({{"generator", t.generator}, {"weight", t.weight}});
  return {{size_key, e.magnitude}, {"terms", terms}};
}

ClassParams parse_class(const json& j, const std::string& where) {
  check_keys(j, {"mean", "sd", "p"}, where);
  ClassParams c;
  c.mean = j.value("mean", 0.0);
  c.sd = j.value("sd", 0.0);
  c.p = j.value("p", 0.5);
  if (c.sd < 0.0 || c.p < 0.0 || c.p > 1.0) throw ConfigError(where + ": sd must be >= 0 and p in [0, 1]");
  return c;
}

}  // namespace

SynthSpec parse_synth_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, {"n_controls", "n_cases", "resolution", "class_effect", "confounders", "confounder_effects",
                   "variation_modes", "variation_sd", "variation_generators", "noise_sd", "seed"},
               "synth spec");
    SynthSpec s;
    s.n_controls = j.value("n_controls", s.n_controls);
    s.n_cases = j.value("n_cases", s.n_cases);
    s.resolution = j.value("resolution", s.resolution);
    s.variation_modes = j.value("variation_modes", s.variation_modes);
    s.variation_sd = j.value("variation_sd", s.variation_sd);
    s.variation_generators = j.value("variation_generators", s.variation_generators);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.seed = j.value("seed", s.seed);
    if (j.contains("class_effect")) s.class_effect = parse_effect(j.at("class_effect"), "class_effect", "magnitude");
    for (const auto& c : j.value("confounders", json::array())) {
      check_keys(c, {"name", "kind", "controls", "cases", "intercept", "terms", "sd"}, "confounders");
      ConfounderSpec cs;
      cs.name = c.at("name").get<std::string>();
      const std::string kind = c.value("kind", "normal");
      const std::string where = "confounder '" + cs.name + "'";
      if (kind == "normal" || kind == "bernoulli") {
        cs.kind = kind == "normal" ? ConfounderSpec::Kind::Normal : ConfounderSpec::Kind::Bernoulli;
        cs.controls = parse_class(c.at("controls"), where + ".controls");
        cs.cases = parse_class(c.at("cases"), where + ".cases");
      } else if (kind == "linear") {
        cs.kind = ConfounderSpec::Kind::Linear;
        cs.intercept = c.value("intercept", 0.0);
        cs.sd = c.value("sd", 0.0);
        const json terms = c.value("terms", json::object());
        for (const auto& [name, coef] : terms.items()) cs.terms.emplace_back(name, coef.get<double>());
      } else {
        throw ConfigError(where + ": kind must be normal, bernoulli or linear");
      }
      s.confounders.push_back(std::move(cs));
    }
    for (const auto& e : j.value("confounder_effects", json::array())) {
      ConfounderEffect ce;
      ce.column = e.at("column").get<std::string>();
      ce.effect = parse_effect(e, "confounder_effects", "slope");
      s.confounder_effects.push_back(std::move(ce));
    }
    if (s.n_controls < 0 || s.n_cases < 0 || s.n_controls + s.n_cases < 1)
      throw ConfigError("synth spec: need at least one subject");
    if (s.noise_sd < 0.0 || s.variation_sd < 0.0) throw ConfigError("synth spec: SDs must be >= 0");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
}

SynthSpec load_synth_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open synth spec '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

std::string synth_spec_json(const SynthSpec& s) {
  json conf = json::array();
  for (const auto& c : s.confounders) {
    json cj = {{"name", c.name}};
    auto cls = [](const ClassParams& p) { return json{{"mean", p.mean}, {"sd", p.sd}, {"p", p.p}}; };
    switch (c.kind) {
      case ConfounderSpec::Kind::Normal:
      case ConfounderSpec::Kind::Bernoulli:
        cj["kind"] = c.kind == ConfounderSpec::Kind::Normal ? "normal" : "bernoulli";
        cj["controls"] = cls(c.controls);
        cj["cases"] = cls(c.cases);
        break;
      case ConfounderSpec::Kind::Linear: {
        cj["kind"] = "linear";
        cj["intercept"] = c.intercept;
        cj["sd"] = c.sd;
        json t = json::object();
        for (const auto& [name, coef] : c.terms) t[name] = coef;
        cj["terms"] = t;
        break;
      }
    }
    conf.push_back(cj);
  }
  json effects = json::array();
  for (const auto& e : s.confounder_effects) {
    json ej = effect_json(e.effect, "slope");
    ej["column"] = e.column;
    effects.push_back(ej);
  }
  json j = {{"n_controls", s.n_controls},     {"n_cases", s.n_cases},
            {"resolution", s.resolution},     {"class_effect", effect_json(s.class_effect, "magnitude")},
            {"confounders", conf},            {"confounder_effects", effects},
            {"variation_modes", s.variation_modes}, {"variation_sd", s.variation_sd},
            {"variation_generators", s.variation_generators},
            {"noise_sd", s.noise_sd},         {"seed", s.seed}};
  return j.dump(2);
}

SynthResult generate(const SynthSpec& spec) {
  const TriMesh templ = make_template(spec.resolution);
  const Eigen::Index n_v = templ.n_vertices();
  const double root_n = std::sqrt(static_cast<double>(n_v));
  const Eigen::VectorXd base = flatten(templ).coords();
  const int n = spec.n_controls + spec.n_cases;

  SynthResult out;
  GroundTruth& gt = out.truth;
  gt.class_direction = spec.class_effect.terms.empty() ? Eigen::VectorXd::Zero(base.size())
                                                       : effect_unit(templ, spec.class_effect, spec.seed, "class_effect");
  for (const auto& g : spec.variation_generators) gt.variation_directions.push_back(effect_direction(templ, g, spec.seed));
  for (int k = 0; k < spec.variation_modes; ++k)
    gt.variation_directions.push_back(effect_direction(templ, "random:" + std::to_string(k), spec.seed));

  // Demographics, one stream per subject.
  const auto n_cols = static_cast<Eigen::Index>(spec.confounders.size());
  Eigen::MatrixXd cols(n, n_cols);
  std::vector<std::string> names;
  for (const auto& c : spec.confounders) {
    if (std::find(names.begin(), names.end(), c.name) != names.end())
      throw ConfigError("synth spec: duplicate confounder '" + c.name + "'");
    for (const auto& [term, coef] : c.terms)
      if (std::find(names.begin(), names.end(), term) == names.end())
        throw ConfigError("confounder '" + c.name + "' refers to '" + term + "', which is not an earlier column");
    names.push_back(c.name);
  }
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) streams.push_back(make_stream(spec.seed, static_cast<std::uint64_t>(i) + 1));
  for (int i = 0; i < n; ++i) {
    Rng& rng = streams[static_cast<std::size_t>(i)];
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const bool is_case = i >= spec.n_controls;
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      const ConfounderSpec& cs = spec.confounders[static_cast<std::size_t>(c)];
      const ClassParams& p = is_case ? cs.cases : cs.controls;
      double v = 0.0;
      switch (cs.kind) {
        case ConfounderSpec::Kind::Normal: v = p.mean + p.sd * gauss(rng); break;
        case ConfounderSpec::Kind::Bernoulli: v = unif(rng) < p.p ? 1.0 : 0.0; break;
        case ConfounderSpec::Kind::Linear: {
          v = cs.intercept + cs.sd * gauss(rng);
          for (const auto& [term, coef] : cs.terms) {
            const auto t = std::find(names.begin(), names.end(), term) - names.begin();
            v += coef * cols(i, t);
          }
          break;
        }
      }
      cols(i, c) = v;
    }
  }

  struct Applied {
    Eigen::Index column;
    Eigen::VectorXd disp;  // full displacement per SD
  };
  std::vector<Applied> applied;
  for (const auto& ce : spec.confounder_effects) {
    const auto it = std::find(names.begin(), names.end(), ce.column);
    if (it == names.end()) throw ConfigError("confounder effect refers to unknown column '" + ce.column + "'");
    const Eigen::Index c = it - names.begin();
    const Eigen::VectorXd d = effect_unit(templ, ce.effect, spec.seed, "confounder effect '" + ce.column + "'");
    gt.confounder_directions[ce.column] = d;
    const double mean = cols.col(c).mean();
    const double sd = std::sqrt((cols.col(c).array() - mean).square().mean());
    if (!(sd > 0.0)) throw DataError("confounder '" + ce.column + "' is constant; cannot standardise its effect");
    gt.standardization[ce.column] = {mean, sd};
    applied.push_back({c, ce.effect.magnitude * root_n * d});
  }

  const Eigen::VectorXd class_disp = spec.class_effect.magnitude * root_n * gt.class_direction;
  ShapeMatrix shapes(n, base.size());
  for (int i = 0; i < n; ++i) {
    Rng& rng = streams[static_cast<std::size_t>(i)];
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd x = base;
    if (i >= spec.n_controls) x += class_disp;
    for (const auto& a : applied) {
      const auto& [mean, sd] = gt.standardization[names[static_cast<std::size_t>(a.column)]];
      x += ((cols(i, a.column) - mean) / sd) * a.disp;
    }
    for (const auto& v : gt.variation_directions) x += (spec.variation_sd * root_n * gauss(rng)) * v;
    if (spec.noise_sd > 0.0)
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += spec.noise_sd * gauss(rng);
    shapes.row(i) = x.transpose();
  }

  // Reject shapes whose shells turned inside out or whose wall vanished.
  const auto endo = region_faces(templ, {Region::LvEndo});
  const auto epi = region_faces(templ, {Region::LvEpi});
  const auto rv = region_faces(templ, {Region::Rv, Region::Septum});
  for (int i = 0; i < n; ++i) {
    const TriMesh m = unflatten(row_shape(shapes, i), templ);
    const double v_endo = signed_volume_mm3(m, endo), v_epi = signed_volume_mm3(m, epi), v_rv = signed_volume_mm3(m, rv);
    if (!(v_endo > 0.0 && v_epi > v_endo && v_rv > 0.0))
      throw DataError("synth: subject " + std::to_string(i) +
                      " has a non-positive cavity or wall volume; effects are too large for the template");
  }

  Cohort& c = out.cohort;
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "subj%04d", i);
    c.ids.emplace_back(buf);
    c.labels.push_back(i >= spec.n_controls ? 1 : 0);
  }
  c.shapes = std::move(shapes);
  c.column_names = names;
  c.columns = cols;
  c.templ = templ;
  return out;
}

void write_synth(const fs::path& out_dir, const SynthSpec& spec, const SynthResult& r) {
  fs::create_directories(out_dir);
  write_corpus(out_dir / "meshes", r.cohort.ids, r.cohort.shapes, r.cohort.templ);

  std::ofstream demo(out_dir / "demographics.csv");
  demo << "subject_id,class";
  for (const auto& name : r.cohort.column_names) demo << ',' << name;
  demo << '\n';
  for (Eigen::Index i = 0; i < r.cohort.size(); ++i) {
    demo << r.cohort.ids[static_cast<std::size_t>(i)] << ',' << r.cohort.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < r.cohort.columns.cols(); ++c) demo << ',' << format_double(r.cohort.columns(i, c));
    demo << '\n';
  }
  if (!demo) throw FormatError("cannot write demographics under '" + out_dir.string() + "'");

  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json gt;
  gt["class_direction"] = vec(r.truth.class_direction);
  gt["class_magnitude"] = spec.class_effect.magnitude;
  json conf = json::object();
  for (const auto& [name, d] : r.truth.confounder_directions) {
    const auto& [mean, sd] = r.truth.standardization.at(name);
    conf[name] = {{"direction", vec(d)}, {"mean", mean}, {"sd", sd}};
  }
  gt["confounder_directions"] = conf;
  gt["spec"] = json::parse(synth_spec_json(spec));
  std::ofstream g(out_dir / "ground_truth.json");
  g << gt.dump(1) << '\n';
  if (!g) throw FormatError("cannot write ground truth under '" + out_dir.string() + "'");
}

}  // namespace morpho
