#include "morpho/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "morpho/error.hpp"

namespace morpho {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), m.rows(), m.cols()) = m;
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd mat_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto d = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(d.size()) != rows * cols) throw FormatError("matrix data length does not match its shape");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(d.data(), rows, cols);
}

json pca_json(const PcaModel& p) {
  return {{"mean", vec_json(p.mean)},
          {"components", mat_json(p.components)},
          {"variances", vec_json(p.variances)},
          {"total_variance", p.total_variance},
          {"n_samples", p.n_samples}};
}

PcaModel pca_from(const json& j) {
  PcaModel p;
  p.mean = vec_from(j.at("mean"));
  p.components = mat_from(j.at("components"));
  p.variances = vec_from(j.at("variances"));
  p.total_variance = j.at("total_variance").get<double>();
  p.n_samples = j.at("n_samples").get<Eigen::Index>();
  return p;
}

json pls_json(const PlsModel& p) {
  return {{"x_weights", mat_json(p.x_weights)},     {"y_weights", mat_json(p.y_weights)},
          {"x_loadings", mat_json(p.x_loadings)},   {"y_loadings", mat_json(p.y_loadings)},
          {"x_rotations", mat_json(p.x_rotations)}, {"coefficients", mat_json(p.coefficients)},
          {"n_requested", p.n_requested}};
}

PlsModel pls_from(const json& j) {
  PlsModel p;
  p.x_weights = mat_from(j.at("x_weights"));
  p.y_weights = mat_from(j.at("y_weights"));
  p.x_loadings = mat_from(j.at("x_loadings"));
  p.y_loadings = mat_from(j.at("y_loadings"));
  p.x_rotations = mat_from(j.at("x_rotations"));
  p.coefficients = mat_from(j.at("coefficients"));
  p.n_requested = j.at("n_requested").get<Eigen::Index>();
  return p;
}

json standardizer_json(const Standardizer& s) {
  return {{"names", s.names}, {"means", vec_json(s.means)}, {"sds", vec_json(s.sds)}};
}

Standardizer standardizer_from(const json& j) {
  Standardizer s;
  s.names = j.at("names").get<std::vector<std::string>>();
  s.means = vec_from(j.at("means"));
  s.sds = vec_from(j.at("sds"));
  return s;
}

json mesh_json(const TriMesh& m) {
  json faces = json::array();
  for (const Face& f : m.faces) faces.push_back({f[0], f[1], f[2]});
  json regions = json::array();
  for (Region r : m.regions) regions.push_back(std::string(region_name(r)));
  return {{"vertices", mat_json(m.vertices)}, {"faces", faces}, {"regions", regions}};
}

TriMesh mesh_from(const json& j) {
  TriMesh m;
  m.vertices = mat_from(j.at("vertices"));
  for (const auto& f : j.at("faces")) m.faces.push_back({f.at(0).get<std::int32_t>(), f.at(1).get<std::int32_t>(), f.at(2).get<std::int32_t>()});
  for (const auto& r : j.at("regions")) m.regions.push_back(parse_region(r.get<std::string>()));
  m.validate();
  return m;
}

json config_j(const PipelineConfig& c) {
  json j = {{"dr", dr_name(c.dr)},
            {"pca_modes", c.pca_modes},
            {"pls_modes", c.pls_modes},
            {"adjust", c.adjust},
            {"deflate", c.deflate},
            {"deflate_train", c.deflate_train.name()},
            {"deflate_components", c.deflate_components},
            {"confounders", c.confounders},
            {"ridge", c.ridge},
            {"cv_folds", c.cv_folds},
            {"seed", c.seed},
            {"whiten_fraction", c.whiten_fraction}};
  if (c.deflate_train.kind == TrainingSelector::Kind::Ids) j["deflate_train_ids"] = c.deflate_train.ids;
  return j;
}

PipelineConfig config_from(const json& j) {
  static const std::vector<std::string> known = {"dr",        "pca_modes",   "pls_modes", "adjust",
                                                 "deflate",   "deflate_train", "deflate_components",
                                                 "confounders", "ridge",     "cv_folds",  "seed",
                                                 "whiten_fraction", "deflate_train_ids"};
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");
  PipelineConfig c;
  if (j.contains("dr")) c.dr = parse_dr(j.at("dr").get<std::string>());
  c.pca_modes = j.value("pca_modes", c.pca_modes);
  c.pls_modes = j.value("pls_modes", c.pls_modes);
  c.adjust = j.value("adjust", c.adjust);
  c.deflate = j.value("deflate", c.deflate);
  if (j.contains("deflate_train")) {
    const auto name = j.at("deflate_train").get<std::string>();
    if (name == "ids") {
      c.deflate_train.kind = TrainingSelector::Kind::Ids;
      c.deflate_train.ids = j.at("deflate_train_ids").get<std::vector<std::string>>();
    } else {
      c.deflate_train = TrainingSelector::parse(name);
    }
  }
  c.deflate_components = j.value("deflate_components", c.deflate_components);
  c.confounders = j.value("confounders", c.confounders);
  c.ridge = j.value("ridge", c.ridge);
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  c.seed = j.value("seed", c.seed);
  c.whiten_fraction = j.value("whiten_fraction", c.whiten_fraction);
  c.validate();
  return c;
}

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void check_kind(const json& j, const char* kind) {
  if (!j.is_object() || j.value("kind", std::string()) != kind)
    throw FormatError(std::string("expected a JSON document of kind '") + kind + "'");
  const int v = j.value("version", 0);
  if (v != kModelFormatVersion)
    throw FormatError("unsupported " + std::string(kind) + " version " + std::to_string(v));
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string config_to_json(const PipelineConfig& c) { return config_j(c).dump(); }

PipelineConfig config_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "config");
  return guarded("config", [&] { return config_from(j); });
}

std::vector<PipelineConfig> configs_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "config grid");
  return guarded("config grid", [&] {
    const json& arr = j.is_object() ? j.at("configs") : j;
    if (!arr.is_array() || arr.empty()) throw ConfigError("config grid must be a non-empty array");
    std::vector<PipelineConfig> out;
    for (const auto& c : arr) out.push_back(config_from(c));
    return out;
  });
}

std::string classifier_to_json(const SavedClassifier& m) {
  const Classifier& c = m.classifier;
  json j;
  j["kind"] = "morpho.classifier";
  j["version"] = kModelFormatVersion;
  j["config"] = config_j(c.config);
  j["mean"] = vec_json(c.mean);
  j["pca"] = c.pca ? pca_json(*c.pca) : json(nullptr);
  j["pls"] = c.pls ? pls_json(*c.pls) : json(nullptr);
  j["pls_basis"] = mat_json(c.pls_basis);
  j["adjust_standardizer"] = standardizer_json(c.adjust_standardizer);
  if (c.deflation) {
    const DeflationModel& d = *c.deflation;
    j["deflation"] = {{"coeffs", mat_json(d.coeffs)},
                      {"training_mean", vec_json(d.training_mean)},
                      {"standardization", standardizer_json(d.standardization)},
                      {"training_ids", d.training_ids},
                      {"n_pls_components", d.n_pls_components},
                      {"n_components_used", d.n_components_used}};
  } else {
    j["deflation"] = nullptr;
  }
  const LogisticModel& l = c.logistic;
  j["logistic"] = {{"coeffs", vec_json(l.coeffs)}, {"intercept", l.intercept},   {"ridge", l.ridge},
                   {"n_shape", l.n_shape},         {"iterations", l.iterations}, {"gradient_norm", l.gradient_norm}};
  const DiscriminativePattern& p = m.pattern;
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(p.basis_id));
  j["pattern"] = {{"raw", vec_json(p.raw)},
                  {"standardized", vec_json(p.standardized)},
                  {"mean_shape", vec_json(p.mean_shape)},
                  {"score_sd", p.score_sd},
                  {"raw_score_sd", p.raw_score_sd},
                  {"whiten_modes", p.whiten_modes},
                  {"basis_id", id}};
  j["template"] = mesh_json(m.templ);
  return j.dump();
}

SavedClassifier classifier_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "model");
  check_kind(j, "morpho.classifier");
  return guarded("model", [&] {
    SavedClassifier m;
    Classifier& c = m.classifier;
    c.config = config_from(j.at("config"));
    c.mean = vec_from(j.at("mean"));
    if (!j.at("pca").is_null()) c.pca = pca_from(j.at("pca"));
    if (!j.at("pls").is_null()) c.pls = pls_from(j.at("pls"));
    c.pls_basis = mat_from(j.at("pls_basis"));
    c.adjust_standardizer = standardizer_from(j.at("adjust_standardizer"));
    if (!j.at("deflation").is_null()) {
      const json& d = j.at("deflation");
      DeflationModel dm;
      dm.coeffs = mat_from(d.at("coeffs"));
      dm.training_mean = vec_from(d.at("training_mean"));
      dm.standardization = standardizer_from(d.at("standardization"));
      dm.training_ids = d.at("training_ids").get<std::vector<std::string>>();
      dm.n_pls_components = d.at("n_pls_components").get<Eigen::Index>();
      dm.n_components_used = d.at("n_components_used").get<Eigen::Index>();
      c.deflation = std::move(dm);
    }
    const json& l = j.at("logistic");
    c.logistic.coeffs = vec_from(l.at("coeffs"));
    c.logistic.intercept = l.at("intercept").get<double>();
    c.logistic.ridge = l.at("ridge").get<double>();
    c.logistic.n_shape = l.at("n_shape").get<Eigen::Index>();
    c.logistic.iterations = l.at("iterations").get<int>();
    c.logistic.gradient_norm = l.at("gradient_norm").get<double>();
    const json& p = j.at("pattern");
    m.pattern.raw = vec_from(p.at("raw"));
    m.pattern.standardized = vec_from(p.at("standardized"));
    m.pattern.mean_shape = vec_from(p.at("mean_shape"));
    m.pattern.score_sd = p.at("score_sd").get<double>();
    m.pattern.raw_score_sd = p.at("raw_score_sd").get<double>();
    m.pattern.whiten_modes = p.at("whiten_modes").get<Eigen::Index>();
    m.pattern.basis_id = std::stoull(p.at("basis_id").get<std::string>(), nullptr, 16);
    m.templ = mesh_from(j.at("template"));
    if (3 * m.templ.n_vertices() != c.mean.size()) throw FormatError("model template does not match its mean shape");
    return m;
  });
}

std::string regression_to_json(const SavedRegression& m) {
  json j;
  j["kind"] = "morpho.regression";
  j["version"] = kModelFormatVersion;
  j["target"] = m.target;
  j["pls"] = pls_json(m.model.pls);
  j["mean_shape"] = vec_json(m.model.mean_shape);
  j["value_mean"] = m.model.value_mean;
  j["value_sd"] = m.model.value_sd;
  j["pca_for_metric"] = pca_json(m.model.pca_for_metric);
  j["metric_modes"] = m.model.metric_modes;
  j["template"] = mesh_json(m.templ);
  return j.dump();
}

SavedRegression regression_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "regression model");
  check_kind(j, "morpho.regression");
  return guarded("regression model", [&] {
    SavedRegression m;
    m.target = j.at("target").get<std::string>();
    m.model.pls = pls_from(j.at("pls"));
    m.model.mean_shape = vec_from(j.at("mean_shape"));
    m.model.value_mean = j.at("value_mean").get<double>();
    m.model.value_sd = j.at("value_sd").get<double>();
    m.model.pca_for_metric = pca_from(j.at("pca_for_metric"));
    m.model.metric_modes = j.at("metric_modes").get<Eigen::Index>();
    m.templ = mesh_from(j.at("template"));
    const Eigen::Index dim = 3 * m.templ.n_vertices();
    if (m.model.mean_shape.size() != dim || m.model.pls.coefficients.rows() != dim ||
        m.model.pca_for_metric.mean.size() != dim)
      throw FormatError("regression model template does not match its shape vectors");
    return m;
  });
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
}

SavedClassifier load_classifier(const fs::path& path) {
  try {
    return classifier_from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

SavedRegression load_regression(const fs::path& path) {
  try {
    return regression_from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace morpho
