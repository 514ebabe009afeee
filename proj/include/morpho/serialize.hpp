#pragma once

#include <filesystem>
#include <string>

#include "morpho/discriminant.hpp"
#include "morpho/regression_shape.hpp"

namespace morpho {

inline constexpr int kModelFormatVersion = 1;

/// Classifier, pattern and template connectivity of a fitted pipeline.
struct SavedClassifier {
  Classifier classifier;
  DiscriminativePattern pattern;
  TriMesh templ;
};

struct SavedRegression {
  ShapeRegressionModel model;
  std::string target;
  TriMesh templ;
};

// JSON text with "kind" and "version" fields; doubles round-trip exactly.
std::string classifier_to_json(const SavedClassifier& m);
SavedClassifier classifier_from_json(const std::string& text);
std::string regression_to_json(const SavedRegression& m);
SavedRegression regression_from_json(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

SavedClassifier load_classifier(const std::filesystem::path& path);
SavedRegression load_regression(const std::filesystem::path& path);

// Config as JSON text; used by models, manifests and experiment grids.
std::string config_to_json(const PipelineConfig& c);
PipelineConfig config_from_json(const std::string& text);
std::vector<PipelineConfig> configs_from_json(const std::string& text);  // array, or {"configs": [...]}

}  // namespace morpho
