#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morpho/cohort.hpp"
#include "morpho/confound.hpp"
#include "morpho/logistic.hpp"
#include "morpho/measure.hpp"
#include "morpho/pca.hpp"
#include "morpho/pls.hpp"

namespace morpho {

enum class DrMethod { Pca, Pls, PcaPls };

std::string dr_name(DrMethod m);        // pca | pls | pca+pls
DrMethod parse_dr(const std::string&);  // throws UsageError

struct PipelineConfig {
  DrMethod dr = DrMethod::PcaPls;
  Eigen::Index pca_modes = 20;
  Eigen::Index pls_modes = 3;
  bool adjust = false;   // confounders enter the classifier
  bool deflate = false;  // confounder deflation before reduction
  TrainingSelector deflate_train = TrainingSelector::controls();
  Eigen::Index deflate_components = 0;  // 0: number of confounders
  std::vector<std::string> confounders;
  double ridge = kDefaultRidge;
  int cv_folds = 10;
  std::uint64_t seed = 0;
  double whiten_fraction = kDefaultWhitenFraction;

  void validate() const;  // throws ConfigError
  std::string label() const;
};

/// Discriminating direction in full shape space.
struct DiscriminativePattern {
  Eigen::VectorXd raw;           // w_X, scores use these
  Eigen::VectorXd standardized;  // unit, whitened; for display and comparison
  Eigen::VectorXd mean_shape;    // mu_X of the analysed training shapes
  double score_sd = 0.0;         // SD of <standardized, X_i - mu> over training subjects, mm
  double raw_score_sd = 0.0;     // SD of <raw, X_i - mu>
  Eigen::Index whiten_modes = 0;
  std::uint64_t basis_id = 0;    // fingerprint of the whitening model
};

/// Fitted reduction + classifier. Immutable once built.
struct Classifier {
  PipelineConfig config;
  std::optional<DeflationModel> deflation;
  Eigen::VectorXd mean;           // centring of the analysed shapes
  std::optional<PcaModel> pca;    // PCA and PCA+PLS
  std::optional<PlsModel> pls;    // PLS and PCA+PLS
  Eigen::MatrixXd pls_basis;      // orthonormal columns; empty for PCA
  Standardizer adjust_standardizer;
  LogisticModel logistic;

  // Deflated shapes when the pipeline deflates, else the raw shapes.
  ShapeMatrix analysed_shapes(const Cohort& cohort) const;
  Eigen::MatrixXd reduce(const ShapeMatrix& analysed) const;
  Eigen::MatrixXd features(const Cohort& cohort) const;
  Eigen::VectorXd decision(const Cohort& cohort) const;
  // w_X: logistic shape coefficients mapped back to full shape space.
  Eigen::VectorXd shape_coefficients() const;
};

struct FittedPipeline {
  Classifier classifier;
  DiscriminativePattern pattern;
  PcaModel whitening;
};

Classifier fit_classifier(const Cohort& cohort, const PipelineConfig& config);

/// Deflation (optional), reduction, logistic fit, back-projection and
/// standardisation. `whitening` fixes the basis used for the standardised
/// pattern so patterns from different fits are comparable; when null, a full
/// PCA of the analysed training shapes is used. The pattern sign is chosen so
/// that cases score higher than controls on average.
FittedPipeline fit_pipeline(const Cohort& cohort, const PipelineConfig& config,
                            const PcaModel* whitening = nullptr);

/// w_X = K_pca^T K_pls^T w_red with either factor optional.
Eigen::VectorXd backproject(const Eigen::VectorXd& w_red, const PcaModel* pca, const Eigen::MatrixXd* pls_basis);

double score(const DiscriminativePattern& pattern, const ShapeVector& shape);

/// mean + lambda * standardized, lambda in mm; |lambda| is clamped to
/// 3 * score_sd with a warning.
ShapeVector representative_shape(const DiscriminativePattern& pattern, double lambda);

/// Dot product of standardised patterns. Throws ConfigError when the patterns
/// were whitened with different bases.
double pattern_similarity(const DiscriminativePattern& a, const DiscriminativePattern& b);

std::uint64_t basis_fingerprint(const PcaModel& whitening);

/// Measurements of representative shapes at lambda = k * score_sd for each k.
std::vector<MeasurementSet> measurement_response(const DiscriminativePattern& pattern, const TriMesh& templ,
                                                 const std::vector<double>& sd_multiples);

// Seeded stratified assignment: fold index per subject.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

struct CvResult {
  double mean_log_loss = 0.0;      // pooled over all held-out subjects
  std::vector<int> fold_of;
  Eigen::VectorXd held_out_decision;
};

/// Every fitting step (deflation, reduction, classifier) runs inside the
/// training folds.
CvResult cross_validate(const Cohort& cohort, const PipelineConfig& config);

}  // namespace morpho
