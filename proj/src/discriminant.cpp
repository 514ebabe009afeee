#include "morpho/discriminant.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/parallel.hpp"
#include "morpho/random.hpp"

namespace morpho {

std::string dr_name(DrMethod m) {
  switch (m) {
    case DrMethod::Pca: return "pca";
    case DrMethod::Pls: return "pls";
    case DrMethod::PcaPls: return "pca+pls";
  }
  return "?";
}

DrMethod parse_dr(const std::string& s) {
  if (s == "pca") return DrMethod::Pca;
  if (s == "pls") return DrMethod::Pls;
  if (s == "pca+pls" || s == "pca_pls") return DrMethod::PcaPls;
  throw UsageError("unknown reduction '" + s + "' (expected pca, pls or pca+pls)");
}

void PipelineConfig::validate() const {
  if (dr != DrMethod::Pls && pca_modes < 1) throw ConfigError("pca_modes must be >= 1");
  if (dr != DrMethod::Pca && pls_modes < 1) throw ConfigError("pls_modes must be >= 1");
  if (dr == DrMethod::PcaPls && pls_modes > pca_modes)
    throw ConfigError("pca+pls needs pls_modes <= pca_modes (" + std::to_string(pls_modes) + " > " +
                      std::to_string(pca_modes) + ")");
  if ((adjust || deflate) && confounders.empty()) throw ConfigError("adjustment and deflation need confounders");
  if (ridge < 0.0 || !std::isfinite(ridge)) throw ConfigError("ridge must be finite and >= 0");
  if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
  if (!(whiten_fraction > 0.0 && whiten_fraction <= 1.0)) throw ConfigError("whiten_fraction must be in (0, 1]");
  if (deflate_components < 0) throw ConfigError("deflate_components must be >= 0");
}

std::string PipelineConfig::label() const {
  std::ostringstream os;
  switch (dr) {
    case DrMethod::Pca: os << "pca" << pca_modes; break;
    case DrMethod::Pls: os << "pls" << pls_modes; break;
    case DrMethod::PcaPls: os << "pca" << pca_modes << "+pls" << pls_modes; break;
  }
  if (adjust) os << "/adj";
  if (deflate) os << "/defl:" << deflate_train.name();
  return os.str();
}

ShapeMatrix Classifier::analysed_shapes(const Cohort& cohort) const {
  if (cohort.dim() != mean.size()) throw DimensionError("cohort shape width does not match the classifier");
  if (!deflation) return cohort.shapes;
  if (cohort.deflated) throw ConfigError("cohort is already deflated; the pipeline deflates internally");
  return deflation->residuals(cohort.shapes, cohort.column_matrix(deflation->confounders()));
}

Eigen::MatrixXd Classifier::reduce(const ShapeMatrix& analysed) const {
  const Eigen::MatrixXd centred = analysed.rowwise() - mean.transpose();
  switch (config.dr) {
    case DrMethod::Pca: return centred * pca->components.transpose();
    case DrMethod::Pls: return centred * pls_basis;
    case DrMethod::PcaPls: return (centred * pca->components.transpose()) * pls_basis;
  }
  return {};
}

Eigen::MatrixXd Classifier::features(const Cohort& cohort) const {
  Eigen::MatrixXd z = reduce(analysed_shapes(cohort));
  if (!config.adjust) return z;
  const Eigen::MatrixXd m = adjust_standardizer.apply(cohort.column_matrix(config.confounders));
  Eigen::MatrixXd f(z.rows(), z.cols() + m.cols());
  f << z, m;
  return f;
}

Eigen::VectorXd Classifier::decision(const Cohort& cohort) const { return logistic.decision(features(cohort)); }

Eigen::VectorXd Classifier::shape_coefficients() const {
  const Eigen::VectorXd w = logistic.shape_coeffs();
  const PcaModel* p = pca ? &*pca : nullptr;
  const Eigen::MatrixXd* b = pls_basis.size() > 0 ? &pls_basis : nullptr;
  return backproject(w, p, b);
}

Classifier fit_classifier(const Cohort& cohort, const PipelineConfig& config) {
  config.validate();
  cohort.validate();
  if (cohort.count(0) == 0 || cohort.count(1) == 0) throw DataError("fit needs both classes present");

  Classifier c;
  c.config = config;
  ShapeMatrix x = cohort.shapes;
  if (config.deflate) {
    if (cohort.deflated) throw ConfigError("cohort is already deflated; the pipeline deflates internally");
    c.deflation = deflation_fit(cohort, config.confounders, config.deflate_train, config.deflate_components);
    x = deflate(*c.deflation, cohort);
  }
  c.mean = x.colwise().mean().transpose();
  const Eigen::VectorXd y = cohort.label_vector();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::MatrixXd centred = x.rowwise() - c.mean.transpose();

  auto pls_stage = [&](const Eigen::MatrixXd& block) {
    c.pls = pls_fit(block, yc, config.pls_modes);
    if (c.pls->n_components() == 0) throw NumericalError("PLS found no direction covarying with the labels");
    c.pls_basis = pls_dr_basis(*c.pls);
  };
  switch (config.dr) {
    case DrMethod::Pca: c.pca = pca_fit(x, config.pca_modes); break;
    case DrMethod::Pls: pls_stage(centred); break;
    case DrMethod::PcaPls:
      c.pca = pca_fit(x, config.pca_modes);
      pls_stage(centred * c.pca->components.transpose());
      break;
  }
  Eigen::MatrixXd z = c.reduce(x);
  if (config.adjust) {
    const Eigen::MatrixXd raw = cohort.column_matrix(config.confounders);
    c.adjust_standardizer = Standardizer::fit(config.confounders, raw);
    const Eigen::MatrixXd m = c.adjust_standardizer.apply(raw);
    Eigen::MatrixXd f(z.rows(), z.cols() + m.cols());
    f << z, m;
    c.logistic = logistic_fit(f, y, config.ridge, z.cols());
  } else {
    c.logistic = logistic_fit(z, y, config.ridge, z.cols());
  }
  return c;
}

namespace {

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

FittedPipeline fit_pipeline(const Cohort& cohort, const PipelineConfig& config, const PcaModel* whitening) {
  FittedPipeline out;
  out.classifier = fit_classifier(cohort, config);
  const Classifier& c = out.classifier;
  const ShapeMatrix x = c.analysed_shapes(cohort);

  if (whitening) {
    if (whitening->dim() != x.cols()) throw DimensionError("whitening model width does not match the cohort");
    out.whitening = *whitening;
  } else {
    out.whitening = pca_fit_full(x);
  }

  DiscriminativePattern& p = out.pattern;
  p.mean_shape = c.mean;
  p.raw = c.shape_coefficients();
  p.whiten_modes = out.whitening.modes_for_fraction(config.whiten_fraction);
  p.standardized = pca_whiten_direction(out.whitening, p.raw, p.whiten_modes);
  p.basis_id = basis_fingerprint(out.whitening);

  const Eigen::MatrixXd centred = x.rowwise() - c.mean.transpose();
  Eigen::VectorXd raw_scores = centred * p.raw;
  double case_mean = 0.0;
  const auto cases = cohort.class_indices(1);
  for (auto i : cases) case_mean += raw_scores(i);
  if (case_mean < 0.0) {
    p.raw = -p.raw;
    p.standardized = -p.standardized;
    raw_scores = -raw_scores;
  }
  p.raw_score_sd = sample_sd(raw_scores);
  p.score_sd = sample_sd(centred * p.standardized);
  return out;
}

Eigen::VectorXd backproject(const Eigen::VectorXd& w_red, const PcaModel* pca, const Eigen::MatrixXd* pls_basis) {
  Eigen::VectorXd w = w_red;
  if (pls_basis) {
    if (pls_basis->cols() != w.size())
      throw DimensionError("backproject: PLS basis has " + std::to_string(pls_basis->cols()) + " columns, w has " +
                           std::to_string(w.size()) + " entries");
    w = *pls_basis * w;
  }
  if (pca) {
    if (pca->n_components() != w.size())
      throw DimensionError("backproject: PCA has " + std::to_string(pca->n_components()) + " modes, w has " +
                           std::to_string(w.size()) + " entries");
    w = pca->components.transpose() * w;
  }
  return w;
}

double score(const DiscriminativePattern& pattern, const ShapeVector& shape) {
  if (shape.size() != pattern.raw.size())
    throw DimensionError("score: shape has " + std::to_string(shape.size()) + " coordinates, pattern has " +
                         std::to_string(pattern.raw.size()));
  return pattern.raw.dot(shape.coords() - pattern.mean_shape);
}

ShapeVector representative_shape(const DiscriminativePattern& pattern, double lambda) {
  const double limit = 3.0 * pattern.score_sd;
  if (std::abs(lambda) > limit) {
    std::ostringstream os;
    os << "representative shape: lambda " << lambda << " clamped to +/-" << limit << " (3 SD)";
    warn(os.str());
    lambda = std::clamp(lambda, -limit, limit);
  }
  return ShapeVector(pattern.mean_shape + lambda * pattern.standardized);
}

double pattern_similarity(const DiscriminativePattern& a, const DiscriminativePattern& b) {
  if (a.standardized.size() != b.standardized.size()) throw DimensionError("patterns have different lengths");
  if (a.basis_id != b.basis_id || a.whiten_modes != b.whiten_modes)
    throw ConfigError("patterns were standardised with different whitening bases");
  return std::clamp(a.standardized.dot(b.standardized), -1.0, 1.0);
}

std::uint64_t basis_fingerprint(const PcaModel& whitening) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t word) {
    h ^= word;
    h *= 1099511628211ull;
  };
  auto mix_doubles = [&](const double* d, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, d + i, sizeof bits);
      mix(bits);
    }
  };
  mix(static_cast<std::uint64_t>(whitening.dim()));
  mix(static_cast<std::uint64_t>(whitening.n_components()));
  mix_doubles(whitening.mean.data(), whitening.mean.size());
  mix_doubles(whitening.variances.data(), whitening.variances.size());
  mix_doubles(whitening.components.data(), whitening.components.size());
  return h;
}

std::vector<MeasurementSet> measurement_response(const DiscriminativePattern& pattern, const TriMesh& templ,
                                                 const std::vector<double>& sd_multiples) {
  std::vector<MeasurementSet> out;
  out.reserve(sd_multiples.size());
  for (double k : sd_multiples) out.push_back(measure(unflatten(representative_shape(pattern, k * pattern.score_sd), templ)));
  return out;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("need at least 2 folds");
  std::vector<int> fold_of(labels.size(), -1);
  Rng rng = make_stream(seed, 0);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (static_cast<int>(idx.size()) < folds)
      throw ConfigError("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) + " subjects, fewer than " +
                        std::to_string(folds) + " folds");
    // Fisher-Yates with explicit modular draws keeps the assignment independent
    // of the standard library's distribution implementation.
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t k = 0; k < idx.size(); ++k) fold_of[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return fold_of;
}

CvResult cross_validate(const Cohort& cohort, const PipelineConfig& config) {
  config.validate();
  cohort.validate();
  CvResult r;
  r.fold_of = stratified_folds(cohort.labels, config.cv_folds, config.seed);
  r.held_out_decision = Eigen::VectorXd::Zero(cohort.size());

  const auto folds = static_cast<std::size_t>(config.cv_folds);
  std::vector<std::vector<Eigen::Index>> train(folds), test(folds);
  for (Eigen::Index i = 0; i < cohort.size(); ++i)
    for (std::size_t f = 0; f < folds; ++f) (static_cast<std::size_t>(r.fold_of[i]) == f ? test : train)[f].push_back(i);

  parallel_for(folds, [&](std::size_t f) {
    const Cohort tr = cohort.subset(train[f]);
    if (tr.count(0) == 0 || tr.count(1) == 0) throw DataError("cross-validation fold " + std::to_string(f) + " has a single class");
    const Classifier c = fit_classifier(tr, config);
    const Eigen::VectorXd d = c.decision(cohort.subset(test[f]));
    for (std::size_t k = 0; k < test[f].size(); ++k) r.held_out_decision(test[f][k]) = d(static_cast<Eigen::Index>(k));
  });
  r.mean_log_loss = log_loss(r.held_out_decision, cohort.label_vector());
  return r;
}

}  // namespace morpho
