#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "morpho/cohort.hpp"
#include "morpho/discriminant.hpp"
#include "morpho/random.hpp"

namespace morpho {

struct DownsampleSpec {
  int target_class = 0;
  double keep_fraction = 0.25;
  std::string weight_column = "bmi";
  bool descending = false;  // rank 1 = largest weight, so low values are favoured
  std::uint64_t seed = 0;
};

/// Positions drawn from `weights` without replacement, in draw order: each
/// draw picks j with probability weights[j] / (sum of remaining weights).
std::vector<std::size_t> weighted_draws(const std::vector<double>& weights, std::size_t k, Rng& rng);

/// Keeps ceil(keep_fraction * n) subjects of the target class, drawn with
/// weight equal to their rank by weight_column (ties ordered by subject id).
/// The other class is untouched and cohort order is preserved.
Cohort downsample(const Cohort& cohort, const DownsampleSpec& spec, Rng& rng);
Cohort downsample(const Cohort& cohort, const DownsampleSpec& spec);  // stream from spec.seed

struct ExperimentOptions {
  DownsampleSpec downsample;  // seed field unused; see master_seed
  int n_seeds = 100;          // seeds 0 .. n_seeds - 1
  std::uint64_t master_seed = 0;
  // Regression of this column on shape gives the confounder pattern; empty skips it.
  std::string confounder_target = "bmi";
  int confounder_train_class = 0;
  Eigen::Index confounder_pls = 3;
  double response_sd = 2.0;  // measurement response is m(+k SD) - m(-k SD)
};

struct StabilityRecord {
  int seed = 0;
  std::string arm;  // "" for plain stability runs
  PipelineConfig config;
  bool ok = false;
  std::string error;
  Eigen::Index n_controls = 0;
  Eigen::Index n_cases = 0;
  double dot_full = 0.0;
  double dot_confounder_pattern = 0.0;  // NaN when no confounder target
  double lv_edv_response = 0.0;         // NaN when the template has no regions
  double rv_edv_response = 0.0;
  double lv_mass_response = 0.0;
};

struct SummaryRow {
  std::string arm;
  std::string config;
  int n_ok = 0;
  int n_failed = 0;
  double dot_full_q25 = 0.0, dot_full_median = 0.0, dot_full_q75 = 0.0;
  double dot_conf_median = 0.0;
  double lv_mass_response_median = 0.0;
};

struct ReferenceRecord {
  std::string arm;
  PipelineConfig config;
  double dot_confounder_pattern = 0.0;
  double lv_edv_response = 0.0, rv_edv_response = 0.0, lv_mass_response = 0.0;
};

struct StabilityReport {
  std::vector<StabilityRecord> records;      // seed-major, then arm, then config
  std::vector<ReferenceRecord> references;   // full-data fits
  std::vector<SummaryRow> summary() const;
  // Records of one arm/config, in seed order.
  std::vector<const StabilityRecord*> select(const std::string& arm, const std::string& config_label) const;
};

/// Linear-interpolated quantile of the finite values (NaN if none).
double quantile(std::vector<double> values, double q);

void write_report_csv(std::ostream& os, const StabilityReport& report);
void write_summary_csv(std::ostream& os, const StabilityReport& report);

/// Fits every config on the full cohort, then for each seed downsamples and
/// refits, recording similarity to the full-data pattern and to the
/// confounder regression pattern. Whitening uses one full-cohort PCA.
StabilityReport stability_experiment(const Cohort& cohort, const std::vector<PipelineConfig>& configs,
                                     const ExperimentOptions& options);

/// Deflating pipeline under three arms, each compared to the full-data fit
/// deflated on controls:
///   a) cases downsampled (favouring low weights), deflation trained on controls
///   b) controls downsampled, deflation trained on controls
///   c) controls downsampled, deflation trained on both classes
/// options.downsample supplies keep_fraction and weight_column.
StabilityReport deflation_population_study(const Cohort& cohort, const PipelineConfig& config,
                                           const ExperimentOptions& options);

struct DummyRecord {
  int repeat = 0;
  double dot_controls = 0.0;  // deflation trained on controls
  double dot_both = 0.0;      // deflation trained on both classes
};

struct DummyReport {
  double noise_sd = 0.0;
  std::vector<DummyRecord> records;
};

/// dummy = label + N(0, noise_sd^2) per repeat, added as a confounder next to
/// config.confounders; reports the dot product of the dummy's whitened
/// deflation pattern with the full-data discriminative pattern of `config`.
DummyReport dummy_variable_experiment(const Cohort& cohort, const PipelineConfig& config, double noise_sd,
                                      int n_repeats, std::uint64_t master_seed);

void write_dummy_csv(std::ostream& os, const DummyReport& report);

}  // namespace morpho
