#include "morpho/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "morpho/error.hpp"
#include "morpho/mesh_io.hpp"
#include "morpho/parallel.hpp"
#include "morpho/regression_shape.hpp"

namespace morpho {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool has_regions(const TriMesh& templ) { return !templ.regions.empty(); }

struct Responses {
  double lv_edv = kNaN, rv_edv = kNaN, lv_mass = kNaN;
};

Responses responses(const DiscriminativePattern& p, const TriMesh& templ, double k) {
  Responses r;
  if (!has_regions(templ)) return r;
  const auto m = measurement_response(p, templ, {-k, k});
  r.lv_edv = m[1].lv_edv - m[0].lv_edv;
  r.rv_edv = m[1].rv_edv - m[0].rv_edv;
  r.lv_mass = m[1].lv_mass - m[0].lv_mass;
  return r;
}

// Whitened confounder regression pattern, or empty when disabled.
Eigen::VectorXd confounder_regression_pattern(const Cohort& cohort, const ExperimentOptions& o, const PcaModel& whitening,
                                              Eigen::Index k) {
  if (o.confounder_target.empty()) return {};
  const Cohort train = cohort.subset(cohort.class_indices(o.confounder_train_class));
  const ShapeRegressionModel reg = regression_fit(train.shapes, train.column(o.confounder_target), o.confounder_pls);
  return regression_pattern(reg, whitening, k);
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

struct Arm {
  std::string name;
  DownsampleSpec spec;
  PipelineConfig config;
};

StabilityReport run_arms(const Cohort& cohort, const std::vector<Arm>& arms,
                         const std::vector<PipelineConfig>& references, const ExperimentOptions& options) {
  if (options.n_seeds < 1) throw ConfigError("need at least one seed");
  const PcaModel whitening = pca_fit_full(cohort.shapes);
  const Eigen::Index k = whitening.modes_for_fraction(arms.front().config.whiten_fraction);
  const Eigen::VectorXd conf = confounder_regression_pattern(cohort, options, whitening, k);

  StabilityReport report;
  std::vector<DiscriminativePattern> ref_patterns;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const FittedPipeline full = fit_pipeline(cohort, references[a], &whitening);
    ref_patterns.push_back(full.pattern);
    ReferenceRecord rr;
    rr.arm = arms[a].name;
    rr.config = references[a];
    rr.dot_confounder_pattern = conf.size() ? full.pattern.standardized.dot(conf) : kNaN;
    const Responses r = responses(full.pattern, cohort.templ, options.response_sd);
    rr.lv_edv_response = r.lv_edv;
    rr.rv_edv_response = r.rv_edv;
    rr.lv_mass_response = r.lv_mass;
    report.references.push_back(rr);
  }

  const auto n_seeds = static_cast<std::size_t>(options.n_seeds);
  report.records.resize(n_seeds * arms.size());
  parallel_for(n_seeds, [&](std::size_t s) {
    for (std::size_t a = 0; a < arms.size(); ++a) {
      StabilityRecord& rec = report.records[s * arms.size() + a];
      rec.seed = static_cast<int>(s);
      rec.arm = arms[a].name;
      rec.config = arms[a].config;
      try {
        // The draw depends only on (master seed, seed, downsampling spec), so
        // arms sharing a spec see the same subset.
        Rng rng = make_stream(options.master_seed, s);
        const Cohort ds = downsample(cohort, arms[a].spec, rng);
        rec.n_controls = ds.count(0);
        rec.n_cases = ds.count(1);
        const FittedPipeline fit = fit_pipeline(ds, arms[a].config, &whitening);
        rec.dot_full = pattern_similarity(fit.pattern, ref_patterns[a]);
        rec.dot_confounder_pattern = conf.size() ? fit.pattern.standardized.dot(conf) : kNaN;
        const Responses r = responses(fit.pattern, cohort.templ, options.response_sd);
        rec.lv_edv_response = r.lv_edv;
        rec.rv_edv_response = r.rv_edv;
        rec.lv_mass_response = r.lv_mass;
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.dot_full = rec.dot_confounder_pattern = kNaN;
        rec.lv_edv_response = rec.rv_edv_response = rec.lv_mass_response = kNaN;
      }
    }
  });
  return report;
}

}  // namespace

std::vector<std::size_t> weighted_draws(const std::vector<double>& weights, std::size_t k, Rng& rng) {
  if (k > weights.size()) throw ConfigError("cannot draw more items than available");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("draw weights must be finite and non-negative");
  std::vector<double> w = weights;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t d = 0; d < k; ++d) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) throw ConfigError("draw weights exhausted before enough items were drawn");
    const double u = unit_uniform(rng) * total;
    double acc = 0.0;
    std::size_t pick = w.size();
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      acc += w[j];
      pick = j;
      if (u < acc) break;
    }
    out.push_back(pick);
    w[pick] = 0.0;
  }
  return out;
}

Cohort downsample(const Cohort& cohort, const DownsampleSpec& spec, Rng& rng) {
  if (!(spec.keep_fraction > 0.0 && spec.keep_fraction <= 1.0)) throw ConfigError("keep fraction must be in (0, 1]");
  if (spec.target_class != 0 && spec.target_class != 1) throw ConfigError("target class must be 0 or 1");
  const auto members = cohort.class_indices(spec.target_class);
  const auto n = members.size();
  const auto keep = static_cast<std::size_t>(std::ceil(spec.keep_fraction * static_cast<double>(n) - 1e-9));

  std::vector<bool> kept(static_cast<std::size_t>(cohort.size()), true);
  if (keep < n) {
    const Cohort target = cohort.subset(members);
    const Eigen::VectorXd weight = target.column(spec.weight_column);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double wa = spec.descending ? -weight(a) : weight(a);
      const double wb = spec.descending ? -weight(b) : weight(b);
      if (wa != wb) return wa < wb;
      return target.ids[a] < target.ids[b];
    });
    std::vector<double> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<double>(r + 1);
    for (auto i : members) kept[static_cast<std::size_t>(i)] = false;
    for (auto j : weighted_draws(rank, keep, rng)) kept[static_cast<std::size_t>(members[j])] = true;
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < cohort.size(); ++i)
    if (kept[static_cast<std::size_t>(i)]) rows.push_back(i);
  return cohort.subset(rows);
}

Cohort downsample(const Cohort& cohort, const DownsampleSpec& spec) {
  Rng rng = make_stream(spec.seed, 0);
  return downsample(cohort, spec, rng);
}

double quantile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }), values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<const StabilityRecord*> StabilityReport::select(const std::string& arm, const std::string& label) const {
  std::vector<const StabilityRecord*> out;
  for (const auto& r : records)
    if (r.arm == arm && r.config.label() == label) out.push_back(&r);
  return out;
}

std::vector<SummaryRow> StabilityReport::summary() const {
  std::vector<SummaryRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> where;
  std::vector<std::vector<const StabilityRecord*>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.arm, r.config.label());
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, rows.size()).first;
      rows.push_back({});
      rows.back().arm = r.arm;
      rows.back().config = key.second;
      groups.emplace_back();
    }
    groups[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    std::vector<double> full, conf, mass;
    for (const auto* r : groups[g]) {
      if (!r->ok) {
        ++rows[g].n_failed;
        continue;
      }
      ++rows[g].n_ok;
      full.push_back(r->dot_full);
      conf.push_back(r->dot_confounder_pattern);
      mass.push_back(r->lv_mass_response);
    }
    rows[g].dot_full_q25 = quantile(full, 0.25);
    rows[g].dot_full_median = quantile(full, 0.5);
    rows[g].dot_full_q75 = quantile(full, 0.75);
    rows[g].dot_conf_median = quantile(conf, 0.5);
    rows[g].lv_mass_response_median = quantile(mass, 0.5);
  }
  return rows;
}

void write_report_csv(std::ostream& os, const StabilityReport& report) {
  os << "seed,arm,config,dr,pca_modes,pls_modes,adjust,deflate,deflate_train,status,n_controls,n_cases,"
        "dot_full,dot_confounder_pattern,lv_edv_response,rv_edv_response,lv_mass_response,error\n";
  auto config_cols = [&](const PipelineConfig& c) {
    os << csv_escape(c.label()) << ',' << dr_name(c.dr) << ',' << c.pca_modes << ',' << c.pls_modes << ','
       << (c.adjust ? 1 : 0) << ',' << (c.deflate ? 1 : 0) << ',' << (c.deflate ? c.deflate_train.name() : "") << ',';
  };
  for (const auto& ref : report.references) {
    os << "full," << ref.arm << ',';
    config_cols(ref.config);
    os << "reference,,," << 1 << ',' << fmt(ref.dot_confounder_pattern) << ',' << fmt(ref.lv_edv_response) << ','
       << fmt(ref.rv_edv_response) << ',' << fmt(ref.lv_mass_response) << ",\n";
  }
  for (const auto& r : report.records) {
    os << r.seed << ',' << r.arm << ',';
    config_cols(r.config);
    os << (r.ok ? "ok" : "failed") << ',' << r.n_controls << ',' << r.n_cases << ',' << fmt(r.dot_full) << ','
       << fmt(r.dot_confounder_pattern) << ',' << fmt(r.lv_edv_response) << ',' << fmt(r.rv_edv_response) << ','
       << fmt(r.lv_mass_response) << ',' << csv_escape(r.error) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const StabilityReport& report) {
  os << "arm,config,n_ok,n_failed,dot_full_q25,dot_full_median,dot_full_q75,dot_confounder_median,"
        "lv_mass_response_median\n";
  for (const auto& s : report.summary()) {
    os << s.arm << ',' << csv_escape(s.config) << ',' << s.n_ok << ',' << s.n_failed << ',' << fmt(s.dot_full_q25) << ','
       << fmt(s.dot_full_median) << ',' << fmt(s.dot_full_q75) << ',' << fmt(s.dot_conf_median) << ','
       << fmt(s.lv_mass_response_median) << '\n';
  }
}

StabilityReport stability_experiment(const Cohort& cohort, const std::vector<PipelineConfig>& configs,
                                     const ExperimentOptions& options) {
  if (configs.empty()) throw ConfigError("stability experiment needs at least one config");
  for (const auto& c : configs) c.validate();
  std::vector<Arm> arms;
  for (const auto& c : configs) arms.push_back({"", options.downsample, c});
  return run_arms(cohort, arms, configs, options);
}

StabilityReport deflation_population_study(const Cohort& cohort, const PipelineConfig& config,
                                           const ExperimentOptions& options) {
  if (!config.deflate) throw ConfigError("deflation study needs a deflating config");
  config.validate();
  PipelineConfig on_controls = config;
  on_controls.deflate_train = TrainingSelector::controls();
  PipelineConfig on_both = config;
  on_both.deflate_train = TrainingSelector::both();

  DownsampleSpec cases = options.downsample;
  cases.target_class = 1;
  cases.descending = !options.downsample.descending;
  DownsampleSpec controls = options.downsample;
  controls.target_class = 0;

  const std::vector<Arm> arms = {
      {"a", cases, on_controls}, {"b", controls, on_controls}, {"c", controls, on_both}};
  return run_arms(cohort, arms, {on_controls, on_controls, on_controls}, options);
}

DummyReport dummy_variable_experiment(const Cohort& cohort, const PipelineConfig& config, double noise_sd,
                                      int n_repeats, std::uint64_t master_seed) {
  if (n_repeats < 1) throw ConfigError("need at least one repeat");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise SD must be finite and >= 0");
  config.validate();
  const PcaModel whitening = pca_fit_full(cohort.shapes);
  const Eigen::Index k = whitening.modes_for_fraction(config.whiten_fraction);
  const FittedPipeline full = fit_pipeline(cohort, config, &whitening);

  std::string dummy_name = "dummy";
  while (cohort.has_column(dummy_name)) dummy_name += "_";
  std::vector<std::string> confounders = config.confounders;
  confounders.push_back(dummy_name);

  DummyReport report;
  report.noise_sd = noise_sd;
  report.records.resize(static_cast<std::size_t>(n_repeats));
  parallel_for(report.records.size(), [&](std::size_t r) {
    Rng rng = make_stream(master_seed, r);
    std::normal_distribution<double> noise(0.0, 1.0);
    Cohort c = cohort;
    c.column_names.push_back(dummy_name);
    c.columns.conservativeResize(c.size(), static_cast<Eigen::Index>(c.column_names.size()));
    for (Eigen::Index i = 0; i < c.size(); ++i)
      c.columns(i, c.columns.cols() - 1) = c.labels[static_cast<std::size_t>(i)] + noise_sd * noise(rng);
    DummyRecord& rec = report.records[r];
    rec.repeat = static_cast<int>(r);
    const auto on_controls = deflation_fit(c, confounders, TrainingSelector::controls());
    const auto on_both = deflation_fit(c, confounders, TrainingSelector::both());
    rec.dot_controls = confounder_pattern(on_controls, dummy_name, whitening, k).dot(full.pattern.standardized);
    rec.dot_both = confounder_pattern(on_both, dummy_name, whitening, k).dot(full.pattern.standardized);
  });
  return report;
}

void write_dummy_csv(std::ostream& os, const DummyReport& report) {
  os << "repeat,noise_sd,dot_controls,dot_both\n";
  for (const auto& r : report.records)
    os << r.repeat << ',' << format_double(report.noise_sd) << ',' << format_double(r.dot_controls) << ','
       << format_double(r.dot_both) << '\n';
}

}  // namespace morpho
