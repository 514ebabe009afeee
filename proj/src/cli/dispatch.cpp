#include "morpho/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "morpho/cohort.hpp"
#include "morpho/csv.hpp"
#include "morpho/discriminant.hpp"
#include "morpho/error.hpp"
#include "morpho/experiments.hpp"
#include "morpho/manifest.hpp"
#include "morpho/measure.hpp"
#include "morpho/mesh_io.hpp"
#include "morpho/procrustes.hpp"
#include "morpho/regression_shape.hpp"
#include "morpho/serialize.hpp"
#include "morpho/synth.hpp"

namespace morpho {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError(what + ": '" + s + "' is not a number");
  return v;
}

// "lo:hi:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw UsageError("grid must look like lo:hi:step (got '" + spec + "')");
    const double lo = parse_number(parts[0], "grid"), hi = parse_number(parts[1], "grid"),
                 step = parse_number(parts[2], "grid");
    if (!(step > 0.0) || hi < lo) throw UsageError("grid needs lo <= hi and step > 0");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
  } else {
    for (const auto& v : split_list(spec)) out.push_back(parse_number(v, "grid"));
  }
  if (out.empty()) throw UsageError("empty grid '" + spec + "'");
  return out;
}

fs::path sidecar(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_stream_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  body(out);
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

// --- shared option groups ----------------------------------------------------

struct CohortArgs {
  std::string meshes;
  std::string demographics;
  std::string class_col = "class";
  std::string case_label = "1";
  std::string id_col = "subject_id";
  std::string region_map;

  void add(CLI::App* app, bool demographics_required = true) {
    app->add_option("--meshes", meshes, "Directory of OFF meshes (subject id = file stem)")->required();
    auto* d = app->add_option("--demographics", demographics, "CSV with a header row");
    if (demographics_required) d->required();
    app->add_option("--class-col", class_col, "Class column")->capture_default_str();
    app->add_option("--case-label", case_label, "Value of the class column marking a case")->capture_default_str();
    app->add_option("--id-col", id_col, "Subject id column")->capture_default_str();
    app->add_option("--region-map", region_map, "Region labels, one per vertex (default: MESHES/regions.txt)");
  }

  Cohort load(bool with_labels = true) const {
    CohortFiles f;
    f.meshes = meshes;
    f.demographics = demographics;
    f.class_column = with_labels ? class_col : std::string();
    f.case_label = case_label;
    f.id_column = id_col;
    if (!region_map.empty()) f.region_map = fs::path(region_map);
    return load_cohort(f);
  }

  std::vector<fs::path> inputs() const {
    std::vector<fs::path> p = {meshes};
    if (!demographics.empty()) p.emplace_back(demographics);
    if (!region_map.empty()) p.emplace_back(region_map);
    return p;
  }

  ojson json() const {
    return {{"meshes", meshes},       {"demographics", demographics}, {"class_col", class_col},
            {"case_label", case_label}, {"id_col", id_col},           {"region_map", region_map}};
  }
};

struct ConfigArgs {
  std::string dr = "pca+pls";
  long pca = 20;
  long pls = 3;
  bool adjust = false;
  bool deflate = false;
  std::string deflate_train = "controls";
  long deflate_components = 0;
  std::string confounders = "age,bsa,sex";
  double ridge = kDefaultRidge;
  double whiten_fraction = kDefaultWhitenFraction;

  void add(CLI::App* app) {
    app->add_option("--dr", dr, "Reduction: pca, pls or pca+pls")->capture_default_str();
    app->add_option("--pca", pca, "PCA modes")->capture_default_str();
    app->add_option("--pls", pls, "PLS modes")->capture_default_str();
    app->add_flag("--adjust", adjust, "Add confounders to the classifier");
    app->add_flag("--deflate", deflate, "Regress confounders out of the shapes first");
    app->add_option("--deflate-train", deflate_train, "Deflation training population: controls, cases or both")
        ->capture_default_str();
    app->add_option("--deflate-components", deflate_components, "Deflation PLS components (0: one per confounder)")
        ->capture_default_str();
    app->add_option("--confounders", confounders, "Comma-separated confounder columns")->capture_default_str();
    app->add_option("--ridge", ridge, "L2 penalty of the logistic fit")->capture_default_str();
    app->add_option("--whiten-fraction", whiten_fraction, "Variance fraction of the whitening modes")
        ->capture_default_str();
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.dr = parse_dr(dr);
    c.pca_modes = pca;
    c.pls_modes = pls;
    c.adjust = adjust;
    c.deflate = deflate;
    c.deflate_train = TrainingSelector::parse(deflate_train);
    c.deflate_components = deflate_components;
    c.confounders = split_list(confounders);
    c.ridge = ridge;
    c.whiten_fraction = whiten_fraction;
    return c;
  }
};

ojson config_ojson(const PipelineConfig& c) { return ojson::parse(config_to_json(c)); }

void emit_manifest(const std::string& command, const ojson& config, std::optional<std::uint64_t> seed,
                   const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs, const fs::path& where) {
  RunManifest m;
  m.command = command;
  m.config_json = config.dump();
  m.seed = seed;
  m.inputs = inputs;
  m.outputs = outputs;
  m.write(where);
}

TriMesh require_regions(const TriMesh& templ, const std::string& what) {
  if (templ.regions.empty())
    throw DataError(what + " needs region labels; pass --region-map or put regions.txt next to the meshes");
  return templ;
}

// --- subcommands --------------------------------------------------------------

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

Command add_align(CLI::App& root) {
  auto* app = root.add_subcommand("align", "Generalized Procrustes alignment of a mesh corpus");
  auto a = std::make_shared<std::tuple<std::string, std::string, std::string, ProcrustesOptions>>();
  auto& [meshes, out, region_map, opts] = *a;
  app->add_option("--meshes", meshes, "Directory of OFF meshes")->required();
  app->add_option("--out", out, "Output directory")->required();
  app->add_option("--region-map", region_map, "Region labels file");
  app->add_option("--tol", opts.tol, "Convergence tolerance on the mean (RMS mm)")->capture_default_str();
  app->add_option("--max-iter", opts.max_iter, "Iteration cap")->capture_default_str();
  return {app, [a] {
            auto& [meshes, out, region_map, opts] = *a;
            const MeshCorpus corpus =
                load_corpus(meshes, region_map.empty() ? std::nullopt : std::optional<fs::path>(region_map));
            const AtlasModel atlas = generalized_procrustes(corpus.shapes, opts);
            const fs::path dir(out);
            write_corpus(dir / "aligned", corpus.ids, atlas.aligned, corpus.templ);
            write_off(dir / "mean.off", unflatten(atlas.mean_shape, corpus.templ));
            write_stream_file(dir / "transforms.csv", [&](std::ostream& os) {
              os << "subject_id,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n";
              for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
                const RigidTransform& t = atlas.transforms[i];
                os << corpus.ids[i];
                for (int r = 0; r < 3; ++r)
                  for (int c = 0; c < 3; ++c) os << ',' << format_double(t.rotation(r, c));
                for (int k = 0; k < 3; ++k) os << ',' << format_double(t.translation(k));
                os << '\n';
              }
            });
            std::cout << "aligned " << corpus.ids.size() << " meshes in " << atlas.iterations_run << " iterations"
                      << (atlas.converged ? "" : " (not converged)") << '\n';
            std::vector<fs::path> inputs = {meshes};
            if (!region_map.empty()) inputs.emplace_back(region_map);
            emit_manifest("align", {{"meshes", meshes}, {"region_map", region_map}, {"tol", opts.tol}, {"max_iter", opts.max_iter}},
                          std::nullopt, inputs, {dir}, dir / "manifest.json");
          }};
}

Command add_measure(CLI::App& root) {
  auto* app = root.add_subcommand("measure", "LV/RV volumes and LV mass of every mesh");
  auto a = std::make_shared<std::array<std::string, 3>>();
  app->add_option("--meshes", (*a)[0], "Directory of OFF meshes")->required();
  app->add_option("--out", (*a)[1], "Output CSV")->required();
  app->add_option("--region-map", (*a)[2], "Region labels file");
  return {app, [a] {
            const auto& [meshes, out, region_map] = *a;
            const MeshCorpus corpus =
                load_corpus(meshes, region_map.empty() ? std::nullopt : std::optional<fs::path>(region_map));
            const TriMesh templ = require_regions(corpus.templ, "measure");
            write_stream_file(out, [&](std::ostream& os) {
              os << "subject_id,lv_edv_ml,rv_edv_ml,lv_mass_g\n";
              for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
                const MeasurementSet m = measure(unflatten(row_shape(corpus.shapes, static_cast<Eigen::Index>(i)), templ));
                os << corpus.ids[i] << ',' << format_double(m.lv_edv) << ',' << format_double(m.rv_edv) << ','
                   << format_double(m.lv_mass) << '\n';
              }
            });
            std::vector<fs::path> inputs = {meshes};
            if (!region_map.empty()) inputs.emplace_back(region_map);
            emit_manifest("measure", {{"meshes", meshes}, {"region_map", region_map}}, std::nullopt, inputs, {out},
                          sidecar(out));
          }};
}

Command add_fit(CLI::App& root) {
  auto* app = root.add_subcommand("fit", "Fit the discriminative pipeline and save the model");
  struct Args {
    CohortArgs cohort;
    ConfigArgs config;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  a->cohort.add(app);
  a->config.add(app);
  app->add_option("--out", a->out, "Model JSON")->required();
  return {app, [a] {
            const PipelineConfig cfg = a->config.config();
            const Cohort cohort = a->cohort.load();
            const FittedPipeline fit = fit_pipeline(cohort, cfg);
            write_text(a->out, classifier_to_json({fit.classifier, fit.pattern, cohort.templ}));
            std::cout << "fitted " << cfg.label() << " on " << cohort.size() << " subjects (" << cohort.count(1)
                      << " cases); logistic iterations " << fit.classifier.logistic.iterations << '\n';
            ojson conf = a->cohort.json();
            conf["pipeline"] = config_ojson(cfg);
            emit_manifest("fit", conf, std::nullopt, a->cohort.inputs(), {a->out}, sidecar(a->out));
          }};
}

Command add_cv(CLI::App& root) {
  auto* app = root.add_subcommand("cv", "Stratified k-fold cross-validated log-loss");
  struct Args {
    CohortArgs cohort;
    ConfigArgs config;
    std::string configs, out, predictions;
    int folds = 10;
    std::uint64_t seed = 0;
  };
  auto a = std::make_shared<Args>();
  a->cohort.add(app);
  a->config.add(app);
  app->add_option("--configs", a->configs, "JSON grid of configs (overrides the single-config flags)");
  app->add_option("--folds", a->folds, "Number of folds")->capture_default_str();
  app->add_option("--seed", a->seed, "Fold assignment seed")->required();
  app->add_option("--out", a->out, "Results CSV, one row per config")->required();
  app->add_option("--predictions", a->predictions, "Held-out decision values per subject and config");
  return {app, [a] {
            std::vector<PipelineConfig> configs =
                a->configs.empty() ? std::vector<PipelineConfig>{a->config.config()} : configs_from_json(read_text(a->configs));
            for (auto& c : configs) {
              c.cv_folds = a->folds;
              c.seed = a->seed;
            }
            const Cohort cohort = a->cohort.load();
            std::vector<CvResult> results;
            for (const auto& c : configs) results.push_back(cross_validate(cohort, c));
            write_stream_file(a->out, [&](std::ostream& os) {
              os << "config,dr,pca_modes,pls_modes,adjust,deflate,deflate_train,folds,seed,mean_log_loss\n";
              for (std::size_t k = 0; k < configs.size(); ++k) {
                const auto& c = configs[k];
                os << c.label() << ',' << dr_name(c.dr) << ',' << c.pca_modes << ',' << c.pls_modes << ','
                   << (c.adjust ? 1 : 0) << ',' << (c.deflate ? 1 : 0) << ',' << (c.deflate ? c.deflate_train.name() : "")
                   << ',' << c.cv_folds << ',' << c.seed << ',' << format_double(results[k].mean_log_loss) << '\n';
                std::cout << c.label() << ": mean log-loss " << results[k].mean_log_loss << '\n';
              }
            });
            std::vector<fs::path> outputs = {a->out};
            if (!a->predictions.empty()) {
              write_stream_file(a->predictions, [&](std::ostream& os) {
                os << "config,subject_id,class,fold,decision\n";
                for (std::size_t k = 0; k < configs.size(); ++k)
                  for (Eigen::Index i = 0; i < cohort.size(); ++i)
                    os << configs[k].label() << ',' << cohort.ids[static_cast<std::size_t>(i)] << ','
                       << cohort.labels[static_cast<std::size_t>(i)] << ',' << results[k].fold_of[static_cast<std::size_t>(i)]
                       << ',' << format_double(results[k].held_out_decision(i)) << '\n';
              });
              outputs.emplace_back(a->predictions);
            }
            ojson conf = a->cohort.json();
            conf["folds"] = a->folds;
            conf["pipelines"] = ojson::array();
            for (const auto& c : configs) conf["pipelines"].push_back(config_ojson(c));
            auto inputs = a->cohort.inputs();
            if (!a->configs.empty()) inputs.emplace_back(a->configs);
            emit_manifest("cv", conf, a->seed, inputs, outputs, sidecar(a->out));
          }};
}

Command add_score(CLI::App& root) {
  auto* app = root.add_subcommand("score", "Remodelling scores of meshes under a fitted model");
  struct Args {
    CohortArgs cohort;
    std::string model, out;
  };
  auto a = std::make_shared<Args>();
  a->cohort.add(app, false);
  app->add_option("--model", a->model, "Model JSON from fit")->required();
  app->add_option("--out", a->out, "Scores CSV")->required();
  return {app, [a] {
            const SavedClassifier saved = load_classifier(a->model);
            const Classifier& clf = saved.classifier;
            const bool needs_columns = clf.config.adjust || clf.config.deflate;
            Cohort cohort;
            if (!a->cohort.demographics.empty()) {
              cohort = a->cohort.load(false);
            } else if (needs_columns) {
              throw UsageError("model uses confounders; pass --demographics");
            } else {
              MeshCorpus corpus = load_corpus(a->cohort.meshes, a->cohort.region_map.empty()
                                                                    ? std::nullopt
                                                                    : std::optional<fs::path>(a->cohort.region_map));
              cohort.ids = corpus.ids;
              cohort.shapes = std::move(corpus.shapes);
              cohort.templ = std::move(corpus.templ);
              cohort.labels.assign(cohort.ids.size(), 0);
            }
            if (!cohort.templ.same_connectivity(saved.templ))
              throw DimensionError("meshes in '" + a->cohort.meshes + "' do not share the model's connectivity");
            const ShapeMatrix analysed = clf.analysed_shapes(cohort);
            const Eigen::VectorXd decision = clf.decision(cohort);
            write_stream_file(a->out, [&](std::ostream& os) {
              os << "subject_id,score,decision,probability\n";
              for (Eigen::Index i = 0; i < cohort.size(); ++i) {
                const double s = score(saved.pattern, row_shape(analysed, i));
                const double p = 1.0 / (1.0 + std::exp(-decision(i)));
                os << cohort.ids[static_cast<std::size_t>(i)] << ',' << format_double(s) << ','
                   << format_double(decision(i)) << ',' << format_double(p) << '\n';
              }
            });
            ojson conf = a->cohort.json();
            conf["model"] = a->model;
            auto inputs = a->cohort.inputs();
            inputs.emplace_back(a->model);
            emit_manifest("score", conf, std::nullopt, inputs, {a->out}, sidecar(a->out));
          }};
}

std::string lambda_tag(double v) {
  return (v < 0.0 ? "m" : "p") + format_double(std::abs(v));
}

Command add_pattern_export(CLI::App& root) {
  auto* app = root.add_subcommand("pattern-export", "Representative shapes along the discriminative pattern");
  struct Args {
    std::string model, grid = "-3:3:1", out_dir;
  };
  auto a = std::make_shared<Args>();
  app->add_option("--model", a->model, "Model JSON from fit")->required();
  app->add_option("--lambda-grid", a->grid, "Multiples of the score SD: lo:hi:step or a list")->capture_default_str();
  app->add_option("--out-dir", a->out_dir, "Output directory")->required();
  return {app, [a] {
            const SavedClassifier saved = load_classifier(a->model);
            const std::vector<double> grid = parse_grid(a->grid);
            const fs::path dir(a->out_dir);
            fs::create_directories(dir);
            const Eigen::Index n_v = saved.templ.n_vertices();
            Eigen::MatrixXd disp(n_v, static_cast<Eigen::Index>(grid.size()));
            std::vector<std::optional<MeasurementSet>> meas;
            for (std::size_t k = 0; k < grid.size(); ++k) {
              const ShapeVector x = representative_shape(saved.pattern, grid[k] * saved.pattern.score_sd);
              const TriMesh m = unflatten(x, saved.templ);
              write_off(dir / ("repr_" + lambda_tag(grid[k]) + ".off"), m);
              const Eigen::VectorXd d = x.coords() - saved.pattern.mean_shape;
              for (Eigen::Index v = 0; v < n_v; ++v) disp(v, static_cast<Eigen::Index>(k)) = d.segment<3>(3 * v).norm();
              meas.push_back(saved.templ.regions.empty() ? std::nullopt : std::optional<MeasurementSet>(measure(m)));
            }
            write_stream_file(dir / "displacement.csv", [&](std::ostream& os) {
              os << "vertex,region";
              for (double g : grid) os << ",lambda_" << lambda_tag(g);
              os << '\n';
              for (Eigen::Index v = 0; v < n_v; ++v) {
                os << v << ','
                   << (saved.templ.regions.empty() ? std::string() : std::string(region_name(saved.templ.regions[static_cast<std::size_t>(v)])));
                for (Eigen::Index k = 0; k < disp.cols(); ++k) os << ',' << format_double(disp(v, k));
                os << '\n';
              }
            });
            write_stream_file(dir / "measurements.csv", [&](std::ostream& os) {
              os << "lambda_sd,lambda_mm,lv_edv_ml,rv_edv_ml,lv_mass_g\n";
              for (std::size_t k = 0; k < grid.size(); ++k) {
                os << format_double(grid[k]) << ',' << format_double(grid[k] * saved.pattern.score_sd);
                if (meas[k]) os << ',' << format_double(meas[k]->lv_edv) << ',' << format_double(meas[k]->rv_edv) << ','
                                << format_double(meas[k]->lv_mass);
                else os << ",,,";
                os << '\n';
              }
            });
            emit_manifest("pattern-export", {{"model", a->model}, {"lambda_grid", grid}}, std::nullopt, {a->model}, {dir},
                          dir / "manifest.json");
          }};
}

Command add_regress(CLI::App& root) {
  auto* app = root.add_subcommand("regress", "PLS regression of a demographic value on shape");
  struct Args {
    CohortArgs cohort;
    std::string target, train = "controls", out, cv_out;
    long pls = 3;
    int cv_folds = 0;
    std::optional<std::uint64_t> seed;
  };
  auto a = std::make_shared<Args>();
  a->cohort.add(app);
  app->add_option("--target-col", a->target, "Column to predict")->required();
  app->add_option("--train-class", a->train, "Training population: controls, cases or both")->capture_default_str();
  app->add_option("--pls", a->pls, "PLS components")->capture_default_str();
  app->add_option("--out", a->out, "Regression model JSON")->required();
  app->add_option("--cv-folds", a->cv_folds, "Also report k-fold R^2 (needs --seed and --cv-out)");
  app->add_option("--cv-out", a->cv_out, "CSV for the cross-validated R^2");
  app->add_option("--seed", a->seed, "Fold assignment seed");
  return {app, [a] {
            if (a->cv_folds > 0 && (!a->seed || a->cv_out.empty()))
              throw UsageError("--cv-folds needs --seed and --cv-out");
            const Cohort cohort = a->cohort.load();
            const Cohort train = cohort.subset(TrainingSelector::parse(a->train).select(cohort));
            const Eigen::VectorXd values = train.column(a->target);
            const ShapeRegressionModel model = regression_fit(train.shapes, values, a->pls);
            write_text(a->out, regression_to_json({model, a->target, cohort.templ}));
            std::vector<fs::path> outputs = {a->out};
            if (a->cv_folds > 0) {
              const double r2 = regression_cv_r2(train.shapes, values, a->pls, a->cv_folds, *a->seed);
              std::cout << a->cv_folds << "-fold R^2 = " << r2 << '\n';
              write_stream_file(a->cv_out, [&](std::ostream& os) {
                os << "target,train,n,pls,folds,seed,r2\n"
                   << a->target << ',' << a->train << ',' << train.size() << ',' << a->pls << ',' << a->cv_folds << ','
                   << *a->seed << ',' << format_double(r2) << '\n';
              });
              outputs.emplace_back(a->cv_out);
            }
            ojson conf = a->cohort.json();
            conf["target_col"] = a->target;
            conf["train_class"] = a->train;
            conf["pls"] = a->pls;
            conf["cv_folds"] = a->cv_folds;
            emit_manifest("regress", conf, a->seed, a->cohort.inputs(), outputs, sidecar(a->out));
          }};
}

Command add_regress_shape(CLI::App& root) {
  auto* app = root.add_subcommand("regress-shape", "Closest shape (Mahalanobis) predicting a given value");
  struct Args {
    std::string model, out, values, out_dir;
    std::optional<double> value;
  };
  auto a = std::make_shared<Args>();
  app->add_option("--model", a->model, "Regression model JSON")->required();
  auto* v = app->add_option("--value", a->value, "Target value");
  auto* o = app->add_option("--out", a->out, "Output OFF mesh (with --value)");
  auto* vs = app->add_option("--values", a->values, "Grid of target values: lo:hi:step or a list");
  auto* od = app->add_option("--out-dir", a->out_dir, "Output directory (with --values)");
  v->needs(o);
  vs->needs(od);
  v->excludes(vs);
  return {app, [a] {
            const SavedRegression saved = load_regression(a->model);
            std::vector<fs::path> outputs;
            ojson conf = {{"model", a->model}};
            if (a->value) {
              const TriMesh m = unflatten(representative_for_value(saved.model, *a->value), saved.templ);
              ensure_parent(a->out);
              write_off(a->out, m);
              outputs.emplace_back(a->out);
              conf["value"] = *a->value;
              if (!saved.templ.regions.empty()) {
                const MeasurementSet s = measure(m);
                std::cout << saved.target << '=' << *a->value << ": lv_edv " << s.lv_edv << " mL, rv_edv " << s.rv_edv
                          << " mL, lv_mass " << s.lv_mass << " g\n";
              }
              emit_manifest("regress-shape", conf, std::nullopt, {a->model}, outputs, sidecar(a->out));
            } else if (!a->values.empty()) {
              const std::vector<double> grid = parse_grid(a->values);
              const fs::path dir(a->out_dir);
              fs::create_directories(dir);
              write_stream_file(dir / "measurements.csv", [&](std::ostream& os) {
                os << "value,predicted,lv_edv_ml,rv_edv_ml,lv_mass_g\n";
                for (double b : grid) {
                  const ShapeVector x = representative_for_value(saved.model, b);
                  const TriMesh m = unflatten(x, saved.templ);
                  write_off(dir / ("value_" + lambda_tag(b) + ".off"), m);
                  os << format_double(b) << ',' << format_double(saved.model.predict(x));
                  if (!saved.templ.regions.empty()) {
                    const MeasurementSet s = measure(m);
                    os << ',' << format_double(s.lv_edv) << ',' << format_double(s.rv_edv) << ',' << format_double(s.lv_mass);
                  } else {
                    os << ",,,";
                  }
                  os << '\n';
                }
              });
              conf["values"] = grid;
              emit_manifest("regress-shape", conf, std::nullopt, {a->model}, {dir}, dir / "manifest.json");
            } else {
              throw UsageError("regress-shape needs --value/--out or --values/--out-dir");
            }
          }};
}

Command add_synth(CLI::App& root) {
  auto* app = root.add_subcommand("synth", "Generate a synthetic cohort with known effects");
  struct Args {
    std::string spec, out_dir;
    std::uint64_t seed = 0;
  };
  auto a = std::make_shared<Args>();
  app->add_option("--spec", a->spec, "Synthetic cohort spec (JSON)")->required();
  app->add_option("--out-dir", a->out_dir, "Output directory")->required();
  app->add_option("--seed", a->seed, "Random seed (overrides the seed in the cohort file)")->required();
  return {app, [a] {
            SynthSpec spec = load_synth_spec(a->spec);
            spec.seed = a->seed;
            const SynthResult r = generate(spec);
            const fs::path dir(a->out_dir);
            write_synth(dir, spec, r);
            std::cout << "generated " << r.cohort.size() << " subjects (" << spec.n_cases << " cases), "
                      << r.cohort.templ.n_vertices() << " vertices each\n";
            emit_manifest("synth", ojson::parse(synth_spec_json(spec)), a->seed, {a->spec}, {dir}, dir / "manifest.json");
          }};
}

Command add_downsample_exp(CLI::App& root) {
  auto* app = root.add_subcommand("downsample-exp", "Pattern stability under rank-weighted downsampling");
  struct Args {
    CohortArgs cohort;
    std::string configs, out, summary, target = "controls", confounder_target, confounder_train = "controls";
    std::string weight = "bmi";
    double keep = 0.25;
    bool descending = false, deflation_arms = false;
    int seeds = 100;
    long confounder_pls = 3;
    double response_sd = 2.0;
    std::uint64_t seed = 0;
  };
  auto a = std::make_shared<Args>();
  a->cohort.add(app);
  app->add_option("--configs", a->configs, "JSON grid of pipeline configs")->required();
  app->add_option("--keep", a->keep, "Fraction of the target class kept")->capture_default_str();
  app->add_option("--weight-col", a->weight, "Column whose rank sets the keep weight")->capture_default_str();
  app->add_option("--target-class", a->target, "Class to downsample: controls or cases")->capture_default_str();
  app->add_flag("--descending", a->descending, "Favour low weights instead of high ones");
  app->add_option("--seeds", a->seeds, "Number of downsampling seeds (0 .. n-1)")->capture_default_str();
  app->add_option("--seed", a->seed, "Master seed")->required();
  app->add_option("--confounder-target", a->confounder_target,
                  "Column regressed on shape for the confounder pattern (default: --weight-col; 'none' to skip)");
  app->add_option("--confounder-train", a->confounder_train, "Class used for that regression")->capture_default_str();
  app->add_option("--confounder-pls", a->confounder_pls, "PLS components of that regression")->capture_default_str();
  app->add_option("--response-sd", a->response_sd, "Measurement response between -k and +k score SD")
      ->capture_default_str();
  app->add_flag("--deflation-arms", a->deflation_arms,
                "Run the three deflation-training arms for every (deflating) config instead");
  app->add_option("--out", a->out, "Per-seed report CSV")->required();
  app->add_option("--summary", a->summary, "Quantile summary CSV");
  return {app, [a] {
            const auto configs = configs_from_json(read_text(a->configs));
            ExperimentOptions o;
            if (a->target != "controls" && a->target != "cases") throw UsageError("--target-class must be controls or cases");
            o.downsample.target_class = a->target == "cases" ? 1 : 0;
            o.downsample.keep_fraction = a->keep;
            o.downsample.weight_column = a->weight;
            o.downsample.descending = a->descending;
            o.n_seeds = a->seeds;
            o.master_seed = a->seed;
            o.confounder_target = a->confounder_target.empty() ? a->weight : a->confounder_target;
            if (o.confounder_target == "none") o.confounder_target.clear();
            if (a->confounder_train != "controls" && a->confounder_train != "cases")
              throw UsageError("--confounder-train must be controls or cases");
            o.confounder_train_class = a->confounder_train == "cases" ? 1 : 0;
            o.confounder_pls = a->confounder_pls;
            o.response_sd = a->response_sd;
            const Cohort cohort = a->cohort.load();

            StabilityReport report;
            if (a->deflation_arms) {
              int n_deflating = 0;
              for (const auto& c : configs) {
                if (!c.deflate) continue;
                ++n_deflating;
                StabilityReport r = deflation_population_study(cohort, c, o);
                report.records.insert(report.records.end(), r.records.begin(), r.records.end());
                report.references.insert(report.references.end(), r.references.begin(), r.references.end());
              }
              if (n_deflating == 0) throw ConfigError("--deflation-arms needs at least one deflating config");
            } else {
              report = stability_experiment(cohort, configs, o);
            }
            write_stream_file(a->out, [&](std::ostream& os) { write_report_csv(os, report); });
            std::vector<fs::path> outputs = {a->out};
            if (!a->summary.empty()) {
              write_stream_file(a->summary, [&](std::ostream& os) { write_summary_csv(os, report); });
              outputs.emplace_back(a->summary);
            }
            int failed = 0;
            for (const auto& r : report.records) failed += r.ok ? 0 : 1;
            std::cout << report.records.size() << " fits, " << failed << " failed\n";
            for (const auto& s : report.summary())
              std::cout << (s.arm.empty() ? "" : s.arm + " ") << s.config << ": median similarity " << s.dot_full_median
                        << '\n';
            ojson conf = a->cohort.json();
            conf["keep"] = a->keep;
            conf["weight_col"] = a->weight;
            conf["target_class"] = a->target;
            conf["descending"] = a->descending;
            conf["seeds"] = a->seeds;
            conf["confounder_target"] = o.confounder_target;
            conf["confounder_train"] = a->confounder_train;
            conf["confounder_pls"] = a->confounder_pls;
            conf["response_sd"] = a->response_sd;
            conf["deflation_arms"] = a->deflation_arms;
            conf["pipelines"] = ojson::array();
            for (const auto& c : configs) conf["pipelines"].push_back(config_ojson(c));
            auto inputs = a->cohort.inputs();
            inputs.emplace_back(a->configs);
            emit_manifest("downsample-exp", conf, a->seed, inputs, outputs, sidecar(a->out));
          }};
}

Command add_dummy_exp(CLI::App& root) {
  auto* app = root.add_subcommand("dummy-exp", "Dummy confounder (label plus noise) deflation experiment");
  struct Args {
    CohortArgs cohort;
    ConfigArgs config;
    double noise_sd = 0.5;
    int repeats = 100;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto a = std::make_shared<Args>();
  a->cohort.add(app);
  a->config.add(app);
  app->add_option("--noise-sd", a->noise_sd, "SD of the Gaussian noise added to the label")->capture_default_str();
  app->add_option("--repeats", a->repeats, "Number of repeats")->capture_default_str();
  app->add_option("--seed", a->seed, "Master seed")->required();
  app->add_option("--out", a->out, "Per-repeat CSV")->required();
  return {app, [a] {
            const PipelineConfig cfg = a->config.config();
            const Cohort cohort = a->cohort.load();
            const DummyReport r = dummy_variable_experiment(cohort, cfg, a->noise_sd, a->repeats, a->seed);
            write_stream_file(a->out, [&](std::ostream& os) { write_dummy_csv(os, r); });
            std::vector<double> ctrl, both;
            for (const auto& x : r.records) {
              ctrl.push_back(x.dot_controls);
              both.push_back(x.dot_both);
            }
            std::cout << "median dot: controls-only " << quantile(ctrl, 0.5) << ", both classes " << quantile(both, 0.5)
                      << '\n';
            ojson conf = a->cohort.json();
            conf["pipeline"] = config_ojson(cfg);
            conf["noise_sd"] = a->noise_sd;
            conf["repeats"] = a->repeats;
            emit_manifest("dummy-exp", conf, a->seed, a->cohort.inputs(), {a->out}, sidecar(a->out));
          }};
}

int exit_code_for(const Error& e) {
  const std::string kind = e.kind();
  if (kind == "usage") return kExitUsage;
  if (kind == "format") return kExitFormat;
  if (kind == "dimension") return kExitDimension;
  if (kind == "data") return kExitData;
  if (kind == "config") return kExitConfig;
  if (kind == "numerical") return kExitNumerical;
  return kExitInternal;
}

}  // namespace

int command_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Statistical shape analysis with confounder adjustment and deflation", "morpho"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  std::vector<Command> commands = {add_align(app),      add_measure(app),     add_fit(app),
                                   add_cv(app),         add_score(app),       add_pattern_export(app),
                                   add_regress(app),    add_regress_shape(app), add_synth(app),
                                   add_downsample_exp(app), add_dummy_exp(app)};
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    for (const auto& c : commands)
      if (c.app->parsed()) c.run();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "morpho: " << e.kind() << " error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "morpho: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace morpho
