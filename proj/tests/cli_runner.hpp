#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "morpho/cli.hpp"

namespace morpho::test {

// Runs the command-line entry point in-process.
inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"morpho"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return command_dispatch(static_cast<int>(argv.size()), argv.data());
}

// Relative path -> file bytes for every regular file below `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[std::filesystem::relative(e.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

// Small cohort spec used by the CLI checks.
inline std::string cli_spec_json() {
  return R"({"n_controls": 16, "n_cases": 16, "resolution": 1, "seed": 1, "noise_sd": 0.1,
 "variation_sd": 0.2, "variation_modes": 4,
 "class_effect": {"magnitude": 1.0, "terms": [{"generator": "dilate_rv"}, {"generator": "dilate_lv"}]},
 "confounders": [
  {"name": "age", "kind": "normal", "controls": {"mean": 33.0, "sd": 4.0}, "cases": {"mean": 38.0, "sd": 6.0}},
  {"name": "sex", "kind": "bernoulli", "controls": {"p": 0.45}, "cases": {"p": 0.5}},
  {"name": "bmi", "kind": "normal", "controls": {"mean": 24.5, "sd": 3.5}, "cases": {"mean": 22.8, "sd": 2.0}},
  {"name": "bsa", "kind": "linear", "intercept": 0.3, "terms": {"bmi": 0.062}, "sd": 0.08}],
 "confounder_effects": [{"column": "bsa", "slope": 0.6, "terms": [{"generator": "thicken_lv"}]}]})";
}

inline std::string cli_grid_json() {
  return R"({"configs": [
  {"dr": "pca", "pca_modes": 5, "confounders": ["age", "sex", "bsa"]},
  {"dr": "pca+pls", "pca_modes": 8, "pls_modes": 2, "adjust": true, "confounders": ["age", "sex", "bsa"]},
  {"dr": "pls", "pls_modes": 2, "deflate": true, "confounders": ["age", "sex", "bsa"]}]})";
}

// Every subcommand once, writing below `work` (which must hold spec.json and
// grid.json). Returns the list of (command, exit code).
inline std::vector<std::pair<std::string, int>> run_all_commands(const std::filesystem::path& work) {
  const std::string w = work.string();
  const std::string meshes = w + "/syn/meshes", demo = w + "/syn/demographics.csv";
  std::vector<std::vector<std::string>> cmds = {
      {"synth", "--spec", w + "/spec.json", "--out-dir", w + "/syn", "--seed", "5"},
      {"align", "--meshes", meshes, "--out", w + "/aligned"},
      {"measure", "--meshes", meshes, "--out", w + "/measure.csv"},
      {"fit", "--meshes", meshes, "--demographics", demo, "--out", w + "/model.json", "--pca", "8", "--pls", "2",
       "--adjust", "--deflate", "--confounders", "age,bsa"},
      {"cv", "--meshes", meshes, "--demographics", demo, "--configs", w + "/grid.json", "--folds", "4", "--seed", "3",
       "--out", w + "/cv.csv", "--predictions", w + "/cv_pred.csv"},
      {"score", "--meshes", meshes, "--demographics", demo, "--model", w + "/model.json", "--out", w + "/scores.csv"},
      {"pattern-export", "--model", w + "/model.json", "--lambda-grid", "-2:2:1", "--out-dir", w + "/pattern"},
      {"regress", "--meshes", meshes, "--demographics", demo, "--target-col", "bsa", "--pls", "2", "--out",
       w + "/reg.json", "--cv-folds", "4", "--seed", "2", "--cv-out", w + "/reg_cv.csv"},
      {"regress-shape", "--model", w + "/reg.json", "--value", "1.9", "--out", w + "/reg_shape.off"},
      {"regress-shape", "--model", w + "/reg.json", "--values", "1.7:2.1:0.2", "--out-dir", w + "/reg_shapes"},
      {"downsample-exp", "--meshes", meshes, "--demographics", demo, "--configs", w + "/grid.json", "--seeds", "2",
       "--seed", "9", "--out", w + "/ds.csv", "--summary", w + "/ds_summary.csv"},
      {"downsample-exp", "--meshes", meshes, "--demographics", demo, "--configs", w + "/grid.json", "--seeds", "2",
       "--seed", "9", "--deflation-arms", "--out", w + "/arms.csv"},
      {"dummy-exp", "--meshes", meshes, "--demographics", demo, "--pca", "8", "--pls", "2", "--confounders",
       "age,sex,bsa", "--repeats", "3", "--seed", "4", "--out", w + "/dummy.csv"},
  };
  std::vector<std::pair<std::string, int>> codes;
  for (const auto& c : cmds) codes.emplace_back(c.front(), run_cli(c));
  return codes;
}

}  // namespace morpho::test
