#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "morpho/cohort.hpp"

namespace morpho {

/// Three ellipsoid shells from subdivided icosahedra: LV endocardium, LV
/// epicardium and RV. The RV vertices facing the LV are labelled SEPTUM.
/// Every shell is closed and outward oriented; each has 10 * 4^r + 2 vertices.
TriMesh make_template(int resolution = 2);

/// Named displacement fields on the template, returned as unit 3N vectors:
///   dilate_lv          LV shells pushed outward, mass kept to first order
///   thicken_lv         LV epicardium pushed outward (mass up, cavity unchanged)
///   thicken_lv_base    as thicken_lv, concentrated at the base
///   concentric_lv      epicardium outward and endocardium inward
///   dilate_rv          RV shell pushed outward
///   dilate_rv_outflow  as dilate_rv, concentrated at the basal RV
///   scale              uniform scaling about the centroid
///   random:<k>         smooth random field number k (quadratic in position)
Eigen::VectorXd effect_direction(const TriMesh& templ, const std::string& generator, std::uint64_t seed = 0);
std::vector<std::string> generator_names();

struct EffectTerm {
  std::string generator;
  double weight = 1.0;
};

/// Unit direction: normalised weighted sum of unit generator fields.
struct Effect {
  std::vector<EffectTerm> terms;
  double magnitude = 0.0;  // RMS per-vertex displacement, mm
};

struct ClassParams {
  double mean = 0.0, sd = 0.0;  // normal
  double p = 0.5;               // bernoulli
};

struct ConfounderSpec {
  enum class Kind { Normal, Bernoulli, Linear };
  std::string name;
  Kind kind = Kind::Normal;
  ClassParams controls, cases;
  // Linear: intercept + sum coef * earlier column + N(0, sd^2)
  double intercept = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  double sd = 0.0;
};

struct ConfounderEffect {
  std::string column;
  Effect effect;  // magnitude is mm RMS per standard deviation of the column
};

struct SynthSpec {
  int n_controls = 80;
  int n_cases = 80;
  int resolution = 2;
  Effect class_effect;
  std::vector<ConfounderSpec> confounders;
  std::vector<ConfounderEffect> confounder_effects;
  // Natural variation: each subject gets an independent N(0, variation_sd^2)
  // RMS displacement along every named generator field and along
  // `variation_modes` smooth random fields.
  int variation_modes = 8;
  double variation_sd = 0.0;
  std::vector<std::string> variation_generators = generator_names();
  double noise_sd = 0.0;        // iid per coordinate, mm
  std::uint64_t seed = 0;
};

SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string synth_spec_json(const SynthSpec& spec);

struct GroundTruth {
  Eigen::VectorXd class_direction;                          // unit 3N
  std::map<std::string, Eigen::VectorXd> confounder_directions;  // unit 3N
  std::vector<Eigen::VectorXd> variation_directions;
  std::map<std::string, std::pair<double, double>> standardization;  // column -> (mean, sd)
};

struct SynthResult {
  Cohort cohort;
  GroundTruth truth;
};

/// shape_i = template + y_i * a * g + sum_j b_j * z_ij * d_j + variation + noise,
/// with a and b_j scaled to RMS-per-vertex mm and z_ij the cohort-standardised
/// confounder. Throws DataError when a subject's shells lose positive volume
/// (the effects are too large for the template).
SynthResult generate(const SynthSpec& spec);

/// Writes meshes/*.off, meshes/regions.txt, demographics.csv and ground_truth.json.
void write_synth(const std::filesystem::path& out_dir, const SynthSpec& spec, const SynthResult& result);

}  // namespace morpho
