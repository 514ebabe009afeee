#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>

#include "morpho/random.hpp"
#include "morpho/shape.hpp"
#include "morpho/synth.hpp"

namespace morpho::test {

// Small cohort: class effect on the ventricles, a bsa effect that thickens
// the LV, bmi-driven bsa and an age gap between classes.
inline SynthSpec small_spec(int n_per_class = 30, std::uint64_t seed = 1) {
  SynthSpec s;
  s.n_controls = n_per_class;
  s.n_cases = n_per_class;
  s.resolution = 1;
  s.seed = seed;
  s.noise_sd = 0.1;
  s.variation_sd = 0.2;
  s.variation_modes = 4;
  s.class_effect = {{{"dilate_rv", 1.0}, {"dilate_lv", 1.0}}, 1.0};
  ConfounderSpec age{"age", ConfounderSpec::Kind::Normal, {33.0, 4.0, 0.5}, {38.0, 6.0, 0.5}, 0.0, {}, 0.0};
  ConfounderSpec sex{"sex", ConfounderSpec::Kind::Bernoulli, {0.0, 0.0, 0.45}, {0.0, 0.0, 0.5}, 0.0, {}, 0.0};
  ConfounderSpec bmi{"bmi", ConfounderSpec::Kind::Normal, {24.5, 3.5, 0.5}, {22.8, 2.0, 0.5}, 0.0, {}, 0.0};
  ConfounderSpec bsa{"bsa", ConfounderSpec::Kind::Linear, {}, {}, 0.3, {{"bmi", 0.062}}, 0.08};
  s.confounders = {age, sex, bmi, bsa};
  s.confounder_effects = {{"bsa", {{{"thicken_lv", 1.0}}, 0.6}}};
  return s;
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline ShapeVector random_shape(Rng& rng, Eigen::Index n_points, double spread = 10.0) {
  std::normal_distribution<double> n(0.0, spread);
  Eigen::VectorXd v(3 * n_points);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n(rng);
  return ShapeVector(v);
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Eigen::MatrixXd centred(const Eigen::MatrixXd& m) { return m.rowwise() - m.colwise().mean(); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("morpho_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace morpho::test
