#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "helpers.hpp"
#include "morpho/error.hpp"
#include "morpho/manifest.hpp"
#include "morpho/serialize.hpp"

using namespace morpho;

TEST_SUITE("serialize") {

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("classifier round trip reproduces decisions and scores exactly") {
  const Cohort c = generate(test::small_spec(25, 3)).cohort;
  for (bool deflate : {false, true}) {
    PipelineConfig cfg;
    cfg.dr = DrMethod::PcaPls;
    cfg.pca_modes = 8;
    cfg.pls_modes = 2;
    cfg.adjust = true;
    cfg.deflate = deflate;
    cfg.confounders = {"age", "bsa"};
    const FittedPipeline f = fit_pipeline(c, cfg);
    const std::string text = classifier_to_json({f.classifier, f.pattern, c.templ});
    const SavedClassifier back = classifier_from_json(text);
    CHECK(classifier_to_json(back) == text);
    CHECK(back.classifier.decision(c) == f.classifier.decision(c));
    CHECK(back.pattern.standardized == f.pattern.standardized);
    CHECK(back.pattern.basis_id == f.pattern.basis_id);
    CHECK(back.pattern.score_sd == f.pattern.score_sd);
    CHECK(back.templ.faces == c.templ.faces);
    CHECK(back.classifier.deflation.has_value() == deflate);
  }
}

TEST_CASE("regression round trip") {
  const Cohort c = generate(test::small_spec(20, 4)).cohort;
  const ShapeRegressionModel m = regression_fit(c.shapes, c.column("bsa"), 2);
  const std::string text = regression_to_json({m, "bsa", c.templ});
  const SavedRegression back = regression_from_json(text);
  CHECK(back.target == "bsa");
  CHECK(back.model.predict(c.shapes) == m.predict(c.shapes));
  CHECK(representative_for_value(back.model, 1.9).coords() == representative_for_value(m, 1.9).coords());
}

TEST_CASE("model files are checked") {
  const Cohort c = generate(test::small_spec(10, 4)).cohort;
  const ShapeRegressionModel m = regression_fit(c.shapes, c.column("bsa"), 2);
  const std::string reg = regression_to_json({m, "bsa", c.templ});
  CHECK_THROWS_AS(classifier_from_json(reg), FormatError);
  CHECK_THROWS_AS(classifier_from_json("[1, 2"), FormatError);
  auto j = nlohmann::json::parse(reg);
  j["version"] = 99;
  CHECK_THROWS_AS(regression_from_json(j.dump()), FormatError);
  j = nlohmann::json::parse(reg);
  j["mean_shape"].erase(j["mean_shape"].begin());
  CHECK_THROWS_AS(regression_from_json(j.dump()), FormatError);
  test::TempDir dir("model");
  CHECK_THROWS_AS(load_classifier(dir / "absent.json"), FormatError);
}

TEST_CASE("config JSON") {
  PipelineConfig c;
  c.dr = DrMethod::Pls;
  c.pls_modes = 4;
  c.deflate = true;
  c.deflate_train = TrainingSelector::cases();
  c.confounders = {"age"};
  const PipelineConfig back = config_from_json(config_to_json(c));
  CHECK(back.label() == c.label());
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK_THROWS_AS(config_from_json(R"({"dr": "pca", "pca_mode": 3})"), ConfigError);
  CHECK(configs_from_json(R"([{"dr": "pca"}, {"dr": "pls"}])").size() == 2);
  CHECK(configs_from_json(R"({"configs": [{"dr": "pca+pls", "adjust": true, "confounders": ["age"]}]})")[0].adjust);
  CHECK_THROWS_AS(configs_from_json(R"([{"dr": "pca", "adjust": true}])"), ConfigError);
}

TEST_CASE("manifest digests inputs and outputs and excludes itself") {
  test::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "out");
  std::ofstream(dir / "in.txt") << "abc";
  std::ofstream(dir / "out" / "b.csv") << "2\n";
  std::ofstream(dir / "out" / "a.csv") << "1\n";
  RunManifest m;
  m.command = "fit";
  m.config_json = R"({"k": 1})";
  m.seed = 7;
  m.inputs = {dir / "in.txt"};
  m.outputs = {dir / "out"};
  m.write(dir / "out" / "manifest.json");
  const auto j = nlohmann::json::parse(read_text(dir / "out" / "manifest.json"));
  CHECK(j["tool"] == "morpho");
  CHECK(j["version"] == kToolVersion);
  CHECK(j["seed"] == 7);
  CHECK(j["inputs"][0]["sha256"] == sha256_hex("abc"));
  REQUIRE(j["outputs"].size() == 2);
  CHECK(j["outputs"][0]["path"].get<std::string>().ends_with("a.csv"));
  const std::string first = read_text(dir / "out" / "manifest.json");
  m.write(dir / "out" / "manifest.json");
  CHECK(read_text(dir / "out" / "manifest.json") == first);
}

TEST_CASE("manifest timestamp comes from SOURCE_DATE_EPOCH") {
  RunManifest m;
  m.command = "x";
  const char* old = std::getenv("SOURCE_DATE_EPOCH");
  const std::string saved = old ? old : "";
  unsetenv("SOURCE_DATE_EPOCH");
  CHECK(nlohmann::json::parse(m.to_json())["timestamp"].is_null());
  setenv("SOURCE_DATE_EPOCH", "86400", 1);
  CHECK(nlohmann::json::parse(m.to_json())["timestamp"] == "1970-01-02T00:00:00Z");
  if (old) setenv("SOURCE_DATE_EPOCH", saved.c_str(), 1);
  else unsetenv("SOURCE_DATE_EPOCH");
}

}  // TEST_SUITE
