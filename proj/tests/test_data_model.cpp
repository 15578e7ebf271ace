#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <string>

#include "jlp/data/dataset_io.hpp"
#include "jlp/data/design.hpp"
#include "jlp/data/model_spec.hpp"
#include "jlp/errors.hpp"

using namespace jlp;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("jlp_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
  static int counter;
};
int TempDir::counter = 0;

const char* kSpecText =
    "[structural]\n"
    "fixed = t\n"
    "random = 1, t\n"
    "\n"
    "[marker y1]\n"
    "type = ordinal\n"
    "levels = 4\n"
    "\n"
    "[marker y2]\n"
    "type = gaussian\n"
    "\n"
    "[cause c1]\n"
    "baseline = weibull\n"
    "covariates = sex\n"
    "association = random_effects\n"
    "\n"
    "[cause c2]\n"
    "baseline = weibull\n"
    "association = random_effects\n";

const char* kSurvival =
    "subject,entry,time,cause,sex\n"
    "s1,0,4.2,1,0\n"
    "s2,0.5,3.0,0,1\n"
    "s3,1.0,2.5,2,1\n";

const char* kLongitudinal =
    "subject,marker,time,value\n"
    "s1,y1,0,2\n"
    "s1,y1,1,3\n"
    "s1,y2,0,0.25\n"
    "s2,y1,1,0\n"
    "s2,y2,2.5,-1.5\n"
    "s3,y2,1.5,0.75\n";

ModelSpec bound_spec() {
  ModelSpec spec = parse_model_spec_text(kSpecText);
  spec.bind_covariates({"sex"});
  return spec;
}

}  // namespace

TEST_CASE("well-formed CSVs load and validate") {
  TempDir dir;
  const auto lng = dir.file("long.csv", kLongitudinal);
  const auto srv = dir.file("surv.csv", kSurvival);
  const ModelSpec spec = bound_spec();

  JointDataset data = load_joint_dataset(lng, srv, spec);
  CHECK(data.subjects.size() == 3);
  CHECK(data.observations.size() == 6);
  CHECK(data.covariate_names == std::vector<std::string>{"sex"});
  CHECK(data.subject_index("s2") == 1);
  CHECK(data.subjects[2].entry == 1.0);
  CHECK(data.subjects[2].cause == 2);
  CHECK(data.observations[0].marker == 0);
  CHECK(data.observations[2].value == 0.25);
}

TEST_CASE("ingestion rejects invariant violations with located errors") {
  const ModelSpec spec = bound_spec();
  TempDir dir;
  const auto lng = dir.file("long.csv", kLongitudinal);

  SUBCASE("missing column") {
    const auto srv = dir.file("surv.csv", "subject,entry,time,sex\ns1,0,4,0\n");
    CHECK_THROWS_AS(load_joint_dataset(lng, srv, spec), MissingColumn);
  }
  SUBCASE("cause out of range, error names the row") {
    const auto srv = dir.file("surv.csv",
                              "subject,entry,time,cause,sex\n"
                              "s1,0,4.2,1,0\ns2,0.5,3.0,3,1\ns3,1,2.5,2,1\n");
    try {
      load_joint_dataset(lng, srv, spec);
      FAIL("expected ValueOutOfRange");
    } catch (const ValueOutOfRange& e) {
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
  }
  SUBCASE("observation after the event time") {
    const auto srv = dir.file("surv.csv",
                              "subject,entry,time,cause,sex\n"
                              "s1,0,4.2,1,0\ns2,0.5,3.0,0,1\ns3,1,2.5,2,1\n");
    const auto bad = dir.file("long2.csv",
                              "subject,marker,time,value\ns1,y1,5.0,2\n");
    CHECK_THROWS_AS(load_joint_dataset(bad, srv, spec), ObservationAfterEvent);
  }
  SUBCASE("ordinal level outside 0..M_k") {
    const auto srv = dir.file("surv.csv", kSurvival);
    const auto bad = dir.file("long2.csv",
                              "subject,marker,time,value\ns1,y1,1.0,4\n");
    CHECK_THROWS_AS(load_joint_dataset(bad, srv, spec), ValueOutOfRange);
  }
  SUBCASE("unknown subject in the longitudinal file") {
    const auto srv = dir.file("surv.csv", kSurvival);
    const auto bad = dir.file("long2.csv",
                              "subject,marker,time,value\nzz,y1,1.0,2\n");
    CHECK_THROWS_AS(load_joint_dataset(bad, srv, spec), Error);
  }
  SUBCASE("event before entry") {
    const auto srv = dir.file("surv.csv",
                              "subject,entry,time,cause,sex\ns1,2.0,1.0,0,0\n");
    const auto empty = dir.file("long2.csv", "subject,marker,time,value\n");
    CHECK_THROWS_AS(load_joint_dataset(empty, srv, spec), ValueOutOfRange);
  }
}

TEST_CASE("write then reload round-trips") {
  TempDir dir;
  const ModelSpec spec = bound_spec();
  JointDataset data = load_joint_dataset(dir.file("l.csv", kLongitudinal),
                                         dir.file("s.csv", kSurvival), spec);

  const auto l2 = (dir.path / "l2.csv").string();
  const auto s2 = (dir.path / "s2.csv").string();
  write_joint_dataset(data, l2, s2, spec);
  JointDataset again = load_joint_dataset(l2, s2, spec);

  REQUIRE(again.subjects.size() == data.subjects.size());
  REQUIRE(again.observations.size() == data.observations.size());
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    CHECK(again.subjects[i].id == data.subjects[i].id);
    CHECK(again.subjects[i].entry == data.subjects[i].entry);
    CHECK(again.subjects[i].time == data.subjects[i].time);
    CHECK(again.subjects[i].cause == data.subjects[i].cause);
    CHECK(again.subjects[i].covariates == data.subjects[i].covariates);
  }
  for (std::size_t i = 0; i < data.observations.size(); ++i) {
    CHECK(again.observations[i].subject == data.observations[i].subject);
    CHECK(again.observations[i].marker == data.observations[i].marker);
    CHECK(again.observations[i].time == data.observations[i].time);
    CHECK(again.observations[i].value == data.observations[i].value);
  }

  // second serialization is bit-identical
  const auto l3 = (dir.path / "l3.csv").string();
  const auto s3 = (dir.path / "s3.csv").string();
  write_joint_dataset(again, l3, s3, spec);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(l2) == slurp(l3));
  CHECK(slurp(s2) == slurp(s3));
}

TEST_CASE("model spec parsing and formula grammar") {
  const ModelSpec spec = bound_spec();
  CHECK(spec.n_fixed() == 1);
  CHECK(spec.q() == 2);
  CHECK(spec.n_markers() == 2);
  CHECK(spec.n_causes() == 2);
  CHECK(spec.markers[0].type == MarkerType::Ordinal);
  CHECK(spec.markers[0].levels == 4);
  CHECK(spec.markers[0].max_level() == 3);
  CHECK(spec.causes[0].association == AssociationKind::RandomEffects);
  CHECK(spec.constrained_scale());

  auto terms = parse_formula("t, t^2, sex, t*sex");
  REQUIRE(terms.size() == 4);
  std::vector<double> cov{1.0};
  for (auto& tm : terms)
    for (auto& f : tm.factors)
      if (f.kind == TermFactor::Kind::Covariate) f.covariate_index = 0;
  CHECK(terms[0].evaluate(3.0, cov) == doctest::Approx(3.0));
  CHECK(terms[1].evaluate(3.0, cov) == doctest::Approx(9.0));
  CHECK(terms[2].evaluate(3.0, cov) == doctest::Approx(1.0));
  CHECK(terms[3].evaluate(3.0, cov) == doctest::Approx(3.0));  // time x sex

  CHECK_THROWS_AS(parse_model_spec_text("[structural]\nfixed = t\n"),
                  ConfigError);

  ModelSpec unbound = parse_model_spec_text(kSpecText);
  CHECK_THROWS_AS(unbound.bind_covariates({"age"}), UnknownCovariate);
}

TEST_CASE("build_design evaluates terms in declared order") {
  ModelSpec spec = parse_model_spec_text(
      "[structural]\n"
      "fixed = t, t^2\n"
      "random = 1, t\n"
      "[marker y]\n"
      "type = gaussian\n"
      "[cause c1]\n"
      "baseline = weibull\n"
      "covariates = sex\n"
      "association = random_effects\n");
  spec.bind_covariates({"sex"});

  SubjectRecord s;
  s.id = "a";
  s.time = 10.0;
  s.covariates = {1.0};

  Design d = build_design(s, 2.0, spec, {"sex"});
  REQUIRE(d.x_fixed.size() == 2);
  CHECK(d.x_fixed[0] == doctest::Approx(2.0));
  CHECK(d.x_fixed[1] == doctest::Approx(4.0));
  REQUIRE(d.z_random.size() == 2);
  CHECK(d.z_random[0] == doctest::Approx(1.0));
  CHECK(d.z_random[1] == doctest::Approx(2.0));
  REQUIRE(d.x_surv.size() == 1);
  REQUIRE(d.x_surv[0].size() == 1);
  CHECK(d.x_surv[0][0] == doctest::Approx(1.0));

  // purity: identical inputs, identical outputs
  Design d2 = build_design(s, 2.0, spec, {"sex"});
  CHECK((d.x_fixed - d2.x_fixed).norm() == 0.0);
  CHECK((d.z_random - d2.z_random).norm() == 0.0);
}

TEST_CASE("natural cubic spline terms evaluate and stay linear in the tails") {
  auto terms = parse_formula("ncs(t; 0 2 10)");
  CHECK(terms.size() >= 1);
  std::vector<double> cov;
  for (const auto& tm : terms) {
    CHECK(tm.depends_on_time());
    // linearity beyond the boundary knots: second difference vanishes
    const double a = tm.evaluate(12.0, cov), b = tm.evaluate(13.0, cov),
                 c = tm.evaluate(14.0, cov);
    CHECK(c - b == doctest::Approx(b - a).epsilon(1e-9));
  }
}
