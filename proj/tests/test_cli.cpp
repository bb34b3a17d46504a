#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "besi/experiment.hpp"

using namespace besi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("besi_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.yaml";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run(const fs::path& cfg, RunOverrides ov, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = run_command(cfg.string(), ov, o, e);
  if (err) *err = e.str();
  return code;
}

const char* kPseudo = R"(kind: pseudometric
system: rotation_golden
seed: 11
observables: [torus_character(1)]
metrics: [df_L2, db]
pairs: 3
schedule: {sizes: [1000, 2000, 4000], burn_in: 1}
)";

}  // namespace

TEST_CASE("fixture catalog") {
  const auto all = list_fixtures();
  const auto none = list_fixtures("");
  CHECK(all.size() == none.size());
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].name < all[i].name);
  std::set<std::string> names;
  for (const auto& f : all) names.insert(f.name);
  for (const char* n : {"rotation_golden", "bernoulli_half", "fibonacci", "thue_morse", "delone_fibonacci",
                        "delone_lattice_z", "delone_lattice_z2", "delone_poisson"})
    CHECK(names.count(n) == 1);
  for (const auto& f : all)
    if (f.name == "bernoulli_half") CHECK(f.known_class == "weakly_mixing");
  const auto some = list_fixtures("delone");
  CHECK(some.size() == 4);
  std::ostringstream os;
  CHECK(list_command("rotation", os) == 0);
  CHECK(os.str().find("rotation_golden") != std::string::npos);
}

TEST_CASE("observable tags round-trip") {
  for (const char* t : {"constant(0.5)", "torus_character(1,-2)", "torus_cosine(1)", "exp_cosine(0)", "symbol(-3)",
                        "centered_symbol(2,0.25)", "parity(0,4)", "cylinder(-1:101)"})
    CHECK(parse_observable(t).tag == t);
  for (const char* t : {"nope(1)", "symbol", "symbol(a)", "torus_cosine(-1)", "cylinder(0:12)", "parity(1)"})
    CHECK_THROWS_AS(parse_observable(t), ConfigError);
  try {
    parse_observable("nope(1)");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("torus_character") != std::string::npos);
  }
}

TEST_CASE("spectrum run finds the rotation frequency") {
  const auto out = run_experiment(R"(kind: spectrum
system: rotation_golden
seed: 2
observables: [torus_character(1)]
ap: false
)");
  const auto& obs = out.report["results"]["observables"];
  REQUIRE(obs.size() == 1);
  const auto& peaks = obs[0]["scan"]["peaks"];
  REQUIRE(peaks.size() == 1);
  CHECK(std::abs(peaks[0]["w"].get<double>() - 0.6180339887498949) <= 1e-4);
  REQUIRE(out.files.size() == 1);
  CHECK(out.files[0].first == "spectrum.csv");
  CHECK(out.files[0].second.rfind("w,re,im,abs", 0) == 0);
  CHECK(out.report["format_version"] == kReportFormatVersion);
}

TEST_CASE("dichotomy run on the Bernoulli fixture") {
  const auto out = run_experiment(R"(kind: dichotomy
system: bernoulli_half
seed: 4
schedule: [512, 1024, 2048]
sampler: {centers: 8, per_ball: 8}
spectral_schedule: [10000, 20000, 40000]
expansivity_pairs: 100
)");
  std::size_t violated = 0;
  for (const auto& i : out.report["results"]["implications"]) violated += !i["holds"].get<bool>();
  CHECK(violated == 0);
  CHECK(out.report["results"]["topological"]["label"] == "mean_sensitive");
}

TEST_CASE("malformed configs exit with 2 and write nothing") {
  const fs::path dir = scratch("bad");
  const std::vector<std::string> bad = {
      "kind: [unclosed\n",
      "kind: pseudometric\nsystem: rotation_golden\n",                               // no seed
      "kind: pseudometric\nsystem: no_such_system\nseed: 1\n",                       // unknown tag
      "kind: pseudometric\nsystem: rotation_golden\nseed: 1\nobservables: [x(1)]\n",  // unknown observable
      "kind: spectrum\nsystem: rotation_golden\nseed: 1\nbogus: 3\n",                // unknown key
      "kind: teleport\nseed: 1\n",
      "kind: classify\nsystem: rotation_golden\nseed: 1\nschedule: [10, 5]\n",
      "kind: classify\nsystem: rotation_golden\nseed: 1\ntau: 0.7\n",
      "kind: classify\nsystem: bernoulli_half\nseed: 1\nobservables: [torus_cosine(0)]\n",
      "kind: delone\ndelone: delone_lattice_z\nregion: {lo: [0], hi: [500]}\nseed: 1\n",
      "kind: delone\ndelone: {type: poisson, intensity: -1}\nregion: {lo: [0], hi: [10000]}\nseed: 1\n",
      "kind: pseudometric\nsystem: {type: torus_rotation, alpha: [0.5]}\nseed: 1\n",
      "- just\n- a list\n",
  };
  for (std::size_t i = 0; i < bad.size(); ++i) {
    CAPTURE(bad[i]);
    const fs::path out = dir / ("out" + std::to_string(i));
    RunOverrides ov;
    ov.out_dir = out.string();
    std::string err;
    CHECK(run(write_config(dir, bad[i]), ov, &err) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(err.empty());
  }
  std::string err;
  RunOverrides ov;
  ov.out_dir = (dir / "x").string();
  CHECK(run(write_config(dir, "kind: pseudometric\nsystem: nope\nseed: 1\n"), ov, &err) == 2);
  CHECK(err.find("rotation_golden") != std::string::npos);
  CHECK(run(dir / "missing.yaml", ov) == 2);
  ov.schedule = std::vector<double>{100, 50};
  CHECK(run(write_config(dir, kPseudo), ov) == 2);
}

TEST_CASE("internal errors exit with 3") {
  const fs::path dir = scratch("internal");
  std::ofstream(dir / "blocker") << "file";
  RunOverrides ov;
  ov.out_dir = (dir / "blocker" / "sub").string();
  CHECK(run(write_config(dir, kPseudo), ov) == 3);
}

TEST_CASE("reports are deterministic and the echo round-trips") {
  const fs::path dir = scratch("det");
  RunOverrides ov;
  ov.out_dir = (dir / "a").string();
  REQUIRE(run(write_config(dir, kPseudo), ov) == 0);
  ov.out_dir = (dir / "b").string();
  REQUIRE(run(write_config(dir, kPseudo), ov) == 0);
  const json a = json::parse(slurp(dir / "a" / "report.json")), b = json::parse(slurp(dir / "b" / "report.json"));
  CHECK(strip_timing(a).dump() == strip_timing(b).dump());
  CHECK(slurp(dir / "a" / "traces.csv") == slurp(dir / "b" / "traces.csv"));
  CHECK(a["timing"].contains("wall_seconds"));

  const std::string echo = a["config"].dump(2);
  const auto again = run_experiment(echo);
  CHECK(again.report["config"].dump() == a["config"].dump());
  CHECK(again.report["results"].dump() == a["results"].dump());

  // thread count does not change any number
  RunOverrides t;
  t.threads = 3;
  const auto threaded = run_experiment(kPseudo, t);
  CHECK(threaded.report["results"].dump() == a["results"].dump());
}

TEST_CASE("overrides") {
  RunOverrides ov;
  ov.seed = 99;
  ov.schedule = std::vector<double>{500, 1000, 2000};
  const auto out = run_experiment(kPseudo, ov);
  CHECK(out.report["config"]["seed"] == 99);
  CHECK(out.report["config"]["schedule"]["sizes"].size() == 3);
  CHECK(out.report["config"]["schedule"]["sizes"][0] == 500.0);

  const std::string no_seed = "kind: pseudometric\nsystem: rotation_golden\npairs: 1\nschedule: [100, 200]\n";
  CHECK_THROWS_AS(run_experiment(no_seed), ConfigError);
  RunOverrides s;
  s.seed = 5;
  CHECK(run_experiment(no_seed, s).report["config"]["seed"] == 5);
}

TEST_CASE("output directory precedence") {
  const fs::path dir = scratch("outdir");
  const std::string cfg = std::string(kPseudo) + "out: " + (dir / "from_config").string() + "\n";
  ::setenv("BESI_OUT_DIR", (dir / "from_env").string().c_str(), 1);
  CHECK(run_experiment(kPseudo).out_dir == (dir / "from_env").string());
  CHECK(run_experiment(cfg).out_dir == (dir / "from_config").string());
  RunOverrides ov;
  ov.out_dir = (dir / "from_flag").string();
  CHECK(run_experiment(cfg, ov).out_dir == (dir / "from_flag").string());
  ::unsetenv("BESI_OUT_DIR");
  // the output location is not part of the echo
  CHECK_FALSE(run_experiment(cfg).report["config"].contains("out"));
}

TEST_CASE("explicit pairs and mapping system specs") {
  const auto out = run_experiment(R"(kind: pseudometric
system: {type: torus_rotation, alpha: [0.6180339887498949]}
seed: 1
observables: [torus_character(1)]
metrics: [df_L2, db]
pair: [[0.0], [0.25]]
schedule: [1000, 10000, 100000]
)");
  const auto& est = out.report["results"]["estimates"];
  REQUIRE(est.size() == 2);
  CHECK(std::abs(est[0]["mean"].get<double>() - std::sqrt(2.0)) <= 1e-6);
  CHECK(std::abs(est[1]["mean"].get<double>() - 0.25) <= 1e-9);

  const auto prod = run_experiment(R"(kind: classify
system: {type: product, factors: [rotation_golden, {type: sturmian, alpha: 0.41421356237309503}]}
seed: 1
flavors: [topological]
schedule: [256, 512]
sampler: {centers: 4, per_ball: 4}
)");
  CHECK(prod.report["results"]["verdicts"].size() == 1);
}

TEST_CASE("delone run") {
  const auto out = run_experiment(R"(kind: delone
delone: {type: lattice}
region: {lo: [0], hi: [3000]}
seed: 1
schedule: [128, 256, 512]
sampler: {centers: 6, per_ball: 6}
)");
  CHECK(out.report["results"]["class"] == "crystalline");
  REQUIRE(out.files.size() == 1);
  CHECK(out.files[0].first == "diffraction.csv");
  CHECK(out.files[0].second.rfind("k0,intensity,is_peak", 0) == 0);
}
