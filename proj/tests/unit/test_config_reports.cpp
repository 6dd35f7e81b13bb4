#include <doctest.h>

#include <filesystem>
#include <limits>
#include <string>

#include "photostat/errors.hpp"
#include "photostat/reports.hpp"
#include "photostat/run_config.hpp"
#include "photostat/serialization.hpp"

using namespace photostat;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "run.cfg");
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("bundled configs parse") {
  for (const auto& entry : fs::directory_iterator(PHOTOSTAT_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_run_config(entry.path()));
  }
  const RunConfig lo = load_run_config(fs::path(PHOTOSTAT_CONFIG_DIR) / "hom_lo.cfg");
  CHECK(lo.sim.mode == InterferometerMode::kHom);
  CHECK(lo.sim.schedule.intra_delay == 3.04);
  const HomFitOptions o = lo.hom_fit_options();
  CHECK(o.irf_sigma == doctest::Approx(std::sqrt(2.0) * 0.1));
  CHECK(o.gamma == lo.sim.emitter.gamma_fast);
}

TEST_CASE("config values and defaults") {
  const RunConfig rc = parse_run_config(
      "schedule:\n  rep_period: 12.5\n  power_ratio: inf\nchain:\n  background_statistics: thermal\n"
      "simulation:\n  n_periods: 1000\n  rng_seed: 0x10\n  format: both\nfit:\n  irf_sigma: 0.2\n");
  CHECK(std::isinf(rc.sim.schedule.power_ratio));
  CHECK(rc.sim.chain.background_statistics == BackgroundStatistics::kThermal);
  CHECK(rc.sim.rng_seed == 16);
  CHECK(rc.format == StreamFormat::kBoth);
  CHECK(rc.hom_fit_options().irf_sigma == 0.2);
  CHECK(rc.fit.bin_width_ps == 50);
}

TEST_CASE("config errors name the file and line") {
  CHECK(error_of("emitter:\n  gamma_fast: 0.6\n  colour: red\n").rfind("run.cfg:3: unknown key 'colour'", 0) == 0);
  CHECK(error_of("emitter:\n  gamma_fast: 0.6\nlaser:\n  x: 1\n").rfind("run.cfg:3: unknown section", 0) == 0);
  CHECK(error_of("schedule:\n  rep_period: fast\n").rfind("run.cfg:2:", 0) == 0);
  CHECK(error_of("simulation:\n  n_periods: -4\n").rfind("run.cfg:2:", 0) == 0);
  CHECK(error_of("simulation:\n  mode: both\n").rfind("run.cfg:2:", 0) == 0);
  CHECK(error_of("chain:\n  eta_setup: 1.5\n").rfind("run.cfg:2: section 'chain'", 0) == 0);
  CHECK(error_of("emitter: [1, 2\n").rfind("run.cfg:", 0) == 0);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.cfg"), IoError);
}

TEST_CASE("fit report JSON round trip") {
  FitReport r;
  r.model = "hom";
  r.weighting = "data";
  r.parameters = {{"amplitude", {100.0, 1.0}, "counts/bin"}, {"gamma_dp", {1.3, 0.05}, "1/ns"}};
  r.fixed = {{"gamma", {0.62, 0.0}, "1/ns"}};
  r.covariance = Eigen::MatrixXd::Identity(2, 2) * 0.25;
  r.covariance(0, 1) = r.covariance(1, 0) = -0.01;
  r.chi2 = 2077.5;
  r.dof = 2078;
  r.chi2_per_dof = r.chi2 / r.dof;
  r.derived = {{"t2_star", {std::numeric_limits<double>::infinity(), 0.0}, "ns"}};
  r.stages = {{"side", {{"amplitude", {99.0, 1.1}, ""}}, 10.0, 8, 4, true, {}}};
  const FitReport back = fit_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.model == r.model);
  CHECK(back.parameters[1].value.value == 1.3);
  CHECK(back.parameters[1].unit == "1/ns");
  CHECK(back.covariance.isApprox(r.covariance));
  CHECK(std::isinf(back.derived[0].value.value));
  CHECK(back.stages.size() == 1);
  CHECK(back.stages[0].converged);
  CHECK(back.dof == 2078);

  nlohmann::json bad = nlohmann::json::parse(to_json(r).dump());
  bad.erase("covariance");
  CHECK_THROWS_AS(fit_report_from_json(bad), IoError);
  bad = nlohmann::json::parse(to_json(r).dump());
  bad["schema"] = "other/1";
  CHECK_THROWS_AS(fit_report_from_json(bad), IoError);
  bad = nlohmann::json::parse(to_json(r).dump());
  bad["dof"] = "many";
  CHECK_THROWS_AS(fit_report_from_json(bad), IoError);
}

TEST_CASE("config digest is a stable SHA-256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  SimConfig a;
  SimConfig b = a;
  CHECK(config_digest(a) == config_digest(b));
  b.rng_seed = 2;
  CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("provenance carries the version") {
  Provenance p;
  p.command = "photostat g2 --hist h.csv";
  const auto j = to_json(p);
  CHECK(j["version"] == version());
  CHECK(j["tool"] == "photostat");
}
