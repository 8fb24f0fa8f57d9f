#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "kdtl/cli/commands.hpp"
#include "kdtl/cli/config.hpp"
#include "kdtl/cli/csv.hpp"
#include "kdtl/scan_fit.hpp"

using doctest::Approx;
using namespace kdtl;
using namespace kdtl::cli;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = KDTL_CONFIG_DIR;
const fs::path kReference = kConfigDir / "l12_reference.json";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json reference_json() { return json::parse(slurp(kReference)); }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "kdtl_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig config_from(const json& j, const fs::path& out) {
  auto c = parse_config(j.dump(), kConfigDir);
  apply_overrides(c, {out, std::nullopt, std::nullopt});
  return c;
}

// Field path reported for an invalid config, or "" if it parsed.
std::string error_field(const std::function<void(json&)>& edit) {
  json j = reference_json();
  edit(j);
  try {
    parse_config(j.dump(), kConfigDir);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(KDTL_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void check_csv_outputs(const CommandResult& r) {
  for (const auto& p : r.outputs) {
    if (p.extension() != ".csv") continue;
    CAPTURE(p.string());
    const auto issues = validate_csv(p);
    for (const auto& i : issues) MESSAGE(i.line << ": " << i.message);
    CHECK(issues.empty());
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("reference config parses") {
  const auto c = load_config(kReference);
  CHECK(c.seed == 20130601);
  CHECK(c.model == VisibilityModel::Quantum);
  REQUIRE(c.setup);
  CHECK(c.setup->open_fraction == Approx(110.0 / 266.0));
  REQUIRE(c.visibility);
  CHECK(c.visibility->powers_w.size() == 201);
  CHECK(c.visibility->powers_w.back() == 2.0);
  REQUIRE(c.beam);
  CHECK(c.beam->n_samples == 1'000'000);
  const auto m = resolve_molecule(c);
  CHECK(m.composition.to_string() == "C284H190F320N4S12");
  CHECK(m.mass_amu == Approx(10122.88101184));
}

TEST_CASE("config errors name the field") {
  CHECK(error_field([](json&) {}) == "");
  CHECK(error_field([](json& j) { j["bogus"] = 1; }) == "bogus");
  CHECK(error_field([](json& j) { j["setup"]["period_m"] = "x"; }) == "setup.period_m");
  CHECK(error_field([](json& j) { j["setup"].erase("waist_y_m"); }) == "setup.waist_y_m");
  CHECK(error_field([](json& j) { j["setup"]["laser_wavelength_m"] = 600e-9; }) == "setup");
  CHECK(error_field([](json& j) { j["model"] = "semi"; }) == "model");
  CHECK(error_field([](json& j) { j["seed"] = -3; }) == "seed");
  CHECK(error_field([](json& j) { j["velocity"]["beam"] = true; }) == "velocity");
  CHECK(error_field([](json& j) { j["velocity"] = json::object(); }) == "velocity");
  CHECK(error_field([](json& j) { j["velocity"]["analytic"]["fwhm_m_s"] = -1; }) ==
        "velocity.analytic.fwhm_m_s");
  CHECK(error_field([](json& j) { j["molecule"]["library_member"]["library_file"] = "nope.txt"; }) ==
        "molecule.library_member.library_file");
  CHECK(error_field([](json& j) { j["molecule"]["formula"] = "C60"; }) == "molecule");
  CHECK(error_field([](json& j) { j["visibility"]["powers_w"] = json::array({0.5, -1.0}); }) ==
        "visibility.powers_w[1]");
  CHECK(error_field([](json& j) { j["visibility"]["powers_w"]["count"] = 0; }) ==
        "visibility.powers_w.count");
  CHECK(error_field([](json& j) { j["scan"]["points"] = 3; }) == "scan.points");
  CHECK(error_field([](json& j) { j["library"]["peaks"] = "missing.csv"; }) == "library.peaks");
  CHECK(error_field([](json& j) { j["beam"]["n_samples"] = 9999; }) == "beam.n_samples");
  CHECK(error_field([](json& j) { j["beam"]["transmission"] = 2; }) == "beam.transmission");
  CHECK(error_field([](json& j) { j["beam"]["geometry"]["delimiters"].erase(0); }) ==
        "beam.geometry.delimiters");
  CHECK(error_field([](json& j) { j["beam"]["geometry"]["delimiters"][1]["opening_m"] = 0; }) ==
        "beam.geometry");
  CHECK(error_field([](json& j) { j["beam"]["geometry"]["delimiters"][2]["bad"] = 0; }) ==
        "beam.geometry.delimiters[2].bad");
  CHECK(error_field([](json& j) {
          j.erase("beam");
          j["velocity"] = {{"beam", true}};
        }) == "velocity.beam");
  CHECK_THROWS_AS(parse_config("{ not json", kConfigDir), ConfigError);
  CHECK_THROWS_AS(load_config(kConfigDir / "absent.json"), ConfigError);
}

TEST_CASE("molecule from an explicit formula") {
  json j = reference_json();
  j["molecule"] = {{"formula", "C60"}, {"alpha_m3", 79e-30}};
  const auto c = parse_config(j.dump(), kConfigDir);
  const auto m = resolve_molecule(c);
  CHECK(m.mass_amu == Approx(720.66));
  j["molecule"]["mass_amu"] = 720.0;
  CHECK(resolve_molecule(parse_config(j.dump(), kConfigDir)).mass_amu == 720.0);
  j["molecule"]["formula"] = "C60Qq";
  CHECK_THROWS_WITH_AS(parse_config(j.dump(), kConfigDir), doctest::Contains("molecule.formula"),
                       ConfigError);
}

TEST_CASE("visibility command") {
  const auto out = scratch("vis");
  const auto r = cmd_visibility(config_from(reference_json(), out));
  check_csv_outputs(r);
  CHECK(r.outputs.back().filename() == "visibility_manifest.json");
  const double peak = std::stod(r.get("peak_power_w"));
  CHECK(peak > 0.6);
  CHECK(peak < 1.4);
  CHECK(std::stod(r.get("classical_at_peak")) < 0.10);
  const auto text = slurp(out / "visibility_curves.csv");
  CHECK(text.starts_with("power [W],V_quantum [1],V_classical [1],V_quantum_v+5 [1],V_quantum_v-5 [1]\n"));

  json j = reference_json();
  j["visibility"]["powers_w"] = json::array({0});
  const auto zero = cmd_visibility(config_from(j, scratch("vis0")));
  CHECK(slurp(zero.outputs.front()) ==
        "power [W],V_quantum [1],V_classical [1],V_quantum_v+5 [1],V_quantum_v-5 [1]\n0,0,0,0,0\n");
}

TEST_CASE("scan command") {
  json j = reference_json();
  j["scan"]["ensemble_seeds"] = 0;
  const auto r = cmd_scan(config_from(j, scratch("scan")));
  check_csv_outputs(r);
  const double model_v = std::stod(r.get("model_visibility"));
  const double fitted = std::stod(r.get("fitted_visibility"));
  const double sigma = std::stod(r.get("uncertainty"));
  CHECK(std::abs(fitted - model_v) < 4.0 * sigma);
  CHECK(sigma < 0.03);
  const auto record = json::parse(slurp(r.outputs[1]));
  CHECK(record["visibility"].get<double>() == Approx(fitted).epsilon(1e-3));
  // the scan file reads back
  const auto scan = read_scan(r.outputs[0]);
  CHECK(scan.counts.size() == 20);
  CHECK(scan.period_nm == 266.0);

  SUBCASE("no light grating") {
    j["setup"]["laser_power_w"] = 0.0;
    const auto z = cmd_scan(config_from(j, scratch("scan0")));
    CHECK(std::stod(z.get("model_visibility")) == 0.0);
    CHECK(std::stod(z.get("fitted_visibility")) < 3.0 * std::stod(z.get("uncertainty")) + 1e-4);
  }
  SUBCASE("classical model") {
    j["model"] = "classical";
    const auto c = cmd_scan(config_from(j, scratch("scanc")));
    CHECK(std::stod(c.get("model_visibility")) == Approx(0.078).epsilon(0.01));
    CHECK(std::stod(c.get("fitted_visibility")) < 0.13);
  }
}

TEST_CASE("library command") {
  const auto r = cmd_library(config_from(reference_json(), scratch("lib")));
  check_csv_outputs(r);
  CHECK(r.get("members") == "21");
  CHECK(r.get("peaks") == "6");
  const auto members = slurp(r.outputs[0]);
  CHECK(members.find("\n12,C284H190F320N4S12,10122.8810,810\n") != std::string::npos);

  // a single-member range gives the core alone
  const auto dir = scratch("lib0");
  std::ofstream(dir / "core.txt") << "name = core only\ncore = C44H10F20N4\nleaving_group = F\n"
                                     "added_group = C20H15F26S\nn_min = 0\nn_max = 0\n";
  json j = reference_json();
  j["library"] = {{"file", (dir / "core.txt").string()}};
  const auto one = cmd_library(config_from(j, dir));
  CHECK(one.get("members") == "1");
  CHECK(slurp(one.outputs[0]).find("\n0,C44H10F20N4,974.") != std::string::npos);
}

TEST_CASE("beam command") {
  const auto r = cmd_beam(config_from(reference_json(), scratch("beam")));
  check_csv_outputs(r);
  CHECK(std::abs(std::stod(r.get("mean_velocity_m_s")) - 85.0) < 3.0);
  CHECK(std::stod(r.get("flux_per_s")) == Approx(1.76265731856129e15).epsilon(1e-9));
  CHECK(std::stod(r.get("density_per_mm3")) == Approx(30.0).epsilon(0.02));

  json j = reference_json();
  j["beam"]["geometry"]["delimiters"][1]["center_m"] = 0.5;
  CHECK_THROWS_WITH_AS(cmd_beam(config_from(j, scratch("beam_blocked"))), "geometry blocks beam",
                       BeamBlockedError);
}

TEST_CASE("reruns are byte identical and manifests record the run") {
  json j = reference_json();
  j["beam"]["n_samples"] = 200000;
  j["scan"]["ensemble_seeds"] = 50;
  using Cmd = CommandResult (*)(const ExperimentConfig&);
  for (Cmd cmd : {Cmd{cmd_visibility}, Cmd{cmd_scan}, Cmd{cmd_library}, Cmd{cmd_beam}}) {
    const auto a = cmd(config_from(j, scratch("det_a")));
    const auto b = cmd(config_from(j, scratch("det_b")));
    REQUIRE(a.outputs.size() == b.outputs.size());
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
      CAPTURE(a.outputs[i].string());
      CHECK(slurp(a.outputs[i]) == slurp(b.outputs[i]));
    }
    const auto manifest = json::parse(slurp(a.outputs.back()));
    CHECK(manifest["seed"] == 20130601);
    CHECK(manifest["constants"] == "CODATA 2018");
    CHECK(manifest["version"] == std::string(kVersion));
    CHECK(manifest["outputs"].size() == a.outputs.size() - 1);
  }

  // a different seed changes Monte Carlo output and the manifest hash
  auto c1 = config_from(j, scratch("seed1"));
  auto c2 = config_from(j, scratch("seed2"));
  c2.seed = 7;
  const auto r1 = cmd_beam(c1);
  const auto r2 = cmd_beam(c2);
  CHECK(slurp(r1.outputs[0]) != slurp(r2.outputs[0]));
  CHECK(json::parse(slurp(r1.outputs.back()))["config_hash"] !=
        json::parse(slurp(r2.outputs.back()))["config_hash"]);
}

TEST_CASE("csv schema check") {
  auto issues = [](const std::string& text) {
    std::istringstream in(text);
    return validate_csv(in).size();
  };
  CHECK(issues("# comment\na [m],b [1]\n1,2\n3,4e-3\n") == 0);
  CHECK(issues("n [1],f [text]\n1,C60\n") == 0);
  CHECK(issues("a,b [1]\n1,2\n") == 1);
  CHECK(issues("a [m],b [1]\n1,x\n") == 1);
  CHECK(issues("a [m],b [1]\n1\n3,4\n") == 1);
  CHECK(issues("a [m],b [1]\n") == 1);
  CHECK(issues("") == 1);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("executable exit codes") {
  const auto out = scratch("exe");
  const std::string cfg = "--config " + kReference.string() + " --out " + out.string();
  CHECK(run_tool("library " + cfg) == 0);
  CHECK(fs::exists(out / "library_manifest.json"));
  CHECK(run_tool("library --config " + (kConfigDir / "absent.json").string()) == 2);
  CHECK(run_tool("library") == 2);
  CHECK(run_tool("frobnicate " + cfg) == 2);
  CHECK(run_tool("visibility " + cfg + " --model semi") == 2);
  CHECK(run_tool("--help") == 0);

  // runtime failure: blocked beam
  json j = reference_json();
  j["beam"]["geometry"]["delimiters"][1]["center_m"] = 0.5;
  j["molecule"]["library_member"]["library_file"] = (kConfigDir / "../data/fluorous_porphyrin_library.txt").string();
  j["library"]["file"] = j["molecule"]["library_member"]["library_file"];
  j["library"]["peaks"] = (kConfigDir / "../data/maldi_peaks_L.csv").string();
  std::ofstream(out / "blocked.json") << j.dump();
  CHECK(run_tool("beam --config " + (out / "blocked.json").string() + " --out " + out.string()) == 3);

  // flags override the file
  CHECK(run_tool("beam " + cfg + " --seed 11") == 0);
  const auto manifest = json::parse(slurp(out / "beam_manifest.json"));
  CHECK(manifest["seed"] == 11);
  CHECK(std::system((std::string(KDTL_CSVCHECK) + " " + (out / "beam_summary.csv").string() +
                     " > /dev/null").c_str()) == 0);
}

}
