#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "polaron/commands.hpp"

using namespace polaron;

namespace {

Config base() {
  Config c = config_from_json(Json::object());
  c.model.alpha = 0.3;
  c.model.kmax = 1.5;
  c.fock.N_max = 2;
  c.path.t = 2.0;
  c.path.T_plus = 0.5;
  c.mc.chains = 2;
  c.mc.sweeps = 600;
  c.mc.burn_in = 100;
  c.toy.T = {10, 20};
  c.toy.clt_k = {0.5, 1.0};
  c.toy.clt_eps = {0.004, 0.002, 0.001};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("kernel table is sorted and monotone along the cutoff ladder") {
  Config c = base();
  c.model.dimension = 3;
  c.model.form_factor = FormFactorSpec::froehlich_exp(1.0);
  c.model.kmax = 1.0;
  c.kernel.x = {2.0, 0.0, -0.5, 1.0};
  c.kernel.t = {1.0, 0.0};
  c.kernel.kappa = {8, 1, 2, 4};
  const auto r = cmd_kernel(c, {});
  const auto& t = r.tables.at(0).second;
  REQUIRE(t.rows.size() == 4 * 4 * 2);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto key = [&](std::size_t j) {
      return std::tuple{std::get<double>(t.rows[j][0]), std::abs(std::get<double>(t.rows[j][1])), std::get<double>(t.rows[j][2])};
    };
    CHECK(key(i - 1) <= key(i));
  }
  CHECK(r.outputs["monotone_in_kappa"] == true);
  const double g2 = r.outputs["discrete_g_norm2"].get<double>();
  const double c0 = 1.0;
  // The model in the configuration has kappa = 1, the first rung.
  for (const auto& row : t.rows) {
    if (std::get<double>(row[0]) != 1.0) continue;
    const double x = std::get<double>(row[1]), time = std::get<double>(row[2]), wd = std::get<double>(row[5]);
    if (x == 0.0 && time == 0.0) CHECK(wd == doctest::Approx(g2).epsilon(1e-14));
    CHECK(std::abs(wd) <= g2 * std::exp(-c0 * time) * (1 + 1e-14));
  }
}

TEST_CASE("mass at zero coupling is one") {
  Config c = base();
  c.model.alpha = 0.0;
  const auto r = cmd_mass(c, {});
  CHECK(std::abs(r.outputs["inverse_mass"]["value"].get<double>() - 1.0) <= 1e-8);
  CHECK(std::abs(r.outputs["sigma2"]["value"].get<double>() - 1.0) <= 1e-8);
}

TEST_CASE("spectrum reports energies, char function and edges") {
  Config c = base();
  c.spectral.essential_n = 2;
  c.spectral.P = {0.0, 0.5};
  const auto r = cmd_spectrum(c, {});
  CHECK(r.outputs["minimum_at_zero"] == true);
  CHECK(r.tables.size() == 3);
  const auto& edge = r.tables[2].second;
  CHECK(std::get<double>(edge.rows[1][2]) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mc output is bit-identical for the same seed and any thread count") {
  const Config c = base();
  const auto dir = std::filesystem::temp_directory_path() / "polaron-test-commands";
  std::filesystem::remove_all(dir);
  RunOptions one;
  RunOptions many;
  many.threads = 2;
  const auto a = write_result(run_command("mc", c, one), dir / "a", OutputFormat::Json);
  const auto b = write_result(run_command("mc", c, many), dir / "b", OutputFormat::Json);
  REQUIRE(a.size() == 3);  // merged JSON plus one trace per chain
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(slurp(a[i]) == slurp(b[i]));
  Config other = c;
  other.seed = other.mc.seed = 2;
  const auto d = write_result(run_command("mc", other, one), dir / "c", OutputFormat::Json);
  CHECK(slurp(d[0]) != slurp(a[0]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("clt-toy on a single zero minimum") {
  Config c = base();
  c.toy.model.d = 3;
  c.toy.model.minima = {{0.0, 2, 100.0}};
  c.toy.model.gap0 = 100.0;
  const auto r = cmd_clt_toy(c, {});
  CHECK(r.outputs["limit"]["case"] == "one-minimum");
  CHECK(r.outputs["clt"]["verdict"] == "gaussian");
}

TEST_CASE("run results round-trip through JSON") {
  const auto r = run_command("spectrum", base(), {});
  const Json j = to_json(r, OutputFormat::Json);
  const std::string text = io::dump_json(j);
  const auto back = result_from_json(Json::parse(text));
  CHECK(io::dump_json(to_json(back, OutputFormat::Json)) == text);
  CHECK(back.seeds == r.seeds);
  // The stored configuration is complete: it re-reads to the same text.
  CHECK(io::dump_json(to_json(config_from_json(back.config))) == io::dump_json(r.config));
}

TEST_CASE("verify reports tolerances and pass status") {
  Config c = base();
  c.verify.criteria = {6};
  c.verify.mutation_check = false;
  std::vector<std::string> lines;
  RunOptions opt;
  opt.progress = [&](const std::string& s) { lines.push_back(s); };
  const auto r = run_command("verify", c, opt);
  CHECK(r.exit_code == 0);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].rfind("[PASS] 6", 0) == 0);
  CHECK(r.outputs["criteria"][0]["tolerances"].contains("limit_relative"));
}
