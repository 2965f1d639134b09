#include <antidot/cli.hpp>

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace antidot;
namespace fs = std::filesystem;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "antidot_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "antidot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return status;
}

const char* kDisk = "[potential]\nshape = disk\nr = 0.2\n";

}  // namespace

TEST_CASE("minimal config fills the documented defaults") {
  const RunConfig c = parse_config(kDisk);
  CHECK(c.potential.shape == "disk");
  CHECK(c.potential.r == 0.2);
  CHECK(c.fiber.M == 14);
  CHECK(c.scan.grid_n == 9);
  CHECK(c.fiber.solver == SolverKind::dense);
  CHECK(c.scan.refine_depth == 0);
  CHECK(c.sweep.alphas.size() == 5);
  CHECK(c.output.seed == 0);
}

TEST_CASE("config range and type errors carry section, key and line") {
  const std::string alpha = parse_error(std::string(kDisk) + "[fiber]\nalpha = 1.5\n");
  CHECK(alpha.find("[fiber].alpha ∈ (0,1]") != std::string::npos);
  CHECK(alpha.find("line 5") != std::string::npos);

  CHECK(parse_error(std::string(kDisk) + "[scan]\ngrid_n = 8\n").find("grid_n must be odd") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[scan]\ngrid_n = 1\n").find("[scan].grid_n") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[fiber]\nM = twelve\n").find("expected an integer") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[fiber]\nbeta = -1\n").find("[fiber].beta") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[fiber]\nsolver = lanczos\n").find("dense, iterative") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[scan]\nhalf_zone = maybe\n").find("true or false") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[sweep]\nbetas = 0.1, x\n").find("list of reals") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[sweep]\nbetas = 0.2, 0.1, 0.3\n").find("ascending") != std::string::npos);
}

TEST_CASE("config structure errors") {
  CHECK(parse_error(std::string(kDisk) + "radius = 3\n").find("unknown key [potential].radius") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "[solver]\n").find("unknown section [solver]") != std::string::npos);
  CHECK(parse_error(std::string(kDisk) + "r = 0.3\n").find("duplicate key [potential].r") != std::string::npos);
  CHECK(parse_error("alpha = 1\n").find("before any [section]") != std::string::npos);
  CHECK(parse_error("[fiber\n").find("malformed section") != std::string::npos);
  CHECK(parse_error("[potential]\njust text\n").find("line 2") != std::string::npos);
  CHECK(parse_error("[fiber]\nalpha = 0.5\n").find("[potential].shape is required") != std::string::npos);
  CHECK(parse_error("[potential]\nshape = disk\n").find("[potential].r is required") != std::string::npos);
  CHECK(parse_error("[potential]\nshape = disk\nr = 0.2\na = 0.5\n").find("not used by shape disk") != std::string::npos);
  CHECK(parse_error("[potential]\nshape = annulus\nN = 2\nwidth = 3\n").find("N > width") != std::string::npos);
  CHECK(parse_error("[potential]\nshape = hexagon\n").find("is not one of") != std::string::npos);

  const RunConfig c = parse_config("# header comment\n\n[potential] ; trailing\nshape = square  # inline\na = 1\n");
  CHECK(c.potential.a == 1.0);
}

TEST_CASE("config echo lists every key once") {
  const RunConfig c = parse_config("[potential]\nshape = annulus\nN = 4\nwidth = 1\n[fiber]\nM = 8\n");
  const auto echo = config_echo(c);
  REQUIRE(echo.size() == 7);
  CHECK(echo.front().first == "potential");
  bool saw_n = false, saw_r = false;
  for (const auto& [key, value] : echo.front().second) {
    saw_n = saw_n || key == "N";
    saw_r = saw_r || key == "r";
  }
  CHECK(saw_n);
  CHECK(!saw_r);
  for (const auto& [key, value] : echo[1].second)
    if (key == "M") CHECK(std::get<std::int64_t>(value) == 8);
}

TEST_CASE("grid and mode profiles from files") {
  const fs::path dir = scratch("profiles");
  write_file(dir / "grid.txt", "0 0 0 0\n0 1 1 0\n0 1 1 0\n0 0 0 0\n");
  write_file(dir / "modes.csv", "m1,m2,re,im\n1,0,0.5,0\n-1,0,0.5,0\n");
  write_file(dir / "grid.ini", "[potential]\nshape = grid\npath = grid.txt\n");
  write_file(dir / "modes.ini", "[potential]\nshape = modes\npath = modes.csv\n");

  const MassProfile g = build_profile(load_config((dir / "grid.ini").string()).potential);
  CHECK(g.phi() == doctest::Approx(0.25));
  const MassProfile m = build_profile(load_config((dir / "modes.ini").string()).potential);
  CHECK(m.phi() == 0.0);
  CHECK(std::abs(fourier_coeff(m, 1.0, Vec2i(1, 0)) - cplx(0.5)) < 1e-15);

  write_file(dir / "bad_grid.txt", "1 2 3\n");
  PotentialConfig bad;
  bad.shape = "grid";
  bad.path = (dir / "bad_grid.txt").string();
  CHECK_THROWS_AS(build_profile(bad), ValidationError);
  bad.path = (dir / "missing.txt").string();
  CHECK_THROWS_AS(build_profile(bad), ValidationError);
}

TEST_CASE("usage errors exit 2") {
  std::string out, err;
  CHECK(run_cli({"no-such-command"}, &out, &err) == cli::kExitUsage);
  CHECK(err.find("usage:") != std::string::npos);
  CHECK(run_cli({"gap"}, &out, &err) == cli::kExitUsage);
  CHECK(err.find("--config") != std::string::npos);
  CHECK(run_cli({"gap", "--config", "/nonexistent/run.ini"}) == cli::kExitUsage);
  CHECK(run_cli({"gap", "--threads", "-2"}) == cli::kExitUsage);

  const fs::path dir = scratch("usage");
  write_file(dir / "bad.ini", std::string(kDisk) + "[fiber]\nalpha = 1.5\n");
  CHECK(run_cli({"gap", "--config", (dir / "bad.ini").string()}, &out, &err) == cli::kExitUsage);
  CHECK(err.find("[fiber].alpha ∈ (0,1]") != std::string::npos);
}

TEST_CASE("selftest passes") {
  std::string out;
  CHECK(run_cli({"selftest"}, &out) == cli::kExitOk);
  CHECK(out.find("FAIL") == std::string::npos);
}

TEST_CASE("gap on the constant-mass config") {
  const fs::path dir = scratch("gap");
  write_file(dir / "const.ini",
             "[potential]\nshape = square\na = 1\nheight = 2\n[fiber]\nbeta = 0.25\nM = 6\n"
             "[scan]\ngrid_n = 5\nrefine_depth = 1\n");
  CHECK(run_cli({"gap", "--config", (dir / "const.ini").string(), "--out", (dir / "a").string()}) == cli::kExitOk);
  const auto report = nlohmann::json::parse(read_file(dir / "a" / "report.json"));
  CHECK(std::abs(report["grid_min"].get<double>() - 0.5) <= 1e-9);
  CHECK(report["argmin_k"][0].get<double>() == 0.0);
  CHECK(report["argmin_k"][1].get<double>() == 0.0);
  CHECK(fs::exists(dir / "a" / "per_k.csv"));

  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest["exit_status"] == 0);
  CHECK(manifest["config"]["fiber"]["M"] == 6);
  CHECK(manifest["config"]["scan"]["grid_n"] == 5);
  CHECK(manifest["outputs"].size() == 2);
  CHECK(manifest.contains("version"));
  CHECK(manifest["wall_time_s"].get<double>() >= 0);

  CHECK(run_cli({"gap", "--config", (dir / "const.ini").string(), "--out", (dir / "b").string(), "--threads", "3"}) ==
        cli::kExitOk);
  CHECK(read_file(dir / "a" / "report.json") == read_file(dir / "b" / "report.json"));
  CHECK(read_file(dir / "a" / "per_k.csv") == read_file(dir / "b" / "per_k.csv"));
}

TEST_CASE("sweep-beta reruns are bit-identical") {
  const fs::path dir = scratch("sweep");
  write_file(dir / "disk.ini",
             "[potential]\nshape = disk\nr = 0.2\nnormalized = true\n[fiber]\nalpha = 0.3\nM = 4\n"
             "[scan]\ngrid_n = 3\n[sweep]\nbetas = 0.1, 0.2, 0.3\n");
  for (const char* name : {"a", "b"})
    CHECK(run_cli({"sweep-beta", "--config", (dir / "disk.ini").string(), "--out", (dir / name).string(), "--seed",
                   "5"}) == cli::kExitOk);
  for (const char* file : {"fit.json", "points.csv", "points.dat"})
    CHECK(read_file(dir / "a" / file) == read_file(dir / "b" / file));
  const auto fit = nlohmann::json::parse(read_file(dir / "a" / "fit.json"));
  CHECK(std::abs(fit["slope"].get<double>() - 1.0) < 0.2);
  CHECK(fit.contains("leading_order"));
  CHECK(nlohmann::json::parse(read_file(dir / "a" / "manifest.json"))["seed"] == 5);
}

TEST_CASE("runtime validation failures exit 2 and still leave a manifest") {
  const fs::path dir = scratch("physical");
  write_file(dir / "disk.ini", std::string(kDisk) + "[fiber]\nM = 3\n");
  std::string err;
  CHECK(run_cli({"physical", "--config", (dir / "disk.ini").string(), "--out", (dir / "o").string()}, nullptr, &err) ==
        cli::kExitUsage);
  CHECK(err.find("[sweep].L") != std::string::npos);
  const auto manifest = nlohmann::json::parse(read_file(dir / "o" / "manifest.json"));
  CHECK(manifest["exit_status"] == 2);
  CHECK(manifest["outputs"].empty());
}

TEST_CASE("remaining subcommands write their artifacts") {
  const fs::path dir = scratch("all");
  write_file(dir / "disk.ini",
             "[potential]\nshape = disk\nr = 0.2\nnormalized = true\n[fiber]\nalpha = 0.5\nbeta = 0.3\nM = 3\nbands = 4\n"
             "[scan]\ngrid_n = 3\n[sweep]\nL = 5e-8\nmu = 1e-21\n[feshbach]\nk1 = 0.1\nz = 0.05\n"
             "[kernel]\nsamples = 20\n");
  const std::map<std::string, std::vector<std::string>> expected{
      {"fourier", {"fourier.csv", "report.json"}}, {"bands", {"bands.csv", "report.json"}},
      {"hyp1", {"report.json"}},                   {"feshbach", {"report.json"}},
      {"kernel", {"kernel.csv", "report.json"}},   {"physical", {"report.json"}}};
  for (const auto& [cmd, files] : expected) {
    CAPTURE(cmd);
    const fs::path out = dir / cmd;
    CHECK(run_cli({cmd, "--config", (dir / "disk.ini").string(), "--out", out.string()}) == cli::kExitOk);
    for (const auto& f : files) CHECK(fs::exists(out / f));
    CHECK(fs::exists(out / "manifest.json"));
  }
  const std::string bands = read_file(dir / "bands" / "bands.csv");
  CHECK(bands.rfind("k1,k2,band_index,eigenvalue\r\n", 0) == 0);
  CHECK(std::count(bands.begin(), bands.end(), '\n') == 1 + 9 * 4);
  CHECK(read_file(dir / "fourier" / "fourier.csv").rfind("m1,m2,re,im", 0) == 0);
  CHECK(read_file(dir / "kernel" / "kernel.csv").rfind("r,max_entry,bound_ratio\r\n", 0) == 0);
  const auto phys = nlohmann::json::parse(read_file(dir / "physical" / "report.json"));
  CHECK(phys["E_g"].get<double>() == doctest::Approx(2 * phys["hbar_vf"].get<double>() *
                                                     phys["gap_half_width"].get<double>() / 5e-8));
}
