#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "tforge/synthgen.hpp"
#include "tforge/trace.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

Run cli(const std::string& args, const oracle::TempDir& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + TFORGE_CLI + "\" " + args + " >\"" + (dir / "stdout.txt").string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, oracle::read_file(err)};
}

// One generated dataset shared by the cases below.
const oracle::TempDir& dataset() {
  static const oracle::TempDir dir("cli_data");
  static const int code = cli("generate --scenes 20 --seed 1 --out \"" + (dir / "d").string() + "\"", dir).code;
  REQUIRE(code == 0);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  oracle::TempDir dir("cli_usage");
  CHECK(cli("--help", dir).code == 0);
  const Run bad = cli("generate --scenes 20 --bogus-flag --out x", dir);
  CHECK(bad.code == 1);
  CHECK_FALSE(bad.err.empty());
  CHECK(cli("", dir).code == 1);
  CHECK(cli("frobnicate", dir).code == 1);
  CHECK(cli("train --data /nonexistent/dir --out m.tfck", dir).code == 1);
}

TEST_CASE("generate and validate") {
  const auto& dir = dataset();
  const tforge::Manifest m = tforge::read_manifest(dir / "d");
  CHECK(m.entries.size() == 40);
  CHECK(m.seed == 1);
  CHECK(m.split(tforge::Split::kTrain).size() == 32);
  CHECK(cli("validate \"" + (dir / "d").string() + "\"", dir).code == 0);

  // Same seed, same bytes.
  oracle::TempDir again("cli_again");
  REQUIRE(cli("generate --scenes 20 --seed 1 --out \"" + (again / "d").string() + "\"", again).code == 0);
  CHECK(oracle::snapshot(dir / "d") == oracle::snapshot(again / "d"));
}

TEST_CASE("seed from the environment") {
  oracle::TempDir dir("cli_env");
  ::setenv("TRACE_FORGE_SEED", "1", 1);
  const int code = cli("generate --scenes 10 --out \"" + (dir / "d").string() + "\"", dir).code;
  ::unsetenv("TRACE_FORGE_SEED");
  REQUIRE(code == 0);
  CHECK(tforge::read_manifest(dir / "d").seed == 1);
  REQUIRE(cli("generate --scenes 10 --out \"" + (dir / "e").string() + "\"", dir).code == 0);
  CHECK(tforge::read_manifest(dir / "e").seed == 42);
}

TEST_CASE("validate catches a corrupted dataset") {
  oracle::TempDir dir("cli_corrupt");
  REQUIRE(cli("generate --scenes 10 --out \"" + (dir / "d").string() + "\"", dir).code == 0);
  const tforge::Manifest m = tforge::read_manifest(dir / "d");
  fs::resize_file(dir / "d" / m.entries[3].trace_path, 40);
  CHECK(cli("validate \"" + (dir / "d").string() + "\"", dir).code == 2);
}

TEST_CASE("export then trace-geometric reproduces the truth") {
  const auto& dir = dataset();
  const tforge::Manifest m = tforge::read_manifest(dir / "d");
  oracle::TempDir work("cli_trace");
  for (std::size_t i : {std::size_t{0}, std::size_t{5}}) {
    const auto& e = m.entries[i];
    const fs::path ex = work / ("ex_" + e.sample_id);
    REQUIRE(cli("export --data \"" + (dir / "d").string() + "\" --sample " + e.sample_id + " --out \"" + ex.string() + "\"",
                work)
                .code == 0);
    const fs::path out = work / ("tr_" + e.sample_id);
    REQUIRE(cli("trace-geometric --masks \"" + ex.string() + "\" --rig \"" + (ex / "rig.txt").string() + "\" --eye " +
                    tforge::to_string(e.eye) + " --out \"" + out.string() + "\"",
                work)
                .code == 0);
    const tforge::RadialTrace got = tforge::read_trace(out / (tforge::to_string(e.eye) + ".trace"));
    const tforge::RadialTrace truth = tforge::read_trace(ex / "truth.trace");
    CHECK(tforge::trace_error(got, truth).mean_mm < 0.1);
    CHECK(tforge::parse_trace(tforge::format_trace(got)).radii_mm == got.radii_mm);

    fs::remove(ex / "mask_2.pgm");
    CHECK(cli("trace-geometric --masks \"" + ex.string() + "\" --rig \"" + (ex / "rig.txt").string() + "\" --out \"" +
                  (work / "x").string() + "\"",
              work)
              .code == 1);
  }
}

TEST_CASE("train, evaluate and plot") {
  const auto& dir = dataset();
  oracle::TempDir work("cli_train");
  const std::string data = "\"" + (dir / "d").string() + "\"";
  const fs::path model = work / "m.tfck";
  REQUIRE(cli("train --data " + data + " --out \"" + model.string() + "\" --epochs 1 --downsample 16 --history \"" +
                  (work / "h.csv").string() + "\"",
              work)
              .code == 0);
  CHECK(fs::exists(model));
  CHECK(fs::exists(work / "h.csv"));
  const fs::path rep = work / "rep";
  REQUIRE(cli("evaluate --model \"" + model.string() + "\" --data " + data + " --out \"" + rep.string() + "\"", work).code ==
          0);
  CHECK(fs::exists(rep / "report.json"));
  int svgs = 0;
  for (const auto& f : fs::directory_iterator(rep)) svgs += f.path().extension() == ".svg";
  CHECK(svgs == 3);

  const tforge::Manifest m = tforge::read_manifest(dir / "d");
  const std::string t = "\"" + (dir / "d" / m.entries[0].trace_path).string() + "\"";
  REQUIRE(cli("plot --pred " + t + " --truth " + t + " --out \"" + (work / "p.svg").string() + "\"", work).code == 0);
  CHECK(oracle::read_file(work / "p.svg").find("<svg") == 0);
  CHECK(cli("plot --pred " + t + " --truth missing.trace --out \"" + (work / "q.svg").string() + "\"", work).code == 1);
}
