#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "oracles.hpp"
#include "ptzcalib/core/io.hpp"
#include "ptzcalib/service/calib_service.hpp"
#include "ptzcalib/synth/scene.hpp"

using namespace ptzcalib;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(PTZCALIB_CLI) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Rows of a csv output, header dropped.
std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("ptzcalib_cli_" + name); }

}  // namespace

TEST(Cli, MalformedConfigFails) {
  const auto path = temp("bad.json");
  std::ofstream(path) << "{\"seed\": ";
  const auto r = run("synth-sweep --config " + path.string(), true);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.out.find("parse error"), std::string::npos) << r.out;

  std::ofstream(path) << R"({"no_such_key": 3})";
  const auto r2 = run("synth-sweep --config " + path.string(), true);
  EXPECT_NE(r2.exit_code, 0);
  EXPECT_NE(r2.out.find("no_such_key"), std::string::npos) << r2.out;
  fs::remove(path);

  EXPECT_NE(run("no-such-command").exit_code, 0);
  EXPECT_NE(run("synth-sweep --format xml").exit_code, 0);
  EXPECT_NE(run("evaluate --gt /nonexistent --est /nonexistent").exit_code, 0);
}

TEST(Cli, TwoPointMatchesServiceBitForBit) {
  const FieldModel field = standard_soccer_field();
  const PtzCamera cam{synthetic_base(), {40.0, -10.0, 1800.0}};
  std::string args = "two-point --format csv";
  nlohmann::json pairs = nlohmann::json::array();
  for (const char* name : {"center_spot", "halfway_far"}) {
    Eigen::Vector2d p = *oracle::project(cam, *field.find_key_point(name));
    p += Eigen::Vector2d(0.37, -0.21);  // not exact, so the refinement does some work
    args += std::string(" --named ") + name + " " + fmt(p.x()) + " " + fmt(p.y());
    pairs.push_back({{"key_point", name}, {"pixel", {p.x(), p.y()}}});
  }
  const auto r = run(args);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 1u);

  CalibService svc(field);
  const auto created = svc.create_session(nlohmann::json{{"base", base_to_json(synthetic_base())}}.dump());
  const auto resp = svc.calibrate(created.body["session_id"], nlohmann::json{{"pairs", pairs}}.dump());
  ASSERT_EQ(resp.status, 200) << resp.body.dump();
  const auto& s = resp.body["solution"];
  EXPECT_EQ(rows[0][0], s["pan"].get<double>());
  EXPECT_EQ(rows[0][1], s["tilt"].get<double>());
  EXPECT_EQ(rows[0][2], s["focal_length"].get<double>());
  EXPECT_EQ(rows[0][3], s["reprojection_rmse"].get<double>());

  // Raw coordinates give the same answer as names.
  std::string raw = "two-point --format csv";
  for (const auto& p : pairs) {
    const auto X = *field.find_key_point(p["key_point"]);
    raw += " --pair " + fmt(X.x()) + " " + fmt(X.y()) + " " + fmt(X.z()) + " " + fmt(p["pixel"][0].get<double>()) +
           " " + fmt(p["pixel"][1].get<double>());
  }
  EXPECT_EQ(run(raw).out, r.out);
  EXPECT_NE(run("two-point --named center_spot 1 2").exit_code, 0);
}

TEST(Cli, CalibrateZeroNoiseAndEvaluate) {
  const auto cams = temp("cams.txt");
  const auto est = temp("est.txt");
  {
    std::ofstream out(cams);
    std::vector<PtzCamera> list{{synthetic_base(), {30.0, -8.0, 2000.0}}, {synthetic_base(), {62.0, -12.0, 4200.0}}};
    write_camera_records(out, list);
  }
  const auto r = run("calibrate --format csv --cameras " + cams.string() + " --out " + est.string());
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) {
    EXPECT_NEAR(row[7], 1.0, 1e-6);
    EXPECT_EQ(row[9], 0.0);
  }
  const auto e = run("evaluate --format csv --gt " + cams.string() + " --est " + est.string());
  ASSERT_EQ(e.exit_code, 0) << e.out;
  const auto erows = csv_rows(e.out);
  ASSERT_EQ(erows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(erows[i][1], rows[i][7]);
  fs::remove(cams);
  fs::remove(est);
}

TEST(Cli, NoiseSweepMeetsBounds) {
  const auto r = run("synth-sweep --mode noise --format csv");
  ASSERT_EQ(r.exit_code, 0);
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3][0], 3.0);
  EXPECT_LE(rows[3][1], 0.02);
  EXPECT_LE(rows[3][3], 2.5);
  EXPECT_EQ(rows[3][6], 0.0);
  const auto again = run("synth-sweep --mode noise --format csv --workers 1");
  EXPECT_EQ(again.out, r.out);
}
