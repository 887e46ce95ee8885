#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hycon/errors.h"
#include "hycon/io.h"
#include "hycon/simulator.h"
#include "hycon/systems_library.h"

namespace hycon {
namespace {

using nlohmann::json;

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string l;
  while (std::getline(is, l)) out.push_back(l);
  return out;
}

TEST(Json, NonFiniteValuesBecomeStrings) {
  Vec v(4);
  v << 1.5, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity(),
      -std::numeric_limits<double>::infinity();
  const json j = to_json(v);
  EXPECT_EQ(j[0].get<double>(), 1.5);
  EXPECT_EQ(j[1], "nan");
  EXPECT_EQ(j[2], "inf");
  EXPECT_EQ(j[3], "-inf");
  // The dump must stay valid JSON.
  EXPECT_NO_THROW(json::parse(j.dump()));
}

TEST(Json, MatrixRoundTrip) {
  Mat m(2, 3);
  m << 1, 2, 3, 4, 5, 6.25;
  EXPECT_EQ(mat_from_json(to_json(m)), m);
  Vec v(3);
  v << -1, 0.5, 1e-300;
  EXPECT_EQ(vec_from_json(to_json(v)), v);
  EXPECT_THROW(mat_from_json(json::parse("[[1,2],[3]]")), ConfigError);
}

TEST(Csv, HeaderLineCarriesSystemAndSeed) {
  EXPECT_EQ(csv_header_line("traffic", 7), "# system=traffic seed=7\n");
}

TEST(Csv, ZeroLengthTrajectoryIsOneRow) {
  const BuiltinSystem b = make_builtin("example1");
  const HybridTrajectory traj = simulate(b.system, b.initial, b.initial.t);
  const auto lines = lines_of(trajectory_csv(b.system, traj, csv_header_line("example1", 1)));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[1], "t,mode,x1,x2,event");
  EXPECT_EQ(lines[2], "0,R,2,1,0");
}

TEST(Csv, UniformSamplingMarksEvents) {
  const BuiltinSystem b = make_builtin("dwell-scalar");
  const HybridTrajectory traj = simulate(b.system, b.initial, b.t_end);
  const auto lines = lines_of(trajectory_csv(b.system, traj, "", 0.1));
  int events = 0;
  double prev = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const double t = std::stod(lines[i]);
    EXPECT_GE(t, prev);
    prev = t;
    if (lines[i].back() == '1') ++events;
  }
  EXPECT_EQ(events, static_cast<int>(traj.events.size()));
  EXPECT_DOUBLE_EQ(prev, b.t_end);
}

TEST(Csv, ShortStatesArePadded) {
  const BuiltinSystem b = make_builtin("mech-1dof");
  HybridState init = b.initial;
  init.x << 0.05, -1.0;
  const HybridTrajectory traj = simulate(b.system, init, 0.2);
  ASSERT_FALSE(traj.events.empty());
  const auto lines = lines_of(trajectory_csv(b.system, traj, "", 0.05));
  bool saw_contact = false;
  for (const auto& l : lines) {
    if (l.find(",contact,") != std::string::npos) {
      saw_contact = true;
      EXPECT_NE(l.find(",contact,,,"), std::string::npos) << l;
    }
  }
  EXPECT_TRUE(saw_contact);
}

TEST(Json, EventsDocument) {
  const BuiltinSystem b = make_builtin("example1");
  const HybridTrajectory traj = simulate(b.system, b.initial, b.t_end);
  const json j = events_json(traj);
  EXPECT_EQ(j["status"], "completed");
  ASSERT_EQ(j["events"].size(), traj.events.size());
  ASSERT_FALSE(traj.events.empty());
  EXPECT_EQ(j["events"][0]["source"], "R");
  EXPECT_EQ(j["events"][0]["target"], "L");
  EXPECT_EQ(j["final"]["mode"], traj.final_state.mode.name);
}

TEST(Csv, CertificateAndExperimentRows) {
  const BuiltinSystem b = make_builtin("example1", {{"a_L", 1}, {"b_L", 1}, {"a_R", 2}, {"b_R", 1}});
  SamplingPlan plan = b.plan;
  plan.guard_samples = 8;
  const ContractionCertificate c = certify(b.system, plan);
  const auto cert_lines = lines_of(certificate_csv(c, csv_header_line("example1", 1)));
  EXPECT_EQ(cert_lines[1], "location,kind,value,t,x");
  EXPECT_EQ(cert_lines.size(), 2 + c.flow.per_mode.size() + c.resets.per_transition.size());

  ExperimentReport rep;
  rep.pairs.resize(2);
  for (auto& p : rep.pairs) {
    p.times = {0.0, 1.0};
    p.distances = {1.0, 0.5};
    p.bounds = {1.0, 0.6};
    p.ratios = {1.0, 0.5 / 0.6};
  }
  const auto exp_lines = lines_of(experiment_csv(rep, ""));
  ASSERT_EQ(exp_lines.size(), 5u);
  EXPECT_EQ(exp_lines[0], "pair,t,distance,bound,ratio");
  EXPECT_EQ(exp_lines[4].substr(0, 4), "1,1,");
}

TEST(Files, WriteCreatesDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "hycon_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  const std::string path = (dir / "out.txt").string();
  write_text_file(path, "abc\n");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "abc");
  std::filesystem::remove_all(dir.parent_path());
}

}  // namespace
}  // namespace hycon
