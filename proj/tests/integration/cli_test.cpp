#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "intp/tensor_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace intp;

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("intp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  RunResult run(const std::string& args) const {
    const std::string err_path = path("stderr.txt");
    const std::string cmd = std::string(INTP_CLI_PATH) + " " + args + " 2>" + err_path;
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream e(err_path);
    std::stringstream ss;
    ss << e.rdbuf();
    r.err = ss.str();
    return r;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

rearrange::TokenGrid labelled(int frames, int tpf, int dim) {
  rearrange::TokenGrid g(frames, tpf, dim);
  for (int f = 0; f < frames; ++f)
    for (float& v : g.frame(f)) v = static_cast<float>(f + 1);
  return g;
}

TEST_F(CliTest, RearrangeInterleavesGroups) {
  io::save_tensor(path("in.itpt"), io::to_tensor(labelled(4, 3, 2)));
  const auto r = run("rearrange --input " + path("in.itpt") + " --capacity 2 --output " + path("out.itpt"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["subsequences"], json::parse("[[1,3],[2,4]]"));
  // Stacked groups (1,3 | 2,4) hold blocks labelled 1..4; chronological output is 1,3,2,4.
  const auto out = io::to_grid(io::load_tensor(path("out.itpt")));
  const float expect[] = {1, 3, 2, 4};
  for (int f = 0; f < 4; ++f) EXPECT_EQ(out.frame(f)[0], expect[f]);
}

TEST_F(CliTest, RearrangeFullCapacityIsIdentity) {
  io::save_tensor(path("in.itpt"), io::to_tensor(labelled(8, 2, 3)));
  const auto r = run("rearrange --input " + path("in.itpt") + " --capacity 8 --output " + path("out.itpt"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(path("in.itpt")), slurp(path("out.itpt")));
}

TEST_F(CliTest, RearrangeDivisibilityError) {
  io::save_tensor(path("in.itpt"), io::to_tensor(labelled(10, 1, 1)));
  const auto r = run("rearrange --input " + path("in.itpt") + " --capacity 4 --output " + path("out.itpt"));
  EXPECT_EQ(r.status, 4);
  EXPECT_NE(r.err.find("multiple"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("out.itpt")));
}

TEST_F(CliTest, RearrangeIoAndFormatErrors) {
  EXPECT_EQ(run("rearrange --input " + path("missing.itpt") + " --capacity 2 --output " + path("o")).status, 2);
  std::ofstream(path("junk.itpt")) << "not a tensor";
  EXPECT_EQ(run("rearrange --input " + path("junk.itpt") + " --capacity 2 --output " + path("o")).status, 3);
}

TEST_F(CliTest, AnalyzeDefaultTable) {
  const auto r = run("analyze");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 11);  // header + 5 x 2 rows
}

TEST_F(CliTest, AnalyzeBaselineKv) {
  const auto r = run("analyze --frames 8 --bits 16 --format csv");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto row = r.out.substr(r.out.find('\n') + 1);
  const double kv_gb = std::stod(row.substr(row.rfind(',') + 1));
  EXPECT_NEAR(kv_gb, 1.1, 0.11);
}

TEST_F(CliTest, AnalyzeRejectsUnknownProfileKey) {
  std::ofstream(path("m.json")) << R"({"n_params": 7e9, "layers": 32, "hidden": 4096, "vocab": 32000})";
  const auto r = run("analyze --model " + path("m.json"));
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("'vocab'"), std::string::npos);
}

TEST_F(CliTest, QuantizeSixteenBitBound) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> dist(-2.0f, 6.0f);
  Tensor t({32, 8});
  for (auto& v : t.data) v = dist(rng);
  io::save_tensor(path("x.itpt"), t);
  const auto r = run("quantize --input " + path("x.itpt") + " --output " + path("q.itpt") +
                     " --bits 16 --group-size 0");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto report = json::parse(r.out);
  const auto [lo, hi] = std::ranges::minmax(t.data);
  EXPECT_LE(report["max_abs_error"].get<double>(), (hi - lo) / 65535.0 / 2 * (1 + 1e-6) + 1e-6);
}

TEST_F(CliTest, QuantizeLatticeIsExact) {
  // Values already on S * integer with S = 0.5: {-1, -0.5, 0, 0.5}.
  io::save_tensor(path("x.itpt"), Tensor({2, 4}, {-1.0f, -0.5f, 0.0f, 0.5f, 0.5f, 0.0f, -0.5f, -1.0f}));
  const auto r = run("quantize --input " + path("x.itpt") + " --output " + path("q.itpt") +
                     " --bits 2 --group-size 0");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["max_abs_error"].get<double>(), 0.0);
}

TEST_F(CliTest, QuantizeSelfVerifyAndDequantize) {
  std::mt19937_64 rng(6);
  std::normal_distribution<float> dist;
  Tensor t({16, 12});
  for (auto& v : t.data) v = dist(rng);
  io::save_tensor(path("x.itpt"), t);
  io::save_tensor(path("c.itpt"), t);
  const auto r = run("quantize --input " + path("x.itpt") + " --calibration " + path("c.itpt") + " --output " +
                     path("q.itpt") + " --bits 4 --axis per_token --group-size 4 --self-verify");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_TRUE(report["self_verify"]["idempotent"].get<bool>());
  EXPECT_EQ(report["self_verify"]["checksum"], report["checksum"]);
  ASSERT_EQ(run("dequantize --input " + path("q.itpt") + " --output " + path("d.itpt")).status, 0);
  EXPECT_EQ(io::load_tensor(path("d.itpt")).shape, t.shape);
}

TEST_F(CliTest, QuantizeRejectsNonFinite) {
  io::save_tensor(path("x.itpt"), Tensor({1, 2}, {1.0f, INFINITY}));
  EXPECT_EQ(run("quantize --input " + path("x.itpt") + " --output " + path("q.itpt")).status, 6);
}

TEST_F(CliTest, DemoDecodeDeterministic) {
  ASSERT_EQ(run("synth-grid --output " + path("g.itpt") + " --frames 4 --tokens 4 --dim 64").status, 0);
  const std::string args = "demo-decode --grid " + path("g.itpt") + " --prompt 5,6,7 --n-out 8 --seed 3";
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 9);
  const auto q = run(args + " --cache quantized --kv-bits 4");
  ASSERT_EQ(q.status, 0) << q.err;
}

TEST_F(CliTest, DemoDecodeLinearIdentity) {
  const std::string base = "demo-decode --prompt 1,2,3,4 --n-out 10 --pretrained-window 64 --target-window 64";
  const auto none = run(base + " --mode none");
  const auto linear = run(base + " --mode linear");
  ASSERT_EQ(none.status, 0) << none.err;
  const auto last = [](const std::string& s) {
    const auto trimmed = s.substr(0, s.size() - 1);
    return json::parse(trimmed.substr(trimmed.rfind('\n') + 1))["tokens"];
  };
  EXPECT_EQ(last(none.out), last(linear.out));
}

TEST_F(CliTest, DemoDecodeWindowOverflow) {
  const auto r = run("demo-decode --prompt 1,2,3,4,5,6 --n-out 4 --pretrained-window 8 --target-window 8");
  EXPECT_EQ(r.status, 5);
  EXPECT_NE(r.err.find("limit of 8"), std::string::npos);
}

}  // namespace
