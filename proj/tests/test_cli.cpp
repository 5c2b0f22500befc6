#include "latcor/table.hpp"

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(LATCOR_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe))
    result.output.append(buf, got);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() / "latcor_cli_ws";
    fs::remove_all(dir);
    fs::create_directories(dir);
    latcor::write_text(dir / "binding.csv",
                       "lower,H1,H2\nv1,1,0\nv2,1,0\nv3,0,1\nv4,0,1\nv5,1,1\n");
    latcor::write_text(dir / "binding_sparse.csv",
                       "lower,higher\nv1,H1\nv2,H1\nv3,H2\nv4,H2\nv5,H1\nv5,H2\n");
    latcor::write_text(dir / "data.csv",
                       "sample_id,v1,v2,v3,v4,v5\n"
                       "s1,1.0,1.2,0.9,1.1,2.0\n"
                       "s2,-1.0,-0.8,-1.1,-0.9,-2.1\n"
                       "s3,0.5,0.4,0.6,0.5,1.0\n"
                       "s4,-0.5,-0.6,-0.4,-0.6,-0.9\n"
                       "s5,0.2,0.1,0.3,0.2,0.4\n"
                       "s6,-0.2,-0.3,-0.1,-0.2,-0.5\n");
    latcor::write_text(dir / "zeros.csv",
                       "sample_id,v1,v2,v3,v4,v5\n"
                       "s1,0,0,0,0,0\ns2,0,0,0,0,0\ns3,0,0,0,0,0\n");
    latcor::write_text(dir / "bad_binding.csv", "lower,H1,H2\nv1,1,0\nv2,1,0\nv3,0,1\n");
    latcor::write_text(dir / "study.cfg",
                       "p = 3\nq = 12\nn = 25\nreps = 3\nunique_per_higher = 3\n"
                       "xi = 0.1\nalpha = 0.05\nseed = 5\nmethods = DIR, MUV\n");
  }

  std::string file(const char* name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("validate reports unique counts and the UVC verdict") {
  Workspace ws;
  RunResult ok = run_cli("validate --binding " + ws.file("binding.csv"));
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("H1: 2 unique") != std::string::npos);
  CHECK(ok.output.find("H2: 2 unique") != std::string::npos);
  CHECK(ok.output.find("shared: 1") != std::string::npos);
  CHECK(ok.output.find("UVC: PASS") != std::string::npos);

  RunResult fail = run_cli("validate --binding " + ws.file("bad_binding.csv"));
  CHECK(fail.exit_code == 1);
  CHECK(fail.output.find("H2") != std::string::npos);

  RunResult dropped =
      run_cli("validate --binding " + ws.file("bad_binding.csv") + " --uvc drop");
  CHECK(dropped.exit_code == 0);
  CHECK(dropped.output.find("1 of 2") != std::string::npos);
}

TEST_CASE("sparse and dense encodings produce identical reports") {
  Workspace ws;
  RunResult dense = run_cli("validate --binding " + ws.file("binding.csv"));
  RunResult sparse = run_cli("validate --binding " + ws.file("binding_sparse.csv"));
  CHECK(dense.output == sparse.output);
}

TEST_CASE("estimate writes tables, a summary, and sidecars; reruns are byte-identical") {
  Workspace ws;
  std::string out1 = (ws.dir / "est1").string();
  std::string out2 = (ws.dir / "est2").string();
  std::string base = "estimate --binding " + ws.file("binding.csv") + " --data " +
                     ws.file("data.csv") + " --out ";
  CHECK(run_cli(base + out1).exit_code == 0);
  CHECK(run_cli(base + out2).exit_code == 0);

  for (const char* name : {"sigma.csv", "r.csv", "summary.json"})
    CHECK(slurp(fs::path(out1) / name) == slurp(fs::path(out2) / name));
  CHECK(fs::exists(fs::path(out1) / "sigma.csv.meta.json"));
  CHECK(slurp(fs::path(out1) / "summary.json").find("\"centered\": true") !=
        std::string::npos);
}

TEST_CASE("estimate reproduces the perfectly correlated toy example") {
  Workspace ws;
  latcor::write_text(ws.dir / "allones.csv",
                     "sample_id,v1,v2,v3,v4,v5\ns1,1,1,1,1,1\ns2,-1,-1,-1,-1,-1\n");
  std::string out = (ws.dir / "ones_out").string();
  RunResult r = run_cli("estimate --binding " + ws.file("binding.csv") + " --data " +
                        ws.file("allones.csv") + " --no-center --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(slurp(fs::path(out) / "r.csv") == "name,H1,H2\nH1,1,1\nH2,1,1\n");
  CHECK(slurp(fs::path(out) / "sigma.csv") == "name,H1,H2\nH1,2,2\nH2,2,2\n");
}

TEST_CASE("shrink refuses degenerate variances with a numeric exit code") {
  Workspace ws;
  RunResult r = run_cli("shrink --binding " + ws.file("binding.csv") + " --data " +
                        ws.file("zeros.csv") + " --no-center --kappa 1 --out " +
                        (ws.dir / "z_out").string());
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("positive variance") != std::string::npos);
}

TEST_CASE("infer on all-zero data reports p = 1 for the pair") {
  Workspace ws;
  std::string out = (ws.dir / "zero_out").string();
  RunResult r = run_cli("--xi 0 infer --binding " + ws.file("binding.csv") + " --data " +
                        ws.file("zeros.csv") + " --no-center --out " + out);
  CHECK(r.exit_code == 0);
  std::string pairs = slurp(fs::path(out) / "pairs.csv");
  CHECK(pairs.find("H1,H2") != std::string::npos);
  CHECK(pairs.find(",1,") != std::string::npos);  // p_value column
  CHECK(pairs.find("invalid_diagonal") != std::string::npos);
}

TEST_CASE("infer produces the pair table with flags column") {
  Workspace ws;
  std::string out = (ws.dir / "infer_out").string();
  RunResult r = run_cli("--xi 0.1 infer --binding " + ws.file("binding.csv") +
                        " --data " + ws.file("data.csv") + " --out " + out);
  CHECK(r.exit_code == 0);
  std::string pairs = slurp(fs::path(out) / "pairs.csv");
  CHECK(pairs.find("higher_l,higher_k,r_hat,delta_hat,t_plus,t_minus,p_value,p_bh,flags") !=
        std::string::npos);
}

TEST_CASE("shrink with a fixed kappa emits the audit") {
  Workspace ws;
  std::string out = (ws.dir / "shrink_out").string();
  RunResult r = run_cli("shrink --binding " + ws.file("binding.csv") + " --data " +
                        ws.file("data.csv") + " --kappa 1.0 --out " + out);
  CHECK(r.exit_code == 0);
  std::string audit = slurp(fs::path(out) / "shrink.json");
  CHECK(audit.find("\"rho\"") != std::string::npos);
  CHECK(audit.find("lambda_min_dir") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "r_sh.csv"));
}

TEST_CASE("aggregate emits scores and correlations") {
  Workspace ws;
  std::string out = (ws.dir / "agg_out").string();
  RunResult r = run_cli("aggregate --binding " + ws.file("binding.csv") + " --data " +
                        ws.file("data.csv") + " --method MUV --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(slurp(fs::path(out) / "scores.csv").find("sample,H1,H2") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "corr.csv"));

  RunResult bad = run_cli("aggregate --binding " + ws.file("binding.csv") + " --data " +
                          ws.file("data.csv") + " --method NOPE --out " + out);
  CHECK(bad.exit_code == 1);
}

TEST_CASE("compare runs the direct method and every baseline") {
  Workspace ws;
  std::string out = (ws.dir / "cmp_out").string();
  RunResult r = run_cli("--xi 0.1 compare --binding " + ws.file("binding.csv") +
                        " --data " + ws.file("data.csv") + " --out " + out);
  CHECK(r.exit_code == 0);
  std::string table = slurp(fs::path(out) / "compare.csv");
  for (const char* m : {"DIR", "MUV", "MAV", "TMP-all", "SVD-uni", "MT50"})
    CHECK(table.find(m) != std::string::npos);
  CHECK(table.find("STI") == std::string::npos);  // only 2 unique members each
  std::string summary = slurp(fs::path(out) / "compare_summary.json");
  CHECK(summary.find("percent_significant") != std::string::npos);
}

TEST_CASE("infer reruns are byte-identical and the denominator toggle works") {
  Workspace ws;
  std::string out1 = (ws.dir / "inf1").string();
  std::string out2 = (ws.dir / "inf2").string();
  std::string base = "--xi 0.1 infer --binding " + ws.file("binding.csv") + " --data " +
                     ws.file("data.csv") + " --out ";
  CHECK(run_cli(base + out1).exit_code == 0);
  CHECK(run_cli(base + out2).exit_code == 0);
  CHECK(slurp(fs::path(out1) / "pairs.csv") == slurp(fs::path(out2) / "pairs.csv"));

  std::string out3 = (ws.dir / "inf3").string();
  CHECK(run_cli(base + out3 + " --v-denominator uniform-n").exit_code == 0);
  std::string uniform = slurp(fs::path(out3) / "pairs.csv");
  CHECK(uniform != slurp(fs::path(out1) / "pairs.csv"));  // variances shift slightly
  CHECK(uniform.find("higher_l") != std::string::npos);
}

TEST_CASE("simulate reruns with one seed are byte-identical") {
  Workspace ws;
  std::string out1 = (ws.dir / "sim1").string();
  std::string out2 = (ws.dir / "sim2").string();
  std::string base = "simulate --config " + ws.file("study.cfg") + " --out ";
  CHECK(run_cli(base + out1).exit_code == 0);
  CHECK(run_cli(base + out2).exit_code == 0);
  CHECK(slurp(fs::path(out1) / "results.csv") == slurp(fs::path(out2) / "results.csv"));

  // an explicit --seed overrides the config file's seed
  std::string out3 = (ws.dir / "sim3").string();
  CHECK(run_cli("--seed 99 " + base + out3).exit_code == 0);
  CHECK(slurp(fs::path(out3) / "results.csv") != slurp(fs::path(out1) / "results.csv"));
}

TEST_CASE("simulate runs a tiny study from a config file") {
  Workspace ws;
  std::string out = (ws.dir / "sim_out").string();
  RunResult r = run_cli("simulate --config " + ws.file("study.cfg") + " --out " + out);
  CHECK(r.exit_code == 0);
  std::string results = slurp(fs::path(out) / "results.csv");
  CHECK(results.find("rep,method,metric,value") != std::string::npos);
  CHECK(results.find("MUV,fne") != std::string::npos);
  std::string summary = slurp(fs::path(out) / "summary.json");
  CHECK(summary.find("\"null_pairs\"") != std::string::npos);
}

TEST_CASE("exit codes distinguish failure classes") {
  Workspace ws;
  RunResult missing = run_cli("estimate --binding " + ws.file("binding.csv") +
                              " --data /nonexistent.csv --out /tmp/latcor_x");
  CHECK(missing.exit_code == 1);  // CLI11 rejects the path before parsing starts

  latcor::write_text(ws.dir / "ragged.csv", "v1,v2\n1,2\n3\n");
  RunResult ragged = run_cli("estimate --binding " + ws.file("binding.csv") + " --data " +
                             ws.file("ragged.csv") + " --out /tmp/latcor_x");
  CHECK(ragged.exit_code == 2);

  RunResult usage = run_cli("estimate --binding " + ws.file("binding.csv"));
  CHECK(usage.exit_code == 1);
}
