#include "latcor/aggregate.hpp"
#include "latcor/binding.hpp"
#include "latcor/direct.hpp"
#include "latcor/errors.hpp"
#include "latcor/inference.hpp"
#include "latcor/moments.hpp"
#include "latcor/samples.hpp"
#include "latcor/shrinkage.hpp"
#include "latcor/simulate.hpp"
#include "latcor/table.hpp"
#include "latcor/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace latcor;

namespace {

// exit codes: 0 ok, 1 validation, 2 I/O or parse, 3 numerical
constexpr int exit_validation = 1;
constexpr int exit_io = 2;
constexpr int exit_numeric = 3;

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

class Timer {
public:
  double elapsed_ms() const {
    auto d = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double, std::milli>(d).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct RunContext {
  RunContext(std::string cmd, json cfg) : command(std::move(cmd)), config(std::move(cfg)) {}

  std::string command;
  json config;
  json timings = json::object();
  std::vector<std::string> warnings;
  fs::path out_dir;

  fs::path resolve(const std::string& filename) const { return out_dir / filename; }

  /// timestamps live only in sidecars, so result tables are byte-identical
  /// across reruns with the same config and seed
  void sidecar_for(const fs::path& file) const {
    json meta;
    meta["version"] = latcor::version;
    meta["command"] = command;
    meta["config"] = config;
    meta["timings_ms"] = timings;
    meta["warnings"] = warnings;
    meta["created"] = now_iso8601();
    write_text(fs::path(file.string() + ".meta.json"), meta.dump(2) + "\n");
  }
};

struct CommonOptions {
  std::string binding_path;
  std::string data_path;
  std::string out_dir = ".";
  bool center = true;
  std::string uvc_policy = "strict";
  double xi = 0.0;
  double alpha = 0.05;
  std::string v_denominator = "paper";
  std::uint64_t seed = 12345;
  int threads = 0;
};

void add_binding_option(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--binding", opt.binding_path, "Binding map file (dense 0/1 table or sparse lower,higher list)")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_data_options(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--data", opt.data_path, "Sample table (header of lower-level names)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_flag("--center,!--no-center", opt.center,
                "Subtract column means before estimation (default on)");
  cmd->add_option("--uvc", opt.uvc_policy, "UVC policy: strict or drop")
      ->check(CLI::IsMember({"strict", "drop"}));
}

void add_output_option(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--out", opt.out_dir, "Output directory (created if missing)");
}

void add_vden_option(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--v-denominator", opt.v_denominator,
                  "Denominator convention for the fourth-moment plug-in")
      ->check(CLI::IsMember({"paper", "uniform-n"}));
}

VDenominator vden_of(const CommonOptions& opt) {
  return opt.v_denominator == "paper" ? VDenominator::paper : VDenominator::uniform_n;
}

struct Inputs {
  BindingMap map;
  UniqueSets sets;
  SampleMatrix data;
  std::vector<std::string> dropped_higher;
  std::vector<std::string> dropped_lower;
};

Inputs load_inputs(const CommonOptions& opt) {
  BindingMap full_map = load_binding_map(opt.binding_path);
  UniqueSets full_sets = derive_unique_sets(full_map);
  UvcResult uvc = check_uvc(full_map, full_sets,
                            opt.uvc_policy == "drop" ? UvcPolicy::drop : UvcPolicy::strict);
  SampleMatrix data = load_samples(opt.data_path, full_map, opt.center);
  if (!uvc.dropped_higher.empty() || !uvc.dropped_lower.empty()) {
    std::vector<int> keep;
    for (const auto& name : uvc.map.lower_names())
      for (int j = 0; j < full_map.q(); ++j)
        if (full_map.lower_names()[static_cast<std::size_t>(j)] == name) {
          keep.push_back(j);
          break;
        }
    data = data.subset_columns(keep);
  }
  return Inputs{std::move(uvc.map), std::move(uvc.sets), std::move(data),
                std::move(uvc.dropped_higher), std::move(uvc.dropped_lower)};
}

json config_echo(const CommonOptions& opt) {
  json j;
  j["binding"] = opt.binding_path;
  if (!opt.data_path.empty()) j["data"] = opt.data_path;
  j["center"] = opt.center;
  j["uvc"] = opt.uvc_policy;
  j["xi"] = opt.xi;
  j["alpha"] = opt.alpha;
  j["v_denominator"] = opt.v_denominator;
  j["seed"] = opt.seed;
  return j;
}

std::string flags_to_string(std::uint32_t flags) {
  std::vector<std::string> tokens;
  if (flags & pair_invalid_diagonal) tokens.push_back("invalid_diagonal");
  if (flags & pair_degenerate_variance) tokens.push_back("degenerate_variance");
  if (flags & pair_r_out_of_range) tokens.push_back("r_out_of_range");
  if (flags & pair_delta2_clamped) tokens.push_back("delta2_clamped");
  if (flags & pair_p_underflow) tokens.push_back("p_underflow");
  if (tokens.empty()) return "ok";
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) out += (i ? ";" : "") + tokens[i];
  return out;
}

void write_pairs_csv(const fs::path& path, const InferenceTable& table,
                     const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "higher_l,higher_k,r_hat,delta_hat,t_plus,t_minus,p_value,p_bh,flags\n";
  for (const auto& rec : table.pairs) {
    out << names[static_cast<std::size_t>(rec.l)] << ','
        << names[static_cast<std::size_t>(rec.k)] << ',' << format_full(rec.r_hat) << ','
        << format_full(std::sqrt(rec.delta2)) << ',' << format_full(rec.t_plus) << ','
        << format_full(rec.t_minus) << ',' << format_full(rec.p_value) << ','
        << format_full(rec.p_bh) << ',' << flags_to_string(rec.flags) << '\n';
  }
  write_text(path, out.str());
}

json estimate_summary(const Inputs& in, const CovEstimate& cov) {
  json j;
  j["n"] = in.data.n();
  j["p"] = in.map.p();
  j["q"] = in.map.q();
  j["centered"] = in.data.centered();
  j["uvc_dropped_higher"] = in.dropped_higher;
  j["uvc_dropped_lower"] = in.dropped_lower;
  json undefined = json::array();
  for (int l = 0; l < in.map.p(); ++l)
    if (!cov.diag_valid[static_cast<std::size_t>(l)])
      undefined.push_back(in.map.higher_names()[static_cast<std::size_t>(l)]);
  j["undefined_variables"] = undefined;
  json oor = json::array();
  for (auto [l, k] : cov.out_of_range_pairs)
    oor.push_back({in.map.higher_names()[static_cast<std::size_t>(l)],
                   in.map.higher_names()[static_cast<std::size_t>(k)]});
  j["out_of_range_pairs"] = oor;
  return j;
}

void warn_estimate(RunContext& ctx, const Inputs& in, const CovEstimate& cov) {
  for (int l = 0; l < in.map.p(); ++l)
    if (!cov.diag_valid[static_cast<std::size_t>(l)])
      ctx.warnings.push_back("non-positive variance estimate for " +
                             in.map.higher_names()[static_cast<std::size_t>(l)]);
  for (auto [l, k] : cov.out_of_range_pairs)
    ctx.warnings.push_back("correlation outside [-1,1] for (" +
                           in.map.higher_names()[static_cast<std::size_t>(l)] + ", " +
                           in.map.higher_names()[static_cast<std::size_t>(k)] +
                           "); p-values for this pair are extrapolations");
}

int cmd_validate(const CommonOptions& opt) {
  BindingMap map = load_binding_map(opt.binding_path);
  UniqueSets sets = derive_unique_sets(map);

  std::cout << "q: " << map.q() << " lower-level variables\n";
  std::cout << "p: " << map.p() << " higher-level variables\n";
  for (int l = 0; l < map.p(); ++l)
    std::cout << map.higher_names()[static_cast<std::size_t>(l)] << ": "
              << sets.size_of(l) << " unique\n";
  std::cout << "shared: " << sets.shared.size() << "\n";

  auto violations = sets.uvc_violations();
  if (violations.empty()) {
    std::cout << "UVC: PASS\n";
    return 0;
  }
  std::cout << "UVC: FAIL (fewer than 2 unique members):";
  for (int l : violations)
    std::cout << ' ' << map.higher_names()[static_cast<std::size_t>(l)];
  std::cout << '\n';
  if (opt.uvc_policy == "drop") {
    UvcResult uvc = check_uvc(map, sets, UvcPolicy::drop);
    std::cout << "drop policy: " << uvc.map.p() << " of " << map.p()
              << " higher-level variables retained, " << uvc.map.q() << " of "
              << map.q() << " lower-level variables retained\n";
    return 0;
  }
  return exit_validation;
}

int cmd_estimate(const CommonOptions& opt) {
  RunContext ctx{"estimate", config_echo(opt)};
  ctx.out_dir = opt.out_dir;
  fs::create_directories(ctx.out_dir);

  Timer load_timer;
  Inputs in = load_inputs(opt);
  ctx.timings["load_ms"] = load_timer.elapsed_ms();

  Timer est_timer;
  CrossProducts c = cross_products(in.data);
  CovEstimate cov = direct_estimate(c, in.sets);
  ctx.timings["estimate_ms"] = est_timer.elapsed_ms();
  warn_estimate(ctx, in, cov);

  write_labelled_matrix(ctx.resolve("sigma.csv"), cov.sigma, in.map.higher_names());
  write_labelled_matrix(ctx.resolve("r.csv"), cov.r, in.map.higher_names());
  write_text(ctx.resolve("summary.json"), estimate_summary(in, cov).dump(2) + "\n");
  ctx.sidecar_for(ctx.resolve("sigma.csv"));
  ctx.sidecar_for(ctx.resolve("r.csv"));
  std::cout << "wrote sigma.csv, r.csv, summary.json to " << ctx.out_dir.string() << '\n';
  return 0;
}

int cmd_infer(const CommonOptions& opt) {
  RunContext ctx{"infer", config_echo(opt)};
  ctx.out_dir = opt.out_dir;
  fs::create_directories(ctx.out_dir);

  Timer load_timer;
  Inputs in = load_inputs(opt);
  ctx.timings["load_ms"] = load_timer.elapsed_ms();

  Timer est_timer;
  CrossProducts c = cross_products(in.data);
  CovEstimate cov = direct_estimate(c, in.sets);
  ctx.timings["estimate_ms"] = est_timer.elapsed_ms();
  warn_estimate(ctx, in, cov);

  Timer infer_timer;
  QuadFormEngine engine(in.data, c, in.sets, vden_of(opt));
  InferenceTable table = infer_all(engine, cov, opt.xi);
  ctx.timings["infer_ms"] = infer_timer.elapsed_ms();

  write_pairs_csv(ctx.resolve("pairs.csv"), table, in.map.higher_names());
  ctx.sidecar_for(ctx.resolve("pairs.csv"));

  int significant = 0;
  for (const auto& rec : table.pairs)
    if (rec.p_value < opt.alpha) ++significant;
  std::cout << table.pairs.size() << " pairs tested at xi=" << opt.xi << ", "
            << significant << " significant at alpha=" << opt.alpha << '\n';
  return 0;
}

struct ShrinkOptions {
  std::string kappa = "cv";
  std::string cv_grid;
  int cv_splits = 20;
  double split_ratio = 0.5;
};

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) return default_kappa_grid();
  std::vector<double> grid;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) grid.push_back(parse_numeric(item, 0, "cv-grid"));
  if (grid.empty()) throw ValidationError("empty --cv-grid");
  return grid;
}

int cmd_shrink(const CommonOptions& opt, const ShrinkOptions& sopt) {
  RunContext ctx{"shrink", config_echo(opt)};
  ctx.config["kappa"] = sopt.kappa;
  ctx.config["cv_splits"] = sopt.cv_splits;
  ctx.config["split_ratio"] = sopt.split_ratio;
  ctx.out_dir = opt.out_dir;
  fs::create_directories(ctx.out_dir);

  Timer load_timer;
  Inputs in = load_inputs(opt);
  ctx.timings["load_ms"] = load_timer.elapsed_ms();

  Timer est_timer;
  CrossProducts c = cross_products(in.data);
  CovEstimate cov = direct_estimate(c, in.sets);
  ctx.timings["estimate_ms"] = est_timer.elapsed_ms();
  warn_estimate(ctx, in, cov);

  // name the variables that block shrinkage before the numeric error fires
  std::vector<std::string> blocking;
  for (int l = 0; l < in.map.p(); ++l)
    if (!cov.diag_valid[static_cast<std::size_t>(l)])
      blocking.push_back(in.map.higher_names()[static_cast<std::size_t>(l)]);
  if (!blocking.empty()) {
    std::string joined;
    for (const auto& b : blocking) joined += ' ' + b;
    throw NumericError("shrinkage requires positive variance estimates; drop:" + joined);
  }

  Timer shrink_timer;
  json cv_table = json::object();
  double kappa = 0.0;
  if (sopt.kappa == "cv") {
    CvReport cv = cross_validate_kappa(in.data, in.sets, parse_grid(sopt.cv_grid),
                                       sopt.cv_splits, sopt.split_ratio, opt.seed,
                                       vden_of(opt));
    kappa = cv.chosen_kappa;
    cv_table["grid"] = cv.grid;
    cv_table["scores"] = cv.scores;
    cv_table["B"] = cv.B;
    cv_table["n1"] = cv.n1;
    cv_table["n2"] = cv.n2;
    cv_table["chosen_kappa"] = cv.chosen_kappa;
    cv_table["skipped_splits"] = cv.skipped_splits;
    for (int b : cv.skipped_splits)
      ctx.warnings.push_back("cross-validation split " + std::to_string(b) +
                             " skipped: non-positive variance estimate in part 1");
  } else {
    kappa = parse_numeric(sopt.kappa, 0, "kappa");
  }

  QuadFormEngine engine(in.data, c, in.sets, vden_of(opt));
  ShrinkageResult result = shrink_with_kappa(engine, cov, kappa);
  ctx.timings["shrink_ms"] = shrink_timer.elapsed_ms();
  if (result.rho_clamped)
    ctx.warnings.push_back("risk branch fell outside [0,1) and was clamped");

  write_labelled_matrix(ctx.resolve("sigma_sh.csv"), result.sigma_sh, in.map.higher_names());
  write_labelled_matrix(ctx.resolve("r_sh.csv"), result.r_sh, in.map.higher_names());

  json j;
  j["kappa"] = result.kappa;
  j["rho"] = result.rho;
  j["binding_branch"] = result.binding == ShrinkBranch::risk ? "risk" : "eigenvalue";
  j["alpha2"] = result.alpha2;
  j["beta2"] = result.beta2;
  j["gamma2"] = result.gamma2;
  j["lambda_min_dir"] = result.lambda_min_dir;
  j["lambda_min_sh"] = result.lambda_min_sh;
  if (sopt.kappa == "cv") j["cv"] = cv_table;
  write_text(ctx.resolve("shrink.json"), j.dump(2) + "\n");

  ctx.sidecar_for(ctx.resolve("sigma_sh.csv"));
  ctx.sidecar_for(ctx.resolve("r_sh.csv"));
  std::cout << "rho=" << result.rho << " (branch: " << j["binding_branch"].get<std::string>()
            << "), lambda_min " << result.lambda_min_dir << " -> " << result.lambda_min_sh
            << '\n';
  return 0;
}

int cmd_aggregate(const CommonOptions& opt, const std::string& method_name) {
  RunContext ctx{"aggregate", config_echo(opt)};
  ctx.config["method"] = method_name;
  ctx.out_dir = opt.out_dir;
  fs::create_directories(ctx.out_dir);

  auto method = agg_method_from_string(method_name);
  if (!method) throw ValidationError("unknown aggregation method: " + method_name);

  Inputs in = load_inputs(opt);
  Timer agg_timer;
  AggregateScores scores = aggregate(in.data, in.map, in.sets, *method);
  BaselineCorrelation corr = baseline_correlation(scores);
  ctx.timings["aggregate_ms"] = agg_timer.elapsed_ms();

  std::vector<std::string> retained;
  for (int l : scores.columns)
    retained.push_back(in.map.higher_names()[static_cast<std::size_t>(l)]);
  for (const auto& skip : scores.skipped)
    ctx.warnings.push_back("skipped " +
                           in.map.higher_names()[static_cast<std::size_t>(skip.higher)] +
                           ": " + skip.reason);
  for (int c0 : corr.zero_variance)
    ctx.warnings.push_back("zero-variance score column " + retained[static_cast<std::size_t>(c0)]);

  std::ostringstream out;
  out << "sample";
  for (const auto& name : retained) out << ',' << name;
  out << '\n';
  for (int i = 0; i < in.data.n(); ++i) {
    out << (i + 1);
    for (Eigen::Index c0 = 0; c0 < scores.scores.cols(); ++c0)
      out << ',' << format_full(scores.scores(i, c0));
    out << '\n';
  }
  write_text(ctx.resolve("scores.csv"), out.str());
  write_labelled_matrix(ctx.resolve("corr.csv"), corr.r, retained);
  ctx.sidecar_for(ctx.resolve("scores.csv"));
  ctx.sidecar_for(ctx.resolve("corr.csv"));
  std::cout << "wrote scores.csv and corr.csv for " << to_string(*method) << '\n';
  return 0;
}

int cmd_compare(const CommonOptions& opt) {
  RunContext ctx{"compare", config_echo(opt)};
  ctx.out_dir = opt.out_dir;
  fs::create_directories(ctx.out_dir);

  Inputs in = load_inputs(opt);
  const auto& names = in.map.higher_names();
  const int p = in.map.p();

  Timer direct_timer;
  CrossProducts c = cross_products(in.data);
  CovEstimate cov = direct_estimate(c, in.sets);
  warn_estimate(ctx, in, cov);
  QuadFormEngine engine(in.data, c, in.sets, vden_of(opt));
  InferenceTable table = infer_all(engine, cov, opt.xi);
  ctx.timings["direct_ms"] = direct_timer.elapsed_ms();

  std::ostringstream out;
  out << "higher_l,higher_k,method,r_hat,p_value,significant\n";
  json percent = json::object();

  auto emit = [&](const std::string& method, int l, int k, double r, double pv) {
    out << names[static_cast<std::size_t>(l)] << ',' << names[static_cast<std::size_t>(k)]
        << ',' << method << ',' << format_full(r) << ',' << format_full(pv) << ','
        << (pv < opt.alpha ? 1 : 0) << '\n';
  };

  int significant = 0;
  for (const auto& rec : table.pairs) {
    emit("DIR", rec.l, rec.k, rec.r_hat, rec.p_value);
    if (rec.p_value < opt.alpha) ++significant;
  }
  percent["DIR"] = table.pairs.empty() ? 0.0 : 100.0 * significant / double(table.pairs.size());

  Timer agg_timer;
  for (AggMethod method : all_agg_methods()) {
    AggregateScores scores;
    try {
      scores = aggregate(in.data, in.map, in.sets, method);
    } catch (const Error& e) {
      ctx.warnings.push_back(to_string(method) + " failed: " + e.what());
      continue;
    }
    for (const auto& skip : scores.skipped)
      ctx.warnings.push_back(to_string(method) + " skipped " +
                             names[static_cast<std::size_t>(skip.higher)] + ": " + skip.reason);
    BaselineCorrelation corr = baseline_correlation(scores);
    int tested = 0;
    int rejected = 0;
    for (std::size_t a = 0; a < scores.columns.size(); ++a) {
      for (std::size_t b = a + 1; b < scores.columns.size(); ++b) {
        double r = corr.r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (std::isnan(r)) continue;
        double pv = fisher_test(r, in.data.n(), opt.xi);
        emit(to_string(method), scores.columns[a], scores.columns[b], r, pv);
        ++tested;
        if (pv < opt.alpha) ++rejected;
      }
    }
    percent[to_string(method)] = tested ? 100.0 * rejected / tested : 0.0;
  }
  ctx.timings["aggregate_ms"] = agg_timer.elapsed_ms();

  write_text(ctx.resolve("compare.csv"), out.str());
  json summary;
  summary["percent_significant"] = percent;
  summary["xi"] = opt.xi;
  summary["alpha"] = opt.alpha;
  summary["n"] = in.data.n();
  summary["p"] = p;
  summary["q"] = in.map.q();
  write_text(ctx.resolve("compare_summary.json"), summary.dump(2) + "\n");
  ctx.sidecar_for(ctx.resolve("compare.csv"));
  std::cout << "wrote compare.csv and compare_summary.json\n";
  return 0;
}

int cmd_simulate(const CommonOptions& opt, const std::string& config_path,
                 bool seed_overridden) {
  RunContext ctx{"simulate", json::object()};
  ctx.out_dir = opt.out_dir;
  fs::create_directories(ctx.out_dir);

  StudyConfig config = load_study_config(config_path);
  if (opt.threads > 0) config.threads = opt.threads;
  if (seed_overridden) config.seed = opt.seed;
  ctx.config["study_config"] = config_path;
  ctx.config["threads"] = config.threads;
  ctx.config["seed"] = config.seed;

  Timer study_timer;
  SimReport report = run_study(config);
  ctx.timings["study_ms"] = study_timer.elapsed_ms();

  write_sim_results(ctx.resolve("results.csv"), report);
  ctx.sidecar_for(ctx.resolve("results.csv"));

  json summary;
  summary["seed"] = report.config.seed;
  summary["p"] = report.config.p;
  summary["q"] = report.config.q;
  summary["n"] = report.config.n;
  summary["reps"] = report.config.reps;
  summary["xi"] = report.config.xi;
  summary["alpha"] = report.config.alpha;
  summary["null_pairs"] = report.null_pairs;
  summary["alt_pairs"] = report.alt_pairs;
  json methods = json::object();
  for (const auto& [name, outcome] : report.outcomes) {
    json m;
    m["fne_median"] = outcome.fne_median();
    m["fne_mean"] = outcome.fne_mean();
    m["type1"] = outcome.type1();
    m["power"] = outcome.power();
    m["failures"] = outcome.failures;
    methods[name] = m;
  }
  summary["methods"] = methods;
  write_text(ctx.resolve("summary.json"), summary.dump(2) + "\n");

  std::cout << "study finished: " << report.config.reps << " replications, results in "
            << ctx.out_dir.string() << '\n';
  return 0;
}

json error_record(const std::string& type, const std::string& message) {
  json j;
  j["error"]["type"] = type;
  j["error"]["message"] = message;
  return j;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct estimation and testing of correlations between latent "
               "higher-level variables from lower-level measurements"};
  app.set_version_flag("--version", latcor::version);
  app.require_subcommand(1);

  CommonOptions opt;
  app.add_option("--seed", opt.seed, "Random seed for any randomized step");
  app.add_option("--threads", opt.threads,
                 "Worker threads for the simulation harness (0 = all cores)");
  app.add_option("--xi", opt.xi, "Null-hypothesis correlation magnitude threshold")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--alpha", opt.alpha, "Significance level")
      ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));

  auto* validate = app.add_subcommand("validate", "Check a binding map against the unique-variable condition");
  add_binding_option(validate, opt);
  validate->add_option("--uvc", opt.uvc_policy, "UVC policy: strict or drop")
      ->check(CLI::IsMember({"strict", "drop"}));

  auto* estimate = app.add_subcommand("estimate", "Direct covariance and correlation estimates");
  add_binding_option(estimate, opt);
  add_data_options(estimate, opt);
  add_output_option(estimate, opt);

  auto* infer = app.add_subcommand("infer", "Per-pair tests of H0: |r| <= xi with asymptotic p-values");
  add_binding_option(infer, opt);
  add_data_options(infer, opt);
  add_output_option(infer, opt);
  add_vden_option(infer, opt);

  ShrinkOptions sopt;
  auto* shrink = app.add_subcommand("shrink", "Positive-definite shrinkage of the direct estimate");
  add_binding_option(shrink, opt);
  add_data_options(shrink, opt);
  add_output_option(shrink, opt);
  add_vden_option(shrink, opt);
  shrink->add_option("--kappa", sopt.kappa, "Positive slack value, or 'cv' to cross-validate");
  shrink->add_option("--cv-grid", sopt.cv_grid, "Comma-separated kappa candidates");
  shrink->add_option("--cv-splits", sopt.cv_splits, "Number of cross-validation splits")
      ->check(CLI::PositiveNumber);
  shrink->add_option("--split-ratio", sopt.split_ratio, "Fraction of samples in part 1")
      ->check(CLI::Range(0.0, 1.0));

  std::string method_name;
  auto* aggregate = app.add_subcommand("aggregate", "Aggregation-based baseline scores and correlations");
  add_binding_option(aggregate, opt);
  add_data_options(aggregate, opt);
  add_output_option(aggregate, opt);
  aggregate->add_option("--method", method_name,
                        "SUV, MUV, SAV, MAV, TMP-all, TMP-uni, SVD-all, SVD-uni, STI, MT50")
      ->required();

  auto* compare = app.add_subcommand("compare", "Direct method and every baseline on one dataset");
  add_binding_option(compare, opt);
  add_data_options(compare, opt);
  add_output_option(compare, opt);
  add_vden_option(compare, opt);

  std::string study_config;
  auto* simulate = app.add_subcommand("simulate", "Replication study on synthetic ground truth");
  simulate->add_option("--config", study_config, "Study configuration file (key = value lines)")
      ->required()
      ->check(CLI::ExistingFile);
  add_output_option(simulate, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_validation;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(opt);
    if (app.got_subcommand(estimate)) return cmd_estimate(opt);
    if (app.got_subcommand(infer)) return cmd_infer(opt);
    if (app.got_subcommand(shrink)) return cmd_shrink(opt, sopt);
    if (app.got_subcommand(aggregate)) return cmd_aggregate(opt, method_name);
    if (app.got_subcommand(compare)) return cmd_compare(opt);
    if (app.got_subcommand(simulate))
      return cmd_simulate(opt, study_config, app.count("--seed") > 0);
  } catch (const ValidationError& e) {
    std::cerr << error_record("validation", e.what()).dump() << '\n';
    return exit_validation;
  } catch (const ParseError& e) {
    std::cerr << error_record("parse", e.what()).dump() << '\n';
    return exit_io;
  } catch (const NumericError& e) {
    std::cerr << error_record("numeric", e.what()).dump() << '\n';
    return exit_numeric;
  } catch (const std::exception& e) {
    std::cerr << error_record("internal", e.what()).dump() << '\n';
    return exit_numeric;
  }
  return 0;
}
