#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathsynth/io.hpp"
#include "pathsynth/pathsynth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTagDemoSource = 0xD301;
constexpr std::uint64_t kTagDemoSimilar = 0xD302;
constexpr std::uint64_t kTagRegroup = 0x4E57;
constexpr std::uint64_t kTagEvaluate = 0xE7A1;
constexpr std::uint64_t kTagGridBase = 0x6B1D'0000;

struct CommonOpts {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  pathsynth::RngSpec rng() const { return {seed, stream}; }
};

void add_seed_opts(CLI::App* cmd, CommonOpts& opts)
{
  cmd->add_option("--seed", opts.seed, "Random seed")
    ->envname("PATHSYNTH_SEED")
    ->capture_default_str();
  cmd->add_option("--stream", opts.stream, "Random stream id")
    ->envname("PATHSYNTH_STREAM")
    ->capture_default_str();
}

pathsynth::PathTrace load_single_trace(const std::string& path)
{
  std::vector<pathsynth::PathTrace> traces = pathsynth::read_traces(path);
  if (traces.size() != 1)
    std::cerr << "note: '" << path << "' holds " << traces.size()
              << " traces; using the first ('" << traces.front().id << "')\n";
  return std::move(traces.front());
}

std::vector<pathsynth::PathTrace> load_many(const std::vector<std::string>& paths)
{
  std::vector<pathsynth::PathTrace> out;
  for (const auto& path : paths) {
    std::vector<pathsynth::PathTrace> batch = pathsynth::read_traces(path);
    for (auto& trace : batch)
      out.push_back(std::move(trace));
  }
  return out;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- segment
struct SegmentOpts {
  std::string input;
  std::string out = "plan.json";
  double b = 5.0;
  double h = pathsynth::kAutoBandwidth;
  double alpha = pathsynth::kDefaultAlpha;
  long min_len = 0;
  CommonOpts common;
};

int run_segment(const SegmentOpts& opt)
{
  const pathsynth::PathTrace trace = load_single_trace(opt.input);
  const Eigen::Index min_len =
    opt.min_len > 0 ? opt.min_len : pathsynth::default_min_len(trace.n());

  const pathsynth::MfModel model = pathsynth::fit_mf(trace, opt.b, opt.h);
  const pathsynth::ResidualMatrix residuals = pathsynth::forward(model, trace);
  const pathsynth::SegmentationPlan plan = pathsynth::segment_residuals(
    residuals, opt.alpha, min_len,
    pathsynth::derive_stream(opt.common.rng(), pathsynth::detail::kTagSegmentation));

  json j;
  j["command"] = "segment";
  j["params"] = {{"input", opt.input},   {"b", opt.b},
                 {"h", opt.h},           {"alpha", opt.alpha},
                 {"min_len", min_len},   {"seed", opt.common.seed},
                 {"stream", opt.common.stream}};
  j["trace"] = {{"id", trace.id}, {"n", trace.n()}, {"p", trace.p()}};
  j["plan"] = pathsynth::to_json(plan);
  pathsynth::write_file_atomic(opt.out, json_text(j));
  std::cout << opt.out << ": " << plan.boundaries.size() << " boundaries\n";
  return 0;
}

// ---------------------------------------------------------------- generate
struct GenerateOpts {
  std::string input;
  std::string out = "out";
  double b = 5.0;
  double lambda = 100.0;
  double delta = 0.2;
  double h = pathsynth::kAutoBandwidth;
  double alpha = pathsynth::kDefaultAlpha;
  long min_len = 0;
  long n = 1;
  CommonOpts common;
};

int run_generate(const GenerateOpts& opt)
{
  const pathsynth::PathTrace trace = load_single_trace(opt.input);

  pathsynth::GenerationParams params;
  params.b = opt.b;
  params.lambda = opt.lambda;
  params.delta = opt.delta;
  params.h = opt.h;
  params.alpha = opt.alpha;
  params.min_len = opt.min_len > 0 ? opt.min_len : pathsynth::kAutoMinLen;
  params.n_realizations = opt.n;
  params.rng = opt.common.rng();

  const pathsynth::GenerationReport report = pathsynth::generate(trace, params);

  fs::create_directories(opt.out);
  std::vector<std::string> files;
  for (const auto& realization : report.realizations) {
    const fs::path file = fs::path(opt.out) / (realization.id + ".csv");
    pathsynth::write_trace_csv(file, realization);
    files.push_back(file.filename().string());
  }
  pathsynth::write_tidy_csv(fs::path(opt.out) / "realizations_tidy.csv",
                            report.realizations);

  json j = pathsynth::to_json(report);
  j["command"] = "generate";
  j["params"]["input"] = opt.input;
  j["params"]["out"] = opt.out;
  j["realization_files"] = files;
  pathsynth::write_file_atomic(fs::path(opt.out) / "generation_report.json", json_text(j));
  std::cout << opt.out << ": " << files.size() << " realizations, "
            << report.plan.boundaries.size() + 1 << " segment(s)\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate
struct EvaluateOpts {
  std::vector<std::string> train, test, synth;
  std::string out = "report.json";
  long window = pathsynth::kAutoWindow;
  long stride = pathsynth::kAutoStride;
  long k = pathsynth::kAutoBins;
  double tau = 0.0;
  long repeat = 1;
  CommonOpts common;
};

//! One evaluation over given clouds; repeat > 1 regroups the synthetic
//! traces into disjoint groups and averages C_T across them.
int run_evaluate(const EvaluateOpts& opt)
{
  const std::vector<pathsynth::PathTrace> train = load_many(opt.train);
  const std::vector<pathsynth::PathTrace> test = load_many(opt.test);
  std::vector<pathsynth::PathTrace> synth = load_many(opt.synth);
  if (opt.repeat < 1)
    throw pathsynth::Error(pathsynth::ErrorCode::InvalidParameter, "--repeat must be >= 1");

  const pathsynth::RngSpec eval_rng =
    pathsynth::derive_stream(opt.common.rng(), kTagEvaluate);

  json j;
  j["command"] = "evaluate";
  j["params"] = {{"train", opt.train}, {"test", opt.test},     {"synth", opt.synth},
                 {"L", opt.window},    {"stride", opt.stride}, {"k", opt.k},
                 {"tau", opt.tau},     {"repeat", opt.repeat}, {"seed", opt.common.seed},
                 {"stream", opt.common.stream}};

  if (opt.repeat == 1) {
    const pathsynth::ThreeSampleReport report = pathsynth::evaluate_traces(
      train, test, synth, opt.window, opt.stride, opt.k, opt.tau, eval_rng);
    j["report"] = pathsynth::to_json(report);
    j["c_t"] = report.c_t;
    pathsynth::write_file_atomic(opt.out, json_text(j));
    std::cout << opt.out << ": c_t = " << report.c_t << "\n";
    return 0;
  }

  // Deterministically shuffle synthetic traces, deal them round-robin into
  // groups, and evaluate each group against the shared train/test sets.
  const long groups_n = std::min<long>(opt.repeat, static_cast<long>(synth.size()));
  pathsynth::RngStream shuffle_stream(
    pathsynth::derive_stream(opt.common.rng(), kTagRegroup));
  for (std::size_t i = synth.size(); i > 1; --i)
    std::swap(synth[i - 1],
              synth[shuffle_stream.next_below(static_cast<std::uint64_t>(i))]);

  std::vector<double> cts;
  json group_reports = json::array();
  for (long g = 0; g < groups_n; ++g) {
    std::vector<pathsynth::PathTrace> group;
    for (std::size_t i = static_cast<std::size_t>(g); i < synth.size();
         i += static_cast<std::size_t>(groups_n))
      group.push_back(synth[i]);
    const pathsynth::ThreeSampleReport report = pathsynth::evaluate_traces(
      train, test, group, opt.window, opt.stride, opt.k, opt.tau, eval_rng);
    cts.push_back(report.c_t);
    json gj = pathsynth::to_json(report);
    gj["group"] = g;
    gj["group_size"] = group.size();
    group_reports.push_back(gj);
  }
  double mean = 0.0;
  for (const double v : cts)
    mean += v;
  mean /= static_cast<double>(cts.size());
  double var = 0.0;
  for (const double v : cts)
    var += (v - mean) * (v - mean);
  const double sd = cts.size() > 1 ? std::sqrt(var / static_cast<double>(cts.size() - 1)) : 0.0;

  j["groups"] = group_reports;
  j["c_t"] = mean;
  j["c_t_mean"] = mean;
  j["c_t_std"] = sd;
  pathsynth::write_file_atomic(opt.out, json_text(j));
  std::cout << opt.out << ": c_t = " << mean << " +/- " << sd << " over " << groups_n
            << " groups\n";
  return 0;
}

// ---------------------------------------------------------------- replicate
struct ReplicateOpts {
  std::string input;
  std::string similar;
  bool demo = false;
  long demo_n = 400;
  std::string out = "replicate_out";
  std::vector<double> b_grid{2.0, 5.0, 10.0, 20.0};
  std::vector<double> lambda_grid{10.0, 50.0, 100.0, 150.0};
  double delta = 0.2;
  double h = pathsynth::kAutoBandwidth;
  double alpha = pathsynth::kDefaultAlpha;
  long min_len = 0;
  long n = 50;
  long window = pathsynth::kAutoWindow;
  long stride = pathsynth::kAutoStride;
  long k = pathsynth::kAutoBins;
  double tau = 0.0;
  long jobs = 1;
  CommonOpts common;
};

struct SweepRow {
  double b = 0.0, lambda = 0.0, mean = 0.0, sd = 0.0;
  long n_realizations = 0;
};

//! generate + per-realization evaluate for one grid point; C_T is averaged
//! over realizations, matching the report-as-mean convention.
SweepRow run_grid_point(const pathsynth::PathTrace& source,
                        const pathsynth::PathTrace& similar, const ReplicateOpts& opt,
                        double b, double lambda, std::uint64_t grid_index)
{
  pathsynth::GenerationParams params;
  params.b = b;
  params.lambda = lambda;
  params.delta = opt.delta;
  params.h = opt.h;
  params.alpha = opt.alpha;
  params.min_len = opt.min_len > 0 ? opt.min_len : pathsynth::kAutoMinLen;
  params.n_realizations = opt.n;
  params.rng = pathsynth::derive_stream(opt.common.rng(), kTagGridBase + grid_index);

  const pathsynth::GenerationReport report = pathsynth::generate(source, params);
  const pathsynth::RngSpec eval_rng =
    pathsynth::derive_stream(opt.common.rng(), kTagEvaluate, grid_index);

  std::vector<double> cts;
  cts.reserve(report.realizations.size());
  for (const auto& realization : report.realizations) {
    const pathsynth::ThreeSampleReport ts = pathsynth::evaluate_traces(
      {source}, {similar}, {realization}, opt.window, opt.stride, opt.k, opt.tau,
      eval_rng);
    cts.push_back(ts.c_t);
  }
  SweepRow row;
  row.b = b;
  row.lambda = lambda;
  row.n_realizations = static_cast<long>(cts.size());
  for (const double v : cts)
    row.mean += v;
  row.mean /= static_cast<double>(cts.size());
  double var = 0.0;
  for (const double v : cts)
    var += (v - row.mean) * (v - row.mean);
  row.sd = cts.size() > 1 ? std::sqrt(var / static_cast<double>(cts.size() - 1)) : 0.0;
  return row;
}

int run_replicate(const ReplicateOpts& opt)
{
  if (!opt.demo && opt.input.empty())
    throw pathsynth::Error(pathsynth::ErrorCode::InvalidParameter,
                           "provide a trace file or use --demo");
  if (!opt.demo && opt.similar.empty())
    throw pathsynth::Error(pathsynth::ErrorCode::InvalidParameter,
                           "provide --similar (held-out path) or use --demo");

  fs::create_directories(opt.out);
  pathsynth::PathTrace source, similar;
  if (opt.demo) {
    source = pathsynth::make_demo_trace(
      opt.demo_n, pathsynth::derive_stream(opt.common.rng(), kTagDemoSource),
      "demo_source");
    similar = pathsynth::make_demo_trace(
      opt.demo_n, pathsynth::derive_stream(opt.common.rng(), kTagDemoSimilar),
      "demo_similar");
    pathsynth::write_trace_csv(fs::path(opt.out) / "demo_source.csv", source);
    pathsynth::write_trace_csv(fs::path(opt.out) / "demo_similar.csv", similar);
  } else {
    source = load_single_trace(opt.input);
    similar = load_single_trace(opt.similar);
  }

  std::vector<double> bs = opt.b_grid;
  std::vector<double> lambdas = opt.lambda_grid;
  std::sort(bs.begin(), bs.end());
  std::sort(lambdas.begin(), lambdas.end());

  struct GridPoint {
    double b, lambda;
    std::uint64_t index;
  };
  std::vector<GridPoint> grid;
  std::uint64_t index = 0;
  for (const double b : bs)
    for (const double lambda : lambdas)
      grid.push_back({b, lambda, index++});

  std::vector<SweepRow> rows(grid.size());
  const long jobs = std::max<long>(1, opt.jobs);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size())
        return;
      try {
        rows[i] = run_grid_point(source, similar, opt, grid[i].b, grid[i].lambda,
                                 grid[i].index);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error)
          first_error = std::current_exception();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (long t = 0; t < std::min<long>(jobs, static_cast<long>(grid.size())); ++t)
      pool.emplace_back(worker);
    for (auto& th : pool)
      th.join();
  }
  if (first_error)
    std::rethrow_exception(first_error);

  std::ostringstream csv;
  csv << "b,lambda,mean_c_t,std_c_t,n_realizations\n";
  for (const auto& row : rows)
    csv << pathsynth::format_double(row.b) << ',' << pathsynth::format_double(row.lambda)
        << ',' << pathsynth::format_double(row.mean) << ','
        << pathsynth::format_double(row.sd) << ',' << row.n_realizations << '\n';
  pathsynth::write_file_atomic(fs::path(opt.out) / "sweep.csv", csv.str());

  json j;
  j["command"] = "replicate";
  j["params"] = {{"input", opt.demo ? "(demo)" : opt.input},
                 {"similar", opt.demo ? "(demo)" : opt.similar},
                 {"demo", opt.demo},
                 {"demo_n", opt.demo_n},
                 {"b_grid", bs},
                 {"lambda_grid", lambdas},
                 {"delta", opt.delta},
                 {"h", opt.h},
                 {"alpha", opt.alpha},
                 {"min_len", opt.min_len},
                 {"n_realizations", opt.n},
                 {"L", opt.window},
                 {"stride", opt.stride},
                 {"k", opt.k},
                 {"tau", opt.tau},
                 {"seed", opt.common.seed},
                 {"stream", opt.common.stream},
                 {"jobs", opt.jobs},
                 {"out", opt.out}};
  json table = json::array();
  for (const auto& row : rows)
    table.push_back({{"b", row.b},
                     {"lambda", row.lambda},
                     {"mean_c_t", row.mean},
                     {"std_c_t", row.sd},
                     {"n_realizations", row.n_realizations}});
  j["sweep"] = table;
  pathsynth::write_file_atomic(fs::path(opt.out) / "replicate_report.json", json_text(j));
  std::cout << opt.out << "/sweep.csv: " << rows.size() << " grid points\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Synthetic path-trace generation and evaluation"};
  app.require_subcommand(1);

  SegmentOpts seg;
  CLI::App* seg_cmd =
    app.add_subcommand("segment", "Detect cross-correlation change points in a trace");
  seg_cmd->add_option("trace", seg.input, "Input trace CSV")->required();
  seg_cmd->add_option("--out", seg.out, "Output plan JSON")
    ->envname("PATHSYNTH_OUT")
    ->capture_default_str();
  seg_cmd->add_option("--b", seg.b, "Time bandwidth for the residual fit")
    ->envname("PATHSYNTH_B")
    ->capture_default_str();
  seg_cmd->add_option("--hv", seg.h, "Value bandwidth (0 = auto)")
    ->envname("PATHSYNTH_HV")
    ->capture_default_str();
  seg_cmd->add_option("--alpha", seg.alpha, "Test level")
    ->envname("PATHSYNTH_ALPHA")
    ->capture_default_str();
  seg_cmd->add_option("--min-len", seg.min_len, "Minimum segment length (0 = auto)")
    ->envname("PATHSYNTH_MIN_LEN")
    ->capture_default_str();
  add_seed_opts(seg_cmd, seg.common);

  GenerateOpts gen;
  CLI::App* gen_cmd =
    app.add_subcommand("generate", "Synthesize realizations from a source trace");
  gen_cmd->add_option("trace", gen.input, "Input trace CSV")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")
    ->envname("PATHSYNTH_OUT")
    ->capture_default_str();
  gen_cmd->add_option("--b", gen.b, "Time bandwidth")
    ->envname("PATHSYNTH_B")
    ->capture_default_str();
  gen_cmd->add_option("--lambda", gen.lambda, "Residual scale (percent; 100 = neutral)")
    ->envname("PATHSYNTH_LAMBDA")
    ->capture_default_str();
  gen_cmd->add_option("--delta", gen.delta, "Correlation jitter half-width")
    ->envname("PATHSYNTH_DELTA")
    ->capture_default_str();
  gen_cmd->add_option("--hv", gen.h, "Value bandwidth (0 = auto)")
    ->envname("PATHSYNTH_HV")
    ->capture_default_str();
  gen_cmd->add_option("--alpha", gen.alpha, "Segmentation test level")
    ->envname("PATHSYNTH_ALPHA")
    ->capture_default_str();
  gen_cmd->add_option("--min-len", gen.min_len, "Minimum segment length (0 = auto)")
    ->envname("PATHSYNTH_MIN_LEN")
    ->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Number of realizations")
    ->envname("PATHSYNTH_N")
    ->capture_default_str();
  add_seed_opts(gen_cmd, gen.common);

  EvaluateOpts ev;
  CLI::App* ev_cmd = app.add_subcommand(
    "evaluate", "Run the three-sample overfit/underfit test on trace sets");
  ev_cmd->add_option("--train", ev.train, "Source (reference) traces: files or directories")
    ->required();
  ev_cmd->add_option("--test", ev.test, "Held-out traces: files or directories")->required();
  ev_cmd->add_option("--synth", ev.synth, "Synthetic traces: files or directories")
    ->required();
  ev_cmd->add_option("--out", ev.out, "Output report JSON")
    ->envname("PATHSYNTH_OUT")
    ->capture_default_str();
  ev_cmd->add_option("--L", ev.window, "Window length (0 = auto, round(sqrt(n)))")
    ->envname("PATHSYNTH_L")
    ->capture_default_str();
  ev_cmd->add_option("--stride", ev.stride, "Window stride (0 = auto, L/2)")
    ->envname("PATHSYNTH_STRIDE")
    ->capture_default_str();
  ev_cmd->add_option("--k", ev.k, "Bin count (0 = auto, held-out count / 50)")
    ->envname("PATHSYNTH_K")
    ->capture_default_str();
  ev_cmd->add_option("--tau", ev.tau, "Bin retention threshold in [0, 1)")
    ->envname("PATHSYNTH_TAU")
    ->capture_default_str();
  ev_cmd->add_option("--repeat", ev.repeat, "Average C_T over this many synthetic regroupings")
    ->envname("PATHSYNTH_REPEAT")
    ->capture_default_str();
  add_seed_opts(ev_cmd, ev.common);

  ReplicateOpts rep;
  CLI::App* rep_cmd = app.add_subcommand(
    "replicate", "Sweep (b, lambda), generating and evaluating at each grid point");
  rep_cmd->add_option("trace", rep.input, "Source trace CSV (omit with --demo)");
  rep_cmd->add_option("--similar", rep.similar, "Held-out trace CSV for evaluation")
    ->envname("PATHSYNTH_SIMILAR");
  rep_cmd->add_flag("--demo", rep.demo, "Use built-in pursuit-style demo traces");
  rep_cmd->add_option("--demo-n", rep.demo_n, "Demo trace length")
    ->envname("PATHSYNTH_DEMO_N")
    ->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "Output directory")
    ->envname("PATHSYNTH_OUT")
    ->capture_default_str();
  rep_cmd->add_option("--b-grid", rep.b_grid, "Time bandwidth grid")
    ->envname("PATHSYNTH_B_GRID")
    ->delimiter(',')
    ->capture_default_str();
  rep_cmd->add_option("--lambda-grid", rep.lambda_grid, "Scale grid")
    ->envname("PATHSYNTH_LAMBDA_GRID")
    ->delimiter(',')
    ->capture_default_str();
  rep_cmd->add_option("--delta", rep.delta, "Correlation jitter half-width")
    ->envname("PATHSYNTH_DELTA")
    ->capture_default_str();
  rep_cmd->add_option("--hv", rep.h, "Value bandwidth (0 = auto)")
    ->envname("PATHSYNTH_HV")
    ->capture_default_str();
  rep_cmd->add_option("--alpha", rep.alpha, "Segmentation test level")
    ->envname("PATHSYNTH_ALPHA")
    ->capture_default_str();
  rep_cmd->add_option("--min-len", rep.min_len, "Minimum segment length (0 = auto)")
    ->envname("PATHSYNTH_MIN_LEN")
    ->capture_default_str();
  rep_cmd->add_option("--n", rep.n, "Realizations per grid point")
    ->envname("PATHSYNTH_N")
    ->capture_default_str();
  rep_cmd->add_option("--L", rep.window, "Window length (0 = auto)")
    ->envname("PATHSYNTH_L")
    ->capture_default_str();
  rep_cmd->add_option("--stride", rep.stride, "Window stride (0 = auto)")
    ->envname("PATHSYNTH_STRIDE")
    ->capture_default_str();
  rep_cmd->add_option("--k", rep.k, "Bin count (0 = auto)")
    ->envname("PATHSYNTH_K")
    ->capture_default_str();
  rep_cmd->add_option("--tau", rep.tau, "Bin retention threshold in [0, 1)")
    ->envname("PATHSYNTH_TAU")
    ->capture_default_str();
  rep_cmd->add_option("--jobs", rep.jobs, "Parallel grid points")
    ->envname("PATHSYNTH_JOBS")
    ->capture_default_str();
  add_seed_opts(rep_cmd, rep.common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (seg_cmd->parsed())
      return run_segment(seg);
    if (gen_cmd->parsed())
      return run_generate(gen);
    if (ev_cmd->parsed())
      return run_evaluate(ev);
    if (rep_cmd->parsed())
      return run_replicate(rep);
  } catch (const pathsynth::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == pathsynth::ErrorCode::Io)
      return 2;
    return e.is_numerical() ? 4 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
