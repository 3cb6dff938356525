// streamann: generate data and runbooks, replay runbooks against a streaming
// index, and compare the resulting traces.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "streamann/dataset.hpp"
#include "streamann/error.hpp"
#include "streamann/harness.hpp"
#include "streamann/oracle.hpp"
#include "streamann/runbook.hpp"

namespace {

using namespace streamann;

constexpr int kExitValidation = 2;
constexpr int kExitTolerance = 3;

struct GenDataArgs {
  std::size_t n = 10000;
  std::size_t dim = 16;
  std::size_t clusters = 8;
  std::uint64_t seed = 1;
  float stddev = 0.1f;
  std::string out;
  std::size_t query_count = 0;
  std::string queries_out;
};

struct GenRunbookArgs {
  std::string type = "sliding";
  std::size_t n = 0;
  std::size_t t_max = 100;
  std::uint64_t seed = 1;
  std::string data;
  std::size_t clusters = 64;
  std::size_t rounds = 5;
  std::string name = "synthetic";
  std::string out;
};

struct RunArgs {
  std::string data;
  std::string queries;
  std::string runbook;
  std::string metric = "l2";
  std::string regime = "inplace";
  std::string out;
  std::optional<std::uint32_t> l_search;
  bool no_timings = false;
  RunConfig config;
};

struct CompareArgs {
  std::string a;
  std::string b;
  double min_mean_delta = -1e300;
  double min_step_delta = -1e300;
};

struct GroundTruthArgs {
  std::string data;
  std::string queries;
  std::string runbook;
  std::size_t step = 0;
  std::size_t k = 10;
  std::string metric = "l2";
  std::string out;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  auto& c = a.config;
  cmd->add_option("--data", a.data, "Vector file")->required();
  cmd->add_option("--queries", a.queries, "Query vector file")->required();
  cmd->add_option("--runbook", a.runbook, "Runbook file")->required();
  cmd->add_option("--metric", a.metric, "l2 or ip");
  cmd->add_option("--out", a.out, "Trace CSV path (summary goes to <out>.summary.json)")->required();
  cmd->add_option("--R", c.build.degree_bound, "Degree bound");
  cmd->add_option("--l-build", c.build.beam_width, "Insertion beam width");
  cmd->add_option("--l-search", a.l_search, "Query beam width (default: --l-build)");
  cmd->add_option("--alpha", c.build.alpha, "Pruning slack");
  cmd->add_option("--l-delete", c.del.beam_width, "Deletion beam width");
  cmd->add_option("--k-candidates", c.del.candidates, "Deletion candidate list size");
  cmd->add_option("--c", c.del.edge_copies, "Replacement edges per affected node");
  cmd->add_option("--consolidation-threshold", c.policy.threshold, "Deleted fraction that triggers consolidation");
  cmd->add_option("--threads", c.threads, "Worker threads");
  cmd->add_option("--seed", c.seed, "Seed for start-node sampling and rebuild order");
  cmd->add_option("--recall-k", c.recall_k, "k for recall@k");
  cmd->add_option("--checkpoint-stride", c.checkpoint_stride, "Measure every n-th checkpoint");
  cmd->add_flag("--audit", c.audit, "Check structural invariants after every step");
  cmd->add_flag("--no-timings", a.no_timings, "Zero wall-clock columns for reproducible traces");
}

int do_gen_data(const GenDataArgs& a) {
  if (a.query_count > 0 && a.queries_out.empty()) {
    throw CLI::ValidationError("--queries-out is required with --queries");
  }
  const auto model = GaussianMixture::make(a.dim, a.clusters, a.seed, a.stddev);
  save_vectors(model.sample(a.n, a.seed), a.out);
  std::cout << "wrote " << a.n << "x" << a.dim << " vectors to " << a.out << "\n";
  if (a.query_count > 0) {
    save_vectors(model.sample(a.query_count, a.seed + 1), a.queries_out);
    std::cout << "wrote " << a.query_count << " queries to " << a.queries_out << "\n";
  }
  return 0;
}

int do_gen_runbook(const GenRunbookArgs& a) {
  Runbook rb;
  std::size_t dim = 0;
  std::size_t n = a.n;
  if (!a.data.empty()) {
    const Dataset data = load_vectors(a.data);
    dim = data.dim();
    if (n == 0) n = data.count();
    if (a.type == "clustered") {
      ClusteredOptions opt;
      opt.clusters = a.clusters;
      opt.rounds = a.rounds;
      rb = gen_clustered(data, opt, a.seed);
    }
  } else if (a.type == "clustered") {
    throw CLI::ValidationError("clustered runbooks need --data");
  }
  if (a.type == "sliding") {
    rb = gen_sliding_window(n, a.t_max, a.seed);
  } else if (a.type == "expiration") {
    rb = gen_expiration_time(n, a.t_max, a.seed);
  } else if (a.type != "clustered") {
    throw CLI::ValidationError("--type must be sliding, expiration or clustered");
  }
  rb.dataset_name = a.name;
  rb.dim = dim;
  const auto problems = validate(rb);
  if (!problems.empty()) {
    std::cerr << "generated runbook failed validation (" << problems.size() << " problems)\n";
    return kExitValidation;
  }
  save_runbook(rb, a.out);
  std::cout << "wrote " << rb.steps.size() << "-step " << rb.generator << " runbook to " << a.out << "\n";
  return 0;
}

int do_run(RunArgs a, std::optional<Regime> forced) {
  a.config.regime = forced.value_or(parse_regime(a.regime));
  a.config.search_beam = a.l_search;
  a.config.record_timings = !a.no_timings;
  const Metric metric = parse_metric(a.metric);
  const Dataset data = load_vectors(a.data, metric);
  const Dataset queries = load_vectors(a.queries, metric);
  const Runbook rb = load_runbook(a.runbook);

  const RunResult result = run(rb, data, queries, a.config);
  emit_trace(result, a.config, a.out);
  const auto& s = result.summary;
  std::printf("regime=%s steps=%zu measured=%zu mean_recall@%zu=%.4f insert_s=%.3f delete_s=%.3f "
              "search_s=%.3f consolidations=%zu\n",
              std::string(to_string(a.config.regime)).c_str(), result.steps.size(), s.measured_steps,
              a.config.recall_k, s.mean_recall, s.insert_s, s.delete_s, s.search_s, s.consolidations);
  return 0;
}

int do_compare(const CompareArgs& a) {
  const CompareReport report = compare(a.a, a.b, {a.min_mean_delta, a.min_step_delta});
  std::cout << format_report(report);
  return report.ok ? 0 : kExitTolerance;
}

int do_ground_truth(const GroundTruthArgs& a) {
  const Metric metric = parse_metric(a.metric);
  const Dataset data = load_vectors(a.data, metric);
  const Dataset queries = load_vectors(a.queries, metric);
  std::vector<VectorId> active;
  if (a.runbook.empty()) {
    active.resize(data.count());
    for (VectorId i = 0; i < data.count(); ++i) active[i] = i;
  } else {
    const Runbook rb = load_runbook(a.runbook);
    if (a.step == 0 || a.step > rb.steps.size()) throw CLI::ValidationError("--step out of range");
    std::vector<char> live(data.count(), 0);
    for (std::size_t s = 0; s < a.step; ++s) {
      for (const VectorId id : rb.steps[s].inserts) live.at(id) = 1;
      for (const VectorId id : rb.steps[s].deletes) live.at(id) = 0;
    }
    for (VectorId i = 0; i < data.count(); ++i) {
      if (live[i]) active.push_back(i);
    }
  }
  save_ground_truth(brute_force_knn(data, active, queries, a.k), a.out);
  std::cout << "wrote ground truth for " << queries.count() << " queries over " << active.size()
            << " active points to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming proximity-graph index: data generation, runbook replay, trace comparison"};
  app.set_config("--config", "", "INI/TOML file whose keys are long option names");
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen_data = app.add_subcommand("gen-data", "Sample a Gaussian-mixture dataset");
  gen_data->add_option("--n", gd.n, "Number of vectors");
  gen_data->add_option("--dim", gd.dim, "Dimension");
  gen_data->add_option("--clusters", gd.clusters, "Mixture components");
  gen_data->add_option("--seed", gd.seed, "Seed");
  gen_data->add_option("--stddev", gd.stddev, "Per-coordinate standard deviation");
  gen_data->add_option("--out", gd.out, "Output vector file")->required();
  gen_data->add_option("--queries", gd.query_count, "Also sample this many queries from the mixture");
  gen_data->add_option("--queries-out", gd.queries_out, "Query output file");

  GenRunbookArgs gr;
  auto* gen_rb = app.add_subcommand("gen-runbook", "Generate a SlidingWindow/ExpirationTime/Clustered runbook");
  gen_rb->add_option("--type", gr.type, "sliding, expiration or clustered");
  gen_rb->add_option("--n", gr.n, "Dataset size (default: rows in --data)");
  gen_rb->add_option("--t-max", gr.t_max, "Number of steps (sliding/expiration)");
  gen_rb->add_option("--seed", gr.seed, "Seed");
  gen_rb->add_option("--data", gr.data, "Vector file (required for clustered)");
  gen_rb->add_option("--clusters", gr.clusters, "k-means clusters (clustered)");
  gen_rb->add_option("--rounds", gr.rounds, "Rounds (clustered)");
  gen_rb->add_option("--name", gr.name, "Dataset name recorded in the header");
  gen_rb->add_option("--out", gr.out, "Output runbook file")->required();

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Replay a runbook and write a trace");
  add_run_options(run_cmd, ra);
  run_cmd->add_option("--regime", ra.regime, "inplace, baseline or static");

  RunArgs rb;
  rb.config.checkpoint_stride = 64;
  auto* rebuild_cmd = app.add_subcommand(
      "rebuild-baseline", "Replay a runbook, rebuilding from scratch at measured checkpoints");
  add_run_options(rebuild_cmd, rb);

  CompareArgs ca;
  auto* cmp = app.add_subcommand("compare", "Per-step recall deltas between two traces (b - a)");
  cmp->add_option("a", ca.a, "Reference trace")->required();
  cmp->add_option("b", ca.b, "Candidate trace")->required();
  cmp->add_option("--min-recall-delta", ca.min_mean_delta, "Fail if mean delta (points) is below this");
  cmp->add_option("--min-step-delta", ca.min_step_delta, "Fail if any step delta (points) is below this");

  GroundTruthArgs ga;
  auto* gt = app.add_subcommand("ground-truth", "Write exact k-NN ground truth");
  gt->add_option("--data", ga.data, "Vector file")->required();
  gt->add_option("--queries", ga.queries, "Query vector file")->required();
  gt->add_option("--runbook", ga.runbook, "Restrict to the active set after --step");
  gt->add_option("--step", ga.step, "1-based step of --runbook");
  gt->add_option("--k", ga.k, "Neighbors per query");
  gt->add_option("--metric", ga.metric, "l2 or ip");
  gt->add_option("--out", ga.out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_data) return do_gen_data(gd);
    if (*gen_rb) return do_gen_runbook(gr);
    if (*run_cmd) return do_run(ra, std::nullopt);
    if (*rebuild_cmd) return do_run(rb, Regime::kStaticRebuild);
    if (*cmp) return do_compare(ca);
    if (*gt) return do_ground_truth(ga);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return e.code() == ErrorCode::kValidation || e.code() == ErrorCode::kAlignment ? kExitValidation : 1;
  }
  return 0;
}
