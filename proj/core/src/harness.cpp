#include "streamann/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include "streamann/error.hpp"
#include "streamann/oracle.hpp"
#include "streamann/parallel.hpp"

namespace streamann {

std::string_view to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::kInPlace: return "inplace";
    case Regime::kBaseline: return "baseline";
    case Regime::kStaticRebuild: return "static";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  if (name == "inplace" || name == "in-place") return Regime::kInPlace;
  if (name == "baseline" || name == "fresh") return Regime::kBaseline;
  if (name == "static" || name == "static-rebuild" || name == "rebuild") return Regime::kStaticRebuild;
  throw Error(ErrorCode::kInvalidParameter, "unknown regime '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  build.validate();
  del.validate();
  policy.validate();
  if (threads < 1) throw Error(ErrorCode::kInvalidParameter, "threads must be >= 1");
  if (recall_k < 1) throw Error(ErrorCode::kInvalidParameter, "recall k must be >= 1");
  if (checkpoint_stride < 1) throw Error(ErrorCode::kInvalidParameter, "checkpoint stride must be >= 1");
  if (search_beam.value_or(build.beam_width) < recall_k) {
    throw Error(ErrorCode::kInvalidParameter, "search beam must be >= recall k");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_runbook(const Runbook& runbook, const Dataset& dataset, const Dataset& queries) {
  std::ostringstream why;
  if (runbook.count != dataset.count()) {
    why << "runbook expects " << runbook.count << " vectors, dataset has " << dataset.count() << "; ";
  }
  if (runbook.dim != 0 && runbook.dim != dataset.dim()) {
    why << "runbook dim " << runbook.dim << " != dataset dim " << dataset.dim() << "; ";
  }
  if (queries.dim() != dataset.dim()) {
    why << "query dim " << queries.dim() << " != dataset dim " << dataset.dim() << "; ";
  }
  const auto violations = validate(runbook, dataset.count());
  for (std::size_t i = 0; i < violations.size() && i < 10; ++i) {
    why << "step " << violations[i].step << ": " << to_string(violations[i].kind) << " id "
        << violations[i].id << "; ";
  }
  if (violations.size() > 10) why << (violations.size() - 10) << " more violations; ";
  const std::string text = why.str();
  if (!text.empty()) throw Error(ErrorCode::kValidation, "runbook rejected: " + text);
}

void audit_graph(const Graph& graph, std::size_t step, bool consolidated) {
  if (graph.max_degree() > graph.degree_bound()) {
    throw Error(ErrorCode::kValidation,
                "audit: degree bound exceeded after step " + std::to_string(step));
  }
  if (consolidated && graph.dangling_edge_count() != 0) {
    throw Error(ErrorCode::kValidation,
                "audit: edges into removed nodes survive consolidation at step " + std::to_string(step));
  }
}

}  // namespace

RunResult run(const Runbook& runbook, const Dataset& dataset, const Dataset& queries,
              const RunConfig& config) {
  config.validate();
  check_runbook(runbook, dataset, queries);

  const std::size_t threads = config.threads;
  const std::uint32_t beam = config.search_beam.value_or(config.build.beam_width);
  const bool streaming = config.regime != Regime::kStaticRebuild;

  std::unique_ptr<StreamingIndex> index;
  if (streaming) {
    index = std::make_unique<StreamingIndex>(
        dataset, config.build,
        config.regime == Regime::kBaseline ? DeleteRegime::kBaseline : DeleteRegime::kInPlace,
        config.del, config.policy, config.seed);
    index->set_threads(threads);
  }
  std::unique_ptr<Graph> rebuilt;
  std::uint64_t rebuilt_base = 0;  // distances spent by graphs already discarded
  auto total_distances = [&]() -> std::uint64_t {
    if (index) return index->graph().counter().total();
    return rebuilt_base + (rebuilt ? rebuilt->counter().total() : 0);
  };

  std::vector<char> live(dataset.count(), 0);
  std::size_t live_count = 0;
  std::size_t checkpoint_ordinal = 0;

  RunResult result;
  RunSummary& summary = result.summary;
  double recall_sum = 0.0;

  for (std::size_t s = 0; s < runbook.steps.size(); ++s) {
    const Step& step = runbook.steps[s];
    StepMetrics m;
    m.step = s + 1;
    m.inserts = step.inserts.size();
    m.deletes = step.deletes.size();

    auto t0 = Clock::now();
    std::uint64_t c0 = total_distances();
    if (index) {
      parallel_for(step.inserts.size(), threads, [&](std::size_t i) { index->insert(step.inserts[i]); });
    }
    m.insert_s = seconds_since(t0);
    m.insert_distances = total_distances() - c0;

    t0 = Clock::now();
    c0 = total_distances();
    if (index) {
      parallel_for(step.deletes.size(), threads, [&](std::size_t i) { index->remove(step.deletes[i]); });
    }
    m.delete_s = seconds_since(t0);
    m.delete_distances = total_distances() - c0;

    t0 = Clock::now();
    c0 = total_distances();
    if (index) m.consolidated = index->maybe_consolidate();
    m.consolidate_s = seconds_since(t0);
    m.consolidate_distances = total_distances() - c0;

    for (const VectorId id : step.inserts) live_count += !live[id], live[id] = 1;
    for (const VectorId id : step.deletes) live_count -= live[id], live[id] = 0;
    m.active = live_count;

    if (index && config.audit) audit_graph(index->graph(), m.step, m.consolidated);

    if (step.checkpoint && (++checkpoint_ordinal % config.checkpoint_stride == 0) && live_count > 0) {
      std::vector<VectorId> active_ids;
      active_ids.reserve(live_count);
      for (VectorId id = 0; id < dataset.count(); ++id) {
        if (live[id]) active_ids.push_back(id);
      }

      if (!streaming) {
        t0 = Clock::now();
        if (rebuilt) rebuilt_base += rebuilt->counter().total();
        rebuilt = std::make_unique<Graph>(
            rebuild_from_scratch(dataset, active_ids, config.build, config.seed + m.step));
        m.insert_s += seconds_since(t0);
        m.insert_distances += rebuilt->counter().total();
        ++summary.rebuilds;
      }
      const Graph& graph = index ? index->graph() : *rebuilt;

      const GroundTruth truth = brute_force_knn(dataset, active_ids, queries, config.recall_k, threads);

      std::vector<double> recalls(queries.count(), 0.0);
      c0 = total_distances();
      t0 = Clock::now();
      parallel_for(queries.count(), threads, [&](std::size_t q) {
        const auto res = graph.search(queries.row(static_cast<VectorId>(q)), config.recall_k, beam);
        recalls[q] = recall_at_k(res.answers, truth.rows[q], config.recall_k);
      });
      m.search_s = seconds_since(t0);
      m.query_distances = total_distances() - c0;

      m.measured = true;
      const double nq = static_cast<double>(std::max<std::size_t>(queries.count(), 1));
      m.recall = std::accumulate(recalls.begin(), recalls.end(), 0.0) / nq;
      m.dist_per_query = static_cast<double>(m.query_distances) / nq;
      m.qps = m.search_s > 0.0 ? static_cast<double>(queries.count()) / m.search_s : 0.0;
      recall_sum += m.recall;
      ++summary.measured_steps;
    }

    if (!config.record_timings) {
      m.insert_s = m.delete_s = m.consolidate_s = m.search_s = m.qps = 0.0;
    }
    m.cumulative_distances = total_distances();

    summary.insert_s += m.insert_s;
    summary.delete_s += m.delete_s + m.consolidate_s;
    summary.search_s += m.search_s;
    summary.insert_ops += m.inserts;
    summary.delete_ops += m.deletes;
    summary.consolidations += m.consolidated;
    summary.update_distances += m.insert_distances + m.delete_distances;
    summary.consolidate_distances += m.consolidate_distances;
    summary.query_distances += m.query_distances;
    result.steps.push_back(m);
  }
  if (summary.measured_steps > 0) {
    summary.mean_recall = recall_sum / static_cast<double>(summary.measured_steps);
  }
  if (index) {
    summary.lazy_deletes = index->lazy_delete_count();
    summary.inplace_deletes = index->inplace_delete_count();
  }
  return result;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

template <typename T>
T parse_field(std::string_view tok, std::size_t line) {
  std::istringstream in{std::string(tok)};
  T v{};
  in >> v;
  if (!in || in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kFormat, "trace line " + std::to_string(line) + ": bad field '" +
                                        std::string(tok) + "'");
  }
  return v;
}

}  // namespace

std::string format_trace_csv(const std::vector<StepMetrics>& steps) {
  std::string out(kTraceColumns);
  out += '\n';
  for (const auto& m : steps) {
    if (!m.measured) continue;
    out += std::to_string(m.step) + ',' + std::to_string(m.active) + ',';
    append_double(out, m.recall);
    out += ',';
    append_double(out, m.dist_per_query);
    out += ',';
    append_double(out, m.qps);
    out += ',';
    append_double(out, m.insert_s);
    out += ',';
    append_double(out, m.delete_s);
    out += ',';
    append_double(out, m.consolidate_s);
    out += ',' + std::to_string(m.insert_distances + m.delete_distances) + ',' +
           std::to_string(m.consolidate_distances) + ',' + std::to_string(m.cumulative_distances) +
           '\n';
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(std::string_view text) {
  std::vector<TraceRow> rows;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kTraceColumns) {
        throw Error(ErrorCode::kFormat, "trace header does not match '" + std::string(kTraceColumns) + "'");
      }
      header = false;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t i = 0;
    while (true) {
      const std::size_t comma = line.find(',', i);
      f.push_back(line.substr(i, comma == std::string_view::npos ? std::string_view::npos : comma - i));
      if (comma == std::string_view::npos) break;
      i = comma + 1;
    }
    if (f.size() != 11) {
      throw Error(ErrorCode::kFormat, "trace line " + std::to_string(line_no) + ": expected 11 fields");
    }
    TraceRow r;
    r.step = parse_field<std::size_t>(f[0], line_no);
    r.active = parse_field<std::size_t>(f[1], line_no);
    r.recall = parse_field<double>(f[2], line_no);
    r.dist_per_query = parse_field<double>(f[3], line_no);
    r.qps = parse_field<double>(f[4], line_no);
    r.insert_s = parse_field<double>(f[5], line_no);
    r.delete_s = parse_field<double>(f[6], line_no);
    r.consolidate_s = parse_field<double>(f[7], line_no);
    r.update_dists = parse_field<std::uint64_t>(f[8], line_no);
    r.consolidate_dists = parse_field<std::uint64_t>(f[9], line_no);
    r.cumulative_dists = parse_field<std::uint64_t>(f[10], line_no);
    rows.push_back(r);
  }
  if (header) throw Error(ErrorCode::kFormat, "trace is missing its header line");
  return rows;
}

std::string format_summary_json(const RunSummary& s, const RunConfig& c) {
  nlohmann::ordered_json j;
  j["regime"] = std::string(to_string(c.regime));
  j["config"] = {
      {"R", c.build.degree_bound},
      {"l_build", c.build.beam_width},
      {"l_search", c.search_beam.value_or(c.build.beam_width)},
      {"alpha", c.build.alpha},
      {"l_delete", c.del.beam_width},
      {"k_candidates", c.del.candidates},
      {"c", c.del.edge_copies},
      {"consolidation_threshold", c.policy.threshold},
      {"threads", c.threads},
      {"recall_k", c.recall_k},
      {"checkpoint_stride", c.checkpoint_stride},
      {"seed", c.seed},
  };
  j["deletion_s"] = s.delete_s;
  j["insertion_s"] = s.insert_s;
  j["search_s"] = s.search_s;
  j["mean_recall"] = s.mean_recall;
  j["insert_ops"] = s.insert_ops;
  j["delete_ops"] = s.delete_ops;
  j["consolidations"] = s.consolidations;
  j["lazy_deletes"] = s.lazy_deletes;
  j["inplace_deletes"] = s.inplace_deletes;
  j["rebuilds"] = s.rebuilds;
  j["measured_steps"] = s.measured_steps;
  j["update_distances"] = s.update_distances;
  j["consolidate_distances"] = s.consolidate_distances;
  j["query_distances"] = s.query_distances;
  return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace

void emit_trace(const RunResult& result, const RunConfig& config, const std::filesystem::path& path) {
  write_text(path, format_trace_csv(result.steps));
  auto summary_path = path;
  summary_path += ".summary.json";
  write_text(summary_path, format_summary_json(result.summary, config));
}

std::vector<TraceRow> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str());
}

namespace {

double ratio(double b, double a) {
  if (a == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return b / a;
}

}  // namespace

CompareReport compare(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b,
                      const CompareTolerance& tolerance) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kAlignment, "traces have " + std::to_string(a.size()) + " and " +
                                           std::to_string(b.size()) + " checkpoints");
  }
  CompareReport report;
  double delta_sum = 0.0;
  double ratio_sum = 0.0;
  double ins_a = 0.0, ins_b = 0.0, del_a = 0.0, del_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].step != b[i].step) {
      throw Error(ErrorCode::kAlignment, "checkpoint " + std::to_string(i) + " is step " +
                                             std::to_string(a[i].step) + " vs step " +
                                             std::to_string(b[i].step));
    }
    StepComparison sc;
    sc.step = a[i].step;
    sc.recall_delta = (b[i].recall - a[i].recall) * 100.0;
    sc.dist_ratio = ratio(b[i].dist_per_query, a[i].dist_per_query);
    if (sc.recall_delta < tolerance.min_step_recall_delta) report.ok = false;
    delta_sum += sc.recall_delta;
    ratio_sum += sc.dist_ratio;
    ins_a += a[i].insert_s;
    ins_b += b[i].insert_s;
    del_a += a[i].delete_s + a[i].consolidate_s;
    del_b += b[i].delete_s + b[i].consolidate_s;
    report.steps.push_back(sc);
  }
  if (!a.empty()) {
    report.mean_recall_delta = delta_sum / static_cast<double>(a.size());
    report.mean_dist_ratio = ratio_sum / static_cast<double>(a.size());
  }
  report.insert_time_ratio = ratio(ins_b, ins_a);
  report.delete_time_ratio = ratio(del_b, del_a);
  if (report.mean_recall_delta < tolerance.min_mean_recall_delta) report.ok = false;
  return report;
}

CompareReport compare(const std::filesystem::path& trace_a, const std::filesystem::path& trace_b,
                      const CompareTolerance& tolerance) {
  return compare(load_trace(trace_a), load_trace(trace_b), tolerance);
}

std::string format_report(const CompareReport& report) {
  std::ostringstream out;
  out << "step,recall_delta_pts,dist_ratio\n";
  char buf[96];
  for (const auto& s : report.steps) {
    std::snprintf(buf, sizeof(buf), "%zu,%.4f,%.4f\n", s.step, s.recall_delta, s.dist_ratio);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean_recall_delta_pts=%.4f\n", report.mean_recall_delta);
  out << buf;
  std::snprintf(buf, sizeof(buf), "mean_dist_ratio=%.4f\n", report.mean_dist_ratio);
  out << buf;
  std::snprintf(buf, sizeof(buf), "insert_time_ratio=%.4f\n", report.insert_time_ratio);
  out << buf;
  std::snprintf(buf, sizeof(buf), "delete_time_ratio=%.4f\n", report.delete_time_ratio);
  out << buf;
  out << (report.ok ? "status=ok\n" : "status=tolerance-violated\n");
  return out.str();
}

}  // namespace streamann
