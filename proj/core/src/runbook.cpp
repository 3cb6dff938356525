#include "streamann/runbook.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "streamann/error.hpp"
#include "streamann/kmeans.hpp"

namespace streamann {

namespace {

std::vector<VectorId> shuffled_ids(std::size_t n, std::mt19937_64& rng) {
  std::vector<VectorId> ids(n);
  std::iota(ids.begin(), ids.end(), VectorId{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

// Bounds of part `i` when n items are cut into `parts` near-equal slices.
std::pair<std::size_t, std::size_t> part_bounds(std::size_t n, std::size_t parts, std::size_t i) {
  return {i * n / parts, (i + 1) * n / parts};
}

}  // namespace

Runbook gen_sliding_window(std::size_t n, std::size_t t_max, std::uint64_t seed) {
  if (t_max < 2 || t_max % 2 != 0) {
    throw Error(ErrorCode::kInvalidParameter, "sliding window needs an even t_max >= 2");
  }
  if (n < t_max) throw Error(ErrorCode::kInvalidParameter, "sliding window needs n >= t_max");

  std::mt19937_64 rng(seed);
  const auto order = shuffled_ids(n, rng);
  auto part = [&](std::size_t i) {
    const auto [lo, hi] = part_bounds(n, t_max, i);
    return std::vector<VectorId>(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                 order.begin() + static_cast<std::ptrdiff_t>(hi));
  };

  Runbook rb;
  rb.count = n;
  rb.t_max = t_max;
  rb.seed = seed;
  rb.generator = "sliding_window";
  const std::size_t half = t_max / 2;
  for (std::size_t t = 1; t <= t_max; ++t) {
    Step step;
    step.inserts = part(t - 1);
    if (t > half) step.deletes = part(t - 1 - half);
    step.checkpoint = t > half;
    rb.steps.push_back(std::move(step));
  }
  return rb;
}

ExpirationSchedule expiration_schedule(std::size_t n, std::size_t t_max, std::uint64_t seed) {
  if (t_max < 10 || t_max % 10 != 0) {
    throw Error(ErrorCode::kInvalidParameter, "expiration time needs t_max divisible by 10");
  }
  if (n < t_max) throw Error(ErrorCode::kInvalidParameter, "expiration time needs n >= t_max");

  std::mt19937_64 rng(seed);
  ExpirationSchedule s;
  s.order = shuffled_ids(n, rng);
  s.insert_step.resize(n);
  s.lifespan.resize(n);
  // Weights 1:2:10 over {t_max, t_max/2, t_max/10}.
  std::uniform_int_distribution<int> draw(0, 12);
  for (std::size_t t = 0; t < t_max; ++t) {
    const auto [lo, hi] = part_bounds(n, t_max, t);
    for (std::size_t i = lo; i < hi; ++i) {
      s.insert_step[i] = t + 1;
      const int r = draw(rng);
      s.lifespan[i] = r == 0 ? t_max : (r <= 2 ? t_max / 2 : t_max / 10);
    }
  }
  return s;
}

Runbook gen_expiration_time(std::size_t n, std::size_t t_max, std::uint64_t seed) {
  const ExpirationSchedule s = expiration_schedule(n, t_max, seed);
  Runbook rb;
  rb.count = n;
  rb.t_max = t_max;
  rb.seed = seed;
  rb.generator = "expiration_time";
  rb.steps.resize(t_max);
  for (auto& step : rb.steps) step.checkpoint = true;
  for (std::size_t i = 0; i < n; ++i) {
    rb.steps[s.insert_step[i] - 1].inserts.push_back(s.order[i]);
    const std::size_t expiry = s.insert_step[i] + s.lifespan[i];
    if (expiry <= t_max) rb.steps[expiry - 1].deletes.push_back(s.order[i]);
  }
  return rb;
}

Runbook gen_clustered(const Dataset& dataset, const ClusteredOptions& options,
                      std::uint64_t seed) {
  if (options.clusters == 0 || dataset.count() < options.clusters) {
    throw Error(ErrorCode::kInvalidParameter, "clustered runbook needs dataset.count >= clusters >= 1");
  }
  if (options.fixed_proportion &&
      !(*options.fixed_proportion >= 0.0 && *options.fixed_proportion <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "fixed proportion must lie in [0, 1]");
  }
  const KMeansModel model = kmeans(dataset, options.clusters, options.kmeans_iters, seed);

  std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto proportion = [&] { return options.fixed_proportion.value_or(unit(rng)); };

  const std::size_t k = options.clusters;
  std::vector<std::vector<VectorId>> pending(k);
  for (std::size_t i = 0; i < dataset.count(); ++i) {
    pending[model.assignment[i]].push_back(static_cast<VectorId>(i));
  }
  for (auto& ids : pending) std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<VectorId>> active(k);

  Runbook rb;
  rb.count = dataset.count();
  rb.dim = dataset.dim();
  rb.seed = seed;
  rb.generator = "clustered";
  auto take = [](std::vector<VectorId>& from, double fraction) {
    const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(from.size())));
    std::vector<VectorId> taken(from.end() - static_cast<std::ptrdiff_t>(n), from.end());
    from.resize(from.size() - n);
    return taken;
  };

  for (std::size_t round = 0; round < options.rounds; ++round) {
    for (std::size_t c = 0; c < k; ++c) {
      Step step;
      step.inserts = take(pending[c], proportion());
      active[c].insert(active[c].end(), step.inserts.begin(), step.inserts.end());
      std::sort(step.inserts.begin(), step.inserts.end());
      step.checkpoint = true;
      rb.steps.push_back(std::move(step));
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::shuffle(active[c].begin(), active[c].end(), rng);
      Step step;
      step.deletes = take(active[c], proportion());
      std::sort(step.deletes.begin(), step.deletes.end());
      step.checkpoint = true;
      rb.steps.push_back(std::move(step));
    }
  }
  rb.t_max = rb.steps.size();
  return rb;
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::kOutOfRange: return "out-of-range";
    case ViolationKind::kDoubleInsert: return "double-insert";
    case ViolationKind::kDeleteInactive: return "delete-inactive";
    case ViolationKind::kInsertDeleteOverlap: return "insert-delete-overlap";
  }
  return "unknown";
}

std::vector<Violation> validate(const Runbook& runbook, std::optional<std::size_t> dataset_count) {
  const std::size_t n = dataset_count.value_or(runbook.count);
  std::vector<char> live(n, 0);
  std::vector<Violation> report;
  for (std::size_t s = 0; s < runbook.steps.size(); ++s) {
    const Step& step = runbook.steps[s];
    const std::size_t index = s + 1;

    std::vector<VectorId> ins = step.inserts;
    std::vector<VectorId> del = step.deletes;
    std::sort(ins.begin(), ins.end());
    std::sort(del.begin(), del.end());
    std::vector<VectorId> both;
    std::set_intersection(ins.begin(), ins.end(), del.begin(), del.end(), std::back_inserter(both));
    for (const VectorId id : both) report.push_back({index, id, ViolationKind::kInsertDeleteOverlap});

    for (const VectorId id : step.inserts) {
      if (id >= n) {
        report.push_back({index, id, ViolationKind::kOutOfRange});
      } else if (live[id]) {
        report.push_back({index, id, ViolationKind::kDoubleInsert});
      } else {
        live[id] = 1;
      }
    }
    for (const VectorId id : step.deletes) {
      if (id >= n) {
        report.push_back({index, id, ViolationKind::kOutOfRange});
      } else if (!live[id]) {
        report.push_back({index, id, ViolationKind::kDeleteInactive});
      } else {
        live[id] = 0;
      }
    }
  }
  return report;
}

namespace {

void append_number(std::string& out, std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

bool is_token(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  });
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kFormat, "runbook line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t j = line.find(' ', i);
    const std::size_t end = j == std::string_view::npos ? line.size() : j;
    if (end > i) tokens.push_back(line.substr(i, end - i));
    i = end;
  }
  return tokens;
}

std::uint64_t parse_u64(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    parse_fail(line, "expected an unsigned integer, got '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

std::string serialize(const Runbook& runbook) {
  if (!is_token(runbook.dataset_name) || !is_token(runbook.generator)) {
    throw Error(ErrorCode::kInvalidInput, "runbook name and generator must be non-empty words");
  }
  std::string out = "runbook " + runbook.dataset_name + " ";
  append_number(out, runbook.count);
  out += ' ';
  append_number(out, runbook.dim);
  out += ' ';
  append_number(out, runbook.t_max);
  out += ' ';
  append_number(out, runbook.seed);
  out += ' ';
  out += runbook.generator;
  out += '\n';
  for (std::size_t s = 0; s < runbook.steps.size(); ++s) {
    const Step& step = runbook.steps[s];
    append_number(out, s + 1);
    out += " I";
    for (const VectorId id : step.inserts) {
      out += ' ';
      append_number(out, id);
    }
    out += " D";
    for (const VectorId id : step.deletes) {
      out += ' ';
      append_number(out, id);
    }
    out += step.checkpoint ? " C 1\n" : " C 0\n";
  }
  return out;
}

Runbook parse_runbook(std::string_view text) {
  Runbook rb;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto tok = split_ws(line);
    if (!have_header) {
      if (tok.size() != 7 || tok[0] != "runbook") {
        parse_fail(line_no, "expected 'runbook <name> <count> <dim> <t_max> <seed> <generator>'");
      }
      rb.dataset_name = std::string(tok[1]);
      rb.count = parse_u64(tok[2], line_no);
      rb.dim = parse_u64(tok[3], line_no);
      rb.t_max = parse_u64(tok[4], line_no);
      rb.seed = parse_u64(tok[5], line_no);
      rb.generator = std::string(tok[6]);
      have_header = true;
      continue;
    }
    if (tok.size() < 5) parse_fail(line_no, "step line too short");
    if (parse_u64(tok[0], line_no) != rb.steps.size() + 1) parse_fail(line_no, "step index out of sequence");
    if (tok[1] != "I") parse_fail(line_no, "expected 'I'");
    Step step;
    std::size_t i = 2;
    for (; i < tok.size() && tok[i] != "D"; ++i) {
      step.inserts.push_back(static_cast<VectorId>(parse_u64(tok[i], line_no)));
    }
    if (i == tok.size()) parse_fail(line_no, "missing 'D'");
    for (++i; i < tok.size() && tok[i] != "C"; ++i) {
      step.deletes.push_back(static_cast<VectorId>(parse_u64(tok[i], line_no)));
    }
    if (i + 2 != tok.size()) parse_fail(line_no, "expected 'C <0|1>' at end of step");
    const auto flag = parse_u64(tok[i + 1], line_no);
    if (flag > 1) parse_fail(line_no, "checkpoint flag must be 0 or 1");
    step.checkpoint = flag == 1;
    rb.steps.push_back(std::move(step));
  }
  if (!have_header) throw Error(ErrorCode::kFormat, "runbook: missing header line");
  return rb;
}

void save_runbook(const Runbook& runbook, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  const std::string text = serialize(runbook);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

Runbook load_runbook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_runbook(buf.str());
}

}  // namespace streamann
