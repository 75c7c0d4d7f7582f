#include "memdes/local_search.hpp"

#include "memdes/errors.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace memdes {

LocalResult local_search(StructureState& state, double eps_loc, std::uint64_t max_iters) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  LocalResult out;
  out.f_initial = state.f();
  const Counters base = state.counters();

  for (std::uint64_t it = 0;; ++it) {
    if (it >= max_iters) {
      out.stop = LocalStop::MaxIterations;
      break;
    }
    const double f_prev = state.f();
    const auto candidates = state.evaluate_candidates();
    const Candidate* best = nullptr;
    for (const auto& c : candidates)
      if (c.feasible && (!best || c.f < best->f)) best = &c;
    if (!best || !(best->f < f_prev)) {
      out.stop = LocalStop::NoImprovingMove;
      break;
    }
    state.commit(best->move);
    TraceEntry e;
    e.iteration = it + 1;
    e.f = state.f();
    e.move = best->move;
    e.counters = state.counters();
    e.counters.removals_evaluated -= base.removals_evaluated;
    e.counters.additions_evaluated -= base.additions_evaluated;
    e.wall_s = std::chrono::duration<double>(clock::now() - t0).count();
    out.trace.push_back(e);
    if (std::isfinite(f_prev) && std::abs(f_prev - state.f()) < eps_loc * std::abs(f_prev)) {
      out.stop = LocalStop::Tolerance;
      break;
    }
  }
  out.counters = state.counters();
  out.counters.removals_evaluated -= base.removals_evaluated;
  out.counters.additions_evaluated -= base.additions_evaluated;
  return out;
}

std::vector<SensitivityRow> sensitivity_map(StructureState& state) {
  std::vector<SensitivityRow> rows;
  const auto& b = state.objective().bundle();
  for (const auto& c : state.evaluate_candidates()) {
    if (!b.controllable_mask[static_cast<std::size_t>(c.move.dof)]) continue;
    SensitivityRow r;
    r.dof = c.move.dof;
    r.enabled = c.move.kind == MoveKind::Remove;
    r.move = c.move.kind;
    r.tau = c.tau;
    r.f_candidate = c.f;
    rows.push_back(r);
  }
  return rows;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return kNaN;
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

}  // namespace

void write_sensitivity_csv(std::ostream& os, const std::vector<SensitivityRow>& rows) {
  os << "dof_index,enabled,move,tau,f_candidate\n";
  for (const auto& r : rows)
    os << r.dof << ',' << (r.enabled ? 1 : 0) << ',' << to_string(r.move) << ',' << format_double(r.tau) << ','
       << format_double(r.f_candidate) << '\n';
}

void write_sensitivity_csv(const std::filesystem::path& path, const std::vector<SensitivityRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  write_sensitivity_csv(os, rows);
}

std::vector<SensitivityRow> read_sensitivity_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "dof_index,enabled,move,tau,f_candidate")
    throw FormatError("sensitivity CSV header mismatch");
  std::vector<SensitivityRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5) throw FormatError("sensitivity CSV row needs 5 fields: " + line);
    SensitivityRow r;
    r.dof = std::stoll(cells[0]);
    r.enabled = cells[1] == "1";
    if (cells[2] == "remove")
      r.move = MoveKind::Remove;
    else if (cells[2] == "add")
      r.move = MoveKind::Add;
    else
      throw FormatError("unknown move '" + cells[2] + "'");
    r.tau = parse_double(cells[3]);
    r.f_candidate = parse_double(cells[4]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<SensitivityRow> read_sensitivity_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  return read_sensitivity_csv(is);
}

}  // namespace memdes
