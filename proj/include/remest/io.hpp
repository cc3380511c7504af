#pragma once

// Stable file formats: DP tables as JSON, table slices, sweeps and traces as
// CSV, Monte Carlo summaries as JSON. Floats carry 12 significant digits;
// +infinity is written as "inf" in CSV and null in JSON. CSV files may start
// with "# key=value" metadata lines.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "remest/dp.hpp"
#include "remest/error.hpp"
#include "remest/sim.hpp"
#include "remest/version.hpp"

namespace remest::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == s.size() && !s.empty(), Errc::InvalidArgument, ("io: not a number: '" + s + "'").c_str());
  return v;
}

inline void write_metadata(std::ostream& os, const Metadata& meta) {
  os << "# remest " << kVersion << "\n";
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
}

inline Metadata config_metadata(const DpConfig& c) {
  return {{"T", std::to_string(c.T)},
          {"N1", std::to_string(c.N1)},
          {"N2", std::to_string(c.N2)},
          {"lambda", fmt(c.lambda)},
          {"gamma", fmt(c.gamma)}};
}

// ---- DP table -------------------------------------------------------------

inline nlohmann::json json_number(double x) {
  if (std::isinf(x)) return nullptr;
  return std::stod(fmt(x));
}

inline nlohmann::json table_to_json(const DpTable& table) {
  const DpConfig& c = table.config();
  nlohmann::json j;
  j["meta"] = {{"version", std::string(kVersion)}, {"index_order", "t,e_n,e_p"}, {"t_first", 1}};
  j["config"] = {{"T", c.T}, {"N1", c.N1}, {"N2", c.N2}, {"lambda", c.lambda}, {"gamma", c.gamma}};
  auto arr = [](std::span<const double> v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(json_number(x));
    return a;
  };
  j["values"] = arr(table.values());
  j["beta1"] = arr(table.beta1());
  j["beta2"] = arr(table.beta2());
  return j;
}

inline DpTable table_from_json(const nlohmann::json& j) {
  try {
    const auto& c = j.at("config");
    DpConfig cfg{c.at("T").get<int>(), c.at("N1").get<int>(), c.at("N2").get<int>(), c.at("lambda").get<double>(),
                 c.at("gamma").get<double>()};
    auto arr = [](const nlohmann::json& a) {
      std::vector<double> v;
      v.reserve(a.size());
      for (const auto& x : a) v.push_back(x.is_null() ? kInf : x.get<double>());
      return v;
    };
    return DpTable::from_arrays(cfg, arr(j.at("values")), arr(j.at("beta1")), arr(j.at("beta2")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("table_from_json: ") + e.what());
  }
}

// Rows over every index left unset; columns t,e_n,e_p,value,beta1,beta2
// (thresholds empty at t = T + 1).
struct TableSlice {
  std::optional<int> t;
  std::optional<int> e_n;
  std::optional<int> e_p;
};

inline void write_slice_csv(std::ostream& os, const DpTable& table, const TableSlice& slice) {
  const DpConfig& c = table.config();
  Metadata meta = config_metadata(c);
  write_metadata(os, meta);
  os << "t,e_n,e_p,value,beta1,beta2\n";
  auto range = [](std::optional<int> fixed, int lo, int hi) {
    return fixed ? std::pair{*fixed, *fixed} : std::pair{lo, hi};
  };
  const auto [t0, t1] = range(slice.t, 1, c.T + 1);
  const auto [n0, n1] = range(slice.e_n, 0, c.N1);
  const auto [p0, p1] = range(slice.e_p, 0, c.N2);
  for (int t = t0; t <= t1; ++t) {
    for (int n = n0; n <= n1; ++n) {
      for (int p = p0; p <= p1; ++p) {
        os << t << ',' << n << ',' << p << ',' << fmt(table.value(t, n, p)) << ',';
        if (t <= c.T) {
          const ThresholdPolicy pol = table.policy_at(t, n, p);
          os << fmt(pol.beta1) << ',' << fmt(pol.beta2);
        } else {
          os << ',';
        }
        os << '\n';
      }
    }
  }
}

// ---- traces and summaries -------------------------------------------------

inline void write_trace_csv(std::ostream& os, const std::vector<StepRecord>& trace, const Metadata& meta) {
  write_metadata(os, meta);
  os << "t,x,u,s,y,y_tilde,x_hat,sq_err,e_n_after,e_p_after\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const StepRecord& r : trace) {
    os << r.t << ',' << fmt(r.x) << ',' << r.u << ',' << (r.s ? std::to_string(static_cast<int>(*r.s)) : "")
       << ',' << opt(r.y) << ',' << opt(r.y_tilde) << ',' << fmt(r.x_hat) << ',' << fmt(r.sq_err) << ','
       << r.e_n_after << ',' << r.e_p_after << '\n';
  }
}

inline void write_path_csv(std::ostream& os, const std::vector<PathPoint>& path, const Metadata& meta) {
  write_metadata(os, meta);
  os << "t,e_n,e_p\n";
  for (const PathPoint& p : path) os << p.t << ',' << p.e_n << ',' << p.e_p << '\n';
}

inline nlohmann::json summary_to_json(const McSummary& s, const DpConfig& c, double dp_value,
                                      std::uint64_t seed, const std::string& noise) {
  nlohmann::json j;
  j["meta"] = {{"version", std::string(kVersion)}, {"seed", seed}, {"noise", noise}};
  j["config"] = {{"T", c.T}, {"N1", c.N1}, {"N2", c.N2}, {"lambda", c.lambda}, {"gamma", c.gamma}};
  j["summary"] = {{"episodes", s.episodes},
                  {"mean_total_cost", json_number(s.mean_total_cost)},
                  {"std_err", json_number(s.std_err)},
                  {"dp_value", json_number(dp_value)},
                  {"mean_noisy_uses", json_number(s.mean_noisy_uses)},
                  {"mean_perfect_uses", json_number(s.mean_perfect_uses)},
                  {"frac_perfect_exhausted", json_number(s.frac_perfect_exhausted)},
                  {"frac_noisy_exhausted", json_number(s.frac_noisy_exhausted)},
                  {"noisy_steps", s.noisy_steps},
                  {"mean_y_sq", json_number(s.mean_y_sq)},
                  {"y_sq_std_err", json_number(s.y_sq_std_err)}};
  return j;
}

// ---- reading back ---------------------------------------------------------

struct CsvFile {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(Errc::InvalidArgument, "csv: missing column " + name);
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvFile read_csv(std::istream& is) {
  CsvFile f;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) f.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (f.header.empty()) {
      f.header = split_line(line);
    } else {
      auto row = split_line(line);
      require(row.size() == f.header.size(), Errc::InvalidArgument, "csv: ragged row");
      f.rows.push_back(std::move(row));
    }
  }
  return f;
}

inline CsvFile read_csv_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::InvalidArgument, ("cannot open " + path).c_str());
  return read_csv(in);
}

namespace detail {
inline void check(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvariantViolation, "verify: " + what);
}
}  // namespace detail

// Trace invariants: budgets never negative and only spent by the matching action,
// perfect steps exact, side symbol present exactly on noisy steps.
inline void verify_trace_csv(const CsvFile& f) {
  const std::size_t ct = f.column("t"), cx = f.column("x"), cu = f.column("u"), cs = f.column("s"),
                    cxh = f.column("x_hat"), ce = f.column("sq_err"), cn = f.column("e_n_after"),
                    cp = f.column("e_p_after");
  int prev_n = f.meta.count("N1") ? std::stoi(f.meta.at("N1")) : -1;
  int prev_p = f.meta.count("N2") ? std::stoi(f.meta.at("N2")) : -1;
  int prev_t = 0;
  for (const auto& row : f.rows) {
    const int t = std::stoi(row[ct]);
    const int u = std::stoi(row[cu]);
    const int n = std::stoi(row[cn]);
    const int p = std::stoi(row[cp]);
    detail::check(t == prev_t + 1, "stage index not consecutive");
    detail::check(n >= 0 && p >= 0, "negative budget");
    if (prev_n >= 0) detail::check(n == prev_n - (u == 1 ? 1 : 0), "noisy budget bookkeeping");
    if (prev_p >= 0) detail::check(p == prev_p - (u == 2 ? 1 : 0), "perfect budget bookkeeping");
    detail::check((u == 1) == !row[cs].empty(), "side symbol present iff noisy");
    const double x = parse_double(row[cx]);
    const double xh = parse_double(row[cxh]);
    const double err = parse_double(row[ce]);
    if (u == 2) detail::check(x == xh && err == 0.0, "perfect channel must be exact");
    detail::check(err >= 0.0, "negative squared error");
    prev_t = t;
    prev_n = n;
    prev_p = p;
  }
}

// Sweep invariant: J* non-increasing along the swept budget for each fixed budget.
inline void verify_sweep_csv(const CsvFile& f) {
  const std::size_t c1 = f.column("n1"), c2 = f.column("n2"), cj = f.column("J");
  const std::string axis = f.meta.count("axis") ? f.meta.at("axis") : "n1";
  std::map<int, std::pair<int, double>> last;  // fixed budget -> (swept budget, J)
  for (const auto& row : f.rows) {
    const int n1 = std::stoi(row[c1]);
    const int n2 = std::stoi(row[c2]);
    const double j = parse_double(row[cj]);
    detail::check(j >= 0.0, "negative cost-to-go");
    const int fixed = axis == "n1" ? n2 : n1;
    const int swept = axis == "n1" ? n1 : n2;
    auto it = last.find(fixed);
    if (it != last.end()) {
      detail::check(swept > it->second.first, "sweep rows out of order");
      detail::check(j <= it->second.second + 1e-12 * std::max(1.0, it->second.second),
                    "cost-to-go increases with budget");
    }
    last[fixed] = {swept, j};
  }
}

// Slice invariants: values non-negative, thresholds ordered, J*(t, n, p) = 0 when p covers the horizon.
inline void verify_slice_csv(const CsvFile& f) {
  const std::size_t ct = f.column("t"), cp = f.column("e_p"), cv = f.column("value"), c1 = f.column("beta1"),
                    c2 = f.column("beta2");
  const int T = f.meta.count("T") ? std::stoi(f.meta.at("T")) : -1;
  for (const auto& row : f.rows) {
    const int t = std::stoi(row[ct]);
    const int p = std::stoi(row[cp]);
    const double v = parse_double(row[cv]);
    detail::check(v >= 0.0, "negative value");
    if (T >= 0 && p >= T - t + 1) detail::check(v == 0.0, "value must vanish when perfect budget covers horizon");
    if (!row[c1].empty()) detail::check(parse_double(row[c1]) <= parse_double(row[c2]), "beta1 > beta2");
  }
}

}  // namespace remest::io
