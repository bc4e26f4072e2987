#include "divsf_cli/persistence.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "divsf/hash.hpp"

namespace divsf::cli {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  Fnv1a h;
  h.add_bytes(bytes);
  return hex64(h.digest());
}

StoredPolicySet make_stored_set(const TabularMdp& mdp, const DspResult& result) {
  StoredPolicySet out;
  out.mdp_fingerprint = hex64(mdp.fingerprint());
  out.n_states = mdp.n_states();
  out.n_actions = mdp.n_actions();
  out.feature_dim = mdp.feature_dim();
  out.v_star = result.set.v_star;
  int index = 0;
  for (const PolicyEntry& e : result.set.entries) {
    StoredPolicy p;
    p.index = index++;
    p.pi = e.policy.probs();
    p.psi = e.psi.psi;
    p.state_distribution = stationary_distribution(mdp, e.policy).d;
    p.v_e = e.v_e;
    out.policies.push_back(std::move(p));
  }
  return out;
}

namespace {

std::vector<double> flat(const Matrix& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

std::vector<double> flat(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vector_field(const json& j, const char* key, int expected, const std::string& where) {
  const json& a = j.at(key);
  if (!a.is_array() || static_cast<int>(a.size()) != expected) {
    throw std::runtime_error(where + "." + key + ": expected " + std::to_string(expected) +
                             " numbers");
  }
  Vector v(expected);
  for (int i = 0; i < expected; ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

json to_json(const StoredPolicySet& set) {
  json policies = json::array();
  for (const StoredPolicy& p : set.policies) {
    policies.push_back({{"index", p.index},
                        {"pi", flat(p.pi)},
                        {"psi", flat(p.psi)},
                        {"state_distribution", flat(p.state_distribution)},
                        {"v_e", p.v_e}});
  }
  return {{"schema_version", kPolicySetSchemaVersion},
          {"mdp_fingerprint", set.mdp_fingerprint},
          {"n_states", set.n_states},
          {"n_actions", set.n_actions},
          {"feature_dim", set.feature_dim},
          {"v_star", set.v_star},
          {"policies", policies}};
}

StoredPolicySet stored_set_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kPolicySetSchemaVersion) {
      throw std::runtime_error("unsupported policy-set schema_version");
    }
    StoredPolicySet out;
    out.mdp_fingerprint = j.at("mdp_fingerprint").get<std::string>();
    out.n_states = j.at("n_states").get<int>();
    out.n_actions = j.at("n_actions").get<int>();
    out.feature_dim = j.at("feature_dim").get<int>();
    out.v_star = j.at("v_star").get<double>();
    for (const json& p : j.at("policies")) {
      StoredPolicy sp;
      sp.index = p.at("index").get<int>();
      const std::string where = "policies[" + std::to_string(sp.index) + "]";
      const Vector pi = vector_field(p, "pi", out.n_states * out.n_actions, where);
      sp.pi.resize(out.n_states, out.n_actions);
      for (int s = 0; s < out.n_states; ++s) {
        for (int a = 0; a < out.n_actions; ++a) sp.pi(s, a) = pi(s * out.n_actions + a);
      }
      sp.psi = vector_field(p, "psi", out.feature_dim, where);
      sp.state_distribution = vector_field(p, "state_distribution", out.n_states, where);
      sp.v_e = p.at("v_e").get<double>();
      out.policies.push_back(std::move(sp));
    }
    return out;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed policy-set file: ") + e.what());
  }
}

std::string metrics_csv(const DspResult& result) {
  std::ostringstream os;
  os << "index,v_e,v_e_ratio,v_d,feasible,degenerate,min_sf_distance_to_earlier,v_star\n";
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const IterationRecord& r = result.records[i];
    os << r.index << ',' << format_double(r.v_e) << ','
       << format_double(result.metrics.value_ratios[i]) << ',' << format_double(r.v_d) << ','
       << (r.feasible ? 1 : 0) << ',' << (r.degenerate ? 1 : 0) << ','
       << format_double(result.metrics.min_distance_to_earlier[i]) << ','
       << format_double(r.v_star) << '\n';
  }
  return os.str();
}

std::string traces_csv(const DspResult& result) {
  std::ostringstream os;
  os << "policy,step,sigma_lambda,v_e,v_d,feasible\n";
  for (const IterationRecord& r : result.records) {
    const auto& trace = r.trace;
    if (trace.empty()) {
      os << r.index << ",0,nan," << format_double(r.v_e) << ',' << format_double(r.v_d) << ','
         << (r.feasible ? 1 : 0) << '\n';
      continue;
    }
    const std::size_t n = trace.size();
    const std::size_t stride = (n + kMaxTraceRows - 1) / kMaxTraceRows;
    std::vector<std::size_t> kept;
    for (std::size_t t = 0; t < n; t += stride) kept.push_back(t);
    if (kept.back() != n - 1) kept.push_back(n - 1);  // always keep the last row
    for (std::size_t t : kept) {
      const PrimalDualTraceRow& row = trace[t];
      os << r.index << ',' << row.step << ',' << format_double(row.sigma_lambda) << ','
         << format_double(row.v_e) << ',' << format_double(row.v_d) << ','
         << (row.feasible ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

std::map<int, std::vector<TracePoint>> parse_traces_csv(const std::string& text) {
  std::map<int, std::vector<TracePoint>> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "policy,step,sigma_lambda,v_e,v_d,feasible") {
    throw std::runtime_error("traces.csv: unexpected header");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw std::runtime_error("traces.csv line " + std::to_string(line_no) +
                               ": expected 6 columns");
    }
    try {
      TracePoint p;
      p.step = std::stoi(cells[1]);
      p.sigma_lambda = cells[2] == "nan" ? std::nan("") : std::stod(cells[2]);
      p.v_e = std::stod(cells[3]);
      p.v_d = std::stod(cells[4]);
      p.feasible = cells[5] == "1";
      out[std::stoi(cells[0])].push_back(p);
    } catch (const std::logic_error&) {
      throw std::runtime_error("traces.csv line " + std::to_string(line_no) +
                               ": unreadable number");
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
    if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace divsf::cli
