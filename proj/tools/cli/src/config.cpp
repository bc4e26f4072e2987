#include "divsf_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "divsf/errors.hpp"
#include "divsf/hash.hpp"

namespace divsf::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string file, std::string field, int line,
                         const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": field '" + field +
                         "': " + message),
      file_(std::move(file)),
      field_(std::move(field)),
      line_(line),
      message_(message) {}

namespace {

// ---------------------------------------------------------------------------
// Source locations. nlohmann::json keeps no positions, so a SAX pass over a
// position-reporting iterator records the line of every key and value.

class TrackingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator(const char* p, const char** cursor) : p_(p), cursor_(cursor) {}
  reference operator*() const { return *p_; }
  TrackingIterator& operator++() {
    ++p_;
    *cursor_ = p_;
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const TrackingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  const char** cursor_;
};

using LineIndex = std::map<std::string, int>;

class LocatingSax : public nlohmann::json_sax<json> {
 public:
  LocatingSax(const char* begin, const char** cursor, LineIndex& lines)
      : begin_(begin), cursor_(cursor), lines_(lines) {}

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override { return open(false); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(true); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    const std::string& prefix = frames_.back().path;
    pending_ = prefix.empty() ? k : prefix + "." + k;
    lines_.emplace(pending_, line());
    return true;
  }
  bool parse_error(std::size_t, const std::string&,
                   const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  struct Frame {
    bool array = false;
    int index = 0;
    std::string path;
  };

  // The last consumed character may be one lookahead past a number, which
  // is never a line break that belongs to the next line.
  int line() const {
    const char* end = *cursor_ > begin_ ? *cursor_ - 1 : begin_;
    return 1 + static_cast<int>(std::count(begin_, end, '\n'));
  }
  std::string next_path() {
    if (frames_.empty()) return "";
    Frame& f = frames_.back();
    if (f.array) return f.path + "[" + std::to_string(f.index++) + "]";
    return pending_;
  }
  bool value() {
    lines_.emplace(next_path(), line());
    return true;
  }
  bool open(bool array) {
    std::string path = next_path();
    lines_.emplace(path, line());
    frames_.push_back({array, 0, std::move(path)});
    return true;
  }
  bool close() {
    frames_.pop_back();
    return true;
  }

  const char* begin_;
  const char** cursor_;
  LineIndex& lines_;
  std::vector<Frame> frames_;
  std::string pending_;
};

// ---------------------------------------------------------------------------
// Typed, located access to a JSON object.

class Node {
 public:
  Node(const json& j, std::string path, const LineIndex& lines, const std::string& file)
      : j_(j), path_(std::move(path)), lines_(lines), file_(file) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const std::string field = join(key);
    auto it = lines_.find(field);
    if (it == lines_.end()) it = lines_.find(path_);
    throw ConfigError(file_, field.empty() ? "<root>" : field,
                      it == lines_.end() ? 1 : it->second, message);
  }

  void require_object() const {
    if (!j_.is_object()) fail("", "expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    const std::set<std::string_view> allowed(keys);
    for (const auto& [k, _] : j_.items()) {
      if (!allowed.count(k)) fail(k, "unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Node child(const std::string& key) const {
    return Node(j_.at(key), join(key), lines_, file_);
  }

  Node element(std::size_t i) const {
    return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]", lines_, file_);
  }

  double number(const std::string& key, double fallback, double lo, double hi,
                bool hi_open = false) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!(x >= lo && (hi_open ? x < hi : x <= hi))) {
      fail(key, "value " + format(x) + " outside " + range(lo, hi, hi_open));
    }
    return x;
  }

  long integer(const std::string& key, long fallback, long lo,
               long hi = std::numeric_limits<int>::max()) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const long x = v.get<long>();
    if (x < lo || x > hi) {
      fail(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
    }
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  template <class T, class Parse>
  T choice(const std::string& key, T fallback, Parse parse) const {
    if (!has(key)) return fallback;
    const std::string s = string(key);
    const std::optional<T> parsed = parse(s);
    if (!parsed) fail(key, "unknown value \"" + s + "\"");
    return *parsed;
  }

 private:
  std::string join(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }
  static std::string format(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
  static std::string range(double lo, double hi, bool hi_open) {
    return "[" + format(lo) + ", " + format(hi) + (hi_open ? ")" : "]");
  }

  const json& j_;
  std::string path_;
  const LineIndex& lines_;
  const std::string& file_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

EnvConfig parse_env(const Node& n) {
  n.require_object();
  n.allow_only({"kind", "length", "width", "height", "n_states", "n_actions", "feature_map",
                "tile_size", "feature_dim", "noise", "reward", "goal_state"});
  EnvConfig e;
  e.kind = n.choice("kind", e.kind, parse_env_kind);
  e.length = static_cast<int>(n.integer("length", e.length, 1, 4096));
  e.width = static_cast<int>(n.integer("width", e.width, 1, 256));
  e.height = static_cast<int>(n.integer("height", e.height, 1, 256));
  e.n_states = static_cast<int>(n.integer("n_states", e.n_states, 1, 4096));
  e.n_actions = static_cast<int>(n.integer("n_actions", e.n_actions, 1, 64));
  e.feature_map = n.choice("feature_map", e.feature_map, parse_feature_kind);
  e.tile_size = static_cast<int>(n.integer("tile_size", e.tile_size, 1, 256));
  e.feature_dim = static_cast<int>(n.integer("feature_dim", e.feature_dim, 1, 4096));
  e.noise = n.number("noise", e.noise, 0.0, 1.0, true);
  e.reward = n.choice("reward", e.reward, parse_reward_kind);
  if (n.has("goal_state")) e.goal_state = static_cast<int>(n.integer("goal_state", 0, 0));
  if (e.goal_state && *e.goal_state >= state_count(e)) {
    n.fail("goal_state", "state " + std::to_string(*e.goal_state) + " does not exist");
  }
  return e;
}

DiversityMechanism parse_mechanism(const Node& n) {
  n.require_object();
  n.allow_only({"kind", "tau", "bounding", "bound_variant", "prior", "subtract_log_prior"});
  DiversityMechanism m;
  m.kind = n.choice("kind", m.kind, parse_mechanism_kind);
  m.tau = n.number("tau", m.tau, std::numeric_limits<double>::min(), kInf);
  m.bounding.enabled = n.boolean("bounding", m.bounding.enabled);
  m.bounding.variant = n.choice("bound_variant", m.bounding.variant, parse_bound_variant);
  m.subtract_log_prior = n.boolean("subtract_log_prior", m.subtract_log_prior);
  if (n.has("prior")) {
    const Node p = n.child("prior");
    if (!p.raw().is_array() || p.raw().empty()) n.fail("prior", "expected a non-empty array");
    m.prior.resize(static_cast<Eigen::Index>(p.raw().size()));
    double total = 0.0;
    for (std::size_t i = 0; i < p.raw().size(); ++i) {
      const json& v = p.raw()[i];
      if (!v.is_number() || v.get<double>() <= 0.0) {
        p.element(i).fail("", "prior entries must be positive numbers");
      }
      m.prior(static_cast<Eigen::Index>(i)) = v.get<double>();
      total += v.get<double>();
    }
    if (std::abs(total - 1.0) > 1e-9) n.fail("prior", "prior must sum to 1");
  }
  return m;
}

PrimalDualConfig parse_primal_dual(const Node& n) {
  n.require_object();
  n.allow_only({"max_steps", "policy_learning_rate", "natural_gradient", "sampled",
                "rollout_horizon", "feasibility_tolerance", "logit_range", "average_from"});
  PrimalDualConfig c;
  c.max_steps = static_cast<int>(n.integer("max_steps", c.max_steps, 1, 100000000));
  c.policy_learning_rate =
      n.number("policy_learning_rate", c.policy_learning_rate, 0.0, kInf);
  if (c.policy_learning_rate <= 0.0) n.fail("policy_learning_rate", "must be positive");
  c.natural_gradient = n.boolean("natural_gradient", c.natural_gradient);
  c.sampled = n.boolean("sampled", c.sampled);
  c.rollout_horizon = n.integer("rollout_horizon", c.rollout_horizon, 1, 100000000);
  c.feasibility_tolerance =
      n.number("feasibility_tolerance", c.feasibility_tolerance, 0.0, 1.0);
  c.logit_range = n.number("logit_range", c.logit_range, 0.0, kInf);
  c.average_from = n.number("average_from", c.average_from, 0.0, 1.0, true);
  return c;
}

DspConfig parse_dsp(const Node& n) {
  n.require_object();
  n.allow_only({"n_policies", "alpha", "mechanism", "constraint", "solver", "estimator",
                "entropy_weight", "lagrange_learning_rate", "lagrange_period",
                "estimate_decay", "mc_horizon", "mc_trajectories",
                "discrimination_refresh_rounds", "primal_dual"});
  DspConfig d;
  d.n_policies = static_cast<int>(n.integer("n_policies", d.n_policies, 1, 10000));
  d.alpha = n.number("alpha", d.alpha, 0.0, 1.0);
  if (n.has("mechanism")) d.mechanism_d = parse_mechanism(n.child("mechanism"));
  d.mechanism_e = n.choice("constraint", d.mechanism_e, parse_constraint_source);
  d.solver = n.choice("solver", d.solver, parse_solver_kind);
  d.estimator = n.choice("estimator", d.estimator, parse_estimator_kind);
  d.entropy_weight = n.number("entropy_weight", d.entropy_weight, 0.0, kInf);
  d.lagrange_learning_rate =
      n.number("lagrange_learning_rate", d.lagrange_learning_rate, 0.0, kInf);
  if (d.lagrange_learning_rate <= 0.0) n.fail("lagrange_learning_rate", "must be positive");
  d.lagrange_period = static_cast<int>(n.integer("lagrange_period", d.lagrange_period, 1));
  d.estimate_decay = n.number("estimate_decay", d.estimate_decay, 0.0, 1.0, true);
  d.mc_horizon = n.integer("mc_horizon", d.mc_horizon, 1, 100000000);
  d.mc_trajectories = static_cast<int>(n.integer("mc_trajectories", d.mc_trajectories, 1));
  d.discrimination_refresh_rounds = static_cast<int>(
      n.integer("discrimination_refresh_rounds", d.discrimination_refresh_rounds, 1));
  if (n.has("primal_dual")) d.primal_dual = parse_primal_dual(n.child("primal_dual"));
  return d;
}

bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

RunSpec parse_run(const Node& n) {
  n.require_object();
  n.allow_only({"name", "seed", "env", "dsp"});
  RunSpec r;
  r.name = n.string("name");
  if (!valid_name(r.name)) {
    n.fail("name", "run names use letters, digits, '_' and '-' (at most 64)");
  }
  r.seed = n.unsigned_integer("seed", 0);
  if (n.has("env")) r.env = parse_env(n.child("env"));
  if (n.has("dsp")) r.dsp = parse_dsp(n.child("dsp"));
  r.env.seed = r.seed;
  r.dsp.seed = r.seed;
  try {
    build_env(r.env);
  } catch (const Error& e) {
    n.fail("env", e.what());
  }
  try {
    r.dsp.validate();
  } catch (const Error& e) {
    n.fail("dsp", e.what());
  }
  return r;
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(),
                                         text.begin() + static_cast<long>(offset), '\n'));
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is 1-based and points at the offending character.
    throw ConfigError(source_name, "<syntax>",
                      line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0),
                      "malformed JSON: " + std::string(e.what()));
  }

  LineIndex lines;
  const char* cursor = text.data();
  LocatingSax sax(text.data(), &cursor, lines);
  json::sax_parse(TrackingIterator(text.data(), &cursor),
                  TrackingIterator(text.data() + text.size(), &cursor), &sax);

  const Node top(root, "", lines, source_name);
  top.require_object();
  top.allow_only({"schema_version", "runs", "golden_dir"});
  if (!top.has("schema_version")) top.fail("schema_version", "missing required field");
  const long version = top.integer("schema_version", 0, 0);
  if (version != kConfigSchemaVersion) {
    top.fail("schema_version", "unsupported schema version " + std::to_string(version) +
                                   " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }

  ExperimentConfig cfg;
  cfg.source = source_name;
  if (top.has("golden_dir")) cfg.golden_dir = top.string("golden_dir");

  if (!top.has("runs")) top.fail("runs", "missing required field");
  const Node runs = top.child("runs");
  if (!runs.raw().is_array() || runs.raw().empty()) {
    top.fail("runs", "expected a non-empty array");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < runs.raw().size(); ++i) {
    const Node entry = runs.element(i);
    RunSpec run = parse_run(entry);
    if (!names.insert(run.name).second) entry.fail("name", "duplicate run name " + run.name);
    cfg.runs.push_back(std::move(run));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "<file>", 0, "cannot read the config file");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ExperimentConfig cfg = parse_config(text, path.string());
  cfg.source = path;
  if (!cfg.golden_dir.empty() && cfg.golden_dir.is_relative()) {
    cfg.golden_dir = (path.parent_path() / cfg.golden_dir).lexically_normal();
  }
  return cfg;
}

json to_json(const RunSpec& run) {
  json env = {
      {"kind", to_string(run.env.kind)},
      {"length", run.env.length},
      {"width", run.env.width},
      {"height", run.env.height},
      {"n_states", run.env.n_states},
      {"n_actions", run.env.n_actions},
      {"feature_map", to_string(run.env.feature_map)},
      {"tile_size", run.env.tile_size},
      {"feature_dim", run.env.feature_dim},
      {"noise", run.env.noise},
      {"reward", to_string(run.env.reward)},
  };
  if (run.env.goal_state) env["goal_state"] = *run.env.goal_state;

  const DiversityMechanism& m = run.dsp.mechanism_d;
  json mechanism = {
      {"kind", to_string(m.kind)},
      {"tau", m.tau},
      {"bounding", m.bounding.enabled},
      {"bound_variant", to_string(m.bounding.variant)},
      {"subtract_log_prior", m.subtract_log_prior},
  };
  if (m.prior.size() > 0) {
    mechanism["prior"] = std::vector<double>(m.prior.data(), m.prior.data() + m.prior.size());
  }

  const PrimalDualConfig& p = run.dsp.primal_dual;
  const json primal_dual = {
      {"max_steps", p.max_steps},
      {"policy_learning_rate", p.policy_learning_rate},
      {"natural_gradient", p.natural_gradient},
      {"sampled", p.sampled},
      {"rollout_horizon", p.rollout_horizon},
      {"feasibility_tolerance", p.feasibility_tolerance},
      {"logit_range", p.logit_range},
      {"average_from", p.average_from},
  };

  const DspConfig& d = run.dsp;
  const json dsp = {
      {"n_policies", d.n_policies},
      {"alpha", d.alpha},
      {"mechanism", mechanism},
      {"constraint", to_string(d.mechanism_e)},
      {"solver", to_string(d.solver)},
      {"estimator", to_string(d.estimator)},
      {"entropy_weight", d.entropy_weight},
      {"lagrange_learning_rate", d.lagrange_learning_rate},
      {"lagrange_period", d.lagrange_period},
      {"estimate_decay", d.estimate_decay},
      {"mc_horizon", d.mc_horizon},
      {"mc_trajectories", d.mc_trajectories},
      {"discrimination_refresh_rounds", d.discrimination_refresh_rounds},
      {"primal_dual", primal_dual},
  };
  return json{{"name", run.name}, {"seed", run.seed}, {"env", env}, {"dsp", dsp}};
}

std::string config_hash(const RunSpec& run) {
  Fnv1a h;
  h.add_bytes(to_json(run).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

}  // namespace divsf::cli
