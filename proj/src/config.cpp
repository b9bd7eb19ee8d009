#include "platoon/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "platoon/error.hpp"

namespace platoon {

using nlohmann::json;

namespace {

// Maps JSON pointers to the line their value starts on. The text has already
// been accepted by the real parser, so this scan only tracks nesting.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) {
    struct Frame {
      bool object;
      std::string key;
      long index = 0;
      bool expect_key = true;
    };
    std::vector<Frame> stack;
    int line = 1;
    auto pointer = [&] {
      std::string p;
      for (const auto& f : stack)
        p += "/" + (f.object ? f.key : std::to_string(f.index));
      return p;
    };
    auto value_here = [&] { lines_.emplace(pointer(), line); };

    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
      } else if (c == '{' || c == '[') {
        value_here();
        stack.push_back({c == '{', "", 0, true});
      } else if (c == '}' || c == ']') {
        if (!stack.empty()) stack.pop_back();
      } else if (c == ',') {
        if (!stack.empty()) {
          if (stack.back().object)
            stack.back().expect_key = true;
          else
            ++stack.back().index;
        }
      } else if (c == '"') {
        std::string s;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
          if (text[i] == '\\' && i + 1 < text.size()) ++i;
          s += text[i];
        }
        if (!stack.empty() && stack.back().object && stack.back().expect_key) {
          stack.back().key = s;
          stack.back().expect_key = false;
        } else {
          value_here();
        }
      } else if (c == '-' || std::isalnum(static_cast<unsigned char>(c))) {
        value_here();
        while (i + 1 < text.size() &&
               std::string_view(",]}\n \t\r").find(text[i + 1]) == std::string_view::npos)
          ++i;
      }
    }
  }

  int line(const std::string& pointer) const {
    auto it = lines_.find(pointer);
    return it == lines_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, int> lines_;
};

struct Context {
  std::string source;
  LineIndex index;
};

class Node {
 public:
  Node(const json& j, std::string path, const Context& ctx)
      : j_(j), path_(std::move(path)), ctx_(ctx) {}

  [[noreturn]] void fail(const std::string& what) const {
    std::string where = ctx_.source;
    if (int l = ctx_.index.line(path_); l > 0) where += ":" + std::to_string(l);
    throw ConfigError(where + ": " + (path_.empty() ? "/" : path_) + ": " + what);
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  /// Checks that this is an object holding only `allowed` keys.
  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) Node(v, path_ + "/" + k, ctx_).fail("unknown key '" + k + "'");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Node at(const char* key) const {
    if (!j_.contains(key)) fail(std::string("missing required key '") + key + "'");
    return Node(j_.at(key), path_ + "/" + key, ctx_);
  }

  Node at(std::size_t i) const {
    return Node(j_.at(i), path_ + "/" + std::to_string(i), ctx_);
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long>();
  }

  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long>() >= 0))
      fail("expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  std::size_t array_size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  Matrix matrix() const {
    const std::size_t rows = array_size();
    if (rows == 0) fail("matrix is empty");
    const std::size_t cols = at(std::size_t{0}).array_size();
    Matrix M(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      Node row = at(r);
      if (row.array_size() != cols) row.fail("matrix rows differ in length");
      for (std::size_t c = 0; c < cols; ++c)
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).number();
    }
    return M;
  }

 private:
  const json& j_;
  std::string path_;
  const Context& ctx_;
};

void read_optional(const Node& n, const char* key, double& out) {
  if (n.has(key)) out = n.at(key).number();
}

VehicleParams read_vehicle(const Node& n) {
  n.expect_object({"mass_kg", "k_u", "k_d", "k_b", "k_fr", "k_g",
                   "max_engine_input", "max_brake_input"});
  VehicleParams p;
  p.mass_kg = n.at("mass_kg").number();
  p.k_u = n.at("k_u").number();
  p.k_d = n.at("k_d").number();
  read_optional(n, "k_b", p.k_b);
  read_optional(n, "k_fr", p.k_fr);
  read_optional(n, "k_g", p.k_g);
  p.max_engine_input = n.at("max_engine_input").number();
  p.max_brake_input = n.at("max_brake_input").number();
  try {
    p.validate();
  } catch (const Error& e) {
    n.fail(e.what());
  }
  return p;
}

ModelConfig read_model(const Node& n) {
  n.expect_object({"Ts", "v0", "tau", "drag", "vehicles", "W", "P0",
                   "zero_coupling", "A", "B"});
  ModelConfig m;
  m.Ts = n.at("Ts").number();
  m.v0 = n.at("v0").number();
  m.tau = n.at("tau").number();
  if (!(m.Ts > 0.0)) n.at("Ts").fail("sampling time must be positive");
  if (!(m.v0 > 0.0)) n.at("v0").fail("v0 must be positive");
  if (m.tau < 0.0) n.at("tau").fail("tau must be non-negative");

  const Node drag = n.at("drag");
  drag.expect_object({"alpha1", "alpha2", "beta1", "beta2"});
  m.drag.alpha1 = drag.at("alpha1").number();
  m.drag.alpha2 = drag.at("alpha2").number();
  m.drag.beta1 = drag.at("beta1").number();
  m.drag.beta2 = drag.at("beta2").number();

  const Node vehicles = n.at("vehicles");
  const std::size_t count = vehicles.array_size();
  if (count < 2) vehicles.fail("a platoon needs at least two vehicles");
  for (std::size_t i = 0; i < count; ++i)
    m.vehicles.push_back(read_vehicle(vehicles.at(i)));

  m.W = n.at("W").matrix();
  if (n.has("P0")) m.P0 = n.at("P0").matrix();
  if (n.has("zero_coupling")) m.zero_coupling = n.at("zero_coupling").boolean();
  if (n.has("A")) m.A = n.at("A").matrix();
  if (n.has("B")) m.B = n.at("B").matrix();
  return m;
}

CostConfig read_cost(const Node& n) {
  n.expect_object({"lead_w_v", "lead_w_u", "integrator_w", "followers", "Q0"});
  CostConfig c;
  c.weights.lead_w_v = n.at("lead_w_v").number();
  c.weights.lead_w_u = n.at("lead_w_u").number();
  if (n.has("integrator_w")) c.weights.integrator = n.at("integrator_w").number();
  const Node followers = n.at("followers");
  for (std::size_t i = 0; i < followers.array_size(); ++i) {
    const Node f = followers.at(i);
    f.expect_object({"w_tau", "w_dv", "w_d", "w_v", "w_u"});
    FollowerWeights w;
    w.w_tau = f.at("w_tau").number();
    w.w_dv = f.at("w_dv").number();
    w.w_d = f.at("w_d").number();
    w.w_v = f.at("w_v").number();
    w.w_u = f.at("w_u").number();
    for (const char* key : {"w_tau", "w_dv", "w_d", "w_v", "w_u"})
      if (f.at(key).number() < 0.0) f.at(key).fail("weights must be >= 0");
    if (!(w.w_u > 0.0))
      f.at("w_u").fail("input weight must be positive (R positive definite)");
    c.weights.followers.push_back(w);
  }
  if (c.weights.lead_w_v < 0.0) n.at("lead_w_v").fail("weights must be >= 0");
  if (!(c.weights.lead_w_u > 0.0))
    n.at("lead_w_u").fail("input weight must be positive (R positive definite)");
  if (c.weights.integrator < 0.0) n.at("integrator_w").fail("weights must be >= 0");
  if (n.has("Q0")) c.Q0 = n.at("Q0").matrix();
  return c;
}

Scenario read_scenario(const Node& n) {
  n.expect_object({"horizon", "seed", "profile", "noise_scale", "initial",
                   "lead_integrator", "integrator_noise_variance"});
  Scenario s;
  s.horizon = n.at("horizon").integer();
  if (s.horizon <= 0) n.at("horizon").fail("horizon must be positive");
  if (n.has("seed")) s.seed = n.at("seed").unsigned_integer();
  if (n.has("noise_scale")) {
    s.noise_scale = n.at("noise_scale").number();
    if (s.noise_scale < 0.0) n.at("noise_scale").fail("noise scale must be >= 0");
  }
  if (n.has("initial")) {
    const std::string v = n.at("initial").string();
    if (v == "zero")
      s.initial = InitialState::Zero;
    else if (v == "sampled")
      s.initial = InitialState::Sampled;
    else
      n.at("initial").fail("expected \"zero\" or \"sampled\"");
  }
  if (n.has("lead_integrator")) s.lead_integrator = n.at("lead_integrator").boolean();
  if (n.has("integrator_noise_variance")) {
    s.integrator_noise_variance = n.at("integrator_noise_variance").number();
    if (!(s.integrator_noise_variance > 0.0))
      n.at("integrator_noise_variance").fail("variance must be positive");
  }
  if (n.has("profile")) {
    const Node profile = n.at("profile");
    for (std::size_t i = 0; i < profile.array_size(); ++i) {
      const Node bp = profile.at(i);
      bp.expect_object({"time_s", "speed_kmh", "speed_mps"});
      SpeedBreakpoint b;
      b.time_s = bp.at("time_s").number();
      if (bp.has("speed_kmh") == bp.has("speed_mps"))
        bp.fail("give exactly one of speed_kmh and speed_mps");
      b.speed_mps = bp.has("speed_kmh") ? bp.at("speed_kmh").number() / 3.6
                                        : bp.at("speed_mps").number();
      if (!(b.speed_mps > 0.0)) bp.fail("reference speed must be positive");
      if (i > 0 && !(b.time_s > s.profile.back().time_s))
        bp.at("time_s").fail("profile times must be strictly increasing");
      s.profile.push_back(b);
    }
  }
  return s;
}

SynthesisConfig read_synthesis(const Node& n) {
  n.expect_object({"tol", "max_iter", "horizon", "experimental_masks"});
  SynthesisConfig s;
  read_optional(n, "tol", s.options.dare.tol);
  if (!(s.options.dare.tol > 0.0)) n.at("tol").fail("tolerance must be positive");
  if (n.has("max_iter")) {
    s.options.dare.max_iter = n.at("max_iter").integer();
    if (s.options.dare.max_iter <= 0) n.at("max_iter").fail("must be positive");
  }
  if (n.has("horizon")) {
    s.horizon = n.at("horizon").integer();
    if (s.horizon != 0 && s.horizon < 2)
      n.at("horizon").fail("finite horizon must be >= 2 (0 disables it)");
  }
  if (n.has("experimental_masks"))
    s.options.experimental_masks = n.at("experimental_masks").boolean();
  return s;
}

CompareOptions read_compare(const Node& n) {
  n.expect_object({"runs", "steps_per_run", "burn_in", "batch_length", "seed"});
  CompareOptions c;
  if (n.has("runs")) c.runs = n.at("runs").unsigned_integer();
  if (n.has("steps_per_run")) c.steps_per_run = n.at("steps_per_run").integer();
  if (n.has("burn_in")) c.burn_in = n.at("burn_in").unsigned_integer();
  if (n.has("batch_length")) c.batch_length = n.at("batch_length").unsigned_integer();
  if (n.has("seed")) c.seed = n.at("seed").unsigned_integer();
  if (c.runs == 0) n.at("runs").fail("need at least one run");
  if (c.batch_length == 0) n.at("batch_length").fail("must be positive");
  if (c.steps_per_run <= static_cast<long>(c.burn_in + 2 * c.batch_length))
    n.fail("steps_per_run must leave at least two batches after burn_in");
  return c;
}

OutputConfig read_output(const Node& n) {
  n.expect_object({"gains", "trace", "summary", "comparison"});
  OutputConfig o;
  if (n.has("gains")) o.gains = n.at("gains").string();
  if (n.has("trace")) o.trace = n.at("trace").string();
  if (n.has("summary")) o.summary = n.at("summary").string();
  if (n.has("comparison")) o.comparison = n.at("comparison").string();
  return o;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  auto& m = c.model;
  m.Ts = 0.1;
  m.v0 = 19.44;
  m.tau = 0.25;
  m.drag = {0.1, 5.0, 0.2, 3.0};
  for (double mass : {30000.0, 40000.0, 30000.0}) {
    VehicleParams p;
    p.mass_kg = mass;
    p.k_u = 6000.0;
    p.k_d = 3.6;
    p.k_b = 2000.0;
    p.k_fr = 0.006;
    p.k_g = 9.81;
    p.max_engine_input = 2.5;
    p.max_brake_input = 20.0;
    m.vehicles.push_back(p);
  }
  // Uncorrelated process noise, velocities dominant.
  m.W = Vector((Vector(5) << 1e-5, 9e-7, 1e-5, 9e-7, 1e-5).finished()).asDiagonal();

  auto& w = c.cost.weights;
  w.lead_w_v = 0.25;
  w.lead_w_u = 1.0;
  w.integrator = 1e-6;
  w.followers.assign(2, FollowerWeights{0.005, 0.0, 0.01, 0.25, 1.0});
  // input weight ~ (k_u/mass)^2 so each vehicle sees a similar velocity response
  w.followers[0].w_u = 0.5625;

  c.scenario.horizon = 2000;
  c.scenario.seed = 7;
  c.scenario.initial = InitialState::Zero;
  c.scenario.integrator_noise_variance = 1e-6;
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line for the message.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON (" +
                      e.what() + ")");
  }
  const Context ctx{source, LineIndex(text)};
  const Node root(doc, "", ctx);
  root.expect_object({"model", "cost", "scenario", "synthesis", "compare", "output"});

  RunConfig c = default_run_config();
  c.model = read_model(root.at("model"));
  c.cost = read_cost(root.at("cost"));
  if (c.cost.weights.followers.size() + 1 != c.model.vehicles.size())
    root.at("cost").at("followers").fail(
        "need one weight set per follower (" +
        std::to_string(c.model.vehicles.size() - 1) + ")");
  c.scenario = read_scenario(root.at("scenario"));
  c.synthesis = root.has("synthesis") ? read_synthesis(root.at("synthesis"))
                                      : SynthesisConfig{};
  if (root.has("compare")) c.compare = read_compare(root.at("compare"));
  c.output = root.has("output") ? read_output(root.at("output")) : OutputConfig{};

  // Matrix shapes are checked here so the error can point into the file.
  const long n = 2 * static_cast<long>(c.model.vehicles.size()) - 1;
  const long m = static_cast<long>(c.model.vehicles.size());
  auto shape = [&](const Matrix& M, long r, long cols, const Node& where) {
    if (M.rows() != r || M.cols() != cols)
      where.fail("expected a " + std::to_string(r) + "x" + std::to_string(cols) +
                 " matrix, got " + std::to_string(M.rows()) + "x" +
                 std::to_string(M.cols()));
  };
  const Node model = root.at("model");
  shape(c.model.W, n, n, model.at("W"));
  if (c.model.P0) shape(*c.model.P0, n, n, model.at("P0"));
  if (c.model.A) shape(*c.model.A, n, n, model.at("A"));
  if (c.model.B) shape(*c.model.B, n, m, model.at("B"));
  if (c.cost.Q0) {
    const long nq = n + (c.scenario.lead_integrator ? 1 : 0);
    shape(*c.cost.Q0, nq, nq, root.at("cost").at("Q0"));
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

Problem build_problem(const RunConfig& config) {
  const auto& mc = config.model;
  Problem p;
  p.vehicles = mc.vehicles;
  p.op = OperatingPoint::from_time_gap(mc.v0, mc.tau, mc.Ts, mc.drag);
  try {
    p.model = build_platoon_model(mc.vehicles, p.op, mc.W, mc.P0.value_or(mc.W));
  } catch (const ModelError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (mc.A) p.model.A = *mc.A;
  if (mc.B) p.model.B = *mc.B;

  CostSpec cost = build_cost(config.cost.weights, mc.tau, p.model.partition);
  if (mc.zero_coupling) {
    p.model = decouple(p.model);
    cost = decouple(cost, p.model.partition);
  }
  if (config.scenario.lead_integrator) {
    p.model = with_lead_integrator(p.model, mc.Ts,
                                   config.scenario.integrator_noise_variance);
    cost = build_cost(config.cost.weights, mc.tau, p.model.partition);
    if (mc.zero_coupling) cost = decouple(cost, p.model.partition);
  }
  if (config.cost.Q0) {
    const Matrix& Q0 = *config.cost.Q0;
    if (Q0.rows() != p.model.n() || Q0.cols() != p.model.n())
      throw ConfigError("cost: Q0 has the wrong size");
    if (!is_symmetric(Q0, 1e-12) || min_symmetric_eigenvalue(Q0) < -1e-10)
      throw ConfigError("cost: Q0 must be symmetric positive semi-definite");
    cost.Q0 = Q0;
  }
  p.cost = std::move(cost);
  return p;
}

}  // namespace platoon
