#include "flapfoil/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "flapfoil/errors.hpp"

namespace flapfoil {

using json = nlohmann::ordered_json;

SweepSpec::SweepSpec() {
  for (int a = 7; a <= 20; ++a) amps_deg.push_back(a);
  for (int i = 0; i <= 12; ++i) st_values.push_back(0.2 + 0.05 * i);
}

FoilModel RunConfig::model() const {
  FoilModel m;
  m.geom = geom;
  m.flow = flow;
  m.params = surrogate;
  return m;
}

void RunConfig::validate() const {
  geom.validate();
  flow.validate();
  surrogate.validate();
  env.validate();
  reward.validate();
  agent.validate();
  if (suite.k_values.empty()) throw ConfigError("suite.k_values must not be empty");
  for (int k : suite.k_values)
    if (k < 1) throw ConfigError("suite.k_values entries must be >= 1");
  if (suite.seeds < 1) throw ConfigError("suite.seeds must be >= 1");
  if (suite.episodes < 0) throw ConfigError("suite.episodes must be >= 0");
  if (suite.workers < 1) throw ConfigError("suite.workers must be >= 1");
  if (suite.checkpoint_every < 1) throw ConfigError("suite.checkpoint_every must be >= 1");
  if (suite.smooth_window < 1) throw ConfigError("suite.smooth_window must be >= 1");
  if (sweep.amps_deg.empty() || sweep.st_values.empty())
    throw ConfigError("sweep grids must not be empty");
  if (sweep.repeats < 1) throw ConfigError("sweep.repeats must be >= 1");
  if (!(sweep.duration_s > 0.0)) throw ConfigError("sweep.duration_s must be > 0");
  if (mismatch.episodes < 2) throw ConfigError("mismatch.episodes must be >= 2");
  if (mismatch.k_list.empty()) throw ConfigError("mismatch.k_list must not be empty");
  for (int k : mismatch.k_list)
    if (k < 1) throw ConfigError("mismatch.k_list entries must be >= 1");
  if (!(mismatch.duration_s > 0.0)) throw ConfigError("mismatch.duration_s must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + name() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), field(key));
  }

  void get(const std::string& key, double& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number()) bad(key, "a number");
      dst = v->get<double>();
      if (!std::isfinite(dst)) bad(key, "a finite number");
    }
  }
  void get(const std::string& key, int& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) bad(key, "an integer");
      const auto x = v->get<long long>();
      if (x < -2147483647LL || x > 2147483647LL) bad(key, "a 32-bit integer");
      dst = static_cast<int>(x);
    }
  }
  void get(const std::string& key, std::uint64_t& dst) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned() &&
          !(v->is_number_integer() && v->get<long long>() >= 0))
        bad(key, "a non-negative integer");
      dst = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, bool& dst) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) bad(key, "true or false");
      dst = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& dst) {
    if (const json* v = take(key)) {
      if (!v->is_string()) bad(key, "a string");
      dst = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::vector<int>& dst) {
    if (const json* v = take(key)) {
      if (!v->is_array()) bad(key, "an array of integers");
      dst.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) bad(key, "an array of integers");
        dst.push_back(e.get<int>());
      }
    }
  }
  void get(const std::string& key, std::vector<double>& dst) {
    if (const json* v = take(key)) {
      if (!v->is_array()) bad(key, "an array of numbers");
      dst.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) bad(key, "an array of numbers");
        dst.push_back(e.get<double>());
      }
    }
  }
  void get(const std::string& key, RawAction& dst) {
    std::vector<double> v;
    if (has(key)) {
      get(key, v);
      if (v.size() != 2) bad(key, "a pair [amp, freq]");
      dst = {v[0], v[1]};
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!used_.count(key)) throw ConfigError("unknown key '" + field(key) + "'");
    }
  }

 private:
  const json* take(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string name() const { return path_.empty() ? "<root>" : path_; }
  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  [[noreturn]] void bad(const std::string& key, const char* what) const {
    throw ConfigError("field '" + field(key) + "' must be " + what);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void apply_override(json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + spec + "' is not of the form key.path=value");
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override '" + spec + "' has an empty path segment");
    if (!node->is_object())
      throw ConfigError("override '" + spec + "': '" + path.substr(0, start - 1) +
                        "' is not an object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::string syntax_error(const std::string& text, const std::string& source,
                         const json::parse_error& e) {
  std::size_t line = 1, col = 1;
  const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::ostringstream os;
  os << source << ":" << line << ":" << col << ": malformed JSON";
  const std::string what = e.what();
  const auto pos = what.find("syntax error");
  if (pos != std::string::npos) os << " (" << what.substr(pos) << ")";
  return os.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source,
                           const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(syntax_error(text, source, e));
  }
  if (!doc.is_object()) throw ConfigError(source + ": top level must be an object");

  for (const auto& o : overrides) apply_override(doc, o);

  RunConfig c;
  try {
    Section root(doc, "");
    if (root.has("geometry")) {
      auto s = root.child("geometry");
      s.get("chord", c.geom.chord);
      s.get("span", c.geom.span);
      s.get("pivot_frac", c.geom.pivot_frac);
      s.finish();
    }
    if (root.has("flow")) {
      auto s = root.child("flow");
      s.get("u_inf", c.flow.u_inf);
      s.get("rho", c.flow.rho);
      s.get("nu", c.flow.nu);
      s.finish();
    }
    // Lengths, time constant and noise levels follow the rig unless given.
    c.geom.validate();
    c.flow.validate();
    c.surrogate = SurrogateParams::defaults(c.geom, c.flow);
    if (root.has("surrogate")) {
      auto s = root.child("surrogate");
      auto& p = c.surrogate;
      s.get("cn_alpha", p.cn_alpha);
      double stall_deg = rad2deg(p.alpha_stall);
      s.get("alpha_stall_deg", stall_deg);
      p.alpha_stall = deg2rad(stall_deg);
      s.get("cd0", p.cd0);
      s.get("quarter_arm", p.quarter_arm);
      s.get("moment_arm", p.moment_arm);
      s.get("c_am", p.c_am);
      s.get("kappa_w", p.kappa_w);
      s.get("tau_w", p.tau_w);
      s.get("sigma_t", p.sigma_t);
      s.get("sigma_m", p.sigma_m);
      s.get("rectify_power", p.rectify_power);
      s.finish();
    }
    if (root.has("env")) {
      auto s = root.child("env");
      s.get("horizon_s", c.env.horizon_s);
      s.get("n_history", c.env.n_history);
      s.get("warmup_repeats", c.env.warmup_repeats);
      s.get("initial_raw", c.env.initial_raw);
      s.get("record_loads", c.env.record_loads);
      s.finish();
    }
    if (root.has("reward")) {
      auto s = root.child("reward");
      s.get("k", c.reward.k);
      s.get("power_floor", c.reward.power_floor);
      s.get("norm_lo", c.reward.norm_lo);
      s.get("norm_hi", c.reward.norm_hi);
      s.finish();
    }
    if (root.has("agent")) {
      auto s = root.child("agent");
      auto& a = c.agent;
      s.get("gamma", a.gamma);
      s.get("lr", a.lr);
      s.get("clip_eps", a.clip_eps);
      s.get("gae_lambda", a.gae_lambda);
      s.get("rollout_episodes", a.rollout_episodes);
      s.get("policy_epochs", a.policy_epochs);
      s.get("value_epochs", a.value_epochs);
      s.get("n_pi", a.n_pi);
      s.get("aux_epochs", a.aux_epochs);
      s.get("beta_clone", a.beta_clone);
      s.get("minibatch_episodes", a.minibatch_episodes);
      s.get("minibatch_decisions", a.minibatch_decisions);
      s.get("adam_beta1", a.adam_beta1);
      s.get("adam_beta2", a.adam_beta2);
      s.get("adam_eps", a.adam_eps);
      s.get("log_std_init", a.policy.log_std_init);
      s.get("policy_lstm", a.policy.lstm);
      s.get("policy_trunk", a.policy.trunk);
      s.get("value_lstm", a.value.lstm);
      s.get("value_trunk", a.value.trunk);
      s.finish();
    }
    c.reward.gamma = c.agent.gamma;
    if (root.has("suite")) {
      auto s = root.child("suite");
      s.get("k_values", c.suite.k_values);
      s.get("seeds", c.suite.seeds);
      s.get("episodes", c.suite.episodes);
      s.get("workers", c.suite.workers);
      s.get("checkpoint_every", c.suite.checkpoint_every);
      s.get("smooth_window", c.suite.smooth_window);
      s.finish();
    }
    if (root.has("sweep")) {
      auto s = root.child("sweep");
      s.get("amps_deg", c.sweep.amps_deg);
      s.get("st_values", c.sweep.st_values);
      s.get("repeats", c.sweep.repeats);
      s.get("duration_s", c.sweep.duration_s);
      s.finish();
    }
    if (root.has("mismatch")) {
      auto s = root.child("mismatch");
      s.get("episodes", c.mismatch.episodes);
      s.get("k_list", c.mismatch.k_list);
      s.get("duration_s", c.mismatch.duration_s);
      s.finish();
    }
    root.get("master_seed", c.master_seed);
    root.get("output_dir", c.output_dir);
    root.finish();
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path, overrides);
}

std::string to_json_text(const RunConfig& c) {
  json j;
  j["geometry"] = {{"chord", c.geom.chord},
                   {"span", c.geom.span},
                   {"pivot_frac", c.geom.pivot_frac}};
  j["flow"] = {{"u_inf", c.flow.u_inf}, {"rho", c.flow.rho}, {"nu", c.flow.nu}};
  const auto& p = c.surrogate;
  j["surrogate"] = {{"cn_alpha", p.cn_alpha},
                    {"alpha_stall_deg", rad2deg(p.alpha_stall)},
                    {"cd0", p.cd0},
                    {"quarter_arm", p.quarter_arm},
                    {"moment_arm", p.moment_arm},
                    {"c_am", p.c_am},
                    {"kappa_w", p.kappa_w},
                    {"tau_w", p.tau_w},
                    {"sigma_t", p.sigma_t},
                    {"sigma_m", p.sigma_m},
                    {"rectify_power", p.rectify_power}};
  j["env"] = {{"horizon_s", c.env.horizon_s},
              {"n_history", c.env.n_history},
              {"warmup_repeats", c.env.warmup_repeats},
              {"initial_raw", {c.env.initial_raw[0], c.env.initial_raw[1]}},
              {"record_loads", c.env.record_loads}};
  j["reward"] = {{"k", c.reward.k},
                 {"power_floor", c.reward.power_floor},
                 {"norm_lo", c.reward.norm_lo},
                 {"norm_hi", c.reward.norm_hi}};
  const auto& a = c.agent;
  j["agent"] = {{"gamma", a.gamma},
                {"lr", a.lr},
                {"clip_eps", a.clip_eps},
                {"gae_lambda", a.gae_lambda},
                {"rollout_episodes", a.rollout_episodes},
                {"policy_epochs", a.policy_epochs},
                {"value_epochs", a.value_epochs},
                {"n_pi", a.n_pi},
                {"aux_epochs", a.aux_epochs},
                {"beta_clone", a.beta_clone},
                {"minibatch_episodes", a.minibatch_episodes},
                {"minibatch_decisions", a.minibatch_decisions},
                {"adam_beta1", a.adam_beta1},
                {"adam_beta2", a.adam_beta2},
                {"adam_eps", a.adam_eps},
                {"log_std_init", a.policy.log_std_init},
                {"policy_lstm", a.policy.lstm},
                {"policy_trunk", a.policy.trunk},
                {"value_lstm", a.value.lstm},
                {"value_trunk", a.value.trunk}};
  j["suite"] = {{"k_values", c.suite.k_values},
                {"seeds", c.suite.seeds},
                {"episodes", c.suite.episodes},
                {"workers", c.suite.workers},
                {"checkpoint_every", c.suite.checkpoint_every},
                {"smooth_window", c.suite.smooth_window}};
  j["sweep"] = {{"amps_deg", c.sweep.amps_deg},
                {"st_values", c.sweep.st_values},
                {"repeats", c.sweep.repeats},
                {"duration_s", c.sweep.duration_s}};
  j["mismatch"] = {{"episodes", c.mismatch.episodes},
                   {"k_list", c.mismatch.k_list},
                   {"duration_s", c.mismatch.duration_s}};
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  // Doubles are printed in shortest round-trip form.
  return j.dump(2) + "\n";
}

}  // namespace flapfoil
