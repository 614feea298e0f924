#ifndef FLAPFOIL_CONFIG_HPP_
#define FLAPFOIL_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "flapfoil/hydro.hpp"
#include "flapfoil/mdp.hpp"
#include "flapfoil/ppg.hpp"
#include "flapfoil/reward.hpp"

namespace flapfoil {

struct SuiteSpec {
  std::vector<int> k_values{1, 2, 8, 16};
  int seeds = 5;
  int episodes = 400;
  int workers = 1;
  int checkpoint_every = 50;
  int smooth_window = 10;
};

struct SweepSpec {
  std::vector<double> amps_deg;  // default 7, 8, ..., 20
  std::vector<double> st_values; // default 0.20, 0.25, ..., 0.80
  int repeats = 5;
  double duration_s = 60.0;

  SweepSpec();
};

struct MismatchSpec {
  int episodes = 10;
  std::vector<int> k_list{1, 8, 16};
  double duration_s = 60.0;
};

struct RunConfig {
  FoilGeometry geom;
  FlowConditions flow;
  SurrogateParams surrogate = SurrogateParams::defaults(geom, flow);
  EpisodeConfig env;
  RewardConfig reward;
  Hyperparams agent;
  SuiteSpec suite;
  SweepSpec sweep;
  MismatchSpec mismatch;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";

  FoilModel model() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Parses a JSON document. Unknown keys are rejected; syntax errors report
// line and column. `overrides` are "dotted.path=value" strings applied to the
// document before it is read; values are parsed as JSON and fall back to a
// plain string.
RunConfig parse_run_config(const std::string& text, const std::string& source,
                           const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});

// Full snapshot, every field explicit; parse_run_config(to_json_text(c))
// reproduces c.
std::string to_json_text(const RunConfig& cfg);

}  // namespace flapfoil

#endif  // FLAPFOIL_CONFIG_HPP_
