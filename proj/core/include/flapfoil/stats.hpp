#ifndef FLAPFOIL_STATS_HPP_
#define FLAPFOIL_STATS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "flapfoil/mdp.hpp"

namespace flapfoil {

// Tukey box: quartiles by linear interpolation between order statistics,
// whiskers at the most extreme data within 1.5 IQR of the box.
struct BoxStats {
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;

  double iqr() const { return q3 - q1; }
};

// Quantile p in [0, 1] of sorted data, linear interpolation.
double quantile_sorted(const std::vector<double>& sorted, double p);
BoxStats box_stats(std::vector<double> data);

struct PathChunk {
  std::size_t chunk = 0;
  std::size_t first_episode = 0;
  std::size_t last_episode = 0;  // inclusive
  std::size_t beats = 0;
  BoxStats amp_deg;
  BoxStats freq_hz;
};

// Pools every beat of each `chunk`-episode block of the record.
std::vector<PathChunk> learning_path_stats(const RunRecord& record,
                                           std::size_t chunk = 50);

struct GaitSummary {
  std::string run_id;
  std::size_t episode = 0;
  double median_amp_deg = 0.0;
  double median_freq_hz = 0.0;
  double st = 0.0;
};

// Median amplitude and frequency over the final episode of each record, with
// the Strouhal number they imply.
std::vector<GaitSummary> final_gait_summary(const std::vector<RunRecord>& records,
                                            const FoilModel& model);

void write_path_csv(const std::vector<PathChunk>& chunks, const std::string& path);
void write_gait_csv(const std::vector<GaitSummary>& rows, const std::string& path);

}  // namespace flapfoil

#endif  // FLAPFOIL_STATS_HPP_
