#include "flapfoil/stats.hpp"

#include <algorithm>
#include <cmath>

#include "flapfoil/csv.hpp"
#include "flapfoil/errors.hpp"

namespace flapfoil {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> data) {
  BoxStats b;
  b.n = data.size();
  if (data.empty()) return b;
  std::sort(data.begin(), data.end());
  b.q1 = quantile_sorted(data, 0.25);
  b.median = quantile_sorted(data, 0.5);
  b.q3 = quantile_sorted(data, 0.75);
  const double lo_fence = b.q1 - 1.5 * b.iqr();
  const double hi_fence = b.q3 + 1.5 * b.iqr();
  b.whisker_lo = *std::find_if(data.begin(), data.end(),
                               [&](double x) { return x >= lo_fence; });
  b.whisker_hi = *std::find_if(data.rbegin(), data.rend(),
                               [&](double x) { return x <= hi_fence; });
  for (double x : data)
    if (x < b.whisker_lo || x > b.whisker_hi) b.outliers.push_back(x);
  return b;
}

std::vector<PathChunk> learning_path_stats(const RunRecord& record,
                                           std::size_t chunk) {
  if (chunk == 0) throw std::invalid_argument("chunk size must be >= 1");
  std::vector<PathChunk> out;
  for (std::size_t start = 0; start < record.episodes.size(); start += chunk) {
    const std::size_t stop = std::min(record.episodes.size(), start + chunk);
    std::vector<double> amp, freq;
    for (std::size_t e = start; e < stop; ++e) {
      for (const auto& b : record.episodes[e].beats) {
        amp.push_back(b.amp_deg);
        freq.push_back(b.freq_hz);
      }
    }
    PathChunk c;
    c.chunk = start / chunk;
    c.first_episode = record.episodes[start].episode;
    c.last_episode = record.episodes[stop - 1].episode;
    c.beats = amp.size();
    c.amp_deg = box_stats(std::move(amp));
    c.freq_hz = box_stats(std::move(freq));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<GaitSummary> final_gait_summary(const std::vector<RunRecord>& records,
                                            const FoilModel& model) {
  std::vector<GaitSummary> out;
  for (const auto& r : records) {
    if (r.episodes.empty()) continue;
    const auto& last = r.episodes.back();
    if (last.beats.empty()) continue;
    std::vector<double> amp, freq;
    for (const auto& b : last.beats) {
      amp.push_back(b.amp_deg);
      freq.push_back(b.freq_hz);
    }
    GaitSummary g;
    g.run_id = r.run_id;
    g.episode = last.episode;
    g.median_amp_deg = box_stats(amp).median;
    g.median_freq_hz = box_stats(freq).median;
    g.st = strouhal(deg2rad(g.median_amp_deg), g.median_freq_hz, model.flow,
                    model.geom);
    out.push_back(g);
  }
  return out;
}

void write_path_csv(const std::vector<PathChunk>& chunks, const std::string& path) {
  CsvWriter csv(path, {"chunk", "first_episode", "last_episode", "beats",
                       "variable", "median", "q1", "q3", "whisker_lo",
                       "whisker_hi", "n_outliers"});
  for (const auto& c : chunks) {
    for (int v = 0; v < 2; ++v) {
      const BoxStats& b = v == 0 ? c.amp_deg : c.freq_hz;
      csv.cell(c.chunk).cell(c.first_episode).cell(c.last_episode).cell(c.beats)
          .cell(v == 0 ? "amp_deg" : "freq_hz").cell(b.median).cell(b.q1)
          .cell(b.q3).cell(b.whisker_lo).cell(b.whisker_hi).cell(b.outliers.size());
      csv.end_row();
    }
  }
}

void write_gait_csv(const std::vector<GaitSummary>& rows, const std::string& path) {
  CsvWriter csv(path, {"run_id", "episode", "median_amp_deg", "median_freq_hz", "st"});
  for (const auto& g : rows) {
    csv.cell(g.run_id).cell(g.episode).cell(g.median_amp_deg)
        .cell(g.median_freq_hz).cell(g.st);
    csv.end_row();
  }
}

}  // namespace flapfoil
