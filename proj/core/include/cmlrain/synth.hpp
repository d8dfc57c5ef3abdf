#pragma once

#include <cstdint>
#include <vector>

#include "cmlrain/timeseries.hpp"

namespace cmlrain {

struct SynthLinkParams {
  double length_km = 2.0;
  double frequency_ghz = 33.0;
  double a = 0.25;  // power-law coefficient used by the forward model
  double b = 1.0;
  double baseline_dbm = -46.0;
};

// Desk-scale stand-in for the real archive. Rain is generated as
// piecewise-constant blocks (one rate per event) separated by
// exponentially distributed dry gaps, pushed through the forward power law
// per link, and observed with Gaussian RSL noise. Everything is a pure
// function of (seed, config).
struct SynthConfig {
  int days = 2;
  int n_links = 3;
  double noise_db = 0.1;
  double waa_db = 0.0;  // extra wet-antenna offset applied while raining
  double mean_gap_min = 360.0;
  double mean_duration_min = 90.0;
  int min_duration_min = 10;
  int max_duration_min = 300;
  double rate_lognorm_mu = 0.8;
  double rate_lognorm_sigma = 0.9;
  double max_rate_mm_h = 30.0;
  double gauge_resolution_mm = 0.1;
  bool zero_rain = false;
  int64_t start_time = 1433116800;  // 2015-06-01T00:00:00Z
  std::vector<SynthLinkParams> links;  // cycled defaults when empty
};

struct SynthDataset {
  std::vector<LinkRecord> links;
  std::vector<SynthLinkParams> link_params;  // the (a,b,L) actually used
  GaugeRecord gauge;
  TimeSeries true_rain;  // 1-min ground truth, mm/h, no quantization
};

SynthDataset synth_dataset(uint64_t seed, const SynthConfig& cfg);
SynthDataset synth_dataset(uint64_t seed, int days);

}  // namespace cmlrain
