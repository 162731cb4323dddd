#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "batdiff/degradation.hpp"
#include "batdiff/image.hpp"
#include "batdiff/metrics.hpp"
#include "batdiff/pipeline.hpp"

namespace batdiff::cli {

struct AblationCell {
  std::string variant;
  SamplerConfig sampler;
  TrainConfig train;
};

struct AblationRow {
  AblationCell cell;
  int seeds = 1;
  std::vector<MetricReport> per_seed;
  MetricReport mean;
};

const std::vector<std::string>& suite_names();

/// Grid for `suite`, built on top of the base configuration.
std::vector<AblationCell> suite_cells(const std::string& suite, const SamplerConfig& base_sampler,
                                      const TrainConfig& base_train);

/// Trains and samples every cell for seeds base, base+1, ..., base+seeds-1.
/// Cells whose training inputs agree share one trained network per seed.
/// Up to `threads` jobs run concurrently; results do not depend on it.
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& cells, const Image& y,
                                      const Image& ground_truth, const DegradationModel& model,
                                      const MetricOptions& metrics, int seeds, int threads);

void write_ablation_csv(std::ostream& out, const std::string& suite,
                        const std::vector<AblationRow>& rows);

}  // namespace batdiff::cli
