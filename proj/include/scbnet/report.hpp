#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scbnet/train.hpp"

namespace scbnet {

struct SweepCell {
  std::string arch_id;
  bool augmented = false;
  std::optional<double> accuracy_pct;  // empty until trained (dry run)
};

struct SweepResult {
  std::vector<SweepCell> cells;  // registry order, augment off then on
};

// Per-cell seed derived from the master seed so any cell can be re-run
// in isolation.
uint64_t cell_seed(uint64_t master_seed, const std::string& arch_id,
                   bool augmented);

struct SweepOptions {
  std::string train_dir, test_dir;
  int resolution = 64;
  TrainConfig base;  // augment and seed are overridden per cell
  uint64_t master_seed = 0;
  bool dry_run = false;
  int workers = 0;  // <= 0: SCBNET_THREADS, else 1
  std::function<void(const SweepCell&)> on_cell;  // serialized across workers
};

// Trains and evaluates every (architecture, augmentation) cell. Cells run
// independently, so worker count never changes the numbers.
SweepResult run_sweep(const SweepOptions& options);

// Number of sweep workers honoring the SCBNET_THREADS cap.
int resolve_worker_count(int requested);

// Plain-text reports: one covers the pure conv-block family, the other the
// skip-connection family with its extra SCB CONV1 column.
std::string render_table1(const SweepResult& result);
std::string render_table2(const SweepResult& result);

std::string sweep_csv(const SweepResult& result);
std::string history_csv(const TrainHistory& history);

// Accuracy fraction as a percentage with two decimals, e.g. "99.60".
std::string format_accuracy_pct(double pct);

}  // namespace scbnet
