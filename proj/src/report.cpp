#include "scbnet/report.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "scbnet/data.hpp"
#include "scbnet/errors.hpp"

namespace scbnet {

uint64_t cell_seed(uint64_t master_seed, const std::string& arch_id,
                   bool augmented) {
  return mix_seed(master_seed, arch_id + (augmented ? "|aug" : "|noaug"));
}

int resolve_worker_count(int requested) {
  int workers = requested > 0 ? requested : 1;
  if (const char* env = std::getenv("SCBNET_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw ConfigError("SCBNET_THREADS must be a positive integer, got '" +
                        std::string(env) + "'");
    }
    if (requested <= 0 || cap < workers) workers = static_cast<int>(cap);
  }
  return workers;
}

SweepResult run_sweep(const SweepOptions& options) {
  SweepResult result;
  for (const std::string& id : registry_ids()) {
    for (bool augmented : {false, true}) {
      result.cells.push_back(SweepCell{id, augmented, std::nullopt});
    }
  }
  if (options.dry_run) return result;

  const LabeledDataset train_data =
      ingest_directory(options.train_dir, options.resolution);
  const LabeledDataset test_data =
      ingest_directory(options.test_dir, options.resolution);

  const int workers = resolve_worker_count(options.workers);
  std::atomic<size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    for (;;) {
      const size_t i = cursor.fetch_add(1);
      if (i >= result.cells.size()) return;
      SweepCell& cell = result.cells[i];
      try {
        TrainConfig cfg = options.base;
        cfg.augment = cell.augmented;
        cfg.seed = cell_seed(options.master_seed, cell.arch_id, cell.augmented);
        const NetworkSpec spec =
            build_architecture(cell.arch_id, options.resolution);
        const TrainResult trained = train(spec, train_data, cfg);
        const EvalResult eval = evaluate(spec, trained.params, test_data);
        cell.accuracy_pct = eval.accuracy * 100.0;
        if (options.on_cell) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          options.on_cell(cell);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::string format_accuracy_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", pct);
  return buf;
}

namespace {

struct TableRow {
  std::vector<std::string> cells;
};

std::string render_rows(const std::vector<TableRow>& rows) {
  std::vector<size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.cells.size()) widths.resize(row.cells.size(), 0);
    for (size_t i = 0; i < row.cells.size(); ++i) {
      widths[i] = std::max(widths[i], row.cells[i].size());
    }
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    std::string line;
    for (size_t i = 0; i < row.cells.size(); ++i) {
      std::string cell = row.cells[i];
      cell.resize(widths[i], ' ');
      if (i) line += "  ";
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << "\n";
  }
  return os.str();
}

std::string upper(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(ch));
  return s;
}

std::string render_family(const SweepResult& result, bool with_scb) {
  std::vector<TableRow> rows;
  TableRow header;
  header.cells = {"", "AUGMENTATION", "CONV1", "CONV2", "CONV3", "CONV4"};
  if (with_scb) header.cells.push_back("SCB CONV1");
  header.cells.insert(header.cells.end(), {"FC1", "FC2", "ACCURACY"});
  rows.push_back(header);

  for (const auto& cell : result.cells) {
    const NetworkSpec spec = build_architecture(cell.arch_id);
    if (spec.scb.has_value() != with_scb) continue;
    TableRow row;
    row.cells.push_back(cell.augmented ? "" : upper(spec.name));
    row.cells.push_back(cell.augmented ? "YES" : "NO");
    for (size_t i = 0; i < 4; ++i) {
      row.cells.push_back(i < spec.conv_blocks.size()
                              ? std::to_string(spec.conv_blocks[i].filters)
                              : "-");
    }
    if (with_scb) row.cells.push_back(std::to_string(spec.scb->scbs));
    for (size_t i = 0; i < 2; ++i) {
      row.cells.push_back(i < spec.fc_sizes.size()
                              ? std::to_string(spec.fc_sizes[i])
                              : "-");
    }
    row.cells.push_back(
        cell.accuracy_pct ? format_accuracy_pct(*cell.accuracy_pct) : "");
    rows.push_back(row);
  }
  return render_rows(rows);
}

}  // namespace

std::string render_table1(const SweepResult& result) {
  return render_family(result, false);
}

std::string render_table2(const SweepResult& result) {
  return render_family(result, true);
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "arch,augmented,accuracy_pct\n";
  for (const auto& cell : result.cells) {
    os << cell.arch_id << "," << (cell.augmented ? "yes" : "no") << ",";
    if (cell.accuracy_pct) os << format_accuracy_pct(*cell.accuracy_pct);
    os << "\n";
  }
  return os.str();
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream os;
  os << "epoch,loss,train_acc\n";
  for (size_t i = 0; i < history.epochs.size(); ++i) {
    const EpochStats& e = history.epochs[i];
    os << (i + 1) << "," << std::setprecision(9) << e.mean_loss << ","
       << std::setprecision(9) << e.train_accuracy << "\n";
  }
  return os.str();
}

}  // namespace scbnet
