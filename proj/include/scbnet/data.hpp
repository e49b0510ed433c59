#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scbnet/image_io.hpp"
#include "scbnet/rng.hpp"
#include "scbnet/tensor.hpp"

namespace scbnet {

enum class Provenance { original, hflip, vflip };
const char* provenance_name(Provenance p);

enum class FlipAxis { horizontal, vertical };

struct LabeledSample {
  Tensor4 pixels;  // (1, 1, R, R), values in [0,1]
  int label = 0;   // 0 = no tumor, 1 = tumor
  Provenance provenance = Provenance::original;
  std::string source_id;  // originating file path
};

struct ClassCounts {
  int negatives = 0, positives = 0;
};

struct LabeledDataset {
  std::vector<LabeledSample> samples;

  size_t size() const { return samples.size(); }
  int resolution() const { return samples.empty() ? 0 : samples[0].pixels.h; }
  ClassCounts class_counts() const;
};

struct IngestReport {
  int total = 0;
  ClassCounts counts;
  std::vector<std::string> skipped;  // one message per undecodable file

  std::string to_text() const;
};

// Reads `<root>/no` (label 0) then `<root>/yes` (label 1); dataset order is
// lexicographic by path. Each image is decoded, converted to grayscale,
// bilinearly resized to R x R and scaled to [0,1]. A missing subdirectory is
// an IngestError; an undecodable file is skipped and recorded in the report.
LabeledDataset ingest_directory(const std::string& root, int resolution,
                                IngestReport* report = nullptr);

// Mirrors columns (horizontal) or rows (vertical); label kept, provenance
// set to the flip applied.
LabeledSample flip(const LabeledSample& sample, FlipAxis axis);

// originals ++ hflip(all) ++ vflip(all): exactly 3N samples, class balance
// preserved.
LabeledDataset augment(const LabeledDataset& dataset);

struct Batch {
  Tensor4 pixels;           // (k, 1, R, R)
  std::vector<int> labels;  // length k
  std::vector<size_t> indices;  // dataset positions, for bookkeeping
};

// Walks a dataset in batches of batch_size with one Fisher-Yates shuffle per
// epoch; the order depends only on (seed, epoch). The final partial batch is
// included.
class BatchIterator {
 public:
  BatchIterator(const LabeledDataset& dataset, int batch_size, uint64_t seed);

  void start_epoch(int epoch);
  bool next(Batch& out);
  int batches_per_epoch() const;

 private:
  const LabeledDataset* data_;
  int batch_size_;
  uint64_t seed_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
};

// Assembles dataset rows into one (k, 1, R, R) batch.
Batch gather_batch(const LabeledDataset& dataset,
                   const std::vector<size_t>& indices);

}  // namespace scbnet
