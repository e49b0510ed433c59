#include "scbnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <sstream>

#include "scbnet/errors.hpp"

namespace fs = std::filesystem;

namespace scbnet {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::original: return "original";
    case Provenance::hflip: return "hflip";
    case Provenance::vflip: return "vflip";
  }
  return "?";
}

ClassCounts LabeledDataset::class_counts() const {
  ClassCounts c;
  for (const auto& s : samples) {
    (s.label == 1 ? c.positives : c.negatives) += 1;
  }
  return c;
}

std::string IngestReport::to_text() const {
  std::ostringstream os;
  os << "ingested " << total << " images (" << counts.positives
     << " tumor, " << counts.negatives << " no-tumor), skipped "
     << skipped.size() << "\n";
  for (const auto& msg : skipped) os << "  skipped: " << msg << "\n";
  return os.str();
}

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

void ingest_class_dir(const fs::path& dir, int label, int resolution,
                      LabeledDataset& out, IngestReport& report) {
  if (!fs::is_directory(dir)) {
    throw IngestError("missing subdirectory '" + dir.filename().string() +
                      "' under '" + dir.parent_path().string() + "'");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    GrayImage gray;
    try {
      gray = to_grayscale(decode_image_file(path.string()));
    } catch (const DecodeError& e) {
      report.skipped.push_back(e.what());
      continue;
    }
    gray = resize_bilinear(gray, resolution, resolution);
    LabeledSample s;
    s.pixels = Tensor4(1, 1, resolution, resolution, std::move(gray.pixels));
    s.label = label;
    s.provenance = Provenance::original;
    s.source_id = path.string();
    out.samples.push_back(std::move(s));
    (label == 1 ? report.counts.positives : report.counts.negatives) += 1;
    report.total += 1;
  }
}

}  // namespace

LabeledDataset ingest_directory(const std::string& root, int resolution,
                                IngestReport* report) {
  if (resolution < 1) {
    throw ConfigError("ingest resolution must be positive, got " +
                      std::to_string(resolution));
  }
  if (!fs::is_directory(root)) {
    throw IngestError("dataset root '" + root + "' is not a directory");
  }
  LabeledDataset dataset;
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = IngestReport{};
  ingest_class_dir(fs::path(root) / "no", 0, resolution, dataset, rep);
  ingest_class_dir(fs::path(root) / "yes", 1, resolution, dataset, rep);
  return dataset;
}

LabeledSample flip(const LabeledSample& sample, FlipAxis axis) {
  const Tensor4& src = sample.pixels;
  LabeledSample out;
  out.pixels = Tensor4(src.n, src.c, src.h, src.w);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      const int sy = axis == FlipAxis::vertical ? src.h - 1 - y : y;
      const int sx = axis == FlipAxis::horizontal ? src.w - 1 - x : x;
      out.pixels.at(0, 0, y, x) = src.at(0, 0, sy, sx);
    }
  }
  out.label = sample.label;
  out.provenance = axis == FlipAxis::horizontal ? Provenance::hflip
                                                : Provenance::vflip;
  out.source_id = sample.source_id;
  return out;
}

LabeledDataset augment(const LabeledDataset& dataset) {
  LabeledDataset out;
  out.samples.reserve(dataset.samples.size() * 3);
  out.samples = dataset.samples;
  for (const auto& s : dataset.samples) {
    out.samples.push_back(flip(s, FlipAxis::horizontal));
  }
  for (const auto& s : dataset.samples) {
    out.samples.push_back(flip(s, FlipAxis::vertical));
  }
  return out;
}

BatchIterator::BatchIterator(const LabeledDataset& dataset, int batch_size,
                             uint64_t seed)
    : data_(&dataset), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) {
    throw ConfigError("batch size must be positive, got " +
                      std::to_string(batch_size));
  }
  order_.resize(dataset.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

void BatchIterator::start_epoch(int epoch) {
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  Rng rng(mix_seed(seed_, "epoch-" + std::to_string(epoch)));
  rng.shuffle(order_.begin(), order_.end());
  cursor_ = 0;
}

bool BatchIterator::next(Batch& out) {
  if (cursor_ >= order_.size()) return false;
  const size_t end =
      std::min(cursor_ + static_cast<size_t>(batch_size_), order_.size());
  std::vector<size_t> indices(order_.begin() + cursor_, order_.begin() + end);
  cursor_ = end;
  out = gather_batch(*data_, indices);
  return true;
}

int BatchIterator::batches_per_epoch() const {
  return static_cast<int>((order_.size() + batch_size_ - 1) / batch_size_);
}

Batch gather_batch(const LabeledDataset& dataset,
                   const std::vector<size_t>& indices) {
  if (indices.empty()) {
    throw ShapeError("cannot gather an empty batch");
  }
  const Tensor4& first = dataset.samples[indices[0]].pixels;
  Batch batch;
  batch.pixels = Tensor4(static_cast<int>(indices.size()), 1, first.h, first.w);
  batch.labels.reserve(indices.size());
  batch.indices = indices;
  const size_t plane = first.size();
  for (size_t i = 0; i < indices.size(); ++i) {
    const LabeledSample& s = dataset.samples[indices[i]];
    if (s.pixels.size() != plane) {
      throw ShapeError("batch sample '" + s.source_id + "' has shape " +
                       s.pixels.shape_string() + ", expected " +
                       first.shape_string());
    }
    std::copy(s.pixels.data.begin(), s.pixels.data.end(),
              batch.pixels.data.begin() + i * plane);
    batch.labels.push_back(s.label);
  }
  return batch;
}

}  // namespace scbnet
