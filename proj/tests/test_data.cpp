#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "scbnet/data.hpp"
#include "scbnet/image_io.hpp"
#include "test_util.hpp"

using namespace scbnet;
namespace fs = std::filesystem;

TEST_CASE("grayscale weighting on primary colors") {
  CHECK(to_grayscale(255, 255, 255) == doctest::Approx(1.0f));
  CHECK(to_grayscale(0, 0, 0) == doctest::Approx(0.0f));
  CHECK(to_grayscale(255, 0, 0) == doctest::Approx(0.299f));
  CHECK(to_grayscale(0, 255, 0) == doctest::Approx(0.587f));
  CHECK(to_grayscale(0, 0, 255) == doctest::Approx(0.114f));
}

TEST_CASE("bilinear resize on constant and two-tone images") {
  GrayImage flat{4, 6, std::vector<float>(24, 0.75f)};
  const GrayImage down = resize_bilinear(flat, 2, 3);
  for (const float v : down.pixels) CHECK(v == doctest::Approx(0.75f));

  // [[0, 0], [1, 1]] collapses to its average under one-output sampling
  GrayImage tone{2, 2, {0.0f, 0.0f, 1.0f, 1.0f}};
  const GrayImage mid = resize_bilinear(tone, 1, 1);
  CHECK(mid.pixels[0] == doctest::Approx(0.5f));

  // upscaling a 1x1 replicates the pixel (edge clamp)
  GrayImage dot{1, 1, {0.3f}};
  const GrayImage up = resize_bilinear(dot, 3, 3);
  for (const float v : up.pixels) CHECK(v == doctest::Approx(0.3f));

  CHECK_THROWS_AS(resize_bilinear(dot, 0, 4), ConfigError);
}

TEST_CASE("decode failure raises DecodeError") {
  CHECK_THROWS_AS(decode_image_file("/nonexistent/scan.png"), DecodeError);
  const auto dir = testutil::make_temp_dir("decode");
  const auto junk = dir / "junk.png";
  {
    std::ofstream f(junk, std::ios::binary);
    f << "this is not an image";
  }
  CHECK_THROWS_AS(decode_image_file(junk.string()), DecodeError);
}

TEST_CASE("bmp decode round-trips pixel values") {
  const auto dir = testutil::make_temp_dir("bmp");
  const auto path = dir / "two.bmp";
  // top row red, bottom row blue: checks row order through the decoder
  testutil::write_bmp24(path, 2, 2,
                        {255, 0, 0, 255, 0, 0, 0, 0, 255, 0, 0, 255});
  const DecodedImage img = decode_image_file(path.string());
  REQUIRE(img.h == 2);
  REQUIRE(img.w == 2);
  CHECK(img.rgb[0] == 255);  // (0,0) R
  CHECK(img.rgb[2] == 0);    // (0,0) B
  CHECK(img.rgb[6 + 0] == 0);    // (1,0) R
  CHECK(img.rgb[6 + 2] == 255);  // (1,0) B
  const GrayImage g = to_grayscale(img);
  CHECK(g.pixels[0] == doctest::Approx(0.299f));
  CHECK(g.pixels[2] == doctest::Approx(0.114f));
}

TEST_CASE("flips mirror the expected axes") {
  LabeledSample s;
  s.pixels = Tensor4(1, 1, 2, 3, {1, 2, 3, 4, 5, 6});
  s.label = 1;
  s.source_id = "synthetic";

  const LabeledSample h = flip(s, FlipAxis::horizontal);
  CHECK(h.pixels.data == std::vector<float>{3, 2, 1, 6, 5, 4});
  CHECK(h.label == 1);
  CHECK(h.provenance == Provenance::hflip);
  CHECK(h.source_id == "synthetic");

  const LabeledSample v = flip(s, FlipAxis::vertical);
  CHECK(v.pixels.data == std::vector<float>{4, 5, 6, 1, 2, 3});
  CHECK(v.provenance == Provenance::vflip);

  // flips are involutions and commute with each other
  CHECK(flip(h, FlipAxis::horizontal).pixels.data == s.pixels.data);
  CHECK(flip(v, FlipAxis::vertical).pixels.data == s.pixels.data);
  CHECK(flip(h, FlipAxis::vertical).pixels.data ==
        flip(v, FlipAxis::horizontal).pixels.data);
}

TEST_CASE("ingest walks no/ then yes/ in sorted order") {
  const fs::path root = testutil::make_bmp_dataset("ingest", 3, 2);
  IngestReport report;
  const LabeledDataset data = ingest_directory(root.string(), 8, &report);
  REQUIRE(data.size() == 5);
  CHECK(report.total == 5);
  CHECK(report.counts.negatives == 3);
  CHECK(report.counts.positives == 2);
  CHECK(report.skipped.empty());
  CHECK(data.resolution() == 8);
  const auto counts = data.class_counts();
  CHECK(counts.negatives == 3);
  CHECK(counts.positives == 2);
  for (size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples[i];
    CHECK(s.label == (i < 3 ? 0 : 1));
    CHECK(s.provenance == Provenance::original);
    CHECK(s.pixels.h == 8);
    CHECK(s.pixels.w == 8);
    for (const float v : s.pixels.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  // sorted file order inside each class
  CHECK(data.samples[0].source_id < data.samples[1].source_id);
  CHECK(data.samples[1].source_id < data.samples[2].source_id);
  CHECK(data.samples[0].source_id.find("no") != std::string::npos);
  CHECK(data.samples[3].source_id.find("yes") != std::string::npos);

  // byte-for-byte repeatable
  const LabeledDataset again = ingest_directory(root.string(), 8);
  REQUIRE(again.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(again.samples[i].pixels.data == data.samples[i].pixels.data);
    CHECK(again.samples[i].source_id == data.samples[i].source_id);
  }
}

TEST_CASE("ingest errors and skip handling") {
  const auto empty_root = testutil::make_temp_dir("ingest-missing");
  CHECK_THROWS_AS(ingest_directory(empty_root.string(), 8), IngestError);
  CHECK_THROWS_AS(ingest_directory((empty_root / "nope").string(), 8),
                  IngestError);
  CHECK_THROWS_AS(ingest_directory(empty_root.string(), 0), ConfigError);

  // both class dirs present but empty: legal, zero samples
  fs::create_directories(empty_root / "no");
  fs::create_directories(empty_root / "yes");
  IngestReport report;
  const LabeledDataset none =
      ingest_directory(empty_root.string(), 8, &report);
  CHECK(none.size() == 0);
  CHECK(report.total == 0);

  // a corrupt file is skipped and reported, the rest load
  const fs::path root = testutil::make_bmp_dataset("ingest-skip", 2, 1);
  {
    std::ofstream f(root / "no" / "broken.png", std::ios::binary);
    f << "garbage";
  }
  IngestReport skip_report;
  const LabeledDataset data =
      ingest_directory(root.string(), 8, &skip_report);
  CHECK(data.size() == 3);
  REQUIRE(skip_report.skipped.size() == 1);
  CHECK(skip_report.skipped[0].find("broken.png") != std::string::npos);
  // non-image extensions are not picked up at all
  {
    std::ofstream f(root / "no" / "notes.txt");
    f << "not a scan";
  }
  CHECK(ingest_directory(root.string(), 8).size() == 3);
}

TEST_CASE("augment triples each class with flip provenance") {
  const fs::path root = testutil::make_bmp_dataset("augment", 3, 2);
  const LabeledDataset base = ingest_directory(root.string(), 8);
  const LabeledDataset aug = augment(base);
  REQUIRE(aug.size() == 15);
  const auto counts = aug.class_counts();
  CHECK(counts.negatives == 9);
  CHECK(counts.positives == 6);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(aug.samples[i].provenance == Provenance::original);
    CHECK(aug.samples[5 + i].provenance == Provenance::hflip);
    CHECK(aug.samples[10 + i].provenance == Provenance::vflip);
    CHECK(aug.samples[5 + i].source_id == aug.samples[i].source_id);
    CHECK(aug.samples[5 + i].label == aug.samples[i].label);
    CHECK(aug.samples[10 + i].label == aug.samples[i].label);
    // flipped copies really are the flip of the original
    CHECK(aug.samples[5 + i].pixels.data ==
          flip(aug.samples[i], FlipAxis::horizontal).pixels.data);
    CHECK(aug.samples[10 + i].pixels.data ==
          flip(aug.samples[i], FlipAxis::vertical).pixels.data);
  }
}

namespace {

// tiny 2x2 dataset straight in memory, no files involved
LabeledDataset make_synthetic(int count) {
  LabeledDataset data;
  for (int i = 0; i < count; ++i) {
    LabeledSample s;
    s.pixels = Tensor4(1, 1, 2, 2);
    for (auto& v : s.pixels.data) v = static_cast<float>(i) / count;
    s.label = i % 2;
    s.source_id = "mem-" + std::to_string(i);
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace

TEST_CASE("batch iterator covers each epoch exactly once") {
  const LabeledDataset data = make_synthetic(253);
  BatchIterator it(data, 15, 99);
  CHECK(it.batches_per_epoch() == 17);  // ceil(253 / 15)

  it.start_epoch(1);
  Batch b;
  std::set<size_t> seen;
  int batches = 0;
  size_t last_size = 0;
  while (it.next(b)) {
    ++batches;
    last_size = b.indices.size();
    REQUIRE(b.pixels.n == static_cast<int>(b.labels.size()));
    for (size_t i = 0; i < b.indices.size(); ++i) {
      CHECK(seen.insert(b.indices[i]).second);  // no repeats in an epoch
      CHECK(b.labels[i] == data.samples[b.indices[i]].label);
    }
  }
  CHECK(batches == 17);
  CHECK(last_size == 13);  // 253 = 16 * 15 + 13
  CHECK(seen.size() == 253);

  const LabeledDataset big = make_synthetic(3000);
  BatchIterator even(big, 15, 99);
  CHECK(even.batches_per_epoch() == 200);
}

TEST_CASE("batch order depends only on seed and epoch") {
  const LabeledDataset data = make_synthetic(40);
  auto epoch_order = [&data](uint64_t seed, int epoch) {
    BatchIterator it(data, 7, seed);
    it.start_epoch(epoch);
    std::vector<size_t> order;
    Batch b;
    while (it.next(b)) {
      order.insert(order.end(), b.indices.begin(), b.indices.end());
    }
    return order;
  };
  CHECK(epoch_order(1, 2) == epoch_order(1, 2));
  CHECK(epoch_order(1, 2) != epoch_order(1, 3));
  CHECK(epoch_order(1, 2) != epoch_order(2, 2));
  // every epoch is a permutation of the full index range
  auto sorted = epoch_order(5, 0);
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);

  CHECK_THROWS_AS(BatchIterator(data, 0, 1), ConfigError);
}

TEST_CASE("gather_batch stacks rows and validates shape agreement") {
  const LabeledDataset data = make_synthetic(5);
  const Batch b = gather_batch(data, {4, 0, 2});
  CHECK(b.pixels.n == 3);
  CHECK(b.pixels.h == 2);
  CHECK(b.labels == std::vector<int>{0, 0, 0});
  CHECK(b.pixels.data[0] == data.samples[4].pixels.data[0]);
  CHECK_THROWS_AS(gather_batch(data, {}), ShapeError);

  LabeledDataset ragged = data;
  ragged.samples[1].pixels = Tensor4(1, 1, 3, 3);
  CHECK_THROWS_AS(gather_batch(ragged, {0, 1}), ShapeError);
}
