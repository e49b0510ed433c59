#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scbnet/errors.hpp"

namespace scbnet {

// 8-bit image as decoded from disk, interleaved RGB row-major.
struct DecodedImage {
  int h = 0, w = 0;
  std::vector<uint8_t> rgb;
};

// Decodes PNG/JPEG/BMP from a file. Throws DecodeError when the file is
// missing or not a readable image.
DecodedImage decode_image_file(const std::string& path);

// Single-channel image with values in [0,1], row-major.
struct GrayImage {
  int h = 0, w = 0;
  std::vector<float> pixels;
};

// Luminosity weighting (0.299 R + 0.587 G + 0.114 B), scaled by 1/255.
inline float to_grayscale(uint8_t r, uint8_t g, uint8_t b) {
  return (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
}

GrayImage to_grayscale(const DecodedImage& img);

// Bilinear resample under the half-pixel-centers convention:
// source coordinate = (target + 0.5) * in/out - 0.5, edges clamped.
GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w);

}  // namespace scbnet
