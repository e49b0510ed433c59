#include "scbnet/image_io.hpp"

#include <opencv2/imgcodecs.hpp>

namespace scbnet {

DecodedImage decode_image_file(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_COLOR);
  if (mat.empty()) {
    throw DecodeError("cannot decode image file '" + path + "'");
  }
  DecodedImage img;
  img.h = mat.rows;
  img.w = mat.cols;
  img.rgb.resize(static_cast<size_t>(img.h) * img.w * 3);
  for (int y = 0; y < img.h; ++y) {
    const uint8_t* row = mat.ptr<uint8_t>(y);  // BGR interleaved
    uint8_t* dst = img.rgb.data() + static_cast<size_t>(y) * img.w * 3;
    for (int x = 0; x < img.w; ++x) {
      dst[3 * x + 0] = row[3 * x + 2];
      dst[3 * x + 1] = row[3 * x + 1];
      dst[3 * x + 2] = row[3 * x + 0];
    }
  }
  return img;
}

GrayImage to_grayscale(const DecodedImage& img) {
  GrayImage out;
  out.h = img.h;
  out.w = img.w;
  out.pixels.resize(static_cast<size_t>(img.h) * img.w);
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] =
        to_grayscale(img.rgb[3 * i], img.rgb[3 * i + 1], img.rgb[3 * i + 2]);
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w) {
  if (img.h < 1 || img.w < 1) {
    throw ShapeError("resize source image is empty");
  }
  if (out_h < 1 || out_w < 1) {
    throw ConfigError("resize target must be at least 1x1, got " +
                      std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  GrayImage out;
  out.h = out_h;
  out.w = out_w;
  out.pixels.resize(static_cast<size_t>(out_h) * out_w);
  const float sy = static_cast<float>(img.h) / out_h;
  const float sx = static_cast<float>(img.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    float fy = (y + 0.5f) * sy - 0.5f;
    if (fy < 0.0f) fy = 0.0f;
    int y0 = static_cast<int>(fy);
    if (y0 > img.h - 1) y0 = img.h - 1;
    const int y1 = std::min(y0 + 1, img.h - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      float fx = (x + 0.5f) * sx - 0.5f;
      if (fx < 0.0f) fx = 0.0f;
      int x0 = static_cast<int>(fx);
      if (x0 > img.w - 1) x0 = img.w - 1;
      const int x1 = std::min(x0 + 1, img.w - 1);
      const float wx = fx - x0;
      const auto px = [&img](int yy, int xx) {
        return img.pixels[static_cast<size_t>(yy) * img.w + xx];
      };
      const float top = px(y0, x0) + wx * (px(y0, x1) - px(y0, x0));
      const float bot = px(y1, x0) + wx * (px(y1, x1) - px(y1, x0));
      out.pixels[static_cast<size_t>(y) * out_w + x] = top + wy * (bot - top);
    }
  }
  return out;
}

}  // namespace scbnet
