#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cortex/tensor.hpp"

namespace cortex::data {

// 8-bit interleaved RGB grid.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // height*width*3, row-major

  std::uint8_t at(int y, int x, int c) const {
    return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
};

// Decodes a PNG or JPEG payload into 8-bit RGB. Grayscale sources are
// replicated across the three channels; palette PNGs are expanded. 16-bit
// PNGs are rejected. Throws IoError with `context` in the message.
ImageU8 decode_image(std::span<const std::uint8_t> bytes, const std::string& context = "image");

// Reads and decodes one file; errors name the path.
ImageU8 load_image_file(const std::string& path);

// Minimal RGB8 PNG encoder (non-interlaced, default compression).
std::vector<std::uint8_t> encode_png(const ImageU8& img);

// Bilinear resampling with half-pixel-center coordinates; resizing to the
// source size reproduces the input exactly.
ImageU8 resize_bilinear(const ImageU8& src, int target_height, int target_width);

// value / 255 into a channels-first [3,H,W] float tensor in [0,1].
TensorF normalize(const ImageU8& img);

// Inverse convenience for writers: clamps to [0,1] and scales by 255.
ImageU8 denormalize(const TensorF& chw);

}  // namespace cortex::data
