#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dfx/tensor.hpp"

namespace dfx::data {

// Interleaved 8-bit RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

// PNG or baseline JPEG, dispatched on the file's magic bytes.
// Throws UnreadableImage on anything that does not decode.
Image load_image(const std::filesystem::path& p);

// Header-only dimension probe; throws UnreadableImage.
std::pair<int, int> probe_dimensions(const std::filesystem::path& p);

void save_png(const Image& img, const std::filesystem::path& p);

// Baseline sequential JPEG, libjpeg defaults (4:2:0 chroma subsampling,
// Annex-K tables scaled by the quality factor). quality in [1,100].
void save_jpeg(const Image& img, const std::filesystem::path& p, int quality);

Image resize_bilinear(const Image& img, int out_w, int out_h);

// (3,H,W) tensor with values in [0,1], channel-major RGB.
nn::Tensor image_to_tensor(const Image& img);

// Load + resize to size x size + normalize; the standard model input path.
nn::Tensor load_input_tensor(const std::filesystem::path& p, int size);

}  // namespace dfx::data
