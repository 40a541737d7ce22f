#include "dfx/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "dfx/error.hpp"

namespace dfx::data {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& p, const char* mode) {
  FilePtr f(std::fopen(p.c_str(), mode));
  return f;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {0};
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

enum class Magic { Png, Jpeg, Unknown };

Magic sniff_magic(std::FILE* f) {
  unsigned char sig[8] = {0};
  std::size_t n = std::fread(sig, 1, sizeof(sig), f);
  std::rewind(f);
  if (n >= 8 && png_sig_cmp(sig, 0, 8) == 0) return Magic::Png;
  if (n >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return Magic::Jpeg;
  return Magic::Unknown;
}

Image decode_jpeg(std::FILE* f, const std::string& name, bool header_only, int* w, int* h) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  Image img;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw UnreadableImage(name + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  if (header_only) {
    *w = static_cast<int>(cinfo.image_width);
    *h = static_cast<int>(cinfo.image_height);
    jpeg_destroy_decompress(&cinfo);
    return img;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.rgb.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

Image decode_png(std::FILE* f, const std::string& name, bool header_only, int* w, int* h) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw UnreadableImage(name + ": png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw UnreadableImage(name + ": png init failed");
  }
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw UnreadableImage(name + ": png decode failed");
  }
  png_init_io(png, f);
  png_read_info(png, info);
  if (header_only) {
    *w = static_cast<int>(png_get_image_width(png, info));
    *h = static_cast<int>(png_get_image_height(png, info));
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
  }
  // Normalize anything (palette, gray, 16-bit, alpha) to 8-bit RGB.
  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  rows.resize(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = img.rgb.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace

Image load_image(const std::filesystem::path& p) {
  auto f = open_file(p, "rb");
  if (!f) throw UnreadableImage(p.string() + ": cannot open");
  int w = 0, h = 0;
  switch (sniff_magic(f.get())) {
    case Magic::Png: return decode_png(f.get(), p.string(), false, &w, &h);
    case Magic::Jpeg: return decode_jpeg(f.get(), p.string(), false, &w, &h);
    default: throw UnreadableImage(p.string() + ": not a PNG or JPEG file");
  }
}

std::pair<int, int> probe_dimensions(const std::filesystem::path& p) {
  auto f = open_file(p, "rb");
  if (!f) throw UnreadableImage(p.string() + ": cannot open");
  int w = 0, h = 0;
  switch (sniff_magic(f.get())) {
    case Magic::Png: decode_png(f.get(), p.string(), true, &w, &h); break;
    case Magic::Jpeg: decode_jpeg(f.get(), p.string(), true, &w, &h); break;
    default: throw UnreadableImage(p.string() + ": not a PNG or JPEG file");
  }
  return {w, h};
}

void save_png(const Image& img, const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto f = open_file(p, "wb");
  if (!f) throw IoFailure(p.string() + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    throw IoFailure(p.string() + ": png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoFailure(p.string() + ": png encode failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_jpeg(const Image& img, const std::filesystem::path& p, int quality) {
  if (quality < 1 || quality > 100)
    throw EncodeFailure(p.string() + ": quality " + std::to_string(quality) + " outside [1,100]");
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto f = open_file(p, "wb");
  if (!f) throw EncodeFailure(p.string() + ": cannot open for writing");
  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw EncodeFailure(p.string() + ": " + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f.get());
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE /* baseline */);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(img.rgb.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (img.width <= 0 || img.height <= 0) throw ShapeMismatch("resize of empty image");
  if (out_w <= 0 || out_h <= 0) throw ShapeMismatch("resize to non-positive size");
  if (out_w == img.width && out_h == img.height) return img;
  Image out;
  out.width = out_w;
  out.height = out_h;
  out.rgb.resize(static_cast<std::size_t>(out_w) * out_h * 3);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    // Pixel-center alignment.
    double fy = (oy + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = std::min(y0 + 1, img.height - 1);
    y0 = std::max(y0, 0);
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = std::min(x0 + 1, img.width - 1);
      x0 = std::max(x0, 0);
      const std::uint8_t* p00 = img.pixel(x0, y0);
      const std::uint8_t* p10 = img.pixel(x1, y0);
      const std::uint8_t* p01 = img.pixel(x0, y1);
      const std::uint8_t* p11 = img.pixel(x1, y1);
      std::uint8_t* dst = out.pixel(ox, oy);
      for (int c = 0; c < 3; ++c) {
        double v = (1 - wy) * ((1 - wx) * p00[c] + wx * p10[c]) +
                   wy * ((1 - wx) * p01[c] + wx * p11[c]);
        dst[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

nn::Tensor image_to_tensor(const Image& img) {
  const std::size_t hw = static_cast<std::size_t>(img.width) * img.height;
  nn::Tensor t({3, static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width)});
  double* d = t.data();
  for (std::size_t i = 0; i < hw; ++i)
    for (std::size_t c = 0; c < 3; ++c) d[c * hw + i] = img.rgb[3 * i + c] / 255.0;
  return t;
}

nn::Tensor load_input_tensor(const std::filesystem::path& p, int size) {
  return image_to_tensor(resize_bilinear(load_image(p), size, size));
}

}  // namespace dfx::data
