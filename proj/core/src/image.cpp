#include "cortex/data/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include "cortex/error.hpp"
#include "cortex/parallel.hpp"

namespace cortex::data {
namespace {

bool looks_png(std::span<const std::uint8_t> b) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool looks_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 2 && b[0] == 0xff && b[1] == 0xd8;
}

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
  const char* error;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + n > st->size) {
    st->error = "truncated PNG payload";
    png_error(png, st->error);
  }
  std::memcpy(out, st->data + st->pos, n);
  st->pos += n;
}

void png_error_cb(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  if (st && !st->error) st->error = msg;
  longjmp(png_jmpbuf(png), 1);
}

void png_warn_cb(png_structp, png_const_charp) {}

ImageU8 decode_png(std::span<const std::uint8_t> bytes, const std::string& context) {
  PngReadState st{bytes.data(), bytes.size(), 0, nullptr};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_error_cb, png_warn_cb);
  if (!png) throw IoError(context + ": cannot initialize PNG decoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError(context + ": cannot initialize PNG decoder");
  }

  ImageU8 img;
  std::vector<png_bytep> rows;
  bool unsupported_depth = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(context + ": " + (st.error ? st.error : "PNG decode failed"));
  }

  png_set_read_fn(png, &st, png_read_cb);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    unsupported_depth = true;
    st.error = "unsupported bit depth 16";
    longjmp(png_jmpbuf(png), 1);
  }
  (void)unsupported_depth;

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16) {
    st.error = "implausible image dimensions";
    longjmp(png_jmpbuf(png), 1);
  }
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
    st.error = "unexpected PNG row layout after transforms";
    longjmp(png_jmpbuf(png), 1);
  }

  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = img.rgb.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  longjmp(err->jump, 1);
}

ImageU8 decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& context) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.message[0] = '\0';

  ImageU8 img;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(context + ": " + (jerr.message[0] ? jerr.message : "JPEG decode failed"));
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;  // grayscale sources are upconverted
  jpeg_start_decompress(&cinfo);

  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  if (img.width <= 0 || img.height <= 0 || cinfo.output_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(context + ": unsupported JPEG layout");
  }
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

ImageU8 decode_image(std::span<const std::uint8_t> bytes, const std::string& context) {
  if (looks_png(bytes)) return decode_png(bytes, context);
  if (looks_jpeg(bytes)) return decode_jpeg(bytes, context);
  throw IoError(context + ": not a PNG or JPEG payload");
}

ImageU8 load_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IoError(path + ": empty file");
  return decode_image(bytes, path);
}

std::vector<std::uint8_t> encode_png(const ImageU8& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw ValidationError("encode_png: malformed image buffer");

  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("cannot initialize PNG encoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("cannot initialize PNG encoder");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed");
  }

  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        v->insert(v->end(), data, data + n);
      },
      [](png_structp) {});

  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageU8 resize_bilinear(const ImageU8& src, int target_height, int target_width) {
  if (src.height < 1 || src.width < 1)
    throw ValidationError("resize: source must be at least 1x1");
  if (target_height < 1 || target_width < 1)
    throw ValidationError("resize: target must be at least 1x1");

  ImageU8 dst;
  dst.height = target_height;
  dst.width = target_width;
  dst.rgb.resize(static_cast<std::size_t>(target_height) * target_width * 3);

  const double sy = static_cast<double>(src.height) / target_height;
  const double sx = static_cast<double>(src.width) / target_width;

  parallel_for(target_height, [&](std::int64_t yb, std::int64_t ye) {
    for (std::int64_t y = yb; y < ye; ++y) {
      // Half-pixel centers: source coord of dst pixel center.
      const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
      std::int64_t y0 = static_cast<std::int64_t>(std::floor(fy));
      double wy = fy - static_cast<double>(y0);
      std::int64_t y1 = y0 + 1;
      y0 = std::clamp<std::int64_t>(y0, 0, src.height - 1);
      y1 = std::clamp<std::int64_t>(y1, 0, src.height - 1);
      for (int x = 0; x < target_width; ++x) {
        const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
        std::int64_t x0 = static_cast<std::int64_t>(std::floor(fx));
        double wx = fx - static_cast<double>(x0);
        std::int64_t x1 = x0 + 1;
        x0 = std::clamp<std::int64_t>(x0, 0, src.width - 1);
        x1 = std::clamp<std::int64_t>(x1, 0, src.width - 1);
        for (int c = 0; c < 3; ++c) {
          const double v00 = src.at(static_cast<int>(y0), static_cast<int>(x0), c);
          const double v01 = src.at(static_cast<int>(y0), static_cast<int>(x1), c);
          const double v10 = src.at(static_cast<int>(y1), static_cast<int>(x0), c);
          const double v11 = src.at(static_cast<int>(y1), static_cast<int>(x1), c);
          const double top = v00 + (v01 - v00) * wx;
          const double bot = v10 + (v11 - v10) * wx;
          const double val = top + (bot - top) * wy;
          dst.rgb[static_cast<std::size_t>((y * target_width + x) * 3 + c)] =
              static_cast<std::uint8_t>(std::clamp(std::lround(val), 0l, 255l));
        }
      }
    }
  });
  return dst;
}

TensorF normalize(const ImageU8& img) {
  TensorF out(Shape{3, img.height, img.width});
  float* p = out.data().data();
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        p[c * plane + y * img.width + x] =
            static_cast<float>(img.at(y, x, c)) / 255.0f;
  return out;
}

ImageU8 denormalize(const TensorF& chw) {
  if (chw.shape().rank() != 3 || chw.shape().extent(0) != 3)
    throw ShapeError("denormalize expects [3,H,W], got " + chw.shape().str());
  ImageU8 img;
  img.height = static_cast<int>(chw.shape().extent(1));
  img.width = static_cast<int>(chw.shape().extent(2));
  img.rgb.resize(static_cast<std::size_t>(img.height) * img.width * 3);
  const float* p = chw.data().data();
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(p[c * plane + y * img.width + x], 0.0f, 1.0f);
        img.rgb[static_cast<std::size_t>((y * img.width + x) * 3 + c)] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  return img;
}

}  // namespace cortex::data
