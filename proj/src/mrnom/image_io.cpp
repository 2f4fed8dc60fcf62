#include "mrnom/image_io.hpp"

#include <png.h>
#include <tiffio.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace mrnom {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::string& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorCode::Io, "cannot open " + path);
  return f;
}

/// Raw samples of a PNG after palette/low-depth expansion and alpha removal.
struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;
  int depth = 8;
  std::vector<std::uint16_t> samples;
};

PngData read_png(const std::string& path) {
  File f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Internal, "libpng initialisation failed");
  }
  PngData out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "corrupt PNG: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height) *
                        static_cast<std::size_t>(out.channels);
  out.samples.resize(n);
  for (std::size_t y = 0; y < rows.size(); ++y) {
    const std::size_t per_row = n / rows.size();
    for (std::size_t i = 0; i < per_row; ++i) {
      const png_bytep r = rows[y];
      out.samples[y * per_row + i] =
          out.depth == 16 ? static_cast<std::uint16_t>((r[2 * i] << 8) | r[2 * i + 1]) : static_cast<std::uint16_t>(r[i]);
    }
  }
  return out;
}

void write_png_raw(const std::string& path, int width, int height, int channels, int depth, const std::vector<png_byte>& bytes) {
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Internal, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels) * (depth / 8);
  for (std::size_t y = 0; y < rows.size(); ++y) rows[y] = const_cast<png_bytep>(bytes.data() + y * stride);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "cannot write PNG: " + path);
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image8 read_tiff(const std::string& path) {
  TIFFSetWarningHandler(nullptr);
  TIFFSetErrorHandler(nullptr);
  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "r"), TIFFClose);
  if (!tif) fail(ErrorCode::Io, "cannot read TIFF: " + path);
  std::uint32_t w = 0, h = 0;
  std::uint16_t spp = 1;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  std::vector<std::uint32_t> raster(static_cast<std::size_t>(w) * h);
  if (!TIFFReadRGBAImageOriented(tif.get(), w, h, raster.data(), ORIENTATION_TOPLEFT, 0))
    fail(ErrorCode::Io, "cannot decode TIFF: " + path);
  Image8 img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.channels = spp == 1 ? 1 : 3;
  img.pixels.reserve(raster.size() * static_cast<std::size_t>(img.channels));
  for (std::uint32_t p : raster) {
    img.pixels.push_back(static_cast<std::uint8_t>(TIFFGetR(p)));
    if (img.channels == 3) {
      img.pixels.push_back(static_cast<std::uint8_t>(TIFFGetG(p)));
      img.pixels.push_back(static_cast<std::uint8_t>(TIFFGetB(p)));
    }
  }
  return img;
}

}  // namespace

Image8 read_image(const std::string& path) {
  unsigned char sig[8] = {};
  {
    File f = open_file(path, "rb");
    if (std::fread(sig, 1, sizeof sig, f.get()) < 4) fail(ErrorCode::Io, "file too short: " + path);
  }
  if (png_sig_cmp(sig, 0, 8) == 0) {
    const PngData d = read_png(path);
    Image8 img;
    img.width = d.width;
    img.height = d.height;
    img.channels = d.channels >= 3 ? 3 : 1;
    img.pixels.reserve(static_cast<std::size_t>(d.width) * d.height * img.channels);
    const int shift = d.depth == 16 ? 8 : 0;
    for (std::size_t i = 0; i < d.samples.size(); i += static_cast<std::size_t>(d.channels))
      for (int c = 0; c < img.channels; ++c) img.pixels.push_back(static_cast<std::uint8_t>(d.samples[i + c] >> shift));
    return img;
  }
  const bool tiff = (sig[0] == 'I' && sig[1] == 'I' && sig[2] == 42 && sig[3] == 0) ||
                    (sig[0] == 'M' && sig[1] == 'M' && sig[2] == 0 && sig[3] == 42);
  if (tiff) return read_tiff(path);
  fail(ErrorCode::Io, "unsupported image format: " + path);
}

void write_png(const std::string& path, const Image8& img) {
  require(img.channels == 1 || img.channels == 3, ErrorCode::InvalidArgument, "write_png: 1 or 3 channels expected");
  write_png_raw(path, img.width, img.height, img.channels, 8, img.pixels);
}

void write_png(const std::string& path, const Rgb8& img) { write_png_raw(path, img.width, img.height, 3, 8, img.pixels); }

LabelMap read_label_png(const std::string& path) {
  unsigned char sig[8] = {};
  {
    File f = open_file(path, "rb");
    if (std::fread(sig, 1, sizeof sig, f.get()) != sizeof sig || png_sig_cmp(sig, 0, 8) != 0)
      fail(ErrorCode::Io, "not a PNG label map: " + path);
  }
  const PngData d = read_png(path);
  if (d.channels != 1) fail(ErrorCode::Io, "label map must be single-channel: " + path);
  LabelMap lb(d.width, d.height);
  for (std::size_t i = 0; i < lb.size(); ++i) lb[i] = d.samples[i];
  return lb;
}

void write_label_png(const std::string& path, const LabelMap& lb) {
  std::vector<png_byte> bytes(lb.size() * 2);
  for (std::size_t i = 0; i < lb.size(); ++i) {
    if (lb[i] < 0 || lb[i] > 65535) fail(ErrorCode::InvalidArgument, "label out of 16-bit range");
    bytes[2 * i] = static_cast<png_byte>(lb[i] >> 8);
    bytes[2 * i + 1] = static_cast<png_byte>(lb[i] & 0xff);
  }
  write_png_raw(path, lb.width(), lb.height(), 1, 16, bytes);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path);
    out << text;
    if (!out) fail(ErrorCode::Io, "cannot write " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot write " + path + ": " + ec.message());
}

}  // namespace mrnom
