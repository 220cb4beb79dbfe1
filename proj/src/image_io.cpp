#include "semkit/image_io.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace semkit {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Interleaved samples as read from disk, normalized to native-endian 8 or 16 bit.
struct RawRaster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int bit_depth = 0;
  int channels = 0;
  int colour_channels = 0;  // channels that participate in the grey mean
  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> row_ptrs;
};

enum class FileKind { Png, Tiff, Unknown };

FileKind sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  if (in.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0) return FileKind::Png;
  if (in.gcount() >= 4 && ((sig[0] == 'I' && sig[1] == 'I' && sig[2] == 42 && sig[3] == 0) ||
                           (sig[0] == 'M' && sig[1] == 'M' && sig[2] == 0 && sig[3] == 42))) {
    return FileKind::Tiff;
  }
  return FileKind::Unknown;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

// Only trivially destructible locals live in this frame because of setjmp.
bool read_png_raw(std::FILE* fp, RawRaster& out, std::string& err) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) {
    err = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    err = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const int colour_type = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (colour_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    depth = 8;
  } else if (depth != 8 && depth != 16) {
    err = "unsupported bit depth " + std::to_string(depth);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.bit_depth = depth;
  out.channels = png_get_channels(png, info);
  out.colour_channels = (out.channels >= 3) ? 3 : 1;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * out.height);
  out.row_ptrs.resize(out.height);
  for (std::uint32_t r = 0; r < out.height; ++r) out.row_ptrs[r] = out.bytes.data() + r * rowbytes;
  png_read_image(png, out.row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawRaster read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  RawRaster raw;
  std::string err;
  if (!read_png_raw(fp.get(), raw, err)) throw FormatError(path.string() + ": " + err);
  return raw;
}

struct TiffCloser {
  void operator()(TIFF* t) const { TIFFClose(t); }
};

RawRaster read_tiff(const std::filesystem::path& path) {
  TIFFSetErrorHandler(nullptr);
  TIFFSetWarningHandler(nullptr);
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "r"));
  if (!tif) throw FormatError("cannot decode TIFF " + path.string());

  std::uint32_t w = 0, h = 0;
  std::uint16_t bps = 0, spp = 1, planar = PLANARCONFIG_CONTIG, fmt = SAMPLEFORMAT_UINT;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &fmt);
  if (bps != 8 && bps != 16) throw FormatError("unsupported bit depth " + std::to_string(bps));
  if (fmt != SAMPLEFORMAT_UINT) throw FormatError("only unsigned integer TIFF samples are supported");
  if (spp > 1 && planar != PLANARCONFIG_CONTIG) throw FormatError("planar TIFF layout not supported");
  if (TIFFIsTiled(tif.get())) throw FormatError("tiled TIFF layout not supported");

  RawRaster raw;
  raw.width = w;
  raw.height = h;
  raw.bit_depth = bps;
  raw.channels = spp;
  raw.colour_channels = spp >= 3 ? 3 : 1;
  const std::size_t rowbytes = static_cast<std::size_t>(w) * spp * (bps / 8);
  if (static_cast<std::size_t>(TIFFScanlineSize(tif.get())) != rowbytes) {
    throw FormatError("unexpected TIFF scanline size");
  }
  raw.bytes.resize(rowbytes * h);
  for (std::uint32_t r = 0; r < h; ++r) {
    if (TIFFReadScanline(tif.get(), raw.bytes.data() + r * rowbytes, r) < 0) {
      throw FormatError("failed reading TIFF row " + std::to_string(r));
    }
  }
  return raw;
}

Image to_image(const RawRaster& raw) {
  if (raw.width == 0 || raw.height == 0) throw FormatError("empty image");
  const double max_code = raw.bit_depth == 16 ? 65535.0 : 255.0;
  Image img(raw.height, raw.width);
  const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels;
  for (std::uint32_t r = 0; r < raw.height; ++r) {
    for (std::uint32_t c = 0; c < raw.width; ++c) {
      double sum = 0.0;
      for (int ch = 0; ch < raw.colour_channels; ++ch) {
        const std::size_t idx = r * stride + static_cast<std::size_t>(c) * raw.channels + ch;
        if (raw.bit_depth == 16) {
          std::uint16_t v;
          std::memcpy(&v, raw.bytes.data() + 2 * idx, 2);
          sum += v;
        } else {
          sum += raw.bytes[idx];
        }
      }
      img(r, c) = sum / (raw.colour_channels * max_code);
    }
  }
  return img;
}

std::vector<std::uint8_t> quantize_rows(const Image& img, int bit_depth) {
  const std::size_t bytes_per = bit_depth == 16 ? 2 : 1;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(img.size()) * bytes_per);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const std::uint32_t code = quantize(img.data()[i], bit_depth);
    if (bit_depth == 16) {
      const auto v = static_cast<std::uint16_t>(code);
      std::memcpy(out.data() + 2 * i, &v, 2);
    } else {
      out[i] = static_cast<std::uint8_t>(code);
    }
  }
  return out;
}

bool write_png_raw(std::FILE* fp, const Image& img, int bit_depth, std::vector<std::uint8_t>& buf,
                   std::string& err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) {
    err = "png_create_write_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    err = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols()), static_cast<png_uint_32>(img.rows()),
               bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  const std::size_t rowbytes = static_cast<std::size_t>(img.cols()) * (bit_depth / 8);
  for (Eigen::Index r = 0; r < img.rows(); ++r) png_write_row(png, buf.data() + r * rowbytes);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const Image& img, const std::filesystem::path& path, int bit_depth) {
  auto buf = quantize_rows(img, bit_depth);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());
  std::string err;
  if (!write_png_raw(fp.get(), img, bit_depth, buf, err)) throw IoError(path.string() + ": " + err);
  if (std::fflush(fp.get()) != 0) throw IoError("cannot write " + path.string());
}

void write_tiff(const Image& img, const std::filesystem::path& path, int bit_depth) {
  auto buf = quantize_rows(img, bit_depth);
  TIFFSetErrorHandler(nullptr);
  TIFFSetWarningHandler(nullptr);
  std::unique_ptr<TIFF, TiffCloser> tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) throw IoError("cannot write " + path.string());
  const auto w = static_cast<std::uint32_t>(img.cols());
  const auto h = static_cast<std::uint32_t>(img.rows());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, w);
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, h);
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(bit_depth));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(1));
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(tif.get(), 0));
  const std::size_t rowbytes = static_cast<std::size_t>(w) * (bit_depth / 8);
  for (std::uint32_t r = 0; r < h; ++r) {
    if (TIFFWriteScanline(tif.get(), buf.data() + r * rowbytes, r, 0) < 0) {
      throw IoError("failed writing TIFF row " + std::to_string(r));
    }
  }
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::uint32_t quantize(double value, int bit_depth) {
  const double max_code = bit_depth == 16 ? 65535.0 : 255.0;
  const double v = std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0;
  return static_cast<std::uint32_t>(std::floor(v * max_code + 0.5));
}

Image load_image(const std::filesystem::path& path) {
  switch (sniff(path)) {
    case FileKind::Png:
      return to_image(read_png(path));
    case FileKind::Tiff:
      return to_image(read_tiff(path));
    case FileKind::Unknown:
      break;
  }
  throw FormatError("unrecognized image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ArgumentError("bit depth must be 8 or 16");
  if (img.size() == 0) throw ArgumentError("cannot save an empty image");
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(img, path, bit_depth);
  } else if (ext == ".tif" || ext == ".tiff") {
    write_tiff(img, path, bit_depth);
  } else {
    throw ArgumentError("unsupported output extension '" + ext + "'");
  }
}

Image bottom_crop(const Image& img, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ArgumentError("crop fraction must lie in [0,1)");
  const auto removed = static_cast<Eigen::Index>(std::floor(static_cast<double>(img.rows()) * fraction));
  if (removed >= img.rows()) throw ArgumentError("crop would remove every row");
  return img.topRows(img.rows() - removed);
}

}  // namespace semkit
