#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "glcnet/error.hpp"
#include "glcnet/image.hpp"

namespace glcnet {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

bool is_png(const fs::path& p) { return lower_ext(p) == ".png"; }
bool is_tiff(const fs::path& p) {
  const auto e = lower_ext(p);
  return e == ".tif" || e == ".tiff";
}

struct TiffCloser {
  void operator()(TIFF* t) const {
    if (t) TIFFClose(t);
  }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

// Interleaved 8-bit buffer read through the libpng simplified API.
std::vector<uint8_t> read_png_u8(const fs::path& path, int& channels, int& height, int& width) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format &= ~(PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_COLORMAP);
  channels = static_cast<int>(PNG_IMAGE_SAMPLE_CHANNELS(img.format));
  height = static_cast<int>(img.height);
  width = static_cast<int>(img.width);
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return buf;
}

void write_png_u8(const fs::path& path, const uint8_t* interleaved, int channels, int height,
                  int width) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  switch (channels) {
    case 1: img.format = PNG_FORMAT_GRAY; break;
    case 2: img.format = PNG_FORMAT_GA; break;
    case 3: img.format = PNG_FORMAT_RGB; break;
    case 4: img.format = PNG_FORMAT_RGBA; break;
    default: throw InvalidArgument("PNG supports 1-4 bands, got " + std::to_string(channels));
  }
  if (!png_image_write_to_file(&img, path.c_str(), 0, interleaved, 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

// Reads any stripped or tiled TIFF into planar doubles scaled to [0, 1] for
// integer samples (floating-point samples are passed through).
std::vector<double> read_tiff(const fs::path& path, int& channels, int& height, int& width,
                              int& bits) {
  TiffPtr tif(TIFFOpen(path.c_str(), "r"));
  if (!tif) throw IoError("cannot open TIFF " + path.string());
  uint32_t w = 0, h = 0;
  uint16_t spp = 1, bps = 8, planar = PLANARCONFIG_CONTIG, fmt = SAMPLEFORMAT_UINT;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &fmt);
  if (bps != 8 && bps != 16 && bps != 32) {
    throw FormatError("unsupported TIFF bit depth " + std::to_string(bps) + " in " + path.string());
  }
  channels = spp;
  height = static_cast<int>(h);
  width = static_cast<int>(w);
  bits = bps;
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> out(plane * spp);

  auto decode = [&](const uint8_t* p) -> double {
    if (bps == 8) return fmt == SAMPLEFORMAT_INT ? *reinterpret_cast<const int8_t*>(p) / 127.0 : *p / 255.0;
    if (bps == 16) {
      uint16_t v;
      std::memcpy(&v, p, 2);
      return fmt == SAMPLEFORMAT_INT ? static_cast<int16_t>(v) / 32767.0 : v / 65535.0;
    }
    if (fmt == SAMPLEFORMAT_IEEEFP) {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v / 4294967295.0;
  };
  const int bytes = bps / 8;
  const int samples_in_buf = planar == PLANARCONFIG_CONTIG ? spp : 1;
  const int plane_count = planar == PLANARCONFIG_CONTIG ? 1 : spp;

  if (TIFFIsTiled(tif.get())) {
    uint32_t tw = 0, th = 0;
    TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tw);
    TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &th);
    std::vector<uint8_t> buf(TIFFTileSize(tif.get()));
    for (int s = 0; s < plane_count; ++s) {
      for (uint32_t ty = 0; ty < h; ty += th) {
        for (uint32_t tx = 0; tx < w; tx += tw) {
          if (TIFFReadTile(tif.get(), buf.data(), tx, ty, 0, static_cast<uint16_t>(s)) < 0) {
            throw IoError("TIFF tile read failed in " + path.string());
          }
          for (uint32_t y = 0; y < th && ty + y < h; ++y) {
            for (uint32_t x = 0; x < tw && tx + x < w; ++x) {
              for (int k = 0; k < samples_in_buf; ++k) {
                const size_t src = ((static_cast<size_t>(y) * tw + x) * samples_in_buf + k) * bytes;
                const int c = planar == PLANARCONFIG_CONTIG ? k : s;
                out[c * plane + static_cast<size_t>(ty + y) * w + tx + x] = decode(&buf[src]);
              }
            }
          }
        }
      }
    }
  } else {
    std::vector<uint8_t> buf(TIFFScanlineSize(tif.get()));
    for (int s = 0; s < plane_count; ++s) {
      for (uint32_t y = 0; y < h; ++y) {
        if (TIFFReadScanline(tif.get(), buf.data(), y, static_cast<uint16_t>(s)) < 0) {
          throw IoError("TIFF scanline read failed in " + path.string());
        }
        for (uint32_t x = 0; x < w; ++x) {
          for (int k = 0; k < samples_in_buf; ++k) {
            const int c = planar == PLANARCONFIG_CONTIG ? k : s;
            out[c * plane + static_cast<size_t>(y) * w + x] =
                decode(&buf[(static_cast<size_t>(x) * samples_in_buf + k) * bytes]);
          }
        }
      }
    }
  }
  return out;
}

void write_tiff(const fs::path& path, const std::vector<uint8_t>& interleaved, int channels,
                int height, int width, int bits) {
  TiffPtr tif(TIFFOpen(path.c_str(), "w"));
  if (!tif) throw IoError("cannot create TIFF " + path.string());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<uint32_t>(width));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<uint32_t>(height));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<uint16_t>(channels));
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast<uint16_t>(bits));
  TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_UINT);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_ADOBE_DEFLATE);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  if (channels > 1) {
    std::vector<uint16_t> extra(static_cast<size_t>(channels - 1), EXTRASAMPLE_UNSPECIFIED);
    TIFFSetField(tif.get(), TIFFTAG_EXTRASAMPLES, static_cast<uint16_t>(extra.size()), extra.data());
  }
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(tif.get(), 0));
  const size_t row_bytes = static_cast<size_t>(width) * channels * (bits / 8);
  std::vector<uint8_t> row(row_bytes);
  for (int y = 0; y < height; ++y) {
    std::memcpy(row.data(), interleaved.data() + y * row_bytes, row_bytes);
    if (TIFFWriteScanline(tif.get(), row.data(), static_cast<uint32_t>(y), 0) < 0) {
      throw IoError("TIFF write failed for " + path.string());
    }
  }
}

}  // namespace

uint8_t quantize_u8(float v) {
  const float c = std::clamp(v, 0.f, 1.f);
  return static_cast<uint8_t>(std::lround(c * 255.f));
}

Image quantized(const Image& image) {
  Image out = image;
  for (float& v : out.data) v = quantize_u8(v) / 255.f;
  return out;
}

bool is_image_file(const fs::path& path) { return is_png(path) || is_tiff(path); }

Image read_image(const fs::path& path) {
  if (is_png(path)) {
    int c = 0, h = 0, w = 0;
    auto buf = read_png_u8(path, c, h, w);
    Image img(c, h, w);
    const size_t plane = img.plane();
    for (size_t i = 0; i < plane; ++i) {
      for (int k = 0; k < c; ++k) img.data[k * plane + i] = buf[i * c + k] / 255.f;
    }
    return img;
  }
  if (is_tiff(path)) {
    int c = 0, h = 0, w = 0, bits = 0;
    auto planar = read_tiff(path, c, h, w, bits);
    Image img(c, h, w);
    std::transform(planar.begin(), planar.end(), img.data.begin(),
                   [](double v) { return static_cast<float>(v); });
    return img;
  }
  throw FormatError("unsupported image format: " + path.string());
}

void write_image(const fs::path& path, const Image& image) {
  const size_t plane = image.plane();
  std::vector<uint8_t> buf(plane * image.channels);
  for (size_t i = 0; i < plane; ++i) {
    for (int k = 0; k < image.channels; ++k) buf[i * image.channels + k] = quantize_u8(image.data[k * plane + i]);
  }
  if (is_png(path)) {
    write_png_u8(path, buf.data(), image.channels, image.height, image.width);
  } else if (is_tiff(path)) {
    write_tiff(path, buf, image.channels, image.height, image.width, 8);
  } else {
    throw FormatError("unsupported image format: " + path.string());
  }
}

LabelMap read_label_map(const fs::path& path) {
  LabelMap mask;
  if (is_png(path)) {
    int c = 0;
    auto buf = read_png_u8(path, c, mask.height, mask.width);
    if (c != 1) throw FormatError("label PNG must be single-channel: " + path.string());
    mask.data.assign(buf.begin(), buf.end());
    return mask;
  }
  if (is_tiff(path)) {
    int c = 0, bits = 0;
    auto planar = read_tiff(path, c, mask.height, mask.width, bits);
    if (c != 1) throw FormatError("label TIFF must be single-channel: " + path.string());
    const double scale = bits == 8 ? 255.0 : bits == 16 ? 65535.0 : 1.0;
    mask.data.resize(planar.size());
    for (size_t i = 0; i < planar.size(); ++i) mask.data[i] = static_cast<int32_t>(std::lround(planar[i] * scale));
    return mask;
  }
  throw FormatError("unsupported label format: " + path.string());
}

void write_label_map(const fs::path& path, const LabelMap& mask) {
  if (is_png(path)) {
    std::vector<uint8_t> buf(mask.data.size());
    for (size_t i = 0; i < buf.size(); ++i) {
      if (mask.data[i] < 0 || mask.data[i] > 255) throw InvalidArgument("class id does not fit a PNG label map");
      buf[i] = static_cast<uint8_t>(mask.data[i]);
    }
    write_png_u8(path, buf.data(), 1, mask.height, mask.width);
    return;
  }
  if (is_tiff(path)) {
    std::vector<uint8_t> buf(mask.data.size() * 2);
    for (size_t i = 0; i < mask.data.size(); ++i) {
      if (mask.data[i] < 0 || mask.data[i] > 65535) throw InvalidArgument("class id does not fit a TIFF label map");
      const auto v = static_cast<uint16_t>(mask.data[i]);
      std::memcpy(&buf[i * 2], &v, 2);
    }
    write_tiff(path, buf, 1, mask.height, mask.width, 16);
    return;
  }
  throw FormatError("unsupported label format: " + path.string());
}

}  // namespace glcnet
