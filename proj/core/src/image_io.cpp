#include "batdiff/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "batdiff/error.hpp"

namespace batdiff {
namespace {

using FilePtr = std::unique_ptr<FILE, decltype(&std::fclose)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr fp(std::fopen(path.c_str(), mode), &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string());
  return fp;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

std::uint8_t to_byte(double v) {
  const double scaled = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) {
  throw IoError(std::string("libpng: ") + msg);
}

void png_warning_handler(png_structp, png_const_charp) {}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_handler, png_warning_handler);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  if (info == nullptr) throw IoError("png_create_info_struct failed");

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth != 8 && bit_depth != 16 && color_type != PNG_COLOR_TYPE_PALETTE &&
      !(color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)) {
    throw IoError(path.string() + ": unsupported PNG bit depth " + std::to_string(bit_depth));
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (channels != 1 && channels != 3) {
    throw IoError(path.string() + ": unsupported channel count " + std::to_string(channels));
  }
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  Image img(height, width, channels);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < height; ++y) {
    const png_byte* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t k = static_cast<std::size_t>(x * channels + c);
        const unsigned v = depth == 16 ? (unsigned{row[2 * k]} << 8) | row[2 * k + 1] : row[k];
        img.at(c, y, x) = v / maxval;
      }
    }
  }
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw IoError("PNG export supports 1 or 3 channels");
  }
  FilePtr fp = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_handler, png_warning_handler);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  if (info == nullptr) throw IoError("png_create_info_struct failed");

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(img.width() * img.channels()));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        row[static_cast<std::size_t>(x * img.channels() + c)] = to_byte(img.at(c, y, x));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int pnm_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PNM header");
  }
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError(path.string() + ": unsupported PNM type '" + magic + "'");
  }
  const int width = pnm_int(in, path);
  const int height = pnm_int(in, path);
  const int maxval = pnm_int(in, path);
  if (width < 1 || height < 1) throw IoError(path.string() + ": invalid PNM size");
  if (maxval < 1 || maxval > 65535) {
    throw IoError(path.string() + ": unsupported PNM maxval " + std::to_string(maxval));
  }
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) *
                                 static_cast<std::size_t>(height) *
                                 static_cast<std::size_t>(channels * bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError(path.string() + ": truncated PNM data");
  }
  Image img(height, width, channels);
  std::size_t k = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        unsigned v = raw[k++];
        if (bytes == 2) v = (v << 8) | raw[k++];
        img.at(c, y, x) = static_cast<double>(v) / maxval;
      }
    }
  }
  return img;
}

void write_pnm(const Image& img, const std::filesystem::path& path, int channels) {
  if (img.channels() != channels) {
    throw IoError(path.string() + ": PGM needs 1 channel, PPM needs 3");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (channels == 1 ? "P5" : "P6") << "\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<char> raw;
  raw.reserve(img.element_count());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < channels; ++c) raw.push_back(static_cast<char>(to_byte(img.at(c, y, x))));
    }
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw IoError(path.string() + ": unsupported image format (expected PNG/PGM/PPM)");
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(img, path);
  if (ext == ".pgm") return write_pnm(img, path, 1);
  if (ext == ".ppm") return write_pnm(img, path, 3);
  throw IoError(path.string() + ": unsupported output format (expected .png/.pgm/.ppm)");
}

Image quantize8(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace batdiff
