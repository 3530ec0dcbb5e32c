#include "pord/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#ifdef PORD_HAVE_PNG
#include <png.h>
#endif

namespace pord {
namespace {

static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PgmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::size_t data_offset = 0;
};

// Reads one unsigned decimal field, skipping whitespace and '#' comments.
std::size_t read_field(const std::vector<unsigned char>& buf, std::size_t& pos, const std::string& name) {
  for (;;) {
    while (pos < buf.size() && std::isspace(buf[pos])) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= buf.size()) throw IoError("truncated PGM header (" + name + ")");
  if (!std::isdigit(buf[pos])) throw FormatError("bad PGM header field " + name);
  std::size_t v = 0;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    v = v * 10 + (buf[pos] - '0');
    if (v > (1u << 30)) throw FormatError("PGM header field " + name + " too large");
    ++pos;
  }
  return v;
}

PgmHeader parse_header(const std::vector<unsigned char>& buf, const std::filesystem::path& path) {
  if (buf.size() < 2) throw IoError("truncated file " + path.string());
  if (buf[0] != 'P' || buf[1] != '5') throw FormatError("unsupported format (expected binary PGM P5): " + path.string());
  PgmHeader h;
  std::size_t pos = 2;
  h.width = read_field(buf, pos, "width");
  h.height = read_field(buf, pos, "height");
  h.maxval = static_cast<unsigned>(read_field(buf, pos, "maxval"));
  if (pos >= buf.size() || !std::isspace(buf[pos])) throw IoError("truncated PGM header in " + path.string());
  h.data_offset = pos + 1;
  if (h.width == 0 || h.height == 0) throw FormatError("zero-dimension image: " + path.string());
  if (h.maxval == 0 || h.maxval > 65535) throw FormatError("bad PGM maxval in " + path.string());
  const std::size_t bytes = h.width * h.height * (h.maxval > 255 ? 2 : 1);
  if (buf.size() - h.data_offset < bytes) throw IoError("truncated PGM data in " + path.string());
  return h;
}

void write_all(const std::filesystem::path& path, const std::string& header, const std::vector<unsigned char>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

bool is_png(const std::vector<unsigned char>& buf) {
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return buf.size() >= 8 && std::memcmp(buf.data(), sig, 8) == 0;
}

Image decode_png(const std::vector<unsigned char>& buf, const std::filesystem::path& path) {
#ifdef PORD_HAVE_PNG
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, buf.data(), buf.size())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw FormatError("zero-dimension image: " + path.string());
  }
  std::vector<unsigned char> px(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, px.data(), 0, nullptr)) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return Image(png.height, png.width, std::vector<double>(px.begin(), px.end()));
#else
  throw FormatError("PNG support was not built in; convert " + path.string() + " to PGM");
#endif
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  if (is_png(buf)) return decode_png(buf, path);
  const PgmHeader h = parse_header(buf, path);
  std::vector<double> data(h.width * h.height);
  const unsigned char* p = buf.data() + h.data_offset;
  const double scale = 255.0 / h.maxval;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const unsigned raw = h.maxval > 255 ? (unsigned(p[2 * i]) << 8 | p[2 * i + 1]) : p[i];
    data[i] = h.maxval == 255 ? double(raw) : raw * scale;
  }
  return Image(h.height, h.width, std::move(data));
}

void save_pgm(const std::filesystem::path& path, const Image& img) {
  std::vector<unsigned char> body(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < body.size(); ++i) {
    const double v = std::clamp(px[i], 0.0, 255.0);
    body[i] = static_cast<unsigned char>(std::lround(v));
  }
  write_all(path, "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n", body);
}

void save_png(const std::filesystem::path& path, const Image& img) {
#ifdef PORD_HAVE_PNG
  std::vector<unsigned char> body(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < body.size(); ++i) body[i] = static_cast<unsigned char>(std::lround(std::clamp(px[i], 0.0, 255.0)));
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, body.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + png.message);
  }
#else
  throw FormatError("PNG support was not built in; cannot write " + path.string());
#endif
}

bool png_supported() {
#ifdef PORD_HAVE_PNG
  return true;
#else
  return false;
#endif
}

PixelMask load_mask(const std::filesystem::path& path) {
  const Image img = load_image(path);
  PixelMask mask(img.height(), img.width());
  auto bits = mask.bits();
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) bits[i] = px[i] != 0.0 ? 1 : 0;
  return mask;
}

void save_mask(const std::filesystem::path& path, const PixelMask& mask) {
  Image img(mask.height(), mask.width());
  auto bits = mask.bits();
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = bits[i] ? 255.0 : 0.0;
  save_pgm(path, img);
}

void save_raw(const std::filesystem::path& path, const Image& img) {
  std::vector<unsigned char> body;
  body.reserve(img.size() * 8 + 12);
  put_u32(body, static_cast<std::uint32_t>(img.height()));
  put_u32(body, static_cast<std::uint32_t>(img.width()));
  put_u32(body, 0);
  for (double v : img.pixels()) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);
    body.insert(body.end(), b, b + 8);
  }
  write_all(path, "PORD", body);
}

Image load_raw(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  if (buf.size() < 16) throw IoError("truncated raw dump " + path.string());
  if (std::memcmp(buf.data(), "PORD", 4) != 0) throw FormatError("bad raw dump magic in " + path.string());
  const std::size_t h = get_u32(buf.data() + 4);
  const std::size_t w = get_u32(buf.data() + 8);
  if (h == 0 || w == 0) throw FormatError("zero-dimension raw dump " + path.string());
  if (buf.size() - 16 < h * w * 8) throw IoError("truncated raw dump " + path.string());
  std::vector<double> data(h * w);
  std::memcpy(data.data(), buf.data() + 16, h * w * 8);
  return Image(h, w, std::move(data));
}

}  // namespace pord
