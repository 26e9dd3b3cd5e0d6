#include "evflow/image_io.hpp"

#include <cctype>
#include <fstream>
#include <vector>

#include "evflow/error.hpp"

namespace evflow {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot write " + path);
  return out;
}

// Next header token, skipping whitespace and '#' comments.
std::string token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

void write_ppm(const std::string& path, const RgbImage& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
  if (!out) raise(Errc::IoError, "short write to " + path);
}

void write_pgm(const std::string& path, const Grid<std::uint8_t>& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto v = image.values();
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
  if (!out) raise(Errc::IoError, "short write to " + path);
}

Grid<std::uint8_t> read_gray(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  const std::string magic = token(in);
  if (magic != "P5" && magic != "P6") raise(Errc::BadMagic, path + ": not a binary PGM/PPM");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token(in));
    h = std::stoul(token(in));
    maxval = std::stoul(token(in));
  } catch (const std::exception&) {
    raise(Errc::ParseError, path + ": malformed header");
  }
  if (maxval != 255 || w == 0 || h == 0) raise(Errc::ParseError, path + ": unsupported image header");
  const std::size_t channels = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> raw(w * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) raise(Errc::TruncatedRecord, path + ": pixel data truncated");
  if (channels == 1) return Grid<std::uint8_t>(w, h, std::move(raw));
  Grid<std::uint8_t> gray(w, h);
  auto g = gray.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const unsigned r = raw[3 * i], gr = raw[3 * i + 1], b = raw[3 * i + 2];
    g[i] = static_cast<std::uint8_t>((299 * r + 587 * gr + 114 * b + 500) / 1000);
  }
  return gray;
}

}  // namespace evflow
