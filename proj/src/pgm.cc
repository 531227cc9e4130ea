//
// Copyright 2026 The Geohist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "geohist/pgm.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace geohist {
namespace pgm {
namespace {

// Skips whitespace and '#' comment lines between header tokens.
int NextHeaderInt(std::istream& in) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value;
  if (!(in >> value)) throw std::runtime_error("malformed PGM header");
  return value;
}

}  // namespace

PgmImage ReadPgm(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") {
    throw std::runtime_error("not a PGM file (expected P2 or P5)");
  }
  PgmImage image;
  image.width = NextHeaderInt(in);
  image.height = NextHeaderInt(in);
  image.maxval = NextHeaderInt(in);
  if (image.width <= 0 || image.height <= 0 || image.maxval <= 0 ||
      image.maxval > 65535) {
    throw std::runtime_error("bad PGM dimensions");
  }
  const size_t n = static_cast<size_t>(image.width) * image.height;
  image.pixels.resize(n);
  if (magic == "P2") {
    for (size_t i = 0; i < n; ++i) {
      int v;
      if (!(in >> v)) throw std::runtime_error("truncated P2 pixel data");
      image.pixels[i] = static_cast<uint16_t>(v);
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = image.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), raw.size());
    if (static_cast<size_t>(in.gcount()) != raw.size()) {
      throw std::runtime_error("truncated P5 pixel data");
    }
    for (size_t i = 0; i < n; ++i) {
      image.pixels[i] = bytes == 1
                            ? raw[i]
                            : static_cast<uint16_t>(raw[2 * i] << 8 | raw[2 * i + 1]);
    }
  }
  return image;
}

PgmImage ReadPgmFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return ReadPgm(in);
}

void WritePgm(std::ostream& out, const PgmImage& image, bool binary) {
  out << (binary ? "P5" : "P2") << '\n'
      << image.width << ' ' << image.height << '\n'
      << image.maxval << '\n';
  if (binary) {
    const int bytes = image.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw;
    raw.reserve(image.pixels.size() * bytes);
    for (uint16_t p : image.pixels) {
      if (bytes == 2) raw.push_back(static_cast<unsigned char>(p >> 8));
      raw.push_back(static_cast<unsigned char>(p & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
  } else {
    for (size_t i = 0; i < image.pixels.size(); ++i) {
      out << image.pixels[i]
          << ((i + 1) % image.width == 0 ? '\n' : ' ');
    }
  }
}

void WritePgmFile(const std::string& path, const PgmImage& image,
                  bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WritePgm(out, image, binary);
}

PgmImage RenderGrid(const qtree::DensityGrid& grid) {
  PgmImage image;
  image.width = grid.side;
  image.height = grid.side;
  image.maxval = 255;
  image.pixels.resize(grid.values.size());
  double lo = 0.0, hi = 0.0;
  for (double v : grid.values) hi = std::max(hi, v);
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (size_t i = 0; i < grid.values.size(); ++i) {
    const double v = std::max(grid.values[i], 0.0);  // clamp negatives
    image.pixels[i] = static_cast<uint16_t>(
        std::clamp(v * scale, 0.0, 255.0));
  }
  return image;
}

}  // namespace pgm
}  // namespace geohist
