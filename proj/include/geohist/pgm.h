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

#ifndef GEOHIST_PGM_H_
#define GEOHIST_PGM_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "geohist/tree.h"

namespace geohist {
namespace pgm {

struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<uint16_t> pixels;  // row-major

  uint16_t At(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
};

// Reads P2 (ASCII) or P5 (binary) images, maxval <= 65535.
PgmImage ReadPgm(std::istream& in);
PgmImage ReadPgmFile(const std::string& path);

void WritePgm(std::ostream& out, const PgmImage& image, bool binary = true);
void WritePgmFile(const std::string& path, const PgmImage& image,
                  bool binary = true);

// Min-max scales a grid to 8 bits for inspection. Negative values (possible
// in DP outputs) are clamped to zero here, at render time only.
PgmImage RenderGrid(const qtree::DensityGrid& grid);

}  // namespace pgm
}  // namespace geohist

#endif  // GEOHIST_PGM_H_
