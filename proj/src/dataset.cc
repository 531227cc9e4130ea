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

#include "geohist/dataset.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace geohist {
namespace dataset {
namespace {

bool IsPowerOfTwo(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

Population FromImage(const pgm::PgmImage& image, const std::string& source) {
  if (image.width != image.height || !IsPowerOfTwo(image.width)) {
    throw std::invalid_argument(
        "image must be square with a power-of-two side");
  }
  Population pop;
  pop.side = image.width;
  pop.source = source;
  int64_t total = 0;
  for (uint16_t p : image.pixels) total += p;
  if (total == 0) throw std::invalid_argument("image has zero total luminosity");
  pop.users.reserve(total);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const int count = image.At(x, y);
      for (int i = 0; i < count; ++i) {
        pop.users.push_back(
            protocol::UserRecord{{{x, y, 1.0}}, std::nullopt});
      }
    }
  }
  return pop;
}

void SyntheticSpec::Validate() const {
  double total = uniform_weight;
  for (const auto& k : kernels) {
    if (!(k.weight >= 0)) throw std::invalid_argument("kernel weight < 0");
    if (!(k.sigma > 0)) throw std::invalid_argument("kernel sigma <= 0");
    total += k.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
}

SyntheticSpec NamedSpec(const std::string& name) {
  SyntheticSpec spec;
  spec.name = name;
  if (name == "manhattan") {
    // Dense elongated corridor: a chain of tight kernels along a diagonal,
    // plus faint city-wide background.
    const double cx[] = {0.30, 0.38, 0.46, 0.54, 0.62, 0.70};
    const double cy[] = {0.75, 0.66, 0.57, 0.48, 0.39, 0.30};
    for (int i = 0; i < 6; ++i) {
      spec.kernels.push_back({cx[i], cy[i], 0.035, 0.15});
    }
    spec.kernels.push_back({0.5, 0.5, 0.2, 0.06});
    spec.uniform_weight = 0.04;
  } else if (name == "coastal") {
    // Sparse settlements along a shoreline arc.
    spec.kernels.push_back({0.20, 0.30, 0.05, 0.30});
    spec.kernels.push_back({0.35, 0.62, 0.04, 0.25});
    spec.kernels.push_back({0.60, 0.78, 0.06, 0.25});
    spec.kernels.push_back({0.82, 0.55, 0.03, 0.15});
    spec.uniform_weight = 0.05;
  } else if (name == "citywide") {
    spec.kernels.push_back({0.5, 0.5, 0.22, 0.55});
    spec.kernels.push_back({0.3, 0.65, 0.10, 0.15});
    spec.kernels.push_back({0.7, 0.35, 0.10, 0.15});
    spec.uniform_weight = 0.15;
  } else if (name == "hotspot") {
    spec.kernels.push_back({0.5, 0.5, 0.01, 1.0});
    spec.uniform_weight = 0.0;
  } else if (name == "uniform") {
    spec.uniform_weight = 1.0;
  } else {
    throw std::invalid_argument("unknown synthetic profile: " + name);
  }
  return spec;
}

SyntheticSpec ParseSyntheticSpec(std::istream& in) {
  SyntheticSpec spec;
  spec.name = "toml";
  std::string line;
  GaussianKernel* current = nullptr;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = Trim(line);
    if (line.empty()) continue;
    if (line == "[[kernel]]") {
      spec.kernels.emplace_back();
      current = &spec.kernels.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    double number;
    try {
      number = std::stod(value);
    } catch (const std::exception&) {
      if (key == "name") {
        spec.name = Trim(value);
        continue;
      }
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": bad number '" + value + "'");
    }
    if (current == nullptr) {
      if (key == "uniform_weight") {
        spec.uniform_weight = number;
      } else {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": unknown key '" + key + "'");
      }
    } else if (key == "cx") {
      current->cx = number;
    } else if (key == "cy") {
      current->cy = number;
    } else if (key == "sigma") {
      current->sigma = number;
    } else if (key == "weight") {
      current->weight = number;
    } else {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": unknown kernel key '" + key + "'");
    }
  }
  spec.Validate();
  return spec;
}

Population Synthetic(const SyntheticSpec& spec, int n_users, int side,
                     uint64_t seed) {
  spec.Validate();
  if (!IsPowerOfTwo(side)) {
    throw std::invalid_argument("side must be a power of two");
  }
  Population pop;
  pop.side = side;
  pop.source = "synthetic:" + spec.name;
  pop.users.reserve(n_users);
  RngStream rng(DeriveSeed(seed, 0x53594e5448ULL));
  std::normal_distribution<double> normal;
  for (int i = 0; i < n_users; ++i) {
    double pick = rng.NextDouble();
    int x = 0, y = 0;
    bool placed = false;
    for (const auto& kernel : spec.kernels) {
      pick -= kernel.weight;
      if (pick < 0) {
        const double sx = kernel.sigma * side;
        x = static_cast<int>(std::lround(kernel.cx * side + sx * normal(rng)));
        y = static_cast<int>(std::lround(kernel.cy * side + sx * normal(rng)));
        placed = true;
        break;
      }
    }
    if (!placed) {
      x = static_cast<int>(rng.NextBelow(side));
      y = static_cast<int>(rng.NextBelow(side));
    }
    x = std::clamp(x, 0, side - 1);
    y = std::clamp(y, 0, side - 1);
    pop.users.push_back(protocol::UserRecord{{{x, y, 1.0}}, std::nullopt});
  }
  return pop;
}

std::vector<int32_t> SampleUsers(const Population& pop, int count,
                                 RngStream& rng) {
  const int n = static_cast<int>(pop.users.size());
  if (count < 0 || count > n) {
    throw std::invalid_argument("sample count exceeds population size");
  }
  // Partial Fisher-Yates.
  std::vector<int32_t> indices(n);
  for (int i = 0; i < n; ++i) indices[i] = i;
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.NextBelow(n - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(count);
  return indices;
}

Population FromCheckins(std::istream& in, int side) {
  if (!IsPowerOfTwo(side)) {
    throw std::invalid_argument("side must be a power of two");
  }
  Population pop;
  pop.side = side;
  pop.source = "checkins";
  std::string line;
  int line_no = 0;
  bool has_weight = false;
  // user id -> index in pop.users, insertion-ordered
  std::map<std::string, size_t> user_index;
  std::vector<std::string> order;
  if (!std::getline(in, line)) throw std::runtime_error("empty check-in file");
  ++line_no;
  {
    const std::string header = Trim(line);
    if (header == "user,x,y,weight") {
      has_weight = true;
    } else if (header != "user,x,y") {
      throw std::runtime_error("line 1: expected header user,x,y[,weight]");
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    std::istringstream row(line);
    std::string user, xs, ys, ws;
    if (!std::getline(row, user, ',') || !std::getline(row, xs, ',') ||
        !std::getline(row, ys, ',')) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected user,x,y[,weight]");
    }
    double weight = 1.0;
    if (has_weight) {
      if (!std::getline(row, ws, ',')) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": missing weight");
      }
    }
    int x, y;
    try {
      x = std::stoi(xs);
      y = std::stoi(ys);
      if (has_weight) weight = std::stod(ws);
    } catch (const std::exception&) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": bad number");
    }
    if (x < 0 || y < 0 || x >= side || y >= side) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": coordinates outside the grid");
    }
    if (!(weight > 0)) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": weight must be positive");
    }
    auto [it, inserted] = user_index.try_emplace(user, pop.users.size());
    if (inserted) pop.users.emplace_back();
    auto& record = pop.users[it->second];
    bool merged = false;
    for (auto& loc : record.locations) {
      if (loc.x == x && loc.y == y) {
        loc.weight += weight;
        merged = true;
        break;
      }
    }
    if (!merged) record.locations.push_back({x, y, weight});
  }
  if (pop.users.empty()) throw std::runtime_error("no check-in rows");
  return pop;
}

qtree::DensityGrid TruthGrid(const Population& pop) {
  qtree::DensityGrid grid(pop.side);
  for (const auto& user : pop.users) {
    double total = 0;
    for (const auto& loc : user.locations) total += loc.weight;
    for (const auto& loc : user.locations) {
      grid.At(loc.x, loc.y) += loc.weight / total;
    }
  }
  const double mass = grid.Total();
  if (mass > 0) {
    for (double& v : grid.values) v /= mass;
  }
  return grid;
}

}  // namespace dataset
}  // namespace geohist
