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

#ifndef GEOHIST_USER_H_
#define GEOHIST_USER_H_

#include <optional>
#include <vector>

namespace geohist {
namespace protocol {

struct WeightedLocation {
  int x = 0;
  int y = 0;
  double weight = 1.0;
};

// One simulated client: a weighted multiset of finest-resolution locations
// plus an optional auxiliary bit (e.g. an infection test result). In
// single-location mode there is exactly one location with weight 1.
struct UserRecord {
  std::vector<WeightedLocation> locations;
  std::optional<bool> aux_bit;
};

}  // namespace protocol
}  // namespace geohist

#endif  // GEOHIST_USER_H_
