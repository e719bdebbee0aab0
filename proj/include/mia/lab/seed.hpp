// Copyright 2026 The MIA Frontier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIA_LAB_SEED_HPP_
#define MIA_LAB_SEED_HPP_

#include <cstdint>

namespace mia::lab {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for item `index` of stream `stream` under `master`. Distinct
// (stream, index) pairs give unrelated generators, so trials can run in any
// order on any worker.
constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream,
                                   std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ (stream * 0xd1b54a32d192ed03ULL)) + index);
}

// Named streams, so that e.g. probe draws never collide with trial draws.
enum Stream : std::uint64_t {
  kStreamBeta = 1,
  kStreamProbe = 2,
  kStreamTrial = 3,
  kStreamModel = 4,
  kStreamHoldout = 5,
  kStreamSubset = 6,
  kStreamDensity = 7,
};

}  // namespace mia::lab

#endif  // MIA_LAB_SEED_HPP_
