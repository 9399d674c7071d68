#pragma once

#include <cstdint>

#include "stormcrew/grid.hpp"

namespace stormcrew {

struct GridGenParams {
  int circuits = 10;
  int devices_per_circuit = 5;  // including the substation root
  int lines_per_circuit = 12;
  int customers_per_circuit = 50;
  double area = 30.0;  // layout square side; road minutes scale with distance
  std::uint64_t seed = 1;
};

// Random radial circuits laid out over a square, a road network that follows
// the feeders and chains the circuits through a central depot (road node 0).
// Deterministic per seed; the output always passes build_grid.
GridDocument generate_grid(const GridGenParams& params);

}  // namespace stormcrew
