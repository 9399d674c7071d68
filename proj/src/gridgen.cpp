#include "stormcrew/gridgen.hpp"

#include <algorithm>
#include <cmath>

#include "stormcrew/rng.hpp"

namespace stormcrew {

GridDocument generate_grid(const GridGenParams& params) {
  if (params.circuits <= 0 || params.lines_per_circuit <= 0 ||
      params.devices_per_circuit <= 0 || params.customers_per_circuit < 0)
    throw Error("grid generator counts must be positive");
  if (params.devices_per_circuit > params.lines_per_circuit)
    throw Error("more devices than lines requested");

  Rng rng(mix_seed(params.seed, 0xC1D));
  GridDocument doc;

  // Depot at the center of the square.
  doc.road_nodes.push_back({0, params.area / 2.0, params.area / 2.0});

  const int per_row =
      std::max(1, static_cast<int>(std::ceil(std::sqrt(params.circuits))));
  for (int ci = 0; ci < params.circuits; ++ci) {
    CircuitSpec cs;
    cs.id = ci;
    const int base = 1000 * (ci + 1);
    const int n_nodes = params.lines_per_circuit + 1;

    // Circuit center on a jittered lattice cell.
    const double cell = params.area / per_row;
    const double cx = (ci % per_row + 0.5) * cell +
                      uniform_real(rng, -0.15, 0.15) * cell;
    const double cy = (ci / per_row + 0.5) * cell +
                      uniform_real(rng, -0.15, 0.15) * cell;

    // Random recursive tree; node j attaches to a uniform earlier node.
    std::vector<int> parent(n_nodes, -1);
    for (int j = 1; j < n_nodes; ++j)
      parent[j] = static_cast<int>(uniform_index(rng, j));

    // Positions radiate from the root so storm distance varies within a
    // circuit. Step length keeps the feeder inside its lattice cell.
    std::vector<double> xs(n_nodes), ys(n_nodes);
    xs[0] = cx;
    ys[0] = cy;
    const double step = cell / (2.0 * std::sqrt(static_cast<double>(n_nodes)));
    for (int j = 1; j < n_nodes; ++j) {
      const double ang = uniform_real(rng, 0.0, 2.0 * 3.14159265358979323846);
      const double len = uniform_real(rng, 0.5, 1.5) * step;
      xs[j] = xs[parent[j]] + len * std::cos(ang);
      ys[j] = ys[parent[j]] + len * std::sin(ang);
    }

    // Devices: the root plus a sample of interior nodes.
    std::vector<int> non_root(n_nodes - 1);
    for (int j = 1; j < n_nodes; ++j) non_root[j - 1] = j;
    for (std::size_t i = non_root.size(); i > 1; --i)
      std::swap(non_root[i - 1], non_root[uniform_index(rng, i)]);
    std::vector<bool> device(n_nodes, false);
    device[0] = true;
    for (int d = 0; d < params.devices_per_circuit - 1; ++d)
      device[non_root[d]] = true;

    // Customers land on uniform random transformer nodes.
    std::vector<int> customers(n_nodes, 0);
    std::vector<int> transformers;
    for (int j = 1; j < n_nodes; ++j)
      if (!device[j]) transformers.push_back(j);
    if (!transformers.empty())
      for (int k = 0; k < params.customers_per_circuit; ++k)
        customers[transformers[uniform_index(rng, transformers.size())]] += 1;

    for (int j = 0; j < n_nodes; ++j) {
      GridNodeSpec node;
      node.id = base + j;
      node.parent = j == 0 ? -1 : base + parent[j];
      node.is_device = device[j];
      node.customers = customers[j];
      cs.nodes.push_back(node);

      doc.road_nodes.push_back({base + j, xs[j], ys[j]});
      doc.pole_map.push_back({base + j, base + j});
      if (j > 0) {
        const double dx = xs[j] - xs[parent[j]];
        const double dy = ys[j] - ys[parent[j]];
        doc.road_edges.push_back(
            {base + parent[j], base + j, std::sqrt(dx * dx + dy * dy)});
      }
    }
    doc.circuits.push_back(std::move(cs));

    // Trunk road from the depot to this circuit's root.
    const double dx = xs[0] - doc.road_nodes[0].x;
    const double dy = ys[0] - doc.road_nodes[0].y;
    doc.road_edges.push_back({0, base, std::sqrt(dx * dx + dy * dy)});
  }
  return doc;
}

}  // namespace stormcrew
