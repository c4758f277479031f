#include "mpqp/cell_planner.hpp"

#include <algorithm>
#include <cstdio>

#include "mpqp/parallel.hpp"

namespace mpqp {

std::vector<Cell> merge_occupied(std::vector<Cell> cells) {
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.s_min != b.s_min) return a.s_min < b.s_min;
    return a.s_max < b.s_max;
  });
  std::vector<Cell> merged;
  merged.reserve(cells.size());
  for (const Cell& c : cells) {
    if (!merged.empty() && c.s_min <= merged.back().s_max) {
      merged.back().s_max = std::max(merged.back().s_max, c.s_max);
    } else {
      merged.push_back(c);
    }
  }
  return merged;
}

std::vector<Cell> complement(const std::vector<Cell>& occupied_merged, double s_bound) {
  std::vector<Cell> viable;
  double cursor = 0.0;
  for (const Cell& c : occupied_merged) {
    const double lo = std::max(0.0, c.s_min);
    if (lo > cursor && cursor < s_bound) {
      viable.push_back({cursor, std::min(lo, s_bound)});
    }
    cursor = std::max(cursor, c.s_max);
  }
  if (cursor < s_bound) viable.push_back({cursor, s_bound});
  return viable;
}

std::vector<CellLayer> build_layers(const STGraph& graph, double min_gap_width, int jobs) {
  std::vector<CellLayer> layers(graph.n_steps);
  parallel_for(
      static_cast<std::size_t>(graph.n_steps),
      [&](std::size_t t) {
        CellLayer& layer = layers[t];
        layer.t_index = static_cast<int>(t);
        std::vector<Cell> cells;
        cells.reserve(graph.occupied[t].size());
        for (const OccupiedInterval& iv : graph.occupied[t]) {
          cells.push_back({iv.s_min, iv.s_max});
        }
        layer.occupied = merge_occupied(std::move(cells));
        layer.viable = complement(layer.occupied, graph.s_max_bound);
        if (min_gap_width > 0.0) {
          std::erase_if(layer.viable, [&](const Cell& c) { return c.width() < min_gap_width; });
        }
      },
      jobs);
  return layers;
}

std::string dump_layers(const std::vector<CellLayer>& layers) {
  std::string out = "# t_index kind s_min s_max\n";
  char buf[120];
  for (const CellLayer& layer : layers) {
    for (const Cell& c : layer.occupied) {
      std::snprintf(buf, sizeof(buf), "%d occ %.9g %.9g\n", layer.t_index, c.s_min, c.s_max);
      out += buf;
    }
    for (const Cell& c : layer.viable) {
      std::snprintf(buf, sizeof(buf), "%d via %.9g %.9g\n", layer.t_index, c.s_min, c.s_max);
      out += buf;
    }
  }
  return out;
}

}  // namespace mpqp
