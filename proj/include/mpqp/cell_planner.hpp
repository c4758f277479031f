#pragma once

#include <string>
#include <vector>

#include "mpqp/st_graph.hpp"

namespace mpqp {

struct Cell {
  double s_min = 0.0;
  double s_max = 0.0;
  double width() const { return s_max - s_min; }
};

struct CellLayer {
  int t_index = 0;
  std::vector<Cell> occupied;  // merged, disjoint, sorted by s_min
  std::vector<Cell> viable;    // complement within [0, s_bound], filtered
};

// Minimal disjoint cover of the input union; touching intervals merge.
std::vector<Cell> merge_occupied(std::vector<Cell> cells);

// Gaps of a merged, sorted occupied list within [0, s_bound].
std::vector<Cell> complement(const std::vector<Cell>& occupied_merged, double s_bound);

// One layer per time step: merge, complement, then drop viable cells
// narrower than min_gap_width.
std::vector<CellLayer> build_layers(const STGraph& graph, double min_gap_width = 0.0,
                                    int jobs = 1);

// Layer table appended to the ST-graph dump when requested.
std::string dump_layers(const std::vector<CellLayer>& layers);

}  // namespace mpqp
