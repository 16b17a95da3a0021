#pragma once

#include "ocular/geom.hpp"

namespace ocular {

/// Closed triangle mesh of the occupancy boundary.
///
/// Samples sit at voxel centres. Each lattice cell is split into six
/// tetrahedra sharing the cell's main diagonal (the Kuhn decomposition), so
/// neighbouring cells agree on every shared face and the output is always
/// closed. Which tetrahedron edges are cut follows the binary occupancy. The
/// cut position along an edge is the 0.5 crossing of the occupancy smoothed
/// with a separable [1 2 1]/4 kernel, or the edge midpoint when the smoothed
/// values do not bracket 0.5 there.
///
/// Throws EmptyGrid when nothing is occupied.
TriMesh extract_surface(const VoxelGrid& grid);

/// Occupied voxels with at least one empty (or out-of-grid) 6-neighbour.
std::size_t surface_voxel_count(const VoxelGrid& grid);

}  // namespace ocular
