#pragma once

#include "ocular/geom.hpp"

#include <span>
#include <vector>

namespace ocular {

/// Closed, outward-oriented convex hull of a 3D point set (quickhull).
///
/// Points within a distance tolerance of a face plane (1e-12 of the bounding
/// diagonal) are treated as lying on that face, so lattice-aligned inputs with
/// many coplanar points produce a valid hull. Only extreme points survive as
/// vertices. Throws DegenerateInput for coincident, collinear or coplanar sets.
TriMesh convex_hull(std::span<const Vec3> points);

/// A planar face of a hull: coplanar triangles merged together.
struct HullFacet {
  Vec3 normal;  ///< unit outward normal
  double area;
};

/// Groups coplanar adjacent triangles of a convex mesh into facets. The facet
/// normal is the normalised vector area, which does not depend on how the
/// planar polygon was triangulated. Facets are sorted by decreasing area.
std::vector<HullFacet> hull_facets(const TriMesh& hull);

}  // namespace ocular
