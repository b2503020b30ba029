#pragma once

#include "neckfol/hypersurface/geodesic.hpp"
#include "neckfol/hypersurface/leaf.hpp"

namespace neckfol {

struct NormalFlow {
  Mat positions;   // F(x, s(x)) per node
  Mat velocities;  // gamma'(s(x))
  double speed_defect = 0.0;  // max | |gamma'|_g - 1 |
};

// Shoots the normal geodesic from every node to its own parameter s(x).
NormalFlow normal_exponential(const EmbeddedLeaf& leaf, const Vec& s, const GeodesicOptions& opt = {});
NormalFlow normal_exponential(const EmbeddedLeaf& leaf, double s, const GeodesicOptions& opt = {});

// Conservative normal injectivity estimate: 1 / (2 max |principal curvature|),
// clipped by the metric distance from the leaf to the chart boundary.
double collision_bound(const EmbeddedLeaf& leaf);

// The leaf {gamma_x(w(x))}. Throws GraphCollision when sup |w| reaches the bound.
EmbeddedLeaf normal_graph(const EmbeddedLeaf& leaf, const Vec& w, const GeodesicOptions& opt = {});

// A star-shaped embedding of the cloud's sphere, y -> P(y), read as a radial
// graph over the chart's unit sphere. Off-node points use FieldInterpolator.
class RadialLeaf {
 public:
  RadialLeaf(CloudPtr cloud, const Mat& positions) : interp_(std::move(cloud), positions) {}
  // Radius of the surface along the ray through the unit vector theta. y is the
  // starting guess and returns the parameter with P(y) on that ray. Throws
  // NoIntersection when the fixed-point inversion fails.
  double radius(const SVec& theta, SVec& y) const;
  SVec point(const SVec& y) const { return interp_(y).transpose(); }

 private:
  FieldInterpolator interp_;
};

// Height function w of the surface {target.row(i)} (a star-shaped embedding of
// the same cloud) over `base`: gamma_x(w(x)) lies on the target. guess seeds the
// per-node secant iteration. Throws NoIntersection.
Vec normal_height(const EmbeddedLeaf& base, const Mat& target, const Vec& guess, const GeodesicOptions& opt = {});

// w' with {gamma^g_x(w(x))} = {gamma^other_x(w'(x))}, both normal graphs over
// the same embedded sphere. The target surface is represented as a radial graph
// over the chart's unit sphere, so it must be star-shaped about the apex.
// Throws NoIntersection when a normal geodesic of `other` misses it and
// GraphCollision when w or w' violate the collision bound.
Vec regraph(const EmbeddedLeaf& leaf, const Vec& w, MetricPtr other, const GeodesicOptions& opt = {});

}  // namespace neckfol
