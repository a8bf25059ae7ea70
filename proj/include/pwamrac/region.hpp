#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pwamrac/types.hpp"

namespace pwamrac {

// One halfspace over the joint state-input vector z = [x; u].
// closed:  normal . z <= offset
// open:    normal . z <  offset
struct Halfspace {
  Vec normal;
  double offset = 0.0;
  bool closed = true;

  // Signed distance-like quantity: positive outside, negative inside.
  double residual(const Vec& z) const { return normal.dot(z) - offset; }

  bool contains(const Vec& z) const {
    const double r = residual(z);
    return closed ? r <= 0.0 : r < 0.0;
  }
};

// Convex polyhedral cell: intersection of halfspaces.
struct Region {
  std::vector<Halfspace> halfspaces;

  bool contains(const Vec& z) const {
    for (const auto& h : halfspaces) {
      if (!h.contains(z)) return false;
    }
    return true;
  }

  // Worst violation among the halfspaces; <= 0 means z is inside (up to
  // open/closed boundary subtleties, which contains() handles exactly).
  double exit_residual(const Vec& z) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& h : halfspaces) worst = std::max(worst, h.residual(z));
    return worst;
  }

  void validate(Eigen::Index dim, const std::string& what) const {
    if (halfspaces.empty())
      throw ValidationError(what + ": region needs at least one halfspace");
    for (std::size_t k = 0; k < halfspaces.size(); ++k) {
      const auto& h = halfspaces[k];
      if (h.normal.size() != dim)
        throw ValidationError(what + ": halfspace " + std::to_string(k) +
                              " normal has length " + std::to_string(h.normal.size()) +
                              ", expected " + std::to_string(dim));
      if (!h.normal.allFinite() || !std::isfinite(h.offset))
        throw ValidationError(what + ": halfspace " + std::to_string(k) + " has non-finite data");
      if (h.normal.lpNorm<Eigen::Infinity>() == 0.0)
        throw ValidationError(what + ": halfspace " + std::to_string(k) + " has zero normal");
    }
  }
};

}  // namespace pwamrac
