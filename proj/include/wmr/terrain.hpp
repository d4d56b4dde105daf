#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmr/rng.hpp"

namespace wmr {

enum class TerrainKind {
  kFlat,
  kRandomRough,
  kBoxes,
  kPyramidSlope,
  kThresholds,
  kStairs,
};

TerrainKind terrain_kind_from_string(const std::string& s);  // throws on unknown kind
std::string to_string(TerrainKind k);

/// Regular-grid heightfield, immutable after generation and safely shared
/// read-only across environments. The robot spawns at the tile center;
/// queries are clamped at the borders.
struct Heightfield {
  double resolution = 0.05;  // m per cell
  int nx = 0, ny = 0;        // node counts
  std::vector<float> heights;
  std::vector<float> friction_mult;  // per node, > 0
  double size_x = 0.0, size_y = 0.0;

  double node(int ix, int iy) const {
    return heights[static_cast<size_t>(iy) * nx + ix];
  }

  /// Bilinear height and surface normal from the local gradient. (x, y)
  /// are centered on the tile: the spawn point is (0, 0).
  void height_at(double x, double y, double* z, double normal[3]) const;
  double height_at(double x, double y) const {
    double z, n[3];
    height_at(x, y, &z, n);
    return z;
  }
};

struct TerrainParams {
  double tile_size = 8.0;     // m, square
  double resolution = 0.05;   // m
  int max_level = 9;
  double rough_amp_max = 0.06;     // m at max level
  double slope_max_deg = 20.0;     // pyramid slope at max level
  double stair_height_max = 0.12;  // m
  double box_height_max = 0.10;    // m
  double threshold_height_max = 0.10;  // m (paper gives no number)
};

/// Deterministic per (kind, level, seed); amplitudes scale linearly with
/// level in [0, max_level].
Heightfield generate_terrain(TerrainKind kind, int level, uint64_t seed,
                             const TerrainParams& p = {});

/// Walk-distance curriculum: promote at walked >= promote_frac * commanded,
/// demote below demote_frac, clamp to [0, max_level].
struct CurriculumState {
  int level = 0;
  TerrainKind kind = TerrainKind::kFlat;
  double walked_distance = 0.0;  // accumulated within the episode
};

CurriculumState curriculum_update(const CurriculumState& s, double walked,
                                  double commanded, int max_level,
                                  double promote_frac = 0.8,
                                  double demote_frac = 0.4);

}  // namespace wmr
