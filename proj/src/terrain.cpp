#include "wmr/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmr {

TerrainKind terrain_kind_from_string(const std::string& s) {
  if (s == "flat") return TerrainKind::kFlat;
  if (s == "random-rough") return TerrainKind::kRandomRough;
  if (s == "boxes") return TerrainKind::kBoxes;
  if (s == "pyramid-slope") return TerrainKind::kPyramidSlope;
  if (s == "thresholds") return TerrainKind::kThresholds;
  if (s == "stairs") return TerrainKind::kStairs;
  throw std::runtime_error("unknown terrain kind '" + s + "'");
}

std::string to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::kFlat: return "flat";
    case TerrainKind::kRandomRough: return "random-rough";
    case TerrainKind::kBoxes: return "boxes";
    case TerrainKind::kPyramidSlope: return "pyramid-slope";
    case TerrainKind::kThresholds: return "thresholds";
    case TerrainKind::kStairs: return "stairs";
  }
  return "?";
}

void Heightfield::height_at(double x, double y, double* z, double normal[3]) const {
  // grid coordinates with the tile centered on the origin
  double gx = (x + size_x / 2) / resolution;
  double gy = (y + size_y / 2) / resolution;
  gx = std::clamp(gx, 0.0, static_cast<double>(nx - 1) - 1e-9);
  gy = std::clamp(gy, 0.0, static_cast<double>(ny - 1) - 1e-9);
  const int ix = static_cast<int>(gx);
  const int iy = static_cast<int>(gy);
  const double fx = gx - ix;
  const double fy = gy - iy;
  const double h00 = node(ix, iy), h10 = node(ix + 1, iy);
  const double h01 = node(ix, iy + 1), h11 = node(ix + 1, iy + 1);
  *z = h00 * (1 - fx) * (1 - fy) + h10 * fx * (1 - fy) + h01 * (1 - fx) * fy +
       h11 * fx * fy;
  // analytic gradient of the bilinear patch
  const double dhdx = ((h10 - h00) * (1 - fy) + (h11 - h01) * fy) / resolution;
  const double dhdy = ((h01 - h00) * (1 - fx) + (h11 - h10) * fx) / resolution;
  const double inv = 1.0 / std::sqrt(dhdx * dhdx + dhdy * dhdy + 1.0);
  normal[0] = -dhdx * inv;
  normal[1] = -dhdy * inv;
  normal[2] = inv;
}

namespace {

// chebyshev distance from tile center in meters
double cheb(double x, double y) { return std::max(std::fabs(x), std::fabs(y)); }

}  // namespace

Heightfield generate_terrain(TerrainKind kind, int level, uint64_t seed,
                             const TerrainParams& p) {
  if (level < 0 || level > p.max_level)
    throw std::runtime_error("terrain level out of range");
  Heightfield hf;
  hf.resolution = p.resolution;
  hf.nx = static_cast<int>(std::lround(p.tile_size / p.resolution)) + 1;
  hf.ny = hf.nx;
  hf.size_x = (hf.nx - 1) * p.resolution;
  hf.size_y = (hf.ny - 1) * p.resolution;
  hf.heights.assign(static_cast<size_t>(hf.nx) * hf.ny, 0.0f);
  hf.friction_mult.assign(static_cast<size_t>(hf.nx) * hf.ny, 1.0f);

  const double t = static_cast<double>(level) / p.max_level;  // 0..1
  Pcg32 rng(seed, 0x7e55a1 + static_cast<uint64_t>(kind) * 131 + level);

  const double platform = 1.0;  // flat spawn platform half-width (m)
  auto xy_of = [&](int ix, int iy, double* x, double* y) {
    *x = ix * p.resolution - hf.size_x / 2;
    *y = iy * p.resolution - hf.size_y / 2;
  };

  switch (kind) {
    case TerrainKind::kFlat:
      break;

    case TerrainKind::kRandomRough: {
      const double amp = p.rough_amp_max * t;
      for (int iy = 0; iy < hf.ny; ++iy)
        for (int ix = 0; ix < hf.nx; ++ix) {
          double x, y;
          xy_of(ix, iy, &x, &y);
          if (cheb(x, y) <= platform) continue;
          hf.heights[static_cast<size_t>(iy) * hf.nx + ix] =
              static_cast<float>(rng.uniform(-amp, amp));
        }
      break;
    }

    case TerrainKind::kBoxes: {
      const double hmax = p.box_height_max * t;
      const double box = 0.8;  // box edge length (m)
      const int nb = static_cast<int>(p.tile_size / box) + 1;
      std::vector<double> bh(static_cast<size_t>(nb) * nb);
      for (auto& v : bh) v = rng.uniform(0.0, hmax);
      for (int iy = 0; iy < hf.ny; ++iy)
        for (int ix = 0; ix < hf.nx; ++ix) {
          double x, y;
          xy_of(ix, iy, &x, &y);
          if (cheb(x, y) <= platform) continue;
          const int bx = std::min(nb - 1, static_cast<int>((x + hf.size_x / 2) / box));
          const int by = std::min(nb - 1, static_cast<int>((y + hf.size_y / 2) / box));
          hf.heights[static_cast<size_t>(iy) * hf.nx + ix] =
              static_cast<float>(bh[static_cast<size_t>(by) * nb + bx]);
        }
      break;
    }

    case TerrainKind::kPyramidSlope: {
      const double slope = std::tan(p.slope_max_deg * M_PI / 180.0 * t);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;  // descend or ascend
      for (int iy = 0; iy < hf.ny; ++iy)
        for (int ix = 0; ix < hf.nx; ++ix) {
          double x, y;
          xy_of(ix, iy, &x, &y);
          const double d = cheb(x, y);
          if (d <= platform) continue;
          hf.heights[static_cast<size_t>(iy) * hf.nx + ix] =
              static_cast<float>(sign * slope * (d - platform));
        }
      break;
    }

    case TerrainKind::kThresholds: {
      const double hmax = p.threshold_height_max * t;
      const double spacing = 1.0, width = 0.2;
      for (int iy = 0; iy < hf.ny; ++iy)
        for (int ix = 0; ix < hf.nx; ++ix) {
          double x, y;
          xy_of(ix, iy, &x, &y);
          if (cheb(x, y) <= platform) continue;
          const double phase = std::fmod(std::fabs(x) + spacing / 2, spacing);
          if (phase < width)
            hf.heights[static_cast<size_t>(iy) * hf.nx + ix] = static_cast<float>(hmax);
        }
      break;
    }

    case TerrainKind::kStairs: {
      // concentric square steps descending (or ascending) from the platform
      const double step_h = p.stair_height_max * t;
      const double tread = 0.30;
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (int iy = 0; iy < hf.ny; ++iy)
        for (int ix = 0; ix < hf.nx; ++ix) {
          double x, y;
          xy_of(ix, iy, &x, &y);
          const double d = cheb(x, y);
          if (d <= platform) continue;
          const int stepno = 1 + static_cast<int>((d - platform) / tread);
          hf.heights[static_cast<size_t>(iy) * hf.nx + ix] =
              static_cast<float>(sign * step_h * stepno);
        }
      break;
    }
  }
  return hf;
}

CurriculumState curriculum_update(const CurriculumState& s, double walked,
                                  double commanded, int max_level,
                                  double promote_frac, double demote_frac) {
  CurriculumState out = s;
  if (commanded <= 1e-9) return out;  // nothing was asked of the robot
  const double frac = walked / commanded;
  if (frac >= promote_frac)
    out.level = std::min(max_level, s.level + 1);
  else if (frac < demote_frac)
    out.level = std::max(0, s.level - 1);
  return out;
}

}  // namespace wmr
