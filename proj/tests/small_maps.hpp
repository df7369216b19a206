#pragma once

// Coarse maps shared by the unit tests (built once per process).

#include "cqed/field_maps.hpp"

namespace cqed::testing {

inline const RadialMaps& small_maps() {
  static const RadialMaps maps = [] {
    SystemParams p;
    MapBuildOptions o;
    o.grid.points = 192;
    DiffusionModel d = DiffusionModel::recoil(p);
    d.calibration_gain = 0.05;
    return build_maps(p, HilbertSpace{}, o, d);
  }();
  return maps;
}

}  // namespace cqed::testing
