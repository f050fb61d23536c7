#pragma once

#include <string>
#include <vector>

#include "xe/grid.hpp"
#include "xe/metric.hpp"
#include "xe/potential.hpp"
#include "xe/wiener.hpp"

namespace xe::io {

// Binary grid files: one JSON header line ({"dims":[...],"h":...,"lo":[...],
// "type":"f64"|"u8"}), a newline, then the row-major payload (last axis
// fastest).
void dump_field(const std::string& path, const Grid& grid,
                const std::vector<double>& values);
void dump_mask(const std::string& path, const Grid& grid, const Mask& mask);

// Fixed CSV layouts; columns documented in the README.
void write_volume_profile_csv(const std::string& path,
                              const metric::VolumeProfile& vp);
void write_potential_profile_csv(const std::string& path,
                                 const potential::PotentialProfile& prof);
void write_wiener_csv(const std::string& path,
                      const wiener::CapacityProfile& prof);

std::string format_double(double v);

}  // namespace xe::io
