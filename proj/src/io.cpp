#include "xe/io.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace xe::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {
nlohmann::json grid_header(const Grid& grid, const char* type) {
  nlohmann::json j;
  std::vector<int> dims;
  std::vector<double> lo;
  for (int a = 0; a < grid.dim(); ++a) {
    dims.push_back(grid.dims[a]);
    lo.push_back(grid.box.lo[a]);
  }
  j["dims"] = dims;
  j["h"] = grid.h();
  j["lo"] = lo;
  j["type"] = type;
  return j;
}
}  // namespace

void dump_field(const std::string& path, const Grid& grid,
                const std::vector<double>& values) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("io: cannot open " + path);
  f << grid_header(grid, "f64").dump() << "\n";
  f.write(reinterpret_cast<const char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void dump_mask(const std::string& path, const Grid& grid, const Mask& mask) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("io: cannot open " + path);
  f << grid_header(grid, "u8").dump() << "\n";
  f.write(reinterpret_cast<const char*>(mask.data()),
          static_cast<std::streamsize>(mask.size()));
}

void write_volume_profile_csv(const std::string& path,
                              const metric::VolumeProfile& vp) {
  std::ofstream f(path);
  if (!f) throw ConfigError("io: cannot open " + path);
  f << "r,volume,doubling_ratio,truncated\n";
  for (std::size_t i = 0; i < vp.radii.size(); ++i)
    f << format_double(vp.radii[i]) << "," << format_double(vp.volumes[i]) << ","
      << format_double(vp.doubling_ratios[i]) << "," << int(vp.truncated[i])
      << "\n";
}

void write_potential_profile_csv(const std::string& path,
                                 const potential::PotentialProfile& prof) {
  std::ofstream f(path);
  if (!f) throw ConfigError("io: cannot open " + path);
  f << "rho,cap,ball_volume,limit_est,mu_diag\n";
  for (const auto& e : prof.entries)
    f << format_double(e.rho) << "," << format_double(e.cap.capacity) << ","
      << format_double(e.ball_volume) << "," << format_double(e.limit_est)
      << "," << format_double(e.cap.total_measure) << "\n";
}

void write_wiener_csv(const std::string& path,
                      const wiener::CapacityProfile& prof) {
  std::ofstream f(path);
  if (!f) throw ConfigError("io: cannot open " + path);
  f << "k,rho,cap,ball_cap,ball_volume,term,limit_est,theta,cells,thin,"
       "truncated,valid\n";
  for (std::size_t k = 0; k < prof.levels.size(); ++k) {
    const auto& L = prof.levels[k];
    f << k << "," << format_double(L.rho) << "," << format_double(L.cap) << ","
      << format_double(L.ball_cap) << "," << format_double(L.ball_volume)
      << "," << format_double(L.term) << "," << format_double(L.limit_est)
      << "," << format_double(L.theta) << "," << L.K_cells << ","
      << format_double(L.thin) << "," << int(L.truncated) << ","
      << int(L.valid) << "\n";
  }
}

}  // namespace xe::io
