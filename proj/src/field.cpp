#include "gsm/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gsm::field {

SliceSpec make_slice(const Eigen::Vector3d& origin,
                     const Eigen::Vector3d& u_dir,
                     const Eigen::Vector3d& v_dir, double extent_u,
                     double extent_v, int res_u, int res_v) {
  if (extent_u <= 0.0 || extent_v <= 0.0) {
    throw InvalidRange("slice extents must be positive");
  }
  if (res_u < 1 || res_v < 1) {
    throw InvalidRange("slice resolution must be at least 1");
  }
  SliceSpec slice;
  slice.origin = origin;
  const double un = u_dir.norm();
  if (un < 1e-12) throw InvalidRange("slice u axis is zero");
  slice.axis_u = u_dir / un;
  Eigen::Vector3d v = v_dir - v_dir.dot(slice.axis_u) * slice.axis_u;
  const double vn = v.norm();
  if (vn < 1e-12) throw InvalidRange("slice v axis is parallel to u");
  slice.axis_v = v / vn;
  slice.extent_u = extent_u;
  slice.extent_v = extent_v;
  slice.res_u = res_u;
  slice.res_v = res_v;
  return slice;
}

Eigen::Vector3d FieldGrid::cell_center(int i, int j) const {
  const double u =
      -0.5 * slice.extent_u + (i + 0.5) * slice.extent_u / slice.res_u;
  const double v =
      -0.5 * slice.extent_v + (j + 0.5) * slice.extent_v / slice.res_v;
  return slice.origin + u * slice.axis_u + v * slice.axis_v;
}

namespace {

FieldGrid empty_grid(const SliceSpec& slice) {
  FieldGrid grid;
  grid.slice = slice;
  const int n = grid.cells();
  grid.distance.assign(n, 0.0);
  grid.gradient.assign(n, Eigen::Vector3d::Zero());
  grid.probability.assign(n, 0.0);
  grid.valid.assign(n, 1);
  return grid;
}

}  // namespace

FieldGrid distance_field(const Ellipsoid& robot, const SurfaceModel& model,
                         const SliceSpec& slice, int prune_k) {
  FieldGrid grid = empty_grid(slice);
  SurfaceQueryOptions options;
  options.prune_k = prune_k;
  for (int j = 0; j < slice.res_v; ++j) {
    for (int i = 0; i < slice.res_u; ++i) {
      const int idx = grid.index(i, j);
      const Ellipsoid at_cell = robot.translated(grid.cell_center(i, j));
      const SurfaceQueryResult q = surface_distance(at_cell, model, options);
      grid.distance[idx] = q.distance;
      if (q.colliding) {
        grid.valid[idx] = 0;
      } else {
        grid.gradient[idx] = q.gradient;
      }
    }
  }
  return grid;
}

FieldGrid probability_field(const Ellipsoid& robot, const SurfaceModel& model,
                            const SliceSpec& slice, double sigma_sq, int k,
                            bool blend) {
  if (sigma_sq < 0.0) throw InvalidRange("sigma^2 must be nonnegative");
  FieldGrid grid = empty_grid(slice);
  const Eigen::MatrixXd cov =
      sigma_sq * Eigen::MatrixXd::Identity(robot.dim(), robot.dim());
  for (int j = 0; j < slice.res_v; ++j) {
    for (int i = 0; i < slice.res_u; ++i) {
      const int idx = grid.index(i, j);
      const UncertainCenter center{grid.cell_center(i, j), cov};
      if (blend) {
        const BlendedProbability p =
            surface_collision_probability(robot, center, model, k);
        grid.probability[idx] = p.value;
        if (p.degraded) grid.valid[idx] = 0;
      } else {
        grid.probability[idx] =
            unblended_collision_probability(robot, center, model).bound;
      }
    }
  }
  return grid;
}

namespace {

void write_csv(const FieldGrid& grid, const std::string& path,
               const char* header,
               void (*row)(char*, std::size_t, const FieldGrid&, int, int)) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write csv: " + path);
  out << header << '\n';
  char buf[256];
  for (int j = 0; j < grid.slice.res_v; ++j) {
    for (int i = 0; i < grid.slice.res_u; ++i) {
      row(buf, sizeof(buf), grid, i, j);
      out << buf << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void write_distance_csv(const FieldGrid& grid, const std::string& path) {
  write_csv(grid, path, "i,j,x,y,z,dist,valid",
            [](char* buf, std::size_t n, const FieldGrid& g, int i, int j) {
              const Eigen::Vector3d p = g.cell_center(i, j);
              const int idx = g.index(i, j);
              std::snprintf(buf, n, "%d,%d,%.17g,%.17g,%.17g,%.17g,%d", i, j,
                            p.x(), p.y(), p.z(), g.distance[idx],
                            int(g.valid[idx]));
            });
}

void write_gradient_csv(const FieldGrid& grid, const std::string& path) {
  write_csv(grid, path, "i,j,gx,gy,gz,valid",
            [](char* buf, std::size_t n, const FieldGrid& g, int i, int j) {
              const int idx = g.index(i, j);
              const Eigen::Vector3d& v = g.gradient[idx];
              std::snprintf(buf, n, "%d,%d,%.17g,%.17g,%.17g,%d", i, j, v.x(),
                            v.y(), v.z(), int(g.valid[idx]));
            });
}

void write_probability_csv(const FieldGrid& grid, const std::string& path) {
  write_csv(grid, path, "i,j,x,y,z,prob,valid",
            [](char* buf, std::size_t n, const FieldGrid& g, int i, int j) {
              const Eigen::Vector3d p = g.cell_center(i, j);
              const int idx = g.index(i, j);
              std::snprintf(buf, n, "%d,%d,%.17g,%.17g,%.17g,%.17g,%d", i, j,
                            p.x(), p.y(), p.z(), g.probability[idx],
                            int(g.valid[idx]));
            });
}

namespace {

struct CsvTable {
  std::vector<std::vector<double>> rows;
  int res_u = 0, res_v = 0;
};

CsvTable read_csv_table(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv: " + path);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++line_no;
  CsvTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("non-numeric csv cell '" + cell + "'", line_no);
      }
    }
    if (vals.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " columns",
                       line_no);
    }
    table.res_u = std::max(table.res_u, static_cast<int>(vals[0]) + 1);
    table.res_v = std::max(table.res_v, static_cast<int>(vals[1]) + 1);
    table.rows.push_back(std::move(vals));
  }
  if (table.rows.empty()) throw ParseError("csv has no data rows", line_no);
  return table;
}

}  // namespace

FieldGrid read_field_csv(const std::string& prefix) {
  const CsvTable dist = read_csv_table(prefix + ".dist.csv", 7);
  const CsvTable grad = read_csv_table(prefix + ".grad.csv", 6);
  if (dist.res_u != grad.res_u || dist.res_v != grad.res_v) {
    throw ShapeMismatch("distance and gradient grids differ in shape");
  }
  SliceSpec slice;
  slice.res_u = dist.res_u;
  slice.res_v = dist.res_v;
  FieldGrid grid = empty_grid(slice);
  const auto expect_cells = static_cast<std::size_t>(grid.cells());
  if (dist.rows.size() != expect_cells || grad.rows.size() != expect_cells) {
    throw ShapeMismatch("csv row count does not fill the grid");
  }
  for (const std::vector<double>& r : dist.rows) {
    const int idx = grid.index(static_cast<int>(r[0]), static_cast<int>(r[1]));
    grid.distance[idx] = r[5];
    grid.valid[idx] = r[6] != 0.0 ? 1 : 0;
  }
  for (const std::vector<double>& r : grad.rows) {
    const int idx = grid.index(static_cast<int>(r[0]), static_cast<int>(r[1]));
    grid.gradient[idx] = Eigen::Vector3d(r[2], r[3], r[4]);
    grid.valid[idx] = grid.valid[idx] && r[5] != 0.0 ? 1 : 0;
  }
  return grid;
}

namespace {

void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::array<unsigned char, 3>>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write ppm: " + path);
  out << "P6\n" << width << ' ' << height << "\n255\n";
  for (const auto& px : pixels) {
    out.write(reinterpret_cast<const char*>(px.data()), 3);
  }
  if (!out) throw IoError("write failed: " + path);
}

unsigned char to_byte(double t) {
  return static_cast<unsigned char>(
      std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
}

}  // namespace

void write_distance_ppm(const FieldGrid& grid, const std::string& path) {
  double max_d = 0.0;
  for (int idx = 0; idx < grid.cells(); ++idx) {
    max_d = std::max(max_d, grid.distance[idx]);
  }
  if (max_d <= 0.0) max_d = 1.0;
  std::vector<std::array<unsigned char, 3>> pixels;
  pixels.reserve(grid.cells());
  for (int j = grid.slice.res_v - 1; j >= 0; --j) {
    for (int i = 0; i < grid.slice.res_u; ++i) {
      const double t = grid.distance[grid.index(i, j)] / max_d;
      pixels.push_back({to_byte(t), 0, to_byte(1.0 - t)});
    }
  }
  write_ppm(path, grid.slice.res_u, grid.slice.res_v, pixels);
}

void write_probability_ppm(const FieldGrid& grid, const std::string& path) {
  std::vector<std::array<unsigned char, 3>> pixels;
  pixels.reserve(grid.cells());
  for (int j = grid.slice.res_v - 1; j >= 0; --j) {
    for (int i = 0; i < grid.slice.res_u; ++i) {
      const double p = grid.probability[grid.index(i, j)];
      if (p >= 1.0) {
        pixels.push_back({255, 255, 255});
      } else {
        pixels.push_back({to_byte(p), 0, 0});
      }
    }
  }
  write_ppm(path, grid.slice.res_u, grid.slice.res_v, pixels);
}

void write_probability_isocontour_csv(const FieldGrid& grid, double level,
                                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write csv: " + path);
  out << "x1,y1,z1,x2,y2,z2\n";
  char buf[256];

  // Marching squares over cell centers; linear interpolation on edges.
  auto corner = [&](int i, int j) { return grid.probability[grid.index(i, j)]; };
  auto interp = [&](int i0, int j0, int i1, int j1) {
    const double a = corner(i0, j0), b = corner(i1, j1);
    const double t = (level - a) / (b - a);
    const Eigen::Vector3d pa = grid.cell_center(i0, j0);
    const Eigen::Vector3d pb = grid.cell_center(i1, j1);
    return Eigen::Vector3d(pa + t * (pb - pa));
  };

  for (int j = 0; j + 1 < grid.slice.res_v; ++j) {
    for (int i = 0; i + 1 < grid.slice.res_u; ++i) {
      // corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
      const double v0 = corner(i, j), v1 = corner(i + 1, j);
      const double v2 = corner(i + 1, j + 1), v3 = corner(i, j + 1);
      int mask = 0;
      if (v0 >= level) mask |= 1;
      if (v1 >= level) mask |= 2;
      if (v2 >= level) mask |= 4;
      if (v3 >= level) mask |= 8;
      if (mask == 0 || mask == 15) continue;

      std::vector<Eigen::Vector3d> pts;
      if (((mask & 1) != 0) != ((mask & 2) != 0)) {
        pts.push_back(interp(i, j, i + 1, j));
      }
      if (((mask & 2) != 0) != ((mask & 4) != 0)) {
        pts.push_back(interp(i + 1, j, i + 1, j + 1));
      }
      if (((mask & 4) != 0) != ((mask & 8) != 0)) {
        pts.push_back(interp(i + 1, j + 1, i, j + 1));
      }
      if (((mask & 8) != 0) != ((mask & 1) != 0)) {
        pts.push_back(interp(i, j + 1, i, j));
      }
      // Ambiguous saddles produce four crossings; pair them in order.
      for (std::size_t p = 0; p + 1 < pts.size(); p += 2) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                      pts[p].x(), pts[p].y(), pts[p].z(), pts[p + 1].x(),
                      pts[p + 1].y(), pts[p + 1].z());
        out << buf << '\n';
      }
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gsm::field
