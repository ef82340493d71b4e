#include "gsm/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gsm {

namespace {

bool strip_comment(const std::string& raw, std::string& out) {
  const std::size_t hash = raw.find('#');
  out = hash == std::string::npos ? raw : raw.substr(0, hash);
  for (char ch : out) {
    if (!std::isspace(static_cast<unsigned char>(ch))) return true;
  }
  return false;
}

}  // namespace

Eigen::MatrixXd load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point cloud: " + path);
  std::vector<Eigen::Vector3d> rows;
  std::string raw, line;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!strip_comment(raw, line)) continue;
    std::istringstream ss(line);
    Eigen::Vector3d p;
    if (!(ss >> p.x() >> p.y() >> p.z())) {
      throw ParseError("expected 'x y z'", line_no);
    }
    rows.push_back(p);
  }
  if (rows.empty()) throw ParseError("point cloud is empty", line_no);
  Eigen::MatrixXd points(static_cast<int>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    points.row(static_cast<int>(i)) = rows[i].transpose();
  }
  return points;
}

void save_xyz(const Eigen::MatrixXd& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write point cloud: " + path);
  char buf[96];
  for (int i = 0; i < points.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", points(i, 0),
                  points(i, 1), points(i, 2));
    out << buf;
  }
}

Eigen::MatrixXd load_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point cloud: " + path);
  std::string line;
  long line_no = 0;

  auto read_line = [&]() {
    if (!std::getline(in, line)) {
      throw ParseError("unexpected end of PLY header", line_no);
    }
    ++line_no;
  };

  read_line();
  if (line.rfind("ply", 0) != 0) throw ParseError("missing 'ply' magic", line_no);
  long vertex_count = -1;
  int property_index = 0;
  int x_col = -1, y_col = -1, z_col = -1;
  bool in_vertex_element = false;
  while (true) {
    read_line();
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    if (token == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii") throw ParseError("only ascii PLY is supported", line_no);
    } else if (token == "element") {
      std::string name;
      long count = 0;
      ss >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
        property_index = 0;
      } else {
        in_vertex_element = false;
      }
    } else if (token == "property" && in_vertex_element) {
      std::string type, name;
      ss >> type >> name;
      if (type == "list") throw ParseError("list properties not supported", line_no);
      if (name == "x") x_col = property_index;
      if (name == "y") y_col = property_index;
      if (name == "z") z_col = property_index;
      ++property_index;
    } else if (token == "end_header") {
      break;
    }
  }
  if (vertex_count < 1 || x_col < 0 || y_col < 0 || z_col < 0) {
    throw ParseError("PLY header lacks vertex x/y/z properties", line_no);
  }
  const int stride =
      std::max({x_col, y_col, z_col}) + 1;  // remaining columns ignored
  Eigen::MatrixXd points(vertex_count, 3);
  for (long i = 0; i < vertex_count; ++i) {
    read_line();
    std::istringstream ss(line);
    std::vector<double> vals(stride);
    for (int c = 0; c < stride; ++c) {
      if (!(ss >> vals[c])) throw ParseError("short vertex record", line_no);
    }
    points(i, 0) = vals[x_col];
    points(i, 1) = vals[y_col];
    points(i, 2) = vals[z_col];
  }
  return points;
}

Eigen::MatrixXd load_point_cloud(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw IoError("cannot open point cloud: " + path);
  std::string first;
  std::getline(probe, first);
  probe.close();
  if (first.rfind("ply", 0) == 0) return load_ply(path);
  return load_xyz(path);
}

std::vector<Ellipsoid> read_ellipsoids(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ellipsoid file: " + path);
  std::vector<Ellipsoid> out;
  std::string raw, line;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!strip_comment(raw, line)) continue;
    std::istringstream ss(line);
    std::vector<double> vals;
    double v = 0.0;
    while (ss >> v) vals.push_back(v);
    int q = 0;
    if (vals.size() == 9) q = 3;        // 3 center + 6 upper-triangular
    else if (vals.size() == 5) q = 2;   // 2 center + 3 upper-triangular
    else throw ParseError("expected 5 (2D) or 9 (3D) numbers", line_no);
    Eigen::VectorXd center(q);
    for (int i = 0; i < q; ++i) center[i] = vals[i];
    Eigen::MatrixXd shape(q, q);
    int t = q;
    for (int r = 0; r < q; ++r) {
      for (int c = r; c < q; ++c) {
        shape(r, c) = vals[t];
        shape(c, r) = vals[t];
        ++t;
      }
    }
    try {
      out.emplace_back(center, shape);
    } catch (const Error& e) {
      throw ParseError(std::string("invalid ellipsoid: ") + e.what(), line_no);
    }
  }
  if (out.empty()) throw ParseError("no ellipsoid records", line_no);
  return out;
}

void write_ellipsoids(const std::vector<Ellipsoid>& ellipsoids,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ellipsoid file: " + path);
  char buf[64];
  for (const Ellipsoid& e : ellipsoids) {
    const int q = e.dim();
    for (int i = 0; i < q; ++i) {
      std::snprintf(buf, sizeof(buf), i ? " %.17g" : "%.17g", e.center()[i]);
      out << buf;
    }
    for (int r = 0; r < q; ++r) {
      for (int c = r; c < q; ++c) {
        std::snprintf(buf, sizeof(buf), " %.17g", e.shape()(r, c));
        out << buf;
      }
    }
    out << '\n';
  }
}

}  // namespace gsm
