#include "fpsi/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>

#include "fpsi/errors.hpp"

namespace fpsi {

std::vector<double> vertex_scalar_field(const FunctionSpace& space,
                                        const Eigen::VectorXd& coeffs) {
  std::vector<double> out(space.mesh().vertex_count(), 0.0);
  for (int v = 0; v < space.mesh().vertex_count(); ++v) {
    const int n = space.vertex_node(v);
    if (n >= 0) out[v] = coeffs[n * space.components()];
  }
  return out;
}

std::vector<Vec2> vertex_vector_field(const FunctionSpace& space,
                                      const Eigen::VectorXd& coeffs) {
  std::vector<Vec2> out(space.mesh().vertex_count());
  for (int v = 0; v < space.mesh().vertex_count(); ++v) {
    const int n = space.vertex_node(v);
    if (n >= 0) out[v] = {coeffs[2 * n], coeffs[2 * n + 1]};
  }
  return out;
}

namespace {

void commit(const std::string& tmp, const std::string& path) {
  require(std::rename(tmp.c_str(), path.c_str()) == 0, ErrorCode::Io,
          "cannot move " + tmp + " to " + path);
}

}  // namespace

void write_vtk(const Mesh2D& mesh, const std::vector<VtkScalar>& scalars,
               const std::vector<VtkVector>& vectors, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    require(out.good(), ErrorCode::Io, "cannot open " + tmp);
    out.precision(12);
    out << "# vtk DataFile Version 3.0\n";
    out << "fpsi fields\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.vertex_count() << " double\n";
    for (const auto& v : mesh.vertices()) out << v.x << " " << v.y << " 0\n";
    out << "CELLS " << mesh.triangle_count() << " " << 4 * mesh.triangle_count() << "\n";
    for (const auto& t : mesh.triangles())
      out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "CELL_TYPES " << mesh.triangle_count() << "\n";
    for (int t = 0; t < mesh.triangle_count(); ++t) out << "5\n";
    out << "POINT_DATA " << mesh.vertex_count() << "\n";
    for (const auto& s : scalars) {
      require(static_cast<int>(s.values.size()) == mesh.vertex_count(), ErrorCode::Io,
              "field " + s.name + " not vertex-sized");
      out << "SCALARS " << s.name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (double v : s.values) out << v << "\n";
    }
    for (const auto& f : vectors) {
      require(static_cast<int>(f.values.size()) == mesh.vertex_count(), ErrorCode::Io,
              "field " + f.name + " not vertex-sized");
      out << "VECTORS " << f.name << " double\n";
      for (const auto& v : f.values) out << v.x << " " << v.y << " 0\n";
    }
    require(out.good(), ErrorCode::Io, "write failure on " + tmp);
  }
  commit(tmp, path);
}

void write_csv(const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    require(out.good(), ErrorCode::Io, "cannot open " + tmp);
    out.precision(std::numeric_limits<double>::max_digits10);
    for (size_t i = 0; i < header.size(); ++i)
      out << header[i] << (i + 1 < header.size() ? "," : "");
    out << "\n";
    for (const auto& row : rows) {
      require(row.size() == header.size(), ErrorCode::Io, "csv row width mismatch");
      for (size_t i = 0; i < row.size(); ++i)
        out << row[i] << (i + 1 < row.size() ? "," : "");
      out << "\n";
    }
    require(out.good(), ErrorCode::Io, "write failure on " + tmp);
  }
  commit(tmp, path);
}

void write_error_report_csv(const ErrorReport& report, const std::string& path) {
  std::vector<std::string> header = {"level", "h", "tau", "dofs"};
  for (int v = 0; v < kErrVars; ++v) {
    header.push_back(kErrNames[v]);
    header.push_back(std::string("rate_") + (kErrNames[v] + 2));  // strip "e_"
  }
  std::vector<std::vector<double>> rows;
  for (size_t r = 0; r < report.rows.size(); ++r) {
    const auto& row = report.rows[r];
    std::vector<double> vals = {static_cast<double>(row.level), row.h, row.tau,
                                static_cast<double>(row.dofs)};
    for (int v = 0; v < kErrVars; ++v) {
      vals.push_back(row.err[v]);
      vals.push_back(report.rate(static_cast<int>(r), v));
    }
    rows.push_back(std::move(vals));
  }
  write_csv(header, rows, path);
}

}  // namespace fpsi
