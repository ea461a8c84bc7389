#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fpsi/fespace.hpp"
#include "fpsi/mms.hpp"

namespace fpsi {

// Vertex-sampled nodal fields for output (P2 fields downsampled to vertices;
// vertices outside the subdomain carry zero).
std::vector<double> vertex_scalar_field(const FunctionSpace& space,
                                        const Eigen::VectorXd& coeffs);
std::vector<Vec2> vertex_vector_field(const FunctionSpace& space,
                                      const Eigen::VectorXd& coeffs);

struct VtkScalar {
  std::string name;
  std::vector<double> values;  // one per mesh vertex
};
struct VtkVector {
  std::string name;
  std::vector<Vec2> values;
};

// Legacy ASCII unstructured-grid writer (triangle cells, point data).
// Written atomically via temp-then-rename. Throws Io on failure.
void write_vtk(const Mesh2D& mesh, const std::vector<VtkScalar>& scalars,
               const std::vector<VtkVector>& vectors, const std::string& path);

// Generic CSV writer: header row then data rows, full double precision,
// '.' decimal point. Throws Io on failure.
void write_csv(const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const std::string& path);

// Error report in the verification-table column order:
// level,h,tau,dofs,e_uf_h1,rate,...
void write_error_report_csv(const ErrorReport& report, const std::string& path);

}  // namespace fpsi
