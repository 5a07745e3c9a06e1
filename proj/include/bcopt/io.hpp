#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bcopt/geometry.hpp"

namespace bcopt {

using NamedField = std::pair<std::string, std::vector<double>>;

/// Contents of a legacy ASCII VTK unstructured grid of triangles.
struct VtkData {
  std::vector<Point> vertices;
  std::vector<Triangle> triangles;
  std::vector<NamedField> point_data;
  std::vector<NamedField> cell_data;

  const std::vector<double>* point_field(const std::string& name) const;
  const std::vector<double>* cell_field(const std::string& name) const;
};

/// Values are written with 17 significant digits so that reading the file
/// back reproduces them exactly.
void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<NamedField>& point_data,
               const std::vector<NamedField>& cell_data, const std::string& title = "bcopt");
void write_vtk_file(const std::string& path, const Mesh& mesh,
                    const std::vector<NamedField>& point_data,
                    const std::vector<NamedField>& cell_data);
VtkData read_vtk(std::istream& in);
VtkData read_vtk_file(const std::string& path);

/// Plain-text mesh: "nv nt", nv lines "x y flag", nt lines "i j k" (0-based).
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

/// Comma-separated table with a header row, numbers at 17 digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(const std::vector<double>& values);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  void write(std::ostream& out) const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Formats a double with 17 significant digits (shortest exact form not
/// required; the output is deterministic).
std::string format_number(double v);

}  // namespace bcopt
