#include "pdim/io.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace pdim {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_grid_function_csv(const std::filesystem::path& path, const GridFunction& f) {
  std::ofstream out = open_out(path);
  out << "z,value\n";
  for (int i = 0; i < f.z.size(); ++i) out << f.z(i) << ',' << f.v(i) << '\n';
}

nlohmann::json fixpoint_metadata(const FixPointResult& result, double tol) {
  return nlohmann::json{{"q", result.F_A.params.q},
                        {"lambda", result.F_A.params.lambda},
                        {"N", result.F_A.segments()},
                        {"tol", tol},
                        {"iterations", result.iterations},
                        {"converged", result.converged},
                        {"residual", result.residual}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out = open_out(path);
  out << value.dump(2) << '\n';
}

}  // namespace pdim
