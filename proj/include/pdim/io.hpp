#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdim/fixpoint.hpp"

namespace pdim {

/// CSV writer for a rectangular table of doubles.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// GridFunction serialization: CSV with columns z, value.
void write_grid_function_csv(const std::filesystem::path& path, const GridFunction& f);

/// JSON metadata for a fixed-point run (q, lambda, N, tol, iterations, residual).
nlohmann::json fixpoint_metadata(const FixPointResult& result, double tol);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

}  // namespace pdim
