#pragma once

#include "gammacell/grid.hpp"

#include <filesystem>

namespace gammacell {

// Little-endian float64 array at `bin`, sidecar {n, k, res, layout: "node-major"}
// at `bin` + ".json".
void write_field(const std::filesystem::path& bin, const Field& f);
Field read_field(const std::filesystem::path& bin);

}  // namespace gammacell
