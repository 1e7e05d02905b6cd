#pragma once

#include <string>

#include "promptstream/optim.hpp"

namespace promptstream {

// Parameter checkpoint, schema PSV1: a text file with the magic line,
// a count, then one line per parameter (id, rank, extents, row-major
// values). Values are printed with 17 significant digits so a load
// reproduces the saved doubles bit for bit.
namespace checkpoint {

inline constexpr const char* kMagic = "PSV1";

void save(const ParameterSet& params, const std::string& path);

// Loads values into an already-constructed set; ids and shapes must match.
void load_into(ParameterSet& params, const std::string& path);

}  // namespace checkpoint

}  // namespace promptstream
