#pragma once

#include <filesystem>
#include <iosfwd>

#include "ergnn/model.hpp"

namespace ergnn {

/// Text checkpoint: a header, the variant and dropout, then one
/// `tensor <name> <rows> <cols>` line per tensor followed by its values as
/// hexadecimal floats, so a save/load round trip is bit-exact.
void save_checkpoint(std::ostream& out, const RationalFilterParams& params);
RationalFilterParams load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const RationalFilterParams& params);
RationalFilterParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ergnn
