#pragma once

#include <filesystem>
#include <iosfwd>

#include "batdiff/denoiser.hpp"

namespace batdiff {

/// Binary checkpoint container; byte layout in docs/checkpoint_format.md.
void write_checkpoint(std::ostream& out, const DenoiserBank& bank);
void save_checkpoint(const DenoiserBank& bank, const std::filesystem::path& path);

DenoiserBank read_checkpoint(std::istream& in);
DenoiserBank load_checkpoint(const std::filesystem::path& path);

}  // namespace batdiff
