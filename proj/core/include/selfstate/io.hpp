#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace selfstate {

std::string read_text_file(const std::filesystem::path& file);

/// Writes to `<file>.tmp` then renames over `file`.
void write_file_atomic(const std::filesystem::path& file, std::string_view content);

}  // namespace selfstate
