#pragma once

#include <string>
#include <string_view>

namespace knet {

// Throws config_error when the file cannot be read.
std::string read_text_file(const std::string& path);

// Writes to a temporary sibling and renames, so readers never observe a
// partial file.
void write_text_atomic(const std::string& path, std::string_view content);

}  // namespace knet
