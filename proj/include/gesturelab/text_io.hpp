#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gesturelab::text {

std::string read_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: to a temp sibling, then renames.
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view line, char delimiter);

std::string_view trim(std::string_view s) noexcept;

/// Lower-cases and collapses runs of whitespace to one space; used to match
/// class names typed by hand against the vocabulary.
std::string fold(std::string_view s);

/// Splits text into lines, accepting \n and \r\n.
std::vector<std::string> lines(std::string_view text);

double parse_double(std::string_view s, bool* ok) noexcept;

/// Shortest round-trippable decimal representation.
std::string format_double(double value);

}  // namespace gesturelab::text
