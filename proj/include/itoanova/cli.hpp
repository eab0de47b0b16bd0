#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace itoanova::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes.
enum Exit : int { Ok = 0, Usage = 1, Data = 2, AcceptanceFail = 3 };

/// Runs one command line (argv[0] is the program name).
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

/// Writes every file to "<name>.tmp" first, then renames; nothing is written
/// when any serialization failed earlier because callers build the full map first.
void write_outputs(const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

}  // namespace itoanova::cli
