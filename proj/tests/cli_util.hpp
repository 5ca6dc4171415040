#pragma once

// Runs the built CLI through the shell and collects its output files.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace tda::test {

inline const char* cli_path() { return TDA_CLI_PATH; }

// Exit status of `tda <args>` with stdout sent to `stdout_file` (or discarded).
inline int run_cli(const std::string& args, const std::filesystem::path& stdout_file = {}) {
  std::string cmd = std::string("'") + cli_path() + "' " + args;
  cmd += stdout_file.empty() ? " >/dev/null" : " >'" + stdout_file.string() + "'";
  cmd += " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Drops lines carrying wall-clock measurements.
inline std::string without_timing_lines(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.find("seconds") != std::string::npos) continue;
    out += line;
    out += '\n';
  }
  return out;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tda::test
