#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace nfl {

// All CSV output funnels through this: %.17g round-trips IEEE doubles
// through decimal exactly, and a single formatter keeps artifacts
// byte-stable across runs.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& token, const std::string& context);

std::ofstream open_output(const std::string& path);
std::ifstream open_input(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

} // namespace nfl
