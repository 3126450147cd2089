#pragma once

// Deterministic text output.  Every number is printed with 17 significant
// digits so a written value parses back to the identical double; nothing here
// writes time-dependent content, so equal inputs produce byte-identical
// files.

#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfsim {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

// Comment lines are prefixed with "# "; columns must agree in length.
inline void write_csv(std::ostream& os, std::span<const std::string> comments,
                      std::span<const std::string> names,
                      std::span<const std::vector<double>> columns) {
    if (names.size() != columns.size())
        throw std::invalid_argument("write_csv: one name per column required");
    if (columns.empty()) throw std::invalid_argument("write_csv: no columns");
    const std::size_t rows = columns[0].size();
    for (const auto& col : columns)
        if (col.size() != rows)
            throw std::invalid_argument("write_csv: column lengths differ");

    for (const auto& line : comments) os << "# " << line << "\n";
    for (std::size_t c = 0; c < names.size(); ++c)
        os << names[c] << (c + 1 < names.size() ? "," : "\n");
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            os << fmt17(columns[c][r]) << (c + 1 < columns.size() ? "," : "\n");
}

} // namespace selfsim
