#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "cam/dataset.hpp"
#include "cam/json_io.hpp"

namespace camtest {

inline const double kNan = std::numeric_limits<double>::quiet_NaN();

// Rows of {x_1..x_d, y}; NaN marks a missing feature.
inline cam::MaskedDataset make_dataset(int d, const std::vector<std::vector<double>>& rows) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& r : rows) {
        x.insert(x.end(), r.begin(), r.begin() + d);
        y.push_back(r[static_cast<std::size_t>(d)]);
    }
    return cam::MaskedDataset(d, std::move(x), std::move(y));
}

inline void write_csv(const cam::MaskedDataset& ds, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    for (int j = 0; j < ds.d(); ++j) f << "x" << j + 1 << ",";
    f << "y\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.d(); ++j) f << (ds.observed(i, j) ? cam::format_double(ds.x(i, j)) : "NA") << ",";
        f << cam::format_double(ds.y(i)) << "\n";
    }
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("camest_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace camtest
