#ifndef WAVEBC_PLOT_HPP
#define WAVEBC_PLOT_HPP

#include <string>
#include <vector>

#include "wavebc/geometry.hpp"

namespace wavebc {

/// One column of a CSV table.
struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns);

/// Simple line plot: one polyline per series over a shared x axis.
struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<LineSeries>& series, bool log_y = false);

/// Polar heatmap of an interior field on the disc annulus (diverging palette).
void write_svg_polar_heatmap(const std::string& path, const std::string& title,
                             const InteriorGrid& grid, const Eigen::VectorXd& values);

}  // namespace wavebc

#endif
