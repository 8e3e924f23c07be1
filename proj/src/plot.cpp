#include "wavebc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace wavebc {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
    std::filesystem::rename(tmp, path);
}

// Diverging blue-white-red palette on [-1, 1].
std::string diverging_color(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r, g, b;
    if (v < 0.0) {
        r = static_cast<int>(255 * (1.0 + v));
        g = static_cast<int>(255 * (1.0 + v));
        b = 255;
    } else {
        r = 255;
        g = static_cast<int>(255 * (1.0 - v));
        b = static_cast<int>(255 * (1.0 - v));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns) {
    if (columns.empty()) throw ArgumentError("write_csv: no columns");
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c)
        out += (c ? "," : "") + columns[c].name;
    out += "\n";
    const std::size_t rows = columns[0].values.size();
    for (const auto& c : columns)
        if (c.values.size() != rows) throw DimensionError("write_csv: ragged columns");
    char buf[40];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.12g", columns[c].values[r]);
            out += (c ? "," : "");
            out += buf;
        }
        out += "\n";
    }
    atomic_write(path, out);
}

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<LineSeries>& series, bool log_y) {
    const double W = 640, H = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double y = s.y[i];
            if (log_y) {
                if (y <= 0.0) continue;
                y = std::log10(y);
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (ymax - ymin < 1e-12) {
        ymax += 1.0;
        ymin -= 1.0;
    }
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double y) {
        if (log_y) y = std::log10(std::max(y, 1e-300));
        return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
    };

    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + num(W) + "' height='" +
                      num(H) + "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg += "<text x='" + num(W / 2) + "' y='20' text-anchor='middle' font-size='14'>" + title +
           "</text>\n";
    svg += "<rect x='" + num(ml) + "' y='" + num(mt) + "' width='" + num(W - ml - mr) +
           "' height='" + num(H - mt - mb) + "' fill='none' stroke='black'/>\n";
    svg += "<text x='" + num(ml) + "' y='" + num(H - 8) + "' font-size='11'>" + num(xmin) +
           "</text>\n";
    svg += "<text x='" + num(W - mr) + "' y='" + num(H - 8) + "' text-anchor='end' font-size='11'>" +
           num(xmax) + "</text>\n";
    const std::string ylab0 = log_y ? ("1e" + num(ymin)) : num(ymin);
    const std::string ylab1 = log_y ? ("1e" + num(ymax)) : num(ymax);
    svg += "<text x='" + num(ml - 5) + "' y='" + num(H - mb) +
           "' text-anchor='end' font-size='11'>" + ylab0 + "</text>\n";
    svg += "<text x='" + num(ml - 5) + "' y='" + num(mt + 10) +
           "' text-anchor='end' font-size='11'>" + ylab1 + "</text>\n";

    int si = 0;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (log_y && s.y[i] <= 0.0) continue;
            pts += num(X(s.x[i])) + "," + num(Y(s.y[i])) + " ";
        }
        const char* color = kPalette[si % 6];
        svg += "<polyline fill='none' stroke='" + std::string(color) + "' stroke-width='1.5' points='" +
               pts + "'/>\n";
        svg += "<text x='" + num(W - mr - 5) + "' y='" + num(mt + 15 + 15 * si) +
               "' text-anchor='end' font-size='11' fill='" + color + "'>" + s.label + "</text>\n";
        ++si;
    }
    svg += "</svg>\n";
    atomic_write(path, svg);
}

void write_svg_polar_heatmap(const std::string& path, const std::string& title,
                             const InteriorGrid& grid, const Eigen::VectorXd& values) {
    if (grid.domain.kind != DomainKind::disc)
        throw ArgumentError("write_svg_polar_heatmap: disc grids only");
    if (values.size() != grid.n_nodes())
        throw DimensionError("write_svg_polar_heatmap: field does not match grid");
    const double W = 520, H = 560;
    const double cx = W / 2, cy = (H - 40) / 2 + 40;
    const double rho = grid.domain.disc.rho;
    const double scale = (std::min(W, H - 40) / 2 - 10) / rho;
    double vmax = std::max(1e-12, values.cwiseAbs().maxCoeff());

    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + num(W) + "' height='" +
                      num(H) + "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg += "<text x='" + num(W / 2) + "' y='20' text-anchor='middle' font-size='14'>" + title +
           " (|max|=" + num(vmax) + ")</text>\n";
    const double dth = 2.0 * 3.14159265358979323846 / grid.n_gamma;
    const double dtau = grid.dtau();
    for (int p = 0; p < grid.n_tau; ++p) {
        const double r1 = rho - p * dtau, r0 = rho - (p + 1) * dtau;
        for (int i = 0; i < grid.n_gamma; ++i) {
            const double a0 = grid.gamma_coords(i) - dth / 2, a1 = a0 + dth;
            auto px = [&](double r, double a) { return num(cx + scale * r * std::cos(a)); };
            auto py = [&](double r, double a) { return num(cy - scale * r * std::sin(a)); };
            std::string d = "M" + px(r0, a0) + "," + py(r0, a0) + " L" + px(r1, a0) + "," +
                            py(r1, a0) + " L" + px(r1, a1) + "," + py(r1, a1) + " L" + px(r0, a1) +
                            "," + py(r0, a1) + " Z";
            svg += "<path d='" + d + "' fill='" +
                   diverging_color(values(grid.node(p, i)) / vmax) + "' stroke='none'/>\n";
        }
    }
    svg += "<circle cx='" + num(cx) + "' cy='" + num(cy) + "' r='" + num(scale * rho) +
           "' fill='none' stroke='black'/>\n</svg>\n";
    atomic_write(path, svg);
}

}  // namespace wavebc
