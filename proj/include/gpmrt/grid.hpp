#ifndef GPMRT_GRID_HPP
#define GPMRT_GRID_HPP

#include <cstddef>
#include <vector>

namespace gpmrt {

// Structured periodic grid, row-major (x fastest).  When channel_y is set the
// y direction is wall-bounded with the walls halfway between the ghost row
// and the first/last interior rows; x stays periodic.
struct Grid {
    int nx = 1;
    int ny = 1;
    double dx = 1.0;
    double dt = 1.0;
    double x0 = 0.0;
    double y0 = 0.0;
    bool channel_y = false;

    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * nx + x; }
    double x(int i) const { return x0 + i * dx; }
    double y(int j) const { return y0 + j * dx; }

    int wrap_x(int x) const {
        x %= nx;
        return x < 0 ? x + nx : x;
    }
    int wrap_y(int y) const {
        y %= ny;
        return y < 0 ? y + ny : y;
    }
};

using Plane = std::vector<double>;

}  // namespace gpmrt

#endif
