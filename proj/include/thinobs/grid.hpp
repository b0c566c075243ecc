#ifndef THINOBS_GRID_HPP
#define THINOBS_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace thinobs {

/// Grid for capacity potentials on the truncated ball B_R(center).
///
/// Nodes are uniform with spacing `h` on the cube [-core, core]^n around the
/// centre. With growth > 1 the spacing beyond the core grows geometrically
/// until the axis reaches R; growth == 1 gives a plain uniform grid.
struct GridSpec {
    int dim = 3;
    double h = 1.0 / 16.0;
    double R = 16.0;
    Vec center{0.0, 0.0, 0.0};
    double core = 0.0;
    double growth = 1.0;

    static GridSpec uniform(double h, double R) {
        GridSpec g;
        g.h = h;
        g.R = R;
        return g;
    }

    static GridSpec graded(double h, double R, double core, double growth = 1.08) {
        GridSpec g;
        g.h = h;
        g.R = R;
        g.core = core;
        g.growth = growth;
        return g;
    }
};

/// One coordinate axis: node positions relative to the centre, symmetric, containing 0.
inline std::vector<double> build_axis(const GridSpec& g) {
    require(g.h > 0.0 && g.R > g.h, ErrorCode::InvalidArgument, "grid needs 0 < h < R");
    require(g.growth >= 1.0 && g.growth < 2.0, ErrorCode::InvalidArgument, "grid growth must lie in [1, 2)");
    const double core = g.growth == 1.0 ? g.R : std::max(g.core, g.h);
    std::vector<double> pos;
    double x = 0.0;
    double step = g.h;
    while (true) {
        if (x >= core - 1e-9 * g.h) step *= g.growth;
        const double next = x + step;
        if (next >= g.R - 0.5 * step) {
            pos.push_back(g.R);
            break;
        }
        pos.push_back(next);
        x = next;
    }
    std::vector<double> axis;
    axis.reserve(2 * pos.size() + 1);
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) axis.push_back(-*it);
    axis.push_back(0.0);
    axis.insert(axis.end(), pos.begin(), pos.end());
    return axis;
}

/// Tensor-product node set in three dimensions, last index fastest.
class TensorGrid {
public:
    explicit TensorGrid(const GridSpec& spec) : spec_(spec) {
        if (spec.dim != 3) fail(ErrorCode::NotSupported, "grid solves support n = 3 only");
        require(spec.center.size() == 3, ErrorCode::InvalidArgument, "grid centre must have 3 components");
        const auto axis = build_axis(spec);
        for (int a = 0; a < 3; ++a) {
            coords_[a] = axis;
            const std::size_t m = axis.size();
            dual_[a].assign(m, 0.0);
            inv_len_[a].assign(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                const double left = i > 0 ? axis[i] - axis[i - 1] : 0.0;
                const double right = i + 1 < m ? axis[i + 1] - axis[i] : 0.0;
                dual_[a][i] = 0.5 * (left + right);
                if (i + 1 < m) inv_len_[a][i] = 1.0 / right;
            }
        }
        for (int a = 0; a < 3; ++a) size_[a] = coords_[a].size();
    }

    const GridSpec& spec() const { return spec_; }
    std::size_t size(int axis) const { return size_[axis]; }
    std::size_t node_count() const { return size_[0] * size_[1] * size_[2]; }
    const std::vector<double>& coords(int axis) const { return coords_[axis]; }
    /// Width of the dual cell around node i along `axis`.
    double dual(int axis, std::size_t i) const { return dual_[axis][i]; }
    /// 1 / (x_{i+1} - x_i) along `axis`.
    double inv_link(int axis, std::size_t i) const { return inv_len_[axis][i]; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * size_[1] + j) * size_[2] + k; }
    std::size_t stride(int axis) const { return axis == 0 ? size_[1] * size_[2] : axis == 1 ? size_[2] : 1; }

    /// Index of the node nearest to coordinate x on `axis`.
    std::size_t nearest(int axis, double x) const {
        const auto& c = coords_[axis];
        auto it = std::lower_bound(c.begin(), c.end(), x);
        if (it == c.begin()) return 0;
        if (it == c.end()) return c.size() - 1;
        const auto hi = static_cast<std::size_t>(it - c.begin());
        return (x - c[hi - 1] <= c[hi] - x) ? hi - 1 : hi;
    }

    /// Position relative to the centre.
    std::array<double, 3> position(std::size_t i, std::size_t j, std::size_t k) const {
        return {coords_[0][i], coords_[1][j], coords_[2][k]};
    }

    /// Whether spacing is h everywhere.
    bool uniform() const { return spec_.growth == 1.0; }

private:
    GridSpec spec_;
    std::array<std::vector<double>, 3> coords_;
    std::array<std::vector<double>, 3> dual_;
    std::array<std::vector<double>, 3> inv_len_;
    std::array<std::size_t, 3> size_{};
};

enum class NodeKind : std::uint8_t { Free = 0, Gamma = 1, Outside = 2 };

/// Nodal values on a TensorGrid.
struct ScalarField {
    TensorGrid grid;
    std::vector<double> values;
    std::vector<NodeKind> kinds;
    std::size_t iterations = 0;
    double rel_residual = 0.0;

    double at(std::size_t i, std::size_t j, std::size_t k) const { return values[grid.index(i, j, k)]; }
};

} // namespace thinobs

#endif
