#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pursuit {

// Periodic square lattice of side L (odd, >= 5) with spacing dx.
// All geometry on the torus goes through this header: wrapping,
// minimum-image displacements, the 4-action set, capture tests and
// the D4 symmetry group of the square.

struct GridSpec {
    int side = 51;        // L, lattice sites per side
    double spacing = 1.0; // dx

    GridSpec() = default;
    GridSpec(int side_length, double dx) : side(side_length), spacing(dx) {
        if (side < 5) throw std::invalid_argument("GridSpec: side must be >= 5");
        if (side % 2 == 0) throw std::invalid_argument("GridSpec: side must be odd");
        if (!(spacing > 0.0)) throw std::invalid_argument("GridSpec: spacing must be > 0");
    }

    int cells() const { return side * side; }
};

struct LatticePoint {
    int i = 0;
    int j = 0;
    friend bool operator==(LatticePoint a, LatticePoint b) = default;
};

// Minimum-image displacement; components lie in [-L/2, L/2] for odd L.
struct Displacement {
    int di = 0;
    int dj = 0;
    friend bool operator==(Displacement a, Displacement b) = default;

    long norm_sq_cells() const {
        return static_cast<long>(di) * di + static_cast<long>(dj) * dj;
    }
};

inline int wrap_coord(int v, int side) {
    int r = v % side;
    return r < 0 ? r + side : r;
}

inline LatticePoint wrap(int i, int j, const GridSpec& g) {
    return {wrap_coord(i, g.side), wrap_coord(j, g.side)};
}

inline LatticePoint wrap(LatticePoint p, const GridSpec& g) { return wrap(p.i, p.j, g); }

inline int pos_index(LatticePoint p, const GridSpec& g) { return p.i * g.side + p.j; }

inline LatticePoint point_from_index(int idx, const GridSpec& g) {
    return {idx / g.side, idx % g.side};
}

// Unique minimum-image representative of a single coordinate difference.
inline int min_image_coord(int delta, int side) {
    int r = wrap_coord(delta, side);
    return r > side / 2 ? r - side : r;
}

// Torus displacement a - b with the smallest Euclidean norm. For odd L the
// representative is unique, so min_image(a,b) == -min_image(b,a) always.
inline Displacement min_image(LatticePoint a, LatticePoint b, const GridSpec& g) {
    return {min_image_coord(a.i - b.i, g.side), min_image_coord(a.j - b.j, g.side)};
}

// Slot in a dense L*L table indexed by wrapped displacement.
inline int disp_index(Displacement d, const GridSpec& g) {
    return wrap_coord(d.di, g.side) * g.side + wrap_coord(d.dj, g.side);
}

inline Displacement disp_from_index(int idx, const GridSpec& g) {
    return {min_image_coord(idx / g.side, g.side), min_image_coord(idx % g.side, g.side)};
}

// The four unit moves available to the agent.
enum class Action : std::uint8_t { east = 0, west = 1, north = 2, south = 3 };

inline constexpr int kNumActions = 4;

inline constexpr std::array<Displacement, kNumActions> kActionSteps = {
    Displacement{1, 0}, Displacement{-1, 0}, Displacement{0, 1}, Displacement{0, -1}};

inline Displacement action_step(Action a) { return kActionSteps[static_cast<int>(a)]; }

inline LatticePoint apply_action(LatticePoint p, Action a, const GridSpec& g) {
    Displacement s = action_step(a);
    return wrap(p.i + s.di, p.j + s.dj, g);
}

// Capture test at the paper's range of sight sqrt(2): integer arithmetic only,
// true exactly on the 3x3 neighborhood.
inline bool within_capture(Displacement d) { return d.norm_sq_cells() <= 2; }

// General radius variant: |d|*dx <= radius, decided on integers by flooring
// (radius/dx)^2 with a tiny guard against representation error of sqrt(2).
inline bool within_capture(Displacement d, double radius, double dx = 1.0) {
    if (!(radius > 0.0)) throw std::invalid_argument("within_capture: radius must be > 0");
    double r = radius / dx;
    long r2 = static_cast<long>(std::floor(r * r + 1e-9));
    return d.norm_sq_cells() <= r2;
}

// Offsets of the capture neighborhood around a cell (9 offsets at radius sqrt(2)).
inline std::vector<Displacement> capture_offsets(double radius = std::sqrt(2.0), double dx = 1.0) {
    double r = radius / dx;
    long r2 = static_cast<long>(std::floor(r * r + 1e-9));
    int reach = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
    std::vector<Displacement> out;
    for (int di = -reach; di <= reach; ++di)
        for (int dj = -reach; dj <= reach; ++dj)
            if (static_cast<long>(di) * di + static_cast<long>(dj) * dj <= r2)
                out.push_back({di, dj});
    return out;
}

// D4, the symmetry group of the square: 4 rotations and 4 reflections.
inline constexpr int kD4Order = 8;

inline Displacement d4_apply(int g, Displacement d) {
    switch (g) {
        case 0: return {d.di, d.dj};
        case 1: return {-d.dj, d.di};
        case 2: return {-d.di, -d.dj};
        case 3: return {d.dj, -d.di};
        case 4: return {d.di, -d.dj};
        case 5: return {-d.di, d.dj};
        case 6: return {d.dj, d.di};
        case 7: return {-d.dj, -d.di};
        default: throw std::invalid_argument("d4_apply: group element out of range");
    }
}

inline Action d4_apply(int g, Action a) {
    Displacement t = d4_apply(g, action_step(a));
    for (int k = 0; k < kNumActions; ++k)
        if (kActionSteps[k] == t) return static_cast<Action>(k);
    throw std::logic_error("d4_apply: action image is not an action");
}

} // namespace pursuit
