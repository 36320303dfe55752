#ifndef SLP_GRID_MAP_HPP
#define SLP_GRID_MAP_HPP

// Axis-aligned voxel occupancy map. Cell (i,j,k) is the cube
// origin + resolution * [i,i+1) x [j,j+1) x [k,k+1); occupied cells act as
// solid cubes in collision queries and their centers form the raw obstacle
// point cloud consumed by corridor inflation. Space outside the lattice is
// treated as free: the map is the extent of the known world.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "slp/error.hpp"
#include "slp/geometry.hpp"

namespace slp::grid
{
    using geom::Vec3;
    using Cell = Eigen::Vector3i;

    // Conservative may-collide mask for one query radius: when maybe() is
    // false for a point's cell, a ball of that radius centered anywhere in
    // the cell is guaranteed free; cells marked true (and points outside the
    // lattice) need an exact test.
    struct DilatedMask
    {
        Cell dims{Cell::Zero()};
        double radius{0.0};
        std::vector<uint8_t> data;

        bool maybe(const Cell &c) const
        {
            if (c.x() < 0 || c.y() < 0 || c.z() < 0 ||
                c.x() >= dims.x() || c.y() >= dims.y() || c.z() >= dims.z())
                return true;
            return data[static_cast<std::size_t>((c.z() * dims.y() + c.y()) * dims.x() + c.x())] != 0;
        }
    };

    struct GridMap
    {
        double resolution{0.1};
        Vec3 origin{Vec3::Zero()};
        Cell dims{Cell::Zero()};
        std::vector<uint8_t> occ;

        GridMap() = default;

        // Throws UsageError unless resolution > 0 and every dimension is
        // positive.
        GridMap(double resolution_, const Vec3 &origin_, const Cell &dims_);

        std::size_t index(const Cell &c) const
        {
            return static_cast<std::size_t>((c.z() * dims.y() + c.y()) * dims.x() + c.x());
        }

        bool in_bounds(const Cell &c) const
        {
            return c.x() >= 0 && c.y() >= 0 && c.z() >= 0 &&
                   c.x() < dims.x() && c.y() < dims.y() && c.z() < dims.z();
        }

        Cell world_to_cell(const Vec3 &p) const;
        Vec3 cell_center(const Cell &c) const;
        Vec3 min_corner() const { return origin; }
        Vec3 max_corner() const { return origin + resolution * dims.cast<double>(); }

        // Cells outside the lattice read as free.
        bool occupied(const Cell &c) const { return in_bounds(c) && occ[index(c)] != 0; }

        // Throws UsageError for cells outside the lattice.
        void set_occupied(const Cell &c, bool value = true);

        // Occupies every cell whose cube intersects the box [lo, hi] with
        // positive measure, clipped to the lattice. Requires lo <= hi.
        void mark_box(const Vec3 &lo, const Vec3 &hi);

        std::vector<Vec3> obstacle_points() const;

        // Occupied cell centers inside the box [lo, hi].
        std::vector<Vec3> obstacle_points_in_box(const Vec3 &lo, const Vec3 &hi) const;

        // Exact closed-set test of the ball (center, r) against occupied
        // cubes: touching counts as a collision.
        bool sphere_collides(const Vec3 &center, double r) const;

        // Sampled capsule test: spheres of radius r along [a, b] at spacing
        // min(resolution, r), endpoints included. Requires r > 0.
        bool segment_collides(const Vec3 &a, const Vec3 &b, double r) const;

        // Builds the conservative may-collide mask for the given radius by
        // dilating occupied cells; cost scales with the occupied count.
        DilatedMask dilate(double radius) const;
    };

} // namespace slp::grid

#endif
