#include "slp/grid_map.hpp"

#include <algorithm>
#include <cmath>

namespace slp::grid
{
    GridMap::GridMap(double resolution_, const Vec3 &origin_, const Cell &dims_)
        : resolution(resolution_), origin(origin_), dims(dims_)
    {
        if (!(resolution > 0.0))
            throw Error(ErrorCode::UsageError, "grid map resolution must be positive");
        if (dims.x() <= 0 || dims.y() <= 0 || dims.z() <= 0)
            throw Error(ErrorCode::UsageError, "grid map dimensions must be positive");
        occ.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), 0);
    }

    Cell GridMap::world_to_cell(const Vec3 &p) const
    {
        const Vec3 rel = (p - origin) / resolution;
        return Cell(static_cast<int>(std::floor(rel.x())),
                    static_cast<int>(std::floor(rel.y())),
                    static_cast<int>(std::floor(rel.z())));
    }

    Vec3 GridMap::cell_center(const Cell &c) const
    {
        return origin + resolution * (c.cast<double>() + Vec3::Constant(0.5));
    }

    void GridMap::set_occupied(const Cell &c, bool value)
    {
        if (!in_bounds(c))
            throw Error(ErrorCode::UsageError, "set_occupied: cell outside the lattice");
        occ[index(c)] = value ? 1 : 0;
    }

    void GridMap::mark_box(const Vec3 &lo, const Vec3 &hi)
    {
        if ((hi - lo).minCoeff() < 0.0)
            throw Error(ErrorCode::UsageError, "mark_box: box corners are inverted");
        // The 1e-9 nudge keeps boxes whose faces land exactly on cell
        // boundaries from leaking one extra voxel layer.
        Cell clo, chi;
        for (int k = 0; k < 3; ++k)
        {
            clo[k] = std::max(0, static_cast<int>(std::floor((lo[k] - origin[k]) / resolution + 1e-9)));
            chi[k] = std::min(dims[k] - 1,
                              static_cast<int>(std::floor((hi[k] - origin[k]) / resolution - 1e-9)));
        }
        for (int i = clo.x(); i <= chi.x(); ++i)
            for (int j = clo.y(); j <= chi.y(); ++j)
                for (int k = clo.z(); k <= chi.z(); ++k)
                    occ[index(Cell(i, j, k))] = 1;
    }

    std::vector<Vec3> GridMap::obstacle_points() const
    {
        std::vector<Vec3> pts;
        for (int k = 0; k < dims.z(); ++k)
            for (int j = 0; j < dims.y(); ++j)
                for (int i = 0; i < dims.x(); ++i)
                {
                    const Cell c(i, j, k);
                    if (occ[index(c)])
                        pts.push_back(cell_center(c));
                }
        return pts;
    }

    std::vector<Vec3> GridMap::obstacle_points_in_box(const Vec3 &lo, const Vec3 &hi) const
    {
        std::vector<Vec3> pts;
        Cell clo, chi;
        for (int k = 0; k < 3; ++k)
        {
            clo[k] = std::max(0, static_cast<int>(std::floor((lo[k] - origin[k]) / resolution)));
            chi[k] = std::min(dims[k] - 1,
                              static_cast<int>(std::floor((hi[k] - origin[k]) / resolution)));
        }
        for (int i = clo.x(); i <= chi.x(); ++i)
            for (int j = clo.y(); j <= chi.y(); ++j)
                for (int k = clo.z(); k <= chi.z(); ++k)
                {
                    const Cell c(i, j, k);
                    if (!occ[index(c)])
                        continue;
                    const Vec3 p = cell_center(c);
                    if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all())
                        pts.push_back(p);
                }
        return pts;
    }

    bool GridMap::sphere_collides(const Vec3 &center, double r) const
    {
        if (!(r >= 0.0))
            throw Error(ErrorCode::UsageError, "sphere_collides: radius must be non-negative");
        const Vec3 rel = center - origin;
        Cell lo, hi;
        for (int k = 0; k < 3; ++k)
        {
            lo[k] = std::max(0, static_cast<int>(std::floor((rel[k] - r) / resolution)));
            hi[k] = std::min(dims[k] - 1, static_cast<int>(std::floor((rel[k] + r) / resolution)));
        }
        const double r2 = r * r;
        for (int i = lo.x(); i <= hi.x(); ++i)
            for (int j = lo.y(); j <= hi.y(); ++j)
                for (int k = lo.z(); k <= hi.z(); ++k)
                {
                    const Cell c(i, j, k);
                    if (!occ[index(c)])
                        continue;
                    double d2 = 0.0;
                    for (int ax = 0; ax < 3; ++ax)
                    {
                        const double c0 = origin[ax] + resolution * c[ax];
                        const double q = std::clamp(center[ax], c0, c0 + resolution);
                        d2 += (center[ax] - q) * (center[ax] - q);
                    }
                    if (d2 <= r2)
                        return true;
                }
        return false;
    }

    bool GridMap::segment_collides(const Vec3 &a, const Vec3 &b, double r) const
    {
        if (!(r > 0.0))
            throw Error(ErrorCode::UsageError, "segment_collides: radius must be positive");
        const double len = (b - a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(len / std::min(resolution, r))));
        for (int i = 0; i <= n; ++i)
        {
            const double t = static_cast<double>(i) / n;
            if (sphere_collides(a + t * (b - a), r))
                return true;
        }
        return false;
    }

    DilatedMask GridMap::dilate(double radius) const
    {
        if (!(radius >= 0.0))
            throw Error(ErrorCode::UsageError, "dilate: radius must be non-negative");
        DilatedMask m;
        m.dims = dims;
        m.radius = radius;
        m.data.assign(occ.size(), 0);

        // A cell must be marked when some point inside it can be within
        // `radius` of an occupied cube; center-to-cube distance plus the
        // half-diagonal bounds that reach.
        const double reach = radius + 0.5 * std::sqrt(3.0) * resolution;
        const int R = static_cast<int>(std::ceil(reach / resolution)) + 1;
        std::vector<Cell> offsets;
        for (int dx = -R; dx <= R; ++dx)
            for (int dy = -R; dy <= R; ++dy)
                for (int dz = -R; dz <= R; ++dz)
                {
                    double d2 = 0.0;
                    for (int v : {dx, dy, dz})
                    {
                        const double d = std::max(0.0, (std::abs(v) - 0.5)) * resolution;
                        d2 += d * d;
                    }
                    if (d2 <= reach * reach)
                        offsets.emplace_back(dx, dy, dz);
                }

        for (int k = 0; k < dims.z(); ++k)
            for (int j = 0; j < dims.y(); ++j)
                for (int i = 0; i < dims.x(); ++i)
                {
                    const Cell c(i, j, k);
                    if (!occ[index(c)])
                        continue;
                    for (const Cell &d : offsets)
                    {
                        const Cell t = c + d;
                        if (in_bounds(t))
                            m.data[index(t)] = 1;
                    }
                }
        return m;
    }

} // namespace slp::grid
