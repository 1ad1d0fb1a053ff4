#pragma once

#include "latnet/lbm/lattice.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace latnet::datagen {

enum class ObjectShape { rectangle, ellipse };

/// Axis-aligned obstacle centered on a cell. Half-extents are in cells; a
/// rectangle covers |dx| <= hx, |dy| <= hy and an ellipse covers
/// (dx/hx)^2 + (dy/hy)^2 <= 1.
struct SceneObject {
    ObjectShape shape = ObjectShape::rectangle;
    int cx = 0;
    int cy = 0;
    double hx = 1.0;
    double hy = 1.0;

    bool operator==(const SceneObject&) const = default;
};

struct SceneSpec {
    int nx = 0;
    int ny = 0;
    std::vector<SceneObject> objects;
    std::uint64_t seed = 0;

    /// Throws InvalidInputError if an object reaches column 0 or nx - 1 or
    /// leaves the grid in y.
    void validate() const;

    bool operator==(const SceneSpec&) const = default;
};

/// Full object width/height range in cells (the half-extent is size / 2).
struct SizeRange {
    int min = 6;
    int max = 20;
};

/// Places `object_count` rectangles/ellipses with independent random width
/// and height in `sizes`, deterministically from `seed`. Objects may overlap
/// each other. Throws PlacementError after 1000 rejected placements for one
/// object and InvalidInputError if the size range cannot fit the grid.
SceneSpec random_scene(int nx, int ny, int object_count, SizeRange sizes, std::uint64_t seed);

/// Union of all objects as a solid mask.
lbm::BoundaryMask rasterize(const SceneSpec& scene);

const char* to_string(ObjectShape shape);
ObjectShape object_shape_from_string(const std::string& name);

}  // namespace latnet::datagen
