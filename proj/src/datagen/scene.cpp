#include "latnet/datagen/scene.hpp"

#include "latnet/datagen/rng.hpp"
#include "latnet/error.hpp"

#include <cmath>

namespace latnet::datagen {
namespace {

constexpr int kMaxPlacementAttempts = 1000;

bool fits(const SceneObject& o, int nx, int ny) {
    return o.cx - o.hx >= 1.0 && o.cx + o.hx <= nx - 2.0 && o.cy - o.hy >= 0.0 && o.cy + o.hy <= ny - 1.0;
}

}  // namespace

void SceneSpec::validate() const {
    if (nx < 3 || ny < 1) throw InvalidInputError("scene grid too small");
    for (const auto& o : objects) {
        if (!(o.hx > 0.0) || !(o.hy > 0.0)) throw InvalidInputError("object half-extents must be positive");
        if (!fits(o, nx, ny)) {
            throw InvalidInputError("object at (" + std::to_string(o.cx) + "," + std::to_string(o.cy) +
                                    ") touches the inlet/outlet columns or leaves the grid");
        }
    }
}

SceneSpec random_scene(int nx, int ny, int object_count, SizeRange sizes, std::uint64_t seed) {
    if (object_count < 0) throw InvalidInputError("object count must be non-negative");
    if (sizes.min < 1 || sizes.max < sizes.min) throw InvalidInputError("invalid object size range");
    if (object_count > 0 && (sizes.min > nx - 3 || sizes.min > ny - 1)) {
        throw InvalidInputError("object sizes [" + std::to_string(sizes.min) + "," + std::to_string(sizes.max) +
                                "] cannot fit a " + std::to_string(nx) + "x" + std::to_string(ny) +
                                " grid with inlet/outlet margins");
    }
    SceneSpec scene;
    scene.nx = nx;
    scene.ny = ny;
    scene.seed = seed;
    Rng rng(seed);
    for (int k = 0; k < object_count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
            SceneObject o;
            o.shape = rng.uniform_int(0, 1) == 0 ? ObjectShape::rectangle : ObjectShape::ellipse;
            o.hx = 0.5 * static_cast<double>(rng.uniform_int(sizes.min, sizes.max));
            o.hy = 0.5 * static_cast<double>(rng.uniform_int(sizes.min, sizes.max));
            o.cx = static_cast<int>(rng.uniform_int(0, nx - 1));
            o.cy = static_cast<int>(rng.uniform_int(0, ny - 1));
            if (fits(o, nx, ny)) {
                scene.objects.push_back(o);
                placed = true;
            }
        }
        if (!placed) {
            throw PlacementError("could not place object " + std::to_string(k) + " after " +
                                 std::to_string(kMaxPlacementAttempts) + " attempts");
        }
    }
    return scene;
}

lbm::BoundaryMask rasterize(const SceneSpec& scene) {
    scene.validate();
    lbm::BoundaryMask mask(scene.nx, scene.ny);
    for (const auto& o : scene.objects) {
        const int x0 = static_cast<int>(std::ceil(o.cx - o.hx));
        const int x1 = static_cast<int>(std::floor(o.cx + o.hx));
        const int y0 = static_cast<int>(std::ceil(o.cy - o.hy));
        const int y1 = static_cast<int>(std::floor(o.cy + o.hy));
        for (int x = x0; x <= x1; ++x) {
            for (int y = y0; y <= y1; ++y) {
                const double dx = x - o.cx;
                const double dy = y - o.cy;
                bool inside = true;
                if (o.shape == ObjectShape::ellipse) {
                    // Cross-multiplied so half-integer extents stay exact.
                    inside = dx * dx * o.hy * o.hy + dy * dy * o.hx * o.hx <= o.hx * o.hx * o.hy * o.hy;
                }
                if (inside) mask.set_solid(x, y);
            }
        }
    }
    return mask;
}

const char* to_string(ObjectShape shape) {
    return shape == ObjectShape::rectangle ? "rectangle" : "ellipse";
}

ObjectShape object_shape_from_string(const std::string& name) {
    if (name == "rectangle") return ObjectShape::rectangle;
    if (name == "ellipse") return ObjectShape::ellipse;
    throw InvalidInputError("unknown object shape '" + name + "'");
}

}  // namespace latnet::datagen
