#include "latnet/datagen/dataset.hpp"

#include "latnet/datagen/rng.hpp"
#include "latnet/error.hpp"
#include "latnet/lbm/snapshot.hpp"
#include "latnet/lbm/solver.hpp"
#include "latnet/util/keyvalue.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

namespace latnet::datagen {
namespace fs = std::filesystem;
namespace {

std::string numbered(const char* prefix, std::size_t k, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%04zu%s", prefix, k, suffix);
    return buf;
}

void round_to_float(lbm::LatticeState& s) {
    for (double& v : s.f) v = static_cast<double>(static_cast<float>(v));
}

std::string encode_object(const SceneObject& o) {
    return std::string(to_string(o.shape)) + "," + std::to_string(o.cx) + "," + std::to_string(o.cy) + "," +
           util::format_exact(o.hx) + "," + util::format_exact(o.hy);
}

SceneObject decode_object(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 5) throw FormatError("object entry must have 5 fields: '" + text + "'", 0);
    SceneObject o;
    o.shape = object_shape_from_string(parts[0]);
    o.cx = std::stoi(parts[1]);
    o.cy = std::stoi(parts[2]);
    o.hx = util::parse_double(parts[3]);
    o.hy = util::parse_double(parts[4]);
    return o;
}

}  // namespace

void DatasetConfig::validate() const {
    if (runs < 0) throw InvalidInputError("runs must be non-negative");
    if (nx < 3 || ny < 1) throw InvalidInputError("grid too small");
    if (frames_per_run < 1) throw InvalidInputError("frames per run must be at least 1");
    if (subsample_interval < 1) throw InvalidInputError("subsample interval must be at least 1");
    if (warmup_steps < 0) throw InvalidInputError("warmup must be non-negative");
    solver.validate();
}

DatasetRecord simulate_scene(const SceneSpec& scene, const DatasetConfig& cfg) {
    DatasetRecord rec;
    rec.scene = scene;
    rec.mask = rasterize(scene);
    rec.subsample_interval = cfg.subsample_interval;
    rec.warmup_steps = cfg.warmup_steps;
    lbm::Solver solver(lbm::uniform_state(rec.mask, 1.0, cfg.solver.inlet_velocity, 0.0), rec.mask, cfg.solver);
    solver.run(cfg.warmup_steps);
    rec.frames.reserve(static_cast<std::size_t>(cfg.frames_per_run));
    for (int k = 0; k < cfg.frames_per_run; ++k) {
        if (k > 0) solver.run(cfg.subsample_interval);
        lbm::LatticeState frame = solver.state();
        round_to_float(frame);
        rec.frames.push_back(std::move(frame));
    }
    return rec;
}

Dataset generate_dataset(const DatasetConfig& cfg, const LogFn& log) {
    cfg.validate();
    Dataset ds;
    ds.config = cfg;
    std::uint64_t attempt = 0;
    while (static_cast<int>(ds.runs.size()) < cfg.runs) {
        const std::uint64_t scene_seed = mix_seed(cfg.seed, attempt++);
        SceneSpec scene = random_scene(cfg.nx, cfg.ny, cfg.object_count, cfg.sizes, scene_seed);
        try {
            ds.runs.push_back(simulate_scene(scene, cfg));
        } catch (const InstabilityError& e) {
            ++ds.discarded_unstable;
            if (log) log("discarding unstable run (scene seed " + std::to_string(scene_seed) + "): " + e.what());
            if (2 * ds.discarded_unstable > cfg.runs) {
                throw DistributionError(std::to_string(ds.discarded_unstable) + " of " + std::to_string(cfg.runs) +
                                        " runs were unstable; solver configuration is unusable for this scene "
                                        "distribution");
            }
        }
    }
    return ds;
}

void save_record(const std::string& run_dir, const DatasetRecord& record) {
    fs::create_directories(run_dir);
    util::KeyValue kv;
    kv.set("nx", record.scene.nx);
    kv.set("ny", record.scene.ny);
    kv.set("scene_seed", record.scene.seed);
    kv.set("object_count", static_cast<int>(record.scene.objects.size()));
    for (std::size_t k = 0; k < record.scene.objects.size(); ++k) {
        kv.set(numbered("object_", k, ""), encode_object(record.scene.objects[k]));
    }
    kv.set("interval", record.subsample_interval);
    kv.set("warmup", record.warmup_steps);
    kv.set("frames", static_cast<int>(record.frames.size()));
    kv.write_file((fs::path(run_dir) / "run.txt").string());
    lbm::write_snapshot((fs::path(run_dir) / "mask.lblt").string(), lbm::to_snapshot(record.mask));
    for (std::size_t k = 0; k < record.frames.size(); ++k) {
        lbm::write_snapshot((fs::path(run_dir) / numbered("frame_", k, ".lblt")).string(),
                            lbm::to_snapshot(record.frames[k]));
    }
}

DatasetRecord load_record(const std::string& run_dir) {
    const util::KeyValue kv = util::KeyValue::read_file((fs::path(run_dir) / "run.txt").string());
    DatasetRecord rec;
    rec.scene.nx = static_cast<int>(kv.get_int("nx"));
    rec.scene.ny = static_cast<int>(kv.get_int("ny"));
    rec.scene.seed = kv.get_uint("scene_seed");
    const auto objects = kv.get_int("object_count");
    for (std::int64_t k = 0; k < objects; ++k) {
        rec.scene.objects.push_back(decode_object(kv.get(numbered("object_", static_cast<std::size_t>(k), ""))));
    }
    rec.subsample_interval = static_cast<int>(kv.get_int("interval"));
    rec.warmup_steps = static_cast<int>(kv.get_int("warmup"));
    rec.mask = lbm::mask_from_snapshot(lbm::read_snapshot((fs::path(run_dir) / "mask.lblt").string()));
    if (rec.mask.nx != rec.scene.nx || rec.mask.ny != rec.scene.ny) {
        throw ShapeError("mask dims do not match run metadata in " + run_dir);
    }
    const auto frames = kv.get_int("frames");
    for (std::int64_t k = 0; k < frames; ++k) {
        rec.frames.push_back(lbm::lattice_from_snapshot(lbm::read_snapshot(
            (fs::path(run_dir) / numbered("frame_", static_cast<std::size_t>(k), ".lblt")).string())));
        if (rec.frames.back().nx != rec.mask.nx || rec.frames.back().ny != rec.mask.ny) {
            throw ShapeError("frame dims do not match mask in " + run_dir);
        }
    }
    return rec;
}

void save_dataset(const std::string& dir, const Dataset& dataset) {
    const fs::path target(dir);
    const fs::path partial(dir + ".partial");
    if (fs::exists(target) && !fs::exists(target / "dataset.txt")) {
        throw IoError("refusing to overwrite '" + dir + "': not a dataset directory");
    }
    std::error_code ec;
    fs::remove_all(partial, ec);
    fs::create_directories(partial, ec);
    if (ec) throw IoError("cannot create '" + partial.string() + "': " + ec.message());

    const DatasetConfig& c = dataset.config;
    util::KeyValue kv;
    kv.set("format_version", kDatasetFormatVersion);
    kv.set("runs", static_cast<int>(dataset.runs.size()));
    kv.set("nx", c.nx);
    kv.set("ny", c.ny);
    kv.set("seed", c.seed);
    kv.set("tau", c.solver.tau);
    kv.set("inlet_velocity", c.solver.inlet_velocity);
    kv.set("boundary_mode", std::string(lbm::to_string(c.solver.boundary_mode)));
    kv.set("interval", c.subsample_interval);
    kv.set("warmup", c.warmup_steps);
    kv.set("frames", c.frames_per_run);
    kv.set("objects", c.object_count);
    kv.set("size_min", c.sizes.min);
    kv.set("size_max", c.sizes.max);
    kv.set("discarded_unstable", dataset.discarded_unstable);
    for (std::size_t r = 0; r < dataset.runs.size(); ++r) {
        save_record((partial / numbered("run_", r, "")).string(), dataset.runs[r]);
    }
    kv.write_file((partial / "dataset.txt").string());

    fs::remove_all(target, ec);
    fs::rename(partial, target, ec);
    if (ec) throw IoError("cannot move dataset into '" + dir + "': " + ec.message());
}

Dataset load_dataset(const std::string& dir) {
    const util::KeyValue kv = util::KeyValue::read_file((fs::path(dir) / "dataset.txt").string());
    const auto version = kv.get_int("format_version");
    if (version != kDatasetFormatVersion) {
        throw VersionError("dataset", static_cast<unsigned>(version), kDatasetFormatVersion);
    }
    Dataset ds;
    DatasetConfig& c = ds.config;
    c.runs = static_cast<int>(kv.get_int("runs"));
    c.nx = static_cast<int>(kv.get_int("nx"));
    c.ny = static_cast<int>(kv.get_int("ny"));
    c.seed = kv.get_uint("seed");
    c.solver.tau = kv.get_double("tau");
    c.solver.inlet_velocity = kv.get_double("inlet_velocity");
    c.solver.boundary_mode = lbm::boundary_mode_from_string(kv.get("boundary_mode"));
    c.subsample_interval = static_cast<int>(kv.get_int("interval"));
    c.warmup_steps = static_cast<int>(kv.get_int("warmup"));
    c.frames_per_run = static_cast<int>(kv.get_int("frames"));
    c.object_count = static_cast<int>(kv.get_int("objects"));
    c.sizes.min = static_cast<int>(kv.get_int("size_min"));
    c.sizes.max = static_cast<int>(kv.get_int("size_max"));
    ds.discarded_unstable = static_cast<int>(kv.get_int("discarded_unstable", 0));
    for (int r = 0; r < c.runs; ++r) {
        ds.runs.push_back(load_record((fs::path(dir) / numbered("run_", static_cast<std::size_t>(r), "")).string()));
    }
    return ds;
}

}  // namespace latnet::datagen
