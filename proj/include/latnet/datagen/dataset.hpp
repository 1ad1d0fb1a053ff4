#pragma once

#include "latnet/datagen/scene.hpp"
#include "latnet/lbm/lattice.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace latnet::datagen {

struct DatasetConfig {
    int runs = 10;
    int nx = 64;
    int ny = 64;
    int object_count = 2;
    SizeRange sizes{6, 20};
    lbm::SolverConfig solver{};
    int warmup_steps = 0;
    int frames_per_run = 32;
    int subsample_interval = 120;
    std::uint64_t seed = 1;

    void validate() const;
};

/// One solver run: its scene, mask and frames taken every
/// `subsample_interval` steps. Frame k is the state after
/// warmup_steps + k * subsample_interval solver steps. Frame values are
/// rounded to float precision so an in-memory record equals its on-disk copy.
struct DatasetRecord {
    SceneSpec scene;
    lbm::BoundaryMask mask;
    std::vector<lbm::LatticeState> frames;
    int subsample_interval = 120;
    int warmup_steps = 0;

    long frame_step(std::size_t k) const {
        return static_cast<long>(warmup_steps) + static_cast<long>(k) * subsample_interval;
    }
    bool operator==(const DatasetRecord&) const = default;
};

struct Dataset {
    DatasetConfig config;
    std::vector<DatasetRecord> runs;
    int discarded_unstable = 0;
};

using LogFn = std::function<void(const std::string&)>;

/// Runs one scene through the solver and records frames. Throws
/// InstabilityError if the solver blows up.
DatasetRecord simulate_scene(const SceneSpec& scene, const DatasetConfig& cfg);

/// Generates cfg.runs stable runs. Each attempt draws a fresh scene seed from
/// the master seed; unstable attempts are logged and replaced. Throws
/// DistributionError if more than half of cfg.runs attempts were unstable.
Dataset generate_dataset(const DatasetConfig& cfg, const LogFn& log = {});

/// Directory layout:
///   dataset.txt             key=value metadata (format_version, runs, nx, ny, seed,
///                           tau, inlet_velocity, boundary_mode, interval, warmup,
///                           frames, objects, size_min, size_max, discarded_unstable)
///   run_NNNN/run.txt        scene and sampling metadata for one run
///   run_NNNN/mask.lblt      (nx, ny, 1) mask
///   run_NNNN/frame_KKKK.lblt (nx, ny, 9) frames
/// The directory is written as "<dir>.partial" and renamed when complete.
void save_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

void save_record(const std::string& run_dir, const DatasetRecord& record);
DatasetRecord load_record(const std::string& run_dir);

inline constexpr int kDatasetFormatVersion = 1;

}  // namespace latnet::datagen
