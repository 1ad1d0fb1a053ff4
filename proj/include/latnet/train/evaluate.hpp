#pragma once

#include "latnet/datagen/dataset.hpp"
#include "latnet/lbm/metrics.hpp"
#include "latnet/model/latnet.hpp"

#include <string>
#include <vector>

namespace latnet::train {

/// Per-step metric series for one run; entry k describes step k + 1.
/// Entries after a recorded failure are NaN.
struct MetricSeries {
    std::vector<double> mse;
    std::vector<double> div_generated;
    std::vector<double> div_true;
    std::vector<lbm::Vec2> drag_generated;
    std::vector<lbm::Vec2> drag_true;
    std::vector<lbm::Vec2> flux_generated;
    std::vector<lbm::Vec2> flux_true;
    long failure_step = -1;  ///< first step that produced non-finite values, -1 if none

    std::size_t size() const { return mse.size(); }
};

struct RolloutReport {
    int horizon = 0;
    std::vector<MetricSeries> runs;
    MetricSeries mean;
    MetricSeries std;  ///< population standard deviation across runs
};

/// Metrics of predicted[k] against truth.frames[k + 1] for k < horizon.
/// `predicted` may be shorter than horizon when the rollout failed at step
/// failure_step; the remaining entries become NaN. Drag is zero for masks
/// without solid cells.
MetricSeries compare_frames(const datagen::DatasetRecord& truth, const std::vector<lbm::LatticeState>& predicted,
                            int horizon, long failure_step = -1,
                            lbm::BoundaryMode mode = lbm::BoundaryMode::periodic_y_inlet_outlet_x);

/// Mean and population std over runs, per step, skipping NaN entries.
void aggregate(RolloutReport& report);

/// Rolls the model out from frame 0 of every run for `horizon` steps and
/// compares against the stored frames. Throws InvalidInputError naming the
/// available frames if a run is too short.
RolloutReport evaluate(model::LatNet<float>& net, const datagen::Dataset& data, int horizon);

/// Truth compared with itself (tooling check).
RolloutReport evaluate_self(const datagen::Dataset& data, int horizon);

/// Columns: run,step,mse,div_generated,div_true,drag_generated_x,drag_generated_y,
/// drag_true_x,drag_true_y,flux_generated_x,flux_generated_y,flux_true_x,flux_true_y
void write_runs_csv(const std::string& path, const RolloutReport& report);
/// Columns: step, then <metric>_mean,<metric>_std for each metric column above.
void write_aggregate_csv(const std::string& path, const RolloutReport& report);

}  // namespace latnet::train
