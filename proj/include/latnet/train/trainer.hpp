#pragma once

#include "latnet/ad/optim.hpp"
#include "latnet/datagen/dataset.hpp"
#include "latnet/model/latnet.hpp"
#include "latnet/util/keyvalue.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace latnet::train {

struct TrainConfig {
    int unroll_steps = 5;
    double lambda_gdl = 0.2;
    ad::AdamConfig adam{};
    int batch_size = 4;
    long max_steps = 500;
    std::uint64_t seed = 1;
    /// Steps between history log lines (0 disables logging).
    int eval_interval = 10;
    /// Steps between periodic checkpoints (0 disables them).
    int checkpoint_interval = 100;
    /// Abort when a loss exceeds factor x the mean of the previous `window` losses.
    double divergence_factor = 100.0;
    int divergence_window = 10;

    void validate() const;
    /// Keys under "train.*".
    void write(util::KeyValue& kv) const;
    /// Missing keys keep the values already in `base`.
    static TrainConfig read(const util::KeyValue& kv, TrainConfig base);
    static TrainConfig read(const util::KeyValue& kv);
};

/// unroll_steps + 1 consecutive frames of one run starting at `start`.
struct Window {
    std::size_t run = 0;
    std::size_t start = 0;
    bool operator==(const Window&) const = default;
};

/// Every (run, start) whose window fits inside its run, in run-major order.
std::vector<Window> enumerate_windows(const datagen::Dataset& data, int unroll_steps);

/// Batched training sample: masks (n, nx, ny, 1) and frames[t] (n, nx, ny, 9)
/// for t = 0..unroll_steps.
template <typename T>
struct Batch {
    ad::Tensor<T> mask;
    std::vector<ad::Tensor<T>> frames;
};

/// Throws ShapeError if the windows come from runs with different grids.
template <typename T>
Batch<T> make_batch(const datagen::Dataset& data, const std::vector<Window>& windows, int unroll_steps);

template <typename T>
struct LossTerms {
    ad::Var<T> total;     ///< mse_part + lambda * gdl_part
    ad::Var<T> mse_part;  ///< sum_t mse_t / U
    ad::Var<T> gdl_part;  ///< sum_t gdl_t / U
};

/// Loss of predictions[t-1] against targets[t-1] for t = 1..U.
template <typename T>
LossTerms<T> prediction_loss(const std::vector<ad::Var<T>>& predictions, const std::vector<ad::Var<T>>& targets,
                             double lambda_gdl);

/// g_0 = encode_flow(f_0), g_t = compress_step(g_{t-1}), prediction_t = decode(g_t).
/// Throws NumericError carrying the unroll step at which a value went non-finite.
template <typename T>
LossTerms<T> unrolled_loss(ad::Graph<T>& graph, model::LatNet<T>& net, const Batch<T>& batch, double lambda_gdl);

struct HistoryRecord {
    long step = 0;  ///< 1-based optimizer step
    double total = 0, mse = 0, gdl = 0;
    double wall_seconds = 0;  ///< since the start of this train() call
};

struct TrainCallbacks {
    std::function<void(const HistoryRecord&)> on_record;
    /// Called after every checkpoint_interval-th step and after the last step.
    std::function<void(long step)> on_checkpoint;
    datagen::LogFn log;
};

struct TrainResult {
    std::vector<HistoryRecord> history;
    long final_step = 0;
};

/// Window `k` of the deterministic sample stream: epoch k / W visits all W
/// windows in an order shuffled by (seed, epoch).
Window sample_window(const std::vector<Window>& windows, std::uint64_t seed, std::uint64_t k);

/// Runs optimizer steps start_step+1 .. max_steps. The sample stream depends
/// only on (seed, step), so resuming from a checkpoint taken at step s with
/// start_step = s reproduces an uninterrupted run. Throws DivergenceError
/// (before applying the offending update) when the guard trips.
TrainResult train(model::LatNet<float>& net, const datagen::Dataset& data, const TrainConfig& cfg, long start_step = 0,
                  const TrainCallbacks& callbacks = {}, std::vector<double> recent_losses = {});

/// CSV with header step,total_loss,mse,gdl,wall_seconds.
void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& history, bool append = false);
std::vector<HistoryRecord> read_history_csv(const std::string& path);

}  // namespace latnet::train
