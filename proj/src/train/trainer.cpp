#include "latnet/train/trainer.hpp"

#include "latnet/ad/ops.hpp"
#include "latnet/datagen/rng.hpp"
#include "latnet/error.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace latnet::train {

void TrainConfig::validate() const {
    if (unroll_steps < 1) throw InvalidInputError("unroll_steps must be >= 1");
    if (!(lambda_gdl >= 0.0)) throw InvalidInputError("lambda_gdl must be >= 0");
    if (batch_size < 1) throw InvalidInputError("batch_size must be >= 1");
    if (max_steps < 0) throw InvalidInputError("max_steps must be >= 0");
    if (!(adam.lr > 0.0)) throw InvalidInputError("lr must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw InvalidInputError("Adam betas must lie in [0, 1)");
    }
    if (!(adam.eps > 0.0)) throw InvalidInputError("eps must be > 0");
    if (eval_interval < 0 || checkpoint_interval < 0) throw InvalidInputError("intervals must be >= 0");
    if (!(divergence_factor > 1.0) || divergence_window < 1) {
        throw InvalidInputError("divergence guard needs factor > 1 and window >= 1");
    }
}

void TrainConfig::write(util::KeyValue& kv) const {
    kv.set("train.unroll_steps", unroll_steps);
    kv.set("train.lambda_gdl", lambda_gdl);
    kv.set("train.lr", adam.lr);
    kv.set("train.beta1", adam.beta1);
    kv.set("train.beta2", adam.beta2);
    kv.set("train.eps", adam.eps);
    kv.set("train.batch_size", batch_size);
    kv.set("train.max_steps", static_cast<std::int64_t>(max_steps));
    kv.set("train.seed", seed);
    kv.set("train.eval_interval", eval_interval);
    kv.set("train.checkpoint_interval", checkpoint_interval);
    kv.set("train.divergence_factor", divergence_factor);
    kv.set("train.divergence_window", divergence_window);
}

TrainConfig TrainConfig::read(const util::KeyValue& kv, TrainConfig c) {
    c.unroll_steps = static_cast<int>(kv.get_int("train.unroll_steps", c.unroll_steps));
    c.lambda_gdl = kv.get_double("train.lambda_gdl", c.lambda_gdl);
    c.adam.lr = kv.get_double("train.lr", c.adam.lr);
    c.adam.beta1 = kv.get_double("train.beta1", c.adam.beta1);
    c.adam.beta2 = kv.get_double("train.beta2", c.adam.beta2);
    c.adam.eps = kv.get_double("train.eps", c.adam.eps);
    c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
    c.max_steps = kv.get_int("train.max_steps", c.max_steps);
    if (kv.has("train.seed")) c.seed = kv.get_uint("train.seed");
    c.eval_interval = static_cast<int>(kv.get_int("train.eval_interval", c.eval_interval));
    c.checkpoint_interval = static_cast<int>(kv.get_int("train.checkpoint_interval", c.checkpoint_interval));
    c.divergence_factor = kv.get_double("train.divergence_factor", c.divergence_factor);
    c.divergence_window = static_cast<int>(kv.get_int("train.divergence_window", c.divergence_window));
    return c;
}

TrainConfig TrainConfig::read(const util::KeyValue& kv) { return read(kv, TrainConfig{}); }

std::vector<Window> enumerate_windows(const datagen::Dataset& data, int unroll_steps) {
    if (unroll_steps < 1) throw InvalidInputError("unroll_steps must be >= 1");
    std::vector<Window> out;
    const auto span = static_cast<std::size_t>(unroll_steps) + 1;
    for (std::size_t r = 0; r < data.runs.size(); ++r) {
        const std::size_t frames = data.runs[r].frames.size();
        for (std::size_t s = 0; s + span <= frames; ++s) out.push_back(Window{r, s});
    }
    return out;
}

template <typename T>
Batch<T> make_batch(const datagen::Dataset& data, const std::vector<Window>& windows, int unroll_steps) {
    if (windows.empty()) throw InvalidInputError("make_batch: no windows");
    const datagen::DatasetRecord& first = data.runs.at(windows.front().run);
    const auto nx = static_cast<std::size_t>(first.mask.nx), ny = static_cast<std::size_t>(first.mask.ny);
    const std::size_t n = windows.size(), cells = nx * ny;
    Batch<T> batch;
    batch.mask = ad::Tensor<T>(ad::Shape{n, nx, ny, 1});
    for (int t = 0; t <= unroll_steps; ++t) batch.frames.emplace_back(ad::Shape{n, nx, ny, 9});
    for (std::size_t b = 0; b < n; ++b) {
        const datagen::DatasetRecord& rec = data.runs.at(windows[b].run);
        if (static_cast<std::size_t>(rec.mask.nx) != nx || static_cast<std::size_t>(rec.mask.ny) != ny) {
            throw ShapeError("make_batch: runs in one batch must share a grid size");
        }
        if (windows[b].start + static_cast<std::size_t>(unroll_steps) >= rec.frames.size()) {
            throw InvalidInputError("make_batch: window exceeds run length");
        }
        for (std::size_t i = 0; i < cells; ++i) batch.mask.data[b * cells + i] = rec.mask.solid[i] ? T(1) : T(0);
        for (int t = 0; t <= unroll_steps; ++t) {
            const auto& f = rec.frames[windows[b].start + static_cast<std::size_t>(t)].f;
            T* dst = batch.frames[static_cast<std::size_t>(t)].data.data() + b * cells * 9;
            for (std::size_t i = 0; i < f.size(); ++i) dst[i] = static_cast<T>(f[i]);
        }
    }
    return batch;
}

template <typename T>
LossTerms<T> prediction_loss(const std::vector<ad::Var<T>>& predictions, const std::vector<ad::Var<T>>& targets,
                             double lambda_gdl) {
    if (predictions.empty() || predictions.size() != targets.size()) {
        throw ContractError("prediction_loss: need one target per prediction");
    }
    const T inv = T(1) / static_cast<T>(predictions.size());
    ad::Var<T> mse_sum, gdl_sum;
    for (std::size_t t = 0; t < predictions.size(); ++t) {
        ad::Var<T> m = ad::mse(predictions[t], targets[t]);
        ad::Var<T> g = ad::gdl(predictions[t], targets[t]);
        mse_sum = t == 0 ? m : ad::add(mse_sum, m);
        gdl_sum = t == 0 ? g : ad::add(gdl_sum, g);
    }
    LossTerms<T> out;
    out.mse_part = ad::scale(mse_sum, inv);
    out.gdl_part = ad::scale(gdl_sum, inv);
    out.total = ad::add(out.mse_part, ad::scale(out.gdl_part, static_cast<T>(lambda_gdl)));
    return out;
}

template <typename T>
LossTerms<T> unrolled_loss(ad::Graph<T>& graph, model::LatNet<T>& net, const Batch<T>& batch, double lambda_gdl) {
    if (batch.frames.size() < 2) throw InvalidInputError("unrolled_loss: batch needs at least two frames");
    std::vector<ad::Var<T>> preds, targets;
    int t = 0;
    try {
        ad::Var<T> g = net.encode_flow(graph, graph.constant(batch.frames[0]));
        model::Gates<T> gates = net.encode_boundary(graph, graph.constant(batch.mask));
        for (t = 1; t < static_cast<int>(batch.frames.size()); ++t) {
            g = net.compress_step(graph, g, gates);
            preds.push_back(net.decode(graph, g));
            targets.push_back(graph.constant(batch.frames[static_cast<std::size_t>(t)]));
        }
        return prediction_loss(preds, targets, lambda_gdl);
    } catch (const NumericError& e) {
        throw NumericError(std::string("unrolled loss: ") + e.what(), t);
    }
}

Window sample_window(const std::vector<Window>& windows, std::uint64_t seed, std::uint64_t k) {
    if (windows.empty()) throw InvalidInputError("no training windows available");
    const std::uint64_t w = windows.size();
    const std::uint64_t epoch = k / w;
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    datagen::Rng rng(datagen::mix_seed(seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
    }
    return windows[order[k % w]];
}

TrainResult train(model::LatNet<float>& net, const datagen::Dataset& data, const TrainConfig& cfg, long start_step,
                  const TrainCallbacks& cb, std::vector<double> recent) {
    cfg.validate();
    if (start_step < 0) throw InvalidInputError("start step must be >= 0");
    TrainResult result;
    result.final_step = start_step;
    if (cfg.max_steps <= start_step) return result;
    if (data.runs.empty()) throw InvalidInputError("training needs a non-empty dataset");
    const std::vector<Window> windows = enumerate_windows(data, cfg.unroll_steps);
    if (windows.empty()) {
        throw InvalidInputError("no training windows: runs need at least " + std::to_string(cfg.unroll_steps + 1) +
                                " frames");
    }
    for (const auto& run : data.runs) net.config().check_grid(run.mask.nx, run.mask.ny);

    const auto t0 = std::chrono::steady_clock::now();
    const auto window_size = static_cast<std::size_t>(cfg.divergence_window);
    if (recent.size() > window_size) recent.erase(recent.begin(), recent.end() - static_cast<long>(window_size));

    for (long step = start_step + 1; step <= cfg.max_steps; ++step) {
        std::vector<Window> picks;
        const auto base = static_cast<std::uint64_t>(step - 1) * static_cast<std::uint64_t>(cfg.batch_size);
        for (int j = 0; j < cfg.batch_size; ++j) picks.push_back(sample_window(windows, cfg.seed, base + j));
        const Batch<float> batch = make_batch<float>(data, picks, cfg.unroll_steps);

        net.zero_grad();
        ad::Graph<float> graph;
        LossTerms<float> loss;
        try {
            loss = unrolled_loss(graph, net, batch, cfg.lambda_gdl);
        } catch (const NumericError& e) {
            throw DivergenceError(std::string("training diverged: ") + e.what(), step);
        }
        HistoryRecord rec;
        rec.step = step;
        rec.total = loss.total.value().data[0];
        rec.mse = loss.mse_part.value().data[0];
        rec.gdl = loss.gdl_part.value().data[0];

        if (recent.size() == window_size) {
            const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(window_size);
            if (rec.total > cfg.divergence_factor * mean) {
                std::ostringstream msg;
                msg << "training diverged: loss " << rec.total << " exceeds " << cfg.divergence_factor
                    << "x the mean of the last " << window_size << " losses (" << mean << ")";
                throw DivergenceError(msg.str(), step);
            }
        }
        graph.backward(loss.total);
        ad::adam_step(net.parameters(), cfg.adam);

        recent.push_back(rec.total);
        if (recent.size() > window_size) recent.erase(recent.begin());
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);
        result.final_step = step;
        if (cb.on_record) cb.on_record(rec);
        if (cb.log && cfg.eval_interval > 0 && step % cfg.eval_interval == 0) {
            std::ostringstream msg;
            msg << "step " << step << " loss " << rec.total << " (mse " << rec.mse << ", gdl " << rec.gdl << ") "
                << rec.wall_seconds << " s";
            cb.log(msg.str());
        }
        if (cb.on_checkpoint &&
            ((cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0) || step == cfg.max_steps)) {
            cb.on_checkpoint(step);
        }
    }
    return result;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& history, bool append) {
    std::error_code ec;
    const bool has_rows = append && std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0;
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    if (!has_rows) out << "step,total_loss,mse,gdl,wall_seconds\n";
    out.precision(9);
    for (const auto& r : history) {
        out << r.step << ',' << r.total << ',' << r.mse << ',' << r.gdl << ',' << r.wall_seconds << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<HistoryRecord> read_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<HistoryRecord> out;
    std::string line;
    std::getline(in, line);
    if (line.rfind("step,", 0) != 0) throw FormatError("missing history header in " + path, 0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        HistoryRecord r;
        char c1, c2, c3, c4;
        if (!(ss >> r.step >> c1 >> r.total >> c2 >> r.mse >> c3 >> r.gdl >> c4 >> r.wall_seconds)) {
            throw FormatError("bad history row in " + path, static_cast<std::size_t>(in.tellg()));
        }
        out.push_back(r);
    }
    return out;
}

#define LATNET_INSTANTIATE_TRAIN(T)                                                                           \
    template Batch<T> make_batch<T>(const datagen::Dataset&, const std::vector<Window>&, int);                \
    template LossTerms<T> prediction_loss(const std::vector<ad::Var<T>>&, const std::vector<ad::Var<T>>&,     \
                                          double);                                                            \
    template LossTerms<T> unrolled_loss(ad::Graph<T>&, model::LatNet<T>&, const Batch<T>&, double);

LATNET_INSTANTIATE_TRAIN(float)
LATNET_INSTANTIATE_TRAIN(double)

}  // namespace latnet::train
