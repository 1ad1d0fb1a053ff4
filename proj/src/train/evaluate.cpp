#include "latnet/train/evaluate.hpp"

#include "latnet/error.hpp"
#include "latnet/lbm/solver.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace latnet::train {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FrameMetrics {
    double div = 0;
    lbm::Vec2 drag, flux;
};

FrameMetrics frame_metrics(const lbm::LatticeState& s, const lbm::BoundaryMask& mask, lbm::BoundaryMode mode) {
    FrameMetrics m;
    const lbm::MacroFields macro = lbm::macroscopics(s);
    m.div = lbm::mean_abs_divergence(macro.u, mask);
    if (mask.solid_count() > 0) m.drag = lbm::drag(s, mask, mode);
    m.flux = lbm::flux_average(s, mask);
    return m;
}

void push_nan(MetricSeries& s) {
    s.mse.push_back(kNaN);
    s.div_generated.push_back(kNaN);
    s.div_true.push_back(kNaN);
    s.drag_generated.push_back({kNaN, kNaN});
    s.drag_true.push_back({kNaN, kNaN});
    s.flux_generated.push_back({kNaN, kNaN});
    s.flux_true.push_back({kNaN, kNaN});
}

/// Flattens a series into named scalar columns, in CSV order.
std::vector<std::vector<double>> columns(const MetricSeries& s) {
    std::vector<std::vector<double>> c(11);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double row[11] = {s.mse[k],
                                s.div_generated[k],
                                s.div_true[k],
                                s.drag_generated[k].x,
                                s.drag_generated[k].y,
                                s.drag_true[k].x,
                                s.drag_true[k].y,
                                s.flux_generated[k].x,
                                s.flux_generated[k].y,
                                s.flux_true[k].x,
                                s.flux_true[k].y};
        for (int i = 0; i < 11; ++i) c[static_cast<std::size_t>(i)].push_back(row[i]);
    }
    return c;
}

MetricSeries from_columns(const std::vector<std::vector<double>>& c) {
    MetricSeries s;
    for (std::size_t k = 0; k < c[0].size(); ++k) {
        s.mse.push_back(c[0][k]);
        s.div_generated.push_back(c[1][k]);
        s.div_true.push_back(c[2][k]);
        s.drag_generated.push_back({c[3][k], c[4][k]});
        s.drag_true.push_back({c[5][k], c[6][k]});
        s.flux_generated.push_back({c[7][k], c[8][k]});
        s.flux_true.push_back({c[9][k], c[10][k]});
    }
    return s;
}

const char* const kColumnNames[11] = {"mse",
                                      "div_generated",
                                      "div_true",
                                      "drag_generated_x",
                                      "drag_generated_y",
                                      "drag_true_x",
                                      "drag_true_y",
                                      "flux_generated_x",
                                      "flux_generated_y",
                                      "flux_true_x",
                                      "flux_true_y"};

void check_horizon(const datagen::Dataset& data, int horizon) {
    if (horizon < 1) throw InvalidInputError("horizon must be >= 1");
    for (std::size_t r = 0; r < data.runs.size(); ++r) {
        const auto frames = data.runs[r].frames.size();
        if (static_cast<std::size_t>(horizon) + 1 > frames) {
            throw InvalidInputError("horizon " + std::to_string(horizon) + " exceeds run " + std::to_string(r) +
                                    ", which has " + std::to_string(frames) + " frames (max horizon " +
                                    std::to_string(frames == 0 ? 0 : frames - 1) + ")");
        }
    }
}

}  // namespace

MetricSeries compare_frames(const datagen::DatasetRecord& truth, const std::vector<lbm::LatticeState>& predicted,
                            int horizon, long failure_step, lbm::BoundaryMode mode) {
    MetricSeries s;
    s.failure_step = failure_step;
    for (int k = 0; k < horizon; ++k) {
        if (static_cast<std::size_t>(k) >= predicted.size()) {
            push_nan(s);
            continue;
        }
        const lbm::LatticeState& p = predicted[static_cast<std::size_t>(k)];
        const lbm::LatticeState& t = truth.frames.at(static_cast<std::size_t>(k) + 1);
        if (p.f.size() != t.f.size()) throw ShapeError("compare_frames: predicted and true grids differ");
        double acc = 0;
        for (std::size_t i = 0; i < p.f.size(); ++i) {
            const double d = p.f[i] - t.f[i];
            acc += d * d;
        }
        s.mse.push_back(acc / static_cast<double>(p.f.size()));
        const FrameMetrics mg = frame_metrics(p, truth.mask, mode);
        const FrameMetrics mt = frame_metrics(t, truth.mask, mode);
        s.div_generated.push_back(mg.div);
        s.div_true.push_back(mt.div);
        s.drag_generated.push_back(mg.drag);
        s.drag_true.push_back(mt.drag);
        s.flux_generated.push_back(mg.flux);
        s.flux_true.push_back(mt.flux);
    }
    return s;
}

void aggregate(RolloutReport& report) {
    const auto h = static_cast<std::size_t>(report.horizon);
    std::vector<std::vector<double>> mean(11, std::vector<double>(h, kNaN)), sd = mean;
    std::vector<std::vector<std::vector<double>>> cols;
    for (const auto& r : report.runs) cols.push_back(columns(r));
    for (std::size_t c = 0; c < 11; ++c) {
        for (std::size_t k = 0; k < h; ++k) {
            double sum = 0;
            std::size_t n = 0;
            for (const auto& rc : cols) {
                const double v = rc[c][k];
                if (std::isfinite(v)) {
                    sum += v;
                    ++n;
                }
            }
            if (n == 0) continue;
            const double m = sum / static_cast<double>(n);
            double var = 0;
            for (const auto& rc : cols) {
                const double v = rc[c][k];
                if (std::isfinite(v)) var += (v - m) * (v - m);
            }
            mean[c][k] = m;
            sd[c][k] = std::sqrt(var / static_cast<double>(n));
        }
    }
    report.mean = from_columns(mean);
    report.std = from_columns(sd);
}

RolloutReport evaluate(model::LatNet<float>& net, const datagen::Dataset& data, int horizon) {
    check_horizon(data, horizon);
    RolloutReport report;
    report.horizon = horizon;
    for (const auto& rec : data.runs) {
        net.config().check_grid(rec.mask.nx, rec.mask.ny);
        std::vector<lbm::LatticeState> predicted;
        long failure = -1;
        try {
            ad::Tensor<float> g = net.encode_flow(model::lattice_tensor<float>(rec.frames.front()));
            const model::GateTensors<float> gates = net.encode_boundary(model::mask_tensor<float>(rec.mask));
            for (int t = 1; t <= horizon; ++t) {
                failure = t;
                g = net.compress_step(g, gates);
                predicted.push_back(model::tensor_lattice(net.decode(g)));
            }
            failure = -1;
        } catch (const NumericError&) {
            // Keep the frames produced before the failure step.
        }
        report.runs.push_back(compare_frames(rec, predicted, horizon, failure, data.config.solver.boundary_mode));
    }
    aggregate(report);
    return report;
}

RolloutReport evaluate_self(const datagen::Dataset& data, int horizon) {
    check_horizon(data, horizon);
    RolloutReport report;
    report.horizon = horizon;
    for (const auto& rec : data.runs) {
        std::vector<lbm::LatticeState> same(rec.frames.begin() + 1, rec.frames.begin() + 1 + horizon);
        report.runs.push_back(compare_frames(rec, same, horizon, -1, data.config.solver.boundary_mode));
    }
    aggregate(report);
    return report;
}

void write_runs_csv(const std::string& path, const RolloutReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "run,step";
    for (const char* name : kColumnNames) out << ',' << name;
    out << '\n';
    out.precision(12);
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const auto cols = columns(report.runs[r]);
        for (std::size_t k = 0; k < report.runs[r].size(); ++k) {
            out << r << ',' << k + 1;
            for (const auto& c : cols) out << ',' << c[k];
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_aggregate_csv(const std::string& path, const RolloutReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "step";
    for (const char* name : kColumnNames) out << ',' << name << "_mean," << name << "_std";
    out << '\n';
    out.precision(12);
    const auto mc = columns(report.mean);
    const auto sc = columns(report.std);
    for (std::size_t k = 0; k < report.mean.size(); ++k) {
        out << k + 1;
        for (std::size_t c = 0; c < mc.size(); ++c) out << ',' << mc[c][k] << ',' << sc[c][k];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace latnet::train
