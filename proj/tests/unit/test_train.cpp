#include "latnet/ad/ops.hpp"
#include "latnet/error.hpp"
#include "latnet/train/evaluate.hpp"
#include "latnet/train/trainer.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace latnet;
namespace fs = std::filesystem;

namespace {

datagen::Dataset small_dataset(int runs = 2, int frames = 8) {
    datagen::DatasetConfig c;
    c.runs = runs;
    c.nx = 16;
    c.ny = 16;
    c.object_count = 1;
    c.sizes = {2, 4};
    c.frames_per_run = frames;
    c.subsample_interval = 5;
    c.warmup_steps = 10;
    c.seed = 3;
    return datagen::generate_dataset(c);
}

model::ModelConfig tiny_model() {
    model::ModelConfig m;
    m.base_filters = 4;
    m.comp_blocks = 1;
    return m;
}

train::TrainConfig tiny_train(long steps) {
    train::TrainConfig t;
    t.unroll_steps = 2;
    t.batch_size = 2;
    t.max_steps = steps;
    t.eval_interval = 0;
    t.checkpoint_interval = 0;
    return t;
}

std::vector<std::vector<float>> snapshot(model::LatNet<float>& net) {
    std::vector<std::vector<float>> out;
    for (auto* p : net.parameters()) out.push_back(p->value.data);
    return out;
}

}  // namespace

TEST_CASE("loss is mse plus lambda times gdl") {
    const datagen::Dataset data = small_dataset();
    model::LatNet<float> net(tiny_model(), 1);
    const auto windows = train::enumerate_windows(data, 2);
    const auto batch = train::make_batch<float>(data, {windows[0], windows[5]}, 2);
    ad::Graph<float> g(false);
    const auto terms = train::unrolled_loss(g, net, batch, 0.2);
    const float total = terms.total.value().data[0];
    const float mse = terms.mse_part.value().data[0];
    const float gdl = terms.gdl_part.value().data[0];
    CHECK(total == mse + 0.2f * gdl);
    CHECK(gdl > 0.0f);

    ad::Graph<float> g0(false);
    const auto pure = train::unrolled_loss(g0, net, batch, 0.0);
    CHECK(pure.total.value().data[0] == mse);
    CHECK(pure.mse_part.value().data[0] == mse);
}

TEST_CASE("prediction loss against a scalar oracle") {
    ad::Graph<double> g(false);
    std::vector<ad::Var<double>> preds, targets;
    std::vector<ad::Tensor<double>> p, q;
    for (int t = 0; t < 3; ++t) {
        ad::Tensor<double> a({1, 3, 2, 2}), b({1, 3, 2, 2});
        for (std::size_t i = 0; i < a.size(); ++i) {
            a.data[i] = std::sin(0.7 * double(i) + t);
            b.data[i] = std::cos(0.3 * double(i) - t);
        }
        p.push_back(a);
        q.push_back(b);
        preds.push_back(g.constant(a));
        targets.push_back(g.constant(b));
    }
    double mse_sum = 0, gdl_sum = 0;
    for (int t = 0; t < 3; ++t) {
        const auto& a = p[t];
        const auto& b = q[t];
        double m = 0;
        for (std::size_t i = 0; i < a.size(); ++i) m += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
        mse_sum += m / double(a.size());
        double gx = 0, gy = 0;
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t x = 0; x + 1 < 3; ++x)
                for (std::size_t y = 0; y < 2; ++y) {
                    const double d = std::abs(a.at(0, x + 1, y, c) - a.at(0, x, y, c)) -
                                     std::abs(b.at(0, x + 1, y, c) - b.at(0, x, y, c));
                    gx += d * d;
                }
            for (std::size_t x = 0; x < 3; ++x) {
                const double d = std::abs(a.at(0, x, 1, c) - a.at(0, x, 0, c)) - std::abs(b.at(0, x, 1, c) - b.at(0, x, 0, c));
                gy += d * d;
            }
        }
        gdl_sum += gx / 8.0 + gy / 6.0;
    }
    const auto terms = train::prediction_loss(preds, targets, 0.2);
    CHECK(std::abs(terms.mse_part.value().data[0] - mse_sum / 3) < 1e-10);
    CHECK(std::abs(terms.gdl_part.value().data[0] - gdl_sum / 3) < 1e-10);
    CHECK(std::abs(terms.total.value().data[0] - (mse_sum + 0.2 * gdl_sum) / 3) < 1e-10);

    const auto perfect = train::prediction_loss(preds, preds, 0.2);
    CHECK(perfect.total.value().data[0] == 0.0);
    CHECK_THROWS_AS(train::prediction_loss(preds, {targets[0]}, 0.2), ContractError);
}

TEST_CASE("windows cover every admissible start and batches copy the right frames") {
    const datagen::Dataset data = small_dataset(2, 8);
    const auto windows = train::enumerate_windows(data, 3);
    CHECK(windows.size() == 2 * (8 - 3));
    CHECK(windows.front() == train::Window{0, 0});
    CHECK(windows.back() == train::Window{1, 4});
    const auto batch = train::make_batch<double>(data, {windows[6], windows[2]}, 3);
    REQUIRE(batch.frames.size() == 4);
    const std::size_t cells = 16 * 16;
    for (int t = 0; t <= 3; ++t) {
        const auto& truth0 = data.runs[1].frames[1 + t].f;
        const auto& truth1 = data.runs[0].frames[2 + t].f;
        const auto& tensor = batch.frames[t].data;
        CHECK(std::equal(truth0.begin(), truth0.end(), tensor.begin()));
        CHECK(std::equal(truth1.begin(), truth1.end(), tensor.begin() + cells * 9));
    }
    CHECK(batch.mask.data[0 * cells + 5] == (data.runs[1].mask.solid[5] ? 1.0 : 0.0));
    CHECK_THROWS_AS(train::make_batch<double>(data, {train::Window{0, 5}}, 3), InvalidInputError);
}

TEST_CASE("sample stream visits every window once per epoch") {
    std::vector<train::Window> windows;
    for (std::size_t i = 0; i < 7; ++i) windows.push_back({0, i});
    for (std::uint64_t epoch = 0; epoch < 3; ++epoch) {
        std::set<std::size_t> seen;
        for (std::uint64_t k = epoch * 7; k < (epoch + 1) * 7; ++k) seen.insert(train::sample_window(windows, 5, k).start);
        CHECK(seen.size() == 7);
    }
    CHECK(train::sample_window(windows, 5, 3) == train::sample_window(windows, 5, 3));
}

TEST_CASE("training is deterministic and zero steps leave the model unchanged") {
    const datagen::Dataset data = small_dataset();
    model::LatNet<float> a(tiny_model(), 2), b(tiny_model(), 2);
    const auto before = snapshot(a);
    const auto none = train::train(a, data, tiny_train(0));
    CHECK(none.history.empty());
    CHECK(none.final_step == 0);
    CHECK(snapshot(a) == before);

    const auto ra = train::train(a, data, tiny_train(4));
    const auto rb = train::train(b, data, tiny_train(4));
    REQUIRE(ra.history.size() == 4);
    CHECK(ra.final_step == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(ra.history[i].total == rb.history[i].total);
    CHECK(snapshot(a) == snapshot(b));
}

TEST_CASE("resuming from a checkpoint reproduces an uninterrupted run") {
    const datagen::Dataset data = small_dataset();
    const auto path = (fs::temp_directory_path() / "latnet_resume_test.lnck").string();
    model::LatNet<float> full(tiny_model(), 3);
    const auto all = train::train(full, data, tiny_train(6));

    model::LatNet<float> first(tiny_model(), 3);
    const auto head = train::train(first, data, tiny_train(3));
    first.save(path);
    model::LatNet<float> resumed = model::LatNet<float>::from_checkpoint(ad::load_checkpoint(path));
    std::vector<double> recent;
    for (const auto& h : head.history) recent.push_back(h.total);
    const auto tail = train::train(resumed, data, tiny_train(6), 3, {}, recent);
    REQUIRE(tail.history.size() == 3);
    CHECK(tail.history.front().step == 4);
    for (std::size_t i = 0; i < 3; ++i) CHECK(tail.history[i].total == all.history[3 + i].total);
    CHECK(snapshot(resumed) == snapshot(full));
    fs::remove(path);
}

TEST_CASE("every parameter moves once gradients reach it") {
    const datagen::Dataset data = small_dataset();
    model::LatNet<float> net(tiny_model(), 4);
    const auto before = snapshot(net);
    train::TrainConfig cfg = tiny_train(2);
    cfg.adam.lr = 1e-6;
    train::train(net, data, cfg);
    const auto after = snapshot(net);
    const auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        CAPTURE(params[i]->name);
        CHECK(after[i] != before[i]);
    }
}

TEST_CASE("divergence guard stops before the offending update") {
    const datagen::Dataset data = small_dataset();
    model::LatNet<float> net(tiny_model(), 5);
    const auto before = snapshot(net);
    std::vector<double> tiny_losses(10, 1e-12);
    CHECK_THROWS_AS(train::train(net, data, tiny_train(3), 0, {}, tiny_losses), DivergenceError);
    CHECK(snapshot(net) == before);
}

TEST_CASE("checkpoint callback fires on the interval and at the end") {
    const datagen::Dataset data = small_dataset();
    model::LatNet<float> net(tiny_model(), 6);
    train::TrainConfig cfg = tiny_train(5);
    cfg.checkpoint_interval = 2;
    std::vector<long> seen;
    train::TrainCallbacks cb;
    cb.on_checkpoint = [&](long s) { seen.push_back(s); };
    train::train(net, data, cfg, 0, cb);
    CHECK(seen == std::vector<long>{2, 4, 5});
}

TEST_CASE("train configuration round trip and validation") {
    train::TrainConfig c = tiny_train(17);
    c.adam.lr = 3e-4;
    c.seed = 99;
    util::KeyValue kv;
    c.write(kv);
    const auto back = train::TrainConfig::read(kv);
    CHECK(back.max_steps == 17);
    CHECK(back.adam.lr == 3e-4);
    CHECK(back.seed == 99);
    c.unroll_steps = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInputError);
}

TEST_CASE("history csv round trip and append") {
    const auto path = (fs::temp_directory_path() / "latnet_history_test.csv").string();
    fs::remove(path);
    std::vector<train::HistoryRecord> h{{1, 0.5, 0.4, 0.5, 0.1}, {2, 0.25, 0.2, 0.25, 0.2}};
    train::write_history_csv(path, {h[0]});
    train::write_history_csv(path, {h[1]}, true);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,total_loss,mse,gdl,wall_seconds");
    const auto back = train::read_history_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[1].step == 2);
    CHECK(back[1].total == 0.25);
    fs::remove(path);
}

TEST_CASE("self evaluation has zero error and one run has zero spread") {
    const datagen::Dataset data = small_dataset(1, 6);
    const auto report = train::evaluate_self(data, 5);
    REQUIRE(report.mean.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(report.mean.mse[k] == 0.0);
        CHECK(report.mean.div_generated[k] == report.mean.div_true[k]);
        CHECK(report.std.mse[k] == 0.0);
        CHECK(report.std.div_true[k] == 0.0);
    }
    CHECK_THROWS_AS(train::evaluate_self(data, 6), InvalidInputError);
}

TEST_CASE("aggregation skips failed steps") {
    const datagen::Dataset data = small_dataset(2, 5);
    train::RolloutReport report;
    report.horizon = 4;
    std::vector<lbm::LatticeState> ok(data.runs[0].frames.begin() + 1, data.runs[0].frames.end());
    std::vector<lbm::LatticeState> cut(data.runs[1].frames.begin() + 1, data.runs[1].frames.begin() + 3);
    report.runs.push_back(train::compare_frames(data.runs[0], ok, 4));
    report.runs.push_back(train::compare_frames(data.runs[1], cut, 4, 3));
    CHECK(std::isnan(report.runs[1].mse[2]));
    CHECK(report.runs[1].failure_step == 3);
    train::aggregate(report);
    CHECK(report.mean.mse[0] == 0.0);
    CHECK(report.mean.div_true[3] == report.runs[0].div_true[3]);
    CHECK(report.std.div_true[3] == 0.0);

    const auto dir = fs::temp_directory_path() / "latnet_eval_csv";
    fs::create_directories(dir);
    train::write_runs_csv((dir / "runs.csv").string(), report);
    train::write_aggregate_csv((dir / "agg.csv").string(), report);
    std::ifstream runs(dir / "runs.csv");
    std::string header;
    std::getline(runs, header);
    CHECK(header ==
          "run,step,mse,div_generated,div_true,drag_generated_x,drag_generated_y,drag_true_x,drag_true_y,"
          "flux_generated_x,flux_generated_y,flux_true_x,flux_true_y");
    std::ifstream agg(dir / "agg.csv");
    std::getline(agg, header);
    CHECK(header.rfind("step,mse_mean,mse_std,div_generated_mean,div_generated_std,", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("one small step does not increase the loss on its own sample") {
    const datagen::Dataset data = small_dataset(1, 3);  // exactly one window at unroll 2
    model::LatNet<float> net(tiny_model(), 7);
    const auto windows = train::enumerate_windows(data, 2);
    REQUIRE(windows.size() == 1);
    const auto batch = train::make_batch<float>(data, windows, 2);
    auto loss_now = [&] {
        ad::Graph<float> g(false);
        return train::unrolled_loss(g, net, batch, 0.2).total.value().data[0];
    };
    const float before = loss_now();
    train::TrainConfig cfg = tiny_train(1);
    cfg.batch_size = 1;
    cfg.adam.lr = 1e-6;
    const auto res = train::train(net, data, cfg);
    CHECK(res.history.front().total == before);
    CHECK(loss_now() <= before);
}
