#include "latnet/cli/commands.hpp"

#include "latnet/datagen/dataset.hpp"
#include "latnet/error.hpp"
#include "latnet/lbm/metrics.hpp"
#include "latnet/lbm/snapshot.hpp"
#include "latnet/lbm/solver.hpp"
#include "latnet/model/latnet.hpp"
#include "latnet/train/evaluate.hpp"
#include "latnet/train/trainer.hpp"
#include "latnet/util/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace latnet::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateOptions {
    std::string out;
    int runs = 10;
    int size = 64;
    int nx = 0, ny = 0;
    int objects = 2;
    int size_min = 6, size_max = 20;
    int frames = 32;
    int interval = 120;
    int warmup = 0;
    double tau = 0.7;
    double inlet = 0.04;
    std::string boundary = "channel";
    std::uint64_t seed = 1;
};

struct TrainOptions {
    std::string data;
    std::string out;
    std::string history;
    std::string resume;
    model::ModelConfig model{};
    train::TrainConfig train{};
    std::uint64_t init_seed = 1;
};

struct RolloutOptions {
    std::string checkpoint;
    std::string out;
    int steps = 32;
    std::string dataset;
    int run = 0;
    std::int64_t scene_seed = -1;
    int size = 64;
    int nx = 0, ny = 0;
    int objects = 2;
    int size_min = 6, size_max = 20;
    double inlet = 0.04;
    std::string patch;
};

struct EvalOptions {
    std::string checkpoint;
    std::string data;
    int horizon = 0;
    std::string out_prefix = "eval";
    bool self = false;
};

struct BenchOptions {
    int size = 256;
    int nx = 0, ny = 0;
    int steps = 100;
    int reps = 5;
    int warmup = 2;
    double tau = 0.7;
    std::string checkpoint;
    int steps_equivalent = 120;
    std::string out;
    std::string inject_dims;
    std::uint64_t inject_steps = 0;
    double inject_seconds = 0;
    bool skip_surrogate = false;
};

void resolve_grid(int size, int& nx, int& ny) {
    if (nx <= 0) nx = size;
    if (ny <= 0) ny = size;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
double time_call(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ad::Rect parse_patch(const std::string& text) {
    int v[4];
    char c1, c2, c3;
    std::istringstream ss(text);
    if (!(ss >> v[0] >> c1 >> v[1] >> c2 >> v[2] >> c3 >> v[3]) || c1 != ',' || c2 != ',' || c3 != ',' ||
        !ss.eof()) {
        throw InvalidInputError("--patch expects x0,y0,x1,y1, got '" + text + "'");
    }
    return ad::Rect{v[0], v[2], v[1], v[3]};
}

std::string frame_name(int t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04d.lblt", t);
    return buf;
}

int cmd_generate(const GenerateOptions& o, std::ostream& out, std::ostream& err) {
    datagen::DatasetConfig cfg;
    cfg.runs = o.runs;
    cfg.nx = o.nx;
    cfg.ny = o.ny;
    resolve_grid(o.size, cfg.nx, cfg.ny);
    cfg.object_count = o.objects;
    cfg.sizes = {o.size_min, o.size_max};
    cfg.frames_per_run = o.frames;
    cfg.subsample_interval = o.interval;
    cfg.warmup_steps = o.warmup;
    cfg.solver.tau = o.tau;
    cfg.solver.inlet_velocity = o.inlet;
    cfg.solver.boundary_mode = lbm::boundary_mode_from_string(o.boundary);
    cfg.seed = o.seed;
    if (cfg.runs == 0) err << "warning: --runs 0 writes an empty dataset\n";
    const datagen::Dataset ds = datagen::generate_dataset(cfg, [&](const std::string& m) { err << m << '\n'; });
    datagen::save_dataset(o.out, ds);
    out << "runs " << ds.runs.size() << "\nframes_per_run " << cfg.frames_per_run << "\ndiscarded_unstable "
        << ds.discarded_unstable << "\nwritten " << o.out << '\n';
    return kExitOk;
}

int cmd_train(TrainOptions o, std::ostream& out, std::ostream& err) {
    const datagen::Dataset ds = datagen::load_dataset(o.data);
    if (o.history.empty()) o.history = o.out + ".history.csv";
    long start = 0;
    std::vector<double> recent;
    model::LatNet<float> net(o.model, o.init_seed);
    if (!o.resume.empty()) {
        const ad::Checkpoint ck = ad::load_checkpoint(o.resume);
        net = model::LatNet<float>::from_checkpoint(ck);
        start = ck.header.get_int("train.step", 0);
        if (fs::exists(o.history)) {
            for (const auto& r : train::read_history_csv(o.history))
                if (r.step <= start) recent.push_back(r.total);
        }
        err << "resuming from step " << start << '\n';
    } else {
        train::write_history_csv(o.history, {});
    }
    auto save = [&](long step) {
        util::KeyValue kv;
        o.train.write(kv);
        kv.set("train.step", static_cast<std::int64_t>(step));
        net.save(o.out, kv);
    };
    if (start == 0) save(0);
    std::ofstream hist(o.history, std::ios::app);
    if (!hist) throw IoError("cannot write " + o.history);
    hist.precision(9);
    train::TrainCallbacks cb;
    cb.on_record = [&](const train::HistoryRecord& r) {
        hist << r.step << ',' << r.total << ',' << r.mse << ',' << r.gdl << ',' << r.wall_seconds << '\n';
        hist.flush();
    };
    cb.on_checkpoint = save;
    cb.log = [&](const std::string& m) { err << m << '\n'; };
    const train::TrainResult res = train::train(net, ds, o.train, start, cb, recent);
    out << "steps " << res.final_step << "\ncheckpoint " << o.out << "\nhistory " << o.history << '\n';
    if (!res.history.empty()) out << "final_loss " << res.history.back().total << '\n';
    return kExitOk;
}

int cmd_rollout(const RolloutOptions& o, std::ostream& out, std::ostream&) {
    const ad::Checkpoint ck = ad::load_checkpoint(o.checkpoint);
    model::LatNet<float> net = model::LatNet<float>::from_checkpoint(ck);
    lbm::LatticeState f0;
    lbm::BoundaryMask mask;
    if (!o.dataset.empty()) {
        const fs::path run_dir = fs::path(o.dataset) / ([&] {
                                     char buf[32];
                                     std::snprintf(buf, sizeof buf, "run_%04d", o.run);
                                     return std::string(buf);
                                 })();
        const datagen::DatasetRecord rec = datagen::load_record(run_dir.string());
        f0 = rec.frames.at(0);
        mask = rec.mask;
    } else {
        if (o.scene_seed < 0) throw InvalidInputError("rollout needs --dataset or --scene-seed");
        int nx = o.nx, ny = o.ny;
        resolve_grid(o.size, nx, ny);
        const datagen::SceneSpec scene = datagen::random_scene(nx, ny, o.objects, {o.size_min, o.size_max},
                                                               static_cast<std::uint64_t>(o.scene_seed));
        mask = datagen::rasterize(scene);
        f0 = lbm::uniform_state(mask, 1.0, o.inlet, 0.0);
    }
    net.config().check_grid(mask.nx, mask.ny);
    fs::create_directories(o.out);
    lbm::write_snapshot((fs::path(o.out) / "mask.lblt").string(), lbm::to_snapshot(mask));
    const bool patch = !o.patch.empty();
    const ad::Rect region = patch ? parse_patch(o.patch) : ad::full_rect(mask.nx, mask.ny);
    const model::RolloutResult<float> r =
        net.rollout(model::lattice_tensor<float>(f0), model::mask_tensor<float>(mask), o.steps, !patch);
    for (int t = 1; t <= o.steps; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        const ad::Tensor<float> values = patch ? net.decode_patch(r.latents[tt], region).values : r.frames[tt];
        lbm::Snapshot snap;
        snap.dims = {static_cast<std::uint32_t>(values.shape[1]), static_cast<std::uint32_t>(values.shape[2]), 9u};
        snap.values = values.data;
        lbm::write_snapshot((fs::path(o.out) / frame_name(t)).string(), snap);
    }
    util::KeyValue meta;
    meta.set("nx", mask.nx);
    meta.set("ny", mask.ny);
    meta.set("steps", o.steps);
    meta.set("region", std::to_string(region.x0) + "," + std::to_string(region.y0) + "," +
                           std::to_string(region.x1) + "," + std::to_string(region.y1));
    meta.write_file((fs::path(o.out) / "rollout.txt").string());
    out << "frames " << o.steps << "\nwritten " << o.out << '\n';
    return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream&) {
    const datagen::Dataset ds = datagen::load_dataset(o.data);
    train::RolloutReport report;
    if (o.self) {
        report = train::evaluate_self(ds, o.horizon);
    } else {
        if (o.checkpoint.empty()) throw InvalidInputError("eval needs --checkpoint or --self");
        model::LatNet<float> net = model::LatNet<float>::from_checkpoint(ad::load_checkpoint(o.checkpoint));
        report = train::evaluate(net, ds, o.horizon);
    }
    const std::string runs_csv = o.out_prefix + "_runs.csv";
    const std::string agg_csv = o.out_prefix + "_aggregate.csv";
    train::write_runs_csv(runs_csv, report);
    train::write_aggregate_csv(agg_csv, report);
    long failures = 0;
    for (const auto& r : report.runs) failures += r.failure_step >= 0;
    out << "runs " << report.runs.size() << "\nhorizon " << report.horizon << "\nfailed_runs " << failures
        << "\nwritten " << runs_csv << ' ' << agg_csv << '\n';
    return kExitOk;
}

std::uint64_t parse_dims(const std::string& text) {
    std::uint64_t cells = 1;
    std::string token;
    std::istringstream ss(text);
    int count = 0;
    while (std::getline(ss, token, 'x')) {
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(token, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != token.size() || v <= 0) throw InvalidInputError("--inject-dims expects positive integers");
        cells *= static_cast<std::uint64_t>(v);
        ++count;
    }
    if (count == 0) throw InvalidInputError("--inject-dims is empty");
    return cells;
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream&) {
    struct Row {
        std::string kind;
        std::string dims;
        std::uint64_t cells;
        std::uint64_t steps;
        double seconds;
        double mlups;
    };
    std::vector<Row> rows;
    if (!o.inject_dims.empty()) {
        std::string dims = o.inject_dims;
        std::replace(dims.begin(), dims.end(), ',', 'x');
        const std::uint64_t cells = parse_dims(dims);
        rows.push_back({"injected", dims, cells, o.inject_steps, o.inject_seconds,
                        lbm::mlups(cells, o.inject_steps, o.inject_seconds)});
    } else {
        if (o.reps < 5) throw InvalidInputError("--reps must be >= 5");
        int nx = o.nx, ny = o.ny;
        resolve_grid(o.size, nx, ny);
        const std::string dims = std::to_string(nx) + "x" + std::to_string(ny);
        const auto cells = static_cast<std::uint64_t>(nx) * static_cast<std::uint64_t>(ny);
        lbm::BoundaryMask mask(nx, ny);
        lbm::SolverConfig scfg;
        scfg.tau = o.tau;
        lbm::Solver solver(lbm::uniform_state(mask, 1.0, scfg.inlet_velocity, 0.0), mask, scfg);
        std::vector<double> times;
        for (int r = 0; r < o.warmup + o.reps; ++r) {
            const double t = time_call([&] { solver.run(o.steps); });
            if (r >= o.warmup) times.push_back(t);
        }
        const double solver_s = median(times);
        rows.push_back({"solver", dims, cells, static_cast<std::uint64_t>(o.steps), solver_s,
                        lbm::mlups(cells, static_cast<std::uint64_t>(o.steps), solver_s)});
        if (!o.skip_surrogate) {
            model::LatNet<float> net = o.checkpoint.empty()
                                           ? model::LatNet<float>(model::ModelConfig{}, 1)
                                           : model::LatNet<float>::from_checkpoint(ad::load_checkpoint(o.checkpoint));
            net.config().check_grid(nx, ny);
            const auto f0 = model::lattice_tensor<float>(solver.state());
            ad::Tensor<float> g = net.encode_flow(f0);
            const auto gates = net.encode_boundary(model::mask_tensor<float>(mask));
            times.clear();
            for (int r = 0; r < o.warmup + o.reps; ++r) {
                const double t = time_call([&] { g = net.compress_step(g, gates); });
                if (r >= o.warmup) times.push_back(t);
            }
            const double comp_s = median(times);
            const auto equiv = static_cast<std::uint64_t>(o.steps_equivalent);
            rows.push_back({"surrogate", dims, cells, equiv, comp_s, lbm::mlups(cells, equiv, comp_s)});
        }
    }
    std::ostringstream csv;
    csv.precision(10);
    csv << "kind,dims,cells,steps,wall_seconds,mlups\n";
    for (const Row& r : rows) {
        csv << r.kind << ',' << r.dims << ',' << r.cells << ',' << r.steps << ',' << r.seconds << ',' << r.mlups
            << '\n';
    }
    out << csv.str();
    if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw IoError("cannot write " + o.out);
        f << csv.str();
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lattice Boltzmann data generation and compressed surrogate training"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file ([subcommand] sections or subcommand.key); flags win");
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: LATNET_THREADS or 1)")->check(CLI::NonNegativeNumber);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Simulate random obstacle scenes and write a dataset directory");
    g->add_option("--out", gen.out, "Output dataset directory")->required();
    g->add_option("--runs", gen.runs, "Number of stable runs")->check(CLI::NonNegativeNumber);
    g->add_option("--size", gen.size, "Square grid size (overridden by --nx/--ny)");
    g->add_option("--nx", gen.nx, "Grid extent along x (flow direction)");
    g->add_option("--ny", gen.ny, "Grid extent along y");
    g->add_option("--objects", gen.objects, "Objects per scene");
    g->add_option("--size-min", gen.size_min, "Smallest object extent");
    g->add_option("--size-max", gen.size_max, "Largest object extent");
    g->add_option("--frames", gen.frames, "Frames stored per run");
    g->add_option("--interval", gen.interval, "Solver steps between stored frames");
    g->add_option("--warmup", gen.warmup, "Solver steps before the first stored frame");
    g->add_option("--tau", gen.tau, "Relaxation time");
    g->add_option("--inlet", gen.inlet, "Inlet velocity");
    g->add_option("--boundary", gen.boundary, "channel | periodic");
    g->add_option("--seed", gen.seed, "Master seed");

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train the surrogate on a dataset");
    t->add_option("--data", tr.data, "Dataset directory")->required();
    t->add_option("--out", tr.out, "Checkpoint path (overwritten at every checkpoint)")->required();
    t->add_option("--history", tr.history, "Loss history CSV (default <out>.history.csv)");
    t->add_option("--resume", tr.resume, "Continue from this checkpoint");
    t->add_option("--max-steps", tr.train.max_steps, "Final optimizer step");
    t->add_option("--batch", tr.train.batch_size, "Windows per step");
    t->add_option("--unroll", tr.train.unroll_steps, "Compression steps per window");
    t->add_option("--lambda-gdl", tr.train.lambda_gdl, "Weight of the gradient difference loss");
    t->add_option("--lr", tr.train.adam.lr, "Adam learning rate");
    t->add_option("--beta1", tr.train.adam.beta1, "Adam beta1");
    t->add_option("--beta2", tr.train.adam.beta2, "Adam beta2");
    t->add_option("--eps", tr.train.adam.eps, "Adam epsilon");
    t->add_option("--seed", tr.train.seed, "Sampling seed");
    t->add_option("--init-seed", tr.init_seed, "Weight initialization seed");
    t->add_option("--log-interval", tr.train.eval_interval, "Steps between log lines");
    t->add_option("--checkpoint-interval", tr.train.checkpoint_interval, "Steps between checkpoints");
    t->add_option("--down-blocks", tr.model.down_blocks, "Downsampling blocks");
    t->add_option("--filters", tr.model.base_filters, "Filters after the stem");
    t->add_option("--comp-blocks", tr.model.comp_blocks, "Residual blocks per compression step");
    t->add_option("--population-scale", tr.model.population_scale, "Scale of the population normalization");
    t->add_option("--gate-init-scale", tr.model.gate_init_scale, "Initial weight range factor of the gate head");
    t->add_option("--steps-per-compress", tr.model.steps_per_compress, "Solver steps per compression step");

    RolloutOptions ro;
    auto* r = app.add_subcommand("rollout", "Run the surrogate forward and write generated frames");
    r->add_option("--checkpoint", ro.checkpoint, "Checkpoint path")->required();
    r->add_option("--out", ro.out, "Output directory")->required();
    r->add_option("--steps", ro.steps, "Compression steps")->check(CLI::NonNegativeNumber);
    r->add_option("--dataset", ro.dataset, "Take the initial frame and mask from this dataset");
    r->add_option("--run", ro.run, "Run index within --dataset");
    r->add_option("--scene-seed", ro.scene_seed, "Build a random scene with this seed instead");
    r->add_option("--size", ro.size, "Square grid size for --scene-seed");
    r->add_option("--nx", ro.nx, "Grid extent along x for --scene-seed");
    r->add_option("--ny", ro.ny, "Grid extent along y for --scene-seed");
    r->add_option("--objects", ro.objects, "Objects for --scene-seed");
    r->add_option("--size-min", ro.size_min, "Smallest object extent");
    r->add_option("--size-max", ro.size_max, "Largest object extent");
    r->add_option("--inlet", ro.inlet, "Initial uniform velocity for --scene-seed");
    r->add_option("--patch", ro.patch, "Only decode the region x0,y0,x1,y1 (half-open)");

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Compare surrogate rollouts with dataset frames");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint path");
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--horizon", ev.horizon, "Compression steps to compare")->required();
    e->add_option("--out-prefix", ev.out_prefix, "Writes <prefix>_runs.csv and <prefix>_aggregate.csv");
    e->add_flag("--self", ev.self, "Compare the dataset with itself");

    BenchOptions be;
    auto* b = app.add_subcommand("bench", "Measure solver and surrogate throughput in MLUPS");
    b->add_option("--size", be.size, "Square grid size");
    b->add_option("--nx", be.nx, "Grid extent along x");
    b->add_option("--ny", be.ny, "Grid extent along y");
    b->add_option("--steps", be.steps, "Solver steps per repetition");
    b->add_option("--reps", be.reps, "Timed repetitions (median reported, >= 5)");
    b->add_option("--warmup", be.warmup, "Untimed warm-up repetitions");
    b->add_option("--tau", be.tau, "Relaxation time");
    b->add_option("--checkpoint", be.checkpoint, "Surrogate checkpoint (default: untrained desk model)");
    b->add_option("--steps-equivalent", be.steps_equivalent, "Solver steps represented by one compression step");
    b->add_flag("--no-surrogate", be.skip_surrogate, "Only time the solver");
    b->add_option("--out", be.out, "Also write the CSV here");
    b->add_option("--inject-dims", be.inject_dims, "Skip timing; grid dims such as 160x160x160");
    b->add_option("--inject-steps", be.inject_steps, "Steps equivalent for --inject-dims");
    b->add_option("--inject-seconds", be.inject_seconds, "Wall seconds for --inject-dims");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitUserError;
    }

    try {
        if (threads > 0) util::set_thread_count(threads);
        if (*g) return cmd_generate(gen, out, err);
        if (*t) return cmd_train(tr, out, err);
        if (*r) return cmd_rollout(ro, out, err);
        if (*e) return cmd_eval(ev, out, err);
        if (*b) return cmd_bench(be, out, err);
    } catch (const NumericError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitNumericError;
    } catch (const DistributionError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitNumericError;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUserError;
    } catch (const std::filesystem::filesystem_error& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUserError;
    }
    return kExitUserError;
}

}  // namespace latnet::cli
