#include "featrisk_tools/experiments.hpp"

#include "featrisk_tools/output.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifndef FEATRISK_VERSION
#define FEATRISK_VERSION "unknown"
#endif

namespace featrisk::tools {

namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs f and turns the per-point failures into a status string.
template <class F>
std::string guarded(F&& f) {
    try {
        f();
        return "ok";
    } catch (const RegimeError& e) {
        return std::string("regime_") + to_string(e.regime());
    } catch (const NumericError&) {
        return "numeric_error";
    }
}

OptimizerConfig optimizer_config(const OptimizerSettings& os, int k, std::uint64_t seed) {
    OptimizerConfig c;
    c.mode = os.mode;
    c.k = k;
    c.step = os.step;
    c.max_episodes = os.max_episodes;
    c.episode_length = os.episode_length;
    c.improve_tol = os.improve_tol;
    c.patience = os.patience;
    c.max_restarts = os.max_restarts;
    c.seed = seed;
    return c;
}

Penalty identity_penalty(int p) {
    return penalty_from_weights(Matrix::Identity(p, p), Vector::Ones(p));
}

long long as_int(double v) { return static_cast<long long>(std::llround(v)); }

// instance + downstream n + predictor list after applying one grid value
struct GridPoint {
    InstanceConfig instance;
    int n = 0;
    std::vector<PredictorConfig> predictors;
};

GridPoint apply_param(const ExperimentConfig& cfg, double v) {
    GridPoint g{cfg.instance, cfg.n, cfg.predictors};
    const std::string& param = cfg.grid.param;
    if (param == "n") g.n = static_cast<int>(as_int(v));
    else if (param == "q") g.instance.q = static_cast<int>(as_int(v));
    else if (param == "m") g.instance.covariance.m = static_cast<int>(as_int(v));
    else if (param == "snr") g.instance.task.snr = v;
    else if (param == "rho") g.instance.ground_truth.rho = v;
    else if (param == "k") {
        for (PredictorConfig& pc : g.predictors) pc.k = static_cast<int>(as_int(v));
    }
    return g;
}

double asy_risk(const AsymptoticReport& r, ObjectiveMode mode) {
    return mode == ObjectiveMode::avg ? r.risk_avg.value_or(kNaN) : r.risk_worst.value_or(kNaN);
}

struct ObjectiveRow {
    double risk = kNaN, bias = kNaN, vb = kNaN, v = kNaN, variance = kNaN;
};

ObjectiveRow objective_row(const AsymptoticReport& r) {
    ObjectiveRow o;
    o.risk = r.risk_avg.value_or(kNaN);
    o.bias = r.bias_avg.value_or(kNaN);
    o.vb = r.fg.var_x;
    o.v = r.fg.var_x_noise;
    o.variance = r.variance;
    return o;
}

AsymptoticReport avg_report(const ProblemInstance& inst, const Penalty& pen, int n) {
    return averaged_objective(whiten(inst.sigma, pen), inst.truth.b, inst.task.sigma_alpha(), inst.task.sigma2, n);
}

// ---------------------------------------------------------------- risk curve

RunReport run_risk_curve(const ExperimentConfig& cfg, const RunOptions& opt) {
    const ProblemInstance inst = build_instance(cfg.instance, cfg.seed);
    Rng task_rng = make_stream(cfg.seed, StreamDomain::task);
    const Vector beta = sample_task(inst, task_rng).beta;
    const double sigma2 = inst.task.sigma2;

    CsvTable table({"n", "predictor", "R_mc", "R_mc_se", "R_asy", "B_fg", "Vx_fg", "Vxe_fg", "Ve_fg", "B_asy",
                    "VB_asy", "V_asy", "status"});
    RunReport rep;
    json preds = json::object();
    for (const PredictorConfig& pc : cfg.predictors) {
        const bool per_n = pc.type == PredictorType::ofp || pc.type == PredictorType::eep;
        std::optional<FittedPredictor> fixed;
        if (!per_n) fixed = fit_predictor(pc, inst, 1, cfg.optimizer, cfg.seed);
        int compared = 0, within = 0;
        double vxe_max = -1.0, vasy_max = -1.0;
        long long n_vxe = 0, n_vasy = 0;
        for (std::size_t gi = 0; gi < cfg.grid.values.size(); ++gi) {
            const int n = static_cast<int>(as_int(cfg.grid.values[gi]));
            AsymptoticReport asy;
            DecompositionEstimate mc;
            bool have_mc = false, have_asy = false;
            std::string status = guarded([&] {
                const FittedPredictor fp = per_n ? fit_predictor(pc, inst, n, cfg.optimizer, cfg.seed) : *fixed;
                if (cfg.replicates > 0) {
                    McOptions mo;
                    mo.replicates = cfg.replicates;
                    mo.seed = cfg.seed;
                    mo.threads = opt.threads;
                    mo.stream_offset = static_cast<std::uint64_t>(gi) << 32;
                    mc = fg_estimates(inst, fp.penalty, beta, n, mo);
                    have_mc = true;
                }
                asy = risk_components(whiten(inst.sigma, fp.penalty), beta, sigma2, n);
                have_asy = true;
            });
            if (status == "ok" && !have_mc) status = "asymptotic_only";
            const double r_asy = have_asy ? asy.risk : kNaN;
            const double nan = kNaN;
            table.add({static_cast<long long>(n), pc.name, have_mc ? mc.risk.value : nan, have_mc ? mc.risk.se : nan, r_asy,
                       have_mc ? mc.bias.value : nan, have_mc ? mc.var_x.value : nan,
                       have_mc ? mc.var_x_noise.value : nan, have_mc ? mc.var_noise.value : nan,
                       have_asy ? asy.fg.bias : nan, have_asy ? asy.fg.var_x : nan,
                       have_asy ? asy.fg.var_x_noise : nan, status});
            rep.failed_rows += status == "ok" || status == "asymptotic_only" ? 0 : 1;
            if (have_mc && have_asy) {
                ++compared;
                within += std::abs(mc.risk.value - r_asy) <= 3.0 * mc.risk.se ? 1 : 0;
                if (mc.var_x_noise.value > vxe_max) {
                    vxe_max = mc.var_x_noise.value;
                    n_vxe = n;
                }
            }
            if (have_asy && asy.fg.var_x_noise > vasy_max) {
                vasy_max = asy.fg.var_x_noise;
                n_vasy = n;
            }
        }
        preds[pc.name] = {{"compared", compared},
                          {"within_3se", within},
                          {"n_at_max_Vxe_fg", compared > 0 ? json(n_vxe) : json(nullptr)},
                          {"n_at_max_V_asy", vasy_max >= 0.0 ? json(n_vasy) : json(nullptr)}};
    }
    table.write(opt.out / "results.csv");
    rep.rows = table.rows();
    rep.files = {"results.csv"};
    rep.summary = {{"predictors", preds}, {"h", inst.sigma.rank()}, {"q", inst.q()}};
    return rep;
}

// ---------------------------------------------------------------- ablation

struct AblationRow {
    std::string predictor;
    int n = 0;
    ObjectiveRow obj;
    double sim_mean = kNaN, sim_sd = kNaN;
    RegularizationParams lam{kNaN, kNaN, kNaN};
    int episodes = 0;
    std::string status;
};

RunReport run_ablation(const ExperimentConfig& cfg, const RunOptions& opt) {
    const std::size_t g = cfg.grid.values.size();
    std::vector<std::vector<AblationRow>> slots(g);
    parallel_for(g, opt.threads, [&](std::size_t gi) {
        const GridPoint gp = apply_param(cfg, cfg.grid.values[gi]);
        const ProblemInstance inst = build_instance(gp.instance, cfg.seed);
        for (const PredictorConfig& pc : gp.predictors) {
            AblationRow row;
            row.predictor = pc.name;
            row.n = gp.n;
            row.status = guarded([&] {
                const FittedPredictor fp = fit_predictor(pc, inst, gp.n, cfg.optimizer, cfg.seed);
                row.lam = fp.lambda;
                row.episodes = fp.result ? fp.result->episodes : 0;
                row.obj = objective_row(avg_report(inst, fp.penalty, gp.n));
                if (cfg.task_draws > 0) {
                    std::vector<double> risks(static_cast<std::size_t>(cfg.task_draws));
                    for (int j = 0; j < cfg.task_draws; ++j) {
                        const std::uint64_t idx = (static_cast<std::uint64_t>(gi) << 32) | static_cast<std::uint64_t>(j);
                        Rng tr = make_stream(cfg.seed, StreamDomain::task, idx + 1);
                        Rng dr = make_stream(cfg.seed, StreamDomain::design, idx);
                        const Vector beta = sample_task(inst, tr).beta;
                        const Dataset d = sample_data(inst, beta, gp.n, dr);
                        risks[static_cast<std::size_t>(j)] =
                            empirical_risk(fit_with_penalty(d, fp.penalty).beta, beta, inst.sigma.sigma());
                    }
                    row.sim_mean = pairwise_sum(risks) / cfg.task_draws;
                    std::vector<double> sq;
                    for (double r : risks) sq.push_back((r - row.sim_mean) * (r - row.sim_mean));
                    row.sim_sd = cfg.task_draws > 1 ? std::sqrt(pairwise_sum(sq) / (cfg.task_draws - 1)) : 0.0;
                }
            });
            slots[gi].push_back(row);
        }
    });
    CsvTable table({"param", "value", "predictor", "n", "R_avg", "B_avg", "VB_avg", "V_avg", "variance", "R_sim_mean",
                    "R_sim_sd", "lambda_alpha", "lambda_beta", "lambda", "episodes", "status"});
    RunReport rep;
    json best = json::object();
    for (std::size_t gi = 0; gi < g; ++gi) {
        std::string winner;
        double wval = std::numeric_limits<double>::infinity();
        for (const AblationRow& r : slots[gi]) {
            table.add({cfg.grid.param, cfg.grid.values[gi], r.predictor, static_cast<long long>(r.n), r.obj.risk,
                       r.obj.bias, r.obj.vb, r.obj.v, r.obj.variance, r.sim_mean, r.sim_sd, r.lam.lambda_alpha,
                       r.lam.lambda_beta, r.lam.lambda, static_cast<long long>(r.episodes), r.status});
            rep.failed_rows += r.status == "ok" ? 0 : 1;
            if (r.status == "ok" && r.obj.risk < wval) {
                wval = r.obj.risk;
                winner = r.predictor;
            }
        }
        best[format_double(cfg.grid.values[gi])] = winner.empty() ? json(nullptr) : json(winner);
    }
    table.write(opt.out / "results.csv");
    rep.rows = table.rows();
    rep.files = {"results.csv"};
    rep.summary = {{"param", cfg.grid.param}, {"lowest_risk_predictor", best}};
    return rep;
}

// ---------------------------------------------------------------- spectrum

RunReport run_spectrum(const ExperimentConfig& cfg, const RunOptions& opt) {
    struct Slot {
        int n = 0, q = 0, h = 0, h1 = 0, h0 = -1;
        std::string regime = "";
        double bias_min = kNaN, var_min = kNaN, rel_avg = kNaN, dir_avg = kNaN, rel_worst = kNaN, dir_worst = kNaN;
        std::string status;
        SpectrumProblem prob;
        std::optional<SpectrumSolution> bias_sol, dir_sol;
    };
    const std::size_t g = cfg.grid.values.size();
    std::vector<Slot> slots(g);
    parallel_for(g, opt.threads, [&](std::size_t gi) {
        const GridPoint gp = apply_param(cfg, cfg.grid.values[gi]);
        Slot& s = slots[gi];
        s.n = gp.n;
        s.status = guarded([&] {
            const ProblemInstance inst = build_instance(gp.instance, cfg.seed);
            s.prob = alignment_coefficients(inst.sigma, inst.truth.b, inst.task.sigma_alpha(),
                                            {gp.n, inst.task.sigma2, inst.task.scale});
            s.q = inst.q();
            s.h = s.prob.h;
            s.h1 = s.prob.h1;
            if (gp.n >= s.prob.h) {
                throw RegimeError(classify_regime(gp.n, s.prob.h), "n >= h");
            }
            const SpectrumSolution b = minimize_bias_spectrum(s.prob, cfg.spectrum_c);
            s.regime = b.regime ? to_string(*b.regime) : "";
            s.h0 = b.h0;
            s.bias_min = b.objective;
            s.bias_sol = b;
            s.var_min = minimize_variance_spectrum(s.prob.eta, gp.n, cfg.spectrum_c).objective;
            s.rel_avg = solve_relaxed(s.prob, SpectrumObjective::avg).objective;
            s.dir_sol = solve_direct(s.prob, SpectrumObjective::avg);
            s.dir_avg = s.dir_sol->objective;
            s.rel_worst = solve_relaxed(s.prob, SpectrumObjective::worst).objective;
            s.dir_worst = solve_direct(s.prob, SpectrumObjective::worst).objective;
        });
    });
    CsvTable table({"param", "value", "n", "q", "h", "h1", "regime", "h0", "bias_min", "variance_min", "relaxed_avg",
                    "direct_avg", "relaxed_worst", "direct_worst", "status"});
    CsvTable sol({"param", "value", "solution", "index", "eigen_index", "eta", "theta", "phi", "x", "r"});
    RunReport rep;
    json flips = json::array();
    std::string prev;
    for (std::size_t gi = 0; gi < g; ++gi) {
        const Slot& s = slots[gi];
        table.add({cfg.grid.param, cfg.grid.values[gi], static_cast<long long>(s.n), static_cast<long long>(s.q),
                   static_cast<long long>(s.h), static_cast<long long>(s.h1), s.regime, static_cast<long long>(s.h0),
                   s.bias_min, s.var_min, s.rel_avg, s.dir_avg, s.rel_worst, s.dir_worst, s.status});
        rep.failed_rows += s.status == "ok" ? 0 : 1;
        if (!prev.empty() && !s.regime.empty() && s.regime != prev) flips.push_back(cfg.grid.values[gi]);
        if (!s.regime.empty()) prev = s.regime;
        for (const auto& [name, so] : {std::pair{"bias", &s.bias_sol}, std::pair{"direct_avg", &s.dir_sol}}) {
            if (!*so) continue;
            for (int i = 0; i < s.prob.h; ++i) {
                sol.add({cfg.grid.param, cfg.grid.values[gi], std::string(name), static_cast<long long>(i),
                         static_cast<long long>(s.prob.order[static_cast<std::size_t>(i)]), s.prob.eta(i),
                         s.prob.theta(i), s.prob.phi(i), (*so)->x(i), (*so)->r(i)});
            }
        }
    }
    table.write(opt.out / "results.csv");
    sol.write(opt.out / "solutions.csv");
    rep.rows = table.rows();
    rep.files = {"results.csv", "solutions.csv"};
    rep.summary = {{"param", cfg.grid.param}, {"regime_flips_at", flips}};
    return rep;
}

// ---------------------------------------------------------------- full optimization

RunReport run_full_opt(const ExperimentConfig& cfg, const RunOptions& opt) {
    const ProblemInstance inst = build_instance(cfg.instance, cfg.seed);
    struct Slot {
        std::string predictor;
        int n = 0;
        double value = kNaN, initial = kNaN;
        ObjectiveRow obj;
        double worst = kNaN;
        RegularizationParams lam{kNaN, kNaN, kNaN};
        int episodes = 0, restarts = 0;
        bool patience = false;
        std::vector<TraceRow> trace;
        std::string status;
    };
    const std::size_t g = cfg.grid.values.size();
    const std::size_t np = cfg.predictors.size();
    std::vector<Slot> slots(g * np);
    parallel_for(g * np, opt.threads, [&](std::size_t cell) {
        const std::size_t gi = cell / np;
        const PredictorConfig& pc = cfg.predictors[cell % np];
        Slot& s = slots[cell];
        s.predictor = pc.name;
        s.n = static_cast<int>(as_int(cfg.grid.values[gi]));
        s.status = guarded([&] {
            const FittedPredictor fp = fit_predictor(pc, inst, s.n, cfg.optimizer, cfg.seed);
            s.lam = fp.lambda;
            const WhitenedSpectrum w = whiten(inst.sigma, fp.penalty);
            s.obj = objective_row(averaged_objective(w, inst.truth.b, inst.task.sigma_alpha(), inst.task.sigma2, s.n));
            s.worst = worst_case_objective(w, inst.truth.b, inst.task.sigma2, s.n, inst.task.scale).risk_worst.value_or(kNaN);
            s.value = cfg.optimizer.mode == ObjectiveMode::avg ? s.obj.risk : s.worst;
            if (fp.result) {
                s.initial = fp.result->initial_value;
                s.episodes = fp.result->episodes;
                s.restarts = fp.result->restarts;
                s.patience = fp.result->stopped_by_patience;
                s.trace = fp.result->trace;
            }
        });
    });
    CsvTable table({"n", "predictor", "objective", "initial_objective", "R_avg", "R_worst", "B_avg", "V_avg",
                    "lambda_alpha", "lambda_beta", "lambda", "episodes", "restarts", "stopped_by_patience", "status"});
    CsvTable trace({"n", "predictor", "step", "episode", "L", "grad_norm"});
    RunReport rep;
    json best = json::object();
    for (const Slot& s : slots) {
        table.add({static_cast<long long>(s.n), s.predictor, s.value, s.initial, s.obj.risk, s.worst, s.obj.bias, s.obj.v,
                   s.lam.lambda_alpha, s.lam.lambda_beta, s.lam.lambda, static_cast<long long>(s.episodes),
                   static_cast<long long>(s.restarts), static_cast<long long>(s.patience ? 1 : 0), s.status});
        rep.failed_rows += s.status == "ok" ? 0 : 1;
        for (const TraceRow& t : s.trace) {
            trace.add({static_cast<long long>(s.n), s.predictor, static_cast<long long>(t.step),
                       static_cast<long long>(t.episode), t.value, t.grad_norm});
        }
        const std::string key = std::to_string(s.n);
        if (s.status == "ok" && (!best.contains(key) || best[key]["objective"].get<double>() > s.value)) {
            best[key] = {{"predictor", s.predictor}, {"objective", s.value}};
        }
    }
    table.write(opt.out / "results.csv");
    trace.write(opt.out / "trace.csv");
    rep.rows = table.rows();
    rep.files = {"results.csv", "trace.csv"};
    rep.summary = {{"mode", to_string(cfg.optimizer.mode)}, {"best", best}};
    return rep;
}

// ---------------------------------------------------------------- heatmap

RunReport run_heatmap(const ExperimentConfig& cfg, const RunOptions& opt) {
    const ProblemInstance inst = build_instance(cfg.instance, cfg.seed);
    const PredictorConfig& pc = cfg.predictors.front();
    const FittedPredictor fp = fit_predictor(pc, inst, cfg.n, cfg.optimizer, cfg.seed);
    const int p = inst.p();
    Matrix b = fp.b;
    if (b.cols() < p) {  // pad so B B^T has p eigenvectors either way
        Matrix padded = Matrix::Zero(p, p);
        padded.leftCols(b.cols()) = b;
        b = padded;
    }
    const AlignmentHeatmap hm = heatmap_alignment(b, inst.truth.b, inst.sigma.sigma());
    matrix_table(hm.m).write(opt.out / "M.csv");
    matrix_table(hm.n).write(opt.out / "N.csv");
    CsvTable spec({"index", "eigenvalue"});
    for (Eigen::Index i = 0; i < hm.spectrum.size(); ++i) spec.add({static_cast<long long>(i), hm.spectrum(i)});
    spec.write(opt.out / "spectrum.csv");

    const int q = std::min(inst.q(), p);
    const Matrix a = hm.m.cwiseAbs();
    const double top = a.topLeftCorner(q, q).mean();
    const double off = q < p ? a.topRightCorner(q, p - q).mean() : kNaN;
    ObjectiveRow obj;
    const std::string status = guarded([&] { obj = objective_row(avg_report(inst, fp.penalty, cfg.n)); });
    CsvTable table({"n", "predictor", "R_avg", "B_avg", "V_avg", "top_block_mass", "off_block_mass", "status"});
    table.add({static_cast<long long>(cfg.n), pc.name, obj.risk, obj.bias, obj.v, top, off, status});
    table.write(opt.out / "results.csv");
    RunReport rep;
    rep.rows = 1;
    rep.failed_rows = status == "ok" ? 0 : 1;
    rep.files = {"results.csv", "M.csv", "N.csv", "spectrum.csv"};
    rep.summary = {{"top_block_mass", number_or_null(top)}, {"off_block_mass", number_or_null(off)},
                   {"top_to_off_ratio", number_or_null(top / off)}};
    return rep;
}

// ---------------------------------------------------------------- upstream

RunReport run_upstream(const ExperimentConfig& cfg, const RunOptions& opt) {
    const ProblemInstance inst = build_instance(cfg.instance, cfg.seed);
    const FittedPredictor fp = fit_predictor(cfg.predictors.front(), inst, cfg.n, cfg.optimizer, cfg.seed);
    ScalingOptions so;
    so.sigma2_pre = cfg.upstream.sigma2_pre;
    so.seeds = cfg.upstream.seeds;
    so.seed = cfg.seed;
    so.n = cfg.n;
    so.shared_design = cfg.upstream.shared_design;
    so.threads = opt.threads;
    const ScalingResult res = scaling_experiment(inst, fp.penalty, cfg.upstream.n_pre, so);
    CsvTable table({"n_pre", "error", "se", "median", "status"});
    CsvTable seeds({"n_pre", "seed_index", "error"});
    RunReport rep;
    for (const ScalingRow& r : res.rows) {
        const std::string status = r.error > 0.0 ? "ok" : "zero_error";
        table.add({static_cast<long long>(r.n_pre), r.error, r.se, r.median, status});
        rep.failed_rows += status == "ok" ? 0 : 1;
        for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
            seeds.add({static_cast<long long>(r.n_pre), static_cast<long long>(i), r.per_seed[i]});
        }
    }
    table.write(opt.out / "results.csv");
    seeds.write(opt.out / "per_seed.csv");
    rep.rows = table.rows();
    rep.files = {"results.csv", "per_seed.csv"};
    rep.summary = {{"slope", number_or_null(res.slope)},
                   {"intercept", number_or_null(res.intercept)},
                   {"reference_R_avg", number_or_null(res.reference)}};
    return rep;
}

// ---------------------------------------------------------------- concentration

RunReport run_concentration(const ExperimentConfig& cfg, const RunOptions& opt) {
    struct Slot {
        int q = 0;
        double r_avg = kNaN, mean = kNaN, sd = kNaN, max_dev = kNaN, mean_dev = kNaN;
        std::string status;
    };
    const std::size_t g = cfg.grid.values.size();
    std::vector<Slot> slots(g);
    parallel_for(g, opt.threads, [&](std::size_t gi) {
        const GridPoint gp = apply_param(cfg, cfg.grid.values[gi]);
        Slot& s = slots[gi];
        s.q = gp.instance.q;
        s.status = guarded([&] {
            if (gp.n < 1) throw NumericError("concentration needs n >= 1");
            const ProblemInstance inst = build_instance(gp.instance, cfg.seed);
            const FittedPredictor fp = fit_predictor(gp.predictors.front(), inst, gp.n, cfg.optimizer, cfg.seed);
            const WhitenedSpectrum w = whiten(inst.sigma, fp.penalty);
            s.r_avg = *averaged_objective(w, inst.truth.b, inst.task.sigma_alpha(), inst.task.sigma2, gp.n).risk_avg;
            std::vector<double> risks, devs;
            for (int j = 0; j < cfg.task_draws; ++j) {
                Rng tr = make_stream(cfg.seed, StreamDomain::task, (static_cast<std::uint64_t>(gi) << 32) | static_cast<std::uint64_t>(j));
                const double r = risk_components(w, sample_task(inst, tr).beta, inst.task.sigma2, gp.n).risk;
                risks.push_back(r);
                devs.push_back(std::abs(r - s.r_avg));
            }
            if (risks.empty()) return;
            const double k = static_cast<double>(risks.size());
            s.mean = pairwise_sum(risks) / k;
            s.mean_dev = pairwise_sum(devs) / k;
            s.max_dev = *std::max_element(devs.begin(), devs.end());
            std::vector<double> sq;
            for (double r : risks) sq.push_back((r - s.mean) * (r - s.mean));
            s.sd = risks.size() > 1 ? std::sqrt(pairwise_sum(sq) / (k - 1.0)) : 0.0;
        });
    });
    CsvTable table({"q", "n", "R_avg", "R_task_mean", "R_task_sd", "max_dev", "mean_dev", "status"});
    RunReport rep;
    for (const Slot& s : slots) {
        table.add({static_cast<long long>(s.q), static_cast<long long>(cfg.n), s.r_avg, s.mean, s.sd, s.max_dev,
                   s.mean_dev, s.status});
        rep.failed_rows += s.status == "ok" ? 0 : 1;
    }
    table.write(opt.out / "results.csv");
    rep.rows = table.rows();
    rep.files = {"results.csv"};
    const double ratio = g >= 2 ? slots.front().max_dev / slots.back().max_dev : kNaN;
    rep.summary = {{"draws", cfg.task_draws}, {"max_dev_first_over_last", number_or_null(ratio)}};
    return rep;
}

}  // namespace

ProblemInstance build_instance(const InstanceConfig& ic, std::uint64_t seed) {
    const int p = ic.p;
    Rng cov_rng = make_stream(seed, StreamDomain::covariance);
    CovarianceSpec spec;
    if (ic.covariance.type == "ar1") spec = Ar1Spec{p, ic.covariance.rho};
    else if (ic.covariance.type == "identity") spec = IdentitySpec{p};
    else spec = WishartJitterSpec{p, ic.covariance.m > 0 ? ic.covariance.m : p, ic.covariance.jitter};
    CovarianceModel sigma = make_covariance(spec, &cov_rng);

    const Matrix col = ic.ground_truth.type == "ar1" ? make_covariance(Ar1Spec{p, ic.ground_truth.rho}).sigma()
                                                     : Matrix(Matrix::Identity(p, p));
    Rng truth_rng = make_stream(seed, StreamDomain::ground_truth);
    GroundTruthRepresentation truth =
        sample_ground_truth(p, ic.q, CovarianceModel(ic.ground_truth.scale * col), truth_rng);
    TaskModel task{Matrix::Identity(ic.q, ic.q), ic.task.scale, ic.task.sigma2, ic.task.snr};
    return make_instance(std::move(sigma), std::move(truth), task, seed);
}

FittedPredictor fit_predictor(const PredictorConfig& pc, const ProblemInstance& inst, int n,
                              const OptimizerSettings& os, std::uint64_t seed) {
    const int p = inst.p();
    const int q = inst.q();
    const int k = pc.k > 0 ? pc.k : q;
    switch (pc.type) {
        case PredictorType::ridgeless:
            return {identity_penalty(p), Matrix(), {kNaN, kNaN, kNaN}, std::nullopt};
        case PredictorType::fixed: {
            Matrix b;
            if (pc.representation == "truth") b = inst.truth.b;
            else if (pc.representation == "zero") b = Matrix::Zero(p, k);
            else b = init_representation(p, k, seed);
            return {build_penalty(Representation(b), pc.lambda), b, pc.lambda, std::nullopt};
        }
        case PredictorType::ofp:
        case PredictorType::eep: {
            const ObjectiveSetup setup = ObjectiveSetup::from_instance(inst, n, os.mode);
            const OptimizerConfig oc = optimizer_config(os, k, seed);
            OptimizeResult r = optimize_ofp(oc, setup);
            if (pc.type == PredictorType::eep) r = optimize_eep(oc, setup, r);
            Penalty pen = build_penalty(Representation(r.b), r.lam);
            Matrix b = r.b;
            const RegularizationParams lam = r.lam;
            return {std::move(pen), std::move(b), lam, std::move(r)};
        }
    }
    throw std::logic_error("fit_predictor: unknown predictor type");
}

std::vector<ExperimentKind> kinds_for_command(const std::string& command) {
    using K = ExperimentKind;
    if (command == "asymptotics") return {K::risk_curve, K::concentration};
    if (command == "simulate") return {K::risk_curve};
    if (command == "spectrum-opt") return {K::spectrum};
    if (command == "full-opt") return {K::full_opt};
    if (command == "ablation") return {K::ablation};
    if (command == "heatmap") return {K::heatmap};
    if (command == "upstream") return {K::upstream};
    return {};
}

RunReport run_experiment(const ExperimentConfig& cfg_in, const RunOptions& opt) {
    ExperimentConfig cfg = cfg_in;
    if (opt.command == "asymptotics" && cfg.kind == ExperimentKind::risk_curve) {
        cfg.replicates = 0;  // asymptotic columns only
    }
    std::error_code ec;
    std::filesystem::create_directories(opt.out, ec);
    if (ec) throw IoError("cannot create output directory " + opt.out.string() + ": " + ec.message());

    RunReport rep;
    switch (cfg.kind) {
        case ExperimentKind::risk_curve: rep = run_risk_curve(cfg, opt); break;
        case ExperimentKind::ablation: rep = run_ablation(cfg, opt); break;
        case ExperimentKind::spectrum: rep = run_spectrum(cfg, opt); break;
        case ExperimentKind::full_opt: rep = run_full_opt(cfg, opt); break;
        case ExperimentKind::heatmap: rep = run_heatmap(cfg, opt); break;
        case ExperimentKind::upstream: rep = run_upstream(cfg, opt); break;
        case ExperimentKind::concentration: rep = run_concentration(cfg, opt); break;
    }
    rep.summary["kind"] = to_string(cfg.kind);
    rep.summary["rows"] = rep.rows;
    rep.summary["failed_rows"] = rep.failed_rows;
    write_json(opt.out / "summary.json", rep.summary);
    rep.files.push_back("summary.json");

    json manifest;
    manifest["tool"] = "featrisk";
    manifest["version"] = FEATRISK_VERSION;
    manifest["command"] = opt.command;
    manifest["seed"] = cfg.seed;
    manifest["config"] = to_json(cfg);
    rep.files.push_back("manifest.json");
    manifest["files"] = rep.files;
    write_json(opt.out / "manifest.json", manifest);
    return rep;
}

}  // namespace featrisk::tools
