#include "qca/classical.hpp"
#include "qca/evolve.hpp"
#include "qca/mlopt.hpp"
#include "qca/models.hpp"
#include "qca/observables.hpp"
#include "qca/spectra.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace qca;

namespace {

// Config and usage problems map to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    json cfg = json::object();
    std::string hash;
    fs::path out = ".";
    std::uint64_t seed = 1;
    int threads = 1;
    std::string method = "auto";
};

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << content;
        if (!f.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string csv_preamble(const Context& ctx) {
    return "# engine=" + std::string(kEngineVersion) + " config_hash=" + ctx.hash + "\n";
}

json stamp(const Context& ctx, json j) {
    j["engine_version"] = kEngineVersion;
    j["config_hash"] = ctx.hash;
    return j;
}

void write_json(const Context& ctx, const std::string& name, const json& j) {
    write_atomic(ctx.out / name, stamp(ctx, j).dump(2) + "\n");
}

void write_trajectory(const Context& ctx, const std::string& name, const std::vector<Sample>& traj, const std::string& method) {
    std::string s = csv_preamble(ctx) + "t,n_over_N,s_z,trace,method\n";
    for (const auto& x : traj) s += num(x.t) + "," + num(x.n_over_N) + "," + num(x.s_z) + "," + num(x.trace) + "," + method + "\n";
    write_atomic(ctx.out / name, s);
}

// ---- schema helpers -------------------------------------------------------

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

const json& need(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
    return obj.at(key);
}

double get_num(const json& obj, const std::string& key, double def, const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return obj.at(key).get<double>();
}

long get_int(const json& obj, const std::string& key, long def, const std::string& where) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<long>();
}

bool get_bool(const json& obj, const std::string& key, bool def, const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return obj.at(key).get<bool>();
}

std::string get_str(const json& obj, const std::string& key, const std::string& def, const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return obj.at(key).get<std::string>();
}

std::string bitstring(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a bitstring");
    const auto s = v.get<std::string>();
    if (s.empty() || s.find_first_not_of("01") != std::string::npos) throw ConfigError(where + ": '" + s + "' is not a bitstring");
    return s;
}

std::vector<int> size_list(const json& obj, const std::string& where) {
    std::vector<int> sizes;
    if (obj.contains("sizes")) {
        if (!obj.at("sizes").is_array()) throw ConfigError(where + ".sizes: expected an array of integers");
        for (const auto& v : obj.at("sizes")) {
            if (!v.is_number_integer()) throw ConfigError(where + ".sizes: expected an array of integers");
            sizes.push_back(v.get<int>());
        }
    } else if (obj.contains("n_min") || obj.contains("n_max")) {
        const long lo = get_int(obj, "n_min", 0, where), hi = get_int(obj, "n_max", -1, where);
        for (long n = lo; n <= hi; ++n) sizes.push_back(static_cast<int>(n));
    }
    if (sizes.empty()) throw ConfigError(where + ": empty size range");
    return sizes;
}

MLWeights parse_weights(const json& v, const std::string& where) {
    if (v.is_string()) {
        if (v.get<std::string>() == "published") return MLWeights::published();
        throw ConfigError(where + ": only \"published\" is a named weight set");
    }
    if (!v.is_array() || v.size() != 8) throw ConfigError(where + ": expected eight weights w1..w8");
    MLWeights w;
    for (std::size_t i = 0; i < 8; ++i) {
        if (!v[i].is_number()) throw ConfigError(where + ": weights must be numbers");
        w.w[i] = v[i].get<double>();
        if (w.w[i] < 0.0 || w.w[i] > 1.0) throw ConfigError(where + ": weights must lie in [0, 1]");
    }
    return w;
}

TrainingSet parse_training(const json& cfg, const std::string& where) {
    if (!cfg.contains("training_set")) return TrainingSet::defaults();
    json arr = cfg.at("training_set");
    if (arr.is_string()) {
        std::ifstream f(arr.get<std::string>());
        if (!f) throw ConfigError(where + ".training_set: cannot open " + arr.get<std::string>());
        try {
            arr = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(where + ".training_set: " + e.what());
        }
    }
    if (!arr.is_array() || arr.empty()) throw ConfigError(where + ".training_set: expected a non-empty array of {x, y}");
    TrainingSet set;
    for (const auto& p : arr) {
        only_keys(p, {"x", "y"}, where + ".training_set[]");
        const int y = static_cast<int>(get_int(p, "y", -1, where + ".training_set[]"));
        if (y != 0 && y != 1) throw ConfigError(where + ".training_set[].y: must be 0 or 1");
        set.pairs.push_back({bitstring(need(p, "x", where + ".training_set[]"), where + ".training_set[].x"), y});
    }
    return set;
}

Method pick_method(const Context& ctx) {
    try {
        return method_from_string(ctx.method);
    } catch (const Error& e) {
        throw ConfigError(std::string("--method: ") + e.what());
    }
}

json weights_json(const MLWeights& w) {
    json a = json::array();
    for (double v : w.w) a.push_back(std::round(v * 1000.0) / 1000.0);
    return a;
}

// ---- evolve ---------------------------------------------------------------

json mv_summary(const MVContinuousResult& r) {
    return {{"label", r.label},       {"tau_A", r.tau_A},         {"tau_B", r.tau_B},           {"states_A", r.states_A},
            {"states_B", r.states_B}, {"mass_zeros", r.mass_zeros}, {"mass_ones", r.mass_ones}, {"converged", r.converged}};
}

int run_mv_continuous(const Context& ctx, const std::string& bits, const json& opts, const std::string& where) {
    const int n = static_cast<int>(bits.size());
    if (n < 4) throw ConfigError(where + ": MV runs need N >= 4");
    const double dt = get_num(opts, "dt", 0.05, where);
    double tau_A = get_num(opts, "tau_A", -1.0, where);
    if (tau_A < 0.0) tau_A = mv_continuous_worst_case(n).tau_A;
    const double horizon_B = get_num(opts, "horizon_B", 50.0 * n, where);
    const long max_states = get_int(opts, "max_states", 4'000'000, where);
    const bool early = get_bool(opts, "stop_A_early", false, where);
    if (!(dt > 0.0) || horizon_B < 0.0 || max_states <= 0) throw ConfigError(where + ": dt, horizon_B and max_states must be positive");
    const auto r = mv_continuous_run(bits, tau_A, horizon_B, dt, static_cast<std::size_t>(max_states), early);
    write_trajectory(ctx, "trajectory.csv", r.trajectory, "diagonal-markov");
    json s = mv_summary(r);
    s["model"] = "mv";
    s["initial"] = bits;
    s["n_sites"] = n;
    s["final_n_over_N"] = r.trajectory.back().n_over_N;
    write_json(ctx, "summary.json", s);
    std::cout << "mv: label " << r.label << ", tau_A " << num(r.tau_A) << ", tau_B " << num(r.tau_B) << ", final n/N "
              << num(r.trajectory.back().n_over_N) << "\n";
    return r.converged ? 0 : 2;
}

VecState initial_state(const json& v, int n, const std::string& where) {
    if (v.is_string() && v.get<std::string>() == "ghz") return ghz_state(n);
    if (v.is_string() && v.get<std::string>().rfind("file:", 0) == 0) {
        // JSON file with "re" and "im" 2^N x 2^N arrays.
        const std::string path = v.get<std::string>().substr(5);
        std::ifstream f(path);
        if (!f) throw ConfigError(where + ": cannot open " + path);
        json m;
        try {
            m = json::parse(f);
        } catch (const json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
        const auto d = pow2(n);
        CMat rho = CMat::Zero(d, d);
        for (std::int64_t i = 0; i < d; ++i)
            for (std::int64_t j = 0; j < d; ++j) {
                const double re = m.at("re").at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
                const double im = m.contains("im") ? m.at("im").at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>() : 0.0;
                rho(i, j) = cplx(re, im);
            }
        return make_state(rho);
    }
    const std::string bits = bitstring(v, where);
    if (static_cast<int>(bits.size()) != n) throw ConfigError(where + ": length differs from n_sites");
    return basis_state(bits);
}

int cmd_evolve(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"model", "n_sites", "params", "initial", "evolution", "samples", "seed"}, "config");
    const std::string model = get_str(c, "model", "", "config");
    static const std::set<std::string> models{"fuks", "dephasing", "mv", "ml", "fates"};
    if (!models.count(model)) throw ConfigError("config.model: unknown model '" + model + "'");
    const json params = c.value("params", json::object());
    const json evo = need(c, "evolution", "config");
    only_keys(evo, {"mode", "t", "steps", "tol", "horizon", "path", "dt", "tau_A", "horizon_B", "max_states", "stop_A_early"}, "config.evolution");
    const std::string mode = get_str(evo, "mode", "continuous", "config.evolution");
    const int samples = static_cast<int>(get_int(c, "samples", 64, "config"));

    if (model == "mv") {
        only_keys(params, {}, "config.params");
        if (mode != "continuous") throw ConfigError("config.evolution.mode: the mv model runs in continuous mode (use classify for the discrete schedule)");
        const std::string bits = bitstring(need(c, "initial", "config"), "config.initial");
        if (c.contains("n_sites") && get_int(c, "n_sites", 0, "config") != static_cast<long>(bits.size()))
            throw ConfigError("config.n_sites: differs from the initial bitstring length");
        return run_mv_continuous(ctx, bits, evo, "config.evolution");
    }

    const int n = static_cast<int>(get_int(c, "n_sites", 0, "config"));
    if (n < 2 || n > 26) throw ConfigError("config.n_sites: must lie in [2, 26]");
    const VecState init = initial_state(need(c, "initial", "config"), n, "config.initial");

    std::optional<LindbladSpec> spec;
    std::optional<SuperOp> step;
    if (model == "fuks") {
        only_keys(params, {"p", "gamma"}, "config.params");
        FuksParams fp;
        fp.p = get_num(params, "p", fp.p, "config.params");
        fp.gamma = get_num(params, "gamma", fp.gamma, "config.params");
        spec = fuks_lindblad(fp, n);
        if (mode != "continuous" && get_str(evo, "path", "discrete", "config.evolution") == "discrete") step = fuks_step(fp, n);
    } else if (model == "dephasing") {
        only_keys(params, {"omega", "gamma"}, "config.params");
        DephasingParams dp;
        dp.omega = get_num(params, "omega", dp.omega, "config.params");
        dp.gamma = get_num(params, "gamma", dp.gamma, "config.params");
        spec = dephasing_lindblad(dp, n);
    } else if (model == "ml") {
        only_keys(params, {"weights"}, "config.params");
        spec = ml_lindblad(params.contains("weights") ? parse_weights(params.at("weights"), "config.params.weights") : MLWeights::published(), n);
    } else if (model == "fates") {
        only_keys(params, {"p"}, "config.params");
        const double p = get_num(params, "p", 0.5, "config.params");
        if (mode == "continuous") throw ConfigError("config.evolution.mode: the fates model is discrete only");
        step = fates_step(p, n, fuks_schedule(n));
    }

    EvolutionResult r;
    json s = {{"model", model}, {"n_sites", n}, {"mode", mode}};
    if (mode == "continuous") {
        const double t = get_num(evo, "t", -1.0, "config.evolution");
        if (t < 0.0) throw ConfigError("config.evolution.t: required and non-negative for continuous runs");
        ContinuousOptions opt;
        opt.method = pick_method(ctx);
        opt.samples = samples;
        r = continuous_evolve(*spec, init, t, opt);
    } else if (mode == "discrete") {
        const long steps = get_int(evo, "steps", -1, "config.evolution");
        if (steps < 0) throw ConfigError("config.evolution.steps: required and non-negative for discrete runs");
        if (!step) throw ConfigError("config.model: no discrete step for '" + model + "'");
        r = discrete_run({*step}, init, steps, StopRule::none(), samples);
    } else if (mode == "converge") {
        const double tol = get_num(evo, "tol", 1e-10, "config.evolution");
        const double horizon = get_num(evo, "horizon", 1e5, "config.evolution");
        if (step) r = converge_to_fixed_point(*step, init, tol, static_cast<long>(horizon));
        else r = converge_to_fixed_point(*spec, init, tol, horizon, pick_method(ctx));
    } else {
        throw ConfigError("config.evolution.mode: expected continuous, discrete or converge");
    }

    write_trajectory(ctx, "trajectory.csv", r.trajectory, to_string(r.method_used));
    s["method"] = to_string(r.method_used);
    s["time_reached"] = r.time_reached;
    s["steps"] = r.steps;
    s["converged"] = r.converged;
    const Sample last = r.trajectory.back();
    s["final_n_over_N"] = last.n_over_N;
    s["final_s_z"] = last.s_z;
    s["final_trace"] = last.trace;
    if (model == "fuks" && r.final_state.amp.size() > 0) {
        const AlphaBeta ab = project_alpha_beta(init);
        const VecState target = fuks_fixed_point(n, ab);
        s["alpha"] = ab.alpha;
        s["beta"] = {ab.beta.real(), ab.beta.imag()};
        s["fidelity_to_fixed_point"] = fidelity(r.final_state, target);
        s["trace_distance_to_fixed_point"] = trace_distance(r.final_state, target);
    }
    write_json(ctx, "summary.json", s);
    std::cout << model << ": " << to_string(r.method_used) << ", t = " << num(r.time_reached) << ", n/N = " << num(last.n_over_N)
              << (r.converged ? "" : " (not converged)") << "\n";
    return r.converged ? 0 : 2;
}

// ---- gap-scan -------------------------------------------------------------

std::function<LindbladSpec(int)> model_factory(const std::string& model, const json& params, const std::string& where) {
    if (model == "fuks") {
        only_keys(params, {"gamma"}, where);
        FuksParams fp;
        fp.gamma = get_num(params, "gamma", 1.0, where);
        return [fp](int n) { return fuks_lindblad(fp, n); };
    }
    if (model == "dephasing") {
        only_keys(params, {"omega", "gamma"}, where);
        DephasingParams dp;
        dp.omega = get_num(params, "omega", 0.0, where);
        dp.gamma = get_num(params, "gamma", 1.0, where);
        return [dp](int n) { return dephasing_lindblad(dp, n); };
    }
    if (model == "ml") {
        only_keys(params, {"weights"}, where);
        const MLWeights w = params.contains("weights") ? parse_weights(params.at("weights"), where + ".weights") : MLWeights::published();
        return [w](int n) { return ml_lindblad(w, n); };
    }
    throw ConfigError("config.model: no generator for '" + model + "'");
}

int cmd_gap_scan(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"model", "params", "sizes", "n_min", "n_max", "mode", "exclude_first", "compare", "compare_params", "k", "seed"}, "config");
    const std::string model = get_str(c, "model", "", "config");
    const auto make = model_factory(model, c.value("params", json::object()), "config.params");
    const std::vector<int> sizes = size_list(c, "config");
    SpectrumOptions opt;
    const std::string mode = get_str(c, "mode", "dense", "config");
    if (mode == "dense") opt.mode = SpectrumMode::Dense;
    else if (mode == "sparse") opt.mode = SpectrumMode::Sparse;
    else throw ConfigError("config.mode: expected dense or sparse");
    opt.k = static_cast<int>(get_int(c, "k", opt.k, "config"));
    opt.seed = static_cast<unsigned>(ctx.seed);
    for (int n : sizes)
        if (n < 2 || (opt.mode == SpectrumMode::Dense && n > tolerances().dense_max_sites) || n > 12)
            throw ConfigError("config.sizes: N = " + std::to_string(n) + " is outside the limits of " + mode + " mode");

    const auto points = gap_scan(model, make, sizes, opt, ctx.threads);
    std::vector<GapPoint> ref;
    if (c.contains("compare")) {
        const std::string other = get_str(c, "compare", "", "config");
        ref = gap_scan(other, model_factory(other, c.value("compare_params", json::object()), "config.compare_params"), sizes, opt, ctx.threads);
    }
    std::string csv = csv_preamble(ctx) + "model,N,gap,null_dim,method" + (ref.empty() ? "" : ",ratio") + "\n";
    std::vector<std::pair<double, double>> fitpts;
    const long skip = get_int(c, "exclude_first", model == "dephasing" ? 2 : 0, "config");
    bool all_ok = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        all_ok = all_ok && p.ok;
        csv += p.model + "," + std::to_string(p.n_sites) + "," + (p.ok ? num(p.gap) : "nan") + "," + std::to_string(p.null_dim) + "," + p.method;
        if (!ref.empty()) csv += "," + ((p.ok && ref[i].ok) ? num(p.gap / ref[i].gap) : "nan");
        csv += "\n";
        if (p.ok && static_cast<long>(i) >= skip) fitpts.emplace_back(p.n_sites, p.gap);
    }
    write_atomic(ctx.out / "gaps.csv", csv);
    json fit = {{"model", model}};
    if (fitpts.size() >= 3) {
        const FitReport f = loglog_fit(fitpts);
        fit.update({{"c", f.c}, {"d", f.d}, {"stderr_c", f.stderr_c}, {"stderr_d", f.stderr_d}, {"n_points", f.n_points}});
        std::cout << model << ": log10(gap) = " << num(f.c) << " log10(N) + " << num(f.d) << "\n";
    } else {
        fit.update({{"c", nullptr}, {"d", nullptr}, {"stderr_c", nullptr}, {"stderr_d", nullptr}, {"n_points", fitpts.size()}});
        std::cout << model << ": " << fitpts.size() << " point(s) after exclude_first = " << skip << ", no fit (needs 3)\n";
    }
    write_json(ctx, "fit.json", fit);
    for (const auto& p : points)
        if (!p.ok) std::cerr << "N = " << p.n_sites << ": " << p.error << "\n";
    return all_ok ? 0 : 3;
}

// ---- majority voting ------------------------------------------------------

int cmd_mv_verify(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"sizes", "n_min", "n_max", "seed"}, "config");
    const std::vector<int> sizes = size_list(c, "config");
    for (int n : sizes)
        if (n < 3 || n % 3 != 0 || n > 15)
            throw ConfigError("config.sizes: N = " + std::to_string(n) + " must be a multiple of 3 in [3, 15] (pad other sizes first)");
    std::string csv = csv_preamble(ctx) + "N,total,correct,max_layers,bound,worst_witness\n";
    json rows = json::array();
    bool ok = true;
    for (int n : sizes) {
        const auto r = mv_verify_exhaustive(n, ctx.threads);
        ok = ok && r.all_correct() && r.max_layers <= r.bound;
        csv += std::to_string(n) + "," + std::to_string(r.total) + "," + std::to_string(r.correct) + "," + std::to_string(r.max_layers) + "," +
               std::to_string(r.bound) + "," + r.worst_witness + "\n";
        rows.push_back({{"N", n}, {"total", r.total}, {"correct", r.correct}, {"max_layers", r.max_layers}, {"bound", r.bound},
                        {"worst_witness", r.worst_witness}, {"failures", r.failures}});
        std::cout << "N = " << n << ": " << r.correct << "/" << r.total << " correct, max layers " << r.max_layers << " (bound " << r.bound << ")\n";
    }
    write_atomic(ctx.out / "mv_verify.csv", csv);
    write_json(ctx, "mv_verify.json", {{"all_correct", ok}, {"sizes", rows}});
    return ok ? 0 : 3;
}

int cmd_mv_run(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"initial", "dt", "tau_A", "horizon_B", "max_states", "stop_A_early", "seed"}, "config");
    return run_mv_continuous(ctx, bitstring(need(c, "initial", "config"), "config.initial"), c, "config");
}

int cmd_classify(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"initial", "pad", "quantum", "seed"}, "config");
    std::string bits = bitstring(need(c, "initial", "config"), "config.initial");
    if (get_bool(c, "pad", false, "config")) bits = mv_pad(bits);
    if (bits.size() % 3 != 0) throw ConfigError("config.initial: length must be a multiple of 3 (set \"pad\": true)");
    const Classification cl = mv_classify(BitString::parse(bits));
    json s = {{"input", bits}, {"label", cl.label}, {"layers_used", cl.layers_used}, {"bound", tau_formula(static_cast<int>(bits.size()))}};
    if (get_bool(c, "quantum", false, "config")) {
        const int n = static_cast<int>(bits.size());
        if (n > 9) throw ConfigError("config.quantum: the quantum schedule is limited to N <= 9");
        const LayerCounts lc = mv_layer_counts(n);
        VecState st = basis_state(bits);
        for (int i = 0; i < lc.tau_A; ++i) st = mv_A_step(n, i % 3 + 1).apply(st);
        for (int i = 0; i < lc.tau_B; ++i) st = mv_B_step(n, i % 3 + 1).apply(st);
        const Distribution d = diagonal_of(st);
        s["quantum_p_zeros"] = d.prob(0);
        s["quantum_p_ones"] = d.prob(d.prob.size() - 1);
    }
    write_json(ctx, "classify.json", s);
    std::cout << bits << " -> " << cl.label << " after " << cl.layers_used << " sublayers\n";
    return 0;
}

// ---- machine-learned Lindbladian ------------------------------------------

json cost_json(const CostReport& rep) {
    json states = json::array();
    for (const auto& s : rep.states)
        states.push_back({{"x", s.x}, {"y", s.y}, {"f0", s.f0}, {"f1", s.f1}, {"term", s.term}, {"misclassified", s.misclassified}});
    return {{"cost", rep.cost}, {"states", states}};
}

int cmd_ml_cost(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"weights", "training_set", "tau_factor", "seed"}, "config");
    const MLWeights w = c.contains("weights") ? parse_weights(c.at("weights"), "config.weights") : MLWeights::published();
    const auto rep = ml_cost_detail(w, parse_training(c, "config"), get_num(c, "tau_factor", 10.0, "config"));
    json j = cost_json(rep);
    j["weights"] = weights_json(w);
    write_json(ctx, "ml_cost.json", j);
    std::cout << "C = " << num(rep.cost) << "\n";
    for (const auto& s : rep.states)
        if (s.misclassified) std::cout << "misclassified: " << s.x << "\n";
    return 0;
}

int cmd_ml_opt(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"restarts", "tol", "max_evals", "start", "training_set", "seed"}, "config");
    OptimizeOptions opt;
    opt.restarts = static_cast<int>(get_int(c, "restarts", opt.restarts, "config"));
    opt.tol = get_num(c, "tol", opt.tol, "config");
    opt.max_evals = static_cast<int>(get_int(c, "max_evals", opt.max_evals, "config"));
    opt.seed = ctx.seed;
    opt.threads = ctx.threads;
    const std::string start = get_str(c, "start", "random", "config");
    if (start == "published") {
        opt.start_from_initial = true;
        opt.initial = MLWeights::published();
    } else if (start != "random") {
        throw ConfigError("config.start: expected random or published");
    }
    if (opt.restarts < 1) throw ConfigError("config.restarts: must be at least 1");
    const TrainingSet set = parse_training(c, "config");
    const auto res = optimize_weights(set, opt);
    const MLWeights shown = truncate_weights(res.weights);
    json j = {{"cost", res.cost},
              {"start_cost", res.start_cost},
              {"weights", weights_json(shown)},
              {"cost_truncated_weights", ml_cost(shown, set)},
              {"evaluations", res.evaluations},
              {"restart_costs", res.restart_costs}};
    write_json(ctx, "ml_opt.json", j);
    std::cout << "best C = " << num(res.cost) << " over " << opt.restarts << " restarts\n";
    return 0;
}

// ---- Fatès ----------------------------------------------------------------

int cmd_fates_demo(const Context& ctx) {
    const json& c = ctx.cfg;
    only_keys(c, {"initial", "p", "steps", "runs", "odd_first", "seed"}, "config");
    const std::string bits = c.contains("initial") ? bitstring(c.at("initial"), "config.initial") : "1111100";
    const double p = get_num(c, "p", 0.5, "config");
    const long steps = get_int(c, "steps", 1000, "config");
    const long runs = get_int(c, "runs", 20, "config");
    if (p < 0.0 || p > 1.0) throw ConfigError("config.p: must lie in [0, 1]");
    if (bits.size() < 3 || bits.size() > 10) throw ConfigError("config.initial: length must lie in [3, 10]");
    if (steps < 0 || runs < 1) throw ConfigError("config.steps/runs: must be non-negative / positive");
    const int n = static_cast<int>(bits.size());
    const bool odd_first = get_bool(c, "odd_first", false, "config");
    const PartitionSchedule sched = fuks_schedule(n, odd_first);
    std::string csv = csv_preamble(ctx) + "run,seed,final_n_over_N,reached_all_ones\n";
    json rows = json::array();
    int reached = 0;
    for (long i = 0; i < runs; ++i) {
        const std::uint64_t seed = ctx.seed * 1000003ull + static_cast<std::uint64_t>(i);
        const auto r = fates_trajectory(p, basis_state(bits), steps, seed, sched, 64);
        const double x = density_n(r.final_state) / n;
        const bool ok = x > 0.99;
        reached += ok;
        csv += std::to_string(i) + "," + std::to_string(seed) + "," + num(x) + "," + (ok ? "1" : "0") + "\n";
        if (i == 0) write_trajectory(ctx, "trajectory.csv", r.trajectory, "discrete");
        rows.push_back({{"seed", seed}, {"final_n_over_N", x}});
    }
    const auto ens = discrete_run({fates_step(p, n, sched)}, basis_state(bits), steps, StopRule::none(), 64);
    write_atomic(ctx.out / "fates_runs.csv", csv);
    write_json(ctx, "fates.json",
               {{"initial", bits}, {"p", p}, {"steps", steps}, {"odd_first", odd_first}, {"runs", rows}, {"reached_all_ones", reached},
                {"ensemble_final_n_over_N", density_n(ens.final_state) / n}});
    std::cout << reached << "/" << runs << " runs reached all-ones; ensemble n/N = " << num(density_n(ens.final_state) / n) << "\n";
    return 0;
}

// ---- selftest -------------------------------------------------------------

int cmd_selftest(const Context& ctx) {
    int failed = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << " " << detail << "\n";
        failed += !ok;
    };
    for (double p : {0.05, 0.25, 0.5}) {
        double worst = 0.0;
        for (const auto& set : fuks_kraus_sets(p)) worst = std::max(worst, kraus_residual(set));
        check("fuks-kraus-completeness p=" + num(p), worst < 1e-12, num(worst));
    }
    for (auto* kraus : {&mv_A_kraus, &mv_B_kraus}) {
        const double r = kraus_residual(kraus());
        check("mv-kraus-completeness", r < 1e-12, num(r));
    }
    {
        const VecState s = basis_state("0110");
        const double drift = std::abs(fuks_step({0.3, 1.0}, 4).apply(s).trace() - 1.0);
        check("fuks-step-trace", drift < 1e-10, num(drift));
    }
    {
        const auto r = continuous_evolve(dephasing_lindblad({0.7, 1.0}, 4), pure_state(ket_from_bits("0110") + ket_from_bits("1010")), 5.0);
        const double dsz = std::abs(r.trajectory.back().s_z - r.trajectory.front().s_z);
        check("dephasing-sz-conservation", dsz < 1e-8, num(dsz));
    }
    {
        const auto rep = spectrum(fuks_lindblad({}, 3));
        check("fuks-null-dim-N3", rep.null_dim == 4, std::to_string(rep.null_dim));
    }
    {
        const auto r = mv_verify_exhaustive(6, ctx.threads);
        check("mv-exhaustive-N6", r.all_correct() && r.max_layers <= 11, std::to_string(r.correct) + "/" + std::to_string(r.total));
    }
    {
        const double c0 = ml_cost(MLWeights{}, TrainingSet::defaults());
        check("ml-cost-frozen", std::abs(c0 + 2.0) < 1e-12, num(c0));
    }
    std::cout << (failed == 0 ? "selftest passed" : "selftest failed") << "\n";
    return failed == 0 ? 0 : 3;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::NonConvergence: return 2;
        case ErrorKind::NumericalFailure: return 3;
        default: return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum cellular automata density classification engine"};
    app.require_subcommand(1);
    Context ctx;
    std::string config_path, out_dir = ".";
    std::uint64_t seed = 1;
    int threads = 1;
    std::string method = "auto";
    app.add_option("--config", config_path, "JSON experiment configuration");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--method", method, "evolution method")->check(CLI::IsMember({"auto", "dense", "krylov", "diagonal"}));
    app.set_version_flag("--version", std::string(kEngineVersion));

    const std::vector<std::pair<std::string, std::string>> subs{
        {"evolve", "evolve a model and write its trajectory"},
        {"gap-scan", "spectral gaps over a size range with a log-log fit"},
        {"mv-verify", "exhaustive check of the discrete majority-voting schedule"},
        {"mv-run", "continuous majority voting on one bitstring"},
        {"classify", "classify one bitstring with the discrete schedule"},
        {"ml-cost", "cost of a weight vector on a training set"},
        {"ml-opt", "multistart optimisation of the learned-jump weights"},
        {"fates-demo", "stochastic Fatès runs showing the failed majority"},
        {"selftest", "quick invariant suite"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        ctx.out = out_dir;
        ctx.seed = seed;
        ctx.threads = threads;
        ctx.method = method;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("--config: cannot open " + config_path);
            try {
                ctx.cfg = json::parse(f);
            } catch (const json::exception& e) {
                throw ConfigError(std::string("--config: ") + e.what());
            }
            if (!ctx.cfg.is_object()) throw ConfigError("config: top level must be a JSON object");
            if (ctx.cfg.contains("seed")) {
                if (!ctx.cfg.at("seed").is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
                if (app.get_option("--seed")->count() == 0) ctx.seed = ctx.cfg.at("seed").get<std::uint64_t>();
            }
        } else if (cmd != "selftest") {
            throw ConfigError("--config is required for " + cmd);
        }
        ctx.hash = fnv1a_hex(ctx.cfg.dump() + "|cmd=" + cmd + "|seed=" + std::to_string(ctx.seed) + "|method=" + ctx.method);

        if (cmd == "evolve") return cmd_evolve(ctx);
        if (cmd == "gap-scan") return cmd_gap_scan(ctx);
        if (cmd == "mv-verify") return cmd_mv_verify(ctx);
        if (cmd == "mv-run") return cmd_mv_run(ctx);
        if (cmd == "classify") return cmd_classify(ctx);
        if (cmd == "ml-cost") return cmd_ml_cost(ctx);
        if (cmd == "ml-opt") return cmd_ml_opt(ctx);
        if (cmd == "fates-demo") return cmd_fates_demo(ctx);
        return cmd_selftest(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
