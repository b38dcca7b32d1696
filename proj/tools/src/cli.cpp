#include "twinhet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "twinhet/twinhet.hpp"

namespace twinhet::cli {

using json = nlohmann::ordered_json;

namespace {

// One flag: how to register it, read it from a config file, and echo it back.
struct Field {
    std::string name;
    std::function<void(CLI::App&)> add;
    std::function<void(const json&)> load;
    std::function<json()> dump;
};

template <class T>
Field field(const std::string& name, T& ref, const std::string& help) {
    Field f;
    f.name = name;
    f.add = [name, &ref, help](CLI::App& app) {
        auto* opt = app.add_option("--" + name, ref, help);
        if constexpr (std::is_same_v<T, std::vector<double>>) opt->delimiter(',');
    };
    f.load = [name, &ref](const json& j) {
        if constexpr (std::is_same_v<T, double>) {
            ref = j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
        } else {
            ref = j.get<T>();
        }
    };
    f.dump = [&ref]() -> json {
        if constexpr (std::is_same_v<T, double>) {
            if (std::isnan(ref)) return nullptr;
        }
        return json(ref);
    };
    return f;
}

std::map<std::string, Field> all_fields(RunConfig& c) {
    std::vector<Field> v = {
        field("lambda", c.lambda, "detector twin-beam parameter, [0, 1)"),
        field("eta", c.eta, "quantum efficiency, (0, 1]"),
        field("state-lambda", c.state_lambda, "twin-beam parameter of the measured state (default: --lambda)"),
        field("w-re", c.w_re, "displacement of the measured state, real part"),
        field("w-im", c.w_im, "displacement of the measured state, imaginary part"),
        field("z-re", c.z_re, "grid center, real part (default: w)"),
        field("z-im", c.z_im, "grid center, imaginary part (default: w)"),
        field("n-bar", c.n_bar, "use the optimal-split state with this many photons"),
        field("n-max", c.n_max, "Fock cutoff per mode (default: chosen from the tail mass)"),
        field("steps", c.steps, "successive measurements"),
        field("samples", c.samples, "independent single-shot outcomes"),
        field("seed", c.seed, "64-bit seed"),
        field("grid-halfwidth", c.grid_halfwidth, "grid half-width in outcome standard deviations"),
        field("grid-nodes", c.grid_nodes, "grid nodes per axis"),
        field("phi-nodes", c.phi_nodes, "phase nodes on (-pi, pi]"),
        field("method", c.method, "frame | direct | analytic"),
        field("n-bars", c.n_bars, "comma separated photon numbers"),
        field("mus", c.mus, "comma separated characteristic-function arguments"),
        field("omega-a", c.omega_a, "signal frequency"),
        field("omega-b", c.omega_b, "image frequency"),
        field("omega-c", c.omega_c, "probe frequency"),
        field("tol", c.tol, "frequency equality tolerance"),
        field("radial-nodes", c.radial_nodes, "Gauss-Legendre nodes in r"),
        field("angular-nodes", c.angular_nodes, "trapezoid nodes in phi"),
        field("threshold", c.threshold, "pass bound for the check (default per subcommand)"),
        field("out", c.out, "output path, - for stdout"),
        field("format", c.format, "csv | json"),
    };
    std::map<std::string, Field> m;
    for (auto& f : v) m.emplace(f.name, std::move(f));
    return m;
}

const std::map<std::string, std::vector<std::string>>& subcommand_fields() {
    static const std::map<std::string, std::vector<std::string>> m = {
        {"prob-density", {"lambda", "eta", "state-lambda", "w-re", "w-im", "z-re", "z-im", "n-max",
                          "grid-halfwidth", "grid-nodes", "method", "out", "format"}},
        {"phase-density", {"lambda", "eta", "state-lambda", "w-re", "w-im", "n-bar", "n-max", "phi-nodes",
                           "method", "out", "format"}},
        {"measure", {"lambda", "eta", "state-lambda", "w-re", "w-im", "n-max", "samples", "seed",
                     "grid-halfwidth", "grid-nodes", "out", "format"}},
        {"repeat", {"lambda", "eta", "state-lambda", "w-re", "w-im", "n-max", "steps", "seed",
                    "grid-halfwidth", "grid-nodes", "out", "format"}},
        {"sensitivity", {"eta", "n-bars", "out", "format"}},
        {"verify-interaction", {"lambda", "n-max", "mus", "threshold", "out", "format"}},
        {"plan-frequencies", {"omega-a", "omega-b", "omega-c", "tol", "out"}},
        {"completeness-check", {"lambda", "eta", "n-max", "radial-nodes", "angular-nodes", "grid-halfwidth",
                                "threshold", "out", "format"}},
    };
    return m;
}

const std::map<std::string, std::string>& subcommand_help() {
    static const std::map<std::string, std::string> m = {
        {"prob-density", "outcome density P(z) on a grid"},
        {"phase-density", "marginal phase density"},
        {"measure", "single-shot outcomes and the reduced-state purity"},
        {"repeat", "sequence of successive measurements"},
        {"sensitivity", "phase sensitivity along the optimal family"},
        {"verify-interaction", "four-mode coupling checks"},
        {"plan-frequencies", "frequency arrangement and resonant terms"},
        {"completeness-check", "quadrature of F(z) against the identity"},
    };
    return m;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_cell(const json& v) {
    if (v.is_number_float()) return fmt(v.get<double>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "nan";
    return v.get<std::string>();
}

// json serializes NaN as null; keep the table cell explicit
json num(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

struct Result {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
    json diagnostics = json::object();
    std::vector<std::string> warnings;
    json document;  // set for JSON-only outputs (plans)
    int exit_code = kExitOk;
};

void validate(const RunConfig& c, const std::string& sub) {
    if (c.format != "csv" && c.format != "json") throw ValidationError("--format must be csv or json");
    if (c.n_max == 0 || c.n_max < -1) throw ValidationError("--n-max must be >= 1");
    if (c.steps < 1) throw ValidationError("--steps must be >= 1");
    if (c.samples < 1) throw ValidationError("--samples must be >= 1");
    if (c.grid_nodes == 0 || c.grid_nodes < -1) throw ValidationError("--grid-nodes must be >= 1");
    if (!(c.grid_halfwidth > 0)) throw ValidationError("--grid-halfwidth must be > 0");
    if (c.phi_nodes < 2) throw ValidationError("--phi-nodes must be >= 2");
    if (!std::isfinite(c.w_re) || !std::isfinite(c.w_im)) throw ValidationError("--w-re/--w-im must be finite");
    if (!std::isnan(c.state_lambda) && !(c.state_lambda >= 0 && c.state_lambda < 1))
        throw ValidationError("--state-lambda must lie in [0, 1)");
    if (!std::isnan(c.n_bar) && !(c.n_bar > 0)) throw ValidationError("--n-bar must be > 0");
    if (sub == "sensitivity") {
        if (c.n_bars.empty()) throw ValidationError("--n-bars is empty");
        for (double nb : c.n_bars)
            if (!(nb > 2)) throw ValidationError("--n-bars entries must be > 2");
    }
    if (sub == "prob-density" && c.method != "frame" && c.method != "direct")
        throw ValidationError("prob-density --method must be frame or direct");
    if (sub == "phase-density" && c.method != "frame" && c.method != "analytic")
        throw ValidationError("phase-density --method must be frame or analytic");
    // detector ranges
    DetectorParams(c.lambda, c.eta);
}

double state_lambda(const RunConfig& c) { return std::isnan(c.state_lambda) ? c.lambda : c.state_lambda; }

// Displaced twin beams at the requested cutoff, or the smallest even one whose
// boundary mass is below 1e-10.
KetState build_state(const RunConfig& c, Result& res) {
    DisplacedTwinBeamParams p(TwinBeamParams(state_lambda(c)), cplx(c.w_re, c.w_im));
    auto finish = [&](KetState psi) {
        res.diagnostics["n_max"] = psi.truncation().n_max();
        res.diagnostics["tail_mass"] = psi.tail_mass();
        res.diagnostics["discarded_mass"] = psi.discarded_mass();
        for (const auto& w : psi.warnings) res.warnings.push_back(w);
        return psi;
    };
    if (c.n_max > 0) {
        KetState psi = displaced_twin_beams(p, Truncation(c.n_max, 2));
        if (std::max(psi.tail_mass(), psi.discarded_mass()) > 1e-6)
            res.warnings.push_back("boundary mass above 1e-6 at the requested n_max");
        return finish(std::move(psi));
    }
    for (int n = 4;; n += 2) {
        KetState psi = displaced_twin_beams(p, Truncation(n, 2));
        if (std::max(psi.tail_mass(), psi.discarded_mass()) < 1e-10) return finish(std::move(psi));
        if (n >= 400) throw CapacityError("automatic n_max exceeded 400; pass --n-max");
    }
}

RVector axis(double center, double half, int nodes) {
    if (nodes == 1) return RVector::Constant(1, center);
    return RVector::LinSpaced(nodes, center - half, center + half);
}

Result cmd_prob_density(const RunConfig& c) {
    Result res;
    res.columns = {"z_re", "z_im", "density"};
    DetectorParams det(c.lambda, c.eta);
    KetState psi = build_state(c, res);
    cplx center(std::isnan(c.z_re) ? c.w_re : c.z_re, std::isnan(c.z_im) ? c.w_im : c.z_im);
    const int nodes = c.grid_nodes < 0 ? 101 : c.grid_nodes;

    CurrentFrame f(frame_cutoff_for(psi.truncation().n_max(), det.delta_sq()));
    FrameState s = FrameState::from_fock(f, psi);
    auto [vx, vy] = frame_outcome_variance(f, s, det.delta_sq());
    RVector xs = axis(center.real(), c.grid_halfwidth * std::sqrt(vx), nodes);
    RVector ys = axis(center.imag(), c.grid_halfwidth * std::sqrt(vy), nodes);

    RMatrix values(xs.size(), ys.size());
    if (c.method == "frame") {
        values = frame_density_grid(f, s, xs, ys, det.delta_sq());
        res.diagnostics["frame_cutoff"] = f.cutoff();
        res.diagnostics["frame_dropped_mass"] = s.dropped_mass();
    } else {
        for (Eigen::Index a = 0; a < xs.size(); ++a)
            for (Eigen::Index b = 0; b < ys.size(); ++b) values(a, b) = outcome_density(psi, cplx(xs(a), ys(b)), det);
    }
    for (Eigen::Index a = 0; a < xs.size(); ++a)
        for (Eigen::Index b = 0; b < ys.size(); ++b) res.rows.push_back({xs(a), ys(b), values(a, b)});
    if (nodes > 1) {
        double cell = (xs(1) - xs(0)) * (ys(1) - ys(0));
        res.diagnostics["grid_mass"] = values.sum() * cell;
    }
    res.diagnostics["method"] = c.method;
    res.diagnostics["delta_sq"] = det.delta_sq();
    return res;
}

double wrap(double x) { return std::remainder(x, 2 * M_PI); }

Result cmd_phase_density(const RunConfig& c) {
    Result res;
    res.columns = {"phi", "density"};
    std::vector<double> phis(c.phi_nodes);
    for (int k = 0; k < c.phi_nodes; ++k) phis[k] = -M_PI + 2 * M_PI * (k + 1) / c.phi_nodes;
    std::vector<double> dens(phis.size());

    if (!std::isnan(c.n_bar)) {
        // the optimal-split state read out with spread Delta^2_lambda(eta)
        DisplacedTwinBeamParams p = optimal_split(c.n_bar);
        DetectorParams spread(p.lambda(), c.eta);
        for (std::size_t k = 0; k < phis.size(); ++k)
            dens[k] = gaussian_phase_marginal(p.w(), spread.delta_sq(), phis[k]);
        res.diagnostics["scheme"] = "optimal split, Gaussian marginal";
        res.diagnostics["state_lambda"] = p.lambda();
        res.diagnostics["w_re"] = p.w().real();
        res.diagnostics["w_im"] = p.w().imag();
        res.diagnostics["sigma_sq"] = spread.delta_sq();
        res.diagnostics["approx_sigma"] = std::sqrt(spread.delta_sq() / (2 * std::norm(p.w())));
    } else {
        DetectorParams det(c.lambda, c.eta);
        if (c.method == "analytic") {
            double s2 = (1 - state_lambda(c)) / (1 + state_lambda(c)) + det.delta_sq();
            for (std::size_t k = 0; k < phis.size(); ++k)
                dens[k] = gaussian_phase_marginal(cplx(c.w_re, c.w_im), s2, phis[k]);
            res.diagnostics["sigma_sq"] = s2;
        } else {
            KetState psi = build_state(c, res);
            CurrentFrame f(frame_cutoff_for(psi.truncation().n_max(), det.delta_sq()));
            FrameState s = FrameState::from_fock(f, psi);
            for (std::size_t k = 0; k < phis.size(); ++k)
                dens[k] = frame_phase_density(f, s, phis[k], det.delta_sq());
            res.diagnostics["frame_cutoff"] = f.cutoff();
            res.diagnostics["frame_dropped_mass"] = s.dropped_mass();
        }
        res.diagnostics["scheme"] = c.method;
    }

    double mass = 0, sx = 0, sy = 0;
    for (std::size_t k = 0; k < phis.size(); ++k) {
        res.rows.push_back({phis[k], dens[k]});
        mass += dens[k];
        sx += dens[k] * std::cos(phis[k]);
        sy += dens[k] * std::sin(phis[k]);
    }
    double center = std::atan2(sy, sx);
    double second = 0;
    for (std::size_t k = 0; k < phis.size(); ++k) second += dens[k] * std::pow(wrap(phis[k] - center), 2);
    res.diagnostics["fit"] = {{"center", center},
                              {"sigma", std::sqrt(second / mass)},
                              {"mass", mass * 2 * M_PI / c.phi_nodes}};
    return res;
}

SamplerSpec sampler(const RunConfig& c) {
    SamplerSpec s;
    s.grid_halfwidth_sigmas = c.grid_halfwidth;
    s.nodes_per_axis = c.grid_nodes < 0 ? 201 : c.grid_nodes;
    s.seed = c.seed;
    s.validate();
    return s;
}

Result cmd_sequence(const RunConfig& c, bool repeat) {
    Result res;
    res.columns = {"step", "z_re", "z_im", "purity"};
    DetectorParams det(c.lambda, c.eta);
    SamplerSpec spec = sampler(c);
    KetState psi = build_state(c, res);
    if (repeat) {
        MeasurementRecord rec = run_sequence(psi, c.steps, det, spec);
        for (std::size_t j = 0; j < rec.outcomes.size(); ++j)
            res.rows.push_back({static_cast<std::int64_t>(j + 1), rec.outcomes[j].z.real(),
                                rec.outcomes[j].z.imag(), rec.purities[j]});
        res.diagnostics["frame_cutoff"] = rec.frame_cutoff;
        res.diagnostics["frame_dropped_mass"] = rec.frame_dropped_mass;
        for (const auto& w : rec.warnings) res.warnings.push_back(w);
        return res;
    }
    // same draws as the first step of `repeat`, continued on one stream
    bool clamped = false;
    CurrentFrame f(sequence_frame_cutoff(psi.truncation().n_max(), det, 1, &clamped));
    FrameState s = FrameState::from_fock(f, psi);
    DensityGrid g = outcome_grid(f, s, det, spec);
    CounterRng rng(spec.seed);
    for (int i = 0; i < c.samples; ++i) {
        HeterodyneOutcome o = sample_from_grid(g, rng);
        FrameReduction r = frame_reduce_eta(f, s, o.z, det);
        res.rows.push_back({std::int64_t{1}, o.z.real(), o.z.imag(), r.state.purity()});
    }
    res.diagnostics["frame_cutoff"] = f.cutoff();
    res.diagnostics["frame_dropped_mass"] = s.dropped_mass();
    res.diagnostics["captured_mass"] = g.captured_mass;
    return res;
}

Result cmd_sensitivity(const RunConfig& c) {
    Result res;
    res.columns = {"n_bar", "lambda", "w_mod_sq", "delta_phi", "product"};
    std::vector<SensitivityPoint> pts = sensitivity_sweep(c.n_bars, c.eta);
    json per = json::array();
    for (const auto& p : pts) {
        res.rows.push_back({p.n_bar, p.lambda, p.w_mod_sq, p.delta_phi, p.product});
        per.push_back({{"n_bar", p.n_bar},
                       {"n_max", p.n_max},
                       {"tail_mass", p.tail_mass},
                       {"photons_closed_form", p.n_bar_exact},
                       {"photons_numeric", p.n_bar_numeric}});
    }
    res.diagnostics["points"] = per;
    return res;
}

KetState four_mode_state(const FourModeSystem& sys, int na) {
    int occ[4] = {na, 0, 0, 0};
    return KetState::basis(sys.truncation(), occ);
}

Result cmd_verify_interaction(const RunConfig& c) {
    Result res;
    res.columns = {"check", "state", "n_max", "mu_re", "mu_im", "value", "reference"};
    const int n = c.n_max < 0 ? 5 : c.n_max;
    if (n < 2) throw ValidationError("verify-interaction needs --n-max >= 2");
    const double bound = c.threshold < 0 ? 1e-3 : c.threshold;
    const std::vector<std::pair<std::string, int>> states = {{"vacuum", 0}, {"one_photon", 1}};
    bool pass = true;

    for (int nn : {n - 1, n}) {
        FourModeSystem sys(nn);
        DenseOperator u = interaction_unitary(sys);
        for (const auto& [label, na] : states)
            for (double m : c.mus) {
                double r = std::numeric_limits<double>::quiet_NaN();
                try {
                    r = heisenberg_shift_residual(sys, u, four_mode_state(sys, na), m);
                } catch (const ValidationError& e) {
                    res.warnings.push_back(label + " at n_max=" + std::to_string(nn) + ": " + e.what());
                }
                res.rows.push_back({"heisenberg", label, nn, m, 0.0, num(r), bound});
                if (nn == n && !(r <= bound)) pass = false;
            }
        if (nn != n) continue;

        json ind = json::object();
        for (const auto& [label, na] : states) {
            int occ[2] = {na, 0};
            DensityOperator rho = DensityOperator::from_ket(KetState::basis(Truncation(nn, 2), occ));
            IndirectReport r;
            try {
                r = indirect_measurement_check(rho, c.lambda, sys, u);
            } catch (const NumericalError& e) {
                res.warnings.push_back(label + " indirect check: " + e.what());
                res.rows.push_back({"indirect_max_error", label, nn, 0.0, 0.0, nullptr, 1e-2});
                continue;
            }
            auto moments = [](const OutcomeMoments& m) {
                return json{{"mean", {m.mean.real(), m.mean.imag()}},
                            {"abs_sq", m.abs_sq},
                            {"square", {m.square.real(), m.square.imag()}}};
            };
            ind[label] = {{"probe", moments(r.probe)},
                          {"predicted", moments(r.predicted)},
                          {"first_moment_error", r.first_moment_error},
                          {"second_moment_error", r.second_moment_error},
                          {"boundary_mass", r.boundary_mass}};
            res.rows.push_back({"mean_re", label, nn, 0.0, 0.0, r.probe.mean.real(), r.predicted.mean.real()});
            res.rows.push_back({"mean_im", label, nn, 0.0, 0.0, r.probe.mean.imag(), r.predicted.mean.imag()});
            res.rows.push_back({"abs_sq", label, nn, 0.0, 0.0, r.probe.abs_sq, r.predicted.abs_sq});
            res.rows.push_back({"square_re", label, nn, 0.0, 0.0, r.probe.square.real(), r.predicted.square.real()});
            res.rows.push_back({"square_im", label, nn, 0.0, 0.0, r.probe.square.imag(), r.predicted.square.imag()});
            res.rows.push_back({"indirect_max_error", label, nn, 0.0, 0.0, r.max_error, 1e-2});
        }
        res.diagnostics["indirect"] = ind;
    }
    res.diagnostics["heisenberg_bound"] = bound;
    res.diagnostics["passed"] = pass;
    res.exit_code = pass ? kExitOk : kExitNumerical;
    return res;
}

Result cmd_plan_frequencies(const RunConfig& c) {
    Result res;
    FrequencyPlan p = plan_frequencies(c.omega_a, c.omega_b, c.omega_c, c.tol);
    std::vector<TrilinearTerm> terms = enumerate_resonant_terms(p);
    json checks = json::array();
    for (const auto& ch : p.checks) checks.push_back({{"name", ch.name}, {"passed", ch.passed}});
    json surviving = json::array();
    for (const auto& t : terms) surviving.push_back(t.label());
    json expected = json::array();
    for (const auto& t : expected_resonant_terms()) expected.push_back(t.label());
    res.document = {{"omega_a", p.omega_a},
                    {"omega_b", p.omega_b},
                    {"omega_c", p.omega_c},
                    {"omega_d", p.omega_d},
                    {"omega_xi", p.omega_xi},
                    {"omega_gamma", p.omega_gamma},
                    {"tolerance", p.tolerance},
                    {"valid", p.valid()},
                    {"failing", p.failing()},
                    {"checks", checks},
                    {"surviving_terms", surviving},
                    {"expected_terms", expected},
                    {"surviving_matches_expected", same_terms(terms, expected_resonant_terms())}};
    res.exit_code = p.valid() ? kExitOk : kExitInvalidPlan;
    return res;
}

Result cmd_completeness(const RunConfig& c) {
    Result res;
    res.columns = {"row_n_a", "row_n_b", "col_n_a", "col_n_b", "re", "im"};
    DetectorParams det(c.lambda, c.eta);
    const int n = c.n_max < 0 ? 24 : c.n_max;
    Truncation t(n, 2);
    CompletenessReport rep = pom_completeness(det, t, c.radial_nodes, c.angular_nodes, c.grid_halfwidth);
    const int half = n / 2;
    for (std::size_t a = 0; a < t.dim(); ++a) {
        if (t.occupation(a, 0) > half || t.occupation(a, 1) > half) continue;
        for (std::size_t b = 0; b < t.dim(); ++b) {
            if (t.occupation(b, 0) > half || t.occupation(b, 1) > half) continue;
            cplx v = rep.integral(a, b);
            res.rows.push_back({t.occupation(a, 0), t.occupation(a, 1), t.occupation(b, 0), t.occupation(b, 1),
                                v.real(), v.imag()});
        }
    }
    const double bound = c.threshold < 0 ? 1e-3 : c.threshold;
    res.diagnostics["n_max"] = n;
    res.diagnostics["radius"] = rep.radius;
    res.diagnostics["block_deviation"] = rep.block_deviation;
    res.diagnostics["threshold"] = bound;
    res.diagnostics["passed"] = rep.block_deviation <= bound;
    res.exit_code = rep.block_deviation <= bound ? kExitOk : kExitNumerical;
    return res;
}

std::string render_csv(const Result& r) {
    std::ostringstream os;
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << '\n';
    }
    return os.str();
}

// scan for the subcommand name and a --config path before the real parse
void prescan(const std::vector<std::string>& args, std::string& sub, std::string& config) {
    const auto& subs = subcommand_fields();
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (sub.empty() && subs.count(a)) sub = a;
        if (a == "--config" && i + 1 < args.size()) config = args[i + 1];
        if (a.rfind("--config=", 0) == 0) config = a.substr(9);
    }
}

int dispatch(const std::string& sub, RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (std::isnan(cfg.lambda))
        cfg.lambda = sub == "completeness-check" ? 0.0 : sub == "verify-interaction" ? 0.0 : 0.6;
    validate(cfg, sub);
    auto t0 = std::chrono::steady_clock::now();
    Result res;
    if (sub == "prob-density") res = cmd_prob_density(cfg);
    else if (sub == "phase-density") res = cmd_phase_density(cfg);
    else if (sub == "measure") res = cmd_sequence(cfg, false);
    else if (sub == "repeat") res = cmd_sequence(cfg, true);
    else if (sub == "sensitivity") res = cmd_sensitivity(cfg);
    else if (sub == "verify-interaction") res = cmd_verify_interaction(cfg);
    else if (sub == "plan-frequencies") res = cmd_plan_frequencies(cfg);
    else res = cmd_completeness(cfg);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto fields = all_fields(cfg);
    json config = json::object();
    for (const auto& name : subcommand_fields().at(sub)) config[name] = fields.at(name).dump();
    json manifest = {{"tool", "twinhet"},
                     {"version", TWINHET_VERSION},
                     {"subcommand", sub},
                     {"config", config},
                     {"seed", cfg.seed},
                     {"diagnostics", res.diagnostics},
                     {"warnings", res.warnings},
                     {"exit_code", res.exit_code}};

    std::string body;
    if (!res.document.is_null()) {
        json doc = res.document;
        doc["manifest"] = manifest;
        body = doc.dump(2) + "\n";
    } else if (cfg.format == "json") {
        json doc = {{"columns", res.columns}, {"rows", res.rows}, {"manifest", manifest}};
        body = doc.dump(2) + "\n";
    } else {
        body = render_csv(res);
    }
    write_atomic(cfg.out, body, out);
    if (cfg.out != "-") {
        // wall clock only in the sidecar, so result files stay byte-reproducible
        json side = manifest;
        side["output"] = cfg.out;
        side["duration_seconds"] = seconds;
        write_atomic(cfg.out + ".manifest.json", side.dump(2) + "\n", out);
    }
    for (const auto& w : res.warnings) err << "warning: " << w << '\n';
    return res.exit_code;
}

}  // namespace

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
    // a manifest carries its settings under "config"
    if (j.is_object() && j.contains("config") && j["config"].is_object()) j = j["config"];
    if (!j.is_object()) throw ValidationError("config " + path + ": expected an object");
    auto fields = all_fields(cfg);
    for (const auto& [key, value] : j.items()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        auto it = fields.find(name);
        if (it == fields.end()) throw ValidationError("config " + path + ": unknown key '" + key + "'");
        try {
            it->second.load(value);
        } catch (const json::exception& e) {
            throw ValidationError("config " + path + ": bad value for '" + key + "'");
        }
    }
}

void write_atomic(const std::string& path, const std::string& content, std::ostream& console) {
    if (path == "-") {
        console << content;
        console.flush();
        return;
    }
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
        if (!o) throw IoError("cannot open " + tmp.string() + " for writing");
        o << content;
        o.flush();
        if (!o) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path);
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        std::string sub, config;
        prescan(args, sub, config);
        if (!config.empty()) apply_config_file(config, cfg);

        CLI::App app{"Twin-beam heterodyne measurement experiments", "twinhet"};
        app.set_version_flag("--version", std::string(TWINHET_VERSION));
        app.require_subcommand(1);
        auto fields = all_fields(cfg);
        std::string config_dummy;
        for (const auto& [name, names] : subcommand_fields()) {
            CLI::App* s = app.add_subcommand(name, subcommand_help().at(name));
            s->add_option("--config", config_dummy, "JSON file of defaults (a manifest works); flags win");
            for (const auto& f : names) fields.at(f).add(*s);
        }

        std::vector<std::string> rev(args.rbegin(), args.rend());
        try {
            app.parse(rev);
        } catch (const CLI::Success& e) {
            return app.exit(e, out, err);
        } catch (const CLI::ParseError& e) {
            app.exit(e, out, err);
            return kExitValidation;
        }
        if (sub.empty()) throw ValidationError("no subcommand");
        return dispatch(sub, cfg, out, err);
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace twinhet::cli
