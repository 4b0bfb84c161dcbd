// cms_lab: command-line laboratory for contractive Markov systems.
//
// Subcommands
//   validate   check the system hypotheses (normalization, region mapping,
//              contraction rate, probability positivity, Dini regularity)
//   invariant  estimate the invariant measure by pushing the anchor cloud
//              through the adjoint transfer operator
//   code       evaluate the coding map on sampled symbol windows with
//              certified error bounds
//   holder     sample agreeing-tail window pairs and test the sequence-metric
//              regularity bound
//   cylinder   integrate cylinder masses of the induced measure on words
//   entropy    integrate sum_e p_e log p_e against the invariant estimate
//   render     bin a point cloud into a histogram CSV (1-d) or a P5 raster
//              image (2-d)
//
// Exit codes: 0 success, 2 hypothesis violation, 3 non-convergence,
// 4 configuration error.  Every run is a pure function of its flags: outputs
// are byte-identical for identical invocations, including across --threads.
#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cms/cms.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHypothesis = 2;
constexpr int kExitNoConverge = 3;
constexpr int kExitConfig = 4;

struct SystemChoice {
    std::string builtin_name;
    std::string config_path;
    std::vector<double> probs;
};

cms::MarkovSystem load_system(const SystemChoice& choice) {
    const bool has_builtin = !choice.builtin_name.empty();
    const bool has_config = !choice.config_path.empty();
    if (has_builtin == has_config)
        throw cms::ConfigError("pass exactly one of --system or --config");
    if (has_config) {
        if (!choice.probs.empty())
            throw cms::ConfigError("--probs applies only to built-in systems");
        return cms::parse_system_file(choice.config_path);
    }
    if (choice.probs.empty()) return cms::builtin(choice.builtin_name);
    return cms::builtin(choice.builtin_name, choice.probs);
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cms::ConfigError(path + ": cannot open for writing");
    return out;
}

// The default binning window: the union of the region boxes when every
// region is bounded, else the system's sampling box.
cms::BoundingBox default_window(const cms::MarkovSystem& s) {
    for (const cms::VertexRegion& r : s.regions)
        if (!r.bounded()) return s.sampling_box;
    cms::BoundingBox out;
    const std::size_t d = static_cast<std::size_t>(s.dimension());
    out.lo.assign(d, 0.0);
    out.hi.assign(d, 0.0);
    bool first = true;
    for (const cms::VertexRegion& r : s.regions) {
        const cms::AxisBox& b = std::get<cms::AxisBox>(r.shape);
        for (std::size_t k = 0; k < d; ++k) {
            out.lo[k] = first ? b.lo[k] : std::min(out.lo[k], b.lo[k]);
            out.hi[k] = first ? b.hi[k] : std::max(out.hi[k], b.hi[k]);
        }
        first = false;
    }
    return out;
}

cms::BoundingBox window_from_flag(const cms::MarkovSystem& s,
                                  const std::vector<double>& bbox) {
    if (bbox.empty()) return default_window(s);
    const std::size_t d = static_cast<std::size_t>(s.dimension());
    if (bbox.size() != 2 * d)
        throw cms::ConfigError("--bbox: expected " + std::to_string(2 * d) +
                               " comma-separated values (lo,hi per axis)");
    cms::BoundingBox out;
    for (std::size_t k = 0; k < d; ++k) {
        out.lo.push_back(bbox[2 * k]);
        out.hi.push_back(bbox[2 * k + 1]);
    }
    out.check(s.dimension());
    return out;
}

std::string yesno(bool b) { return b ? "yes" : "no"; }

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    long long pairs = 20000;
    int grid = 64;
    std::string out;
};

int run_validate(const ValidateArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    cms::ValidationOptions opt;
    opt.seed = a.seed;
    opt.pair_samples = a.pairs;
    opt.grid_density = a.grid;
    const cms::ValidationReport rep = cms::validate_system(s, opt);
    const std::string failed = cms::first_failed_hypothesis(s, rep);

    std::cout << "system: " << s.name << "\n"
              << "normalization_max_error: "
              << cms::format_double(rep.normalization_max_error) << "\n"
              << "region_violations: " << rep.region_violations << "\n"
              << "contraction_rate_estimate: "
              << cms::format_double(rep.contraction_rate_estimate) << "\n"
              << "declared_rate: " << cms::format_double(s.declared_rate) << "\n"
              << "delta_estimate: " << cms::format_double(rep.delta_estimate)
              << "\n";
    for (std::size_t e = 0; e < rep.dini.size(); ++e)
        std::cout << "dini_edge_" << e << ": "
                  << cms::verdict_name(rep.dini[e].verdict) << "\n";
    std::cout << "failed_hypothesis: " << (failed.empty() ? "none" : failed)
              << "\n";

    if (!a.out.empty()) {
        std::ofstream f = open_output(a.out);
        cms::CsvWriter csv(f);
        csv.row("field", "value");
        csv.row("system", s.name);
        csv.row("normalization_max_error", rep.normalization_max_error);
        csv.row("region_violations", rep.region_violations);
        csv.row("contraction_rate_estimate", rep.contraction_rate_estimate);
        csv.row("declared_rate", s.declared_rate);
        csv.row("delta_estimate", rep.delta_estimate);
        for (std::size_t e = 0; e < rep.dini.size(); ++e)
            csv.row("dini_edge_" + std::to_string(e),
                    cms::verdict_name(rep.dini[e].verdict));
        csv.row("failed_hypothesis", failed.empty() ? "none" : failed);
    }
    return failed.empty() ? kExitOk : kExitHypothesis;
}

// ---------------------------------------------------------------------------
// invariant

struct InvariantArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    std::size_t particles = 10000;
    int iters = 200;
    double tol = 1e-3;
    int threads = 1;
    int monitor_stride = 1;
    int average_window = 0;
    std::string out;
    std::string history_out;
};

cms::InvariantResult run_invariant_inner(const cms::MarkovSystem& s,
                                         const InvariantArgs& a) {
    cms::InvariantOptions opt;
    opt.particles = a.particles;
    opt.max_iters = a.iters;
    opt.tol = a.tol;
    opt.seed = a.seed;
    opt.threads = a.threads;
    opt.monitor_stride = a.monitor_stride;
    opt.average_window = a.average_window;
    return cms::estimate_invariant(s, opt);
}

void write_measure_csv(std::ostream& out, const cms::EmpiricalMeasure& m) {
    cms::CsvWriter csv(out);
    for (int k = 0; k < m.dimension; ++k) csv.field("x_" + std::to_string(k));
    csv.field("weight");
    csv.endrow();
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (double c : m.point(i)) csv.field(c);
        csv.field(m.weights[i]);
        csv.endrow();
    }
}

int run_invariant(const InvariantArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    const cms::InvariantResult res = run_invariant_inner(s, a);

    std::cout << "system: " << s.name << "\n"
              << "converged: " << yesno(res.converged) << "\n"
              << "iterations: " << res.iterations << "\n"
              << "particles: " << res.measure.size() << "\n";
    if (!res.history.empty())
        std::cout << "final_distance: " << cms::format_double(res.history.back())
                  << "\n";
    const cms::Point mean = cms::weighted_mean(res.measure);
    const cms::Point var = cms::weighted_variance(res.measure);
    for (int k = 0; k < s.dimension(); ++k) {
        std::cout << "mean_" << k << ": "
                  << cms::format_double(mean[static_cast<std::size_t>(k)]) << "\n"
                  << "variance_" << k << ": "
                  << cms::format_double(var[static_cast<std::size_t>(k)]) << "\n";
    }
    if (s.dimension() == 1)
        std::cout << "ks_uniform01: "
                  << cms::format_double(cms::ks_uniform01(res.measure)) << "\n";

    if (!a.out.empty()) {
        std::ofstream f = open_output(a.out);
        write_measure_csv(f, res.measure);
    }
    if (!a.history_out.empty()) {
        std::ofstream f = open_output(a.history_out);
        cms::CsvWriter csv(f);
        csv.row("check", "distance");
        for (std::size_t j = 0; j < res.history.size(); ++j)
            csv.row(static_cast<long>(j), res.history[j]);
    }
    return res.converged ? kExitOk : kExitNoConverge;
}

// ---------------------------------------------------------------------------
// code

struct CodeArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    int steps = 40;
    int trials = 1;
    double tol = 1e-9;
    std::string out;
};

int run_code(const CodeArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    cms::CodingOptions opt;
    opt.tol = a.tol;

    std::vector<cms::CodingResult> results;
    int unconverged = 0;
    for (int t = 0; t < a.trials; ++t) {
        results.push_back(cms::coding_eval_on_sample(
            s, a.steps, cms::derive_seed(a.seed, static_cast<std::uint64_t>(t)),
            opt));
        if (!results.back().converged) ++unconverged;
    }

    std::cout << "system: " << s.name << "\n"
              << "trials: " << a.trials << "\n"
              << "depth: " << a.steps << "\n"
              << "error_bound: " << cms::format_double(results[0].error_bound)
              << "\n"
              << "unconverged: " << unconverged << "\n";

    if (!a.out.empty()) {
        std::ofstream f = open_output(a.out);
        cms::CsvWriter csv(f);
        csv.field("trial");
        for (int k = 0; k < s.dimension(); ++k) csv.field("point_" + std::to_string(k));
        csv.field("depth").field("error_bound").field("converged");
        csv.endrow();
        for (int t = 0; t < a.trials; ++t) {
            const cms::CodingResult& r = results[static_cast<std::size_t>(t)];
            csv.field(t);
            for (double c : r.point) csv.field(c);
            csv.field(r.depth).field(r.error_bound).field(yesno(r.converged));
            csv.endrow();
        }
    }
    return unconverged == 0 ? kExitOk : kExitNoConverge;
}

// ---------------------------------------------------------------------------
// holder

struct HolderArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    int trials = 200;
    int max_agree = 20;
    double tol = 1e-9;
    std::string out;
};

int run_holder(const HolderArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    const cms::HolderReport rep =
        cms::holder_estimate(s, a.trials, a.max_agree, a.seed, a.tol);

    std::cout << "system: " << s.name << "\n"
              << "alpha: " << cms::format_double(rep.alpha) << "\n"
              << "constant: " << cms::format_double(rep.constant) << "\n"
              << "window_length: " << rep.window_length << "\n"
              << "eval_tolerance: " << cms::format_double(rep.eval_tolerance)
              << "\n"
              << "pairs: " << rep.pairs.size() << "\n"
              << "violations: " << rep.violations << "\n";

    if (!a.out.empty()) {
        std::ofstream f = open_output(a.out);
        cms::CsvWriter csv(f);
        csv.row("pair", "code_distance", "image_distance", "bound");
        for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
            const cms::HolderPair& p = rep.pairs[i];
            csv.row(static_cast<long>(i), p.code_distance, p.image_distance,
                    rep.constant * std::pow(p.code_distance, rep.alpha));
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// cylinder

struct CylinderArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    int word_length = 2;
    std::size_t particles = 10000;
    int iters = 200;
    double tol = 1e-3;
    int threads = 1;
    std::string out;
};

int run_cylinder(const CylinderArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    cms::InvariantOptions iopt;
    iopt.particles = a.particles;
    iopt.max_iters = a.iters;
    iopt.tol = a.tol;
    iopt.seed = a.seed;
    iopt.threads = a.threads;
    const cms::InvariantResult inv = cms::estimate_invariant(s, iopt);

    const std::vector<cms::CodeWindow> words =
        cms::enumerate_words(s.graph, a.word_length, true);
    std::vector<cms::CylinderMass> rows;
    for (const cms::CodeWindow& w : words)
        rows.push_back(cms::cylinder_mass(s, inv.measure, w));

    double mass_total = 0.0;
    for (const cms::CylinderMass& r : rows) mass_total += r.estimate;
    std::cout << "system: " << s.name << "\n"
              << "invariant_converged: " << yesno(inv.converged) << "\n"
              << "word_length: " << a.word_length << "\n"
              << "words: " << rows.size() << "\n"
              << "mass_total: " << cms::format_double(mass_total) << "\n";

    if (!a.out.empty()) {
        std::ofstream f = open_output(a.out);
        cms::CsvWriter csv(f);
        csv.row("word", "estimate", "std_error", "flags", "ess");
        for (const cms::CylinderMass& r : rows)
            csv.row(cms::format_word(r.word.symbols), r.estimate, r.std_error,
                    r.exact ? "exact" : "mc", r.ess);
    }
    return inv.converged ? kExitOk : kExitNoConverge;
}

// ---------------------------------------------------------------------------
// entropy

struct EntropyArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    std::size_t particles = 10000;
    int iters = 200;
    double tol = 1e-3;
    int threads = 1;
    std::string out;
};

int run_entropy(const EntropyArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    cms::InvariantOptions iopt;
    iopt.particles = a.particles;
    iopt.max_iters = a.iters;
    iopt.tol = a.tol;
    iopt.seed = a.seed;
    iopt.threads = a.threads;
    const cms::InvariantResult inv = cms::estimate_invariant(s, iopt);
    const cms::EntropyEstimate ent = cms::entropy_estimate(s, inv.measure);

    std::cout << "system: " << s.name << "\n"
              << "invariant_converged: " << yesno(inv.converged) << "\n"
              << "sum_p_log_p: " << cms::format_double(ent.sum_p_log_p)
              << "  (raw integral of sum_e p_e log p_e, <= 0)\n"
              << "entropy_nats: " << cms::format_double(ent.entropy_nats)
              << "  (its negative, the usual entropy)\n"
              << "std_error: " << cms::format_double(ent.std_error) << "\n";

    if (!a.out.empty()) {
        std::ofstream f = open_output(a.out);
        cms::CsvWriter csv(f);
        csv.row("sum_p_log_p", "entropy_nats", "std_error");
        csv.row(ent.sum_p_log_p, ent.entropy_nats, ent.std_error);
    }
    return inv.converged ? kExitOk : kExitNoConverge;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
    SystemChoice sys;
    std::uint64_t seed = 1;
    std::string source = "coding";
    std::size_t points = 100000;
    int steps = 40;
    std::size_t particles = 10000;
    int iters = 200;
    double tol = 1e-3;
    int threads = 1;
    int width = 512;
    int height = 512;
    int bins = 243;
    std::vector<double> bbox;
    std::string out;
};

cms::EmpiricalMeasure render_cloud(const cms::MarkovSystem& s,
                                   const RenderArgs& a) {
    if (a.source == "coding") {
        std::vector<cms::Point> pts;
        pts.reserve(a.points);
        for (std::size_t k = 0; k < a.points; ++k)
            pts.push_back(cms::coding_eval_on_sample(
                              s, a.steps,
                              cms::derive_seed(a.seed, static_cast<std::uint64_t>(k)))
                              .point);
        return cms::EmpiricalMeasure::from_points(pts, s.dimension());
    }
    if (a.source == "invariant") {
        cms::InvariantOptions iopt;
        iopt.particles = a.particles;
        iopt.max_iters = a.iters;
        iopt.tol = a.tol;
        iopt.seed = a.seed;
        iopt.threads = a.threads;
        return cms::estimate_invariant(s, iopt).measure;
    }
    throw cms::ConfigError("--source: expected coding or invariant, got '" +
                           a.source + "'");
}

int run_render(const RenderArgs& a) {
    const cms::MarkovSystem s = load_system(a.sys);
    if (a.out.empty()) throw cms::ConfigError("render: --out is required");
    const cms::EmpiricalMeasure cloud = render_cloud(s, a);
    const cms::BoundingBox window = window_from_flag(s, a.bbox);

    if (s.dimension() == 1) {
        const cms::Histogram1D h =
            cms::histogram_1d(cloud, a.bins, window.lo[0], window.hi[0]);
        std::ofstream f = open_output(a.out);
        cms::write_histogram_csv(f, h);
        std::cout << "system: " << s.name << "\n"
                  << "points: " << cloud.size() << "\n"
                  << "bins: " << a.bins << "\n"
                  << "dropped_mass: " << cms::format_double(h.dropped) << "\n"
                  << "wrote: " << a.out << "\n";
        return kExitOk;
    }
    if (s.dimension() == 2) {
        const cms::Raster r = cms::rasterize(cloud, a.width, a.height, window);
        std::ofstream f = open_output(a.out);
        cms::write_pgm(f, r);
        std::cout << "system: " << s.name << "\n"
                  << "points: " << cloud.size() << "\n"
                  << "raster: " << a.width << "x" << a.height << "\n"
                  << "dropped_mass: " << cms::format_double(r.dropped) << "\n"
                  << "wrote: " << a.out << "\n";
        return kExitOk;
    }
    throw cms::ConfigError("render: only 1-d and 2-d systems are supported");
}

// ---------------------------------------------------------------------------

void add_system_flags(CLI::App* cmd, SystemChoice& sys) {
    cmd->add_option("--system", sys.builtin_name,
                    "built-in system: decimal, cantor, barnsley_elton, "
                    "two_vertex_planar");
    cmd->add_option("--config", sys.config_path, "system-definition file");
    cmd->add_option("--probs", sys.probs,
                    "override probabilities of decimal/cantor (comma-separated)")
        ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"laboratory for contractive Markov systems"};
    app.require_subcommand(1);

    ValidateArgs va;
    CLI::App* validate = app.add_subcommand("validate", "check the hypotheses");
    add_system_flags(validate, va.sys);
    validate->add_option("--seed", va.seed, "RNG seed");
    validate->add_option("--pairs", va.pairs, "pair samples for the rate estimate");
    validate->add_option("--grid", va.grid, "per-axis grid density");
    validate->add_option("--out", va.out, "report CSV path");

    InvariantArgs ia;
    CLI::App* invariant =
        app.add_subcommand("invariant", "estimate the invariant measure");
    add_system_flags(invariant, ia.sys);
    invariant->add_option("--seed", ia.seed, "RNG seed");
    invariant->add_option("--particles", ia.particles, "particle budget");
    invariant->add_option("--iters", ia.iters, "iteration cap");
    invariant->add_option("--tol", ia.tol, "convergence tolerance");
    invariant->add_option("--threads", ia.threads, "worker threads");
    invariant->add_option("--monitor-stride", ia.monitor_stride,
                          "iterations between convergence checks");
    invariant->add_option("--average-window", ia.average_window,
                          "pool the final N iterates instead of the last");
    invariant->add_option("--out", ia.out, "measure CSV path");
    invariant->add_option("--history-out", ia.history_out,
                          "convergence history CSV path");

    CodeArgs ca;
    CLI::App* code = app.add_subcommand("code", "evaluate the coding map");
    add_system_flags(code, ca.sys);
    code->add_option("--seed", ca.seed, "RNG seed");
    code->add_option("--steps", ca.steps, "window depth");
    code->add_option("--trials", ca.trials, "sampled windows");
    code->add_option("--tol", ca.tol, "certified-accuracy target");
    code->add_option("--out", ca.out, "results CSV path");

    HolderArgs ha;
    CLI::App* holder =
        app.add_subcommand("holder", "sequence-metric regularity check");
    add_system_flags(holder, ha.sys);
    holder->add_option("--seed", ha.seed, "RNG seed");
    holder->add_option("--trials", ha.trials, "window pairs");
    holder->add_option("--max-agree", ha.max_agree, "largest shared-suffix length");
    holder->add_option("--tol", ha.tol, "certified-accuracy target");
    holder->add_option("--out", ha.out, "pairs CSV path");

    CylinderArgs cy;
    CLI::App* cylinder = app.add_subcommand("cylinder", "cylinder masses");
    add_system_flags(cylinder, cy.sys);
    cylinder->add_option("--seed", cy.seed, "RNG seed");
    cylinder->add_option("--word-length", cy.word_length, "word length");
    cylinder->add_option("--particles", cy.particles, "particle budget");
    cylinder->add_option("--iters", cy.iters, "iteration cap");
    cylinder->add_option("--tol", cy.tol, "convergence tolerance");
    cylinder->add_option("--threads", cy.threads, "worker threads");
    cylinder->add_option("--out", cy.out, "masses CSV path");

    EntropyArgs ea;
    CLI::App* entropy = app.add_subcommand("entropy", "probability entropy");
    add_system_flags(entropy, ea.sys);
    entropy->add_option("--seed", ea.seed, "RNG seed");
    entropy->add_option("--particles", ea.particles, "particle budget");
    entropy->add_option("--iters", ea.iters, "iteration cap");
    entropy->add_option("--tol", ea.tol, "convergence tolerance");
    entropy->add_option("--threads", ea.threads, "worker threads");
    entropy->add_option("--out", ea.out, "report CSV path");

    RenderArgs ra;
    CLI::App* render = app.add_subcommand("render", "histogram or raster image");
    add_system_flags(render, ra.sys);
    render->add_option("--seed", ra.seed, "RNG seed");
    render->add_option("--source", ra.source, "point source: coding or invariant");
    render->add_option("--points", ra.points, "coded points (coding source)");
    render->add_option("--steps", ra.steps, "window depth (coding source)");
    render->add_option("--particles", ra.particles,
                       "particle budget (invariant source)");
    render->add_option("--iters", ra.iters, "iteration cap (invariant source)");
    render->add_option("--tol", ra.tol, "convergence tolerance (invariant source)");
    render->add_option("--threads", ra.threads, "worker threads (invariant source)");
    render->add_option("--width", ra.width, "raster width (2-d)");
    render->add_option("--height", ra.height, "raster height (2-d)");
    render->add_option("--bins", ra.bins, "histogram bins (1-d)");
    render->add_option("--bbox", ra.bbox,
                       "binning window, comma-separated lo,hi per axis")
        ->delimiter(',');
    render->add_option("--out", ra.out, "output path (CSV or PGM)");

    int rc = kExitOk;
    validate->callback([&] { rc = run_validate(va); });
    invariant->callback([&] { rc = run_invariant(ia); });
    code->callback([&] { rc = run_code(ca); });
    holder->callback([&] { rc = run_holder(ha); });
    cylinder->callback([&] { rc = run_cylinder(cy); });
    entropy->callback([&] { rc = run_entropy(ea); });
    render->callback([&] { rc = run_render(ra); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return kExitConfig;
    } catch (const cms::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cms::CapacityError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const cms::EscapeError& e) {
        std::cerr << "hypothesis violation: " << e.what() << "\n";
        return kExitHypothesis;
    }
    return rc;
}
