#include "dirac_forge/cli.hpp"

#include "dirac_forge/errors.hpp"
#include "dirac_forge/io.hpp"
#include "dirac_forge/pform.hpp"
#include "dirac_forge/random.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace dirac_forge {

namespace {

struct RunConfig {
    std::string subcommand;
    std::string input;
    std::string spec;
    std::string output = "-";
    std::string format = "json";
    std::optional<double> tol_weak, tol_rank, tol_surface;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_samples;
    bool timing = true;

    std::string emit;
    std::string emit_hamiltonian;
    std::string hamiltonian;
    std::string levels;
    std::string lattice = "3";
    std::string kernel = "m";
    std::size_t n_pairs = 0;
    std::size_t points = 0;
    std::size_t observables = 10;
    int p = 2;
    int dim = 4;
    double dt = 1e-2;
    std::size_t steps = 1000;
    double drift_tol = 1e-4;
};

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Report {
    Json j = Json::object();

    void check(const std::string& name, double residual, double threshold, bool pass)
    {
        j["checks"][name] = {{"residual", format_double(residual)}, {"threshold", format_double(threshold)}, {"pass", pass}};
    }
    void check(const std::string& name, double residual, double threshold)
    {
        check(name, residual, threshold, std::isfinite(residual) && residual < threshold);
    }
    bool pass() const
    {
        if (!j.contains("checks")) return true;
        for (const auto& [k, v] : j["checks"].items())
            if (!v["pass"].get<bool>()) return false;
        return true;
    }
};

void apply_overrides(ReducibleSystem& sys, const RunConfig& cfg)
{
    if (cfg.tol_weak) sys.tol.tol_weak = *cfg.tol_weak;
    if (cfg.tol_rank) sys.tol.tol_rank = *cfg.tol_rank;
    if (cfg.tol_surface) sys.tol.tol_surface = *cfg.tol_surface;
    if (cfg.seed) sys.seed = *cfg.seed;
    if (cfg.n_samples) sys.n_samples = *cfg.n_samples;
    sys.check_shapes();
}

ReducibleSystem load_system(const RunConfig& cfg, Report& rep)
{
    if (cfg.input.empty()) throw StructuralError("no input system given");
    std::string text = read_file(cfg.input);
    rep.j["input_digest"] = fnv1a_hex(text);
    ReducibleSystem sys = system_from_json(parse_json_text(text, cfg.input));
    apply_overrides(sys, cfg);
    return sys;
}

void describe_system(const ReducibleSystem& sys, Report& rep)
{
    rep.j["seed"] = sys.seed;
    rep.j["tolerances"] = {{"tol_weak", format_double(sys.tol.tol_weak)},
                           {"tol_rank", format_double(sys.tol.tol_rank)},
                           {"tol_surface", format_double(sys.tol.tol_surface)}};
    rep.j["n_samples"] = sys.n_samples;
    rep.j["levels"] = sys.level_sizes();
    rep.j["order"] = sys.order();
    rep.j["independent_count"] = sys.independent_count();
    rep.j["n_pairs"] = sys.space.n_pairs;
}

SurfaceSampleOptions sample_options(const ReducibleSystem& sys)
{
    SurfaceSampleOptions so;
    so.tol_surface = sys.tol.tol_surface;
    so.tol_rank = sys.tol.tol_rank;
    return so;
}

Vec first_point(const ReducibleSystem& sys)
{
    return sample_surface_point(sys.space, sys.chi, substream_seed(sys.seed, 0), sample_options(sys));
}

std::vector<std::size_t> parse_list(const std::string& s, const std::string& what)
{
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            long v = std::stol(item, &used);
            if (used != item.size() || v < 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw StructuralError(what + ": bad entry '" + item + "'");
        }
    }
    if (out.empty()) throw StructuralError(what + " is empty");
    return out;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StructuralError("cannot write '" + path + "'");
    f << text;
}

std::string dump(const Json& j)
{
    return j.dump(2) + "\n";
}

void add_validation(const ValidationReport& v, Report& rep)
{
    for (const auto& c : v.checks) rep.check("validate." + c.name, c.residual, c.threshold, c.pass);
    rep.j["ranks"]["stages"] = v.stage_ranks;
    rep.j["ranks"]["bracket_matrix"] = v.c_ranks;
}

void cmd_validate(const RunConfig& cfg, Report& rep)
{
    ReducibleSystem sys = load_system(cfg, rep);
    describe_system(sys, rep);
    add_validation(validate(sys), rep);
}

void cmd_project(const RunConfig& cfg, Report& rep)
{
    ReducibleSystem sys = load_system(cfg, rep);
    describe_system(sys, rep);
    ProjectorLadder lad;
    try {
        lad = build_ladder(sys);
    } catch (const LadderError& e) {
        for (const auto& [k, v] : e.residuals()) rep.check("ladder." + k, v, sys.tol.tol_weak);
        rep.j["error"] = e.what();
        return;
    }
    std::vector<Vec> pts;
    for (int i = 0; i < sys.n_samples; ++i)
        pts.push_back(sample_surface_point(sys.space, sys.chi, substream_seed(sys.seed, static_cast<std::uint64_t>(i)),
                                           sample_options(sys)));
    ResidualReport rr = verify_ladder(sys, lad, pts);
    for (const auto& [k, e] : rr.entries) rep.check("ladder." + k, e.residual, e.threshold, e.pass);
    rep.j["ladder"] = ladder_to_json(lad);
}

void cmd_bracket(const RunConfig& cfg, Report& rep)
{
    ReducibleSystem sys = load_system(cfg, rep);
    describe_system(sys, rep);
    ProjectorLadder lad = build_ladder(sys);
    Vec z = first_point(sys);
    DiracStructure st = build_structure(sys, lad, z);
    Mat fm = fundamental_dirac(sys, st);
    rep.j["point"] = vector_to_json(z);
    rep.j["brackets"]["fundamental_m"] = matrix_to_json(fm);
    rep.check("c_m_d0", st.residuals["c_m_d0"], sys.tol.tol_weak);
    rep.check("annihilation", max_abs(fm * st.jac.transpose()), sys.tol.tol_weak);
    try {
        LevelForms forms = build_level_forms(sys, lad);
        DiracStructure sm = build_structure(sys, lad, z, &forms);
        Mat fmu = fundamental_dirac(sys, sm, Kernel::Mu);
        rep.j["mu"] = {{"available", true}};
        rep.j["brackets"]["fundamental_mu"] = matrix_to_json(fmu);
        rep.check("mu_vs_m", max_abs(fmu - fm), sys.tol.tol_weak);
        rep.check("mu_mu_inv", sm.residuals["mu_mu_inv"], sys.tol.tol_weak);
    } catch (const ParityError& e) {
        rep.j["mu"] = {{"available", false}, {"reason", e.what()}};
    }
}

IrreducibleSystem make_irreducible(const ReducibleSystem& sys, const OmegaChoice& choice)
{
    ProjectorLadder lad = build_ladder(sys);
    LevelForms forms = build_level_forms(sys, lad, choice);
    return build_irreducible(sys, lad, forms);
}

void cmd_irreducible(const RunConfig& cfg, Report& rep, std::ostream& out)
{
    ReducibleSystem sys = load_system(cfg, rep);
    describe_system(sys, rep);
    IrreducibleSystem irr = make_irreducible(sys, {});
    Vec x = irr.ext.extend(first_point(sys));
    CDelta cd = build_c_delta(irr, x);
    rep.check("closed_vs_numeric", cd.residuals["closed_vs_numeric"], 1e-7);
    rep.check("c_inv_closed", cd.residuals["c_inv_closed"], sys.tol.tol_weak);
    rep.check("blockwise_vs_direct", cd.residuals["blockwise_vs_direct"], sys.tol.tol_weak);
    rep.check("recovery", recovery_residual(irr), sys.tol.tol_weak);
    ExtendedDof ed = extended_dof_report(irr, x);
    rep.check("extended_dof", std::abs(static_cast<double>(ed.induced_rank) - static_cast<double>(ed.expected)), 0.5);
    rep.j["irreducible_count"] = irr.count();
    rep.j["extended_dim"] = irr.ext.dim();
    Json emitted = system_to_json(to_canonical_system(irr));
    if (cfg.emit.empty()) rep.j["system"] = emitted;
    else write_text(cfg.emit, dump(emitted), out);
}

PFormSpec pform_spec_from(const RunConfig& cfg)
{
    PFormSpec spec;
    spec.p = cfg.p;
    spec.dim = cfg.dim;
    auto ext = parse_list(cfg.lattice, "lattice");
    std::size_t d = cfg.dim >= 1 ? static_cast<std::size_t>(cfg.dim - 1) : 0;
    if (ext.size() == 1) ext.assign(d, ext[0]);
    for (auto e : ext) spec.extents.push_back(static_cast<int>(e));
    return spec;
}

PFormSpec pform_spec_from_json(const Json& j)
{
    PFormSpec spec;
    try {
        spec.p = j.at("p").get<int>();
        spec.dim = j.at("dim").get<int>();
        if (j.contains("extents")) {
            spec.extents = j.at("extents").get<std::vector<int>>();
        } else {
            int n = j.at("lattice").get<int>();
            spec.extents.assign(static_cast<std::size_t>(std::max(spec.dim - 1, 0)), n);
        }
    } catch (const Json::exception& e) {
        throw StructuralError(std::string("p-form spec: ") + e.what());
    }
    return spec;
}

void pform_reference_checks(const PFormSystem& ps, const IrreducibleSystem* irr, Report& rep)
{
    const ReducibleSystem& sys = ps.sys;
    Mat ref = reference_brackets(ps.spec);
    Vec z = first_point(sys);
    ProjectorLadder lad = irr ? irr->ladder : build_ladder(sys);
    DiracStructure st = build_structure(sys, lad, z);
    rep.check("pform.reducible_vs_reference", max_abs(fundamental_dirac(sys, st) - ref), 1e-7);
    if (irr) {
        IrreducibleStructure ist = build_irreducible_structure(*irr, irr->ext.extend(z));
        auto b = static_cast<Eigen::Index>(sys.space.dim());
        rep.check("pform.irreducible_vs_reference",
                  max_abs(irreducible_fundamental(*irr, ist).topLeftCorner(b, b) - ref), 1e-7);
    }
    long fourier = fourier_dof_count(ps.spec);
    long expect = static_cast<long>(sys.space.dim()) - sys.independent_count();
    rep.check("pform.fourier_dof", std::abs(static_cast<double>(fourier - expect)), 0.5);
    DofReport dr = dof_report(sys, z);
    rep.check("pform.induced_rank", std::abs(static_cast<double>(static_cast<long>(dr.induced_rank) - expect)), 0.5);
    rep.j["pform"] = {{"p", ps.spec.p}, {"dim", ps.spec.dim}, {"extents", ps.spec.extents}, {"sites", ps.sites},
                      {"components", ps.components}, {"fourier_dof", fourier}};
}

void cmd_certify(const RunConfig& cfg, Report& rep)
{
    ReducibleSystem sys;
    OmegaChoice choice;
    std::optional<PFormSystem> ps;
    if (!cfg.spec.empty()) {
        std::string text = read_file(cfg.spec);
        rep.j["input_digest"] = fnv1a_hex(text);
        ps = build_pform_system(pform_spec_from_json(parse_json_text(text, cfg.spec)));
        apply_overrides(ps->sys, cfg);
        sys = ps->sys;
        choice = ps->omegas;
    } else {
        sys = load_system(cfg, rep);
    }
    describe_system(sys, rep);
    IrreducibleSystem irr = make_irreducible(sys, choice);
    std::size_t pts = cfg.points ? cfg.points : static_cast<std::size_t>(sys.n_samples);
    Certificate cert = certify_equivalence(irr, pts, cfg.observables, sys.seed);
    rep.j["certificate"] = {{"max_deviation", format_double(cert.max_deviation)},
                            {"fundamental_deviation", format_double(cert.fundamental_deviation)},
                            {"observable_deviation", format_double(cert.observable_deviation)},
                            {"intermediate_deviation", format_double(cert.intermediate_deviation)},
                            {"closed_form_deviation", format_double(cert.closed_form_deviation)},
                            {"recovery_deviation", format_double(cert.recovery_deviation)},
                            {"points", cert.points},
                            {"observables", cert.observables},
                            {"seed", cert.seed},
                            {"pass", cert.pass}};
    rep.check("certificate.max_deviation", cert.max_deviation, sys.tol.tol_weak);
    rep.check("certificate.intermediate_deviation", cert.intermediate_deviation, sys.tol.tol_weak);
    rep.j["brackets"]["fundamental_reducible"] = matrix_to_json(cert.fundamental_reducible);
    rep.j["brackets"]["fundamental_irreducible"] = matrix_to_json(cert.fundamental_irreducible);
    if (ps) pform_reference_checks(*ps, &irr, rep);
}

void cmd_dof(const RunConfig& cfg, Report& rep)
{
    ReducibleSystem sys = load_system(cfg, rep);
    describe_system(sys, rep);
    Vec z = first_point(sys);
    DofReport dr = dof_report(sys, z);
    rep.j["dof"] = {{"dim", dr.dim},
                    {"independent_count", dr.independent_count},
                    {"expected_surface_rank", dr.expected_surface_rank},
                    {"jacobian_rank", dr.jacobian_rank},
                    {"induced_rank", dr.induced_rank}};
    rep.check("induced_rank",
              std::abs(static_cast<double>(static_cast<long>(dr.induced_rank) - dr.expected_surface_rank)), 0.5);
    ProjectorLadder lad = build_ladder(sys);
    Mat x = tangent_complement_generators(sys, z);
    auto rank_x = numerical_rank(x, sys.tol.tol_rank);
    auto rank_p = numerical_rank(x * lad.d0().transpose(), sys.tol.tol_rank);
    rep.j["dof"]["generator_rank"] = rank_x;
    rep.j["dof"]["projected_generator_rank"] = rank_p;
    rep.check("projected_generators",
              std::abs(static_cast<double>(static_cast<long>(rank_p) - sys.independent_count())), 0.5);
}

void cmd_pform(const RunConfig& cfg, Report& rep, std::ostream& out)
{
    PFormSpec spec = pform_spec_from(cfg);
    PFormSystem ps = build_pform_system(spec);
    apply_overrides(ps.sys, cfg);
    std::ostringstream spec_text;
    spec_text << "p=" << spec.p << ";dim=" << spec.dim << ";lattice=" << cfg.lattice;
    rep.j["input_digest"] = fnv1a_hex(spec_text.str());
    describe_system(ps.sys, rep);
    add_validation(validate(ps.sys), rep);
    pform_reference_checks(ps, nullptr, rep);
    if (!cfg.emit.empty()) write_text(cfg.emit, dump(system_to_json(ps.sys)), out);
    if (!cfg.emit_hamiltonian.empty()) write_text(cfg.emit_hamiltonian, dump(poly_to_json(pform_hamiltonian(spec))), out);
}

void cmd_random(const RunConfig& cfg, Report& rep, std::ostream& out)
{
    ChainProfile prof;
    prof.levels = parse_list(cfg.levels, "levels");
    prof.seed = cfg.seed.value_or(0);
    long m = profile_ranks(prof.levels).front();
    prof.n_pairs = cfg.n_pairs ? cfg.n_pairs : static_cast<std::size_t>(std::max(0L, m / 2 + 1));
    rep.j["input_digest"] = fnv1a_hex(cfg.levels + ";" + std::to_string(prof.n_pairs));
    ReducibleSystem sys = generate_random_chain(prof);
    apply_overrides(sys, cfg);
    describe_system(sys, rep);
    add_validation(validate(sys), rep);
    Json emitted = system_to_json(sys);
    if (cfg.emit.empty()) rep.j["system"] = emitted;
    else write_text(cfg.emit, dump(emitted), out);
}

void cmd_evolve(const RunConfig& cfg, Report& rep)
{
    ReducibleSystem sys = load_system(cfg, rep);
    describe_system(sys, rep);
    if (cfg.hamiltonian.empty()) throw StructuralError("evolve needs --hamiltonian");
    PolyFunction h = poly_from_json(parse_json_text(read_file(cfg.hamiltonian), cfg.hamiltonian), sys.space.dim());
    ProjectorLadder lad = build_ladder(sys);
    Kernel k = cfg.kernel == "mu" ? Kernel::Mu : Kernel::M;
    std::optional<LevelForms> forms;
    if (k == Kernel::Mu) forms = build_level_forms(sys, lad);
    Vec z0 = first_point(sys);
    Trajectory tr = evolve(sys, lad, h, z0, cfg.dt, cfg.steps, cfg.drift_tol, k, forms ? &*forms : nullptr);
    rep.j["trajectory"] = {{"dt", format_double(cfg.dt)},
                           {"steps", cfg.steps},
                           {"initial", vector_to_json(tr.points.front())},
                           {"final", vector_to_json(tr.points.back())},
                           {"max_drift", format_double(tr.max_drift)},
                           {"flagged", tr.flagged}};
    double h0 = h.evaluate(tr.points.front()), h1 = h.evaluate(tr.points.back());
    rep.j["trajectory"]["energy_change"] = format_double(std::abs(h1 - h0));
    rep.check("drift", tr.max_drift, cfg.drift_tol, !tr.flagged);
}

std::string table(const Report& rep)
{
    std::ostringstream s;
    s << "subcommand " << rep.j.value("subcommand", "") << "\n";
    if (rep.j.contains("checks"))
        for (const auto& [k, v] : rep.j["checks"].items())
            s << std::left << std::setw(44) << k << " " << std::setw(24) << v["residual"].get<std::string>() << " "
              << std::setw(12) << v["threshold"].get<std::string>() << " " << (v["pass"].get<bool>() ? "PASS" : "FAIL")
              << "\n";
    if (rep.j.contains("error")) s << "error: " << rep.j["error"].get<std::string>() << "\n";
    s << (rep.j["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
    return s.str();
}

void add_common(CLI::App* sub, RunConfig& cfg)
{
    sub->add_option("--json", cfg.output, "report path, - for stdout");
    sub->add_option("--format", cfg.format, "json or table")->check(CLI::IsMember({"json", "table"}));
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--tol-weak", cfg.tol_weak);
    sub->add_option("--tol-rank", cfg.tol_rank);
    sub->add_option("--tol-surface", cfg.tol_surface);
    sub->add_option("--n-samples", cfg.n_samples);
    sub->add_flag("--timing,!--no-timing", cfg.timing, "include wall time in the report");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    CLI::App app{"dirac-forge: reducible second-class constraints, Dirac brackets and their irreducible form"};
    app.require_subcommand(1, 1);

    auto* v = app.add_subcommand("validate", "check a reducible system");
    v->add_option("input", cfg.input)->required();
    add_common(v, cfg);

    auto* pr = app.add_subcommand("project", "build and verify the projector ladder");
    pr->add_option("input", cfg.input)->required();
    add_common(pr, cfg);

    auto* br = app.add_subcommand("bracket", "fundamental Dirac brackets at a surface point");
    br->add_option("input", cfg.input)->required();
    add_common(br, cfg);

    auto* ir = app.add_subcommand("irreducible", "build the irreducible system and emit it");
    ir->add_option("input", cfg.input)->required();
    ir->add_option("--emit", cfg.emit, "write the irreducible system here");
    add_common(ir, cfg);

    auto* ce = app.add_subcommand("certify", "compare reducible and irreducible brackets");
    ce->add_option("input", cfg.input);
    ce->add_option("--spec", cfg.spec, "p-form lattice spec JSON instead of a system");
    ce->add_option("--points", cfg.points);
    ce->add_option("--observables", cfg.observables);
    add_common(ce, cfg);

    auto* dof = app.add_subcommand("dof", "degree-of-freedom count at a surface point");
    dof->add_option("input", cfg.input)->required();
    add_common(dof, cfg);

    auto* pf = app.add_subcommand("pform", "lattice p-form system");
    pf->add_option("--p", cfg.p)->required();
    pf->add_option("--dim", cfg.dim)->required();
    pf->add_option("--lattice", cfg.lattice, "extent, or comma list per axis");
    pf->add_option("--emit", cfg.emit);
    pf->add_option("--emit-hamiltonian", cfg.emit_hamiltonian);
    add_common(pf, cfg);

    auto* ra = app.add_subcommand("random", "random exact chain for a level profile");
    ra->add_option("--levels", cfg.levels, "M_0,M_1,...")->required();
    ra->add_option("--n-pairs", cfg.n_pairs);
    ra->add_option("--emit", cfg.emit);
    add_common(ra, cfg);

    auto* ev = app.add_subcommand("evolve", "RK4 flow under the Dirac bracket");
    ev->add_option("input", cfg.input)->required();
    ev->add_option("--hamiltonian", cfg.hamiltonian)->required();
    ev->add_option("--dt", cfg.dt);
    ev->add_option("--steps", cfg.steps);
    ev->add_option("--kernel", cfg.kernel)->check(CLI::IsMember({"m", "mu"}));
    ev->add_option("--drift-tol", cfg.drift_tol);
    add_common(ev, cfg);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();

    Report rep;
    rep.j["schema"] = kReportSchema;
    rep.j["tool_version"] = kToolVersion;
    rep.j["subcommand"] = cfg.subcommand;
    auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        const auto& s = cfg.subcommand;
        if (s == "validate") cmd_validate(cfg, rep);
        else if (s == "project") cmd_project(cfg, rep);
        else if (s == "bracket") cmd_bracket(cfg, rep);
        else if (s == "irreducible") cmd_irreducible(cfg, rep, out);
        else if (s == "certify") cmd_certify(cfg, rep);
        else if (s == "dof") cmd_dof(cfg, rep);
        else if (s == "pform") cmd_pform(cfg, rep, out);
        else if (s == "random") cmd_random(cfg, rep, out);
        else if (s == "evolve") cmd_evolve(cfg, rep);
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        // the pipeline stopped on a failed check
        rep.j["error"] = e.what();
        rep.check("pipeline", 1.0, 0.0, false);
        code = 1;
    }
    bool pass = rep.pass() && !rep.j.contains("error");
    rep.j["pass"] = pass;
    if (code == 0 && !pass) code = 1;
    if (cfg.timing)
        rep.j["wall_time_s"] =
            format_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    try {
        write_text(cfg.output, cfg.format == "table" ? table(rep) : dump(rep.j), out);
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    if (!pass && rep.j.contains("error")) err << "check failed: " << rep.j["error"].get<std::string>() << "\n";
    return code;
}

int run(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace dirac_forge
