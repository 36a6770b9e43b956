// vstate: dispersion tables, operator cross-checks and V-state branches.
//
// Exit codes: 0 success, 2 usage, 3 tolerance breach, 4 solver non-convergence.

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <vstate/continuation.hpp>
#include <vstate/functional.hpp>
#include <vstate/linop.hpp>
#include <vstate/spectrum.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vstate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTolerance = 3;
constexpr int kExitNoConvergence = 4;

struct Common {
    std::string out;
    bool timestamp = false;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json manifest(const std::string& command, json config, json achieved, const Common& common)
{
    json m;
    m["command"] = command;
    m["config"] = std::move(config);
    m["versions"] = {{"vstate", VSTATE_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    // Wall-clock time breaks byte-identical re-runs, so it is opt-in.
    if (common.timestamp) {
        std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        m["timestamp"] = buf;
    }
    m["achieved"] = std::move(achieved);
    return m;
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    os << text;
}

void write_sidecar(const std::string& path, const json& m)
{
    if (path.empty() || path == "-")
        return;
    write_text(path + ".manifest.json", m.dump(2) + "\n");
}

// --- dispersion ------------------------------------------------------------

int cmd_dispersion(int m_min, int m_max, const Common& common)
{
    if (m_min < 3 || m_max < m_min) {
        std::cerr << "dispersion: need 3 <= m-min <= m-max\n";
        return kExitUsage;
    }
    std::ostringstream csv;
    csv << "m,Q_m,f_residual,transversality\n";
    double worst = 0.0;
    double prev_q = 0.0;
    bool increasing = true;
    for (int m = m_min; m <= m_max; ++m) {
        const BifurcationPoint bp = find_qm(m);
        csv << m << ',' << fmt(bp.q) << ',' << fmt(bp.residual) << ','
            << fmt(transversality(m, bp.q)) << '\n';
        worst = std::max(worst, bp.residual);
        increasing = increasing && bp.q > prev_q;
        prev_q = bp.q;
    }
    write_text(common.out, csv.str());
    write_sidecar(common.out,
                  manifest("dispersion", {{"m_min", m_min}, {"m_max", m_max}},
                           {{"max_f_residual", worst}, {"strictly_increasing", increasing}},
                           common));
    return (worst < 1e-14 && increasing) ? kExitOk : kExitTolerance;
}

// --- linop-check -------------------------------------------------------------

int cmd_linop_check(int m, int modes, int grid, unsigned seed, const Common& common)
{
    if (m < 3 || modes < m + 1 || !is_power_of_two(grid) || grid < 4 * modes) {
        std::cerr << "linop-check: need m >= 3, modes > m, grid a power of two >= 4*modes\n";
        return kExitUsage;
    }
    const BifurcationPoint bp = find_qm(m);
    const EllipseParam q(bp.q);
    const PerturbationCoeffs zero(modes);
    JacobianOptions jo;
    jo.grid = grid;

    const LinearOperatorMatrix closed = closed_form_lq(q, modes);
    const LinearOperatorMatrix assembled = assemble_jacobian(q, zero, jo);
    const double closed_vs_assembled = (closed.entries - assembled.entries).cwiseAbs().maxCoeff();

    const PerturbationCoeffs v = kernel_vector(m, bp.q, modes);
    const double kernel_residual = assembled.apply(v).cwiseAbs().maxCoeff();

    const double trans_closed =
        dq_of_lq_closed(q, modes).apply(v)(m - 1) / kClosedFormSign;
    const double trans_integral =
        dq_jacobian_integral(q, zero, jo).apply(v)(m - 1) / kClosedFormSign;
    const double trans_exact = transversality(m, bp.q);

    // Central differences of F along a random direction at a random small f.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> raw_f(static_cast<size_t>(modes)), raw_h(static_cast<size_t>(modes));
    for (int k = 0; k < modes; ++k) {
        const double decay = std::pow(0.7, k);
        raw_f[static_cast<size_t>(k)] = unif(rng) * decay;
        raw_h[static_cast<size_t>(k)] = unif(rng) * decay;
    }
    const PerturbationCoeffs f =
        scaled_to_fprime_bound(PerturbationCoeffs(raw_f), 0.01 * 0.5 * (1.0 - bp.q));
    const PerturbationCoeffs h = scaled_to_fprime_bound(PerturbationCoeffs(raw_h), 1.0);
    const double t = 1e-5;
    PerturbationCoeffs fp(modes), fm(modes);
    for (int p = 2; p <= modes + 1; ++p) {
        fp.set(p, f[p] + t * h[p]);
        fm.set(p, f[p] - t * h[p]);
    }
    FunctionalOptions fo;
    fo.grid = grid;
    const ResidualSpectrum gp = eval_F(q, fp, fo);
    const ResidualSpectrum gm = eval_F(q, fm, fo);
    const Eigen::VectorXd jh = assemble_jacobian(q, f, jo).apply(h);
    double num = 0.0;
    for (int k = 0; k < modes; ++k) {
        const double fd = (gp.g[static_cast<size_t>(k)] - gm.g[static_cast<size_t>(k)]) / (2.0 * t);
        num = std::max(num, std::abs(fd - jh(k)));
    }
    const double fd_rel = num / jh.cwiseAbs().maxCoeff();

    json tol = {{"closed_vs_assembled_supnorm", 1e-8},
                {"fd_relative_error", 1e-6},
                {"kernel_residual", 1e-8},
                {"transversality_closed", 1e-10},
                {"transversality_integral", 1e-7}};
    json report;
    report["m"] = m;
    report["Q_m"] = bp.q;
    report["modes"] = modes;
    report["grid"] = grid;
    report["closed_vs_assembled_supnorm"] = closed_vs_assembled;
    report["fd_relative_error"] = fd_rel;
    report["kernel_residual"] = kernel_residual;
    report["transversality_closed"] = trans_closed;
    report["transversality_integral"] = trans_integral;
    report["transversality_exact"] = trans_exact;
    report["tolerances"] = tol;

    const bool ok = closed_vs_assembled < 1e-8 && fd_rel < 1e-6 && kernel_residual < 1e-8 &&
                    std::abs(trans_closed - trans_exact) < 1e-10 &&
                    std::abs(trans_integral - trans_exact) < 1e-7;
    report["pass"] = ok;
    report["manifest"] =
        manifest("linop-check", {{"m", m}, {"modes", modes}, {"grid", grid}, {"seed", seed}},
                 {{"pass", ok}}, common);
    write_text(common.out, report.dump(2) + "\n");
    return ok ? kExitOk : kExitTolerance;
}

// --- branch ------------------------------------------------------------------

json point_json(const BranchPoint& p)
{
    json j;
    j["eps"] = p.eps;
    j["Q"] = p.q;
    j["omega"] = p.omega();
    j["coeffs"] = std::vector<double>(p.coeffs.values().begin(), p.coeffs.values().end());
    j["residual"] = p.residual_inf;
    j["verify"] = p.verify ? json(*p.verify) : json(nullptr);
    j["newton_iters"] = p.newton_iters;
    j["modes"] = p.modes;
    j["grid"] = p.grid;
    j["tail_norm"] = p.tail_norm;
    j["guard_ratio"] = p.guard_ratio;
    return j;
}

std::string boundary_csv(const BranchPoint& p, int samples)
{
    const BoundaryMap b = p.map();
    std::ostringstream os;
    os << "theta,x,y\n";
    for (int j = 0; j < samples; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / samples;
        const cplx z = b.value(std::polar(1.0, theta));
        os << fmt(theta) << ',' << fmt(z.real()) << ',' << fmt(z.imag()) << '\n';
    }
    return os.str();
}

int cmd_branch(BranchConfig cfg, int boundary_samples, const Common& common)
{
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "branch: " << e.what() << '\n';
        return kExitUsage;
    }
    const BranchResult r = trace_branch(cfg);

    const std::string out = common.out.empty() ? "branch_m" + std::to_string(cfg.m) + ".json"
                                               : common.out;
    const fs::path out_path(out);
    const fs::path stem = out_path.parent_path() / out_path.stem();

    json doc;
    doc["m"] = r.m;
    doc["Q_m"] = r.q_m;
    doc["bifurcation"] = {{"eps", 0.0},
                          {"Q", r.q_m},
                          {"omega", 0.25 * (1.0 - r.q_m * r.q_m)},
                          {"coeffs", std::vector<double>(static_cast<size_t>(cfg.modes), 0.0)}};
    json pts = json::array();
    json files = json::array();
    double worst_verify = 0.0;
    double worst_residual = 0.0;
    for (size_t k = 0; k < r.points.size(); ++k) {
        const BranchPoint& p = r.points[k];
        pts.push_back(point_json(p));
        worst_verify = std::max(worst_verify, p.verify.value_or(INFINITY));
        worst_residual = std::max(worst_residual, p.residual_inf);
        if (boundary_samples > 0) {
            const std::string csv = stem.string() + "_boundary_" + std::to_string(k) + ".csv";
            write_text(csv, boundary_csv(p, boundary_samples));
            files.push_back(fs::path(csv).filename().string());
        }
    }
    doc["points"] = pts;
    doc["boundary_files"] = files;
    doc["truncated"] = r.truncated;
    if (r.truncated)
        doc["diagnostics"] = r.diagnostics;
    doc["continuity_constant"] = r.continuity_constant;
    doc["resolution_changes"] = r.resolution_changes;

    json config = {{"m", cfg.m},
                   {"modes", cfg.modes},
                   {"grid", cfg.grid},
                   {"eps_max", cfg.eps_max},
                   {"eps_step", cfg.eps_step},
                   {"direction", cfg.direction},
                   {"tol", cfg.newton_tol},
                   {"max_iters", cfg.newton_max_iters},
                   {"refine", cfg.verify_refine},
                   {"certify_tol", cfg.certify_tol},
                   {"tail_tol", cfg.tail_tol},
                   {"max_modes", cfg.max_modes},
                   {"strict_guard", cfg.strict_guard},
                   {"margin", cfg.margin},
                   {"boundary_samples", boundary_samples}};
    doc["manifest"] = manifest("branch", config,
                               {{"points", r.points.size()},
                                {"max_residual", worst_residual},
                                {"max_verify", worst_verify}},
                               common);
    write_text(out, doc.dump(2) + "\n");

    if (r.truncated) {
        std::cerr << "branch truncated: " << r.diagnostics << '\n';
        return kExitNoConvergence;
    }
    return worst_verify < cfg.certify_tol ? kExitOk : kExitTolerance;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rotating vortex patches bifurcating from Kirchhoff ellipses"};
    app.require_subcommand(1);
    Common common;

    auto* disp = app.add_subcommand("dispersion", "Bifurcation points Q_m as CSV");
    int m_min = 3, m_max = 20;
    disp->add_option("--m-min", m_min, "smallest fold index")->capture_default_str();
    disp->add_option("--m-max", m_max, "largest fold index")->capture_default_str();

    auto* lin = app.add_subcommand("linop-check", "Cross-validate the linearized operator");
    int lin_m = 3, lin_modes = 64, lin_grid = 512;
    unsigned seed = 20240611;
    lin->add_option("--m", lin_m, "fold index")->capture_default_str();
    lin->add_option("--modes", lin_modes, "mode count N")->capture_default_str();
    lin->add_option("--grid", lin_grid, "grid size M")->capture_default_str();
    lin->add_option("--seed", seed, "seed for the finite-difference probe")->capture_default_str();

    auto* br = app.add_subcommand("branch", "Trace the V-state branch from Q_m");
    BranchConfig cfg;
    int boundary_samples = 256;
    double tol_override = 0.0;
    br->add_option("--m", cfg.m, "fold index")->capture_default_str();
    br->add_option("--modes", cfg.modes, "initial mode count N")->capture_default_str();
    br->add_option("--grid", cfg.grid, "initial grid size M")->capture_default_str();
    br->add_option("--eps-max", cfg.eps_max, "final amplitude")->capture_default_str();
    br->add_option("--eps-step", cfg.eps_step, "amplitude step")->capture_default_str();
    br->add_option("--tol", tol_override, "Newton tolerance (default 1e-10)");
    br->add_option("--refine", cfg.verify_refine, "verification refinement")->capture_default_str();
    br->add_option("--direction", cfg.direction, "+1 or -1: sign of eps")->capture_default_str();
    br->add_option("--max-modes", cfg.max_modes, "ceiling for automatic N increase")
        ->capture_default_str();
    br->add_option("--certify-tol", cfg.certify_tol, "per-point verification threshold")
        ->capture_default_str();
    br->add_flag("--strict-guard", cfg.strict_guard, "enforce the coercivity guard in Newton");
    br->add_flag("--allow-large-m", cfg.allow_large_m, "permit m > 64");
    br->add_option("--boundary-samples", boundary_samples, "points per boundary CSV (0: none)")
        ->capture_default_str();

    for (auto* sub : {disp, lin, br}) {
        sub->add_option("--out", common.out, "output path ('-' or empty: stdout)");
        sub->add_flag("--timestamp", common.timestamp, "record wall-clock time in the manifest");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*disp)
            return cmd_dispersion(m_min, m_max, common);
        if (*lin)
            return cmd_linop_check(lin_m, lin_modes, lin_grid, seed, common);
        if (tol_override > 0.0)
            cfg.newton_tol = tol_override;
        return cmd_branch(cfg, boundary_samples, common);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NewtonFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTolerance;
    }
}
