// Command-line front end: bound tables, Nyquist-density sweeps, localization
// spectra, phase-space field dumps, recovery runs, and the scripted
// verification checks. Inputs are JSON configs; outputs are CSV/JSON files
// in the chosen directory, printed with 17 significant digits.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "opsieve/locop.hpp"
#include "opsieve/operators.hpp"
#include "opsieve/opstft.hpp"
#include "opsieve/phasespace.hpp"
#include "opsieve/recovery.hpp"
#include "opsieve/selfcheck.hpp"
#include "opsieve/sieve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace opsieve;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    double grid_L = 0.0;  // 0 = take from config / default
    double grid_h = 0.0;
    std::uint64_t seed = 1;
};

json load_config(const CommonOpts& opt) {
    if (opt.config_path.empty()) throw DomainError("missing --config");
    std::ifstream in(opt.config_path);
    if (!in) throw DomainError("cannot open config: " + opt.config_path);
    return json::parse(in);
}

std::optional<phasespace::PhaseGrid> grid_override(const CommonOpts& opt) {
    if (opt.grid_L > 0.0 || opt.grid_h > 0.0) {
        const double L = opt.grid_L > 0.0 ? opt.grid_L : 6.0;
        const double h = opt.grid_h > 0.0 ? opt.grid_h : 0.02;
        return phasespace::PhaseGrid(L, h);
    }
    return std::nullopt;
}

operators::PolyradialWindow parse_window(const json& j) {
    using operators::PolyradialWindow;
    if (j.contains("gaussian")) return PolyradialWindow::gaussian();
    if (j.contains("hermite")) return PolyradialWindow::hermite_projector(j["hermite"].get<int>());
    if (j.contains("uniform")) return PolyradialWindow::uniform_projection(j["uniform"].get<int>());
    if (j.contains("thermal")) return PolyradialWindow::thermal(j["thermal"].get<double>());
    if (j.contains("lambda")) {
        PolyradialWindow w;
        for (const auto& l : j["lambda"]) {
            if (l.is_array())
                w.lambda.push_back(Complex{l.at(0).get<double>(), l.at(1).get<double>()});
            else
                w.lambda.push_back(Complex{l.get<double>(), 0.0});
        }
        w.normalize();
        return w;
    }
    throw DomainError("window spec needs gaussian/hermite/uniform/thermal/lambda");
}

operators::HermiteOperator parse_operator(const json& j, std::uint64_t seed) {
    using operators::HermiteOperator;
    if (j.contains("basis")) {
        const int m = j["basis"].at(0).get<int>(), n = j["basis"].at(1).get<int>();
        return HermiteOperator::basis(m, n, j.value("truncation", std::max(m, n) + 1));
    }
    if (j.contains("random")) {
        std::mt19937_64 rng(j.value("seed", seed));
        const int M = j.value("truncation", 8);
        const std::string kind = j["random"].get<std::string>();
        if (kind == "positive") return operators::random_positive(M, rng);
        if (kind == "self_adjoint") return operators::random_self_adjoint(M, rng);
        if (kind == "rank") return operators::random_rank(M, j.value("rank", 2), rng);
        if (kind == "full") return operators::random_operator(M, rng);
        throw DomainError("unknown random operator kind: " + kind);
    }
    if (j.contains("re")) {
        const auto& re = j["re"];
        const int M = int(re.size());
        HermiteOperator op;
        op.coeff.resize(M, M);
        for (int i = 0; i < M; ++i)
            for (int k = 0; k < M; ++k) {
                const double rr = re.at(i).at(k).get<double>();
                const double ii = j.contains("im") ? j["im"].at(i).at(k).get<double>() : 0.0;
                op.coeff(i, k) = Complex{rr, ii};
            }
        op.self_adjoint = j.value("self_adjoint", op.check_self_adjoint());
        op.positive = j.value("positive", false);
        return op;
    }
    throw DomainError("operator spec needs basis/random/re");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    out << text;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run_bounds(const CommonOpts& opt) {
    const json cfg = load_config(opt);
    const auto omega = phasespace::DomainMask::from_json(cfg.at("omega"), grid_override(opt));
    const auto gamma = parse_window(cfg.at("gamma"));
    const double area = phasespace::measure(omega);

    std::vector<sieve::SieveBound> rows;
    rows.push_back(sieve::faber_krahn_bound(area, cfg.value("p", 1.0)));
    const bool gaussian = gamma.rank_bound() == 0;
    std::vector<double> radii;
    if (cfg.contains("R"))
        for (const auto& r : cfg["R"]) radii.push_back(r.get<double>());
    else
        radii = {0.4, 0.8, 1.2};
    for (double R : radii) {
        const auto mn = sieve::max_nyquist_bound(omega, gamma, R);
        rows.push_back(mn.bound);
        {
            sieve::SieveBound restricted = mn.bound;
            restricted.method = sieve::Method::KernelSup;
            restricted.value = mn.restricted_op ? *mn.restricted_op : mn.restricted_hs;
            restricted.certificate = restricted.value < 0.5;
            rows.push_back(restricted);
        }
        if (gaussian) rows.push_back(sieve::rfk_bound(mn.nu, R));
    }
    if (cfg.contains("theorem1")) {
        const auto& t1 = cfg["theorem1"];
        const double alpha = t1.at("alpha").get<double>();
        const int N = t1.at("N").get<int>();
        const double R = std::sqrt(alpha * N / kPi);
        const double nu = phasespace::nyquist_density(omega, R).value;
        rows.push_back(sieve::theorem1_bound(nu, N, alpha));
        if (gamma.rank_bound() == N)  // exact-B sharpening for the supplied window
            rows.push_back(sieve::theorem1_direct_bound(nu, gamma, alpha));
    }
    const double a = cfg.value("theorem2_a", 0.0);
    rows.push_back(sieve::theorem2_bound(omega, a, sieve::Theorem2Form::KernelSup));
    rows.push_back(sieve::theorem2_bound(omega, a, sieve::Theorem2Form::Closed));

    std::string csv = "method,value,certificate,params\n";
    json out_json = json::array();
    for (const auto& b : rows) {
        csv += std::string(sieve::method_name(b.method)) + "," + g17(b.value) + "," +
               (b.certificate ? "1" : "0") + ",\"" + b.inputs_digest + "\"\n";
        out_json.push_back(b.to_json());
    }
    write_text(fs::path(opt.out_dir) / "bounds.csv", csv);
    write_text(fs::path(opt.out_dir) / "bounds.json", out_json.dump(2) + "\n");
    std::printf("%s", csv.c_str());
    return 0;
}

int run_nyquist(const CommonOpts& opt) {
    const json cfg = load_config(opt);
    const auto omega = phasespace::DomainMask::from_json(cfg.at("omega"), grid_override(opt));
    std::vector<double> radii;
    if (cfg.contains("radii"))
        for (const auto& r : cfg["radii"]) radii.push_back(r.get<double>());
    else {
        const double r0 = cfg.value("r_min", 0.1), r1 = cfg.value("r_max", 2.0);
        const int count = cfg.value("count", 20);
        for (int i = 0; i < count; ++i)
            radii.push_back(r0 + (r1 - r0) * i / std::max(1, count - 1));
    }
    std::string csv = "R,nu,argmax_x,argmax_y,grid_slack\n";
    for (double R : radii) {
        const auto rep = phasespace::nyquist_density(omega, R);
        csv += g17(R) + "," + g17(rep.value) + "," + g17(rep.argmax_center.x) + "," +
               g17(rep.argmax_center.w) + "," + g17(rep.grid_slack) + "\n";
    }
    write_text(fs::path(opt.out_dir) / "nyquist.csv", csv);
    std::printf("%s", csv.c_str());
    return 0;
}

int run_locop(const CommonOpts& opt) {
    const json cfg = load_config(opt);
    const auto omega = phasespace::DomainMask::from_json(cfg.at("omega"), grid_override(opt));
    const auto gamma = parse_window(cfg.at("gamma"));
    const int M = cfg.value("truncation", 16);
    const auto loc = locop::build_localization_matrix(omega, gamma, M);
    const auto [l1, vec] = locop::top_eigenvalue(loc);
    locop::write_spectrum_csv(loc, (fs::path(opt.out_dir) / "spectrum.csv").string());

    json out;
    out["lambda1"] = l1;
    out["trace"] = loc.trace();
    out["area"] = phasespace::measure(omega);
    out["truncation"] = M;
    write_text(fs::path(opt.out_dir) / "locop.json", out.dump(2) + "\n");
    std::printf("lambda1 = %.17g (trace %.17g, |Omega| %.17g)\n", l1, loc.trace(),
                phasespace::measure(omega));
    return 0;
}

int run_fields(const CommonOpts& opt) {
    const json cfg = load_config(opt);
    phasespace::PhaseGrid grid =
        grid_override(opt).value_or(phasespace::PhaseGrid(cfg.value("L", 6.0),
                                                          cfg.value("h", 0.02)));
    const std::string kind = cfg.at("kind").get<std::string>();
    const fs::path out = opt.out_dir;
    if (kind == "husimi") {
        const auto rho = parse_operator(cfg.at("rho"), opt.seed);
        const auto f = locop::husimi_field(rho, grid);
        f.write_csv((out / "husimi.csv").string());
        std::printf("husimi.csv written; integral %.17g\n", f.integral());
    } else if (kind == "cohen") {
        const auto gamma = parse_window(cfg.at("gamma"));
        Eigen::VectorXcd fc(cfg.at("f").size());
        for (int i = 0; i < fc.size(); ++i) fc(i) = cfg["f"].at(i).get<double>();
        const auto f = locop::cohen_field(gamma, fc, grid);
        f.write_csv((out / "cohen.csv").string());
        std::printf("cohen.csv written; integral %.17g\n", f.integral());
    } else if (kind == "hsnorm") {
        const auto gamma = parse_window(cfg.at("gamma"));
        const auto rho = parse_operator(cfg.at("rho"), opt.seed);
        const auto f = opstft::opstft_field(gamma, rho, grid);
        f.write_csv((out / "hsnorm.csv").string());
        f.write_binary((out / "field.bin").string());
        std::printf("hsnorm.csv and field.bin written (%d x %d blocks)\n", f.rows, f.cols);
    } else {
        throw DomainError("kind must be husimi/cohen/hsnorm");
    }
    return 0;
}

int run_recover(const CommonOpts& opt, bool strict) {
    const json cfg = load_config(opt);
    const auto problem = recovery::RecoveryProblem::from_json(cfg, grid_override(opt));
    const auto cert = recovery::certificate(problem);

    recovery::SolverConfig scfg;
    scfg.seed = opt.seed;
    scfg.max_iterations = cfg.value("max_iterations", 20000);
    scfg.tolerance = cfg.value("tolerance", 1e-6);

    if (strict && !cert.certified) {
        json err;
        err["error"] = "certificate failed in strict mode";
        err["alpha"] = cert.alpha;
        err["threshold"] = cert.threshold;
        write_text(fs::path(opt.out_dir) / "report.json", err.dump(2) + "\n");
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 4;
    }

    auto rep = recovery::solve(problem, scfg);
    rep.certificate_value = cert.alpha;
    if (cert.certified && problem.variant != recovery::Variant::MissingData)
        rep.guaranteed_error = recovery::error_bound(cert.alpha, problem.variant,
                                                     problem.epsilon);
    else if (cert.alpha < 1.0 && problem.variant == recovery::Variant::MissingData)
        rep.guaranteed_error = recovery::error_bound(cert.alpha, problem.variant,
                                                     problem.epsilon);

    json out = rep.to_json();
    out["certificate"] = {{"alpha", cert.alpha},
                          {"threshold", cert.threshold},
                          {"certified", cert.certified},
                          {"method", cert.method},
                          {"radius", cert.radius}};
    write_text(fs::path(opt.out_dir) / "report.json", out.dump(2) + "\n");
    std::printf("recover: objective %.17g, residual %.17g, alpha %.6g (%s), %d iterations\n",
                rep.objective, rep.residual_l1, cert.alpha,
                cert.certified ? "certified" : "UNCERTIFIED", rep.iterations);
    return 0;
}

int run_reproduce(const CommonOpts& opt) {
    const auto results = selfcheck::run_all();
    json out = json::array();
    int failures = 0;
    for (const auto& r : results) {
        std::printf("[%s] criterion %2d: %-42s %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.detail.c_str());
        out.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        if (!r.pass) ++failures;
    }
    write_text(fs::path(opt.out_dir) / "reproduce.json", out.dump(2) + "\n");
    return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-space concentration bounds and operator recovery"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand name

    CommonOpts opt;
    app.add_option("--config", opt.config_path, "JSON config path");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--grid-L", opt.grid_L, "grid half-width override");
    app.add_option("--grid-h", opt.grid_h, "grid spacing override");
    app.add_option("--seed", opt.seed, "seed for randomized pieces");

    bool strict = false;
    auto* bounds = app.add_subcommand("bounds", "bound table for one (Omega, window)");
    auto* nyquist = app.add_subcommand("nyquist", "Nyquist density sweep over R");
    auto* locop_cmd = app.add_subcommand("locop", "localization spectrum");
    auto* fields = app.add_subcommand("fields", "husimi/cohen/hsnorm field dumps");
    auto* recover = app.add_subcommand("recover", "run a recovery problem");
    recover->add_flag("--strict", strict, "fail (exit 4) when the certificate does not hold");
    auto* reproduce = app.add_subcommand("reproduce", "run the scripted verification checks");

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto* sub : {bounds, nyquist, locop_cmd, fields, recover, reproduce}) {
            if (!sub->parsed()) continue;
            if (!fs::path(opt.out_dir).empty()) fs::create_directories(opt.out_dir);
            if (sub == bounds) return run_bounds(opt);
            if (sub == nyquist) return run_nyquist(opt);
            if (sub == locop_cmd) return run_locop(opt);
            if (sub == fields) return run_fields(opt);
            if (sub == recover) return run_recover(opt, strict);
            if (sub == reproduce) return run_reproduce(opt);
        }
    } catch (const DomainError& e) {
        std::fprintf(stderr, "%s\n", json{{"error", e.what()}, {"exit", 2}}.dump().c_str());
        return 2;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "%s\n", json{{"error", e.what()}, {"exit", 2}}.dump().c_str());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", json{{"error", e.what()}, {"exit", 3}}.dump().c_str());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", json{{"error", e.what()}, {"exit", 3}}.dump().c_str());
        return 3;
    }
    return 0;
}
