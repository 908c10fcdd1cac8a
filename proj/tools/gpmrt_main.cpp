#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gpmrt/bench.hpp"
#include "gpmrt/fourth_order.hpp"
#include "gpmrt/scheme.hpp"

namespace {

int usage() {
    std::cerr <<
        "usage:\n"
        "  gpmrt run <config>                 run a configured experiment\n"
        "  gpmrt derive <config>              dump the finite-difference scheme\n"
        "  gpmrt fourth --eps E [--a A --b B] solve the fourth-order conditions\n"
        "  gpmrt stability --a A --b B --eps-min E0 --eps-max E1 [--eps-steps N]\n"
        "                  [--u-max U --u-steps M] [-o FILE]\n"
        "  gpmrt tables <1..7> [...]          reproduce the published tables\n";
    return 2;
}

double arg_num(const std::vector<std::string>& args, const std::string& key, double fallback,
               bool* found = nullptr) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == key) {
            if (found) *found = true;
            return std::stod(args[i + 1]);
        }
    if (found) *found = false;
    return fallback;
}

std::string arg_str(const std::vector<std::string>& args, const std::string& key,
                    const std::string& fallback) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == key) return args[i + 1];
    return fallback;
}

int cmd_run(const std::vector<std::string>& args) {
    if (args.empty()) return usage();
    auto cfg = gpmrt::Config::parse_file(args[0]);
    return gpmrt::run_experiment(cfg, std::cout);
}

int cmd_derive(const std::vector<std::string>& args) {
    if (args.empty()) return usage();
    auto cfg = gpmrt::Config::parse_file(args[0]);
    const std::string problem = cfg.str("problem", "cde1d");
    gpmrt::ModelSpec spec;
    if (problem == "cde1d") {
        const double dx = cfg.num("dx"), dt = cfg.num("dt");
        const double eps = cfg.num("kappa", 0.08) * dt / (dx * dx);
        const double a = cfg.num("a", 1.0), b = cfg.num("b", 1.0);
        auto p = (a == 1.0 && b == 1.0) ? gpmrt::closed_form_a1b1(eps)
                                        : gpmrt::solve_fourth_order(eps, a, b);
        spec = gpmrt::make_cde_model(p, dx / dt, cfg.num("u", 1.0));
    } else if (problem == "gauss_hill") {
        const double dx = cfg.num("dx"), dt = cfg.num("dt");
        const double a = cfg.num("a", 1.0), b = cfg.num("b", 1.0);
        spec.lat = gpmrt::build_d2q9(dx / dt, a);
        spec.tm = gpmrt::orthogonal_transform_d2q9(spec.lat.c, 1);
        gpmrt::Mat2 kappa{{{cfg.num("kappa_xx", 1e-3), cfg.num("kappa_xy", 1e-3)},
                           {cfg.num("kappa_xy", 1e-3), cfg.num("kappa_yy", 2e-3)}}};
        auto s1 = gpmrt::s1_from_kappa(kappa, cfg.num("chi", 1.0), a, b, dt, spec.lat.cs2);
        auto r = gpmrt::invert2(s1);
        spec.s = gpmrt::Mat(9, 9);
        for (int i = 0; i < 9; ++i) spec.s(i, i) = 1.0;
        spec.s(1, 1) = r[0][0];
        spec.s(1, 2) = r[0][1];
        spec.s(2, 1) = r[1][0];
        spec.s(2, 2) = r[1][1];
        spec.a = a;
        spec.b = b;
        spec.n_conserved = 1;
    } else {
        std::cerr << "derive: unsupported problem '" << problem << "'\n";
        return 2;
    }
    gpmrt::DeriveOptions opts;
    opts.warn_only = true;
    auto scheme = gpmrt::derive_scheme(spec, cfg.integer("target_row", 0), opts);
    const std::string out_path = cfg.str("scheme_out", "");
    if (out_path.empty()) {
        std::cout << scheme.dump(spec);
    } else {
        std::ofstream out(out_path);
        out << scheme.dump(spec);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_fourth(const std::vector<std::string>& args) {
    bool have_eps = false;
    const double eps = arg_num(args, "--eps", 0.0, &have_eps);
    if (!have_eps) return usage();
    const double a = arg_num(args, "--a", 1.0);
    const double b = arg_num(args, "--b", 1.0);
    try {
        auto p = (a == 1.0 && b == 1.0) ? gpmrt::closed_form_a1b1(eps)
                                        : gpmrt::solve_fourth_order(eps, a, b);
        auto r = gpmrt::residuals_tr(p);
        std::cout << "eps " << p.eps << "\na " << p.a << "\nb " << p.b << "\nw0 " << p.w0
                  << "\ns1 " << p.s1 << "\ns2 " << p.s2 << "\nvartheta " << p.vartheta
                  << "\nresiduals TR3 " << r.tr3 << " TR4 " << r.tr4 << " eps " << r.eps_residual
                  << "\n";
    } catch (const gpmrt::InfeasibleError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_stability(const std::vector<std::string>& args) {
    const double a = arg_num(args, "--a", 1.0);
    const double b = arg_num(args, "--b", 1.0);
    const double e0 = arg_num(args, "--eps-min", 0.01);
    const double e1 = arg_num(args, "--eps-max", 0.28);
    const int n = static_cast<int>(arg_num(args, "--eps-steps", 28));
    const double umax = arg_num(args, "--u-max", 0.0);
    const int un = static_cast<int>(arg_num(args, "--u-steps", 1));
    const std::string out_path = arg_str(args, "-o", "");

    std::vector<double> eps_grid, u_grid;
    for (int k = 0; k < n; ++k)
        eps_grid.push_back(e0 + (n > 1 ? (e1 - e0) * k / (n - 1) : 0.0));
    for (int k = 0; k < std::max(1, un); ++k)
        u_grid.push_back(un > 1 ? umax * k / (un - 1) : umax);

    auto report = gpmrt::stability_region(a, b, eps_grid, u_grid);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    *out << "a,b,eps,u_over_c,max_rho,stable\n";
    for (auto& p : report.points) {
        *out << p.a << ',' << p.b << ',' << p.eps << ',' << p.u_over_c << ',';
        if (p.solvable)
            *out << p.max_rho << ',' << (p.stable ? 1 : 0);
        else
            *out << "unsolvable,0";
        *out << '\n';
    }
    if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_tables(const std::vector<std::string>& args) {
    if (args.empty()) return usage();
    bool all_pass = true;
    for (const auto& arg : args) {
        const int id = std::stoi(arg);
        auto res = gpmrt::run_table(id, &std::cout);
        const std::string path = "table" + arg + ".csv";
        std::ofstream f(path);
        f << res.csv;
        for (auto& line : res.lines) std::cout << line << "\n";
        std::cout << "table " << arg << (res.pass ? " PASS" : " FAIL") << ", wrote " << path
                  << "\n";
        all_pass = all_pass && res.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    const std::string cmd = argv[1];
    std::vector<std::string> args(argv + 2, argv + argc);
    try {
        if (cmd == "run") return cmd_run(args);
        if (cmd == "derive") return cmd_derive(args);
        if (cmd == "fourth") return cmd_fourth(args);
        if (cmd == "stability") return cmd_stability(args);
        if (cmd == "tables") return cmd_tables(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return usage();
}
