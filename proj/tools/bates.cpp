#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bates/errors.hpp"
#include "bates/mc.hpp"
#include "bates/mesh.hpp"
#include "bates/model.hpp"
#include "bates/reference.hpp"
#include "bates/stepper.hpp"

namespace {

using namespace bates;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// flat INI: [section] headers, key=value lines, '#'/';' comments
std::map<std::string, std::string> parse_ini(std::istream& in,
                                             const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        if (section.empty() || key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside a [section] or empty key");
        kv[section + "." + key] = trim(t.substr(eq + 1));
    }
    return kv;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key " + key + ": not a boolean: '" + v + "'");
}

FootMethod to_method(const std::string& v) {
    if (v == "exact") return FootMethod::exact;
    if (v == "implicit_euler") return FootMethod::implicit_euler;
    if (v == "rk4") return FootMethod::rk4;
    throw ConfigError("unknown foot method '" + v +
                      "' (expected exact|implicit_euler|rk4)");
}

/// Everything a command needs, resolved from defaults < config file < flags.
struct RunConfig {
    BatesParams model{};
    bool model_set = false;  // via preset or a full explicit set
    std::vector<char> model_field_set = std::vector<char>(7, 0);
    MarketSpec market{100.0, 100.0, 1.0, 0.0, 0.0};
    bool rate_set = false, y0_set = false;
    GridConfig grid;
    SolverConfig solver;
    McConfig mc;
    FftGrid fft;
};

/// Flag-side mirror: optionals record only what the user passed.
struct Overrides {
    std::optional<std::string> preset;
    std::optional<double> xi, eta, theta, rho, lambda, kbar, delta;
    std::optional<double> s0, strike, maturity, rate, y0;
    std::optional<double> x_min, x_max, y_max, jump_eps, x_grade, y_grade;
    std::optional<int> nx, ny, n_steps, jump_quad_points, tri_quad_order;
    std::optional<std::string> method;
    std::optional<double> linear_tol;
    std::optional<int> linear_maxit;
    std::optional<long> paths;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<bool> antithetic;
    std::optional<int> fft_n;
    std::optional<double> damping, spacing;
};

void apply_preset(RunConfig& rc, const std::string& name) {
    const auto p = preset(name);
    if (!p) {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ",") + n;
        throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
    }
    rc.model = *p;
    rc.model_set = true;
}

void apply_config_file(RunConfig& rc, const std::map<std::string, std::string>& kv) {
    // preset first so explicit fields override it regardless of file order
    if (auto it = kv.find("model.preset"); it != kv.end()) apply_preset(rc, it->second);

    auto model_field = [&rc](int idx, double& slot, double v) {
        slot = v;
        rc.model_field_set[static_cast<std::size_t>(idx)] = 1;
    };
    for (const auto& [key, val] : kv) {
        if (key == "model.preset") continue;
        if (key == "model.xi") model_field(0, rc.model.xi, to_double(key, val));
        else if (key == "model.eta") model_field(1, rc.model.eta, to_double(key, val));
        else if (key == "model.theta") model_field(2, rc.model.theta, to_double(key, val));
        else if (key == "model.rho") model_field(3, rc.model.rho, to_double(key, val));
        else if (key == "model.lambda") model_field(4, rc.model.lambda_, to_double(key, val));
        else if (key == "model.kbar") model_field(5, rc.model.kbar, to_double(key, val));
        else if (key == "model.delta") model_field(6, rc.model.delta, to_double(key, val));
        else if (key == "market.s0") rc.market.s0 = to_double(key, val);
        else if (key == "market.strike") rc.market.strike = to_double(key, val);
        else if (key == "market.maturity") rc.market.maturity = to_double(key, val);
        else if (key == "market.rate") { rc.market.rate = to_double(key, val); rc.rate_set = true; }
        else if (key == "market.y0") { rc.market.y0 = to_double(key, val); rc.y0_set = true; }
        else if (key == "grid.x_min") rc.grid.x_min = to_double(key, val);
        else if (key == "grid.x_max") rc.grid.x_max = to_double(key, val);
        else if (key == "grid.y_max") rc.grid.y_max = to_double(key, val);
        else if (key == "grid.nx") rc.grid.nx = static_cast<int>(to_long(key, val));
        else if (key == "grid.ny") rc.grid.ny = static_cast<int>(to_long(key, val));
        else if (key == "grid.n_steps") rc.grid.n_steps = static_cast<int>(to_long(key, val));
        else if (key == "grid.jump_eps") rc.grid.jump_eps = to_double(key, val);
        else if (key == "grid.jump_quad_points") rc.grid.jump_quad_points = static_cast<int>(to_long(key, val));
        else if (key == "grid.tri_quad_order") rc.grid.tri_quad_order = static_cast<int>(to_long(key, val));
        else if (key == "grid.x_grade") rc.grid.x_grade = to_double(key, val);
        else if (key == "grid.y_grade") rc.grid.y_grade = to_double(key, val);
        else if (key == "solver.method") rc.solver.method = to_method(val);
        else if (key == "solver.linear_tol") rc.solver.linear_tol = to_double(key, val);
        else if (key == "solver.linear_maxit") rc.solver.linear_maxit = static_cast<int>(to_long(key, val));
        else if (key == "mc.paths") rc.mc.n_paths = to_long(key, val);
        else if (key == "mc.steps") rc.mc.n_steps = static_cast<int>(to_long(key, val));
        else if (key == "mc.seed") rc.mc.seed = static_cast<std::uint64_t>(to_long(key, val));
        else if (key == "mc.antithetic") rc.mc.antithetic = to_bool(key, val);
        else if (key == "fft.n") rc.fft.n_points = static_cast<int>(to_long(key, val));
        else if (key == "fft.damping") rc.fft.damping = to_double(key, val);
        else if (key == "fft.spacing") rc.fft.u_spacing = to_double(key, val);
        else throw ConfigError("unknown config key: " + key);
    }
}

void apply_overrides(RunConfig& rc, const Overrides& ov) {
    if (ov.preset) apply_preset(rc, *ov.preset);
    auto model_field = [&rc](int idx, double& slot, const std::optional<double>& v) {
        if (v) {
            slot = *v;
            rc.model_field_set[static_cast<std::size_t>(idx)] = 1;
        }
    };
    model_field(0, rc.model.xi, ov.xi);
    model_field(1, rc.model.eta, ov.eta);
    model_field(2, rc.model.theta, ov.theta);
    model_field(3, rc.model.rho, ov.rho);
    model_field(4, rc.model.lambda_, ov.lambda);
    model_field(5, rc.model.kbar, ov.kbar);
    model_field(6, rc.model.delta, ov.delta);
    if (ov.s0) rc.market.s0 = *ov.s0;
    if (ov.strike) rc.market.strike = *ov.strike;
    if (ov.maturity) rc.market.maturity = *ov.maturity;
    if (ov.rate) { rc.market.rate = *ov.rate; rc.rate_set = true; }
    if (ov.y0) { rc.market.y0 = *ov.y0; rc.y0_set = true; }
    if (ov.x_min) rc.grid.x_min = *ov.x_min;
    if (ov.x_max) rc.grid.x_max = *ov.x_max;
    if (ov.y_max) rc.grid.y_max = *ov.y_max;
    if (ov.nx) rc.grid.nx = *ov.nx;
    if (ov.ny) rc.grid.ny = *ov.ny;
    if (ov.n_steps) rc.grid.n_steps = *ov.n_steps;
    if (ov.jump_eps) rc.grid.jump_eps = *ov.jump_eps;
    if (ov.jump_quad_points) rc.grid.jump_quad_points = *ov.jump_quad_points;
    if (ov.tri_quad_order) rc.grid.tri_quad_order = *ov.tri_quad_order;
    if (ov.x_grade) rc.grid.x_grade = *ov.x_grade;
    if (ov.y_grade) rc.grid.y_grade = *ov.y_grade;
    if (ov.method) rc.solver.method = to_method(*ov.method);
    if (ov.linear_tol) rc.solver.linear_tol = *ov.linear_tol;
    if (ov.linear_maxit) rc.solver.linear_maxit = *ov.linear_maxit;
    if (ov.paths) rc.mc.n_paths = *ov.paths;
    if (ov.steps) rc.mc.n_steps = *ov.steps;
    if (ov.seed) rc.mc.seed = *ov.seed;
    if (ov.antithetic) rc.mc.antithetic = *ov.antithetic;
    if (ov.fft_n) rc.fft.n_points = *ov.fft_n;
    if (ov.damping) rc.fft.damping = *ov.damping;
    if (ov.spacing) rc.fft.u_spacing = *ov.spacing;
}

void require_model(const RunConfig& rc) {
    if (rc.model_set) return;
    static const char* names[] = {"xi", "eta", "theta", "rho", "lambda", "kbar", "delta"};
    for (int i = 0; i < 7; ++i)
        if (!rc.model_field_set[static_cast<std::size_t>(i)])
            throw ConfigError(std::string("missing required key: model.") + names[i] +
                              " (set all model fields or use a preset)");
}

void require_market(const RunConfig& rc) {
    // r and y0 have no sensible defaults; they must be given explicitly
    if (!rc.rate_set) throw ConfigError("missing required key: market.rate");
    if (!rc.y0_set) throw ConfigError("missing required key: market.y0");
}

void check_inputs(const RunConfig& rc) {
    const ValidationReport rep = validate(rc.model, rc.market);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    if (!rep.ok()) {
        std::string msg = "invalid inputs:";
        for (const auto& e : rep.hard_errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
}

/// Sink that is stdout by default or a file with --output.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw IoError("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    void finish() {
        stream().flush();
        if (file_.is_open() && !file_) throw IoError("write failed on output file");
    }

private:
    std::ofstream file_;
};

std::vector<double> parse_list(const std::string& flag, const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_double(flag, item));
    }
    if (out.empty()) throw ConfigError(flag + ": empty list");
    return out;
}

double fem_price_from_surface(const PriceSurface& surf, const MarketSpec& m,
                              double spot, double strike) {
    // scale invariance C(a*s, a*k) = a*C(s, k): one solve covers all
    // (spot, strike) pairs via a read at x = ln(spot * K0 / strike)
    const double scale = strike / m.strike;
    return scale * surf.price_at_recovered(std::log(spot * m.strike / strike), m.y0);
}

int cmd_validate(const RunConfig& rc) {
    require_model(rc);
    require_market(rc);
    const ValidationReport rep = validate(rc.model, rc.market);
    for (const auto& e : rep.hard_errors) std::cout << "error: " << e << "\n";
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    if (!rep.ok()) return 2;
    std::cout << "ok\n";
    return 0;
}

void cmd_price(const RunConfig& rc, const std::string& method, Output& out) {
    require_model(rc);
    require_market(rc);
    check_inputs(rc);
    const MarketSpec& m = rc.market;

    double price = 0.0;
    std::string stderr_col;
    if (method == "fft") {
        price = price_single_fft(rc.model, m, m.strike, rc.fft);
    } else if (method == "fem") {
        const PriceSurface surf = run(rc.model, m, rc.grid, rc.solver);
        price = surf.price_at_recovered(std::log(m.s0), m.y0);
    } else if (method == "mc") {
        const McResult r = mc_price(rc.model, m, rc.mc);
        price = r.estimate;
        stderr_col = fmt(r.std_error);
    } else if (method == "merton") {
        price = merton_series_price(rc.model, m.s0, m.strike, m.maturity, m.rate);
    } else {
        throw ConfigError("unknown method '" + method + "' (expected fem|fft|mc|merton)");
    }

    std::ostream& os = out.stream();
    os << "method,s0,K,T,r,y0,price,stderr\n";
    os << method << "," << fmt(m.s0) << "," << fmt(m.strike) << ","
       << fmt(m.maturity) << "," << fmt(m.rate) << "," << fmt(m.y0) << ","
       << fmt(price) << "," << stderr_col << "\n";
    out.finish();
}

void cmd_surface(const RunConfig& rc, const std::string& engine,
                 const std::vector<double>& strikes,
                 const std::vector<double>& maturities, Output& out) {
    require_model(rc);
    require_market(rc);
    check_inputs(rc);
    const MarketSpec& m = rc.market;
    if (engine != "fft" && engine != "fem")
        throw ConfigError("unknown engine '" + engine + "' (expected fft|fem)");

    std::ostream& os = out.stream();
    os << "K,T,price,implied_vol\n";
    for (double t : maturities) {
        if (!(t > 0.0)) throw ConfigError("surface maturities must be positive");
        MarketSpec mt = m;
        mt.maturity = t;

        std::vector<std::pair<double, double>> ladder;
        std::optional<PriceSurface> surf;
        if (engine == "fft") {
            ladder = carr_madan_prices(rc.model, mt, rc.fft);
        } else {
            surf = run(rc.model, mt, rc.grid, rc.solver);
        }
        for (double k : strikes) {
            const double price = engine == "fft"
                                     ? interp_ladder(ladder, k)
                                     : fem_price_from_surface(*surf, mt, mt.s0, k);
            std::string vol;
            try {
                vol = fmt(implied_vol(price, mt.s0, k, t, mt.rate));
            } catch (const NumericError&) {
                // price outside the no-arbitrage band: leave the cell empty
            }
            os << fmt(k) << "," << fmt(t) << "," << fmt(price) << "," << vol << "\n";
        }
    }
    out.finish();
}

void cmd_compare(const RunConfig& rc, const std::vector<double>& s_values,
                 Output& out) {
    require_model(rc);
    require_market(rc);
    check_inputs(rc);
    const MarketSpec& m = rc.market;

    const PriceSurface surf = run(rc.model, m, rc.grid, rc.solver);
    std::ostream& os = out.stream();
    os << "S,price_fem,price_fft,rel_diff\n";
    for (double s : s_values) {
        if (!(s > 0.0)) throw ConfigError("compare spot values must be positive");
        const double fem = surf.price_at_recovered(std::log(s), m.y0);
        MarketSpec ms = m;
        ms.s0 = s;
        const double fft = price_single_fft(rc.model, ms, m.strike, rc.fft);
        const double rel = std::abs(fem - fft) / fft;
        os << fmt(s) << "," << fmt(fem) << "," << fmt(fft) << "," << fmt(rel) << "\n";
    }
    out.finish();
}

void cmd_mesh_info(const RunConfig& rc, const std::string& mesh_path,
                   const std::string& save_path, Output& out) {
    Mesh mesh = mesh_path.empty()
                    ? Mesh::rectangle_graded(rc.grid.x_min, rc.grid.x_max,
                                             rc.grid.y_max, rc.grid.nx, rc.grid.ny,
                                             std::log(rc.market.strike),
                                             rc.grid.x_grade, rc.grid.y_grade)
                    : Mesh::load_file(mesh_path);
    if (!save_path.empty()) mesh.save_file(save_path);

    std::map<BoundaryTag, int> counts;
    for (int i = 0; i < mesh.num_nodes(); ++i) counts[mesh.tag(i)]++;

    std::ostream& os = out.stream();
    os << "nodes " << mesh.num_nodes() << "\n";
    os << "triangles " << mesh.num_triangles() << "\n";
    os << "area " << fmt(mesh.total_area()) << "\n";
    os << "x_min " << fmt(mesh.x_min()) << "\n";
    os << "x_max " << fmt(mesh.x_max()) << "\n";
    os << "y_max " << fmt(mesh.y_max()) << "\n";
    for (BoundaryTag t : {BoundaryTag::interior, BoundaryTag::left, BoundaryTag::right,
                          BoundaryTag::bottom, BoundaryTag::top})
        os << tag_name(t) << " " << counts[t] << "\n";
    out.finish();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"European call pricer for the Bates stochastic-volatility model "
                 "with jumps: characteristic-Galerkin FEM, Carr-Madan FFT, "
                 "jump-series and Monte Carlo engines"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "flat INI config file");

    Overrides ov;
    app.add_option("--preset", ov.preset, "named parameter set (S1..S4)");
    app.add_option("--xi", ov.xi, "variance mean-reversion speed");
    app.add_option("--eta", ov.eta, "long-run variance");
    app.add_option("--theta", ov.theta, "vol-of-vol");
    app.add_option("--rho", ov.rho, "Brownian correlation");
    app.add_option("--lambda", ov.lambda, "jump intensity");
    app.add_option("--kbar", ov.kbar, "mean relative jump size");
    app.add_option("--delta", ov.delta, "jump-size std dev");
    app.add_option("--s0", ov.s0, "spot price");
    app.add_option("--strike", ov.strike, "strike");
    app.add_option("--maturity", ov.maturity, "maturity in years");
    app.add_option("--rate", ov.rate, "short rate (required)");
    app.add_option("--y0", ov.y0, "initial variance (required)");
    app.add_option("--x-min", ov.x_min, "domain lower log-price bound");
    app.add_option("--x-max", ov.x_max, "domain upper log-price bound");
    app.add_option("--y-max", ov.y_max, "domain variance bound");
    app.add_option("--nx", ov.nx, "cells in x");
    app.add_option("--ny", ov.ny, "cells in y");
    app.add_option("--n-steps", ov.n_steps, "time steps");
    app.add_option("--jump-eps", ov.jump_eps, "jump truncation tolerance");
    app.add_option("--jump-quad-points", ov.jump_quad_points, "jump quadrature nodes");
    app.add_option("--tri-quad-order", ov.tri_quad_order, "triangle quadrature order");
    app.add_option("--x-grade", ov.x_grade, "mesh clustering strength around ln(strike), 0 = uniform");
    app.add_option("--y-grade", ov.y_grade, "mesh clustering strength toward y=0, 0 = uniform");
    app.add_option("--foot-method", ov.method, "exact|implicit_euler|rk4");
    app.add_option("--linear-tol", ov.linear_tol, "linear solver tolerance");
    app.add_option("--linear-maxit", ov.linear_maxit, "linear solver max iterations");
    app.add_option("--paths", ov.paths, "Monte Carlo paths");
    app.add_option("--steps", ov.steps, "Monte Carlo steps per year");
    app.add_option("--seed", ov.seed, "Monte Carlo seed");
    app.add_option("--antithetic", ov.antithetic, "antithetic variates (true/false)");
    app.add_option("--fft-n", ov.fft_n, "FFT size");
    app.add_option("--damping", ov.damping, "Carr-Madan damping alpha");
    app.add_option("--spacing", ov.spacing, "FFT frequency spacing");

    CLI::App* validate_cmd = app.add_subcommand("validate", "check model and market inputs");

    CLI::App* price_cmd = app.add_subcommand("price", "price one call");
    std::string method = "fft";
    std::string price_out;
    price_cmd->add_option("--method", method, "fem|fft|mc|merton");
    price_cmd->add_option("--output", price_out, "CSV output file (default stdout)");

    CLI::App* surface_cmd = app.add_subcommand("surface", "implied-vol surface CSV");
    std::string engine = "fft";
    std::string strikes_csv = "80,85,90,95,100,105,110,115,120";
    std::string maturities_csv = "0.25,0.5,1,2,3";
    std::string surface_out;
    surface_cmd->add_option("--engine", engine, "fft|fem");
    surface_cmd->add_option("--strikes", strikes_csv, "comma-separated strikes");
    surface_cmd->add_option("--maturities", maturities_csv, "comma-separated maturities");
    surface_cmd->add_option("--output", surface_out, "CSV output file (default stdout)");

    CLI::App* compare_cmd = app.add_subcommand("compare", "FEM vs FFT price CSV");
    std::string svalues_csv = "80,85,90,95,100,105,110,115,120";
    std::string compare_out;
    compare_cmd->add_option("--s-values", svalues_csv, "comma-separated spot values");
    compare_cmd->add_option("--output", compare_out, "CSV output file (default stdout)");

    CLI::App* mesh_cmd = app.add_subcommand("mesh-info", "mesh statistics");
    std::string mesh_path, mesh_save, mesh_out;
    mesh_cmd->add_option("--mesh", mesh_path, "load a mesh file instead of the grid");
    mesh_cmd->add_option("--save-mesh", mesh_save, "write the mesh to a file");
    mesh_cmd->add_option("--output", mesh_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        RunConfig rc;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw IoError("cannot open config file: " + config_path);
            apply_config_file(rc, parse_ini(in, config_path));
        }
        apply_overrides(rc, ov);

        if (validate_cmd->parsed()) return cmd_validate(rc);
        if (price_cmd->parsed()) {
            Output out(price_out);
            cmd_price(rc, method, out);
        } else if (surface_cmd->parsed()) {
            Output out(surface_out);
            cmd_surface(rc, engine, parse_list("--strikes", strikes_csv),
                        parse_list("--maturities", maturities_csv), out);
        } else if (compare_cmd->parsed()) {
            Output out(compare_out);
            cmd_compare(rc, parse_list("--s-values", svalues_csv), out);
        } else if (mesh_cmd->parsed()) {
            Output out(mesh_out);
            cmd_mesh_info(rc, mesh_path, mesh_save, out);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
