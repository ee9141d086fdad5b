#include "fraglab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fraglab/analysis.hpp"
#include "fraglab/error.hpp"
#include "fraglab/interpolation.hpp"
#include "fraglab/operators.hpp"
#include "fraglab/selfcheck.hpp"

namespace fraglab {

namespace {

template <typename E>
E parse_enum(const std::string& name, std::initializer_list<E> values, const char* what) {
    for (E v : values) {
        if (to_string(v) == name) return v;
    }
    throw Error(ErrorKind::InvalidArgument, std::string("unknown ") + what + " '" + name + "'");
}

Command parse_command(const std::string& s) {
    return parse_enum(s, {Command::Steady, Command::Simulate, Command::Gap, Command::Quadform,
                          Command::Selfcheck},
                      "command");
}

InitialCondition parse_initial(const std::string& s) {
    return parse_enum(s, {InitialCondition::Steady, InitialCondition::PerturbedSteady,
                          InitialCondition::Exponential, InitialCondition::CustomCsv},
                      "initial condition");
}

Equation parse_equation(const std::string& s) {
    return parse_enum(s, {Equation::Selfsim, Equation::Frag}, "equation");
}

std::vector<std::string> split_ids(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool numeric_line(const std::string& line) {
    const auto pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) return false;
    const char c = line[pos];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

StateVector read_custom_csv(const std::string& path, const Grid& grid) {
    if (path.empty()) throw Error(ErrorKind::InvalidArgument, "custom_csv needs --initial-csv");
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
    std::vector<double> xs, ys;
    std::size_t columns = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!numeric_line(line)) continue;  // header or comment
        std::stringstream row(line);
        std::vector<double> cells;
        std::string cell;
        while (std::getline(row, cell, ',')) {
            try {
                cells.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorKind::InvalidInput, "non-numeric cell '" + cell + "' in " + path);
            }
        }
        if (columns == 0) columns = cells.size();
        if (cells.size() != columns || columns == 0 || columns > 2) {
            throw Error(ErrorKind::InvalidInput, "rows of " + path + " need one or two columns");
        }
        if (columns == 1) {
            ys.push_back(cells[0]);
        } else {
            xs.push_back(cells[0]);
            ys.push_back(cells[1]);
        }
    }
    if (columns == 1) {
        if (ys.size() != grid.size()) {
            throw Error(ErrorKind::InvalidInput, path + " has " + std::to_string(ys.size()) +
                                                     " values for a grid of " +
                                                     std::to_string(grid.size()) + " nodes");
        }
        return Eigen::Map<const StateVector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    }
    const MonotoneCubic interp(xs, ys);
    return sample(grid, [&](double x) { return interp(x); });
}

template <typename T>
T json_number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' must be a number");
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' must be a nonnegative integer");
        }
    }
    return v.get<T>();
}

std::string json_string(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<double> parse_dt(const std::string& s) {
    if (s == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, "dt must be a number or 'auto', got '" + s + "'");
    }
}

nlohmann::json steady_report(const RunConfig& cfg) {
    const FragmentationModel model(cfg.gamma);
    const Grid grid = make_grid(cfg.n, cfg.resolved_x_max());
    const StateVector g = steady_state(model, grid);

    const MonotoneCubic interp(grid.nodes(), std::span<const double>(g.data(), grid.size()));
    nlohmann::json probes = nlohmann::json::array();
    for (double x : {0.5, 1.0, 2.0}) {
        if (x > grid.x_max()) continue;
        probes.push_back({{"x", x},
                          {"formula", steady_state_formula(cfg.gamma, x)},
                          {"interpolated", interp(x)}});
    }
    const std::size_t last = grid.size() - 1;
    const double scale = g[static_cast<Eigen::Index>(last / 2)] /
                         steady_state_formula(cfg.gamma, grid.node(last / 2));
    return {
        {"command", "steady"},
        {"gamma", cfg.gamma},
        {"n", cfg.n},
        {"x_max", grid.x_max()},
        {"normalization", {{"discrete_first_moment", weighted_integral(grid, g, 1.0)},
                           {"rescale_factor", scale}}},
        {"moments", {{"zeroth", weighted_integral(grid, g, 0.0)},
                     {"first", weighted_integral(grid, g, 1.0)},
                     {"gamma", weighted_integral(grid, g, cfg.gamma)}}},
        {"probes", probes},
        {"samples", {{"x", grid.nodes()}, {"G", std::vector<double>(g.data(), g.data() + g.size())}}},
    };
}

void simulate(const RunConfig& cfg, std::ostream& out) {
    const FragmentationModel model(cfg.gamma);
    const Grid grid = make_grid(cfg.n, cfg.resolved_x_max());
    const OperatorSet op = assemble_operators(model, grid);
    RunOptions opt;
    opt.t_end = cfg.t_end;
    opt.dt = cfg.dt;
    opt.scheme = cfg.scheme;
    opt.output_interval = cfg.output_interval;
    const StateVector u0 = initial_state(cfg, model, grid);
    const RunReport r = cfg.equation == Equation::Selfsim ? run_selfsim(op, u0, opt) : run_frag(op, u0, opt);
    write_run_csv(out, r);
}

nlohmann::json gap_report(const RunConfig& cfg) {
    const OperatorSet op =
        assemble_operators(FragmentationModel(cfg.gamma), make_grid(cfg.n, cfg.resolved_x_max()));
    nlohmann::json j = spectral_gap(op);
    j["command"] = "gap";
    j["gamma"] = cfg.gamma;
    j["n"] = cfg.n;
    j["x_max"] = op.grid.x_max();
    return j;
}

void quadform(const RunConfig& cfg, std::ostream& out) {
    const OperatorSet op =
        assemble_operators(FragmentationModel(cfg.gamma), make_grid(cfg.n, cfg.resolved_x_max()));
    const StateVector steady = steady_state(op.model, op.grid);
    std::mt19937_64 rng(cfg.seed);
    out << "# gamma=" << cfg.gamma << ",N=" << cfg.n << ",x_max=" << op.grid.x_max()
        << ",seed=" << cfg.seed << ",count=" << cfg.count << '\n';
    out << "index,direct_L,direct_F,identity_F,ratio,transport_term,norm_sq\n";
    for (std::size_t k = 0; k < cfg.count; ++k) {
        const QuadraticForms q = quadratic_forms(op, random_mean_zero(op.grid, steady, rng));
        out << k << ',' << q.direct_L << ',' << q.direct_F << ',' << q.identity_F << ','
            << q.direct_L / q.norm_sq << ',' << q.transport_term << ',' << q.norm_sq << '\n';
    }
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
    out.precision(17);
    switch (cfg.command) {
        case Command::Steady: out << steady_report(cfg).dump(2) << '\n'; break;
        case Command::Simulate: simulate(cfg, out); break;
        case Command::Gap: out << gap_report(cfg).dump(2) << '\n'; break;
        case Command::Quadform: quadform(cfg, out); break;
        case Command::Selfcheck: {
            const auto results = run_selfcheck(cfg.only, out);
            const bool all = std::all_of(results.begin(), results.end(),
                                         [](const CheckResult& r) { return r.pass; });
            return all ? kExitOk : kExitSelfcheckFailed;
        }
    }
    return kExitOk;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NumericalFailure:
        case ErrorKind::WindowDegenerate:
        case ErrorKind::PreconditionViolation:
            return kExitNumerical;
        default:
            return kExitInvalidConfig;
    }
}

}  // namespace

std::string to_string(Command c) {
    switch (c) {
        case Command::Steady: return "steady";
        case Command::Simulate: return "simulate";
        case Command::Gap: return "gap";
        case Command::Quadform: return "quadform";
        case Command::Selfcheck: return "selfcheck";
    }
    return "?";
}

std::string to_string(InitialCondition c) {
    switch (c) {
        case InitialCondition::Steady: return "steady";
        case InitialCondition::PerturbedSteady: return "perturbed_steady";
        case InitialCondition::Exponential: return "exponential";
        case InitialCondition::CustomCsv: return "custom_csv";
    }
    return "?";
}

std::string to_string(Equation e) { return e == Equation::Selfsim ? "selfsim" : "frag"; }

void validate(const RunConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) fail("gamma must be positive");
    if (c.n < kMinGridNodes) fail("n must be at least " + std::to_string(kMinGridNodes));
    if (c.x_max && (!(*c.x_max > 0.0) || !std::isfinite(*c.x_max))) fail("x_max must be positive");
    if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) fail("t_end must be nonnegative");
    if (c.dt && !(*c.dt > 0.0)) fail("dt must be positive");
    if (!(std::abs(c.perturbation_amplitude) <= 1.0)) fail("perturbation amplitude must lie in [-1, 1]");
    if (!(c.output_interval >= 0.0)) fail("output interval must be nonnegative");
    if (c.count == 0) fail("count must be positive");
}

void apply_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "command") c.command = parse_command(json_string(v, key));
        else if (key == "gamma") c.gamma = json_number<double>(v, key);
        else if (key == "n") c.n = json_number<std::size_t>(v, key);
        else if (key == "x_max") c.x_max = v.is_null() ? std::nullopt : std::optional(json_number<double>(v, key));
        else if (key == "t_end") c.t_end = json_number<double>(v, key);
        else if (key == "dt") c.dt = v.is_string() ? parse_dt(v.get<std::string>()) : std::optional(json_number<double>(v, key));
        else if (key == "scheme") c.scheme = parse_scheme(json_string(v, key));
        else if (key == "initial") c.initial = parse_initial(json_string(v, key));
        else if (key == "perturbation_amplitude") c.perturbation_amplitude = json_number<double>(v, key);
        else if (key == "initial_csv") c.initial_csv = json_string(v, key);
        else if (key == "equation") c.equation = parse_equation(json_string(v, key));
        else if (key == "count") c.count = json_number<std::size_t>(v, key);
        else if (key == "seed") c.seed = json_number<std::uint64_t>(v, key);
        else if (key == "output_interval") c.output_interval = json_number<double>(v, key);
        else if (key == "out") c.output_path = json_string(v, key);
        else if (key == "only") {
            c.only.clear();
            if (v.is_string()) {
                c.only = split_ids(v.get<std::string>());
            } else if (v.is_array()) {
                for (const auto& id : v) c.only.push_back(json_string(id, key));
            } else {
                throw Error(ErrorKind::InvalidArgument, "config key 'only' must be a string or a list");
            }
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
        }
    }
}

StateVector initial_state(const RunConfig& cfg, const FragmentationModel& model, const Grid& grid) {
    switch (cfg.initial) {
        case InitialCondition::Steady: return steady_state(model, grid);
        case InitialCondition::PerturbedSteady:
            return perturbed_steady(grid, steady_state(model, grid), cfg.perturbation_amplitude);
        case InitialCondition::Exponential:
            return sample(grid, [](double x) { return std::exp(-x); });
        case InitialCondition::CustomCsv: return read_custom_csv(cfg.initial_csv, grid);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown initial condition");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fragmentation equation solver and spectral-gap lab", "fraglab"};
    std::string command, config_path, scheme, initial, equation, dt, only;
    double gamma = 0, x_max = 0, t_end = 0, amplitude = 0, interval = 0;
    std::size_t n = 0, count = 0;
    std::uint64_t seed = 0;
    std::string out_path, initial_csv;

    app.add_option("command", command, "steady | simulate | gap | quadform | selfcheck")->required();
    auto* o_config = app.add_option("--config", config_path, "JSON config; flags override its keys");
    auto* o_gamma = app.add_option("--gamma", gamma, "Rate exponent (default 2)");
    auto* o_n = app.add_option("--n", n, "Grid nodes (default 1001)");
    auto* o_xmax = app.add_option("--x-max", x_max, "Domain truncation (default 36^(1/gamma))");
    auto* o_tend = app.add_option("--t-end", t_end, "Final time (default 3)");
    auto* o_dt = app.add_option("--dt", dt, "Time step or 'auto'");
    auto* o_scheme = app.add_option("--scheme", scheme, "rk4 | exp_diag_split");
    auto* o_initial = app.add_option("--initial", initial,
                                     "steady | perturbed_steady | exponential | custom_csv");
    auto* o_amp = app.add_option("--perturbation-amplitude", amplitude, "Amplitude a of G(1 + a cos 2x) (default 0.5)");
    auto* o_csv = app.add_option("--initial-csv", initial_csv, "File for custom_csv: x,value rows or one value per node");
    auto* o_eq = app.add_option("--equation", equation, "selfsim | frag (simulate only)");
    auto* o_interval = app.add_option("--output-interval", interval, "Time between CSV rows (default 0.05)");
    auto* o_count = app.add_option("--count", count, "Test functions for quadform (default 100)");
    auto* o_seed = app.add_option("--seed", seed, "Seed for random test functions (default 1)");
    auto* o_only = app.add_option("--only", only, "Comma-separated selfcheck ids, e.g. A7,I5");
    auto* o_out = app.add_option("--out", out_path, "Output file (default standard output)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInvalidConfig;
    }

    RunConfig cfg;
    try {
        if (o_config->count()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open config '" + config_path + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::InvalidArgument, std::string("malformed config: ") + e.what());
            }
            apply_json(cfg, j);
        }
        cfg.command = parse_command(command);
        if (o_gamma->count()) cfg.gamma = gamma;
        if (o_n->count()) cfg.n = n;
        if (o_xmax->count()) cfg.x_max = x_max;
        if (o_tend->count()) cfg.t_end = t_end;
        if (o_dt->count()) cfg.dt = parse_dt(dt);
        if (o_scheme->count()) cfg.scheme = parse_scheme(scheme);
        if (o_initial->count()) cfg.initial = parse_initial(initial);
        if (o_amp->count()) cfg.perturbation_amplitude = amplitude;
        if (o_csv->count()) cfg.initial_csv = initial_csv;
        if (o_eq->count()) cfg.equation = parse_equation(equation);
        if (o_interval->count()) cfg.output_interval = interval;
        if (o_count->count()) cfg.count = count;
        if (o_seed->count()) cfg.seed = seed;
        if (o_only->count()) cfg.only = split_ids(only);
        if (o_out->count()) cfg.output_path = out_path;
        validate(cfg);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInvalidConfig;
    }

    try {
        if (cfg.output_path.empty()) return dispatch(cfg, out);
        // Render fully before touching the file so a failed run leaves no partial output.
        std::ostringstream buffer;
        const int code = dispatch(cfg, buffer);
        std::ofstream file(cfg.output_path);
        if (!file) throw Error(ErrorKind::InvalidArgument, "cannot write '" + cfg.output_path + "'");
        file << buffer.str();
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::bad_alloc&) {
        err << "error: out of memory (grid too large for dense operators?)\n";
        return kExitNumerical;
    }
}

}  // namespace fraglab
