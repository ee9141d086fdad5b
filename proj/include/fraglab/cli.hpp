#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraglab/coefficients.hpp"
#include "fraglab/grid.hpp"
#include "fraglab/simulate.hpp"

namespace fraglab {

enum class Command { Steady, Simulate, Gap, Quadform, Selfcheck };
enum class InitialCondition { Steady, PerturbedSteady, Exponential, CustomCsv };
enum class Equation { Selfsim, Frag };

std::string to_string(Command c);
std::string to_string(InitialCondition c);
std::string to_string(Equation e);

struct RunConfig {
    Command command = Command::Steady;
    double gamma = 2.0;
    std::size_t n = 1001;
    std::optional<double> x_max;  // empty: default_x_max(gamma)
    double t_end = 3.0;
    std::optional<double> dt;     // empty: automatic
    Scheme scheme = Scheme::Rk4;
    InitialCondition initial = InitialCondition::Steady;
    double perturbation_amplitude = 0.5;
    std::string initial_csv;
    Equation equation = Equation::Selfsim;
    std::size_t count = 100;
    std::uint64_t seed = 1;
    double output_interval = 0.05;
    std::string output_path;      // empty: standard output
    std::vector<std::string> only;  // selfcheck ids

    double resolved_x_max() const { return x_max.value_or(default_x_max(gamma)); }
};

// Throws InvalidArgument when a field is out of range.
void validate(const RunConfig& config);

/// Applies the keys of a JSON object (flag names with '_' instead of '-') on top of config.
void apply_json(RunConfig& config, const nlohmann::json& j);

/**
 * Initial datum for simulate:
 *   steady            G
 *   perturbed_steady  G (1 + a cos 2x), rescaled to unit mass, |a| <= 1
 *   exponential       e^(-x)
 *   custom_csv        "x,value" rows (or one value per node), interpolated onto the grid
 */
StateVector initial_state(const RunConfig& config, const FragmentationModel& model, const Grid& grid);

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitSelfcheckFailed = 4;

/// Entry point of the command-line driver; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fraglab
