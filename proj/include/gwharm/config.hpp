#pragma once

#include "gwharm/laws.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gwharm {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { BetaDensity, Sweep, RecursiveLengths, McVerify, KernelTest, ReproduceFigures };

const char* to_string(Command c);

struct RunConfig {
    Command command = Command::KernelTest;
    std::optional<std::string> offspring;
    std::optional<std::string> mark;
    std::optional<double> lambda;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    int points = 50;
    double step = 1.0 / 20000.0;
    int iters = 100;
    std::size_t pool = 1'000'000;
    int gens = 100;
    int depth = 60;
    int horizon = 30;
    int window = -1;
    std::size_t trees = 10'000;
    std::uint64_t steps = 10'000;
    std::size_t walks = 1'000;
    std::size_t stat_trees = 0;
    int stat_depth = 16;
    std::size_t samples = 10'000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned workers = 1;
    std::string out;
    std::string out_dir = ".";
    std::string ecdf_out;

    /// Effective value of every key, for output metadata.
    std::map<std::string, std::string> resolved;
};

/// Keys accepted in config files and as --flags.
const std::vector<std::string>& config_keys();

/// key = value lines; '#' starts a comment. Unknown keys and malformed lines
/// throw ParseError naming the line.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Parses "gwharm <command> [--key value ...] [--config file]". Flags override
/// file values. Returns nullopt after printing help.
std::optional<RunConfig> parse_config(int argc, const char* const* argv, std::ostream& help_out);

/// Builds and validates a config from resolved key/value pairs.
RunConfig build_config(Command command, const std::map<std::string, std::string>& values);

/// "1:0.5,2:0.5", "{1:1/3, 2:1/3, 3:1/3}" or "lin(alpha=1.5[, eps=1e-8])".
OffspringLaw parse_offspring(const std::string& spec);

/// "inverse_uniform", "point_mass(2)", "pareto_tail(a=1.5, C=1)", "empirical(path)".
MarkLaw parse_mark(const std::string& spec);

/// Shortest round-trip-safe text: 17 significant digits.
std::string format_double(double x);

struct CsvTable {
    /// Written as leading "# key=value" lines.
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& os, const CsvTable& table);
/// Writes to path, or to stdout when path is empty or "-". Throws IoError.
void write_csv(const std::string& path, const CsvTable& table);

/// Metadata lines describing a run: command, resolved config, seed, workers, version.
std::vector<std::pair<std::string, std::string>> run_metadata(const RunConfig& cfg);

} // namespace gwharm
